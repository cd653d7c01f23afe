//! Generation metrics over a sample set and the report in both structured
//! and aligned-text form.

use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::{
    descriptor_with_stats, has_substructure, scaffold_similarity, CorpusStats, DescriptorId,
    Goal, PropertyVector, Scaffold,
};
use crate::chem::{canonical_smiles, check_valence, parse_smiles, MoleculeGraph};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("sample set is empty")]
    EmptySampleSet,
    #[error("improvement is undefined for a zero baseline")]
    ZeroBaseline,
    #[error(transparent)]
    Analysis(#[from] crate::analysis::AnalysisError),
    #[error(transparent)]
    Chem(#[from] crate::chem::ChemError),
}

pub type Result<T> = std::result::Result<T, EvalError>;

/// Direction of a reported improvement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Maximize,
    Minimize,
}

/// Direction-aware relative improvement in percent.
///
/// The raw ratio `(m_a - m_b) / m_b * 100` flips sign for negative
/// baselines, so the magnitude is normalized by `|m_b|` and the sign is set
/// by the optimization direction: positive means the metric moved the
/// desired way.
pub fn improvement(m_a: f64, m_b: f64, direction: Direction) -> Result<f64> {
    if m_b == 0.0 {
        return Err(EvalError::ZeroBaseline);
    }
    let sign = match direction {
        Direction::Maximize => 1.0,
        Direction::Minimize => -1.0,
    };
    Ok(sign * (m_a - m_b) / m_b.abs() * 100.0)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PropertyReport {
    pub descriptor: DescriptorId,
    /// Mean over valid generated molecules.
    pub generated_mean: f64,
    /// Mean over the baseline corpus slice (scaffold-bearing molecules when
    /// a scaffold is given, the whole corpus otherwise).
    pub baseline_mean: f64,
    pub improvement_pct: Option<f64>,
}

/// All §-style metrics over one sample set.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub raw_count: usize,
    /// Samples left after removing duplicate strings.
    pub dedup_count: usize,
    pub validity: f64,
    pub novelty: f64,
    /// Uniqueness among valid molecules (the "diversity" reading used here;
    /// hence the field name).
    pub diversity_unique: f64,
    pub properties: Vec<PropertyReport>,
    pub scaffold_similarity_mean: Option<f64>,
    pub scaffold_existence: Option<f64>,
    /// Notes on reporting conventions, echoed into the text footer.
    pub footnotes: Vec<String>,
}

/// A canonicalized training corpus against which novelty and baselines are
/// computed.
pub struct TrainCorpus {
    pub canonicals: HashSet<String>,
    pub molecules: Vec<MoleculeGraph>,
}

impl TrainCorpus {
    pub fn new(lines: &[String]) -> Result<Self> {
        let mut canonicals = HashSet::new();
        let mut molecules = Vec::new();
        for line in lines {
            let mol = parse_smiles(line)?;
            canonicals.insert(canonical_smiles(&mol)?);
            molecules.push(mol);
        }
        Ok(Self {
            canonicals,
            molecules,
        })
    }
}

/// Compute every metric over a sample list.
///
/// Duplicate strings are removed first; validity is the fraction of the
/// deduplicated set that parses and passes the valence check; novelty is the
/// fraction of valid canonicals absent from the corpus; diversity is the
/// fraction of distinct canonicals among valid samples. Property baselines
/// use the scaffold-bearing corpus slice when a scaffold is given.
pub fn evaluate(
    samples: &[String],
    corpus: &TrainCorpus,
    scaffold: Option<&Scaffold>,
    targets: &PropertyVector,
    stats: &CorpusStats,
) -> Result<EvalReport> {
    if samples.is_empty() {
        return Err(EvalError::EmptySampleSet);
    }
    let raw_count = samples.len();
    let mut seen = HashSet::new();
    let deduped: Vec<&String> = samples.iter().filter(|s| seen.insert(*s)).collect();
    let dedup_count = deduped.len();

    let mut valid_mols: Vec<MoleculeGraph> = Vec::new();
    let mut valid_canonicals: Vec<String> = Vec::new();
    for s in &deduped {
        let Ok(mol) = parse_smiles(s) else { continue };
        if !check_valence(&mol).valid {
            continue;
        }
        let canonical = canonical_smiles(&mol)?;
        valid_mols.push(mol);
        valid_canonicals.push(canonical);
    }
    let validity = valid_mols.len() as f64 / dedup_count as f64;
    let (novelty, diversity_unique) = if valid_mols.is_empty() {
        (0.0, 0.0)
    } else {
        let novel = valid_canonicals
            .iter()
            .filter(|c| !corpus.canonicals.contains(*c))
            .count();
        let distinct: HashSet<&String> = valid_canonicals.iter().collect();
        (
            novel as f64 / valid_mols.len() as f64,
            distinct.len() as f64 / valid_mols.len() as f64,
        )
    };

    // baseline slice: corpus molecules containing the scaffold, else all
    let baseline: Vec<&MoleculeGraph> = match scaffold {
        Some(sc) => corpus
            .molecules
            .iter()
            .filter(|m| has_substructure(m, sc))
            .collect(),
        None => corpus.molecules.iter().collect(),
    };

    let mut footnotes = vec![
        "improvement is direction-aware: sign * (m_a - m_b) / |m_b| * 100, so a \
         negative baseline cannot flip it"
            .to_string(),
        "diversity is uniqueness among valid molecules".to_string(),
        "scaffold similarity is averaged over valid samples only".to_string(),
    ];

    let mut properties = Vec::new();
    for target in targets {
        let id = target.descriptor;
        let mean_over = |mols: &[&MoleculeGraph]| -> Result<Option<f64>> {
            if mols.is_empty() {
                return Ok(None);
            }
            let mut total = 0.0;
            for m in mols {
                total += descriptor_with_stats(m, id, stats)?;
            }
            Ok(Some(total / mols.len() as f64))
        };
        let valid_refs: Vec<&MoleculeGraph> = valid_mols.iter().collect();
        let generated_mean = mean_over(&valid_refs)?.unwrap_or(f64::NAN);
        let baseline_mean = mean_over(&baseline)?.unwrap_or(f64::NAN);
        let improvement_pct = match target.goal {
            Goal::Maximize => {
                improvement(generated_mean, baseline_mean, Direction::Maximize).ok()
            }
            Goal::Minimize => {
                improvement(generated_mean, baseline_mean, Direction::Minimize).ok()
            }
            Goal::Approach(v) => {
                // distance to the set-point, treated as a quantity to shrink
                footnotes.push(format!(
                    "{id}: improvement measured on |mean - {v}| (distance to target)"
                ));
                improvement(
                    (generated_mean - v).abs(),
                    (baseline_mean - v).abs(),
                    Direction::Minimize,
                )
                .ok()
            }
        };
        properties.push(PropertyReport {
            descriptor: id,
            generated_mean,
            baseline_mean,
            improvement_pct,
        });
    }

    let (scaffold_similarity_mean, scaffold_existence) = match scaffold {
        Some(sc) if !valid_mols.is_empty() => {
            let sims: Vec<f64> = valid_mols
                .iter()
                .map(|m| scaffold_similarity(m, sc))
                .collect();
            let mean = sims.iter().sum::<f64>() / sims.len() as f64;
            let existence = valid_mols
                .iter()
                .filter(|m| has_substructure(m, sc))
                .count() as f64
                / valid_mols.len() as f64;
            (Some(mean), Some(existence))
        }
        Some(_) => (Some(0.0), Some(0.0)),
        None => (None, None),
    };

    Ok(EvalReport {
        raw_count,
        dedup_count,
        validity,
        novelty,
        diversity_unique,
        properties,
        scaffold_similarity_mean,
        scaffold_existence,
        footnotes,
    })
}

impl EvalReport {
    /// Aligned-text table grouped as Basic | Property | Structure.
    pub fn to_table(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "samples: {} raw, {} after dedup\n\n",
            self.raw_count, self.dedup_count
        ));
        let mut headers: Vec<String> = vec![
            "Validity".into(),
            "Novelty".into(),
            "Diversity".into(),
        ];
        let mut values: Vec<String> = vec![
            format!("{:.1}%", self.validity * 100.0),
            format!("{:.1}%", self.novelty * 100.0),
            format!("{:.1}%", self.diversity_unique * 100.0),
        ];
        let basic_cols = headers.len();
        for p in &self.properties {
            headers.push(p.descriptor.to_string());
            values.push(format!("{:.3}", p.generated_mean));
            headers.push(format!("{} Impr(%)", p.descriptor));
            values.push(
                p.improvement_pct
                    .map(|v| format!("{v:+.1}"))
                    .unwrap_or_else(|| "n/a".into()),
            );
        }
        let property_cols = headers.len() - basic_cols;
        if let (Some(sim), Some(exist)) = (self.scaffold_similarity_mean, self.scaffold_existence)
        {
            headers.push("Scaffold Similarity (%)".into());
            values.push(format!("{:.1}", sim * 100.0));
            headers.push("Scaffold Existence (%)".into());
            values.push(format!("{:.1}", exist * 100.0));
        }
        let structure_cols = headers.len() - basic_cols - property_cols;

        let widths: Vec<usize> = headers
            .iter()
            .zip(values.iter())
            .map(|(h, v)| h.len().max(v.len()))
            .collect();
        let group_line = |label: &str, cols: usize, offset: usize| -> String {
            if cols == 0 {
                return String::new();
            }
            let width: usize =
                widths[offset..offset + cols].iter().sum::<usize>() + 2 * (cols - 1);
            format!("{label:^width$}")
        };
        let groups = [
            group_line("Basic", basic_cols, 0),
            group_line("Property", property_cols, basic_cols),
            group_line("Structure", structure_cols, basic_cols + property_cols),
        ];
        out.push_str(
            &groups
                .iter()
                .filter(|g| !g.is_empty())
                .cloned()
                .collect::<Vec<_>>()
                .join(" | "),
        );
        out.push('\n');
        let row = |cells: &[String]| -> String {
            cells
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{c:>width$}", width = widths[i]))
                .collect::<Vec<_>>()
                .join("  ")
        };
        out.push_str(&row(&headers));
        out.push('\n');
        out.push_str(&row(&values));
        out.push('\n');
        if !self.footnotes.is_empty() {
            out.push('\n');
            for note in &self.footnotes {
                out.push_str(&format!("note: {note}\n"));
            }
        }
        out
    }
}

/// One-sided Welch test that `sample_a` has a larger mean than `sample_b`;
/// returns the p-value under a normal approximation.
pub fn one_sided_welch_p(sample_a: &[f64], sample_b: &[f64]) -> f64 {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let var = |v: &[f64], m: f64| {
        v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() as f64 - 1.0)
    };
    let (ma, mb) = (mean(sample_a), mean(sample_b));
    let (va, vb) = (var(sample_a, ma), var(sample_b, mb));
    let se = (va / sample_a.len() as f64 + vb / sample_b.len() as f64).sqrt();
    if se == 0.0 {
        return if ma > mb { 0.0 } else { 1.0 };
    }
    let z = (ma - mb) / se;
    1.0 - standard_normal_cdf(z)
}

fn standard_normal_cdf(z: f64) -> f64 {
    0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2))
}

/// Abramowitz–Stegun 7.1.26 rational approximation (|error| < 1.5e-7).
fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.3275911 * x);
    let poly = t
        * (0.254829592
            + t * (-0.284496736 + t * (1.421413741 + t * (-1.453152027 + t * 1.061405429))));
    sign * (1.0 - poly * (-x * x).exp())
}

/// Group the descriptor means of a sample set, used by significance checks.
pub fn descriptor_values(samples: &[String], id: DescriptorId, stats: &CorpusStats) -> Vec<f64> {
    samples
        .iter()
        .filter_map(|s| {
            let mol = parse_smiles(s).ok()?;
            if !check_valence(&mol).valid {
                return None;
            }
            descriptor_with_stats(&mol, id, stats).ok()
        })
        .collect()
}

/// Convenience map of descriptor means over the valid subset of a sample
/// list.
pub fn valid_descriptor_means(
    samples: &[String],
    ids: &[DescriptorId],
    stats: &CorpusStats,
) -> BTreeMap<DescriptorId, f64> {
    ids.iter()
        .filter_map(|&id| {
            let values = descriptor_values(samples, id, stats);
            if values.is_empty() {
                None
            } else {
                Some((id, values.iter().sum::<f64>() / values.len() as f64))
            }
        })
        .collect()
}
