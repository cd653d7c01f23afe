use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::chem::MoleculeGraph;

use super::{descriptor, plogp, AnalysisError, DescriptorId, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatEntry {
    pub mean: f64,
    pub std: f64,
    pub count: usize,
}

/// Per-descriptor mean and population standard deviation over a corpus.
/// Entries with non-positive deviation are rejected at construction.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusStats {
    entries: BTreeMap<DescriptorId, StatEntry>,
}

impl CorpusStats {
    pub fn new(entries: BTreeMap<DescriptorId, StatEntry>) -> Result<Self> {
        for (id, entry) in &entries {
            if !(entry.std > 0.0) {
                return Err(AnalysisError::DegenerateStats(format!(
                    "{id} has deviation {}",
                    entry.std
                )));
            }
        }
        Ok(Self { entries })
    }

    /// Compute statistics for the requested descriptors over a corpus.
    /// `PLogP`, when requested, is derived after its three components.
    pub fn from_molecules(mols: &[MoleculeGraph], ids: &[DescriptorId]) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut wants_plogp = false;
        let mut basic: Vec<DescriptorId> = Vec::new();
        for &id in ids {
            if id == DescriptorId::PLogP {
                wants_plogp = true;
                for component in [
                    DescriptorId::CrippenLogP,
                    DescriptorId::SasProxy,
                    DescriptorId::CyclePenalty,
                ] {
                    if !basic.contains(&component) {
                        basic.push(component);
                    }
                }
            } else if !basic.contains(&id) {
                basic.push(id);
            }
        }
        for id in basic {
            let values: Vec<f64> = mols
                .iter()
                .map(|m| descriptor(m, id))
                .collect::<Result<_>>()?;
            entries.insert(id, summarize(id, &values)?);
        }
        let mut stats = Self::new(entries)?;
        if wants_plogp {
            let values: Vec<f64> = mols
                .iter()
                .map(|m| plogp(m, &stats))
                .collect::<Result<_>>()?;
            stats
                .entries
                .insert(DescriptorId::PLogP, summarize(DescriptorId::PLogP, &values)?);
        }
        Ok(stats)
    }

    pub fn entry(&self, id: DescriptorId) -> Option<&StatEntry> {
        self.entries.get(&id)
    }

    pub fn entries(&self) -> impl Iterator<Item = (&DescriptorId, &StatEntry)> {
        self.entries.iter()
    }

    /// Structured text form: one `descriptor mean std count` line each.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# corpus-stats v1\n# descriptor mean std count\n");
        for (id, e) in &self.entries {
            out.push_str(&format!("{id} {} {} {}\n", e.mean, e.std, e.count));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(AnalysisError::DegenerateStats(format!(
                    "malformed stats line: {line}"
                )));
            }
            let id: DescriptorId = fields[0].parse()?;
            let parse_f = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| AnalysisError::DegenerateStats(format!("bad number {s}")))
            };
            entries.insert(
                id,
                StatEntry {
                    mean: parse_f(fields[1])?,
                    std: parse_f(fields[2])?,
                    count: fields[3].parse().map_err(|_| {
                        AnalysisError::DegenerateStats(format!("bad count {}", fields[3]))
                    })?,
                },
            );
        }
        Self::new(entries)
    }
}

fn summarize(id: DescriptorId, values: &[f64]) -> Result<StatEntry> {
    if values.is_empty() {
        return Err(AnalysisError::DegenerateStats(format!(
            "{id} has no observations"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    if !(std > 0.0) {
        return Err(AnalysisError::DegenerateStats(format!(
            "{id} is constant over the corpus (mean {mean})"
        )));
    }
    Ok(StatEntry {
        mean,
        std,
        count: values.len(),
    })
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    use super::*;

    fn mols(smiles: &[&str]) -> Vec<MoleculeGraph> {
        smiles.iter().map(|s| parse_smiles(s).unwrap()).collect()
    }

    #[test]
    fn degenerate_deviation_is_rejected() {
        let corpus = mols(&["CCO", "CCO"]);
        assert!(matches!(
            CorpusStats::from_molecules(&corpus, &[DescriptorId::Hbd]),
            Err(AnalysisError::DegenerateStats(_))
        ));
    }

    #[test]
    fn text_roundtrip() {
        let corpus = mols(&["CCO", "CCCCCC", "c1ccccc1O", "C1CCCCCCC1", "c1ccc2ccccc2c1"]);
        let stats =
            CorpusStats::from_molecules(&corpus, &DescriptorId::ALL).unwrap();
        let text = stats.to_text();
        let reloaded = CorpusStats::from_text(&text).unwrap();
        assert_eq!(stats, reloaded);
    }

    #[test]
    fn plogp_matches_hand_arithmetic_on_three_molecule_corpus() {
        let corpus = mols(&["CCCCCC", "CCO", "C1CCCCCCC1"]);
        let stats = CorpusStats::from_molecules(
            &corpus,
            &[
                DescriptorId::CrippenLogP,
                DescriptorId::SasProxy,
                DescriptorId::CyclePenalty,
            ],
        )
        .unwrap();
        // independent recomputation of the composite for each molecule
        for mol in &corpus {
            let mut expected = 0.0;
            for id in [
                DescriptorId::CrippenLogP,
                DescriptorId::SasProxy,
                DescriptorId::CyclePenalty,
            ] {
                let values: Vec<f64> = corpus
                    .iter()
                    .map(|m| descriptor(m, id).unwrap())
                    .collect();
                let mean = values.iter().sum::<f64>() / 3.0;
                let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / 3.0;
                expected += (descriptor(mol, id).unwrap() - mean) / var.sqrt();
            }
            let got = plogp(mol, &stats).unwrap();
            assert!((got - expected).abs() < 1e-9, "got {got}, want {expected}");
        }
    }

    #[test]
    fn plogp_is_zero_at_corpus_mean_and_linear_in_logp() {
        let corpus = mols(&["CCCCCC", "CCO", "C1CCCCCCC1", "c1ccc2ccccc2c1"]);
        let stats = CorpusStats::from_molecules(
            &corpus,
            &[
                DescriptorId::CrippenLogP,
                DescriptorId::SasProxy,
                DescriptorId::CyclePenalty,
            ],
        )
        .unwrap();
        let logp = stats.entry(DescriptorId::CrippenLogP).unwrap();
        let sas = stats.entry(DescriptorId::SasProxy).unwrap();
        let cycle = stats.entry(DescriptorId::CyclePenalty).unwrap();
        // a synthetic molecule sitting exactly at the corpus mean
        let z = |v: f64, e: &StatEntry| (v - e.mean) / e.std;
        let at_mean = z(logp.mean, logp) + z(sas.mean, sas) + z(cycle.mean, cycle);
        assert_eq!(at_mean, 0.0);
        // +1 sigma on the lipophilicity component moves the composite by +1
        let shifted = z(logp.mean + logp.std, logp) + z(sas.mean, sas) + z(cycle.mean, cycle);
        assert!((shifted - 1.0).abs() < 1e-12);
    }
}
