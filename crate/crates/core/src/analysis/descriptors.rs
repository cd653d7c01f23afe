use std::collections::HashMap;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::chem::{sssr, BondOrder, Element, MoleculeGraph};

use super::{AnalysisError, CorpusStats, Result};

/// Registered molecular descriptors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum DescriptorId {
    Hba,
    Hbd,
    CrippenLogP,
    CyclePenalty,
    MolWeight,
    SasProxy,
    PLogP,
}

impl DescriptorId {
    pub const ALL: [DescriptorId; 7] = [
        DescriptorId::Hba,
        DescriptorId::Hbd,
        DescriptorId::CrippenLogP,
        DescriptorId::CyclePenalty,
        DescriptorId::MolWeight,
        DescriptorId::SasProxy,
        DescriptorId::PLogP,
    ];

    /// Descriptors computable from the graph alone.
    pub const BASIC: [DescriptorId; 6] = [
        DescriptorId::Hba,
        DescriptorId::Hbd,
        DescriptorId::CrippenLogP,
        DescriptorId::CyclePenalty,
        DescriptorId::MolWeight,
        DescriptorId::SasProxy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            DescriptorId::Hba => "HBA",
            DescriptorId::Hbd => "HBD",
            DescriptorId::CrippenLogP => "CrippenLogP",
            DescriptorId::CyclePenalty => "CyclePenalty",
            DescriptorId::MolWeight => "MolWeight",
            DescriptorId::SasProxy => "SasProxy",
            DescriptorId::PLogP => "PLogP",
        }
    }
}

impl std::fmt::Display for DescriptorId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for DescriptorId {
    type Err = AnalysisError;

    fn from_str(s: &str) -> Result<Self> {
        DescriptorId::ALL
            .into_iter()
            .find(|d| d.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| AnalysisError::UnknownDescriptor(s.to_string()))
    }
}

/// Evaluate a graph-only descriptor. `PLogP` needs corpus statistics; use
/// [`descriptor_with_stats`] or [`plogp`] for it.
pub fn descriptor(mol: &MoleculeGraph, id: DescriptorId) -> Result<f64> {
    match id {
        DescriptorId::Hba => Ok(hba(mol) as f64),
        DescriptorId::Hbd => Ok(hbd(mol) as f64),
        DescriptorId::CrippenLogP => Ok(crippen_logp(mol)),
        DescriptorId::CyclePenalty => Ok(cycle_penalty(mol)),
        DescriptorId::MolWeight => Ok(mol_weight(mol)),
        DescriptorId::SasProxy => Ok(sas_proxy(mol)),
        DescriptorId::PLogP => Err(AnalysisError::NeedsStats("PLogP")),
    }
}

pub fn descriptor_with_stats(
    mol: &MoleculeGraph,
    id: DescriptorId,
    stats: &CorpusStats,
) -> Result<f64> {
    match id {
        DescriptorId::PLogP => plogp(mol, stats),
        other => descriptor(mol, other),
    }
}

/// Hydrogen-bond donors: N or O atoms bearing at least one hydrogen.
fn hbd(mol: &MoleculeGraph) -> usize {
    (0..mol.atom_count())
        .filter(|&i| {
            matches!(mol.atoms()[i].element, Element::N | Element::O)
                && mol.hydrogen_count(i) >= 1
        })
        .count()
}

/// Hydrogen-bond acceptors: all N and O except amide nitrogens (single bond
/// to a carbon that is double-bonded to oxygen) and aromatic N with an
/// explicit hydrogen (pyrrole-type).
fn hba(mol: &MoleculeGraph) -> usize {
    (0..mol.atom_count())
        .filter(|&i| {
            let atom = &mol.atoms()[i];
            match atom.element {
                Element::O => true,
                Element::N => {
                    if atom.aromatic && mol.hydrogen_count(i) >= 1 {
                        return false;
                    }
                    !is_amide_nitrogen(mol, i)
                }
                _ => false,
            }
        })
        .count()
}

fn is_amide_nitrogen(mol: &MoleculeGraph, n: usize) -> bool {
    mol.neighbors(n).iter().any(|&(c, bi)| {
        mol.bonds()[bi].order == BondOrder::Single
            && mol.atoms()[c].element == Element::C
            && mol.neighbors(c).iter().any(|&(o, obi)| {
                mol.atoms()[o].element == Element::O
                    && mol.bonds()[obi].order == BondOrder::Double
            })
    })
}

/// Size of the largest smallest-ring beyond six atoms.
fn cycle_penalty(mol: &MoleculeGraph) -> f64 {
    let largest = sssr(mol).iter().map(Vec::len).max().unwrap_or(0);
    (largest as f64 - 6.0).max(0.0)
}

/// Sum in value order so the result does not depend on atom numbering.
fn ordered_sum(mut terms: Vec<f64>) -> f64 {
    terms.sort_by(f64::total_cmp);
    terms.iter().sum()
}

fn mol_weight(mol: &MoleculeGraph) -> f64 {
    ordered_sum(
        (0..mol.atom_count())
            .map(|i| {
                mol.atoms()[i].element.mass() + mol.hydrogen_count(i) as f64 * Element::H.mass()
            })
            .collect(),
    )
}

/// Synthetic-accessibility surrogate: grows with large rings, heavy-atom
/// count, and ring fusion. Direction: minimize.
fn sas_proxy(mol: &MoleculeGraph) -> f64 {
    let rings = sssr(mol);
    let mut fused_pairs = 0usize;
    for i in 0..rings.len() {
        let set: std::collections::HashSet<usize> = rings[i].iter().copied().collect();
        for ring in rings.iter().skip(i + 1) {
            if ring.iter().filter(|a| set.contains(a)).count() >= 2 {
                fused_pairs += 1;
            }
        }
    }
    0.5 * cycle_penalty(mol) + 0.1 * mol.heavy_atom_count() as f64 + fused_pairs as f64
}

/// Composite of z-scored lipophilicity, synthetic-accessibility surrogate,
/// and cycle penalty, each normalized by corpus mean and deviation.
pub fn plogp(mol: &MoleculeGraph, stats: &CorpusStats) -> Result<f64> {
    let mut total = 0.0;
    for id in [
        DescriptorId::CrippenLogP,
        DescriptorId::SasProxy,
        DescriptorId::CyclePenalty,
    ] {
        let entry = stats.entry(id).ok_or_else(|| {
            AnalysisError::DegenerateStats(format!("missing statistics for {id}"))
        })?;
        if entry.std <= 0.0 {
            return Err(AnalysisError::DegenerateStats(format!(
                "zero deviation for {id}"
            )));
        }
        total += (descriptor(mol, id)? - entry.mean) / entry.std;
    }
    Ok(total)
}

// ---- contribution table ---------------------------------------------------

const CRIPPEN_TABLE: &str = include_str!("../../data/crippen_v1.txt");

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct TypeKey {
    element: Element,
    aromatic: Option<bool>,
    het_neighbor: Option<bool>,
    unsaturated: Option<bool>,
}

struct ContributionTable {
    rows: HashMap<TypeKey, f64>,
    hydrogen: f64,
}

fn table() -> &'static ContributionTable {
    static TABLE: OnceLock<ContributionTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(CRIPPEN_TABLE).expect("bundled table is well-formed"))
}

fn parse_table(text: &str) -> Option<ContributionTable> {
    let mut rows = HashMap::new();
    let mut hydrogen = 0.0;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let element = Element::from_symbol(fields.next()?)?;
        let aromatic = tri(fields.next()?, "arom", "alip")?;
        let het = tri(fields.next()?, "het", "pure")?;
        let unsat = tri(fields.next()?, "unsat", "sat")?;
        let value: f64 = fields.next()?.parse().ok()?;
        if element == Element::H {
            hydrogen = value;
        } else {
            rows.insert(
                TypeKey {
                    element,
                    aromatic,
                    het_neighbor: het,
                    unsaturated: unsat,
                },
                value,
            );
        }
    }
    Some(ContributionTable { rows, hydrogen })
}

fn tri(field: &str, yes: &str, no: &str) -> Option<Option<bool>> {
    match field {
        "any" => Some(None),
        f if f == yes => Some(Some(true)),
        f if f == no => Some(Some(false)),
        _ => None,
    }
}

/// Sum of per-atom contributions plus per-hydrogen contributions.
fn crippen_logp(mol: &MoleculeGraph) -> f64 {
    let table = table();
    let mut terms = Vec::with_capacity(mol.atom_count());
    for i in 0..mol.atom_count() {
        let atom = &mol.atoms()[i];
        if atom.element == Element::H {
            terms.push(table.hydrogen);
            continue;
        }
        let aromatic = atom.aromatic;
        let het = mol.neighbors(i).iter().any(|&(nbr, _)| {
            !matches!(mol.atoms()[nbr].element, Element::C | Element::H)
        });
        let unsat = mol.neighbors(i).iter().any(|&(_, bi)| {
            matches!(
                mol.bonds()[bi].order,
                BondOrder::Double | BondOrder::Triple
            )
        });
        // most-specific first, then wildcard fallbacks
        let candidates = [
            TypeKey { element: atom.element, aromatic: Some(aromatic), het_neighbor: Some(het), unsaturated: Some(unsat) },
            TypeKey { element: atom.element, aromatic: Some(aromatic), het_neighbor: Some(het), unsaturated: None },
            TypeKey { element: atom.element, aromatic: Some(aromatic), het_neighbor: None, unsaturated: Some(unsat) },
            TypeKey { element: atom.element, aromatic: Some(aromatic), het_neighbor: None, unsaturated: None },
            TypeKey { element: atom.element, aromatic: None, het_neighbor: None, unsaturated: None },
        ];
        let contribution = candidates
            .iter()
            .find_map(|key| table.rows.get(key))
            .copied()
            .unwrap_or(0.0);
        terms.push(contribution + mol.hydrogen_count(i) as f64 * table.hydrogen);
    }
    ordered_sum(terms)
}

#[cfg(test)]
mod tests {
    use crate::chem::{parse_smiles, randomize_smiles};

    use super::*;

    fn d(s: &str, id: DescriptorId) -> f64 {
        descriptor(&parse_smiles(s).unwrap(), id).unwrap()
    }

    #[test]
    fn ethanol_donor_acceptor_counts() {
        assert_eq!(d("CCO", DescriptorId::Hbd), 1.0);
        assert_eq!(d("CCO", DescriptorId::Hba), 1.0);
    }

    #[test]
    fn amide_nitrogen_is_not_an_acceptor() {
        // acetamide: N excluded, carbonyl O counted
        assert_eq!(d("CC(=O)N", DescriptorId::Hba), 1.0);
        assert_eq!(d("CC(=O)N", DescriptorId::Hbd), 1.0);
    }

    #[test]
    fn pyrrole_nitrogen_is_donor_not_acceptor() {
        assert_eq!(d("c1cc[nH]c1", DescriptorId::Hbd), 1.0);
        assert_eq!(d("c1cc[nH]c1", DescriptorId::Hba), 0.0);
        // pyridine N is the opposite
        assert_eq!(d("c1ccncc1", DescriptorId::Hbd), 0.0);
        assert_eq!(d("c1ccncc1", DescriptorId::Hba), 1.0);
    }

    #[test]
    fn cycle_penalty_only_counts_beyond_six() {
        assert_eq!(d("c1ccccc1", DescriptorId::CyclePenalty), 0.0);
        assert_eq!(d("C1CCCCCCC1", DescriptorId::CyclePenalty), 2.0);
        assert_eq!(d("CCCC", DescriptorId::CyclePenalty), 0.0);
    }

    #[test]
    fn molecular_weight_includes_implicit_hydrogens() {
        let water_free = d("C", DescriptorId::MolWeight);
        assert!((water_free - (12.011 + 4.0 * 1.008)).abs() < 1e-9);
        let ethanol = d("CCO", DescriptorId::MolWeight);
        assert!((ethanol - 46.069).abs() < 0.01, "ethanol weight {ethanol}");
    }

    #[test]
    fn logp_grows_with_carbon_chain() {
        assert!(
            d("CCCCCC", DescriptorId::CrippenLogP) > d("CC", DescriptorId::CrippenLogP)
        );
        // adding a hydroxyl reduces lipophilicity
        assert!(
            d("CCCCCO", DescriptorId::CrippenLogP) < d("CCCCC", DescriptorId::CrippenLogP)
        );
    }

    #[test]
    fn sas_proxy_penalizes_fusion_and_size() {
        assert!(
            d("c1ccc2ccccc2c1", DescriptorId::SasProxy) > d("c1ccccc1", DescriptorId::SasProxy)
        );
    }

    #[test]
    fn descriptors_are_serialization_invariant() {
        let mol = parse_smiles("CC(=O)Nc1ccc(O)cc1").unwrap();
        for id in DescriptorId::BASIC {
            let reference = descriptor(&mol, id).unwrap();
            for seed in 0..8 {
                let variant = parse_smiles(&randomize_smiles(&mol, seed)).unwrap();
                assert_eq!(descriptor(&variant, id).unwrap(), reference, "{id}");
            }
        }
    }

    #[test]
    fn plogp_requires_stats() {
        assert!(matches!(
            descriptor(&parse_smiles("CCO").unwrap(), DescriptorId::PLogP),
            Err(AnalysisError::NeedsStats(_))
        ));
    }
}
