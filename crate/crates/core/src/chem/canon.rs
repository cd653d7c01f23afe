use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::write::write_smiles;
use super::{check_valence, BondOrder, ChemError, MoleculeGraph, Result};

/// Canonical atom ranks by Morgan-style iterative refinement.
///
/// Initial invariants are (element, degree, charge, aromaticity, hydrogen
/// count); refinement folds in sorted neighbor (bond order, rank) multisets
/// until the partition stabilizes. Remaining ties are broken by
/// individualizing the lowest-index atom of the smallest ambiguous class and
/// re-refining, so ranks end up discrete. The hydrogen count is part of the
/// seed invariant because atoms that differ only in attached hydrogens (e.g.
/// the two nitrogens of imidazole) are otherwise inseparable.
pub fn canonical_ranks(mol: &MoleculeGraph) -> Vec<usize> {
    let n = mol.atom_count();
    let initial: Vec<(u8, usize, i8, bool, u8)> = (0..n)
        .map(|i| {
            let a = &mol.atoms()[i];
            (
                element_code(a.element),
                mol.degree(i),
                a.formal_charge,
                a.aromatic,
                mol.hydrogen_count(i),
            )
        })
        .collect();
    let mut ranks = dense_ranks(&initial);
    ranks = refine(mol, ranks);
    loop {
        let Some(chosen) = first_ambiguous(&ranks) else {
            return ranks;
        };
        let keys: Vec<(usize, bool)> = (0..n).map(|i| (ranks[i], i != chosen)).collect();
        ranks = refine(mol, dense_ranks(&keys));
    }
}

fn element_code(e: super::Element) -> u8 {
    use super::Element::*;
    match e {
        B => 0,
        C => 1,
        N => 2,
        O => 3,
        P => 4,
        S => 5,
        F => 6,
        Cl => 7,
        Br => 8,
        I => 9,
        H => 10,
    }
}

fn bond_code(order: BondOrder) -> u8 {
    match order {
        BondOrder::Single => 0,
        BondOrder::Double => 1,
        BondOrder::Triple => 2,
        BondOrder::Aromatic => 3,
    }
}

fn refine(mol: &MoleculeGraph, mut ranks: Vec<usize>) -> Vec<usize> {
    let n = mol.atom_count();
    loop {
        let keys: Vec<(usize, Vec<(u8, usize)>)> = (0..n)
            .map(|i| {
                let mut nbrs: Vec<(u8, usize)> = mol
                    .neighbors(i)
                    .iter()
                    .map(|&(v, bi)| (bond_code(mol.bonds()[bi].order), ranks[v]))
                    .collect();
                nbrs.sort_unstable();
                (ranks[i], nbrs)
            })
            .collect();
        let new = dense_ranks(&keys);
        if new == ranks {
            return ranks;
        }
        ranks = new;
    }
}

/// Lowest-index atom in the smallest-rank class of size > 1, if any.
fn first_ambiguous(ranks: &[usize]) -> Option<usize> {
    let mut counts = vec![0usize; ranks.len()];
    for &r in ranks {
        counts[r] += 1;
    }
    let target = (0..ranks.len()).find(|&r| counts[r] > 1)?;
    ranks.iter().position(|&r| r == target)
}

fn dense_ranks<K: Ord + Clone>(keys: &[K]) -> Vec<usize> {
    let mut sorted: Vec<K> = keys.to_vec();
    sorted.sort();
    sorted.dedup();
    keys.iter()
        .map(|k| sorted.binary_search(k).expect("key present"))
        .collect()
}

/// Deterministic canonical serialization; fails on molecules that do not
/// pass the valence check.
pub fn canonical_smiles(mol: &MoleculeGraph) -> Result<String> {
    let report = check_valence(mol);
    if !report.valid {
        let summary = report
            .failures
            .iter()
            .take(3)
            .map(|f| format!("atom {}: {}", f.atom, f.reason))
            .collect::<Vec<_>>()
            .join("; ");
        return Err(ChemError::InvalidMolecule(summary));
    }
    let ranks = canonical_ranks(mol);
    let root = ranks
        .iter()
        .enumerate()
        .max_by_key(|&(_, r)| r)
        .map(|(i, _)| i)
        .expect("non-empty molecule");
    Ok(write_smiles(mol, root, &ranks))
}

/// Serialize from a seeded random root with a seeded random neighbor order.
/// Equal seeds give equal strings; the parse of the output is isomorphic to
/// the input.
pub fn randomize_smiles(mol: &MoleculeGraph, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = mol.atom_count();
    let mut priority: Vec<usize> = (0..n).collect();
    priority.shuffle(&mut rng);
    let root = rng.gen_range(0..n);
    write_smiles(mol, root, &priority)
}

#[cfg(test)]
mod tests {
    use super::super::parse_smiles;
    use super::*;

    fn canon(s: &str) -> String {
        canonical_smiles(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn traversal_invariant() {
        assert_eq!(canon("OCC"), canon("CCO"));
        assert_eq!(canon("C(C)O"), canon("CCO"));
        assert_eq!(canon("C1CNCCN1"), canon("N1CCNCC1"));
    }

    #[test]
    fn idempotent() {
        for s in ["c1ccccc1", "CC(=O)O", "c1ccc2ncsc2c1", "CC(C)Cc1ccc(C)cc1"] {
            let once = canon(s);
            let twice = canonical_smiles(&parse_smiles(&once).unwrap()).unwrap();
            assert_eq!(once, twice, "canonical form of {s} is not a fixpoint");
        }
    }

    #[test]
    fn randomize_is_deterministic_per_seed() {
        let mol = parse_smiles("CC(C)Cc1ccc(C)cc1").unwrap();
        assert_eq!(randomize_smiles(&mol, 9), randomize_smiles(&mol, 9));
    }

    #[test]
    fn toluene_randomizations_vary() {
        let mol = parse_smiles("Cc1ccccc1").unwrap();
        let mut seen = std::collections::HashSet::new();
        for seed in 0..100 {
            seen.insert(randomize_smiles(&mol, seed));
        }
        assert!(seen.len() >= 2, "only {} distinct strings", seen.len());
    }

    #[test]
    fn randomizations_stay_in_canonical_class() {
        for s in ["CCO", "Cc1ccccc1", "c1ccc2ncsc2c1", "CC(=O)Nc1ccc(O)cc1"] {
            let mol = parse_smiles(s).unwrap();
            let reference = canonical_smiles(&mol).unwrap();
            for seed in 0..50 {
                let variant = randomize_smiles(&mol, seed);
                let reparsed = parse_smiles(&variant)
                    .unwrap_or_else(|e| panic!("randomized {variant} of {s} failed: {e}"));
                assert_eq!(canonical_smiles(&reparsed).unwrap(), reference);
            }
        }
    }

    #[test]
    fn imidazole_nitrogens_separate() {
        // the two ring nitrogens differ only in hydrogen count
        assert_eq!(canon("c1c[nH]cn1"), canon("c1cnc[nH]1"));
    }

    #[test]
    fn invalid_molecule_is_rejected() {
        let mol = parse_smiles("C(C)(C)(C)(C)C").unwrap();
        assert!(matches!(
            canonical_smiles(&mol),
            Err(ChemError::InvalidMolecule(_))
        ));
    }
}
