use crate::chem::{canonical_smiles, Bond, BondOrder, MoleculeGraph};

use super::{AnalysisError, Result};

/// A molecular framework: ring systems plus the linkers connecting them.
#[derive(Clone, Debug)]
pub struct Scaffold {
    pub graph: MoleculeGraph,
    pub smiles: String,
}

/// Bemis–Murcko framework extraction: iteratively delete non-ring atoms of
/// degree one until fixpoint. A degree-one atom double-bonded to a ring atom
/// (an exocyclic carbonyl and friends) is retained.
pub fn extract_scaffold(mol: &MoleculeGraph) -> Result<Scaffold> {
    if !mol.atoms().iter().any(|a| a.ring_member) {
        return Err(AnalysisError::AcyclicMolecule);
    }
    let mut current = mol.clone();
    loop {
        let victim = (0..current.atom_count()).find(|&i| {
            if current.atoms()[i].ring_member || current.degree(i) != 1 {
                return false;
            }
            let &(nbr, bi) = &current.neighbors(i)[0];
            let keep = current.bonds()[bi].order == BondOrder::Double
                && current.atoms()[nbr].ring_member;
            !keep
        });
        let Some(victim) = victim else { break };
        current = remove_atom(&current, victim);
    }
    let smiles = canonical_smiles(&current)
        .map_err(|e| AnalysisError::InvalidScaffold(e.to_string()))?;
    Ok(Scaffold {
        graph: current,
        smiles,
    })
}

fn remove_atom(mol: &MoleculeGraph, victim: usize) -> MoleculeGraph {
    let mut atoms = Vec::with_capacity(mol.atom_count() - 1);
    let mut remap = vec![usize::MAX; mol.atom_count()];
    for (i, atom) in mol.atoms().iter().enumerate() {
        if i != victim {
            remap[i] = atoms.len();
            atoms.push(atom.clone());
        }
    }
    let bonds: Vec<Bond> = mol
        .bonds()
        .iter()
        .filter(|b| b.a != victim && b.b != victim)
        .map(|b| Bond {
            a: remap[b.a],
            b: remap[b.b],
            order: b.order,
        })
        .collect();
    MoleculeGraph::assemble(atoms, bonds, String::new())
        .expect("removing a degree-1 atom keeps the graph well-formed")
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    use super::*;

    fn scaffold_of(s: &str) -> String {
        extract_scaffold(&parse_smiles(s).unwrap()).unwrap().smiles
    }

    #[test]
    fn toluene_reduces_to_benzene() {
        assert_eq!(scaffold_of("Cc1ccccc1"), scaffold_of("c1ccccc1"));
    }

    #[test]
    fn benzene_is_a_fixpoint() {
        let benzene = parse_smiles("c1ccccc1").unwrap();
        let first = extract_scaffold(&benzene).unwrap();
        let second = extract_scaffold(&first.graph).unwrap();
        assert_eq!(first.smiles, second.smiles);
        assert_eq!(first.graph.atom_count(), 6);
    }

    #[test]
    fn acyclic_molecules_have_no_scaffold() {
        assert!(matches!(
            extract_scaffold(&parse_smiles("CCCC").unwrap()),
            Err(AnalysisError::AcyclicMolecule)
        ));
    }

    #[test]
    fn linkers_between_rings_are_kept() {
        // two phenyls joined by an ethylene linker
        let scaffold = scaffold_of("Cc1ccc(CCc2ccccc2)cc1");
        let graph = extract_scaffold(&parse_smiles("c1ccc(CCc2ccccc2)cc1").unwrap()).unwrap();
        assert_eq!(scaffold, graph.smiles);
        assert_eq!(graph.graph.atom_count(), 14);
    }

    #[test]
    fn exocyclic_carbonyl_is_retained() {
        // cyclohexanone keeps its =O, loses nothing else
        let s = scaffold_of("O=C1CCCCC1");
        let mol = extract_scaffold(&parse_smiles("O=C1CCCCC1").unwrap()).unwrap();
        assert_eq!(mol.graph.atom_count(), 7);
        // an sp3 alcohol on the same ring is removed
        let t = scaffold_of("OC1CCCCC1");
        let mol2 = extract_scaffold(&parse_smiles("OC1CCCCC1").unwrap()).unwrap();
        assert_eq!(mol2.graph.atom_count(), 6);
        assert_ne!(s, t);
    }

    #[test]
    fn extraction_is_idempotent() {
        for s in ["CC(=O)Nc1ccc(O)cc1", "Cc1ccc2ncsc2c1", "CCN1CCN(C)CC1"] {
            let once = extract_scaffold(&parse_smiles(s).unwrap()).unwrap();
            let twice = extract_scaffold(&once.graph).unwrap();
            assert_eq!(once.smiles, twice.smiles, "scaffold of {s} not idempotent");
        }
    }
}
