use crate::chem::MoleculeGraph;

use super::Scaffold;

/// True iff an injective mapping of scaffold atoms into `mol` exists that
/// preserves element, aromaticity, and bond order (aromatic bonds match
/// aromatic bonds only). Extra bonds in `mol` between mapped atoms are
/// allowed, matching substructure-search semantics.
pub fn has_substructure(mol: &MoleculeGraph, scaffold: &Scaffold) -> bool {
    monomorphism_exists(&scaffold.graph, mol, false)
}

/// Exact graph isomorphism used by round-trip checks: equal atom and bond
/// counts plus a monomorphism that additionally matches formal charge and
/// total hydrogen count.
pub fn is_isomorphic(a: &MoleculeGraph, b: &MoleculeGraph) -> bool {
    a.atom_count() == b.atom_count()
        && a.bonds().len() == b.bonds().len()
        && monomorphism_exists(a, b, true)
}

fn atoms_compatible(
    query: &MoleculeGraph,
    qi: usize,
    target: &MoleculeGraph,
    ti: usize,
    exact: bool,
) -> bool {
    let qa = &query.atoms()[qi];
    let ta = &target.atoms()[ti];
    if qa.element != ta.element || qa.aromatic != ta.aromatic {
        return false;
    }
    if exact
        && (qa.formal_charge != ta.formal_charge
            || query.hydrogen_count(qi) != target.hydrogen_count(ti))
    {
        return false;
    }
    true
}

/// VF2-style search: query atoms are visited in a connectivity-first order,
/// and each extension is checked against all bonds into already-mapped
/// atoms. Degree pruning keeps the candidate lists short.
fn monomorphism_exists(query: &MoleculeGraph, target: &MoleculeGraph, exact: bool) -> bool {
    let qn = query.atom_count();
    if qn == 0 || qn > target.atom_count() {
        return false;
    }
    // BFS order over the query so each new atom (after the first) is
    // adjacent to a mapped one.
    let mut order = Vec::with_capacity(qn);
    let mut seen = vec![false; qn];
    let mut queue = std::collections::VecDeque::new();
    for start in 0..qn {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            order.push(u);
            for &(v, _) in query.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
    }

    let mut mapping = vec![usize::MAX; qn];
    let mut used = vec![false; target.atom_count()];
    extend(query, target, &order, 0, &mut mapping, &mut used, exact)
}

fn extend(
    query: &MoleculeGraph,
    target: &MoleculeGraph,
    order: &[usize],
    depth: usize,
    mapping: &mut Vec<usize>,
    used: &mut Vec<bool>,
    exact: bool,
) -> bool {
    if depth == order.len() {
        return true;
    }
    let q = order[depth];
    'candidates: for t in 0..target.atom_count() {
        if used[t]
            || !atoms_compatible(query, q, target, t, exact)
            || target.degree(t) < query.degree(q)
        {
            continue;
        }
        for &(qn, qbi) in query.neighbors(q) {
            let mapped = mapping[qn];
            if mapped == usize::MAX {
                continue;
            }
            match target.bond_between(t, mapped) {
                Some(tb) if tb.order == query.bonds()[qbi].order => {}
                _ => continue 'candidates,
            }
        }
        mapping[q] = t;
        used[t] = true;
        if extend(query, target, order, depth + 1, mapping, used, exact) {
            return true;
        }
        mapping[q] = usize::MAX;
        used[t] = false;
    }
    false
}

#[cfg(test)]
mod tests {
    use crate::analysis::extract_scaffold;
    use crate::chem::parse_smiles;

    use super::*;

    fn scaffold(s: &str) -> Scaffold {
        extract_scaffold(&parse_smiles(s).unwrap()).unwrap()
    }

    #[test]
    fn benzene_in_toluene() {
        let toluene = parse_smiles("Cc1ccccc1").unwrap();
        assert!(has_substructure(&toluene, &scaffold("c1ccccc1")));
    }

    #[test]
    fn pyridine_not_in_benzene() {
        let benzene = parse_smiles("c1ccccc1").unwrap();
        assert!(!has_substructure(&benzene, &scaffold("c1ccncc1")));
    }

    #[test]
    fn benzothiazole_in_acylated_aminobenzothiazole() {
        let mol = parse_smiles("CCCC(=O)Nc1nc2ccccc2s1").unwrap();
        assert!(has_substructure(&mol, &scaffold("c1ccc2ncsc2c1")));
    }

    #[test]
    fn aromatic_does_not_match_saturated() {
        let cyclohexane = parse_smiles("C1CCCCC1").unwrap();
        assert!(!has_substructure(&cyclohexane, &scaffold("c1ccccc1")));
    }

    #[test]
    fn every_ringed_molecule_contains_its_own_scaffold() {
        for s in [
            "Cc1ccccc1",
            "CC(=O)Nc1ccc(O)cc1",
            "CCN1CCN(C)CC1",
            "Clc1ccc2ncsc2c1",
        ] {
            let mol = parse_smiles(s).unwrap();
            let sc = extract_scaffold(&mol).unwrap();
            assert!(has_substructure(&mol, &sc), "{s} lacks its own scaffold");
        }
    }

    #[test]
    fn isomorphism_requires_equal_sizes() {
        let a = parse_smiles("CCO").unwrap();
        let b = parse_smiles("CCCO").unwrap();
        assert!(!is_isomorphic(&a, &b));
        let c = parse_smiles("OCC").unwrap();
        assert!(is_isomorphic(&a, &c));
    }

    #[test]
    fn isomorphism_sees_hydrogen_differences() {
        let pyrrole_like = parse_smiles("c1cc[nH]c1").unwrap();
        let same = parse_smiles("c1cc[nH]c1").unwrap();
        assert!(is_isomorphic(&pyrrole_like, &same));
    }
}
