use super::{Bond, MoleculeGraph};

/// Marks each bond that lies on a cycle (i.e. is not a bridge).
///
/// A bond is a ring bond iff its endpoints stay connected after removing it.
/// Molecules are small, so the direct check is used instead of a lowpoint
/// pass.
pub fn ring_bonds(atom_count: usize, bonds: &[Bond]) -> Vec<bool> {
    let mut adjacency = vec![Vec::new(); atom_count];
    for (i, bond) in bonds.iter().enumerate() {
        adjacency[bond.a].push((bond.b, i));
        adjacency[bond.b].push((bond.a, i));
    }
    bonds
        .iter()
        .enumerate()
        .map(|(skip, bond)| connected_avoiding(&adjacency, bond.a, bond.b, skip))
        .collect()
}

fn connected_avoiding(
    adjacency: &[Vec<(usize, usize)>],
    from: usize,
    to: usize,
    skip_bond: usize,
) -> bool {
    let mut seen = vec![false; adjacency.len()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(u) = stack.pop() {
        if u == to {
            return true;
        }
        for &(v, bi) in &adjacency[u] {
            if bi != skip_bond && !seen[v] {
                seen[v] = true;
                stack.push(v);
            }
        }
    }
    false
}

/// Smallest set of smallest rings.
///
/// Candidates are the shortest cycles through each ring bond; rings are
/// selected greedily by (size, atom index set) subject to GF(2) independence
/// of their edge-incidence vectors, until the cycle rank is reached. The
/// ordering makes the output deterministic.
pub fn sssr(mol: &MoleculeGraph) -> Vec<Vec<usize>> {
    let bonds = mol.bonds();
    let ring_flags = ring_bonds(mol.atom_count(), bonds);
    let ring_edge_ids: Vec<usize> = (0..bonds.len()).filter(|&i| ring_flags[i]).collect();
    if ring_edge_ids.is_empty() {
        return Vec::new();
    }
    let edge_pos: std::collections::HashMap<usize, usize> = ring_edge_ids
        .iter()
        .enumerate()
        .map(|(pos, &id)| (id, pos))
        .collect();

    let ring_atoms: std::collections::BTreeSet<usize> = ring_edge_ids
        .iter()
        .flat_map(|&i| [bonds[i].a, bonds[i].b])
        .collect();
    let components = count_components(mol, &ring_atoms, &ring_flags);
    let rank = ring_edge_ids.len() + components - ring_atoms.len();

    // shortest cycle through each ring edge
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    let mut seen_cycles = std::collections::HashSet::new();
    for &ei in &ring_edge_ids {
        let bond = &bonds[ei];
        if let Some(path) = shortest_path_avoiding(mol, bond.a, bond.b, ei, &ring_flags) {
            let mut key: Vec<usize> = path.clone();
            key.sort_unstable();
            if seen_cycles.insert(key) {
                candidates.push(path);
            }
        }
    }
    candidates.sort_by(|a, b| {
        let (mut ka, mut kb) = (a.clone(), b.clone());
        ka.sort_unstable();
        kb.sort_unstable();
        a.len().cmp(&b.len()).then(ka.cmp(&kb))
    });

    // greedy GF(2) elimination over edge-incidence bitvectors
    let words = ring_edge_ids.len().div_ceil(64);
    let mut basis: Vec<Vec<u64>> = Vec::new();
    let mut chosen = Vec::new();
    for cycle in candidates {
        if chosen.len() == rank {
            break;
        }
        let mut reduced = vec![0u64; words];
        for w in 0..cycle.len() {
            let a = cycle[w];
            let b = cycle[(w + 1) % cycle.len()];
            let bond_idx = mol.bond_index_between(a, b).expect("cycle edges exist");
            let pos = edge_pos[&bond_idx];
            reduced[pos / 64] ^= 1 << (pos % 64);
        }
        loop {
            let Some(lead) = leading_bit(&reduced) else { break };
            match basis.iter().find(|b: &&Vec<u64>| leading_bit(b) == Some(lead)) {
                Some(b) => {
                    let b = (*b).clone();
                    for (r, bw) in reduced.iter_mut().zip(b.iter()) {
                        *r ^= bw;
                    }
                }
                None => break,
            }
        }
        if leading_bit(&reduced).is_some() {
            basis.push(reduced);
            chosen.push(cycle);
        }
    }
    chosen
}

fn leading_bit(v: &[u64]) -> Option<usize> {
    for (w, &word) in v.iter().enumerate() {
        if word != 0 {
            return Some(w * 64 + word.trailing_zeros() as usize);
        }
    }
    None
}

fn count_components(
    mol: &MoleculeGraph,
    ring_atoms: &std::collections::BTreeSet<usize>,
    ring_flags: &[bool],
) -> usize {
    let mut seen = std::collections::HashSet::new();
    let mut components = 0;
    for &start in ring_atoms {
        if seen.contains(&start) {
            continue;
        }
        components += 1;
        let mut stack = vec![start];
        seen.insert(start);
        while let Some(u) = stack.pop() {
            for &(v, bi) in mol.neighbors(u) {
                if ring_flags[bi] && !seen.contains(&v) {
                    seen.insert(v);
                    stack.push(v);
                }
            }
        }
    }
    components
}

/// BFS shortest path from `from` to `to` within the ring subgraph, avoiding
/// one edge. Neighbor order is index-based, so ties resolve deterministically.
fn shortest_path_avoiding(
    mol: &MoleculeGraph,
    from: usize,
    to: usize,
    skip_bond: usize,
    ring_flags: &[bool],
) -> Option<Vec<usize>> {
    let n = mol.atom_count();
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    let mut queue = std::collections::VecDeque::new();
    queue.push_back(from);
    seen[from] = true;
    while let Some(u) = queue.pop_front() {
        if u == to {
            let mut path = vec![to];
            let mut cur = to;
            while cur != from {
                cur = parent[cur];
                path.push(cur);
            }
            path.reverse();
            return Some(path);
        }
        let mut nbrs: Vec<(usize, usize)> = mol.neighbors(u).to_vec();
        nbrs.sort_unstable();
        for (v, bi) in nbrs {
            if bi != skip_bond && ring_flags[bi] && !seen[v] {
                seen[v] = true;
                parent[v] = u;
                queue.push_back(v);
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use crate::chem::parse_smiles;

    use super::*;

    #[test]
    fn benzene_has_one_six_ring() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        let rings = sssr(&mol);
        assert_eq!(rings.len(), 1);
        assert_eq!(rings[0].len(), 6);
    }

    #[test]
    fn naphthalene_has_two_six_rings() {
        let mol = parse_smiles("c1ccc2ccccc2c1").unwrap();
        let rings = sssr(&mol);
        assert_eq!(rings.len(), 2);
        assert!(rings.iter().all(|r| r.len() == 6));
    }

    #[test]
    fn chains_have_no_rings() {
        let mol = parse_smiles("CCCCC").unwrap();
        assert!(sssr(&mol).is_empty());
        assert!(mol.atoms().iter().all(|a| !a.ring_member));
    }

    #[test]
    fn spiro_and_fused_share_atoms() {
        // bicyclohexyl-style fused pair via a shared edge
        let mol = parse_smiles("C1CCC2(CC1)CCCCC2").unwrap();
        let rings = sssr(&mol);
        assert_eq!(rings.len(), 2);
    }
}
