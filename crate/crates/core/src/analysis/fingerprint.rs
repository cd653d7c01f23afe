use crate::chem::MoleculeGraph;

use super::Scaffold;

pub const FINGERPRINT_BITS: usize = 2048;
pub const MAX_PATH_BONDS: usize = 7;

/// Hashed path fingerprint: every simple path of 0 to 7 bonds, encoded as a
/// direction-normalized (element, aromatic, bond order) sequence, sets one
/// bit of a 2048-wide vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    bits: Vec<u64>,
}

impl Fingerprint {
    pub fn popcount(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn and_popcount(&self, other: &Fingerprint) -> u32 {
        self.bits
            .iter()
            .zip(other.bits.iter())
            .map(|(a, b)| (a & b).count_ones())
            .sum()
    }

    pub fn bit(&self, idx: usize) -> bool {
        self.bits[idx / 64] & (1 << (idx % 64)) != 0
    }
}

pub fn fingerprint(mol: &MoleculeGraph) -> Fingerprint {
    let mut signatures = std::collections::HashSet::new();
    let mut path = Vec::new();
    let mut on_path = vec![false; mol.atom_count()];
    for start in 0..mol.atom_count() {
        path.push(start);
        on_path[start] = true;
        collect_paths(mol, start, &mut path, &mut on_path, &mut signatures);
        on_path[start] = false;
        path.pop();
    }
    let mut bits = vec![0u64; FINGERPRINT_BITS / 64];
    for sig in signatures {
        let idx = (fnv1a(&sig) % FINGERPRINT_BITS as u64) as usize;
        bits[idx / 64] |= 1 << (idx % 64);
    }
    Fingerprint { bits }
}

fn collect_paths(
    mol: &MoleculeGraph,
    last: usize,
    path: &mut Vec<usize>,
    on_path: &mut Vec<bool>,
    signatures: &mut std::collections::HashSet<Vec<u8>>,
) {
    signatures.insert(signature(mol, path));
    if path.len() > MAX_PATH_BONDS {
        return;
    }
    for &(next, _) in mol.neighbors(last) {
        if on_path[next] {
            continue;
        }
        path.push(next);
        on_path[next] = true;
        collect_paths(mol, next, path, on_path, signatures);
        on_path[next] = false;
        path.pop();
    }
}

/// Byte encoding of a path, normalized so both walk directions agree.
fn signature(mol: &MoleculeGraph, path: &[usize]) -> Vec<u8> {
    let encode = |atoms: &mut dyn Iterator<Item = usize>| -> Vec<u8> {
        let mut out = Vec::with_capacity(path.len() * 2);
        let mut prev: Option<usize> = None;
        for atom in atoms {
            if let Some(p) = prev {
                let bond = mol.bond_between(p, atom).expect("path edges exist");
                out.push(bond_code(bond.order));
            }
            out.push(atom_code(mol, atom));
            prev = Some(atom);
        }
        out
    };
    let forward = encode(&mut path.iter().copied());
    let backward = encode(&mut path.iter().rev().copied());
    forward.min(backward)
}

fn atom_code(mol: &MoleculeGraph, atom: usize) -> u8 {
    let a = &mol.atoms()[atom];
    let element = a.element as u8;
    element * 2 + u8::from(a.aromatic)
}

fn bond_code(order: crate::chem::BondOrder) -> u8 {
    100 + order as u8
}

fn fnv1a(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

/// Cosine similarity of two bit vectors; zero when either is empty.
pub fn cosine_similarity(a: &Fingerprint, b: &Fingerprint) -> f64 {
    let na = a.popcount() as f64;
    let nb = b.popcount() as f64;
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    a.and_popcount(b) as f64 / (na * nb).sqrt()
}

/// Cosine similarity between a molecule and a scaffold, in `[0, 1]`.
pub fn scaffold_similarity(mol: &MoleculeGraph, scaffold: &Scaffold) -> f64 {
    cosine_similarity(&fingerprint(mol), &fingerprint(&scaffold.graph))
}
