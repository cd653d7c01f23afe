//! Independent oracles shared by the integration suites. These deliberately
//! avoid the library's own search/differentiation paths.

use molforge_core::chem::MoleculeGraph;
use molforge_core::numeric::{Tape, Tensor, Tv};

/// Central finite-difference gradient of a scalar-valued function.
pub fn central_diff_gradient(f: &dyn Fn(&Tensor) -> f64, x: &Tensor, h: f64) -> Tensor {
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let mut plus = x.data().to_vec();
        let mut minus = x.data().to_vec();
        plus[i] += h;
        minus[i] -= h;
        let fp = f(&Tensor::new(x.shape().to_vec(), plus).unwrap());
        let fm = f(&Tensor::new(x.shape().to_vec(), minus).unwrap());
        grad.push((fp - fm) / (2.0 * h));
    }
    Tensor::new(x.shape().to_vec(), grad).unwrap()
}

/// Relative L2 error of `got` against the reference `want`.
pub fn rel_l2_error(got: &Tensor, want: &Tensor) -> f64 {
    let diff = got.sub(want).expect("same shape").norm();
    diff / want.norm().max(1e-12)
}

/// Check one recorded operation against finite differences: `build` maps the
/// traced input to a scalar loss. Returns the relative error.
pub fn fd_check(build: &dyn Fn(&Tape, Tv) -> Tv, x0: &Tensor, h: f64) -> f64 {
    let tape = Tape::new();
    let x = tape.leaf(x0.clone());
    let loss = build(&tape, x);
    let grads = tape.backward(loss).expect("backward");
    let analytic = grads.require(x).expect("input gradient").clone();
    let numeric = central_diff_gradient(
        &|xv: &Tensor| {
            let tape = Tape::new();
            let x = tape.leaf(xv.clone());
            let loss = build(&tape, x);
            tape.value(loss).item().expect("scalar loss")
        },
        x0,
        h,
    );
    rel_l2_error(&analytic, &numeric)
}

/// Brute-force substructure oracle: enumerate injective assignments of
/// query atoms (in plain index order) to molecule atoms, checking element,
/// aromaticity, and every bond among assigned atoms. Independent of the
/// search-order heuristics in the library matcher.
pub fn brute_force_substructure(mol: &MoleculeGraph, query: &MoleculeGraph) -> bool {
    let qn = query.atom_count();
    if qn > mol.atom_count() {
        return false;
    }
    let mut assignment = vec![usize::MAX; qn];
    let mut used = vec![false; mol.atom_count()];
    assign(mol, query, 0, &mut assignment, &mut used)
}

fn assign(
    mol: &MoleculeGraph,
    query: &MoleculeGraph,
    q: usize,
    assignment: &mut Vec<usize>,
    used: &mut Vec<bool>,
) -> bool {
    if q == query.atom_count() {
        return true;
    }
    let qa = &query.atoms()[q];
    'target: for t in 0..mol.atom_count() {
        if used[t] {
            continue;
        }
        let ta = &mol.atoms()[t];
        if qa.element != ta.element || qa.aromatic != ta.aromatic {
            continue;
        }
        for prev in 0..q {
            if let Some(qbond) = query.bond_between(q, prev) {
                match mol.bond_between(t, assignment[prev]) {
                    Some(tbond) if tbond.order == qbond.order => {}
                    _ => continue 'target,
                }
            }
        }
        assignment[q] = t;
        used[t] = true;
        if assign(mol, query, q + 1, assignment, used) {
            return true;
        }
        used[t] = false;
        assignment[q] = usize::MAX;
    }
    false
}
