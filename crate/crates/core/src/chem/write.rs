use super::{BondOrder, Element, MoleculeGraph};

/// Serialize a molecule by DFS from `root`, visiting neighbors in descending
/// `priority`. Ring-closure digits are allocated in discovery order and the
/// bond symbol is written at both mentions.
pub(crate) fn write_smiles(mol: &MoleculeGraph, root: usize, priority: &[usize]) -> String {
    let n = mol.atom_count();
    let mut visited = vec![false; n];
    let mut bond_used = vec![false; mol.bonds().len()];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    // (digit, bond index) attached to each atom, in allocation order
    let mut closures: Vec<Vec<(u16, usize)>> = vec![Vec::new(); n];
    let mut next_digit: u16 = 1;

    let mut stack = vec![root];
    visited[root] = true;
    let mut dfs_order = Vec::with_capacity(n);
    while let Some(u) = stack.pop() {
        dfs_order.push(u);
        let mut nbrs: Vec<(usize, usize)> = mol.neighbors(u).to_vec();
        nbrs.sort_by_key(|&(v, _)| std::cmp::Reverse(priority[v]));
        for (v, bi) in nbrs {
            if bond_used[bi] {
                continue;
            }
            if visited[v] {
                bond_used[bi] = true;
                closures[u].push((next_digit, bi));
                closures[v].push((next_digit, bi));
                next_digit += 1;
            } else {
                bond_used[bi] = true;
                visited[v] = true;
                children[u].push(v);
                stack.push(v);
            }
        }
    }
    let mut out = String::new();
    emit(mol, root, None, &children, &closures, &mut out);
    out
}

fn emit(
    mol: &MoleculeGraph,
    u: usize,
    parent_bond: Option<usize>,
    children: &[Vec<usize>],
    closures: &[Vec<(u16, usize)>],
    out: &mut String,
) {
    if let Some(bi) = parent_bond {
        out.push_str(bond_token(mol, bi));
    }
    out.push_str(&atom_token(mol, u));
    for &(digit, bi) in &closures[u] {
        out.push_str(bond_token(mol, bi));
        if digit < 10 {
            out.push(char::from(b'0' + digit as u8));
        } else {
            out.push('%');
            out.push(char::from(b'0' + (digit / 10) as u8));
            out.push(char::from(b'0' + (digit % 10) as u8));
        }
    }
    let kids = &children[u];
    for (i, &v) in kids.iter().enumerate() {
        let bi = mol
            .bond_index_between(u, v)
            .expect("tree edge exists");
        if i + 1 < kids.len() {
            out.push('(');
            emit(mol, v, Some(bi), children, closures, out);
            out.push(')');
        } else {
            emit(mol, v, Some(bi), children, closures, out);
        }
    }
}

fn bond_token(mol: &MoleculeGraph, bond_idx: usize) -> &'static str {
    let bond = &mol.bonds()[bond_idx];
    match bond.order {
        BondOrder::Aromatic => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Single => {
            // an unmarked bond between aromatic atoms would re-parse as
            // aromatic inside a ring, so spell the single bond out
            if mol.atoms()[bond.a].aromatic && mol.atoms()[bond.b].aromatic {
                "-"
            } else {
                ""
            }
        }
    }
}

fn atom_token(mol: &MoleculeGraph, i: usize) -> String {
    let atom = &mol.atoms()[i];
    let mut symbol = atom.element.symbol().to_string();
    if atom.aromatic {
        symbol = symbol.to_ascii_lowercase();
    }
    let h = mol.hydrogen_count(i);
    let bare_ok = atom.element != Element::H
        && atom.formal_charge == 0
        && h == mol.implicit_hydrogens(i);
    if bare_ok {
        return symbol;
    }
    let mut out = String::from("[");
    out.push_str(&symbol);
    match h {
        0 => {}
        1 => out.push('H'),
        n => {
            out.push('H');
            out.push(char::from(b'0' + n));
        }
    }
    match atom.formal_charge {
        0 => {}
        1 => out.push('+'),
        -1 => out.push('-'),
        c if c > 1 => out.push_str(&format!("+{c}")),
        c => out.push_str(&format!("-{}", -c)),
    }
    out.push(']');
    out
}
