use super::{rings, BondOrder, Element, MoleculeGraph};

/// Allowed total valences for an element at a given formal charge, ascending.
///
/// Positive charge on N/O/S/P/halogens raises the target by one bond
/// (isoelectronic shift); negative charge lowers it. Carbon loses a bond in
/// either direction (carbenium/carbanion); boron gains one when negative.
pub fn allowed_valences(element: Element, charge: i8) -> Vec<u8> {
    let base: &[u8] = match element {
        Element::B => &[3],
        Element::C => &[4],
        Element::N => &[3],
        Element::O => &[2],
        Element::P => &[3, 5],
        Element::S => &[2, 4, 6],
        Element::F | Element::Cl | Element::Br | Element::I => &[1],
        Element::H => &[1],
    };
    let charge = charge as i16;
    let shift = |v: u8| -> i16 {
        let v = v as i16;
        match element {
            Element::C => v - charge.abs(),
            Element::B => v - charge,
            Element::H => {
                if charge == 0 {
                    v
                } else {
                    0
                }
            }
            _ => v + charge,
        }
    };
    let mut out: Vec<u8> = base
        .iter()
        .map(|&v| shift(v))
        .filter(|&v| v >= 0)
        .map(|v| v as u8)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

#[derive(Clone, Debug)]
pub struct ValenceFailure {
    pub atom: usize,
    pub reason: String,
}

/// Outcome of [`check_valence`]; carries one entry per failing atom.
#[derive(Clone, Debug)]
pub struct ValidityReport {
    pub valid: bool,
    pub failures: Vec<ValenceFailure>,
}

impl ValidityReport {
    fn ok() -> Self {
        Self {
            valid: true,
            failures: Vec::new(),
        }
    }
}

/// Check that every atom's total bond order (with aromatic bonds resolved by
/// a Kekulé assignment) plus its hydrogens matches an allowed valence, and
/// that every aromatic ring system admits such an assignment with an
/// aromatic electron count of `4n+2` per smallest ring.
pub fn check_valence(mol: &MoleculeGraph) -> ValidityReport {
    let mut report = ValidityReport::ok();

    // Non-aromatic atoms: direct bond-order sum.
    for (i, atom) in mol.atoms().iter().enumerate() {
        if atom.aromatic {
            if !atom.ring_member {
                report.valid = false;
                report.failures.push(ValenceFailure {
                    atom: i,
                    reason: "aromatic atom outside any ring".into(),
                });
            }
            continue;
        }
        let total = mol.sigma_sum(i) + mol.hydrogen_count(i);
        let allowed = allowed_valences(atom.element, atom.formal_charge);
        if !allowed.contains(&total) {
            report.valid = false;
            report.failures.push(ValenceFailure {
                atom: i,
                reason: format!(
                    "valence {total} not in allowed {allowed:?} for {}{}",
                    atom.element.symbol(),
                    charge_suffix(atom.formal_charge)
                ),
            });
        }
    }
    if !report.valid {
        return report;
    }

    // Aromatic systems: require a Kekulé assignment.
    let system = KekuleSystem::build(mol);
    if system.atoms.is_empty() {
        return report;
    }
    match system.solve() {
        Some(_) => report,
        None => {
            for &atom in &system.atoms {
                report.failures.push(ValenceFailure {
                    atom,
                    reason: "aromatic system admits no Kekulé assignment".into(),
                });
            }
            ValidityReport {
                valid: false,
                failures: report.failures,
            }
        }
    }
}

fn charge_suffix(charge: i8) -> String {
    match charge {
        0 => String::new(),
        1 => "+".into(),
        -1 => "-".into(),
        c if c > 0 => format!("+{c}"),
        c => format!("{c}"),
    }
}

/// One aromatic subsystem: the aromatic atoms and bonds of a molecule, the
/// per-atom matching constraints, and the smallest rings used for electron
/// counting.
pub(crate) struct KekuleSystem<'m> {
    mol: &'m MoleculeGraph,
    pub atoms: Vec<usize>,
    /// aromatic bonds as (bond index, a, b)
    pub bonds: Vec<(usize, usize, usize)>,
    /// rings (atom lists) whose bonds are all aromatic
    pub rings: Vec<Vec<usize>>,
}

impl<'m> KekuleSystem<'m> {
    pub fn build(mol: &'m MoleculeGraph) -> Self {
        let atoms: Vec<usize> = (0..mol.atom_count())
            .filter(|&i| mol.atoms()[i].aromatic)
            .collect();
        let bonds: Vec<(usize, usize, usize)> = mol
            .bonds()
            .iter()
            .enumerate()
            .filter(|(_, b)| b.order == BondOrder::Aromatic)
            .map(|(i, b)| (i, b.a, b.b))
            .collect();
        let rings = rings::sssr(mol)
            .into_iter()
            .filter(|ring| {
                ring.iter().enumerate().all(|(k, &a)| {
                    let b = ring[(k + 1) % ring.len()];
                    mol.bond_between(a, b)
                        .is_some_and(|bond| bond.order == BondOrder::Aromatic)
                })
            })
            .collect();
        Self {
            mol,
            atoms,
            bonds,
            rings,
        }
    }

    /// Base valence of an aromatic atom before any double-bond elevation:
    /// all bond orders with aromatic counted once, plus hydrogens.
    fn base_valence(&self, atom: usize) -> u8 {
        self.mol.sigma_sum(atom) + self.mol.hydrogen_count(atom)
    }

    fn may_skip(&self, atom: usize) -> bool {
        let a = &self.mol.atoms()[atom];
        allowed_valences(a.element, a.formal_charge).contains(&self.base_valence(atom))
    }

    fn may_double(&self, atom: usize) -> bool {
        let a = &self.mol.atoms()[atom];
        allowed_valences(a.element, a.formal_charge).contains(&(self.base_valence(atom) + 1))
    }

    /// Search for a set of double-bond placements on the aromatic bonds such
    /// that every atom's valence is satisfied and each aromatic ring carries
    /// `4n+2` pi electrons. Returns the matched-bond set when one exists.
    pub fn solve(&self) -> Option<Vec<usize>> {
        let may_skip: Vec<bool> = self.atoms.iter().map(|&a| self.may_skip(a)).collect();
        let may_double: Vec<bool> = self.atoms.iter().map(|&a| self.may_double(a)).collect();
        if may_skip
            .iter()
            .zip(may_double.iter())
            .any(|(&s, &d)| !s && !d)
        {
            return None;
        }
        let index_of: std::collections::HashMap<usize, usize> = self
            .atoms
            .iter()
            .enumerate()
            .map(|(k, &a)| (a, k))
            .collect();
        // bonds incident to each system atom
        let mut incident: Vec<Vec<usize>> = vec![Vec::new(); self.atoms.len()];
        for (bi, &(_, a, b)) in self.bonds.iter().enumerate() {
            incident[index_of[&a]].push(bi);
            incident[index_of[&b]].push(bi);
        }
        let mut matched_atom = vec![false; self.atoms.len()];
        let mut chosen = Vec::new();
        self.backtrack(
            0,
            &may_skip,
            &may_double,
            &index_of,
            &incident,
            &mut matched_atom,
            &mut chosen,
        )
    }

    #[allow(clippy::too_many_arguments)]
    fn backtrack(
        &self,
        k: usize,
        may_skip: &[bool],
        may_double: &[bool],
        index_of: &std::collections::HashMap<usize, usize>,
        incident: &[Vec<usize>],
        matched: &mut Vec<bool>,
        chosen: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        if k == self.atoms.len() {
            return self.huckel_ok(index_of, matched).then(|| chosen.clone());
        }
        if matched[k] {
            return self.backtrack(k + 1, may_skip, may_double, index_of, incident, matched, chosen);
        }
        if may_skip[k] {
            if let Some(sol) =
                self.backtrack(k + 1, may_skip, may_double, index_of, incident, matched, chosen)
            {
                return Some(sol);
            }
        }
        if may_double[k] {
            for &bi in &incident[k] {
                let (_, a, b) = self.bonds[bi];
                let other = if index_of[&a] == k {
                    index_of[&b]
                } else {
                    index_of[&a]
                };
                if matched[other] || !may_double[other] {
                    continue;
                }
                matched[k] = true;
                matched[other] = true;
                chosen.push(bi);
                if let Some(sol) = self.backtrack(
                    k + 1,
                    may_skip,
                    may_double,
                    index_of,
                    incident,
                    matched,
                    chosen,
                ) {
                    return Some(sol);
                }
                chosen.pop();
                matched[k] = false;
                matched[other] = false;
            }
        }
        None
    }

    /// Aromatic electron count per ring: a matched atom contributes one pi
    /// electron, an unmatched heteroatom contributes a lone pair, and an
    /// unmatched carbon or boron (exocyclic double bond) contributes none.
    fn huckel_ok(
        &self,
        index_of: &std::collections::HashMap<usize, usize>,
        matched: &[bool],
    ) -> bool {
        self.rings.iter().all(|ring| {
            let electrons: usize = ring
                .iter()
                .map(|&atom| {
                    if matched[index_of[&atom]] {
                        1
                    } else {
                        match self.mol.atoms()[atom].element {
                            Element::C | Element::B => 0,
                            _ => 2,
                        }
                    }
                })
                .sum();
            electrons % 4 == 2
        })
    }
}
