//! SMILES parsing, validation, serialization, and randomization.
//!
//! The grammar covers the organic subset plus bracket atoms with charge and
//! explicit hydrogens, ring-bond digits (`1`-`9` and `%nn`), branches, the
//! bond symbols `-`, `=`, `#`, and aromatic lowercase atoms. Stereo markers,
//! isotopes, wildcards, and multi-fragment dots are rejected as unsupported.

mod canon;
pub mod corpus;
pub mod gen;
mod parser;
mod rings;
mod valence;
mod write;

pub use canon::{canonical_ranks, canonical_smiles, randomize_smiles};
pub use corpus::CorpusError;
pub use parser::parse_smiles;
pub use rings::sssr;
pub use valence::{allowed_valences, check_valence, ValenceFailure, ValidityReport};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ChemError {
    #[error("syntax error at position {pos}: {message}")]
    Syntax { pos: usize, message: String },
    #[error("unsupported feature at position {pos}: {feature}")]
    Unsupported { pos: usize, feature: String },
    #[error("invalid molecule: {0}")]
    InvalidMolecule(String),
}

pub type Result<T> = std::result::Result<T, ChemError>;

/// Elements the grammar accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Element {
    B,
    C,
    N,
    O,
    P,
    S,
    F,
    Cl,
    Br,
    I,
    H,
}

impl Element {
    pub fn symbol(self) -> &'static str {
        match self {
            Element::B => "B",
            Element::C => "C",
            Element::N => "N",
            Element::O => "O",
            Element::P => "P",
            Element::S => "S",
            Element::F => "F",
            Element::Cl => "Cl",
            Element::Br => "Br",
            Element::I => "I",
            Element::H => "H",
        }
    }

    pub fn from_symbol(s: &str) -> Option<Self> {
        Some(match s {
            "B" => Element::B,
            "C" => Element::C,
            "N" => Element::N,
            "O" => Element::O,
            "P" => Element::P,
            "S" => Element::S,
            "F" => Element::F,
            "Cl" => Element::Cl,
            "Br" => Element::Br,
            "I" => Element::I,
            "H" => Element::H,
            _ => return None,
        })
    }

    /// Elements allowed to carry the aromatic flag.
    pub fn can_be_aromatic(self) -> bool {
        matches!(
            self,
            Element::B | Element::C | Element::N | Element::O | Element::P | Element::S
        )
    }

    /// Standard atomic mass.
    pub fn mass(self) -> f64 {
        match self {
            Element::B => 10.811,
            Element::C => 12.011,
            Element::N => 14.007,
            Element::O => 15.999,
            Element::P => 30.974,
            Element::S => 32.06,
            Element::F => 18.998,
            Element::Cl => 35.45,
            Element::Br => 79.904,
            Element::I => 126.904,
            Element::H => 1.008,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Contribution to an atom's sigma-framework valence; an aromatic bond
    /// counts 1 and may be elevated by a Kekulé assignment.
    pub fn sigma_value(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Atom {
    pub element: Element,
    pub aromatic: bool,
    pub formal_charge: i8,
    /// Hydrogen count fixed by a bracket atom; `None` means implicit.
    pub explicit_h: Option<u8>,
    /// Set after parsing from a cycle computation.
    pub ring_member: bool,
}

impl Atom {
    pub fn new(element: Element) -> Self {
        Self {
            element,
            aromatic: false,
            formal_charge: 0,
            explicit_h: None,
            ring_member: false,
        }
    }

    pub fn aromatic(element: Element) -> Self {
        Self {
            aromatic: true,
            ..Self::new(element)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Bond {
    pub a: usize,
    pub b: usize,
    pub order: BondOrder,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if atom == self.a {
            self.b
        } else {
            self.a
        }
    }
}

/// A connected molecular graph parsed from a SMILES string.
#[derive(Clone, Debug)]
pub struct MoleculeGraph {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    source: String,
    /// adjacency[i] = (neighbor atom, bond index)
    adjacency: Vec<Vec<(usize, usize)>>,
}

impl MoleculeGraph {
    /// Assemble a graph, demote non-ring "aromatic" bonds to single (the
    /// biphenyl case), and set ring-membership flags.
    pub fn assemble(atoms: Vec<Atom>, mut bonds: Vec<Bond>, source: String) -> Result<Self> {
        let n = atoms.len();
        let mut seen = std::collections::HashSet::new();
        for bond in &bonds {
            if bond.a >= n || bond.b >= n || bond.a == bond.b {
                return Err(ChemError::Syntax {
                    pos: 0,
                    message: format!("bad bond endpoints {}-{}", bond.a, bond.b),
                });
            }
            let key = (bond.a.min(bond.b), bond.a.max(bond.b));
            if !seen.insert(key) {
                return Err(ChemError::Syntax {
                    pos: 0,
                    message: format!("duplicate bond between atoms {} and {}", key.0, key.1),
                });
            }
        }
        let ring_bond = rings::ring_bonds(n, &bonds);
        for (i, bond) in bonds.iter_mut().enumerate() {
            if bond.order == BondOrder::Aromatic && !ring_bond[i] {
                bond.order = BondOrder::Single;
            }
        }
        let mut atoms = atoms;
        for atom in atoms.iter_mut() {
            atom.ring_member = false;
        }
        for (i, bond) in bonds.iter().enumerate() {
            if ring_bond[i] {
                atoms[bond.a].ring_member = true;
                atoms[bond.b].ring_member = true;
            }
        }
        let mut adjacency = vec![Vec::new(); n];
        for (i, bond) in bonds.iter().enumerate() {
            adjacency[bond.a].push((bond.b, i));
            adjacency[bond.b].push((bond.a, i));
        }
        Ok(Self {
            atoms,
            bonds,
            source,
            adjacency,
        })
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn neighbors(&self, atom: usize) -> &[(usize, usize)] {
        &self.adjacency[atom]
    }

    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.bond_index_between(a, b).map(|bi| &self.bonds[bi])
    }

    pub fn bond_index_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency[a]
            .iter()
            .find(|(nbr, _)| *nbr == b)
            .map(|&(_, bi)| bi)
    }

    /// Sum of sigma bond orders at an atom (aromatic bonds count 1).
    pub fn sigma_sum(&self, atom: usize) -> u8 {
        self.adjacency[atom]
            .iter()
            .map(|&(_, bi)| self.bonds[bi].order.sigma_value())
            .sum()
    }

    /// Total hydrogens on an atom: the bracket count when present, otherwise
    /// the implicit count (default valence minus bond orders, with one unit
    /// reserved on aromatic atoms for a potential ring double bond).
    pub fn hydrogen_count(&self, atom: usize) -> u8 {
        match self.atoms[atom].explicit_h {
            Some(h) => h,
            None => self.implicit_hydrogens(atom),
        }
    }

    /// Implicit hydrogen count for an atom treated as a bare organic-subset
    /// symbol, regardless of any bracket-specified count.
    ///
    /// Aromatic atoms reserve one valence unit for a potential ring double
    /// bond and fill against their lowest valence state only, so aromatic S
    /// and P never reach for hypervalent states.
    pub fn implicit_hydrogens(&self, atom: usize) -> u8 {
        let a = &self.atoms[atom];
        let sigma = self.sigma_sum(atom);
        let allowed = valence::allowed_valences(a.element, a.formal_charge);
        if a.aromatic {
            let Some(&v) = allowed.first() else { return 0 };
            return (v as i16 - sigma as i16 - 1).max(0) as u8;
        }
        for v in allowed {
            if v >= sigma {
                return v - sigma;
            }
        }
        0
    }

    /// Atoms other than explicit hydrogens.
    pub fn heavy_atom_count(&self) -> usize {
        self.atoms
            .iter()
            .filter(|a| a.element != Element::H)
            .count()
    }

    pub fn is_connected(&self) -> bool {
        if self.atoms.is_empty() {
            return false;
        }
        let mut seen = vec![false; self.atoms.len()];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &(nbr, _) in &self.adjacency[i] {
                if !seen[nbr] {
                    seen[nbr] = true;
                    count += 1;
                    stack.push(nbr);
                }
            }
        }
        count == self.atoms.len()
    }
}
