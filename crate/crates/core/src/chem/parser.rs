use super::{Atom, Bond, BondOrder, ChemError, Element, MoleculeGraph, Result};

/// Parse a SMILES string into a [`MoleculeGraph`].
pub fn parse_smiles(text: &str) -> Result<MoleculeGraph> {
    if text.is_empty() {
        return Err(ChemError::Syntax {
            pos: 0,
            message: "empty input".into(),
        });
    }
    if !text.is_ascii() {
        return Err(ChemError::Syntax {
            pos: 0,
            message: "input must be ASCII".into(),
        });
    }
    Parser::new(text).run()
}

struct Parser<'a> {
    chars: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    branch_stack: Vec<usize>,
    pending: Option<BondOrder>,
    // ring digit -> (opening atom, bond symbol at the opening)
    open_rings: std::collections::BTreeMap<u16, (usize, Option<BondOrder>)>,
    source: &'a str,
}

impl<'a> Parser<'a> {
    fn new(text: &'a str) -> Self {
        Self {
            chars: text.as_bytes(),
            pos: 0,
            atoms: Vec::new(),
            bonds: Vec::new(),
            prev: None,
            branch_stack: Vec::new(),
            pending: None,
            open_rings: std::collections::BTreeMap::new(),
            source: text,
        }
    }

    fn syntax(&self, message: impl Into<String>) -> ChemError {
        ChemError::Syntax {
            pos: self.pos,
            message: message.into(),
        }
    }

    fn unsupported(&self, feature: impl Into<String>) -> ChemError {
        ChemError::Unsupported {
            pos: self.pos,
            feature: feature.into(),
        }
    }

    fn peek(&self) -> Option<u8> {
        self.chars.get(self.pos).copied()
    }

    fn run(mut self) -> Result<MoleculeGraph> {
        while let Some(c) = self.peek() {
            match c {
                b'A'..=b'Z' => self.organic_atom()?,
                b'b' | b'c' | b'n' | b'o' | b'p' | b's' => self.aromatic_atom()?,
                b'[' => self.bracket_atom()?,
                b'1'..=b'9' => {
                    let digit = (c - b'0') as u16;
                    self.pos += 1;
                    self.ring_digit(digit)?;
                }
                b'%' => {
                    self.pos += 1;
                    let d1 = self.peek().filter(u8::is_ascii_digit);
                    self.pos += 1;
                    let d2 = self.peek().filter(u8::is_ascii_digit);
                    let (Some(d1), Some(d2)) = (d1, d2) else {
                        return Err(self.syntax("'%' must be followed by two digits"));
                    };
                    self.pos += 1;
                    self.ring_digit(((d1 - b'0') as u16) * 10 + (d2 - b'0') as u16)?;
                }
                b'-' | b'=' | b'#' => {
                    if self.pending.is_some() {
                        return Err(self.syntax("consecutive bond symbols"));
                    }
                    self.pending = Some(match c {
                        b'-' => BondOrder::Single,
                        b'=' => BondOrder::Double,
                        _ => BondOrder::Triple,
                    });
                    self.pos += 1;
                }
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(self.syntax("branch before any atom"));
                    };
                    self.branch_stack.push(prev);
                    self.pos += 1;
                }
                b')' => {
                    let Some(restore) = self.branch_stack.pop() else {
                        return Err(self.syntax("unbalanced ')'"));
                    };
                    if self.pending.is_some() {
                        return Err(self.syntax("bond symbol before ')'"));
                    }
                    self.prev = Some(restore);
                    self.pos += 1;
                }
                b'.' => return Err(self.unsupported("multi-fragment '.'")),
                b'/' | b'\\' => return Err(self.unsupported("stereo bond marker")),
                b'*' => return Err(self.unsupported("wildcard atom")),
                b'@' => return Err(self.unsupported("chirality marker")),
                other => {
                    return Err(self.syntax(format!("unknown symbol '{}'", other as char)))
                }
            }
        }
        if !self.branch_stack.is_empty() {
            return Err(self.syntax("unbalanced '(': branch never closed"));
        }
        if let Some((digit, _)) = self.open_rings.iter().next() {
            return Err(self.syntax(format!("ring digit {digit} never closed")));
        }
        if self.pending.is_some() {
            return Err(self.syntax("dangling bond symbol at end of input"));
        }
        if self.atoms.is_empty() {
            return Err(self.syntax("no atoms"));
        }
        MoleculeGraph::assemble(self.atoms, self.bonds, self.source.to_string())
    }

    fn organic_atom(&mut self) -> Result<()> {
        let c = self.chars[self.pos];
        let two = if self.pos + 1 < self.chars.len() {
            let pair = [c, self.chars[self.pos + 1]];
            match &pair {
                b"Cl" | b"Br" => Some(Element::from_symbol(std::str::from_utf8(&pair).unwrap())),
                _ => None,
            }
        } else {
            None
        };
        let element = match two.flatten() {
            Some(el) => {
                self.pos += 2;
                el
            }
            None => {
                let sym = (c as char).to_string();
                let Some(el) = Element::from_symbol(&sym) else {
                    return Err(self.syntax(format!("unknown atom symbol '{}'", c as char)));
                };
                if el == Element::H {
                    return Err(self.syntax("'H' outside brackets"));
                }
                self.pos += 1;
                el
            }
        };
        self.add_atom(Atom::new(element))
    }

    fn aromatic_atom(&mut self) -> Result<()> {
        let c = self.chars[self.pos];
        let element = Element::from_symbol(&(c as char).to_ascii_uppercase().to_string())
            .expect("lowercase set is a subset of supported elements");
        self.pos += 1;
        self.add_atom(Atom::aromatic(element))
    }

    fn bracket_atom(&mut self) -> Result<()> {
        self.pos += 1; // consume '['
        if self.peek().map_or(false, |c| c.is_ascii_digit()) {
            return Err(self.unsupported("isotope specification"));
        }
        let Some(c) = self.peek() else {
            return Err(self.syntax("unterminated bracket atom"));
        };
        let mut atom = match c {
            b'A'..=b'Z' => {
                let two = if self.pos + 1 < self.chars.len() {
                    let pair = [c, self.chars[self.pos + 1]];
                    match &pair {
                        b"Cl" | b"Br" => Element::from_symbol(std::str::from_utf8(&pair).unwrap()),
                        _ => None,
                    }
                } else {
                    None
                };
                match two {
                    Some(el) => {
                        self.pos += 2;
                        Atom::new(el)
                    }
                    None => {
                        let sym = (c as char).to_string();
                        let Some(el) = Element::from_symbol(&sym) else {
                            return Err(
                                self.syntax(format!("unknown bracket element '{}'", c as char))
                            );
                        };
                        self.pos += 1;
                        Atom::new(el)
                    }
                }
            }
            b'b' | b'c' | b'n' | b'o' | b'p' | b's' => {
                self.pos += 1;
                Atom::aromatic(
                    Element::from_symbol(&(c as char).to_ascii_uppercase().to_string()).unwrap(),
                )
            }
            b'@' => return Err(self.unsupported("chirality marker")),
            b'*' => return Err(self.unsupported("wildcard atom")),
            other => {
                return Err(self.syntax(format!("unexpected '{}' in bracket", other as char)))
            }
        };

        // hydrogen count
        let mut h: u8 = 0;
        if self.peek() == Some(b'@') {
            return Err(self.unsupported("chirality marker"));
        }
        if self.peek() == Some(b'H') && atom.element != Element::H {
            self.pos += 1;
            h = 1;
            if let Some(d) = self.peek().filter(u8::is_ascii_digit) {
                h = d - b'0';
                self.pos += 1;
            }
        } else if atom.element == Element::H && self.peek() == Some(b'H') {
            return Err(self.syntax("hydrogen count on [H]"));
        }
        if h > 4 {
            return Err(self.syntax("hydrogen count above 4"));
        }

        // charge
        let mut charge: i16 = 0;
        while let Some(c) = self.peek() {
            match c {
                b'+' | b'-' => {
                    let sign: i16 = if c == b'+' { 1 } else { -1 };
                    self.pos += 1;
                    if let Some(d) = self.peek().filter(u8::is_ascii_digit) {
                        charge += sign * (d - b'0') as i16;
                        self.pos += 1;
                    } else {
                        charge += sign;
                    }
                }
                b'@' => return Err(self.unsupported("chirality marker")),
                _ => break,
            }
        }
        if self.peek() != Some(b']') {
            return Err(self.syntax("expected ']'"));
        }
        self.pos += 1;
        if charge.abs() > 3 {
            return Err(self.syntax("formal charge outside [-3, 3]"));
        }
        atom.formal_charge = charge as i8;
        atom.explicit_h = Some(h);
        self.add_atom(atom)
    }

    fn add_atom(&mut self, atom: Atom) -> Result<()> {
        let idx = self.atoms.len();
        let pending = self.pending.take();
        if let Some(prev) = self.prev {
            let order = self.resolve_order(pending, prev, &atom);
            self.bonds.push(Bond {
                a: prev,
                b: idx,
                order,
            });
        } else if pending.is_some() {
            return Err(self.syntax("bond symbol before first atom"));
        }
        self.atoms.push(atom);
        self.prev = Some(idx);
        Ok(())
    }

    fn resolve_order(&self, explicit: Option<BondOrder>, prev: usize, next: &Atom) -> BondOrder {
        match explicit {
            Some(order) => order,
            // default: aromatic if both ends are aromatic, otherwise single;
            // non-ring aromatic defaults are demoted during assembly
            None if self.atoms[prev].aromatic && next.aromatic => BondOrder::Aromatic,
            None => BondOrder::Single,
        }
    }

    fn ring_digit(&mut self, digit: u16) -> Result<()> {
        let Some(current) = self.prev else {
            return Err(self.syntax("ring digit before any atom"));
        };
        let pending = self.pending.take();
        match self.open_rings.remove(&digit) {
            None => {
                self.open_rings.insert(digit, (current, pending));
            }
            Some((open_atom, open_order)) => {
                if open_atom == current {
                    return Err(self.syntax(format!("ring digit {digit} closes onto itself")));
                }
                let order = match (open_order, pending) {
                    (Some(a), Some(b)) if a != b => {
                        return Err(
                            self.syntax(format!("conflicting bond orders on ring digit {digit}"))
                        )
                    }
                    (Some(a), _) => a,
                    (None, Some(b)) => b,
                    (None, None) => {
                        if self.atoms[open_atom].aromatic && self.atoms[current].aromatic {
                            BondOrder::Aromatic
                        } else {
                            BondOrder::Single
                        }
                    }
                };
                self.bonds.push(Bond {
                    a: open_atom,
                    b: current,
                    order,
                });
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn benzene_is_six_aromatic_atoms_and_bonds() {
        let mol = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(mol.atom_count(), 6);
        assert_eq!(mol.bonds().len(), 6);
        assert!(mol.atoms().iter().all(|a| a.aromatic && a.ring_member));
        assert!(mol
            .bonds()
            .iter()
            .all(|b| b.order == BondOrder::Aromatic));
    }

    #[test]
    fn acetic_acid_bond_orders() {
        let mol = parse_smiles("CC(=O)O").unwrap();
        assert_eq!(mol.atom_count(), 4);
        assert_eq!(mol.bond_between(0, 1).unwrap().order, BondOrder::Single);
        assert_eq!(mol.bond_between(1, 2).unwrap().order, BondOrder::Double);
        assert_eq!(mol.bond_between(1, 3).unwrap().order, BondOrder::Single);
    }

    #[test]
    fn dangling_ring_digit_is_syntax_error() {
        assert!(matches!(
            parse_smiles("C1CC"),
            Err(ChemError::Syntax { .. })
        ));
    }

    #[test]
    fn unbalanced_parens_are_syntax_errors() {
        assert!(matches!(parse_smiles("C(C"), Err(ChemError::Syntax { .. })));
        assert!(matches!(parse_smiles("CC)"), Err(ChemError::Syntax { .. })));
    }

    #[test]
    fn unsupported_features_are_flagged() {
        assert!(matches!(
            parse_smiles("C/C=C/C"),
            Err(ChemError::Unsupported { .. })
        ));
        assert!(matches!(
            parse_smiles("[13C]"),
            Err(ChemError::Unsupported { .. })
        ));
        assert!(matches!(
            parse_smiles("CC.CC"),
            Err(ChemError::Unsupported { .. })
        ));
        assert!(matches!(
            parse_smiles("C[C@H](N)O"),
            Err(ChemError::Unsupported { .. })
        ));
        assert!(matches!(
            parse_smiles("C*"),
            Err(ChemError::Unsupported { .. })
        ));
    }

    #[test]
    fn bracket_atoms_carry_charge_and_hydrogens() {
        let mol = parse_smiles("[NH4+]").unwrap();
        let atom = &mol.atoms()[0];
        assert_eq!(atom.element, Element::N);
        assert_eq!(atom.formal_charge, 1);
        assert_eq!(atom.explicit_h, Some(4));

        let mol = parse_smiles("[O-]").unwrap();
        assert_eq!(mol.atoms()[0].formal_charge, -1);
        assert_eq!(mol.atoms()[0].explicit_h, Some(0));
    }

    #[test]
    fn biphenyl_link_is_single() {
        let mol = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = mol.bond_between(5, 6).or_else(|| mol.bond_between(0, 6));
        let link = link.expect("inter-ring bond present");
        assert_eq!(link.order, BondOrder::Single);
        assert_eq!(
            mol.bonds()
                .iter()
                .filter(|b| b.order == BondOrder::Aromatic)
                .count(),
            12
        );
    }

    #[test]
    fn two_letter_elements_parse_greedily() {
        let mol = parse_smiles("ClCCBr").unwrap();
        assert_eq!(mol.atoms()[0].element, Element::Cl);
        assert_eq!(mol.atoms()[3].element, Element::Br);
        // 'S' followed by aromatic 'c' must not read as a two-letter symbol
        let mol = parse_smiles("Sc1ccccc1").unwrap();
        assert_eq!(mol.atoms()[0].element, Element::S);
        assert!(mol.atoms()[1].aromatic);
    }

    #[test]
    fn percent_ring_labels() {
        let a = parse_smiles("C%12CCCCC%12").unwrap();
        let b = parse_smiles("C1CCCCC1").unwrap();
        assert_eq!(a.bonds().len(), b.bonds().len());
        assert!(matches!(
            parse_smiles("C%1CCCCC"),
            Err(ChemError::Syntax { .. })
        ));
    }

    #[test]
    fn implicit_hydrogens_follow_default_valence() {
        let mol = parse_smiles("CCO").unwrap();
        assert_eq!(mol.hydrogen_count(0), 3);
        assert_eq!(mol.hydrogen_count(1), 2);
        assert_eq!(mol.hydrogen_count(2), 1);
        // pyridine nitrogen has no hydrogen, aromatic carbons have one
        let mol = parse_smiles("c1ccncc1").unwrap();
        let n = mol
            .atoms()
            .iter()
            .position(|a| a.element == Element::N)
            .unwrap();
        assert_eq!(mol.hydrogen_count(n), 0);
        assert_eq!(mol.hydrogen_count((n + 1) % 6), 1);
    }
}
