use std::collections::BTreeMap;

use super::{Atom, Bond, BondOrder, MolGraph, SmilesError};

const ELEMENTS: [&str; 118] = [
    "H", "He", "Li", "Be", "B", "C", "N", "O", "F", "Ne", "Na", "Mg", "Al", "Si", "P", "S", "Cl", "Ar", "K",
    "Ca", "Sc", "Ti", "V", "Cr", "Mn", "Fe", "Co", "Ni", "Cu", "Zn", "Ga", "Ge", "As", "Se", "Br", "Kr",
    "Rb", "Sr", "Y", "Zr", "Nb", "Mo", "Tc", "Ru", "Rh", "Pd", "Ag", "Cd", "In", "Sn", "Sb", "Te", "I", "Xe",
    "Cs", "Ba", "La", "Ce", "Pr", "Nd", "Pm", "Sm", "Eu", "Gd", "Tb", "Dy", "Ho", "Er", "Tm", "Yb", "Lu",
    "Hf", "Ta", "W", "Re", "Os", "Ir", "Pt", "Au", "Hg", "Tl", "Pb", "Bi", "Po", "At", "Rn", "Fr", "Ra",
    "Ac", "Th", "Pa", "U", "Np", "Pu", "Am", "Cm", "Bk", "Cf", "Es", "Fm", "Md", "No", "Lr", "Rf", "Db",
    "Sg", "Bh", "Hs", "Mt", "Ds", "Rg", "Cn", "Nh", "Fl", "Mc", "Lv", "Ts", "Og",
];

const BRACKET_AROMATIC: [&str; 9] = ["se", "as", "te", "b", "c", "n", "o", "p", "s"];

fn capitalize(sym: &str) -> String {
    let mut c = sym.chars();
    c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
}

struct RingOpen {
    atom: usize,
    order: Option<BondOrder>,
    pos: usize,
}

struct Parser<'a> {
    s: &'a [u8],
    i: usize,
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    prev: Option<usize>,
    pending: Option<(BondOrder, usize)>,
    branches: Vec<(usize, Option<usize>)>,
    rings: BTreeMap<u32, RingOpen>,
}

/// Parses a SMILES string into a [`MolGraph`]. Error positions are byte
/// offsets into `s`.
pub fn parse_smiles(s: &str) -> Result<MolGraph, SmilesError> {
    if s.is_empty() {
        return Err(SmilesError::Empty);
    }
    let mut p = Parser {
        s: s.as_bytes(),
        i: 0,
        atoms: Vec::new(),
        bonds: Vec::new(),
        prev: None,
        pending: None,
        branches: Vec::new(),
        rings: BTreeMap::new(),
    };
    p.run()?;
    Ok(MolGraph::new(p.atoms, p.bonds, s).expect("parser emits valid bonds"))
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.s.get(self.i).copied()
    }

    fn run(&mut self) -> Result<(), SmilesError> {
        while let Some(c) = self.peek() {
            let pos = self.i;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return Err(SmilesError::Syntax { pos, message: "branch without a preceding atom" });
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::Syntax { pos, message: "bond before branch" });
                    }
                    self.branches.push((pos, Some(prev)));
                    self.i += 1;
                }
                b')' => {
                    let Some((_, atom)) = self.branches.pop() else {
                        return Err(SmilesError::UnmatchedParen { pos });
                    };
                    if self.pending.is_some() {
                        return Err(SmilesError::Syntax { pos, message: "dangling bond" });
                    }
                    if self.s.get(pos.wrapping_sub(1)) == Some(&b'(') {
                        return Err(SmilesError::Syntax { pos, message: "empty branch" });
                    }
                    self.prev = atom;
                    self.i += 1;
                }
                b'.' => {
                    if self.pending.is_some() || self.prev.is_none() {
                        return Err(SmilesError::Syntax { pos, message: "misplaced dot" });
                    }
                    self.prev = None;
                    self.i += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.pending.is_some() {
                        return Err(SmilesError::Syntax { pos, message: "two bond symbols in a row" });
                    }
                    if self.prev.is_none() {
                        return Err(SmilesError::Syntax { pos, message: "bond without a preceding atom" });
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((order, pos));
                    self.i += 1;
                }
                b'$' => return Err(SmilesError::UnsupportedFeature { pos, feature: "quadruple bond" }),
                b'0'..=b'9' => {
                    self.i += 1;
                    self.ring_closure(u32::from(c - b'0'), pos)?;
                }
                b'%' => {
                    let digits = self.s.get(pos + 1..pos + 3).filter(|d| d.iter().all(u8::is_ascii_digit));
                    let Some(d) = digits else {
                        return Err(SmilesError::Syntax { pos, message: "'%' needs two digits" });
                    };
                    let n = u32::from(d[0] - b'0') * 10 + u32::from(d[1] - b'0');
                    self.i += 3;
                    self.ring_closure(n, pos)?;
                }
                b'[' => {
                    let atom = self.bracket_atom()?;
                    self.add_atom(atom, pos)?;
                }
                _ => {
                    let atom = self.organic_atom()?;
                    self.add_atom(atom, pos)?;
                }
            }
        }
        if let Some((pos, _)) = self.branches.first() {
            return Err(SmilesError::UnmatchedParen { pos: *pos });
        }
        if let Some((_, pos)) = self.pending {
            return Err(SmilesError::Syntax { pos, message: "dangling bond" });
        }
        if let Some(open) = self.rings.values().min_by_key(|r| r.pos) {
            return Err(SmilesError::UnpairedRingClosure { pos: open.pos });
        }
        Ok(())
    }

    fn implicit_order(&self, a: usize, b: usize) -> BondOrder {
        if self.atoms[a].aromatic && self.atoms[b].aromatic {
            BondOrder::Aromatic
        } else {
            BondOrder::Single
        }
    }

    fn connect(&mut self, a: usize, b: usize, order: BondOrder, pos: usize) -> Result<(), SmilesError> {
        if a == b {
            return Err(SmilesError::InvalidBond { pos, message: "atom bonded to itself" });
        }
        if self.bonds.iter().any(|x| (x.a == a && x.b == b) || (x.a == b && x.b == a)) {
            return Err(SmilesError::InvalidBond { pos, message: "duplicate bond" });
        }
        self.bonds.push(Bond { a, b, order });
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, pos: usize) -> Result<(), SmilesError> {
        let idx = self.atoms.len();
        self.atoms.push(atom);
        if let Some(prev) = self.prev {
            let order = match self.pending.take() {
                Some((o, _)) => o,
                None => self.implicit_order(prev, idx),
            };
            self.connect(prev, idx, order, pos)?;
        }
        self.prev = Some(idx);
        Ok(())
    }

    fn ring_closure(&mut self, n: u32, pos: usize) -> Result<(), SmilesError> {
        let Some(atom) = self.prev else {
            return Err(SmilesError::Syntax { pos, message: "ring closure without a preceding atom" });
        };
        let order = self.pending.take().map(|(o, _)| o);
        match self.rings.remove(&n) {
            None => {
                self.rings.insert(n, RingOpen { atom, order, pos });
            }
            Some(open) => {
                let order = match (open.order, order) {
                    (Some(a), Some(b)) if a != b => return Err(SmilesError::ConflictingRingBond { pos }),
                    (Some(a), _) | (None, Some(a)) => a,
                    (None, None) => self.implicit_order(open.atom, atom),
                };
                self.connect(open.atom, atom, order, pos)?;
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<Atom, SmilesError> {
        let pos = self.i;
        let c = self.s[pos];
        let next = self.s.get(pos + 1).copied();
        let (sym, aromatic, len) = match (c, next) {
            (b'C', Some(b'l')) => ("Cl", false, 2),
            (b'B', Some(b'r')) => ("Br", false, 2),
            (b'B' | b'C' | b'N' | b'O' | b'P' | b'S' | b'F' | b'I', _) => {
                (std::str::from_utf8(&self.s[pos..pos + 1]).unwrap(), false, 1)
            }
            (b'b' | b'c' | b'n' | b'o' | b'p' | b's', _) => {
                (std::str::from_utf8(&self.s[pos..pos + 1]).unwrap(), true, 1)
            }
            (b'*', _) => return Err(SmilesError::UnsupportedFeature { pos, feature: "wildcard atom" }),
            _ => {
                let end = (pos + 1..=self.s.len()).find(|&e| std::str::from_utf8(&self.s[pos..e]).is_ok());
                let symbol = String::from_utf8_lossy(&self.s[pos..end.unwrap_or(pos + 1)]).into_owned();
                return Err(SmilesError::UnknownAtom { pos, symbol });
            }
        };
        self.i += len;
        Ok(Atom::new(capitalize(sym), aromatic, 0))
    }

    fn bracket_atom(&mut self) -> Result<Atom, SmilesError> {
        let open = self.i;
        self.i += 1;
        match self.peek() {
            Some(b'0'..=b'9') => {
                return Err(SmilesError::UnsupportedFeature { pos: self.i, feature: "isotope" })
            }
            Some(b'*') => {
                return Err(SmilesError::UnsupportedFeature { pos: self.i, feature: "wildcard atom" })
            }
            None => return Err(SmilesError::Syntax { pos: open, message: "unterminated bracket atom" }),
            _ => {}
        }
        let sym_pos = self.i;
        let rest = &self.s[sym_pos..];
        let two = rest.get(..2).and_then(|b| std::str::from_utf8(b).ok());
        let one = rest.get(..1).and_then(|b| std::str::from_utf8(b).ok());
        let (element, aromatic, len) = if rest[0].is_ascii_lowercase() {
            match [two, one].into_iter().flatten().find(|s| BRACKET_AROMATIC.contains(s)) {
                Some(s) => (capitalize(s), true, s.len()),
                None => {
                    return Err(SmilesError::UnknownAtom {
                        pos: sym_pos,
                        symbol: one.unwrap_or("?").to_string(),
                    })
                }
            }
        } else {
            match [two, one].into_iter().flatten().find(|s| ELEMENTS.contains(s)) {
                Some(s) => (s.to_string(), false, s.len()),
                None => {
                    let symbol = two.filter(|t| t.as_bytes()[1].is_ascii_lowercase()).or(one).unwrap_or("?");
                    return Err(SmilesError::UnknownAtom { pos: sym_pos, symbol: symbol.to_string() });
                }
            }
        };
        self.i += len;

        // chirality: @, @@, @TH1, @SP2, @OH12 ...
        if self.peek() == Some(b'@') {
            while self.peek() == Some(b'@') {
                self.i += 1;
            }
            if self
                .s
                .get(self.i..self.i + 2)
                .is_some_and(|t| matches!(t, b"TH" | b"AL" | b"SP" | b"TB" | b"OH"))
            {
                self.i += 2;
                while self.peek().is_some_and(|c| c.is_ascii_digit()) {
                    self.i += 1;
                }
            }
        }
        let mut hydrogens = None;
        if self.peek() == Some(b'H') {
            self.i += 1;
            hydrogens = Some(self.digits().unwrap_or(1));
        }
        let mut charge = 0i32;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.i += 1;
            charge = match self.digits() {
                Some(n) => unit * n as i32,
                None => {
                    let mut n = 1;
                    while self.peek() == Some(sign) {
                        self.i += 1;
                        n += 1;
                    }
                    unit * n
                }
            };
        }
        match self.peek() {
            Some(b']') => self.i += 1,
            Some(b':') => return Err(SmilesError::UnsupportedFeature { pos: self.i, feature: "atom class" }),
            Some(_) => {
                return Err(SmilesError::Syntax {
                    pos: self.i,
                    message: "unexpected character in bracket atom",
                })
            }
            None => return Err(SmilesError::Syntax { pos: open, message: "unterminated bracket atom" }),
        }
        Ok(Atom { element, aromatic, charge, hydrogens, in_ring: false })
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.i;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) && self.i - start < 3 {
            self.i += 1;
        }
        (self.i > start).then(|| std::str::from_utf8(&self.s[start..self.i]).unwrap().parse().unwrap())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn err(s: &str) -> (&'static str, Option<usize>) {
        let e = parse_smiles(s).unwrap_err();
        (e.code(), e.position())
    }

    #[test]
    fn ethanol() {
        let g = parse_smiles("CCO").unwrap();
        assert_eq!(g.atom_count(), 3);
        assert_eq!(g.bonds().len(), 2);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Single));
        assert!(g.atoms().iter().all(|a| !a.in_ring));
        assert_eq!(g.atoms()[2].element, "O");
    }

    #[test]
    fn benzene() {
        let g = parse_smiles("c1ccccc1").unwrap();
        assert_eq!(g.atom_count(), 6);
        assert_eq!(g.bonds().len(), 6);
        assert!(g.bonds().iter().all(|b| b.order == BondOrder::Aromatic));
        assert!(g.atoms().iter().all(|a| a.aromatic && a.in_ring && a.element == "C"));
    }

    #[test]
    fn branches_two_letter_atoms_and_multiple_bonds() {
        let g = parse_smiles("ClC(Br)(=O)C#N").unwrap();
        let el: Vec<&str> = g.atoms().iter().map(|a| a.element.as_str()).collect();
        assert_eq!(el, ["Cl", "C", "Br", "O", "C", "N"]);
        let orders: Vec<BondOrder> = g.bonds().iter().map(|b| b.order).collect();
        use BondOrder::*;
        assert_eq!(orders, [Single, Single, Double, Single, Triple]);
        assert_eq!(g.bonds()[3], Bond { a: 1, b: 4, order: Single });
    }

    #[test]
    fn bracket_atoms() {
        let g = parse_smiles("[nH]1cc[n+](C)c1.[O-][Fe+2].[CH3][C@@H](N)O").unwrap();
        let a = g.atoms();
        assert_eq!((a[0].element.as_str(), a[0].aromatic, a[0].hydrogens), ("N", true, Some(1)));
        assert_eq!(a[3].charge, 1);
        assert_eq!(a[6].charge, -1);
        assert_eq!((a[7].element.as_str(), a[7].charge), ("Fe", 2));
        assert_eq!(a[8].hydrogens, Some(3));
        assert_eq!(parse_smiles("[Se]").unwrap().atoms()[0].element, "Se");
        assert_eq!(parse_smiles("[se]1cccc1").unwrap().atoms()[0].aromatic, true);
        assert_eq!(parse_smiles("[N++]").unwrap().atoms()[0].charge, 2);
        assert_eq!(parse_smiles("[O--]").unwrap().atoms()[0].charge, -2);
    }

    #[test]
    fn stereo_marks_are_dropped() {
        let a = parse_smiles("F/C=C/F").unwrap();
        let b = parse_smiles("FC=CF").unwrap();
        assert_eq!(a.bonds(), b.bonds());
        let c = parse_smiles("N[C@@H](C)C(=O)O").unwrap();
        assert_eq!(c.atom_count(), 6);
    }

    #[test]
    fn ring_closure_forms() {
        let g = parse_smiles("C%12CCCCC%12").unwrap();
        assert!(g.atoms().iter().all(|a| a.in_ring));
        let g = parse_smiles("C=1CCCCC1").unwrap();
        assert_eq!(g.bonds().last().unwrap().order, BondOrder::Double);
        let g = parse_smiles("C1CCCCC=1").unwrap();
        assert_eq!(g.bonds().last().unwrap().order, BondOrder::Double);
        // digits are reusable after closing
        let g = parse_smiles("C1CC1C1CC1").unwrap();
        assert_eq!(g.bonds().len(), 7);
        // closure between aromatic atoms with an explicit single bond
        let g = parse_smiles("c1ccc2c(c1)-c1ccccc1-2").unwrap();
        assert_eq!(g.bonds().iter().filter(|b| b.order == BondOrder::Single).count(), 2);
    }

    #[test]
    fn error_codes_and_positions() {
        assert_eq!(err("C1CC"), ("UNPAIRED_RING_CLOSURE", Some(1)));
        assert_eq!(err("CC(C"), ("UNMATCHED_PAREN", Some(2)));
        assert_eq!(err("CC)C"), ("UNMATCHED_PAREN", Some(2)));
        assert_eq!(err("CXC"), ("UNKNOWN_ATOM", Some(1)));
        assert_eq!(err("C[Xx]"), ("UNKNOWN_ATOM", Some(2)));
        assert_eq!(err("[13CH4]"), ("UNSUPPORTED_FEATURE", Some(1)));
        assert_eq!(err("C*"), ("UNSUPPORTED_FEATURE", Some(1)));
        assert_eq!(err("[CH3:1]C"), ("UNSUPPORTED_FEATURE", Some(4)));
        assert_eq!(err("C$C"), ("UNSUPPORTED_FEATURE", Some(1)));
        assert_eq!(err("C11"), ("INVALID_BOND", Some(2)));
        assert_eq!(err("C12CC12"), ("INVALID_BOND", Some(6)));
        assert_eq!(err("C=1CCC#1"), ("CONFLICTING_RING_BOND", Some(7)));
        assert_eq!(err("C="), ("SYNTAX_ERROR", Some(1)));
        assert_eq!(err("(C)"), ("SYNTAX_ERROR", Some(0)));
        assert_eq!(err("C[C"), ("SYNTAX_ERROR", Some(1)));
        assert_eq!(err(""), ("EMPTY", None));
        assert_eq!(err("Cé"), ("UNKNOWN_ATOM", Some(1)));
    }

    proptest! {
        #[test]
        fn arbitrary_text_never_panics(s in "[CNOcn()=#1-3%\\[\\]@+H.]{0,20}") {
            if let Ok(g) = parse_smiles(&s) {
                for b in g.bonds() {
                    prop_assert!(b.a < g.atom_count() && b.b < g.atom_count() && b.a != b.b);
                }
            }
        }
    }
}
