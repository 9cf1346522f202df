//! A SMILES reader for the subset used by property-prediction datasets:
//! organic-subset and bracket atoms, branches, ring closures (including
//! `%nn`), the bond symbols `- = # : / \`, aromatic lowercase atoms and
//! dot-separated fragments. Stereo markers are accepted and dropped.

use std::collections::BTreeMap;
use std::fmt;

use super::elements::{aromatic_symbol, atomic_number, default_valences, organic_subset, symbol};
use super::{Atom, Bond, BondOrder, Molecule};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    EmptyInput,
    NonAscii,
    UnexpectedCharacter(char),
    UnclosedRing(u16),
    UnmatchedParenthesis,
    UnknownElement(String),
    ValenceOverflow { symbol: &'static str, valence: u8 },
    EmptyFragment,
    InvalidBracketAtom,
    RingBondConflict(u16),
    InvalidRingClosure(u16),
    DanglingBond,
}

impl fmt::Display for ParseErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParseErrorKind::EmptyInput => write!(f, "empty input"),
            ParseErrorKind::NonAscii => write!(f, "non-ASCII character"),
            ParseErrorKind::UnexpectedCharacter(c) => write!(f, "unexpected character '{c}'"),
            ParseErrorKind::UnclosedRing(n) => write!(f, "ring bond {n} is never closed"),
            ParseErrorKind::UnmatchedParenthesis => write!(f, "unmatched parenthesis"),
            ParseErrorKind::UnknownElement(s) => write!(f, "unknown element symbol '{s}'"),
            ParseErrorKind::ValenceOverflow { symbol, valence } => {
                write!(
                    f,
                    "bond order sum {valence} exceeds the valences allowed for {symbol}"
                )
            }
            ParseErrorKind::EmptyFragment => write!(f, "empty fragment"),
            ParseErrorKind::InvalidBracketAtom => write!(f, "malformed bracket atom"),
            ParseErrorKind::RingBondConflict(n) => {
                write!(f, "ring bond {n} has conflicting bond symbols")
            }
            ParseErrorKind::InvalidRingClosure(n) => {
                write!(
                    f,
                    "ring bond {n} closes onto an atom it is already bonded to"
                )
            }
            ParseErrorKind::DanglingBond => write!(f, "bond symbol is not followed by an atom"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{kind} at offset {offset}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub offset: usize,
}

fn err<T>(kind: ParseErrorKind, offset: usize) -> Result<T, ParseError> {
    Err(ParseError { kind, offset })
}

fn malformed<T>(offset: usize) -> Result<T, ParseError> {
    err(ParseErrorKind::InvalidBracketAtom, offset)
}

struct RawBond {
    a: usize,
    b: usize,
    order: Option<BondOrder>,
}

struct OpenRing {
    atom: usize,
    order: Option<BondOrder>,
    offset: usize,
}

struct Parser<'a> {
    text: &'a [u8],
    pos: usize,
    atoms: Vec<Atom>,
    atom_offsets: Vec<usize>,
    bonds: Vec<RawBond>,
    rings: BTreeMap<u16, OpenRing>,
    branches: Vec<(usize, usize)>,
    prev: Option<usize>,
    pending: Option<(Option<BondOrder>, usize)>,
    dot: Option<usize>,
}

/// Parses SMILES into a molecule with implicit hydrogens and perceived rings.
pub fn parse_smiles(text: &str) -> Result<Molecule, ParseError> {
    if text.is_empty() {
        return err(ParseErrorKind::EmptyInput, 0);
    }
    if let Some(pos) = text.bytes().position(|b| !b.is_ascii()) {
        return err(ParseErrorKind::NonAscii, pos);
    }
    let mut p = Parser {
        text: text.as_bytes(),
        pos: 0,
        atoms: Vec::new(),
        atom_offsets: Vec::new(),
        bonds: Vec::new(),
        rings: BTreeMap::new(),
        branches: Vec::new(),
        prev: None,
        pending: None,
        dot: None,
    };
    p.run()?;
    p.finish()
}

impl Parser<'_> {
    fn peek(&self) -> Option<u8> {
        self.text.get(self.pos).copied()
    }

    fn peek_at(&self, ahead: usize) -> Option<u8> {
        self.text.get(self.pos + ahead).copied()
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while let Some(c) = self.peek() {
            let at = self.pos;
            match c {
                b'(' => {
                    let Some(prev) = self.prev else {
                        return err(ParseErrorKind::UnexpectedCharacter('('), at);
                    };
                    if self.pending.is_some() {
                        return err(ParseErrorKind::DanglingBond, at);
                    }
                    if self.peek_at(1) == Some(b')') {
                        return err(ParseErrorKind::UnexpectedCharacter(')'), at + 1);
                    }
                    self.branches.push((prev, at));
                    self.pos += 1;
                }
                b')' => {
                    if self.pending.is_some() {
                        return err(ParseErrorKind::DanglingBond, at);
                    }
                    let Some((atom, _)) = self.branches.pop() else {
                        return err(ParseErrorKind::UnmatchedParenthesis, at);
                    };
                    self.prev = Some(atom);
                    self.pos += 1;
                }
                b'.' => {
                    if self.pending.is_some() {
                        return err(ParseErrorKind::DanglingBond, at);
                    }
                    if self.prev.is_none() {
                        return err(ParseErrorKind::EmptyFragment, at);
                    }
                    self.prev = None;
                    self.dot = Some(at);
                    self.pos += 1;
                }
                b'-' | b'=' | b'#' | b':' | b'/' | b'\\' => {
                    if self.prev.is_none() || self.pending.is_some() {
                        return err(ParseErrorKind::UnexpectedCharacter(c as char), at);
                    }
                    let order = match c {
                        b'=' => BondOrder::Double,
                        b'#' => BondOrder::Triple,
                        b':' => BondOrder::Aromatic,
                        _ => BondOrder::Single,
                    };
                    self.pending = Some((Some(order), at));
                    self.pos += 1;
                }
                b'0'..=b'9' | b'%' => self.ring_closure()?,
                b'[' => self.bracket_atom()?,
                _ => self.organic_atom()?,
            }
        }
        Ok(())
    }

    fn finish(mut self) -> Result<Molecule, ParseError> {
        if let Some((_, at)) = self.pending {
            return err(ParseErrorKind::DanglingBond, at);
        }
        if let Some(&(_, at)) = self.branches.last() {
            return err(ParseErrorKind::UnmatchedParenthesis, at);
        }
        if let Some((&num, ring)) = self.rings.iter().next() {
            return err(ParseErrorKind::UnclosedRing(num), ring.offset);
        }
        if let Some(at) = self.dot {
            return err(ParseErrorKind::EmptyFragment, at);
        }

        let bonds: Vec<Bond> = self
            .bonds
            .iter()
            .map(|raw| {
                let order = raw.order.unwrap_or(
                    if self.atoms[raw.a].aromatic && self.atoms[raw.b].aromatic {
                        BondOrder::Aromatic
                    } else {
                        BondOrder::Single
                    },
                );
                Bond {
                    atoms: (raw.a.min(raw.b), raw.a.max(raw.b)),
                    order,
                    in_ring: false,
                }
            })
            .collect();
        self.assign_implicit_hydrogens(&bonds)?;
        Ok(Molecule::from_parts(self.atoms, bonds).expect("parser emits a simple graph"))
    }

    fn assign_implicit_hydrogens(&mut self, bonds: &[Bond]) -> Result<(), ParseError> {
        let mut order_sum = vec![0u8; self.atoms.len()];
        let mut has_multiple = vec![false; self.atoms.len()];
        for bond in bonds {
            for end in [bond.atoms.0, bond.atoms.1] {
                order_sum[end] = order_sum[end].saturating_add(bond.order.valence());
                has_multiple[end] |= matches!(bond.order, BondOrder::Double | BondOrder::Triple);
            }
        }
        for (i, atom) in self.atoms.iter_mut().enumerate() {
            if atom.is_bracket() {
                continue;
            }
            let Some(valences) = default_valences(atom.atomic_number) else {
                continue;
            };
            // Aromatic B/C/N/P contribute one electron to the ring unless they are
            // already saturated (e.g. N-substituted pyrrole nitrogen, which donates
            // its lone pair like O and S).
            let mut used = order_sum[i];
            let max = *valences.last().expect("non-empty valence list");
            if atom.aromatic
                && !has_multiple[i]
                && matches!(atom.atomic_number, 5 | 6 | 7 | 15)
                && used < max
            {
                used += 1;
            }
            match valences.iter().find(|&&v| v >= used) {
                Some(&v) => atom.implicit_h = v - used,
                None => {
                    return err(
                        ParseErrorKind::ValenceOverflow {
                            symbol: symbol(atom.atomic_number),
                            valence: used,
                        },
                        self.atom_offsets[i],
                    )
                }
            }
        }
        Ok(())
    }

    fn add_atom(&mut self, atom: Atom, offset: usize) {
        let idx = self.atoms.len();
        self.atoms.push(Atom { index: idx, ..atom });
        self.atom_offsets.push(offset);
        if let Some(prev) = self.prev {
            let order = self.pending.take().and_then(|(o, _)| o);
            self.bonds.push(RawBond {
                a: prev,
                b: idx,
                order,
            });
        }
        self.prev = Some(idx);
        self.dot = None;
    }

    fn ring_closure(&mut self) -> Result<(), ParseError> {
        let at = self.pos;
        let Some(prev) = self.prev else {
            return err(
                ParseErrorKind::UnexpectedCharacter(self.text[at] as char),
                at,
            );
        };
        let number = if self.text[at] == b'%' {
            match (self.peek_at(1), self.peek_at(2)) {
                (Some(a @ b'0'..=b'9'), Some(b @ b'0'..=b'9')) => {
                    self.pos += 3;
                    u16::from(a - b'0') * 10 + u16::from(b - b'0')
                }
                _ => return err(ParseErrorKind::UnexpectedCharacter('%'), at),
            }
        } else {
            self.pos += 1;
            u16::from(self.text[at] - b'0')
        };
        let order = self.pending.take().and_then(|(o, _)| o);
        match self.rings.remove(&number) {
            Some(open) => {
                let order = match (open.order, order) {
                    (Some(a), Some(b)) if a != b => {
                        return err(ParseErrorKind::RingBondConflict(number), at)
                    }
                    (a, b) => a.or(b),
                };
                let duplicate = self.bonds.iter().any(|b| {
                    (b.a == open.atom && b.b == prev) || (b.a == prev && b.b == open.atom)
                });
                if open.atom == prev || duplicate {
                    return err(ParseErrorKind::InvalidRingClosure(number), at);
                }
                self.bonds.push(RawBond {
                    a: open.atom,
                    b: prev,
                    order,
                });
            }
            None => {
                self.rings.insert(
                    number,
                    OpenRing {
                        atom: prev,
                        order,
                        offset: at,
                    },
                );
            }
        }
        Ok(())
    }

    fn organic_atom(&mut self) -> Result<(), ParseError> {
        let at = self.pos;
        let c = self.text[at];
        if !c.is_ascii_alphabetic() {
            if c == b'*' {
                return err(ParseErrorKind::UnknownElement("*".into()), at);
            }
            return err(ParseErrorKind::UnexpectedCharacter(c as char), at);
        }
        let two = self
            .text
            .get(at..at + 2)
            .and_then(|s| std::str::from_utf8(s).ok());
        let (z, aromatic, len) = if let Some(z) = two.and_then(organic_subset) {
            (z, false, 2)
        } else {
            let one = std::str::from_utf8(&self.text[at..at + 1]).expect("ascii");
            if let Some(z) = organic_subset(one) {
                (z, false, 1)
            } else if let Some(z) = aromatic_symbol(one, false) {
                (z, true, 1)
            } else {
                let end = if c.is_ascii_uppercase()
                    && self.peek_at(1).is_some_and(|b| b.is_ascii_lowercase())
                {
                    2
                } else {
                    1
                };
                let sym = String::from_utf8_lossy(&self.text[at..at + end]).into_owned();
                return err(ParseErrorKind::UnknownElement(sym), at);
            }
        };
        self.pos += len;
        self.add_atom(
            Atom {
                atomic_number: z,
                formal_charge: 0,
                isotope: None,
                explicit_h: None,
                aromatic,
                implicit_h: 0,
                index: 0,
            },
            at,
        );
        Ok(())
    }

    fn digits(&mut self) -> Option<u32> {
        let start = self.pos;
        while self.peek().is_some_and(|b| b.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return None;
        }
        std::str::from_utf8(&self.text[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
    }

    fn bracket_atom(&mut self) -> Result<(), ParseError> {
        let open = self.pos;
        self.pos += 1;

        let isotope = match self.digits() {
            Some(0) => return malformed(open),
            Some(n) => match u16::try_from(n) {
                Ok(n) => Some(n),
                Err(_) => return malformed(open),
            },
            None => None,
        };

        let sym_at = self.pos;
        let Some(first) = self.peek() else {
            return malformed(open);
        };
        let (z, aromatic) = if first.is_ascii_lowercase() {
            let two = self
                .text
                .get(sym_at..sym_at + 2)
                .and_then(|s| std::str::from_utf8(s).ok())
                .and_then(|s| aromatic_symbol(s, true));
            if let Some(z) = two {
                self.pos += 2;
                (z, true)
            } else if let Some(z) = aromatic_symbol(&(first as char).to_string(), true) {
                self.pos += 1;
                (z, true)
            } else {
                return err(
                    ParseErrorKind::UnknownElement((first as char).to_string()),
                    sym_at,
                );
            }
        } else if first.is_ascii_uppercase() {
            let two = self
                .peek_at(1)
                .filter(|b| b.is_ascii_lowercase())
                .map(|b| format!("{}{}", first as char, b as char));
            if let Some(z) = two.as_deref().and_then(atomic_number) {
                self.pos += 2;
                (z, false)
            } else if let Some(z) = atomic_number(&(first as char).to_string()) {
                self.pos += 1;
                (z, false)
            } else {
                let sym = two.unwrap_or_else(|| (first as char).to_string());
                return err(ParseErrorKind::UnknownElement(sym), sym_at);
            }
        } else if first == b'*' {
            return err(ParseErrorKind::UnknownElement("*".into()), sym_at);
        } else {
            return malformed(sym_at);
        };

        // Chirality: @, @@, or @TH1 / @AL2 / @SP3 / @TB12 / @OH24 style classes.
        if self.peek() == Some(b'@') {
            self.pos += 1;
            if self.peek() == Some(b'@') {
                self.pos += 1;
            } else if let (Some(a), Some(b)) = (self.peek(), self.peek_at(1)) {
                if matches!(&[a, b], b"TH" | b"AL" | b"SP" | b"TB" | b"OH") {
                    self.pos += 2;
                    if self.digits().is_none() {
                        return malformed(open);
                    }
                }
            }
        }

        let mut h = 0u8;
        if self.peek() == Some(b'H') {
            self.pos += 1;
            h = match self.peek() {
                Some(d @ b'0'..=b'9') => {
                    self.pos += 1;
                    d - b'0'
                }
                _ => 1,
            };
        }

        let mut charge: i32 = 0;
        if let Some(sign @ (b'+' | b'-')) = self.peek() {
            let unit = if sign == b'+' { 1 } else { -1 };
            self.pos += 1;
            if let Some(n) = self.digits() {
                charge = unit * n as i32;
            } else {
                charge = unit;
                while self.peek() == Some(sign) {
                    self.pos += 1;
                    charge += unit;
                }
            }
            if charge.abs() > 15 {
                return malformed(open);
            }
        }

        if self.peek() == Some(b':') {
            self.pos += 1;
            if self.digits().is_none() {
                return malformed(open);
            }
        }

        if self.peek() != Some(b']') {
            return malformed(self.pos);
        }
        self.pos += 1;
        self.add_atom(
            Atom {
                atomic_number: z,
                formal_charge: charge as i8,
                isotope,
                explicit_h: Some(h),
                aromatic,
                implicit_h: 0,
                index: 0,
            },
            open,
        );
        Ok(())
    }
}
