//! Heavy-atom molecular graphs parsed from SMILES.
//!
//! A [`Molecule`] is immutable once built: parsing assigns implicit hydrogens
//! and ring perception sets the `in_ring` and aromatic flags. Everything
//! downstream (fingerprints, scaffolds, splits) consumes it read-only.

pub mod elements;
mod rings;
mod scaffold;
mod smiles;

use std::collections::VecDeque;

pub use rings::perceive_rings;
pub use scaffold::{murcko_scaffold, scaffold_key, Scaffold};
pub use smiles::{parse_smiles, ParseError, ParseErrorKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BondOrder {
    Single,
    Double,
    Triple,
    Aromatic,
}

impl BondOrder {
    /// Stable small-integer code used in hashed identifiers.
    pub fn code(self) -> u64 {
        match self {
            BondOrder::Single => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
            BondOrder::Aromatic => 4,
        }
    }

    /// Contribution to the bond-order sum of an endpoint. Aromatic bonds count
    /// as 1; the extra aromatic electron is accounted for per atom.
    pub fn valence(self) -> u8 {
        match self {
            BondOrder::Single | BondOrder::Aromatic => 1,
            BondOrder::Double => 2,
            BondOrder::Triple => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Atom {
    pub atomic_number: u8,
    pub formal_charge: i8,
    pub isotope: Option<u16>,
    /// Hydrogen count written inside a bracket atom; `None` for organic-subset atoms.
    pub explicit_h: Option<u8>,
    pub aromatic: bool,
    /// Hydrogens implied by the valence table. Always 0 for bracket atoms.
    pub implicit_h: u8,
    pub index: usize,
}

impl Atom {
    pub fn is_bracket(&self) -> bool {
        self.explicit_h.is_some()
    }

    pub fn total_h(&self) -> u8 {
        self.implicit_h + self.explicit_h.unwrap_or(0)
    }

    pub fn symbol(&self) -> &'static str {
        elements::symbol(self.atomic_number)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bond {
    /// Endpoints stored with the smaller index first.
    pub atoms: (usize, usize),
    pub order: BondOrder,
    pub in_ring: bool,
}

impl Bond {
    pub fn other(&self, atom: usize) -> usize {
        if self.atoms.0 == atom {
            self.atoms.1
        } else {
            self.atoms.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub atom: usize,
    pub bond: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum GraphError {
    #[error("bond {0} references atom {1} which does not exist")]
    AtomOutOfRange(usize, usize),
    #[error("bond {0} connects atom {1} to itself")]
    SelfBond(usize, usize),
    #[error("atoms {0} and {1} are bonded more than once")]
    DuplicateBond(usize, usize),
    #[error("atomic number {0} is outside 1..=118")]
    InvalidElement(u8),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Molecule {
    atoms: Vec<Atom>,
    bonds: Vec<Bond>,
    adjacency: Vec<Vec<Neighbor>>,
    fragment_of: Vec<usize>,
    fragment_count: usize,
}

impl Molecule {
    /// Builds a molecule from atoms and bonds and perceives rings.
    ///
    /// Atom `index` fields are rewritten to match their position. The
    /// `in_ring` flags on the input bonds are ignored and recomputed.
    pub fn from_parts(mut atoms: Vec<Atom>, bonds: Vec<Bond>) -> Result<Self, GraphError> {
        for (i, atom) in atoms.iter_mut().enumerate() {
            if !(1..=118).contains(&atom.atomic_number) {
                return Err(GraphError::InvalidElement(atom.atomic_number));
            }
            atom.index = i;
        }
        let mut bonds = bonds;
        let mut adjacency = vec![Vec::new(); atoms.len()];
        for (k, bond) in bonds.iter_mut().enumerate() {
            let (a, b) = bond.atoms;
            if a >= atoms.len() || b >= atoms.len() {
                return Err(GraphError::AtomOutOfRange(k, a.max(b)));
            }
            if a == b {
                return Err(GraphError::SelfBond(k, a));
            }
            bond.atoms = (a.min(b), a.max(b));
            if adjacency[a].iter().any(|n: &Neighbor| n.atom == b) {
                return Err(GraphError::DuplicateBond(a.min(b), a.max(b)));
            }
            adjacency[a].push(Neighbor { atom: b, bond: k });
            adjacency[b].push(Neighbor { atom: a, bond: k });
        }
        let (fragment_of, fragment_count) = label_fragments(&adjacency);
        let molecule = Molecule {
            atoms,
            bonds,
            adjacency,
            fragment_of,
            fragment_count,
        };
        Ok(perceive_rings(molecule))
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn bonds(&self) -> &[Bond] {
        &self.bonds
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn neighbors(&self, atom: usize) -> &[Neighbor] {
        &self.adjacency[atom]
    }

    /// Number of heavy-atom neighbors.
    pub fn degree(&self, atom: usize) -> usize {
        self.adjacency[atom].len()
    }

    pub fn bond_between(&self, a: usize, b: usize) -> Option<&Bond> {
        self.adjacency[a]
            .iter()
            .find(|n| n.atom == b)
            .map(|n| &self.bonds[n.bond])
    }

    /// An atom is in a ring iff it is incident to an in-ring bond.
    pub fn atom_in_ring(&self, atom: usize) -> bool {
        self.adjacency[atom]
            .iter()
            .any(|n| self.bonds[n.bond].in_ring)
    }

    pub fn ring_bond_count(&self) -> usize {
        self.bonds.iter().filter(|b| b.in_ring).count()
    }

    pub fn fragment_count(&self) -> usize {
        self.fragment_count
    }

    /// Connected-component label of each atom, numbered by first atom.
    pub fn fragment_of(&self, atom: usize) -> usize {
        self.fragment_of[atom]
    }

    /// Pi-electron surrogate: 1 per double bond, 2 per triple bond, 1 if aromatic.
    pub fn pi_electrons(&self, atom: usize) -> u8 {
        let bonds: u8 = self.adjacency[atom]
            .iter()
            .map(|n| match self.bonds[n.bond].order {
                BondOrder::Double => 1,
                BondOrder::Triple => 2,
                _ => 0,
            })
            .sum();
        bonds + u8::from(self.atoms[atom].aromatic)
    }

    /// The sub-molecule made of the given atoms (in the given order) and the
    /// bonds among them. Non-bracket atoms regain hydrogens for each bond
    /// order lost to a removed neighbor.
    pub fn induced_subgraph(&self, keep: &[usize]) -> Molecule {
        let mut new_index = vec![usize::MAX; self.atoms.len()];
        for (i, &a) in keep.iter().enumerate() {
            new_index[a] = i;
        }
        let atoms = keep
            .iter()
            .map(|&a| {
                let mut atom = self.atoms[a].clone();
                if !atom.is_bracket() {
                    let lost: u8 = self.adjacency[a]
                        .iter()
                        .filter(|n| new_index[n.atom] == usize::MAX)
                        .map(|n| self.bonds[n.bond].order.valence())
                        .sum();
                    atom.implicit_h += lost;
                }
                atom
            })
            .collect();
        let bonds = self
            .bonds
            .iter()
            .filter(|b| new_index[b.atoms.0] != usize::MAX && new_index[b.atoms.1] != usize::MAX)
            .map(|b| Bond {
                atoms: (new_index[b.atoms.0], new_index[b.atoms.1]),
                order: b.order,
                in_ring: false,
            })
            .collect();
        Molecule::from_parts(atoms, bonds).expect("subgraph of a valid molecule is valid")
    }

    /// The fragment with the most heavy atoms; ties go to the earlier fragment.
    pub fn largest_fragment(&self) -> Molecule {
        if self.fragment_count <= 1 {
            return self.clone();
        }
        let mut sizes = vec![0usize; self.fragment_count];
        for &f in &self.fragment_of {
            sizes[f] += 1;
        }
        let best = (0..self.fragment_count)
            .max_by(|&a, &b| sizes[a].cmp(&sizes[b]).then(b.cmp(&a)))
            .unwrap_or(0);
        let keep: Vec<usize> = (0..self.atoms.len())
            .filter(|&a| self.fragment_of[a] == best)
            .collect();
        self.induced_subgraph(&keep)
    }

    pub(crate) fn with_ring_flags(mut self, atoms: Vec<Atom>, bonds: Vec<Bond>) -> Molecule {
        self.atoms = atoms;
        self.bonds = bonds;
        self
    }
}

fn label_fragments(adjacency: &[Vec<Neighbor>]) -> (Vec<usize>, usize) {
    let mut label = vec![usize::MAX; adjacency.len()];
    let mut count = 0;
    let mut queue = VecDeque::new();
    for start in 0..adjacency.len() {
        if label[start] != usize::MAX {
            continue;
        }
        label[start] = count;
        queue.push_back(start);
        while let Some(a) = queue.pop_front() {
            for n in &adjacency[a] {
                if label[n.atom] == usize::MAX {
                    label[n.atom] = count;
                    queue.push_back(n.atom);
                }
            }
        }
        count += 1;
    }
    (label, count)
}

/// Sentinel hop count for atoms in different fragments.
pub const UNREACHABLE: u32 = u32::MAX;

/// All-pairs topological distances in bonds.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    hops: Vec<u32>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Raw hop count, [`UNREACHABLE`] across fragments.
    pub fn raw(&self, i: usize, j: usize) -> u32 {
        self.hops[i * self.n + j]
    }

    pub fn get(&self, i: usize, j: usize) -> Option<u32> {
        match self.raw(i, j) {
            UNREACHABLE => None,
            d => Some(d),
        }
    }
}

/// Breadth-first search from every atom.
pub fn shortest_path_distances(m: &Molecule) -> DistanceMatrix {
    let n = m.atom_count();
    let mut hops = vec![UNREACHABLE; n * n];
    let mut queue = VecDeque::new();
    for source in 0..n {
        let row = &mut hops[source * n..(source + 1) * n];
        row[source] = 0;
        queue.push_back(source);
        while let Some(a) = queue.pop_front() {
            let next = row[a] + 1;
            for nb in m.neighbors(a) {
                if row[nb.atom] == UNREACHABLE {
                    row[nb.atom] = next;
                    queue.push_back(nb.atom);
                }
            }
        }
    }
    DistanceMatrix { n, hops }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distances_on_chain() {
        let m = parse_smiles("CCO").unwrap();
        let d = shortest_path_distances(&m);
        assert_eq!(d.get(0, 2), Some(2));
        assert_eq!(d.get(2, 0), Some(2));
        assert_eq!(d.get(1, 1), Some(0));
    }

    #[test]
    fn distances_on_triangle() {
        let m = parse_smiles("C1CC1").unwrap();
        let d = shortest_path_distances(&m);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), Some(u32::from(i != j)));
            }
        }
    }

    #[test]
    fn distances_across_fragments() {
        let m = parse_smiles("[Na+].[Cl-]").unwrap();
        let d = shortest_path_distances(&m);
        assert_eq!(d.get(0, 1), None);
        assert_eq!(d.raw(1, 0), UNREACHABLE);
    }

    #[test]
    fn distance_matrix_is_symmetric() {
        let m = parse_smiles("CC(C)c1ccc2ccccc2c1CCN.O").unwrap();
        let d = shortest_path_distances(&m);
        for i in 0..d.len() {
            for j in 0..d.len() {
                assert_eq!(d.raw(i, j), d.raw(j, i));
            }
        }
    }

    #[test]
    fn largest_fragment_keeps_bigger_component() {
        let m = parse_smiles("[Na+].OC(=O)c1ccccc1").unwrap();
        assert_eq!(m.fragment_count(), 2);
        let big = m.largest_fragment();
        assert_eq!(big.atom_count(), 9);
        assert_eq!(big.fragment_count(), 1);
    }

    #[test]
    fn from_parts_rejects_duplicate_bonds() {
        let atom = |i| Atom {
            atomic_number: 6,
            formal_charge: 0,
            isotope: None,
            explicit_h: None,
            aromatic: false,
            implicit_h: 0,
            index: i,
        };
        let bond = |a, b| Bond {
            atoms: (a, b),
            order: BondOrder::Single,
            in_ring: false,
        };
        let err = Molecule::from_parts(vec![atom(0), atom(1)], vec![bond(0, 1), bond(1, 0)]);
        assert_eq!(err.unwrap_err(), GraphError::DuplicateBond(0, 1));
        let err = Molecule::from_parts(vec![atom(0)], vec![bond(0, 0)]);
        assert_eq!(err.unwrap_err(), GraphError::SelfBond(0, 0));
    }
}
