use std::collections::{HashSet, VecDeque};

use super::{BondOrder, Molecule};
use crate::hash::StableHasher;

/// A Bemis–Murcko core: ring systems plus the linkers between them, with
/// exocyclic double/triple-bonded atoms kept on retained atoms.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Scaffold {
    pub molecule: Molecule,
    pub key: u64,
}

impl Scaffold {
    pub fn is_empty(&self) -> bool {
        self.molecule.is_empty()
    }
}

/// Prunes side chains down to ring systems and linkers.
///
/// Non-ring atoms of degree ≤ 1 are deleted until none remain; atoms joined
/// to the surviving core by a double or triple bond are then restored. An
/// acyclic molecule yields the empty scaffold.
pub fn murcko_scaffold(m: &Molecule) -> Scaffold {
    if m.ring_bond_count() == 0 {
        let molecule = Molecule::from_parts(Vec::new(), Vec::new()).expect("empty graph");
        return Scaffold { molecule, key: 0 };
    }
    let n = m.atom_count();
    let mut degree: Vec<usize> = (0..n).map(|a| m.degree(a)).collect();
    let mut removed = vec![false; n];
    let mut queue: VecDeque<usize> = (0..n)
        .filter(|&a| !m.atom_in_ring(a) && degree[a] <= 1)
        .collect();
    while let Some(a) = queue.pop_front() {
        if removed[a] {
            continue;
        }
        removed[a] = true;
        for nb in m.neighbors(a) {
            if removed[nb.atom] {
                continue;
            }
            degree[nb.atom] -= 1;
            if degree[nb.atom] <= 1 && !m.atom_in_ring(nb.atom) {
                queue.push_back(nb.atom);
            }
        }
    }
    let keep: Vec<usize> = (0..n)
        .filter(|&a| {
            !removed[a]
                || m.neighbors(a).iter().any(|nb| {
                    !removed[nb.atom]
                        && matches!(
                            m.bonds()[nb.bond].order,
                            BondOrder::Double | BondOrder::Triple
                        )
                })
        })
        .collect();
    let molecule = m.induced_subgraph(&keep);
    let key = graph_key(&molecule);
    Scaffold { molecule, key }
}

/// The scaffold's 64-bit grouping key.
pub fn scaffold_key(s: &Scaffold) -> u64 {
    graph_key(&s.molecule)
}

/// Weisfeiler–Lehman refinement to a stable partition, then a hash of the
/// sorted label multiset. Invariant under atom reordering; 0 only for the
/// empty graph.
pub(crate) fn graph_key(m: &Molecule) -> u64 {
    if m.is_empty() {
        return 0;
    }
    let n = m.atom_count();
    let mut labels: Vec<u64> = m
        .atoms()
        .iter()
        .enumerate()
        .map(|(i, a)| {
            StableHasher::new()
                .write_u64(u64::from(a.atomic_number))
                .write_i64(i64::from(a.formal_charge))
                .write_u64(u64::from(a.isotope.unwrap_or(0)))
                .write_u64(u64::from(a.aromatic))
                .write_u64(u64::from(a.total_h()))
                .write_u64(m.degree(i) as u64)
                .write_u64(u64::from(m.atom_in_ring(i)))
                .finish()
        })
        .collect();
    let mut classes = distinct(&labels);
    for _ in 0..n {
        let next: Vec<u64> = (0..n)
            .map(|i| {
                let mut env: Vec<(u64, u64)> = m
                    .neighbors(i)
                    .iter()
                    .map(|nb| (m.bonds()[nb.bond].order.code(), labels[nb.atom]))
                    .collect();
                env.sort_unstable();
                let mut h = StableHasher::new();
                h.write_u64(labels[i]);
                for (code, label) in env {
                    h.write_u64(code).write_u64(label);
                }
                h.finish()
            })
            .collect();
        let next_classes = distinct(&next);
        labels = next;
        if next_classes == classes {
            break;
        }
        classes = next_classes;
    }
    labels.sort_unstable();
    let mut h = StableHasher::new();
    h.write_u64(n as u64).write_u64(m.bonds().len() as u64);
    h.write_all(&labels);
    match h.finish() {
        0 => 1,
        k => k,
    }
}

fn distinct(labels: &[u64]) -> usize {
    labels.iter().collect::<HashSet<_>>().len()
}
