use super::{BondOrder, Molecule};

/// Sets ring membership and the simplified aromaticity model.
///
/// A bond is in a ring iff it is not a bridge. Lowercase (aromatic) input
/// flags survive only on ring atoms, and aromatic bonds outside rings become
/// single. A six-membered ring of C/N/O/S with strictly alternating single and
/// double bonds is rewritten as aromatic. Fused systems are only handled ring
/// by ring.
pub fn perceive_rings(m: Molecule) -> Molecule {
    let bridges = find_bridges(&m);
    let mut bonds = m.bonds.clone();
    for (k, bond) in bonds.iter_mut().enumerate() {
        bond.in_ring = !bridges[k];
    }
    let mut atoms = m.atoms.clone();

    // Match Kekulé rings against the input orders before rewriting any of them.
    let kekule: Vec<[usize; 6]> = six_cycles(&m, &bonds)
        .into_iter()
        .filter(|cycle| is_alternating_kekule_ring(&m, cycle))
        .collect();
    for cycle in &kekule {
        for k in 0..6 {
            let a = cycle[k];
            let b = cycle[(k + 1) % 6];
            atoms[a].aromatic = true;
            let idx = m
                .neighbors(a)
                .iter()
                .find(|n| n.atom == b)
                .map(|n| n.bond)
                .expect("cycle edge");
            bonds[idx].order = BondOrder::Aromatic;
        }
    }

    for bond in bonds.iter_mut() {
        if bond.order == BondOrder::Aromatic && !bond.in_ring {
            bond.order = BondOrder::Single;
        }
    }
    for (i, atom) in atoms.iter_mut().enumerate() {
        let in_ring = m.neighbors(i).iter().any(|n| bonds[n.bond].in_ring);
        atom.aromatic &= in_ring;
    }
    m.with_ring_flags(atoms, bonds)
}

/// Tarjan lowlink bridge detection; `true` marks a cut edge.
fn find_bridges(m: &Molecule) -> Vec<bool> {
    let n = m.atom_count();
    let mut bridge = vec![false; m.bonds().len()];
    let mut disc = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut timer = 0;
    // Iterative DFS: (atom, bond used to enter, next neighbor position).
    let mut stack: Vec<(usize, usize, usize)> = Vec::new();
    for root in 0..n {
        if disc[root] != usize::MAX {
            continue;
        }
        disc[root] = timer;
        low[root] = timer;
        timer += 1;
        stack.push((root, usize::MAX, 0));
        while let Some(&mut (a, via, ref mut pos)) = stack.last_mut() {
            if let Some(nb) = m.neighbors(a).get(*pos).copied() {
                *pos += 1;
                if nb.bond == via {
                    continue;
                }
                if disc[nb.atom] == usize::MAX {
                    disc[nb.atom] = timer;
                    low[nb.atom] = timer;
                    timer += 1;
                    stack.push((nb.atom, nb.bond, 0));
                } else {
                    low[a] = low[a].min(disc[nb.atom]);
                }
            } else {
                stack.pop();
                if let Some(&(parent, _, _)) = stack.last() {
                    low[parent] = low[parent].min(low[a]);
                    if low[a] > disc[parent] {
                        bridge[via] = true;
                    }
                }
            }
        }
    }
    bridge
}

/// Simple 6-cycles over ring bonds, each reported once starting from its
/// smallest atom.
fn six_cycles(m: &Molecule, bonds: &[super::Bond]) -> Vec<[usize; 6]> {
    let mut out = Vec::new();
    let mut path = Vec::with_capacity(6);
    for start in 0..m.atom_count() {
        path.clear();
        path.push(start);
        extend_cycle(m, bonds, start, &mut path, &mut out);
    }
    out
}

fn extend_cycle(
    m: &Molecule,
    bonds: &[super::Bond],
    start: usize,
    path: &mut Vec<usize>,
    out: &mut Vec<[usize; 6]>,
) {
    let last = *path.last().expect("non-empty path");
    for nb in m.neighbors(last) {
        if !bonds[nb.bond].in_ring {
            continue;
        }
        if path.len() == 6 {
            if nb.atom == start && path[1] < path[5] {
                let mut cycle = [0; 6];
                cycle.copy_from_slice(path);
                out.push(cycle);
            }
            continue;
        }
        if nb.atom <= start || path.contains(&nb.atom) {
            continue;
        }
        path.push(nb.atom);
        extend_cycle(m, bonds, start, path, out);
        path.pop();
    }
}

fn is_alternating_kekule_ring(m: &Molecule, cycle: &[usize; 6]) -> bool {
    if !cycle
        .iter()
        .all(|&a| matches!(m.atoms()[a].atomic_number, 6 | 7 | 8 | 16))
    {
        return false;
    }
    let orders: Vec<BondOrder> = (0..6)
        .map(|k| {
            m.bond_between(cycle[k], cycle[(k + 1) % 6])
                .expect("cycle edge")
                .order
        })
        .collect();
    orders
        .iter()
        .all(|o| matches!(o, BondOrder::Single | BondOrder::Double))
        && (0..6).all(|k| orders[k] != orders[(k + 1) % 6])
}

#[cfg(test)]
mod tests {
    use super::super::parse_smiles;
    use super::*;

    fn aromatic_flags(smiles: &str) -> (Vec<bool>, Vec<BondOrder>) {
        let m = parse_smiles(smiles).unwrap();
        (
            m.atoms().iter().map(|a| a.aromatic).collect(),
            m.bonds().iter().map(|b| b.order).collect(),
        )
    }

    #[test]
    fn cyclopropane_bonds_all_in_ring() {
        let m = parse_smiles("C1CC1").unwrap();
        assert_eq!(m.bonds().len(), 3);
        assert!(m.bonds().iter().all(|b| b.in_ring));
    }

    #[test]
    fn exocyclic_bond_is_a_bridge() {
        let m = parse_smiles("C1CC1C").unwrap();
        let exo = m.bond_between(2, 3).unwrap();
        assert!(!exo.in_ring);
        assert!(!m.atom_in_ring(3));
        assert_eq!(m.ring_bond_count(), 3);
    }

    #[test]
    fn kekule_and_lowercase_benzene_agree() {
        let kekule = aromatic_flags("C1=CC=CC=C1");
        let lower = aromatic_flags("c1ccccc1");
        assert_eq!(kekule, lower);
        assert!(kekule.0.iter().all(|&a| a));
        assert!(kekule.1.iter().all(|&o| o == BondOrder::Aromatic));
    }

    #[test]
    fn kekule_pyridine_is_aromatic() {
        let (atoms, _) = aromatic_flags("C1=CC=NC=C1");
        assert!(atoms.iter().all(|&a| a));
    }

    #[test]
    fn cyclohexene_stays_aliphatic() {
        let (atoms, bonds) = aromatic_flags("C1=CCCCC1");
        assert!(atoms.iter().all(|&a| !a));
        assert!(bonds.iter().all(|&o| o != BondOrder::Aromatic));
    }

    #[test]
    fn aromatic_bond_between_rings_becomes_single() {
        let m = parse_smiles("c1ccccc1c1ccccc1").unwrap();
        let link = m.bond_between(5, 6).unwrap();
        assert!(!link.in_ring);
        assert_eq!(link.order, BondOrder::Single);
        assert!(m.atoms().iter().all(|a| a.aromatic));
    }

    #[test]
    fn fused_rings_share_ring_bonds() {
        let m = parse_smiles("c1ccc2ccccc2c1").unwrap();
        assert_eq!(m.ring_bond_count(), 11);
    }
}
