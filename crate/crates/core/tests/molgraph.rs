mod common;

use molbench::molgraph::elements::default_valences;
use molbench::molgraph::{
    murcko_scaffold, parse_smiles, scaffold_key, Atom, Bond, BondOrder, Molecule,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn sorted_degrees(m: &Molecule) -> Vec<usize> {
    let mut d: Vec<usize> = (0..m.atom_count()).map(|a| m.degree(a)).collect();
    d.sort_unstable();
    d
}

fn sorted_elements(m: &Molecule) -> Vec<(u8, i8, u8, bool)> {
    let mut e: Vec<_> = m
        .atoms()
        .iter()
        .map(|a| (a.atomic_number, a.formal_charge, a.total_h(), a.aromatic))
        .collect();
    e.sort_unstable();
    e
}

fn sorted_bond_orders(m: &Molecule) -> Vec<(BondOrder, bool)> {
    let mut b: Vec<_> = m.bonds().iter().map(|b| (b.order, b.in_ring)).collect();
    b.sort_unstable();
    b
}

#[test]
fn corpus_parses() {
    let corpus = common::corpus();
    assert!(corpus.len() >= 100);
}

#[test]
fn reversed_chain_is_isomorphic() {
    let a = parse_smiles("OCC").unwrap();
    let b = parse_smiles("CCO").unwrap();
    assert_eq!(sorted_degrees(&a), sorted_degrees(&b));
    assert_eq!(sorted_elements(&a), sorted_elements(&b));
    assert_eq!(sorted_bond_orders(&a), sorted_bond_orders(&b));
    assert_eq!(murcko_scaffold(&a).key, murcko_scaffold(&b).key);
}

#[test]
fn permuted_renderings_are_isomorphic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for (smi, m) in common::corpus() {
        for _ in 0..5 {
            let text = common::random_smiles(&m, &mut rng);
            let p = parse_smiles(&text).unwrap_or_else(|e| panic!("{smi} -> {text}: {e}"));
            assert_eq!(sorted_degrees(&m), sorted_degrees(&p), "{smi} vs {text}");
            assert_eq!(sorted_elements(&m), sorted_elements(&p), "{smi} vs {text}");
            assert_eq!(
                sorted_bond_orders(&m),
                sorted_bond_orders(&p),
                "{smi} vs {text}"
            );
            assert_eq!(m.fragment_count(), p.fragment_count());
            let (s1, s2) = (murcko_scaffold(&m), murcko_scaffold(&p));
            assert_eq!(s1.key, s2.key, "{smi} vs {text}");
            assert_eq!(scaffold_key(&s1), s1.key);
        }
    }
}

#[test]
fn hydrogens_respect_valence_table() {
    for (smi, m) in common::corpus() {
        for (i, atom) in m.atoms().iter().enumerate() {
            if atom.is_bracket() {
                assert_eq!(atom.implicit_h, 0);
                continue;
            }
            let Some(valences) = default_valences(atom.atomic_number) else {
                continue;
            };
            let mut used: u8 = m
                .neighbors(i)
                .iter()
                .map(|nb| m.bonds()[nb.bond].order.valence())
                .sum();
            let has_multiple = m.neighbors(i).iter().any(|nb| {
                matches!(
                    m.bonds()[nb.bond].order,
                    BondOrder::Double | BondOrder::Triple
                )
            });
            if atom.aromatic
                && !has_multiple
                && matches!(atom.atomic_number, 5 | 6 | 7 | 15)
                && used < *valences.last().unwrap()
            {
                used += 1;
            }
            assert!(
                valences.contains(&(used + atom.implicit_h)),
                "{smi}: atom {i} uses {used} + {} H",
                atom.implicit_h
            );
        }
    }
}

#[test]
fn aromatic_only_on_ring_atoms() {
    for (smi, m) in common::corpus() {
        for (i, atom) in m.atoms().iter().enumerate() {
            if atom.aromatic {
                assert!(m.atom_in_ring(i), "{smi}: atom {i}");
            }
        }
    }
}

#[test]
fn scaffold_is_idempotent_on_corpus() {
    for (smi, m) in common::corpus() {
        let once = murcko_scaffold(&m);
        let twice = murcko_scaffold(&once.molecule);
        assert_eq!(once, twice, "{smi}");
        assert_eq!(once.is_empty(), m.ring_bond_count() == 0, "{smi}");
    }
}

/// A bond lies on a cycle iff its endpoints are joined by a simple path that
/// avoids the bond itself, found by exhaustive path search.
fn brute_force_in_ring(m: &Molecule, bond: &Bond) -> bool {
    fn reach(m: &Molecule, skip: (usize, usize), path: &mut Vec<usize>, target: usize) -> bool {
        let last = *path.last().unwrap();
        for nb in m.neighbors(last) {
            let edge = (last.min(nb.atom), last.max(nb.atom));
            if edge == skip || path.contains(&nb.atom) {
                continue;
            }
            if nb.atom == target {
                return true;
            }
            path.push(nb.atom);
            if reach(m, skip, path, target) {
                return true;
            }
            path.pop();
        }
        false
    }
    let (a, b) = bond.atoms;
    reach(m, (a, b), &mut vec![a], b)
}

fn carbon(i: usize) -> Atom {
    Atom {
        atomic_number: 6,
        formal_charge: 0,
        isotope: None,
        explicit_h: None,
        aromatic: false,
        implicit_h: 0,
        index: i,
    }
}

proptest! {
    #[test]
    fn bridge_rings_match_cycle_enumeration(
        n in 1usize..=8,
        edges in proptest::collection::vec((0usize..8, 0usize..8), 0..16),
    ) {
        let mut seen = std::collections::HashSet::new();
        let bonds: Vec<Bond> = edges
            .into_iter()
            .map(|(a, b)| (a % n, b % n))
            .filter(|&(a, b)| a != b && seen.insert((a.min(b), a.max(b))))
            .map(|(a, b)| Bond { atoms: (a, b), order: BondOrder::Single, in_ring: false })
            .collect();
        let m = Molecule::from_parts((0..n).map(carbon).collect(), bonds).unwrap();
        for bond in m.bonds() {
            prop_assert_eq!(bond.in_ring, brute_force_in_ring(&m, bond));
        }
        let once = murcko_scaffold(&m);
        prop_assert_eq!(&murcko_scaffold(&once.molecule), &once);
    }

    #[test]
    fn scaffold_key_ignores_atom_order(seed in 0u64..1000, pick in 0usize..117) {
        let corpus = common::corpus();
        let (_, m) = &corpus[pick % corpus.len()];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let text = common::random_smiles(m, &mut rng);
        let p = parse_smiles(&text).unwrap();
        prop_assert_eq!(murcko_scaffold(m).key, murcko_scaffold(&p).key);
    }
}
