//! Shared helpers for integration tests: corpus loading, a randomized SMILES
//! writer for producing atom-order permutations, and brute-force enumerators
//! that are deliberately independent of the library's algorithms.
#![allow(dead_code)]

use std::collections::HashMap;
use std::path::PathBuf;

use molbench::molgraph::{parse_smiles, BondOrder, Molecule};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn corpus() -> Vec<(String, Molecule)> {
    let text = std::fs::read_to_string(data_dir().join("corpus/molecules.smi")).unwrap();
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| {
            let smi = l.trim().to_string();
            let m = parse_smiles(&smi).unwrap_or_else(|e| panic!("{smi}: {e}"));
            (smi, m)
        })
        .collect()
}

fn atom_text(m: &Molecule, a: usize) -> String {
    let atom = &m.atoms()[a];
    let mut sym = atom.symbol().to_string();
    if atom.aromatic {
        sym = sym.to_lowercase();
    }
    if !atom.is_bracket() {
        return sym;
    }
    let mut s = String::from("[");
    if let Some(iso) = atom.isotope {
        s.push_str(&iso.to_string());
    }
    s.push_str(&sym);
    match atom.explicit_h {
        Some(0) | None => {}
        Some(1) => s.push('H'),
        Some(h) => s.push_str(&format!("H{h}")),
    }
    match atom.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("+{c}")),
        c => s.push_str(&format!("-{}", -c)),
    }
    s.push(']');
    s
}

fn bond_text(m: &Molecule, a: usize, b: usize) -> &'static str {
    let both_aromatic = m.atoms()[a].aromatic && m.atoms()[b].aromatic;
    match m.bond_between(a, b).unwrap().order {
        BondOrder::Single if both_aromatic => "-",
        BondOrder::Single => "",
        BondOrder::Double => "=",
        BondOrder::Triple => "#",
        BondOrder::Aromatic if both_aromatic => "",
        BondOrder::Aromatic => ":",
    }
}

/// Writes a valid SMILES for `m` using a random root and random neighbor
/// order per fragment, so atoms come out in a permuted order.
pub fn random_smiles(m: &Molecule, rng: &mut impl Rng) -> String {
    let n = m.atom_count();
    let mut order = vec![usize::MAX; n];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut tree_bond = vec![false; m.bonds().len()];
    let mut roots = Vec::new();
    let mut starts: Vec<usize> = (0..n).collect();
    starts.shuffle(rng);
    let mut counter = 0;

    fn dfs(
        m: &Molecule,
        a: usize,
        rng: &mut impl Rng,
        order: &mut [usize],
        counter: &mut usize,
        children: &mut [Vec<usize>],
        tree_bond: &mut [bool],
    ) {
        order[a] = *counter;
        *counter += 1;
        let mut nbrs = m.neighbors(a).to_vec();
        nbrs.shuffle(rng);
        for nb in nbrs {
            if order[nb.atom] == usize::MAX {
                tree_bond[nb.bond] = true;
                children[a].push(nb.atom);
                dfs(m, nb.atom, rng, order, counter, children, tree_bond);
            }
        }
    }

    for s in starts {
        if order[s] == usize::MAX {
            roots.push(s);
            dfs(
                m,
                s,
                rng,
                &mut order,
                &mut counter,
                &mut children,
                &mut tree_bond,
            );
        }
    }

    struct Emitter<'a> {
        m: &'a Molecule,
        order: &'a [usize],
        children: &'a [Vec<usize>],
        tree_bond: &'a [bool],
        open: HashMap<usize, u32>,
        free: Vec<u32>,
        out: String,
    }

    impl Emitter<'_> {
        fn ring_label(num: u32) -> String {
            if num < 10 {
                num.to_string()
            } else {
                format!("%{num}")
            }
        }

        fn emit(&mut self, a: usize) {
            self.out.push_str(&atom_text(self.m, a));
            let mut ring: Vec<_> = self
                .m
                .neighbors(a)
                .iter()
                .filter(|nb| !self.tree_bond[nb.bond])
                .copied()
                .collect();
            ring.sort_by_key(|nb| self.order[nb.atom]);
            for nb in ring.iter().filter(|nb| self.order[nb.atom] < self.order[a]) {
                let num = self.open.remove(&nb.bond).unwrap();
                self.out.push_str(&Self::ring_label(num));
                self.free.push(num);
                self.free.sort_unstable_by(|x, y| y.cmp(x));
            }
            for nb in ring.iter().filter(|nb| self.order[nb.atom] > self.order[a]) {
                let num = self.free.pop().unwrap();
                self.open.insert(nb.bond, num);
                self.out.push_str(bond_text(self.m, a, nb.atom));
                self.out.push_str(&Self::ring_label(num));
            }
            let kids = self.children[a].clone();
            for (k, &c) in kids.iter().enumerate() {
                let last = k + 1 == kids.len();
                if !last {
                    self.out.push('(');
                }
                self.out.push_str(bond_text(self.m, a, c));
                self.emit(c);
                if !last {
                    self.out.push(')');
                }
            }
        }
    }

    let mut e = Emitter {
        m,
        order: &order,
        children: &children,
        tree_bond: &tree_bond,
        open: HashMap::new(),
        free: (1..=99).rev().collect(),
        out: String::new(),
    };
    for (k, &r) in roots.iter().enumerate() {
        if k > 0 {
            e.out.push('.');
        }
        e.emit(r);
    }
    e.out
}

/// Number of undirected simple paths through exactly `atoms` distinct atoms,
/// by exhaustive DFS from every start and halving.
pub fn brute_force_path_count(m: &Molecule, atoms: usize) -> usize {
    fn walk(m: &Molecule, path: &mut Vec<usize>, atoms: usize) -> usize {
        if path.len() == atoms {
            return 1;
        }
        let last = *path.last().unwrap();
        let mut total = 0;
        for nb in m.neighbors(last) {
            if !path.contains(&nb.atom) {
                path.push(nb.atom);
                total += walk(m, path, atoms);
                path.pop();
            }
        }
        total
    }
    let directed: usize = (0..m.atom_count())
        .map(|s| walk(m, &mut vec![s], atoms))
        .sum();
    directed / 2
}

/// Pairs of atoms in the same fragment whose shortest path has between 1 and
/// `max_distance` bonds, found by exhaustive simple-path search.
pub fn brute_force_pair_count(m: &Molecule, max_distance: usize) -> usize {
    fn shortest(m: &Molecule, path: &mut Vec<usize>, target: usize, best: &mut usize) {
        let last = *path.last().unwrap();
        if last == target {
            *best = (*best).min(path.len() - 1);
            return;
        }
        if path.len() > *best {
            return;
        }
        for nb in m.neighbors(last) {
            if !path.contains(&nb.atom) {
                path.push(nb.atom);
                shortest(m, path, target, best);
                path.pop();
            }
        }
    }
    let n = m.atom_count();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            let mut best = usize::MAX;
            shortest(m, &mut vec![i], j, &mut best);
            if best >= 1 && best <= max_distance {
                count += 1;
            }
        }
    }
    count
}
