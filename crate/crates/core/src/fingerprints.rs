//! Hashed topological fingerprints: ECFP (circular), atom pairs and
//! topological torsions, each in binary or count form.
//!
//! Identifiers come from [`StableHasher`](crate::hash::StableHasher), so the
//! folded vectors are bit-identical across platforms and runs.

use std::collections::HashSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hash::StableHasher;
use crate::matrix::FeatureMatrix;
use crate::molgraph::{shortest_path_distances, Molecule};

const MAX_RADIUS: u32 = 10;
const MAX_PAIR_DISTANCE: u32 = 30;

// Domain tags keep the three identifier spaces apart.
const TAG_ECFP: u64 = 0xec;
const TAG_PAIR: u64 = 0xa9;
const TAG_TORSION: u64 = 0x77;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FingerprintKind {
    Ecfp,
    AtomPair,
    TopologicalTorsion,
}

impl std::fmt::Display for FingerprintKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FingerprintKind::Ecfp => "ecfp",
            FingerprintKind::AtomPair => "atom_pair",
            FingerprintKind::TopologicalTorsion => "topological_torsion",
        })
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum FingerprintError {
    #[error("fingerprint length {0} must be a power of two and at least 2")]
    InvalidLength(usize),
    #[error("ECFP radius {0} exceeds the maximum of {MAX_RADIUS}")]
    InvalidRadius(u32),
    #[error("expected a {expected} configuration, got {got}")]
    KindMismatch {
        expected: FingerprintKind,
        got: FingerprintKind,
    },
}

fn default_radius() -> u32 {
    2
}

fn default_length() -> usize {
    2048
}

fn default_counted() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FingerprintConfig {
    pub kind: FingerprintKind,
    /// Only used by ECFP.
    #[serde(default = "default_radius")]
    pub radius: u32,
    #[serde(default = "default_length")]
    pub length: usize,
    #[serde(default = "default_counted")]
    pub counted: bool,
}

impl Default for FingerprintConfig {
    /// ECFP count fingerprint, radius 2, 2048 positions.
    fn default() -> Self {
        FingerprintConfig::new(FingerprintKind::Ecfp)
    }
}

impl FingerprintConfig {
    pub fn new(kind: FingerprintKind) -> Self {
        FingerprintConfig {
            kind,
            radius: default_radius(),
            length: default_length(),
            counted: default_counted(),
        }
    }

    pub fn with_radius(mut self, radius: u32) -> Self {
        self.radius = radius;
        self
    }

    pub fn with_length(mut self, length: usize) -> Self {
        self.length = length;
        self
    }

    pub fn with_counted(mut self, counted: bool) -> Self {
        self.counted = counted;
        self
    }

    pub fn validate(&self) -> Result<(), FingerprintError> {
        if self.length < 2 || !self.length.is_power_of_two() {
            return Err(FingerprintError::InvalidLength(self.length));
        }
        if self.radius > MAX_RADIUS {
            return Err(FingerprintError::InvalidRadius(self.radius));
        }
        Ok(())
    }

    fn expect_kind(&self, expected: FingerprintKind) -> Result<(), FingerprintError> {
        if self.kind != expected {
            return Err(FingerprintError::KindMismatch {
                expected,
                got: self.kind,
            });
        }
        self.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FingerprintVector {
    pub values: Vec<u32>,
    pub config: FingerprintConfig,
}

impl FingerprintVector {
    pub fn from_identifiers(identifiers: &[u64], config: &FingerprintConfig) -> Self {
        FingerprintVector {
            values: fold(identifiers, config.length, config.counted),
            config: config.clone(),
        }
    }

    pub fn nonzero(&self) -> usize {
        self.values.iter().filter(|&&v| v > 0).count()
    }

    pub fn total(&self) -> u64 {
        self.values.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn binarized(&self) -> Vec<u32> {
        self.values.iter().map(|&v| u32::from(v > 0)).collect()
    }
}

/// Folds identifiers into `length` positions by `id mod length`.
pub fn fold(identifiers: &[u64], length: usize, counted: bool) -> Vec<u32> {
    assert!(length >= 2, "fingerprint length must be at least 2");
    let mut values = vec![0u32; length];
    for &id in identifiers {
        let slot = &mut values[(id % length as u64) as usize];
        *slot = if counted { slot.saturating_add(1) } else { 1 };
    }
    values
}

/// Per-atom descriptor hashed into the initial ECFP identifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomInvariant {
    pub atomic_number: u8,
    pub heavy_degree: u8,
    pub total_h: u8,
    pub formal_charge: i8,
    pub in_ring: bool,
    pub pi_electrons: u8,
}

impl AtomInvariant {
    pub fn of(m: &Molecule, atom: usize) -> Self {
        let a = &m.atoms()[atom];
        AtomInvariant {
            atomic_number: a.atomic_number,
            heavy_degree: m.degree(atom) as u8,
            total_h: a.total_h(),
            formal_charge: a.formal_charge,
            in_ring: m.atom_in_ring(atom),
            pi_electrons: m.pi_electrons(atom),
        }
    }

    pub fn identifier(&self) -> u64 {
        StableHasher::new()
            .write_u64(TAG_ECFP)
            .write_u64(u64::from(self.atomic_number))
            .write_u64(u64::from(self.heavy_degree))
            .write_u64(u64::from(self.total_h))
            .write_i64(i64::from(self.formal_charge))
            .write_u64(u64::from(self.in_ring))
            .write_u64(u64::from(self.pi_electrons))
            .finish()
    }
}

pub fn initial_invariants(m: &Molecule) -> Vec<u64> {
    (0..m.atom_count())
        .map(|a| AtomInvariant::of(m, a).identifier())
        .collect()
}

/// Unfolded ECFP identifiers that survive bond-set deduplication, one entry
/// per surviving environment.
///
/// Every atom emits its radius-0 identifier. At radius `r ≥ 1` an atom emits
/// only if the set of bonds its environment covers has not been emitted
/// before; within a radius environments are visited in identifier order.
pub fn ecfp_identifiers(m: &Molecule, radius: u32) -> Vec<u64> {
    let n = m.atom_count();
    let mut ids = initial_invariants(m);
    let mut out = ids.clone();
    let mut covers: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut seen: HashSet<Vec<usize>> = HashSet::new();

    for r in 1..=radius {
        let mut next_ids = Vec::with_capacity(n);
        let mut next_covers = Vec::with_capacity(n);
        for a in 0..n {
            let mut env: Vec<(u64, u64)> = m
                .neighbors(a)
                .iter()
                .map(|nb| (m.bonds()[nb.bond].order.code(), ids[nb.atom]))
                .collect();
            env.sort_unstable();
            let mut h = StableHasher::new();
            h.write_u64(TAG_ECFP)
                .write_u64(u64::from(r))
                .write_u64(ids[a]);
            for (code, id) in env {
                h.write_u64(code).write_u64(id);
            }
            next_ids.push(h.finish());

            let mut cover = covers[a].clone();
            for nb in m.neighbors(a) {
                cover.push(nb.bond);
                cover.extend_from_slice(&covers[nb.atom]);
            }
            cover.sort_unstable();
            cover.dedup();
            next_covers.push(cover);
        }

        let mut order: Vec<usize> = (0..n).filter(|&a| !next_covers[a].is_empty()).collect();
        order.sort_by(|&x, &y| {
            next_ids[x]
                .cmp(&next_ids[y])
                .then_with(|| next_covers[x].cmp(&next_covers[y]))
        });
        for a in order {
            if seen.insert(next_covers[a].clone()) {
                out.push(next_ids[a]);
            }
        }
        ids = next_ids;
        covers = next_covers;
    }
    out
}

pub fn ecfp(m: &Molecule, cfg: &FingerprintConfig) -> Result<FingerprintVector, FingerprintError> {
    cfg.expect_kind(FingerprintKind::Ecfp)?;
    Ok(FingerprintVector::from_identifiers(
        &ecfp_identifiers(m, cfg.radius),
        cfg,
    ))
}

fn pair_type(m: &Molecule, atom: usize) -> (u64, u64, u64) {
    (
        u64::from(m.atoms()[atom].atomic_number),
        m.degree(atom) as u64,
        u64::from(m.pi_electrons(atom)),
    )
}

/// One identifier per unordered same-fragment atom pair at distance 1..=30.
pub fn atom_pair_identifiers(m: &Molecule) -> Vec<u64> {
    let dist = shortest_path_distances(m);
    let types: Vec<_> = (0..m.atom_count()).map(|a| pair_type(m, a)).collect();
    let mut out = Vec::new();
    for i in 0..m.atom_count() {
        for j in i + 1..m.atom_count() {
            let Some(d) = dist.get(i, j) else { continue };
            if !(1..=MAX_PAIR_DISTANCE).contains(&d) {
                continue;
            }
            let (lo, hi) = if types[i] <= types[j] {
                (types[i], types[j])
            } else {
                (types[j], types[i])
            };
            out.push(
                StableHasher::new()
                    .write_u64(TAG_PAIR)
                    .write_all(&[lo.0, lo.1, lo.2, u64::from(d), hi.0, hi.1, hi.2])
                    .finish(),
            );
        }
    }
    out
}

pub fn atom_pair(
    m: &Molecule,
    cfg: &FingerprintConfig,
) -> Result<FingerprintVector, FingerprintError> {
    cfg.expect_kind(FingerprintKind::AtomPair)?;
    Ok(FingerprintVector::from_identifiers(
        &atom_pair_identifiers(m),
        cfg,
    ))
}

fn torsion_type(m: &Molecule, atom: usize) -> [u64; 3] {
    [
        u64::from(m.atoms()[atom].atomic_number),
        u64::from(m.pi_electrons(atom)),
        m.degree(atom) as u64,
    ]
}

/// One identifier per undirected simple path of four atoms.
pub fn torsion_identifiers(m: &Molecule) -> Vec<u64> {
    let types: Vec<_> = (0..m.atom_count()).map(|a| torsion_type(m, a)).collect();
    let mut out = Vec::new();
    // Each path a-b-c-d has exactly one central bond, visited once here.
    for bond in m.bonds() {
        let (b, c) = bond.atoms;
        for nb_a in m.neighbors(b).iter().filter(|nb| nb.atom != c) {
            for nb_d in m.neighbors(c).iter().filter(|nb| nb.atom != b) {
                let (a, d) = (nb_a.atom, nb_d.atom);
                if a == d {
                    continue;
                }
                let forward = [types[a], types[b], types[c], types[d]];
                let backward = [types[d], types[c], types[b], types[a]];
                let path = forward.min(backward);
                let mut h = StableHasher::new();
                h.write_u64(TAG_TORSION);
                for t in path {
                    h.write_all(&t);
                }
                out.push(h.finish());
            }
        }
    }
    out
}

pub fn topological_torsion(
    m: &Molecule,
    cfg: &FingerprintConfig,
) -> Result<FingerprintVector, FingerprintError> {
    cfg.expect_kind(FingerprintKind::TopologicalTorsion)?;
    Ok(FingerprintVector::from_identifiers(
        &torsion_identifiers(m),
        cfg,
    ))
}

/// Dispatches on `cfg.kind`.
pub fn fingerprint(
    m: &Molecule,
    cfg: &FingerprintConfig,
) -> Result<FingerprintVector, FingerprintError> {
    match cfg.kind {
        FingerprintKind::Ecfp => ecfp(m, cfg),
        FingerprintKind::AtomPair => atom_pair(m, cfg),
        FingerprintKind::TopologicalTorsion => topological_torsion(m, cfg),
    }
}

/// Fingerprints for every molecule as a dense row-major matrix.
pub fn fingerprint_matrix(
    molecules: &[Molecule],
    cfg: &FingerprintConfig,
) -> Result<FeatureMatrix, FingerprintError> {
    cfg.validate()?;
    let rows: Vec<FingerprintVector> = molecules
        .par_iter()
        .map(|m| fingerprint(m, cfg))
        .collect::<Result<_, _>>()?;
    let mut data = Vec::with_capacity(rows.len() * cfg.length);
    for row in &rows {
        data.extend(row.values.iter().map(|&v| f64::from(v)));
    }
    Ok(FeatureMatrix::from_vec(rows.len(), cfg.length, data))
}
