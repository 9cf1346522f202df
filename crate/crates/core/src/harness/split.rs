use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::molgraph::murcko_scaffold;

use super::{Dataset, HarnessError};

/// Disjoint train/test molecule indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    pub frac_train: f64,
}

/// Groups molecules by Bemis–Murcko scaffold key and fills the train side
/// with whole groups, largest first.
///
/// The group order is fully determined by group sizes and keys, so `seed`
/// does not influence the result; it is accepted for interface symmetry
/// with randomized splitters and recorded alongside the split.
pub fn scaffold_split(d: &Dataset, frac_train: f64, seed: u64) -> Result<Split, HarnessError> {
    let keys: Vec<u64> = d.molecules.iter().map(|m| murcko_scaffold(m).key).collect();
    log::debug!("{}: scaffold split with seed {seed}", d.name);
    split_by_keys(&keys, frac_train)
}

/// Group-wise split over precomputed keys: groups ordered by descending
/// size then ascending key, assigned to train until it holds at least
/// `frac_train · N` molecules. The test side always receives at least the
/// last group.
pub fn split_by_keys(keys: &[u64], frac_train: f64) -> Result<Split, HarnessError> {
    if !(frac_train > 0.0 && frac_train < 1.0) {
        return Err(HarnessError::InvalidFraction(frac_train));
    }
    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &k) in keys.iter().enumerate() {
        groups.entry(k).or_default().push(i);
    }
    if groups.len() < 2 {
        return Err(HarnessError::TooFewScaffolds(groups.len()));
    }
    let mut ordered: Vec<(u64, Vec<usize>)> = groups.into_iter().collect();
    ordered.sort_by(|a, b| b.1.len().cmp(&a.1.len()).then(a.0.cmp(&b.0)));

    // Small slack so e.g. 0.8 · 10 is not read as 8.000000000000002.
    let target = frac_train * keys.len() as f64 - 1e-9;
    let last = ordered.len() - 1;
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (g, (_, members)) in ordered.into_iter().enumerate() {
        if (train.len() as f64) < target && g < last {
            train.extend(members);
        } else {
            test.extend(members);
        }
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(Split {
        train,
        test,
        frac_train,
    })
}
