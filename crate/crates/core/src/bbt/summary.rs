use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::model::{inv_logit, BbtConfig};
use super::{AbilityPosterior, BbtError, WinTable};

pub const MIN_HDI_DRAWS: usize = 100;

/// Narrowest window of the sorted draws holding `ceil(mass · S)` of them;
/// the leftmost wins among equally narrow windows.
pub fn hdi(draws: &[f64], mass: f64) -> Result<(f64, f64), BbtError> {
    if draws.len() < MIN_HDI_DRAWS {
        return Err(BbtError::TooFewDraws(draws.len()));
    }
    if !(mass > 0.0 && mass < 1.0) {
        return Err(BbtError::InvalidConfig(format!("HDI mass {mass}")));
    }
    let mut sorted = draws.to_vec();
    sorted.sort_unstable_by(f64::total_cmp);
    let k = ((mass * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    let mut best = 0;
    for start in 1..=sorted.len() - k {
        if sorted[start + k - 1] - sorted[start] < sorted[best + k - 1] - sorted[best] {
            best = start;
        }
    }
    Ok((sorted[best], sorted[best + k - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSummary {
    pub mean: f64,
    pub hdi_low: f64,
    pub hdi_high: f64,
    pub p_in_rope: f64,
    pub p_above_half: f64,
}

impl PairSummary {
    /// A summary carrying only the statistics the decision rule reads.
    pub fn from_mean_and_rope(mean: f64, p_in_rope: f64) -> Self {
        PairSummary {
            mean,
            hdi_low: mean,
            hdi_high: mean,
            p_in_rope,
            p_above_half: f64::NAN,
        }
    }

    /// The same pair seen from the other side.
    pub fn reversed(&self) -> Self {
        PairSummary {
            mean: 1.0 - self.mean,
            hdi_low: 1.0 - self.hdi_high,
            hdi_high: 1.0 - self.hdi_low,
            p_in_rope: self.p_in_rope,
            p_above_half: 1.0 - self.p_above_half,
        }
    }
}

/// Win probabilities `π_ij` for every draw.
pub fn pair_draws(p: &AbilityPosterior, i: usize, j: usize) -> Vec<f64> {
    p.beta.iter().map(|b| inv_logit(b[i] - b[j])).collect()
}

pub fn summarize_draws(draws: &[f64], cfg: &BbtConfig) -> Result<PairSummary, BbtError> {
    let n = draws.len() as f64;
    let [lo, hi] = cfg.rope;
    let (hdi_low, hdi_high) = hdi(draws, cfg.hdi_mass)?;
    Ok(PairSummary {
        mean: draws.iter().sum::<f64>() / n,
        hdi_low,
        hdi_high,
        p_in_rope: draws.iter().filter(|&&v| lo <= v && v <= hi).count() as f64 / n,
        p_above_half: draws.iter().filter(|&&v| v > 0.5).count() as f64 / n,
    })
}

pub fn pair_summary(
    p: &AbilityPosterior,
    i: usize,
    j: usize,
    cfg: &BbtConfig,
) -> Result<PairSummary, BbtError> {
    summarize_draws(&pair_draws(p, i, j), cfg)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Decision {
    Better,
    Worse,
    Equivalent,
    Inconclusive,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Better => "better",
            Decision::Worse => "worse",
            Decision::Equivalent => "equivalent",
            Decision::Inconclusive => "inconclusive",
        })
    }
}

/// Equivalence is checked first, then the mean against the ROPE bounds.
pub fn decide(s: &PairSummary, cfg: &BbtConfig) -> Decision {
    let [lo, hi] = cfg.rope;
    if s.p_in_rope >= cfg.equivalence_mass {
        Decision::Equivalent
    } else if s.mean > hi {
        Decision::Better
    } else if s.mean < lo {
        Decision::Worse
    } else {
        Decision::Inconclusive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub rank: usize,
    pub model: String,
    pub beta_mean: f64,
    pub beta_sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub entries: Vec<RankEntry>,
    /// Every pairwise HDI of `π` contains 0.5.
    pub indistinguishable: bool,
}

/// Models by descending posterior mean ability; exact ties by name.
pub fn rank_models(p: &AbilityPosterior, cfg: &BbtConfig) -> Result<Ranking, BbtError> {
    let m = p.models.len();
    let mut order: Vec<(usize, f64)> = (0..m).map(|i| (i, p.beta_mean(i))).collect();
    order.sort_by(|a, b| {
        b.1.total_cmp(&a.1)
            .then_with(|| p.models[a.0].cmp(&p.models[b.0]))
    });
    let mut indistinguishable = true;
    'outer: for i in 0..m {
        for j in i + 1..m {
            let (lo, hi) = hdi(&pair_draws(p, i, j), cfg.hdi_mass)?;
            if !(lo <= 0.5 && 0.5 <= hi) {
                indistinguishable = false;
                break 'outer;
            }
        }
    }
    Ok(Ranking {
        entries: order
            .into_iter()
            .enumerate()
            .map(|(r, (i, mean))| RankEntry {
                rank: r + 1,
                model: p.models[i].clone(),
                beta_mean: mean,
                beta_sd: p.beta_sd(i),
            })
            .collect(),
        indistinguishable,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PpcResult {
    pub model_i: String,
    pub model_j: String,
    pub observed: u64,
    pub trials: u64,
    /// Fraction of replicates with at least the observed wins.
    pub p_value: f64,
    pub flagged: bool,
}

/// Posterior predictive check per unordered pair: one binomial replicate of
/// the rounded comparison count per draw.
pub fn posterior_predictive_check(
    p: &AbilityPosterior,
    w: &WinTable,
    cfg: &BbtConfig,
) -> Vec<PpcResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(0x99c);
    let m = w.len();
    let mut out = Vec::new();
    for i in 0..m {
        for j in i + 1..m {
            let trials = w.total(i, j).round() as u64;
            if trials == 0 {
                continue;
            }
            let observed = w.wins[i][j].round() as u64;
            let hits = p
                .beta
                .iter()
                .filter(|b| {
                    let pi = inv_logit(b[i] - b[j]);
                    let rep = Binomial::new(trials, pi)
                        .expect("probability in [0, 1]")
                        .sample(&mut rng);
                    rep >= observed
                })
                .count();
            let p_value = hits as f64 / p.draws() as f64;
            out.push(PpcResult {
                model_i: w.models[i].clone(),
                model_j: w.models[j].clone(),
                observed,
                trials,
                p_value,
                flagged: p_value < cfg.ppc_alpha || p_value > 1.0 - cfg.ppc_alpha,
            });
        }
    }
    out
}
