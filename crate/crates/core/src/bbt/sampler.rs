//! Adaptive random-walk Metropolis over `(β_1..β_{M−1}, log σ)`.
//!
//! Warmup runs in windows. Within a window the proposal scale follows a
//! Robbins–Monro update toward the target acceptance rate; at the end of
//! each window the proposal covariance is re-estimated from that window's
//! draws (shrunk toward a small diagonal), so the sum-to-zero correlations
//! between abilities are learned. Post-warmup proposals are fixed.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;

use super::diagnostics::{effective_sample_size, split_rhat};
use super::model::{expand_abilities, log_target, BbtConfig};
use super::{BbtError, WinTable};

const TARGET_ACCEPTANCE: f64 = 0.3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Parameter names: model names followed by `sigma`.
    pub parameters: Vec<String>,
    pub rhat: Vec<f64>,
    pub ess: Vec<f64>,
    /// Post-warmup acceptance rate per chain.
    pub acceptance: Vec<f64>,
    pub warmup: usize,
    pub draws_per_chain: usize,
}

impl Diagnostics {
    pub fn max_rhat(&self) -> f64 {
        self.rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.ess.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn passes(&self, max_rhat: f64, min_ess: f64) -> bool {
        self.rhat.iter().all(|&r| r <= max_rhat) && self.ess.iter().all(|&e| e >= min_ess)
    }
}

/// Pooled post-warmup draws, chain by chain.
#[derive(Debug, Clone, PartialEq)]
pub struct AbilityPosterior {
    pub models: Vec<String>,
    /// One row of `M` abilities per draw.
    pub beta: Vec<Vec<f64>>,
    pub sigma: Vec<f64>,
    pub chains: usize,
    pub diagnostics: Diagnostics,
}

impl AbilityPosterior {
    pub fn draws(&self) -> usize {
        self.sigma.len()
    }

    pub fn beta_mean(&self, i: usize) -> f64 {
        self.beta.iter().map(|b| b[i]).sum::<f64>() / self.draws() as f64
    }

    pub fn beta_sd(&self, i: usize) -> f64 {
        let m = self.beta_mean(i);
        let ss: f64 = self.beta.iter().map(|b| (b[i] - m) * (b[i] - m)).sum();
        (ss / (self.draws() as f64 - 1.0)).sqrt()
    }
}

struct Chain {
    theta: Vec<Vec<f64>>,
    accepted: usize,
}

/// Warmup window boundaries: an initial scale-only phase, doubling
/// covariance windows, and a closing scale-only phase.
fn warmup_windows(warmup: usize) -> Vec<usize> {
    let init = (warmup * 15 / 100).max(10);
    let term = (warmup / 10).max(10);
    let mut ends = vec![init];
    let mut size = 25.max(warmup / 40);
    let mut at = init;
    while at + size < warmup.saturating_sub(term) {
        let next = if at + 3 * size >= warmup - term {
            warmup - term
        } else {
            at + size
        };
        ends.push(next);
        at = next;
        size *= 2;
    }
    ends.push(warmup);
    ends.dedup();
    ends
}

fn covariance(draws: &[Vec<f64>]) -> DMatrix<f64> {
    let d = draws[0].len();
    let n = draws.len() as f64;
    let mut mean = DVector::zeros(d);
    for x in draws {
        mean += DVector::from_column_slice(x);
    }
    mean /= n;
    let mut cov = DMatrix::zeros(d, d);
    for x in draws {
        let c = DVector::from_column_slice(x) - &mean;
        cov += &c * c.transpose();
    }
    cov / (n - 1.0).max(1.0)
}

fn run_chain(w: &WinTable, cfg: &BbtConfig, chain: usize, warmup: usize, draws: usize) -> Chain {
    let d = w.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(chain as u64);
    let init = Normal::new(0.0, 0.5).expect("valid normal");
    let mut theta: Vec<f64> = (0..d).map(|_| init.sample(&mut rng)).collect();
    let mut lp = log_target(&theta, w);

    let base_scale = 2.38 / (d as f64).sqrt();
    let mut chol = DMatrix::<f64>::identity(d, d) * 0.1;
    let mut log_scale = base_scale.ln();
    let mut since_reset = 0usize;
    let windows = warmup_windows(warmup);
    let cov_end = windows[windows.len().saturating_sub(2)];
    let mut window_draws: Vec<Vec<f64>> = Vec::new();

    let mut kept = Vec::with_capacity(draws);
    let mut accepted = 0;
    let mut z = DVector::<f64>::zeros(d);
    for iter in 0..warmup + draws {
        for v in z.iter_mut() {
            *v = StandardNormal.sample(&mut rng);
        }
        let step = &chol * &z * log_scale.exp();
        let proposal: Vec<f64> = theta.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
        let lp_new = log_target(&proposal, w);
        let log_alpha = (lp_new - lp).min(0.0);
        let u: f64 = rng.gen();
        let accept = lp_new.is_finite() && u.ln() < log_alpha;
        if accept {
            theta = proposal;
            lp = lp_new;
        }
        if iter < warmup {
            let alpha = if lp_new.is_finite() {
                log_alpha.exp()
            } else {
                0.0
            };
            since_reset += 1;
            log_scale += (alpha - TARGET_ACCEPTANCE) / (since_reset as f64 + 10.0).powf(0.6);
            if iter >= windows[0] && iter < cov_end {
                window_draws.push(theta.clone());
            }
            let closes = windows.iter().position(|&e| e == iter + 1);
            if matches!(closes, Some(pos) if pos > 0 && pos < windows.len() - 1) {
                if window_draws.len() > d + 1 {
                    let n = window_draws.len() as f64;
                    let shrunk = covariance(&window_draws) * (n / (n + 5.0))
                        + DMatrix::identity(d, d) * (1e-3 * 5.0 / (n + 5.0));
                    if let Some(c) = shrunk.cholesky() {
                        chol = c.l();
                        log_scale = base_scale.ln();
                        since_reset = 0;
                    }
                }
                window_draws.clear();
            }
        } else {
            if accept {
                accepted += 1;
            }
            kept.push(theta.clone());
        }
    }
    Chain {
        theta: kept,
        accepted,
    }
}

fn sample_once(w: &WinTable, cfg: &BbtConfig, warmup: usize, draws: usize) -> AbilityPosterior {
    let m = w.len();
    let chains: Vec<Chain> = (0..cfg.chains)
        .into_par_iter()
        .map(|c| run_chain(w, cfg, c, warmup, draws))
        .collect();

    let mut beta = Vec::with_capacity(cfg.chains * draws);
    let mut sigma = Vec::with_capacity(cfg.chains * draws);
    // Per-parameter, per-chain traces for diagnostics.
    let mut traces = vec![vec![Vec::with_capacity(draws); cfg.chains]; m + 1];
    for (c, chain) in chains.iter().enumerate() {
        for theta in &chain.theta {
            let b = expand_abilities(&theta[..m - 1]);
            let s = theta[m - 1].exp();
            for (k, &v) in b.iter().enumerate() {
                traces[k][c].push(v);
            }
            traces[m][c].push(s);
            beta.push(b);
            sigma.push(s);
        }
    }
    let mut parameters = w.models.clone();
    parameters.push("sigma".to_string());
    let diagnostics = Diagnostics {
        parameters,
        rhat: traces.iter().map(|t| split_rhat(t)).collect(),
        ess: traces.iter().map(|t| effective_sample_size(t)).collect(),
        acceptance: chains
            .iter()
            .map(|c| c.accepted as f64 / draws as f64)
            .collect(),
        warmup,
        draws_per_chain: draws,
    };
    AbilityPosterior {
        models: w.models.clone(),
        beta,
        sigma,
        chains: cfg.chains,
        diagnostics,
    }
}

/// Samples the posterior without judging convergence.
pub fn sample_posterior_unchecked(
    w: &WinTable,
    cfg: &BbtConfig,
) -> Result<AbilityPosterior, BbtError> {
    cfg.validate()?;
    if w.len() < 2 {
        return Err(BbtError::TooFewModels(w.len()));
    }
    if w.grand_total() <= 0.0 {
        return Err(BbtError::DegenerateTable);
    }
    Ok(sample_once(w, cfg, cfg.warmup, cfg.draws_per_chain))
}

/// Samples the posterior, doubling warmup and draws up to
/// `cfg.max_extensions` times while split R-hat or ESS miss their
/// thresholds. With `enforce_diagnostics` a final miss is an error.
pub fn sample_posterior(w: &WinTable, cfg: &BbtConfig) -> Result<AbilityPosterior, BbtError> {
    let mut post = sample_posterior_unchecked(w, cfg)?;
    let (mut warmup, mut draws) = (cfg.warmup, cfg.draws_per_chain);
    for _ in 0..cfg.max_extensions {
        if post.diagnostics.passes(cfg.max_rhat, cfg.min_ess) {
            break;
        }
        warmup *= 2;
        draws *= 2;
        log::info!(
            "BBT diagnostics (max R-hat {:.4}, min ESS {:.0}) below threshold; rerunning with {warmup} warmup and {draws} draws per chain",
            post.diagnostics.max_rhat(),
            post.diagnostics.min_ess()
        );
        post = sample_once(w, cfg, warmup, draws);
    }
    if cfg.enforce_diagnostics && !post.diagnostics.passes(cfg.max_rhat, cfg.min_ess) {
        return Err(BbtError::Diagnostics {
            max_rhat: post.diagnostics.max_rhat(),
            min_ess: post.diagnostics.min_ess(),
        });
    }
    Ok(post)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> BbtConfig {
        BbtConfig {
            draws_per_chain: 2000,
            warmup: 1000,
            seed: 17,
            ..BbtConfig::default()
        }
    }

    fn table3() -> WinTable {
        WinTable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 8.0, 9.5],
                vec![2.0, 0.0, 6.0],
                vec![0.5, 4.0, 0.0],
            ],
        )
    }

    #[test]
    fn windows_cover_warmup() {
        for warmup in [20, 100, 1000, 5000, 12345] {
            let w = warmup_windows(warmup);
            assert_eq!(*w.last().unwrap(), warmup);
            assert!(w.windows(2).all(|p| p[0] < p[1]), "{warmup}: {w:?}");
        }
    }

    #[test]
    fn draws_sum_to_zero_and_sigma_positive() {
        let p = sample_posterior(&table3(), &small_cfg()).unwrap();
        assert_eq!(p.draws(), 4 * p.diagnostics.draws_per_chain);
        for (b, &s) in p.beta.iter().zip(&p.sigma) {
            assert!(b.iter().sum::<f64>().abs() < 1e-12);
            assert!(s > 0.0);
        }
        assert!(p.beta_mean(0) > p.beta_mean(1) && p.beta_mean(1) > p.beta_mean(2));
        for a in &p.diagnostics.acceptance {
            assert!((0.15..0.6).contains(a), "{a}");
        }
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let cfg = BbtConfig {
            draws_per_chain: 300,
            warmup: 300,
            enforce_diagnostics: false,
            max_extensions: 0,
            ..small_cfg()
        };
        let a = sample_posterior(&table3(), &cfg).unwrap();
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(3)
            .build()
            .unwrap();
        let b = pool.install(|| sample_posterior(&table3(), &cfg).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_table_is_rejected() {
        let w = WinTable::new(vec!["a".into(), "b".into()], vec![vec![0.0; 2]; 2]);
        assert!(matches!(
            sample_posterior(&w, &small_cfg()),
            Err(BbtError::DegenerateTable)
        ));
    }

    #[test]
    fn symmetric_pair_centres_on_half() {
        let w = WinTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, 5.0], vec![5.0, 0.0]],
        );
        let p = sample_posterior(&w, &small_cfg()).unwrap();
        let mean: f64 = p
            .beta
            .iter()
            .map(|b| super::super::model::inv_logit(b[0] - b[1]))
            .sum::<f64>()
            / p.draws() as f64;
        assert!((0.45..=0.55).contains(&mean), "{mean}");
    }
}
