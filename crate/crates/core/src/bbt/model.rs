//! Bradley–Terry likelihood with a hierarchical Gaussian prior on
//! abilities and a log-normal prior on their shared scale.

use serde::{Deserialize, Serialize};

use super::{BbtError, WinTable};

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Standard deviation of log σ under the scale prior.
pub const SIGMA_PRIOR_SD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BbtConfig {
    /// AUROC differences below this count as ties.
    pub epsilon_tie: f64,
    pub rope: [f64; 2],
    pub equivalence_mass: f64,
    pub hdi_mass: f64,
    pub chains: usize,
    pub draws_per_chain: usize,
    pub warmup: usize,
    pub seed: u64,
    pub max_rhat: f64,
    pub min_ess: f64,
    /// Fail when diagnostics miss their thresholds after all extensions.
    pub enforce_diagnostics: bool,
    /// Reruns with doubled warmup and draws when diagnostics fail.
    pub max_extensions: usize,
    /// PPC p-values outside `[ppc_alpha, 1 - ppc_alpha]` are flagged.
    pub ppc_alpha: f64,
}

impl Default for BbtConfig {
    fn default() -> Self {
        BbtConfig {
            epsilon_tie: 0.01,
            rope: [0.25, 0.75],
            equivalence_mass: 0.95,
            hdi_mass: 0.89,
            chains: 4,
            draws_per_chain: 5000,
            warmup: 5000,
            seed: 0,
            max_rhat: 1.01,
            min_ess: 400.0,
            enforce_diagnostics: true,
            max_extensions: 2,
            ppc_alpha: 0.05,
        }
    }
}

impl BbtConfig {
    pub fn validate(&self) -> Result<(), BbtError> {
        let [lo, hi] = self.rope;
        let bad = |what: &str| Err(BbtError::InvalidConfig(what.to_string()));
        if !(self.epsilon_tie >= 0.0 && self.epsilon_tie.is_finite()) {
            return bad("epsilon_tie must be a non-negative number");
        }
        if !((0.0..0.5).contains(&lo) && hi > 0.5 && hi <= 1.0) {
            return bad("rope must satisfy 0 <= low < 0.5 < high <= 1");
        }
        if !(self.hdi_mass > 0.0 && self.hdi_mass < 1.0) {
            return bad("hdi_mass must lie in (0, 1)");
        }
        if !(self.equivalence_mass > 0.0 && self.equivalence_mass <= 1.0) {
            return bad("equivalence_mass must lie in (0, 1]");
        }
        if self.chains < 2 {
            return bad("at least 2 chains are required");
        }
        if self.draws_per_chain < 4 || self.warmup < 20 {
            return bad("draws_per_chain must be >= 4 and warmup >= 20");
        }
        if !(self.ppc_alpha > 0.0 && self.ppc_alpha < 0.5) {
            return bad("ppc_alpha must lie in (0, 0.5)");
        }
        Ok(())
    }
}

/// `log(1 / (1 + e^{-z}))` without overflow.
pub fn log_sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        -(-z).exp().ln_1p()
    } else {
        z - z.exp().ln_1p()
    }
}

pub fn inv_logit(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Binomial log-likelihood of the table over unordered pairs; fractional
/// counts enter as weights. The binomial coefficient depends only on the
/// data and is omitted.
pub fn log_likelihood(beta: &[f64], w: &WinTable) -> f64 {
    let m = w.len();
    let mut ll = 0.0;
    for i in 0..m {
        for j in i + 1..m {
            let (wij, wji) = (w.wins[i][j], w.wins[j][i]);
            if wij == 0.0 && wji == 0.0 {
                continue;
            }
            let z = beta[i] - beta[j];
            ll += wij * log_sigmoid(z) + wji * log_sigmoid(-z);
        }
    }
    ll
}

pub fn log_normal_density(x: f64, sd: f64) -> f64 {
    -LN_SQRT_2PI - sd.ln() - x * x / (2.0 * sd * sd)
}

/// Density of a log-normal with log-scale location 0.
pub fn log_lognormal_density(x: f64, sd: f64) -> f64 {
    let l = x.ln();
    -LN_SQRT_2PI - sd.ln() - l - l * l / (2.0 * sd * sd)
}

/// Unnormalized log posterior of abilities `beta` (summing to zero) and
/// scale `sigma`.
pub fn log_posterior(beta: &[f64], sigma: f64, w: &WinTable) -> f64 {
    let prior: f64 = beta.iter().map(|&b| log_normal_density(b, sigma)).sum();
    log_likelihood(beta, w) + prior + log_lognormal_density(sigma, SIGMA_PRIOR_SD)
}

/// Maps `M − 1` free abilities to all `M`, the last being minus the sum.
pub fn expand_abilities(free: &[f64]) -> Vec<f64> {
    let mut beta = free.to_vec();
    beta.push(-free.iter().sum::<f64>());
    beta
}

/// Sampler target over `(β_1..β_{M−1}, log σ)`, including the Jacobian of
/// the log transform.
pub fn log_target(theta: &[f64], w: &WinTable) -> f64 {
    let (free, tau) = theta.split_at(theta.len() - 1);
    let beta = expand_abilities(free);
    log_posterior(&beta, tau[0].exp(), w) + tau[0]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(w12: f64, w21: f64) -> WinTable {
        WinTable::new(
            vec!["a".into(), "b".into()],
            vec![vec![0.0, w12], vec![w21, 0.0]],
        )
    }

    #[test]
    fn zero_abilities_give_half_probabilities() {
        let w = WinTable::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![
                vec![0.0, 2.5, 1.0],
                vec![0.5, 0.0, 4.0],
                vec![3.0, 1.0, 0.0],
            ],
        );
        let ll = log_likelihood(&[0.0; 3], &w);
        assert!((ll - 0.5f64.ln() * w.grand_total()).abs() < 1e-12);
    }

    #[test]
    fn hand_evaluated_two_model_case() {
        // W12 = 3, W21 = 1, β = (0.5, −0.5), σ = 1.
        let w = table(3.0, 1.0);
        let p = 1.0 / (1.0 + (-1.0f64).exp());
        let lik = 3.0 * p.ln() + 1.0 * (1.0 - p).ln();
        let norm = 2.0 * (-(2.0 * std::f64::consts::PI).sqrt().ln() - 0.125);
        let sigma_prior = -(2.0 * std::f64::consts::PI).sqrt().ln() - 0.5f64.ln();
        let expected = lik + norm + sigma_prior;
        assert!((log_posterior(&[0.5, -0.5], 1.0, &w) - expected).abs() < 1e-12);
    }

    #[test]
    fn dominance_rewards_higher_ability() {
        let w = table(9.0, 1.0);
        let a = log_likelihood(&[0.2, -0.2], &w);
        let b = log_likelihood(&[0.6, -0.6], &w);
        assert!(b > a);
    }

    #[test]
    fn stable_tails() {
        assert!(log_sigmoid(-800.0).is_finite());
        assert!((log_sigmoid(800.0)).abs() < 1e-300);
        assert_eq!(inv_logit(0.0), 0.5);
        assert!((inv_logit(3.0) + inv_logit(-3.0) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn free_parameterization_sums_to_zero() {
        let b = expand_abilities(&[0.3, -1.2, 2.0]);
        assert_eq!(b.len(), 4);
        assert!(b.iter().sum::<f64>().abs() < 1e-15);
    }

    #[test]
    fn config_validation() {
        assert!(BbtConfig::default().validate().is_ok());
        let bad = BbtConfig {
            rope: [0.6, 0.75],
            ..BbtConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = BbtConfig {
            chains: 1,
            ..BbtConfig::default()
        };
        assert!(bad.validate().is_err());
        let parsed: BbtConfig = serde_json::from_str(r#"{"epsilon_tie": 0.0001}"#).unwrap();
        assert_eq!(parsed.epsilon_tie, 0.0001);
        assert_eq!(parsed.hdi_mass, 0.89);
    }
}
