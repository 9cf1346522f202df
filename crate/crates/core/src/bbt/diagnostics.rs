//! Convergence diagnostics over multiple chains: split R-hat and the
//! Geyer initial-monotone-sequence effective sample size.

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn variance(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() as f64 - 1.0)
}

/// Halves each chain, dropping the middle draw of odd-length chains.
fn split_chains(chains: &[Vec<f64>]) -> Vec<&[f64]> {
    chains
        .iter()
        .flat_map(|c| {
            let h = c.len() / 2;
            [&c[..h], &c[c.len() - h..]]
        })
        .collect()
}

struct Variances {
    within: f64,
    pooled: f64,
}

fn variances(chains: &[&[f64]]) -> Variances {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let within = chains.iter().map(|c| variance(c)).sum::<f64>() / chains.len() as f64;
    let between = n * variance(&means);
    Variances {
        within,
        pooled: (n - 1.0) / n * within + between / n,
    }
}

/// Potential scale reduction over split chains. Constant draws give 1.
pub fn split_rhat(chains: &[Vec<f64>]) -> f64 {
    let parts = split_chains(chains);
    let v = variances(&parts);
    if v.within <= 0.0 {
        return if v.pooled <= 0.0 { 1.0 } else { f64::INFINITY };
    }
    (v.pooled / v.within).sqrt()
}

fn autocovariance(x: &[f64], lag: usize) -> f64 {
    let m = mean(x);
    let n = x.len();
    (0..n - lag)
        .map(|t| (x[t] - m) * (x[t + lag] - m))
        .sum::<f64>()
        / n as f64
}

/// Effective sample size over split chains, truncating the autocorrelation
/// sum at the first non-positive pair and enforcing monotone pair sums.
pub fn effective_sample_size(chains: &[Vec<f64>]) -> f64 {
    let parts = split_chains(chains);
    let n = parts[0].len();
    let total = (n * parts.len()) as f64;
    let v = variances(&parts);
    if v.pooled <= 0.0 {
        return total;
    }
    let rho = |lag: usize| -> f64 {
        let acov = parts.iter().map(|c| autocovariance(c, lag)).sum::<f64>() / parts.len() as f64;
        // Chain variances use n − 1; autocovariances use n.
        let within_biased = v.within * (n as f64 - 1.0) / n as f64;
        1.0 - (within_biased - acov) / v.pooled
    };
    let mut sum = 0.0;
    let mut prev = f64::INFINITY;
    let mut k = 0;
    while 2 * k + 1 < n {
        let pair = if k == 0 {
            1.0 + rho(1)
        } else {
            rho(2 * k) + rho(2 * k + 1)
        };
        if pair <= 0.0 {
            break;
        }
        let pair = pair.min(prev);
        sum += pair;
        prev = pair;
        k += 1;
    }
    let tau = (-1.0 + 2.0 * sum).max(1.0 / total.log10().max(1.0));
    total / tau
}
