//! L2-regularized logistic regression fitted by L-BFGS.

use std::collections::VecDeque;

use crate::matrix::FeatureMatrix;

use super::HarnessError;

pub const GRADIENT_TOLERANCE: f64 = 1e-6;
pub const MAX_ITERATIONS: usize = 10_000;
const MEMORY: usize = 10;
const ARMIJO: f64 = 1e-4;

/// `log(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Mean log-loss plus `‖w‖² / (2λn)` over parameters `[w_1..w_d, b]`; the
/// bias is not penalized.
#[derive(Debug, Clone)]
pub struct LogisticObjective {
    x: Vec<f64>,
    y: Vec<f64>,
    n: usize,
    d: usize,
    lambda: f64,
}

impl LogisticObjective {
    pub fn new(x: &FeatureMatrix, y: &[bool], lambda: f64) -> Self {
        assert_eq!(x.rows(), y.len());
        LogisticObjective {
            x: x.as_slice().to_vec(),
            y: y.iter().map(|&v| if v { 1.0 } else { 0.0 }).collect(),
            n: x.rows(),
            d: x.cols(),
            lambda,
        }
    }

    /// Number of parameters, including the bias.
    pub fn dim(&self) -> usize {
        self.d + 1
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let (w, b) = params.split_at(self.d);
        let n = self.n as f64;
        let mut loss = 0.0;
        for i in 0..self.n {
            let z = dot(&self.x[i * self.d..(i + 1) * self.d], w) + b[0];
            loss += softplus(z) - self.y[i] * z;
        }
        loss / n + dot(w, w) / (2.0 * self.lambda * n)
    }

    pub fn value_and_grad(&self, params: &[f64]) -> (f64, Vec<f64>) {
        let (w, b) = params.split_at(self.d);
        let n = self.n as f64;
        let mut loss = 0.0;
        let mut grad = vec![0.0; self.d + 1];
        for i in 0..self.n {
            let row = &self.x[i * self.d..(i + 1) * self.d];
            let z = dot(row, w) + b[0];
            loss += softplus(z) - self.y[i] * z;
            let r = sigmoid(z) - self.y[i];
            if r != 0.0 {
                for (g, &xv) in grad[..self.d].iter_mut().zip(row) {
                    *g += r * xv;
                }
                grad[self.d] += r;
            }
        }
        let reg = 1.0 / (self.lambda * n);
        for (g, &wv) in grad[..self.d].iter_mut().zip(w) {
            *g = *g / n + reg * wv;
        }
        grad[self.d] /= n;
        (loss / n + dot(w, w) * reg / 2.0, grad)
    }
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    mean: Vec<f64>,
    scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub bias: f64,
    /// Objective value at the start and after every accepted step.
    pub history: Vec<f64>,
    pub converged: bool,
}

impl LogisticModel {
    pub fn iterations(&self) -> usize {
        self.history.len() - 1
    }

    pub fn predict(&self, x: &FeatureMatrix) -> Vec<f64> {
        (0..x.rows())
            .map(|i| {
                let z: f64 = x
                    .row(i)
                    .iter()
                    .zip(&self.mean)
                    .zip(&self.scale)
                    .zip(&self.weights)
                    .map(|(((v, m), s), w)| (v - m) / s * w)
                    .sum();
                sigmoid(z + self.bias)
            })
            .collect()
    }
}

/// Column means and standard deviations; constant columns get scale 1 so
/// they standardize to zero.
pub(crate) fn column_stats(x: &FeatureMatrix) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (x.rows() as f64, x.cols());
    let mut mean = vec![0.0; d];
    for i in 0..x.rows() {
        for (m, v) in mean.iter_mut().zip(x.row(i)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = vec![0.0; d];
    for i in 0..x.rows() {
        for ((s, v), m) in var.iter_mut().zip(x.row(i)).zip(&mean) {
            *s += (v - m) * (v - m);
        }
    }
    let scale = var
        .into_iter()
        .map(|s| {
            let sd = (s / n).sqrt();
            if sd > 1e-12 {
                sd
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

pub(crate) fn standardize(x: &FeatureMatrix, mean: &[f64], scale: &[f64]) -> FeatureMatrix {
    let data = (0..x.rows())
        .flat_map(|i| {
            x.row(i)
                .iter()
                .zip(mean)
                .zip(scale)
                .map(|((v, m), s)| (v - m) / s)
                .collect::<Vec<_>>()
        })
        .collect();
    FeatureMatrix::from_vec(x.rows(), x.cols(), data)
}

/// Minimizes `f` from `start` by limited-memory BFGS with backtracking
/// line search. Returns the minimizer, the objective trace and whether the
/// gradient tolerance was reached.
pub fn lbfgs<F>(f: F, start: Vec<f64>, tol: f64, max_iter: usize) -> (Vec<f64>, Vec<f64>, bool)
where
    F: Fn(&[f64]) -> (f64, Vec<f64>),
{
    let mut x = start;
    let (mut fx, mut g) = f(&x);
    let mut history = vec![fx];
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    for _ in 0..max_iter {
        if norm(&g) <= tol {
            return (x, history, true);
        }
        let mut accepted = None;
        // A failed quasi-Newton step retries once along the plain gradient.
        for use_memory in [true, false] {
            if !use_memory && memory.is_empty() {
                break;
            }
            let dir = if use_memory {
                direction(&g, &memory)
            } else {
                g.iter().map(|v| -v).collect()
            };
            let slope = dot(&g, &dir);
            if slope >= 0.0 {
                continue;
            }
            let mut step = if memory.is_empty() || !use_memory {
                (1.0 / norm(&g)).min(1.0)
            } else {
                1.0
            };
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
                let (ft, gt) = f(&trial);
                if ft.is_finite() && ft <= fx + ARMIJO * step * slope {
                    accepted = Some((trial, ft, gt));
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() {
                break;
            }
            memory.clear();
        }
        let Some((xn, fnew, gn)) = accepted else {
            // No descent is representable in floating point any more.
            return (x, history, norm(&g) <= tol);
        };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm(&s) * norm(&y) {
            if memory.len() == MEMORY {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        x = xn;
        fx = fnew;
        g = gn;
        history.push(fx);
    }
    let converged = norm(&g) <= tol;
    (x, history, converged)
}

/// Two-loop recursion for `-H·g`.
fn direction(g: &[f64], memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = vec![0.0; memory.len()];
    for (k, (s, y, rho)) in memory.iter().enumerate().rev() {
        alpha[k] = rho * dot(s, &q);
        q.iter_mut()
            .zip(y)
            .for_each(|(qi, yi)| *qi -= alpha[k] * yi);
    }
    if let Some((s, y, _)) = memory.back() {
        let gamma = dot(s, y) / dot(y, y);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for (k, (s, y, rho)) in memory.iter().enumerate() {
        let beta = rho * dot(y, &q);
        q.iter_mut()
            .zip(s)
            .for_each(|(qi, si)| *qi += (alpha[k] - beta) * si);
    }
    q.iter_mut().for_each(|v| *v = -*v);
    q
}

/// Standardizes with training statistics and fits the regularized model.
pub fn fit_logreg(
    train_x: &FeatureMatrix,
    train_y: &[bool],
    lambda: f64,
) -> Result<LogisticModel, HarnessError> {
    if train_x.rows() == 0 {
        return Err(HarnessError::EmptyTrain);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(HarnessError::InvalidHyperParam(format!(
            "lambda = {lambda}"
        )));
    }
    if let Some((row, col)) = train_x.first_non_finite() {
        return Err(HarnessError::NonFiniteFeature { row, col });
    }
    let (mean, scale) = column_stats(train_x);
    let z = standardize(train_x, &mean, &scale);
    let objective = LogisticObjective::new(&z, train_y, lambda);
    let (params, history, converged) = lbfgs(
        |p| objective.value_and_grad(p),
        vec![0.0; objective.dim()],
        GRADIENT_TOLERANCE,
        MAX_ITERATIONS,
    );
    if !converged {
        log::debug!(
            "logreg (lambda {lambda}) stopped after {} iterations",
            history.len() - 1
        );
    }
    let d = train_x.cols();
    Ok(LogisticModel {
        mean,
        scale,
        weights: params[..d].to_vec(),
        bias: params[d],
        history,
        converged,
    })
}

/// Predicted positive-class probabilities for `test_x`.
pub fn train_predict_logreg(
    train_x: &FeatureMatrix,
    train_y: &[bool],
    test_x: &FeatureMatrix,
    lambda: f64,
) -> Result<Vec<f64>, HarnessError> {
    if let Some((row, col)) = test_x.first_non_finite() {
        return Err(HarnessError::NonFiniteFeature { row, col });
    }
    Ok(fit_logreg(train_x, train_y, lambda)?.predict(test_x))
}
