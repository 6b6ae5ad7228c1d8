//! Exact t-SNE (O(n²) per iteration) for 2-d visualisation.
//!
//! Per-point Gaussian bandwidths are found by bisection on β = 1/(2σ²) so
//! that each conditional distribution has the target perplexity. The
//! embedding follows the usual schedule: early exaggeration of P for the
//! first iterations, momentum switching from 0.5 to 0.8, and per-coordinate
//! adaptive gains. Momentum and gains restart when exaggeration ends.

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::rng::RngStream;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TsneConfig {
    /// Target perplexity. `None` means 30; the effective value is capped at
    /// (n − 1) / 3 either way.
    pub perplexity: Option<f64>,
    pub iterations: usize,
    /// Step size. `None` scales it with the number of points:
    /// max(n / early_exaggeration / 4, 50).
    pub learning_rate: Option<f64>,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: None,
            iterations: 1000,
            learning_rate: None,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
        }
    }
}

pub const DEFAULT_PERPLEXITY: f64 = 30.0;
const INIT_SD: f64 = 1e-4;
const MIN_GAIN: f64 = 0.01;
const BISECTION_STEPS: usize = 100;
const ENTROPY_TOL: f64 = 1e-5;

impl TsneConfig {
    /// Perplexity actually used for `n` points.
    pub fn effective_perplexity(&self, n: usize) -> Result<f64, ExperimentError> {
        if n < 4 {
            return Err(ExperimentError::InvalidConfig(format!(
                "t-SNE needs at least 4 points, got {n}"
            )));
        }
        let requested = self.perplexity.unwrap_or(DEFAULT_PERPLEXITY);
        if !(requested > 0.0 && requested.is_finite()) {
            return Err(ExperimentError::InvalidConfig(format!(
                "perplexity must be positive, got {requested}"
            )));
        }
        if self.perplexity.is_some() && requested >= n as f64 {
            return Err(ExperimentError::InvalidConfig(format!(
                "perplexity {requested} must be below the number of points ({n})"
            )));
        }
        Ok(requested.min((n - 1) as f64 / 3.0))
    }

    /// Step size actually used for `n` points.
    pub fn effective_learning_rate(&self, n: usize) -> Result<f64, ExperimentError> {
        let lr = self
            .learning_rate
            .unwrap_or_else(|| (n as f64 / self.early_exaggeration.max(1.0) / 4.0).max(50.0));
        if lr > 0.0 && lr.is_finite() {
            Ok(lr)
        } else {
            Err(ExperimentError::InvalidConfig(format!(
                "learning rate must be positive, got {lr}"
            )))
        }
    }
}

fn squared_distances<V: AsRef<[f64]>>(x: &[V]) -> Result<Vec<f64>, ExperimentError> {
    let n = x.len();
    let dim = x[0].as_ref().len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        let xi = x[i].as_ref();
        if xi.len() != dim {
            return Err(ExperimentError::DimensionMismatch(dim, xi.len()));
        }
        if xi.iter().any(|v| !v.is_finite()) {
            return Err(ExperimentError::InvalidConfig(format!(
                "point {i} has non-finite coordinates"
            )));
        }
        for j in (i + 1)..n {
            let s: f64 = xi.iter().zip(x[j].as_ref()).map(|(a, b)| (a - b) * (a - b)).sum();
            d[i * n + j] = s;
            d[j * n + i] = s;
        }
    }
    Ok(d)
}

/// Fills `row` with p_{j|i} at precision `beta` and returns the entropy
/// (nats).
fn conditional_row(dist: &[f64], i: usize, beta: f64, row: &mut [f64]) -> f64 {
    // shift by the nearest neighbour distance so the largest weight is 1
    let min = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    for (j, (p, &d)) in row.iter_mut().zip(dist).enumerate() {
        *p = if j == i { 0.0 } else { (-(d - min) * beta).exp() };
        sum += *p;
    }
    let mut weighted = 0.0;
    for (p, &d) in row.iter_mut().zip(dist) {
        *p /= sum;
        weighted += *p * (d - min);
    }
    sum.ln() + beta * weighted
}

/// Bisection on β until the row entropy matches `target` (nats). Leaves the
/// calibrated distribution in `row` and returns β.
fn calibrate_row(dist: &[f64], i: usize, target: f64, row: &mut [f64]) -> f64 {
    let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
    let mut beta = 1.0;
    for _ in 0..BISECTION_STEPS {
        let h = conditional_row(dist, i, beta, row);
        if (h - target).abs() < ENTROPY_TOL {
            return beta;
        }
        if h > target {
            lo = beta;
            beta = if hi.is_finite() { (beta + hi) / 2.0 } else { beta * 2.0 };
        } else {
            hi = beta;
            beta = (beta + lo) / 2.0;
        }
    }
    conditional_row(dist, i, beta, row);
    beta
}

/// Symmetrised joint probabilities P (row-major n×n).
pub fn joint_probabilities<V: AsRef<[f64]>>(x: &[V], perplexity: f64) -> Result<Vec<f64>, ExperimentError> {
    let n = x.len();
    let d = squared_distances(x)?;
    let target = perplexity.ln();
    let mut cond = vec![0.0; n * n];
    for i in 0..n {
        let dist = &d[i * n..(i + 1) * n];
        calibrate_row(dist, i, target, &mut cond[i * n..(i + 1) * n]);
    }
    let mut p = vec![0.0; n * n];
    let denom = 2.0 * n as f64;
    for i in 0..n {
        for j in 0..n {
            p[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) / denom).max(1e-12);
        }
    }
    Ok(p)
}

/// Embeds `vectors` in two dimensions. Deterministic in `cfg.seed`.
pub fn tsne_2d<V: AsRef<[f64]>>(vectors: &[V], cfg: &TsneConfig) -> Result<Vec<[f64; 2]>, ExperimentError> {
    let n = vectors.len();
    let perplexity = cfg.effective_perplexity(n)?;
    let learning_rate = cfg.effective_learning_rate(n)?;
    let p = joint_probabilities(vectors, perplexity)?;

    let mut rng = RngStream::derive(cfg.seed, "tsne_init", 0);
    let normal = Normal::new(0.0, INIT_SD).expect("valid sd");
    let mut y: Vec<[f64; 2]> = (0..n)
        .map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)])
        .collect();
    let mut update = vec![[0.0f64; 2]; n];
    let mut gains = vec![[1.0f64; 2]; n];
    let mut num = vec![0.0; n * n];
    let mut grad = vec![[0.0f64; 2]; n];

    for iter in 0..cfg.iterations {
        let exaggeration = if iter < cfg.exaggeration_iters {
            cfg.early_exaggeration
        } else {
            1.0
        };
        let momentum = if iter < cfg.exaggeration_iters { 0.5 } else { 0.8 };
        if iter == cfg.exaggeration_iters {
            // second phase starts from rest; carrying the exaggerated
            // momentum over flings the embedding apart on small inputs
            update.iter_mut().for_each(|u| *u = [0.0; 2]);
            gains.iter_mut().for_each(|g| *g = [1.0; 2]);
        }

        // Student-t kernel and its normaliser
        let mut z = 0.0;
        for i in 0..n {
            num[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                let v = 1.0 / (1.0 + dx * dx + dy * dy);
                num[i * n + j] = v;
                num[j * n + i] = v;
                z += 2.0 * v;
            }
        }

        for i in 0..n {
            let mut g = [0.0; 2];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = num[i * n + j];
                let q = (w / z).max(1e-12);
                let m = (exaggeration * p[i * n + j] - q) * w;
                g[0] += m * (y[i][0] - y[j][0]);
                g[1] += m * (y[i][1] - y[j][1]);
            }
            grad[i] = [4.0 * g[0], 4.0 * g[1]];
        }

        for i in 0..n {
            for d in 0..2 {
                let g = grad[i][d];
                gains[i][d] = if g * update[i][d] < 0.0 {
                    gains[i][d] + 0.2
                } else {
                    gains[i][d] * 0.8
                }
                .max(MIN_GAIN);
                update[i][d] = momentum * update[i][d] - learning_rate * gains[i][d] * g;
                y[i][d] += update[i][d];
            }
        }
    }

    let mean = y.iter().fold([0.0; 2], |acc, p| [acc[0] + p[0], acc[1] + p[1]]);
    let (mx, my) = (mean[0] / n as f64, mean[1] / n as f64);
    for p in &mut y {
        p[0] -= mx;
        p[1] -= my;
    }

    if y.iter().flatten().any(|v| !v.is_finite()) {
        return Err(ExperimentError::InvalidConfig(
            "t-SNE diverged; try a lower learning rate".into(),
        ));
    }
    Ok(y)
}

/// Kullback-Leibler divergence between P and the embedding's Q.
pub fn kl_divergence(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut num = vec![0.0; n * n];
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let dx = y[i][0] - y[j][0];
                let dy = y[i][1] - y[j][1];
                num[i * n + j] = 1.0 / (1.0 + dx * dx + dy * dy);
                z += num[i * n + j];
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                let pij = p[i * n + j];
                kl += pij * (pij / (num[i * n + j] / z).max(1e-12)).ln();
            }
        }
    }
    kl
}
