//! Local surrogate regression on ranking scores.
//!
//! Samples are drawn around the instance with per-attribute Gaussian noise
//! scaled by the background spread, scored with the ranker, weighted by an
//! exponential kernel on their distance from the instance, and fitted with a
//! weighted ridge regression on z-scored features.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{Background, ExplainConfig};
use crate::error::{Error, Result};
use crate::rankers::TrainedRanker;

#[derive(Debug, Clone, PartialEq)]
pub struct LimeExplanation {
    /// Slopes on z-scored attributes; 0 for attributes held fixed.
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    /// Weighted R² of the surrogate on its own samples.
    pub r_squared: f64,
    /// Attributes with zero background spread, held at the instance value.
    pub fixed: Vec<usize>,
}

/// Perturbed copies of `instance`, `z_j = x_j + ε σ_j` with `ε ~ N(0, 1)`.
/// Attributes with `σ_j = 0` are left unchanged.
pub fn draw_samples(instance: &[f64], background: &Background, n: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            instance
                .iter()
                .zip(&background.std)
                .map(|(&x, &s)| {
                    let e: f64 = StandardNormal.sample(&mut rng);
                    if s > 0.0 {
                        x + e * s
                    } else {
                        x
                    }
                })
                .collect()
        })
        .collect()
}

pub fn kernel_width(cfg: &ExplainConfig, p: usize) -> f64 {
    cfg.kernel_width.unwrap_or(0.75 * (p as f64).sqrt())
}

/// Solution of a weighted ridge regression with an unpenalized intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct RidgeFit {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Minimizes `Σ w_t (y_t - b - β·x_t)² + ridge ‖β‖²`.
pub fn weighted_ridge(x: &[Vec<f64>], y: &[f64], w: &[f64], ridge: f64) -> Result<RidgeFit> {
    let p = x.first().map_or(0, Vec::len);
    let total: f64 = w.iter().sum();
    if !(total > f64::MIN_POSITIVE) {
        return Err(Error::Explain(
            "all sample weights vanish; use a larger kernel width".into(),
        ));
    }
    let mut x_mean = vec![0.0; p];
    let mut y_mean = 0.0;
    for ((row, &yt), &wt) in x.iter().zip(y).zip(w) {
        for (m, v) in x_mean.iter_mut().zip(row) {
            *m += wt * v;
        }
        y_mean += wt * yt;
    }
    x_mean.iter_mut().for_each(|m| *m /= total);
    y_mean /= total;

    // normal equations on weighted-centred data
    let mut a = vec![vec![0.0; p]; p];
    let mut b = vec![0.0; p];
    let mut xc = vec![0.0; p];
    for ((row, &yt), &wt) in x.iter().zip(y).zip(w) {
        for j in 0..p {
            xc[j] = row[j] - x_mean[j];
        }
        let yc = yt - y_mean;
        for j in 0..p {
            b[j] += wt * xc[j] * yc;
            for k in 0..=j {
                a[j][k] += wt * xc[j] * xc[k];
            }
        }
    }
    for j in 0..p {
        a[j][j] += ridge;
        for k in 0..j {
            a[k][j] = a[j][k];
        }
    }
    let coefficients = cholesky_solve(a, b)?;
    let intercept = y_mean - coefficients.iter().zip(&x_mean).map(|(c, m)| c * m).sum::<f64>();

    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    for ((row, &yt), &wt) in x.iter().zip(y).zip(w) {
        let fit = intercept + coefficients.iter().zip(row).map(|(c, v)| c * v).sum::<f64>();
        ss_res += wt * (yt - fit).powi(2);
        ss_tot += wt * (yt - y_mean).powi(2);
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(RidgeFit {
        coefficients,
        intercept,
        r_squared,
    })
}

fn cholesky_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= a[j][k] * a[j][k];
        }
        if !(d > 0.0) {
            return Err(Error::Explain("surrogate design is not positive definite".into()));
        }
        let d = d.sqrt();
        a[j][j] = d;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= a[i][k] * a[j][k];
            }
            a[i][j] = s / d;
        }
    }
    for i in 0..n {
        for k in 0..i {
            b[i] -= a[i][k] * b[k];
        }
        b[i] /= a[i][i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            b[i] -= a[k][i] * b[k];
        }
        b[i] /= a[i][i];
    }
    Ok(b)
}

pub fn lime_explain(
    ranker: &TrainedRanker,
    instance: &[f64],
    background: &Background,
    cfg: &ExplainConfig,
    seed: u64,
) -> Result<LimeExplanation> {
    let p = background.n_attributes();
    if instance.len() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: instance.len(),
        });
    }
    if cfg.samples < 2 {
        return Err(Error::Config("at least two LIME samples are required".into()));
    }
    let samples = draw_samples(instance, background, cfg.samples, seed);
    let scores = ranker.score(&samples)?;

    let active: Vec<usize> = (0..p).filter(|&j| background.std[j] > 0.0).collect();
    let fixed: Vec<usize> = (0..p).filter(|&j| background.std[j] <= 0.0).collect();
    let kappa = kernel_width(cfg, p);

    let mut design = Vec::with_capacity(samples.len());
    let mut weights = Vec::with_capacity(samples.len());
    for s in &samples {
        let mut d2 = 0.0;
        let row: Vec<f64> = active
            .iter()
            .map(|&j| {
                let z = background.z_score(j, s[j]);
                d2 += (z - background.z_score(j, instance[j])).powi(2);
                z
            })
            .collect();
        design.push(row);
        weights.push((-d2 / (kappa * kappa)).exp());
    }
    let fit = weighted_ridge(&design, &scores, &weights, cfg.ridge)?;
    let mut coefficients = vec![0.0; p];
    for (&j, &c) in active.iter().zip(&fit.coefficients) {
        coefficients[j] = c;
    }
    Ok(LimeExplanation {
        coefficients,
        intercept: fit.intercept,
        r_squared: fit.r_squared,
        fixed,
    })
}
