//! Instance-wise ICE feature impact: the mean absolute deviation of a single
//! instance's individual conditional expectation curve.

use super::{Background, ExplainConfig};
use crate::error::{Error, Result};
use crate::rankers::TrainedRanker;

/// Quantile of sorted data with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = (n - 1) as f64 * q.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(n - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Levels `lo, …, hi` equally spaced, `size` of them (the midpoint if one).
pub fn grid_levels(size: usize, lo: f64, hi: f64) -> Vec<f64> {
    match size {
        0 => vec![],
        1 => vec![(lo + hi) / 2.0],
        g => (0..g)
            .map(|i| lo + (hi - lo) * i as f64 / (g - 1) as f64)
            .collect(),
    }
}

pub fn grid(background: &Background, j: usize, cfg: &ExplainConfig) -> Vec<f64> {
    grid_levels(cfg.grid_size, cfg.grid_low, cfg.grid_high)
        .into_iter()
        .map(|q| quantile(&background.sorted[j], q))
        .collect()
}

/// Scores of `instance` with attribute `j` replaced by each grid value.
pub fn ice_curve(ranker: &TrainedRanker, instance: &[f64], j: usize, grid: &[f64]) -> Result<Vec<f64>> {
    let rows: Vec<Vec<f64>> = grid
        .iter()
        .map(|&v| {
            let mut r = instance.to_vec();
            r[j] = v;
            r
        })
        .collect();
    ranker.score(&rows)
}

/// `(1/G) Σ_g |c_g - mean(c)|`.
pub fn curve_impact(curve: &[f64]) -> f64 {
    if curve.is_empty() {
        return 0.0;
    }
    let g = curve.len() as f64;
    let mean = curve.iter().sum::<f64>() / g;
    curve.iter().map(|c| (c - mean).abs()).sum::<f64>() / g
}

#[derive(Debug, Clone, PartialEq)]
pub struct IceExplanation {
    pub impacts: Vec<f64>,
    /// Attributes with a constant background column, reported as impact 0.
    pub constant: Vec<usize>,
}

pub fn ice_impact(
    ranker: &TrainedRanker,
    instance: &[f64],
    j: usize,
    background: &Background,
    cfg: &ExplainConfig,
) -> Result<f64> {
    let p = background.n_attributes();
    if instance.len() != p {
        return Err(Error::Dimension {
            expected: p,
            actual: instance.len(),
        });
    }
    if j >= p {
        return Err(Error::Explain(format!("attribute index {j} out of range (p = {p})")));
    }
    if background.std[j] <= 0.0 {
        return Ok(0.0);
    }
    let g = grid(background, j, cfg);
    Ok(curve_impact(&ice_curve(ranker, instance, j, &g)?))
}

pub fn ice_explain(
    ranker: &TrainedRanker,
    instance: &[f64],
    background: &Background,
    cfg: &ExplainConfig,
) -> Result<IceExplanation> {
    if cfg.grid_size == 0 {
        return Err(Error::Config("ICE grid size must be at least 1".into()));
    }
    let p = background.n_attributes();
    let impacts = (0..p)
        .map(|j| ice_impact(ranker, instance, j, background, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(IceExplanation {
        impacts,
        constant: (0..p).filter(|&j| background.std[j] <= 0.0).collect(),
    })
}
