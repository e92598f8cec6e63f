//! For a linear ranker each ICE curve is `w_j g + const`, so its mean absolute
//! deviation is `|w_j| · MAD(grid_j)`. The grid is rebuilt here from sorted
//! background values.

use rankscope::explain::{ice_impact, Background, ExplainConfig};

use crate::support::{linear_truth, spec, table, Checks};
use crate::Outcome;

const TOL: f64 = 5e-2;

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mad(v: &[f64]) -> f64 {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter().map(|x| (x - m).abs()).sum::<f64>() / v.len() as f64
}

pub fn run() -> Outcome {
    let mut c = Checks::default();
    let table = table();
    let bg = Background::from_table(&table);
    let cfg = ExplainConfig::default();
    let ranker = linear_truth();
    let w = spec().weights;
    let p = table.n_attributes();

    let mut expected = Vec::with_capacity(p);
    for j in 0..p {
        let mut col = table.column(j);
        col.sort_by(f64::total_cmp);
        let g: Vec<f64> = (0..cfg.grid_size)
            .map(|k| {
                let q = cfg.grid_low + (cfg.grid_high - cfg.grid_low) * k as f64 / (cfg.grid_size - 1) as f64;
                quantile(&col, q)
            })
            .collect();
        expected.push(w[j].abs() * mad(&g));
    }

    let mut worst = 0.0f64;
    let mut group_mean = vec![0.0; p];
    let rows: Vec<&[f64]> = table.all_rows().collect();
    for row in &rows {
        for j in 0..p {
            let got = ice_impact(&ranker, row, j, &bg, &cfg).unwrap();
            worst = worst.max((got - expected[j]).abs() / expected[j]);
            group_mean[j] += got / rows.len() as f64;
        }
    }
    c.check(
        worst <= TOL,
        format!("{} instances x {p} attributes, max relative error {worst:.2e} (tolerance {TOL:.0e})", rows.len()),
    );
    let group_worst = (0..p)
        .map(|j| (group_mean[j] - expected[j]).abs() / expected[j])
        .fold(0.0, f64::max);
    c.check(group_worst <= TOL, format!("group-wise impact max relative error {group_worst:.2e}"));
    c.finish()
}
