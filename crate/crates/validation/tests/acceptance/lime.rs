//! The library fit is compared with `(X'WX + Λ)⁻¹ X'Wy` on an intercept-
//! augmented design, solved densely with nalgebra, using the same perturbed
//! samples.

use nalgebra::{DMatrix, DVector};
use rankscope::explain::lime::draw_samples;
use rankscope::explain::{lime_explain, Background, ExplainConfig};
use rankscope::pipeline::load_trained;
use rankscope::rankers::TrainedRanker;

use crate::support::{fixture_store, linear_truth, population_moments, spearman, table, Checks, FIXTURE_SEED};
use crate::Outcome;

const TOL: f64 = 1e-8;

fn closed_form(
    ranker: &TrainedRanker,
    instance: &[f64],
    mean: &[f64],
    std: &[f64],
    bg: &Background,
    cfg: &ExplainConfig,
    seed: u64,
) -> Vec<f64> {
    let p = instance.len();
    let samples = draw_samples(instance, bg, cfg.samples, seed);
    let y = ranker.score(&samples).unwrap();
    let kappa = 0.75 * (p as f64).sqrt();
    let z = |j: usize, v: f64| (v - mean[j]) / std[j];
    let n = samples.len();
    let mut x = DMatrix::<f64>::zeros(n, p + 1);
    let mut w = DVector::<f64>::zeros(n);
    for (t, s) in samples.iter().enumerate() {
        x[(t, 0)] = 1.0;
        let mut d2 = 0.0;
        for j in 0..p {
            x[(t, j + 1)] = z(j, s[j]);
            d2 += (z(j, s[j]) - z(j, instance[j])).powi(2);
        }
        w[t] = (-d2 / (kappa * kappa)).exp();
    }
    let xtw = x.transpose() * DMatrix::from_diagonal(&w);
    let mut a = &xtw * &x;
    for j in 1..=p {
        a[(j, j)] += cfg.ridge;
    }
    let b = &xtw * DVector::from_vec(y);
    let beta = a.lu().solve(&b).expect("non-singular normal equations");
    beta.iter().skip(1).copied().collect()
}

pub fn run() -> Outcome {
    let mut c = Checks::default();
    let table = table();
    let bg = Background::from_table(&table);
    let (mean, std) = population_moments(&table);
    let cfg = ExplainConfig::default();
    let store = fixture_store().store();

    let mut rankers = vec![linear_truth()];
    for id in ["MART", "RankBoost", "RankingSVM"] {
        rankers.push(load_trained(&store, "synthetic", id).unwrap());
    }
    let mut worst = 0.0f64;
    let mut cases = 0;
    for r in &rankers {
        for q in &table.queries {
            for cand in q.candidates.iter().step_by(17) {
                let seed = FIXTURE_SEED ^ cases;
                let got = lime_explain(r, &cand.attributes, &bg, &cfg, seed).unwrap().coefficients;
                let want = closed_form(r, &cand.attributes, &mean, &std, &bg, &cfg, seed);
                let diff: f64 = got.iter().zip(&want).map(|(g, w)| (g - w).powi(2)).sum::<f64>().sqrt();
                let norm: f64 = want.iter().map(|w| w * w).sum::<f64>().sqrt();
                worst = worst.max(if norm > 0.0 { diff / norm } else { diff });
                cases += 1;
            }
        }
    }
    c.check(
        worst <= TOL,
        format!("{cases} instances over {} rankers, max relative error {worst:.2e} (tolerance {TOL:.0e})", rankers.len()),
    );

    // attribute recovery: mean |coefficient| vs |w*_j σ_j|
    let truth = linear_truth();
    let p = table.n_attributes();
    let mut mean_abs = vec![0.0; p];
    let mut n = 0.0;
    for (k, row) in table.all_rows().enumerate() {
        let e = lime_explain(&truth, row, &bg, &cfg, FIXTURE_SEED ^ k as u64).unwrap();
        for j in 0..p {
            mean_abs[j] += e.coefficients[j].abs();
        }
        n += 1.0;
    }
    mean_abs.iter_mut().for_each(|m| *m /= n);
    let expected: Vec<f64> = crate::support::spec().weights.iter().zip(&std).map(|(w, s)| (w * s).abs()).collect();
    let rho = spearman(&mean_abs, &expected);
    c.check(
        rho >= 0.9,
        format!(
            "Spearman(mean |coef|, |w*σ|) = {rho:.3} >= 0.9; mean |coef| {:?} vs |w*σ| {:?}",
            round3(&mean_abs),
            round3(&expected)
        ),
    );
    c.finish()
}

fn round3(v: &[f64]) -> Vec<f64> {
    v.iter().map(|x| (x * 1000.0).round() / 1000.0).collect()
}
