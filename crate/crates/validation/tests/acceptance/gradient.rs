use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rankscope::rankers::listnet::{loss_and_gradient, rescale_labels};

use crate::support::Checks;
use crate::Outcome;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;

/// 5 candidates x 3 attributes, several random draws.
pub fn run() -> Outcome {
    let mut c = Checks::default();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst = 0.0f64;
    for _ in 0..25 {
        let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| rng.random_range(-2.0..2.0)).collect()).collect();
        let mut labels: Vec<u32> = (0..5).collect();
        for i in (1..5).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let targets = rescale_labels(&labels);
        let w: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let (_, grad) = loss_and_gradient(&w, &rows, &targets);
        let fd: Vec<f64> = (0..3)
            .map(|j| {
                let mut plus = w.clone();
                let mut minus = w.clone();
                plus[j] += H;
                minus[j] -= H;
                (loss_and_gradient(&plus, &rows, &targets).0 - loss_and_gradient(&minus, &rows, &targets).0) / (2.0 * H)
            })
            .collect();
        let diff: f64 = grad.iter().zip(&fd).map(|(g, f)| (g - f).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = fd.iter().map(|f| f * f).sum::<f64>().sqrt().max(1e-12);
        worst = worst.max(diff / norm);
    }
    c.check(worst <= TOL, format!("25 random 5x3 problems, max relative error {worst:.2e} (tolerance {TOL:.0e})"));
    c.finish()
}
