use rankscope::agreement::{agreement_report, median, AgreementBasis, Histogram};
use rankscope::explain::{explain_range, Background, ExplainConfig, Method};
use rankscope::pipeline::load_agreement;

use crate::support::{fixture_store, linear_truth, table, Checks, FIXTURE_SEED};
use crate::Outcome;

pub fn run() -> Outcome {
    let mut c = Checks::default();
    let table = table();
    let bg = Background::from_table(&table);
    let cfg = ExplainConfig::default();
    let ranker = linear_truth();

    let mut pooled = Vec::new();
    let mut histogram_ok = true;
    for q in &table.queries {
        let range = (1, q.len());
        let lime = explain_range(&ranker, q, &table.attribute_names, Method::Lime, range, &bg, &cfg, FIXTURE_SEED).unwrap();
        let ice = explain_range(&ranker, q, &table.attribute_names, Method::Ice, range, &bg, &cfg, FIXTURE_SEED).unwrap();
        let report = agreement_report(&lime, &ice, AgreementBasis::default()).unwrap();
        let defined: Vec<f64> = report.defined().collect();
        histogram_ok &= report.histogram.counts.iter().sum::<usize>() == defined.len();
        histogram_ok &= defined.len() + report.undefined == q.len();
        pooled.extend(defined);
    }
    let pooled_hist = Histogram::from_values(pooled.iter().copied());
    histogram_ok &= pooled_hist.counts.iter().sum::<usize>() == pooled.len();
    let m = median(&pooled).unwrap_or(f64::NAN);
    c.check(m >= 0.8, format!("median Pearson r over {} items = {m:.3} >= 0.8 (generating linear ranker)", pooled.len()));
    c.check(histogram_ok, "histogram counts equal the defined-correlation count for every year and pooled");

    // trained rankers from the fixture store, for reference
    let store = fixture_store().store();
    let mut info = Vec::new();
    for r in ["MART", "LambdaMART", "RankBoost", "RankingSVM", "CoordinateAscent", "ListNet"] {
        let mut all = Vec::new();
        for y in table.query_ids() {
            let a = load_agreement(&store, "synthetic", r, y).unwrap();
            if a.histogram.counts.iter().sum::<usize>() != a.defined().count() {
                c.check(false, format!("stored histogram for {r}/{y} does not sum to the defined count"));
            }
            all.extend(a.defined());
        }
        info.push(format!("{r} {:.2}", median(&all).unwrap_or(f64::NAN)));
    }
    c.note(format!("trained rankers (informational): {}", info.join(", ")));
    c.finish()
}
