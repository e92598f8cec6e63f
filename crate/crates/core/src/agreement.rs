//! Item-wise agreement between LIME and ICE explanations, as the Pearson
//! correlation of each candidate's two importance vectors.

use serde::{Deserialize, Serialize};

use crate::dataset::QueryId;
use crate::error::{Error, Result};
use crate::explain::{normalize_values, ExplanationMatrix, Method};

pub const AGREEMENT_VERSION: u32 = 1;
pub const HISTOGRAM_BINS: usize = 20;

/// Pearson r, or `None` when either vector is constant.
pub fn pearson(a: &[f64], b: &[f64]) -> Result<Option<f64>> {
    if a.len() != b.len() {
        return Err(Error::Explain(format!(
            "cannot correlate vectors of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Explain("correlation needs at least two attributes".into()));
    }
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa == 0.0 || sbb == 0.0 {
        return Ok(None);
    }
    Ok(Some((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0)))
}

/// Lower edge of bin `k` over `[-1, 1]`.
fn edge(k: usize) -> f64 {
    (k as f64 - 10.0) / 10.0
}

/// Bin of `r`: `[edge(k), edge(k+1))`, with the last bin closed at 1.
pub fn bin_of(r: f64) -> usize {
    (0..HISTOGRAM_BINS).rev().find(|&k| r >= edge(k)).unwrap_or(0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    /// `bins + 1` edges from -1 to 1.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn from_values(values: impl IntoIterator<Item = f64>) -> Self {
        let mut counts = vec![0; HISTOGRAM_BINS];
        for r in values {
            counts[bin_of(r)] += 1;
        }
        Histogram {
            edges: (0..=HISTOGRAM_BINS).map(edge).collect(),
            counts,
        }
    }

    /// Tab-separated `low high count` rows with a header.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("low\thigh\tcount\n");
        for (k, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{}\t{}\t{c}\n", self.edges[k], self.edges[k + 1]));
        }
        out
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    })
}

/// Which vectors are correlated.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgreementBasis {
    /// `|LIME|` and ICE, each min-max scaled over the explained range.
    #[default]
    NormalizedMagnitudes,
    /// Signed LIME coefficients and ICE impacts as produced.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub version: u32,
    pub dataset_id: String,
    pub ranker_id: String,
    pub query_id: QueryId,
    pub basis: AgreementBasis,
    pub candidate_ids: Vec<String>,
    /// `None` where either explanation is constant across attributes.
    pub correlations: Vec<Option<f64>>,
    pub histogram: Histogram,
    pub median: Option<f64>,
    pub undefined: usize,
}

impl AgreementReport {
    pub fn from_correlations(
        dataset_id: &str,
        ranker_id: &str,
        query_id: QueryId,
        basis: AgreementBasis,
        candidate_ids: Vec<String>,
        correlations: Vec<Option<f64>>,
    ) -> Self {
        let defined: Vec<f64> = correlations.iter().flatten().copied().collect();
        AgreementReport {
            version: AGREEMENT_VERSION,
            dataset_id: dataset_id.to_string(),
            ranker_id: ranker_id.to_string(),
            query_id,
            basis,
            candidate_ids,
            undefined: correlations.len() - defined.len(),
            histogram: Histogram::from_values(defined.iter().copied()),
            median: median(&defined),
            correlations,
        }
    }

    pub fn defined(&self) -> impl Iterator<Item = f64> + '_ {
        self.correlations.iter().flatten().copied()
    }
}

/// Correlates the rows of a LIME and an ICE matrix over the same candidates.
pub fn agreement_report(
    lime: &ExplanationMatrix,
    ice: &ExplanationMatrix,
    basis: AgreementBasis,
) -> Result<AgreementReport> {
    if lime.method != Method::Lime || ice.method != Method::Ice {
        return Err(Error::Explain("agreement needs one LIME and one ICE matrix".into()));
    }
    if lime.ranker_id != ice.ranker_id || lime.query_id != ice.query_id || lime.candidate_ids != ice.candidate_ids
    {
        return Err(Error::Explain(
            "LIME and ICE matrices cover different rankers, queries or candidates".into(),
        ));
    }
    let (a, b) = match basis {
        AgreementBasis::NormalizedMagnitudes => (normalize_values(&lime.magnitudes().raw), normalize_values(&ice.raw)),
        AgreementBasis::Raw => (lime.raw.clone(), ice.raw.clone()),
    };
    let correlations = a
        .iter()
        .zip(&b)
        .map(|(x, y)| pearson(x, y))
        .collect::<Result<Vec<_>>>()?;
    Ok(AgreementReport::from_correlations(
        &lime.dataset_id,
        &lime.ranker_id,
        lime.query_id,
        basis,
        lime.candidate_ids.clone(),
        correlations,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn pearson_examples() {
        assert!((pearson(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap().unwrap() - 1.0).abs() < 1e-15);
        assert!((pearson(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap().unwrap() + 1.0).abs() < 1e-15);
        // means 2/3 each; Σdxdy = -1/3, Σdx² = Σdy² = 2/3
        assert!((pearson(&[0.0, 1.0, 1.0], &[1.0, 0.0, 1.0]).unwrap().unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(pearson(&[1.0, 1.0], &[0.0, 3.0]).unwrap(), None);
        assert!(pearson(&[1.0, 2.0], &[1.0]).is_err());
    }

    #[test]
    fn histogram_edges_and_last_bin() {
        assert_eq!(bin_of(-1.0), 0);
        assert_eq!(bin_of(-0.9), 1);
        assert_eq!(bin_of(0.0), 10);
        assert_eq!(bin_of(0.95), 19);
        assert_eq!(bin_of(1.0), 19);
    }

    #[test]
    fn all_ones_fill_the_top_bin() {
        let r = AgreementReport::from_correlations(
            "d",
            "r",
            1,
            AgreementBasis::default(),
            vec!["a".into(), "b".into(), "c".into()],
            vec![Some(1.0); 3],
        );
        assert_eq!(r.histogram.counts[19], 3);
        assert_eq!(r.histogram.counts.iter().sum::<usize>(), 3);
        assert_eq!(r.median, Some(1.0));
    }

    #[test]
    fn symmetric_values_have_zero_median() {
        assert_eq!(median(&[-0.7, 0.7, -0.2, 0.2]), Some(0.0));
    }

    #[test]
    fn six_values_by_direct_binning() {
        let values = [-0.95, -0.5, 0.05, 0.1, 0.55, 0.99];
        let h = Histogram::from_values(values);
        // oracle: count values in each [lo, hi) by direct comparison
        for k in 0..HISTOGRAM_BINS {
            let lo = -1.0 + 0.1 * k as f64;
            let hi = lo + 0.1;
            let expected = values
                .iter()
                .filter(|&&v| v >= lo - 1e-12 && (v < hi - 1e-12 || (k == 19 && v <= 1.0)))
                .count();
            assert_eq!(h.counts[k], expected, "bin {k}");
        }
    }

    #[test]
    fn undefined_correlations_are_excluded() {
        let r = AgreementReport::from_correlations(
            "d",
            "r",
            1,
            AgreementBasis::default(),
            vec!["a".into(), "b".into()],
            vec![None, Some(0.3)],
        );
        assert_eq!(r.undefined, 1);
        assert_eq!(r.histogram.counts.iter().sum::<usize>(), 1);
        assert_eq!(r.median, Some(0.3));
    }

    #[test]
    fn tsv_has_one_row_per_bin() {
        let t = Histogram::from_values([0.5]).to_tsv();
        assert_eq!(t.lines().count(), HISTOGRAM_BINS + 1);
        assert!(t.contains("0.5\t0.6\t1"));
    }

    proptest! {
        #[test]
        fn pearson_is_symmetric_bounded_and_affine_invariant(
            a in prop::collection::vec(-100.0f64..100.0, 2..10),
            scale in 0.01f64..50.0,
            shift in -10.0f64..10.0,
        ) {
            let b: Vec<f64> = a.iter().rev().map(|v| v * 0.5 + 1.0).collect();
            let r1 = pearson(&a, &b).unwrap();
            let r2 = pearson(&b, &a).unwrap();
            prop_assert_eq!(r1, r2);
            if let Some(r) = r1 {
                prop_assert!((-1.0..=1.0).contains(&r));
                let moved: Vec<f64> = a.iter().map(|v| v * scale + shift).collect();
                let r3 = pearson(&moved, &b).unwrap().unwrap();
                prop_assert!((r - r3).abs() < 1e-9);
            }
        }
    }
}
