//! Golden responses for every endpoint against the fixture store, plus the
//! ground-truth anchoring of ranges. Numbers are compared to 1e-9 relative so
//! the goldens survive libm differences across platforms; everything else
//! must match exactly.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use axum::body::Body;
use axum::http::Request;
use axum::Router;
use http_body_util::BodyExt;
use rankscope_service::{router, AppState};
use serde_json::Value;
use tower::ServiceExt;

use crate::support::{fixture_store, table, Checks};
use crate::Outcome;

const RANKERS: [&str; 6] = ["MART", "LambdaMART", "RankBoost", "RankingSVM", "CoordinateAscent", "ListNet"];

const CASES: &[(&str, &str)] = &[
    ("datasets", "/datasets"),
    ("years", "/datasets/synthetic/years"),
    ("attributes", "/datasets/synthetic/attributes"),
    ("rankers", "/datasets/synthetic/rankers"),
    ("unknown_dataset", "/datasets/nope/attributes"),
    ("deviation", "/deviation?dataset=synthetic&year=2012&rankers=MART,RankingSVM&lo=1&hi=15&threshold=2"),
    ("deviation_filtered", "/deviation?dataset=synthetic&year=2012&rankers=RankBoost&lo=30&hi=60&filter=x3:1:"),
    ("deviation_unknown_ranker", "/deviation?dataset=synthetic&year=2012&rankers=MART,AdaRank"),
    ("explanations_lime", "/explanations?dataset=synthetic&year=2012&rankers=LambdaMART,ListNet&lo=1&hi=12&threshold=3"),
    ("explanations_ice_before", "/explanations?dataset=synthetic&year=2011&rankers=MART&lo=5&hi=14&method=ICE&threshold=1&average=before"),
    ("correlation", "/correlation?dataset=synthetic&year=2013&rankers=MART,LambdaMART,RankBoost,RankingSVM,CoordinateAscent,ListNet&lo=1&hi=5&attribute=x2"),
    ("agreement", "/agreement?dataset=synthetic&ranker=CoordinateAscent&year=2013"),
    ("compare_ranker", "/compare?mode=ranker&dataset=synthetic&year=2010&rankers=RankingSVM,MART&lo=1&hi=8"),
    ("compare_range", "/compare?mode=range&dataset=synthetic&year=2014&rankers=ListNet&range=1-50&range2=51-100&method=ICE"),
    ("compare_time", "/compare?mode=time&dataset=synthetic&year=2014&year2=2015&rankers=CoordinateAscent&lo=1&hi=10"),
    ("compare_missing_counterpart", "/compare?mode=time&dataset=synthetic&year=2014&rankers=MART"),
];

fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests").join("golden")
}

async fn fetch(app: &Router, uri: &str) -> (u16, Vec<u8>) {
    let resp = app
        .clone()
        .oneshot(Request::get(uri).body(Body::empty()).unwrap())
        .await
        .unwrap();
    let status = resp.status().as_u16();
    (status, resp.into_body().collect().await.unwrap().to_bytes().to_vec())
}

/// First difference between two documents, if any.
fn diff(path: &str, a: &Value, b: &Value) -> Option<String> {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            let tol = 1e-9 * x.abs().max(y.abs()).max(1.0);
            ((x - y).abs() > tol).then(|| format!("{path}: {x} vs {y}"))
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                return Some(format!("{path}: length {} vs {}", x.len(), y.len()));
            }
            x.iter().zip(y).enumerate().find_map(|(i, (u, v))| diff(&format!("{path}[{i}]"), u, v))
        }
        (Value::Object(x), Value::Object(y)) => {
            let keys: BTreeSet<&String> = x.keys().chain(y.keys()).collect();
            keys.into_iter().find_map(|k| match (x.get(k), y.get(k)) {
                (Some(u), Some(v)) => diff(&format!("{path}.{k}"), u, v),
                _ => Some(format!("{path}.{k}: present on one side only")),
            })
        }
        _ => (a != b).then(|| format!("{path}: {a} vs {b}")),
    }
}

fn ids_of(rows: &Value) -> BTreeSet<String> {
    rows.as_array()
        .unwrap()
        .iter()
        .map(|r| r["candidate_id"].as_str().unwrap().to_string())
        .collect()
}

async fn contract(c: &mut Checks) {
    let app = router(AppState::new(fixture_store().store(), 64));
    let update = std::env::var("UPDATE_GOLDEN").is_ok_and(|v| v == "1");
    let dir = golden_dir();
    if update {
        std::fs::create_dir_all(&dir).unwrap();
    }

    let mut matched = 0;
    for (name, uri) in CASES {
        let (status, body) = fetch(&app, uri).await;
        let (status2, body2) = fetch(&app, uri).await;
        if status != status2 || body != body2 {
            c.check(false, format!("{name}: repeated request returned different bytes"));
        }
        let value: Value = match serde_json::from_slice(&body) {
            Ok(v) => v,
            Err(e) => {
                c.check(false, format!("{name}: body is not JSON: {e}"));
                continue;
            }
        };
        if status >= 400 {
            let ok = value["code"].is_string() && value["message"].is_string() && value.get("detail").is_some();
            c.check(ok, format!("{name}: error body has code, message and detail"));
        }
        let doc = serde_json::json!({ "request": uri, "status": status, "body": value });
        let path = dir.join(format!("{name}.json"));
        if update {
            std::fs::write(&path, serde_json::to_string_pretty(&doc).unwrap() + "\n").unwrap();
            matched += 1;
            continue;
        }
        let Ok(text) = std::fs::read_to_string(&path) else {
            c.check(false, format!("{name}: missing golden {} (run with UPDATE_GOLDEN=1)", path.display()));
            continue;
        };
        let golden: Value = serde_json::from_str(&text).unwrap();
        match diff("", &golden, &doc) {
            None => matched += 1,
            Some(d) => c.check(false, format!("{name}: differs from golden at {d}")),
        }
    }
    c.check(
        matched == CASES.len(),
        format!("{matched}/{} golden responses match{}", CASES.len(), if update { " (rewritten)" } else { "" }),
    );

    // anchoring: the in-range candidate set is fixed by ground truth alone
    let table = table();
    let mut checked = 0;
    for year in [2010, 2013, 2015] {
        let group = table.query(year).unwrap();
        for (lo, hi) in [(1, 100), (30, 60), (1, 1), (90, 100), (51, 100)] {
            let expected: BTreeSet<String> = group
                .candidates
                .iter()
                .filter(|c| (lo..=hi).contains(&c.ground_truth_rank))
                .map(|c| c.candidate_id.clone())
                .collect();
            let mut selections: Vec<Vec<&str>> = RANKERS.iter().map(|r| vec![*r]).collect();
            selections.push(RANKERS.to_vec());
            selections.push(vec!["ListNet", "MART"]);
            for sel in selections {
                let q = format!("dataset=synthetic&year={year}&rankers={}&lo={lo}&hi={hi}", sel.join(","));
                let (_, dev) = fetch(&app, &format!("/deviation?{q}")).await;
                let dev: Value = serde_json::from_slice(&dev).unwrap();
                let (_, exp) = fetch(&app, &format!("/explanations?{q}")).await;
                let exp: Value = serde_json::from_slice(&exp).unwrap();
                let (_, cor) = fetch(&app, &format!("/correlation?{q}&attribute=x1")).await;
                let cor: Value = serde_json::from_slice(&cor).unwrap();
                let mut sets = vec![ids_of(&dev["rows"])];
                for block in exp["rankers"].as_array().unwrap() {
                    sets.push(ids_of(&block["rows"]));
                }
                sets.push(ids_of(&cor["points"]));
                if cor["points"].as_array().unwrap().len() != expected.len() * sel.len() {
                    c.check(false, format!("correlation {q}: expected one point per candidate and ranker"));
                }
                if let Some(bad) = sets.iter().find(|s| **s != expected) {
                    c.check(false, format!("{q}: in-range set of {} differs from ground truth ({})", bad.len(), expected.len()));
                }
                checked += 1;
            }
        }
    }
    c.note(format!("{checked} range/ranker selections anchored to ground truth across deviation, explanations and correlation"));
}

pub fn run() -> Outcome {
    let mut c = Checks::default();
    tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .unwrap()
        .block_on(contract(&mut c));
    c.finish()
}
