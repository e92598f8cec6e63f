#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope_service::views::{AgreementQuery, CompareQuery, CorrelationQuery};
use rankscope_service::RangeQuery;

fuzz_target!(|data: &[u8]| {
    let Ok(query) = std::str::from_utf8(data) else { return };
    if let Ok(q) = RangeQuery::parse(query) {
        if let Some(r) = q.range {
            assert!(1 <= r.lo && r.lo <= r.hi);
        }
    }
    let _ = CorrelationQuery::parse(query);
    let _ = AgreementQuery::parse(query);
    let _ = CompareQuery::parse(query);
});
