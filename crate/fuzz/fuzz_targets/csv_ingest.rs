#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::dataset::{ingest_csv_reader, ColumnMapping};

fuzz_target!(|data: &[u8]| {
    let mapping = ColumnMapping::new("year", "entity", "rank");
    if let Ok(ingested) = ingest_csv_reader(data, &mapping, "fuzz") {
        ingested.table.validate().expect("ingested table must validate");
    }
});
