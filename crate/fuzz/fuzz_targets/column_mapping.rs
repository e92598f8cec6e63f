#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::dataset::{ingest_csv_reader, ColumnMapping};

const SAMPLE: &[u8] = b"year,entity,rank,x1\n2010,a,1,0.5\n2010,b,2,0.1\n";

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(mapping) = ColumnMapping::from_toml_str(text) {
        let _ = ingest_csv_reader(SAMPLE, &mapping, "fuzz");
    }
});
