#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::dataset::{parse_letor, write_letor};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = parse_letor(text, "fuzz") {
        table.validate().expect("parsed table must validate");
        let mut out = Vec::new();
        if write_letor(&table, &mut out).is_ok() {
            parse_letor(std::str::from_utf8(&out).unwrap(), "fuzz").expect("written LETOR must parse");
        }
    }
});
