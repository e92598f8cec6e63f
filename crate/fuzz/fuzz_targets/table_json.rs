#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::dataset::RankingTable;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(table) = RankingTable::from_json(text) {
        table.validate().expect("accepted table must validate");
    }
});
