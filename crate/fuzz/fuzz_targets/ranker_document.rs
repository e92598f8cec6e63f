#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::rankers::TrainedRanker;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ranker) = TrainedRanker::from_document(text) {
        let doc = ranker.to_document().expect("accepted ranker must serialize");
        TrainedRanker::from_document(&doc).expect("round trip");
    }
});
