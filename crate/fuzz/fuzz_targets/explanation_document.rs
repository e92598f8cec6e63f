#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::explain::ExplanationMatrix;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(m) = ExplanationMatrix::from_document(text) {
        let doc = m.to_document().expect("accepted matrix must serialize");
        ExplanationMatrix::from_document(&doc).expect("round trip");
    }
});
