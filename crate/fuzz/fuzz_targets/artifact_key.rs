#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope::store::ArtifactKey;

fuzz_target!(|data: &[u8]| {
    let Ok(path) = std::str::from_utf8(data) else { return };
    if let Ok(key) = ArtifactKey::from_relative_path(path) {
        let back = key.relative_path().expect("accepted key must have a path");
        assert_eq!(ArtifactKey::from_relative_path(&back).unwrap(), key);
    }
});
