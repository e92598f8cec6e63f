#![no_main]

use libfuzzer_sys::fuzz_target;
use rankscope_service::ServiceConfig;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let _ = ServiceConfig::from_toml_str(text);
});
