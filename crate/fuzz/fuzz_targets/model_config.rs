#![no_main]

use libfuzzer_sys::fuzz_target;
use whittle_core::config::ModelSpec;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        let _ = ModelSpec::parse(text);
    }
});
