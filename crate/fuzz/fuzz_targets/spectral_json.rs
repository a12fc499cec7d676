#![no_main]
use libfuzzer_sys::fuzz_target;
use dirac::io::{emit_spectral_json, parse_spectral_json};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(spec) = parse_spectral_json(s) {
            let again = parse_spectral_json(&emit_spectral_json(&spec)).unwrap();
            assert_eq!(spec, again);
        }
    }
});
