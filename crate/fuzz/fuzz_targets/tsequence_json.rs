#![no_main]
use libfuzzer_sys::fuzz_target;
use dirac::io::{emit_tsequence_json, parse_tsequence_json};

fuzz_target!(|data: String| {
    if let Ok(t) = parse_tsequence_json(&data) {
        assert_eq!(t, parse_tsequence_json(&emit_tsequence_json(&t)).unwrap());
    }
});
