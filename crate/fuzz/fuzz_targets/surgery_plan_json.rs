#![no_main]
use libfuzzer_sys::fuzz_target;
use dirac::io::{emit_plan_json, parse_plan_json};

fuzz_target!(|data: &[u8]| {
    let Ok(s) = std::str::from_utf8(data) else { return };
    if let Ok(plan) = parse_plan_json(s) {
        assert_eq!(plan, parse_plan_json(&emit_plan_json(&plan)).unwrap());
    }
});
