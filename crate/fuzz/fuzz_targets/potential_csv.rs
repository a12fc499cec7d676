#![no_main]
use libfuzzer_sys::fuzz_target;
use dirac::io::{emit_potential_csv, parse_potential_csv};

fuzz_target!(|data: &[u8]| {
    if let Ok(s) = std::str::from_utf8(data) {
        if let Ok(pot) = parse_potential_csv(s) {
            let grid = pot.natural_grid();
            let text = emit_potential_csv(&pot, &grid).unwrap();
            let again = parse_potential_csv(&text).unwrap();
            assert_eq!(pot.sample(&grid).unwrap(), again.sample(&grid).unwrap());
        }
    }
});
