#![no_main]

use libfuzzer_sys::fuzz_target;
use rotcode::wigner::{PhaseGrid, MAX_AXIS_POINTS};

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = PhaseGrid::parse(text) {
        assert!(grid.x_values().len() <= MAX_AXIS_POINTS);
        assert!(grid.p_values().len() <= MAX_AXIS_POINTS);
        assert!(grid.x_values().iter().chain(grid.p_values()).all(|v| v.is_finite()));
    }
});
