#![no_main]

use cdma_paging::config::{parse_grid, MAX_GRID_POINTS};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else {
        return;
    };
    if let Ok(grid) = parse_grid(text) {
        assert!(!grid.is_empty() && grid.len() <= MAX_GRID_POINTS);
        assert!(grid.iter().all(|l| l.is_finite() && *l > 0.0));
        assert!(grid.windows(2).all(|w| w[0] < w[1]));
    }
});
