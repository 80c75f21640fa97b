#![no_main]

use knnavg::experiment::{expand_grid, ExperimentGrid};
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(grid) = ExperimentGrid::from_toml_str(text) {
        // accepted grids are valid; only expand small ones
        grid.validate().expect("parsed grids validate");
        if grid.run_count() <= 10_000 {
            let runs = expand_grid(&grid).expect("valid grids expand");
            assert_eq!(runs.len() as u128, grid.run_count());
        }
    }
});
