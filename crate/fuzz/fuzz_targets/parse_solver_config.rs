#![no_main]

use cycle_census::io::parse_solver_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    if let Ok(text) = std::str::from_utf8(data) {
        if let Ok(cfg) = parse_solver_config(text) {
            let _ = cfg.center_tol_for(3, 1e-4);
        }
    }
});
