#![no_main]

use cycle_census::io::parse_experiment_config;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(cfg) = parse_experiment_config(text) {
        let _ = cfg.validate();
        let _ = cfg.budget();
    }
});
