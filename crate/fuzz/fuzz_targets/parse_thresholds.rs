#![no_main]

use cycle_census::io::parse_thresholds;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(ts) = parse_thresholds(text) {
        assert!(ts.windows(2).all(|w| w[0] < w[1]));
    }
});
