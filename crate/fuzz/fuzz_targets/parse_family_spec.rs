#![no_main]

use cycle_census::io::parse_family_spec;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    if let Ok(spec) = parse_family_spec(text) {
        // building validates every parameter block
        let _ = spec.build();
    }
});
