#![no_main]

use cycle_census::io::parse_field_json;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(text) = std::str::from_utf8(data) else { return };
    let Ok(field) = parse_field_json(text) else { return };
    // serialization must round-trip bit for bit
    let again = parse_field_json(&serde_json::to_string(&field).unwrap()).unwrap();
    let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
    assert_eq!(bits(field.to_vector()), bits(again.to_vector()));
    let _ = field.polar();
});
