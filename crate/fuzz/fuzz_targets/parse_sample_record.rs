#![no_main]

use cycle_census::io::parse_sample_record;
use libfuzzer_sys::fuzz_target;

fuzz_target!(|data: &[u8]| {
    let Ok(line) = std::str::from_utf8(data) else { return };
    let Ok(record) = parse_sample_record(line) else { return };
    let again = parse_sample_record(&serde_json::to_string(&record).unwrap()).unwrap();
    assert_eq!(record, again);
});
