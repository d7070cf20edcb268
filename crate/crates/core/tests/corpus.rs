//! The checked-in fuzz corpus stays in sync with the parsers.

use std::fs;
use std::path::Path;

use cycle_census::io::{
    parse_experiment_config, parse_family_spec, parse_field_json, parse_sample_record, parse_solver_config,
    parse_thresholds,
};

fn seeds(target: &str) -> Vec<(String, String)> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| {
            let path = e.unwrap().path();
            (path.file_name().unwrap().to_string_lossy().into_owned(), fs::read_to_string(&path).unwrap())
        })
        .collect();
    out.sort();
    assert!(!out.is_empty(), "no seeds for {target}");
    out
}

#[test]
fn field_seeds_parse() {
    for (name, text) in seeds("parse_field_json") {
        parse_field_json(text.trim()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn solver_config_seeds_parse() {
    for (name, text) in seeds("parse_solver_config") {
        let parsed = parse_solver_config(&text);
        // odd_points carries an odd Simpson interval count and must be rejected
        assert_eq!(parsed.is_ok(), name != "odd_points.json", "{name}: {parsed:?}");
    }
}

#[test]
fn family_seeds_parse_and_build() {
    for (name, text) in seeds("parse_family_spec") {
        let spec = parse_family_spec(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        spec.build().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn experiment_seeds_parse_and_validate() {
    for (name, text) in seeds("parse_experiment_config") {
        let cfg = parse_experiment_config(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn threshold_seeds_parse() {
    for (name, text) in seeds("parse_thresholds") {
        parse_thresholds(&text).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}

#[test]
fn sample_record_seeds_parse() {
    for (name, text) in seeds("parse_sample_record") {
        parse_sample_record(text.trim()).unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
