//! Text entry points for user-supplied inputs.
//!
//! Every parser rejects malformed input with an error and never panics.

use thiserror::Error;

use crate::ensembles::{ExperimentConfig, SampleRecord};
use crate::family::FamilySpec;
use crate::field::PlanarField;
use crate::poincare::SolverConfig;

#[derive(Debug, Error)]
pub enum ParseError {
    #[error("invalid JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid threshold list: {0}")]
    Thresholds(String),
    #[error("{0}")]
    Invalid(String),
}

/// A field as `{"degree": d, "a": [[..], ..], "b": [[..], ..]}`.
pub fn parse_field_json(text: &str) -> Result<PlanarField, ParseError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_solver_config(text: &str) -> Result<SolverConfig, ParseError> {
    let cfg: SolverConfig = serde_json::from_str(text)?;
    cfg.validate().map_err(|e| ParseError::Invalid(e.to_string()))?;
    Ok(cfg)
}

pub fn parse_family_spec(text: &str) -> Result<FamilySpec, ParseError> {
    Ok(serde_json::from_str(text)?)
}

pub fn parse_experiment_config(text: &str) -> Result<ExperimentConfig, ParseError> {
    Ok(serde_json::from_str(text)?)
}

/// One line of a sample JSONL file.
pub fn parse_sample_record(line: &str) -> Result<SampleRecord, ParseError> {
    Ok(serde_json::from_str(line)?)
}

/// Comma-separated thresholds with optional inclusive ranges, e.g.
/// `0,1,4-8`. The result is sorted and deduplicated.
pub fn parse_thresholds(text: &str) -> Result<Vec<u32>, ParseError> {
    let bad = |m: &str| ParseError::Thresholds(m.to_string());
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        if part.is_empty() {
            return Err(bad("empty entry"));
        }
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: u32 = lo.trim().parse().map_err(|_| bad(part))?;
                let hi: u32 = hi.trim().parse().map_err(|_| bad(part))?;
                if lo > hi || hi - lo > 100_000 {
                    return Err(bad(part));
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().map_err(|_| bad(part))?),
        }
        if out.len() > 100_000 {
            return Err(bad("too many thresholds"));
        }
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thresholds() {
        assert_eq!(parse_thresholds("3, 0,1-2,2").unwrap(), vec![0, 1, 2, 3]);
        for bad in ["", "1,,2", "a", "5-2", "-1", "1-"] {
            assert!(parse_thresholds(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn field_json_roundtrip() {
        let f = parse_field_json(r#"{"degree":1,"a":[[0.001,0.0]],"b":[[0.0,0.002]]}"#).unwrap();
        assert_eq!(f.degree(), 1);
        assert!(parse_field_json(r#"{"degree":2,"a":[[0.0,0.0]],"b":[[0.0,0.0]]}"#).is_err());
    }

    #[test]
    fn solver_config_rejects_bad_values() {
        assert!(parse_solver_config("{}").is_ok());
        assert!(parse_solver_config(r#"{"picard_tol": -1.0}"#).is_err());
        assert!(parse_solver_config(r#"{"bogus": 1}"#).is_err());
    }

    #[test]
    fn family_spec() {
        let s = parse_family_spec(r#"{"family":"monomial","k":3,"scaled":false,"s":0.5}"#).unwrap();
        assert!(s.build().is_ok());
        let s = parse_family_spec(r#"{"family":"ode-flow","dimension":2,"field":{"kind":"zero"},"t":0.5}"#).unwrap();
        assert!(s.build().is_ok());
    }
}
