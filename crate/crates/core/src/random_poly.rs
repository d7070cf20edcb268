//! Random polynomial families `P_{k,v}(z) = sum_i a_{ik}(v) z^i` and their
//! zeros near the unit circle.

use std::f64::consts::{PI, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{polynomial_roots, winding_zero_count, AnalyticError, ComplexPoly, Count};
use crate::sampling::{complex_norm, sample_rng, uniform_complex_ball};
use crate::stats::ks_uniform01;
use crate::C64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RandomPolyError {
    #[error("annulus needs 0 < inner < outer, got ({inner}, {outer})")]
    InvalidAnnulus { inner: f64, outer: f64 },
    #[error("degree must be at least {min}, got {got}")]
    InvalidDegree { min: usize, got: usize },
    #[error("parameter has dimension {got}, family expects {expected}")]
    ParamDimension { got: usize, expected: usize },
    #[error("parameter norm {0} exceeds 1")]
    ParamOutOfRange(f64),
    #[error("coefficient condition violated: {0}")]
    Conditions(String),
    #[error("winding count failed: {0}")]
    Winding(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// `{inner < |z| < outer}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    pub inner: f64,
    pub outer: f64,
}

impl Annulus {
    /// `A_eps = {1 - eps < |z| < 1 + eps}`.
    pub fn from_epsilon(epsilon: f64) -> Result<Self, RandomPolyError> {
        Self::new(1.0 - epsilon, 1.0 + epsilon)
    }

    pub fn new(inner: f64, outer: f64) -> Result<Self, RandomPolyError> {
        if !(inner > 0.0 && inner < outer && outer.is_finite()) {
            return Err(RandomPolyError::InvalidAnnulus { inner, outer });
        }
        Ok(Annulus { inner, outer })
    }

    /// Image under `z -> 1/z`.
    pub fn inverted(&self) -> Self {
        Annulus { inner: 1.0 / self.outer, outer: 1.0 / self.inner }
    }
}

/// Root counts of one instance relative to an annulus. Roots lost to a
/// vanishing leading coefficient sit at infinity and count as outside.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnulusCounts {
    pub inside: usize,
    pub annulus: usize,
    pub outside: usize,
}

impl AnnulusCounts {
    pub fn total(&self) -> usize {
        self.inside + self.annulus + self.outside
    }
}

/// Coefficient maps `v -> a_{ik}(v)` of a polynomial family of degree `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoeffFamily {
    /// `a_{ik}(v) = v_{i+1}`, `v in C^{k+1}`.
    Kac { k: usize },
    /// Coefficients independent of `v`.
    Fixed { coeffs: Vec<C64> },
}

impl CoeffFamily {
    pub fn degree(&self) -> usize {
        match self {
            CoeffFamily::Kac { k } => *k,
            CoeffFamily::Fixed { coeffs } => coeffs.len().saturating_sub(1),
        }
    }

    pub fn param_dim(&self) -> usize {
        match self {
            CoeffFamily::Kac { k } => k + 1,
            CoeffFamily::Fixed { .. } => 1,
        }
    }

    /// `z^k - 1`.
    pub fn roots_of_unity(k: usize) -> Self {
        let mut coeffs = vec![C64::new(0.0, 0.0); k + 1];
        coeffs[0] = C64::new(-1.0, 0.0);
        coeffs[k] = C64::new(1.0, 0.0);
        CoeffFamily::Fixed { coeffs }
    }

    /// Coefficient bounds over the unit parameter ball: `sup |a_i| <= 1`
    /// in the middle and `= 1` at both ends.
    pub fn validate(&self) -> Result<(), RandomPolyError> {
        let k = self.degree();
        if k < 1 {
            return Err(RandomPolyError::InvalidDegree { min: 1, got: k });
        }
        if let CoeffFamily::Fixed { coeffs } = self {
            for (i, a) in coeffs.iter().enumerate() {
                let m = a.norm();
                let end = i == 0 || i == k;
                if (end && (m - 1.0).abs() > 1e-12) || (!end && m > 1.0 + 1e-12) {
                    return Err(RandomPolyError::Conditions(format!("|a_{i}| = {m}")));
                }
            }
        }
        Ok(())
    }

    pub fn instantiate(&self, v: &[C64]) -> Result<ComplexPoly, RandomPolyError> {
        if v.len() != self.param_dim() {
            return Err(RandomPolyError::ParamDimension { got: v.len(), expected: self.param_dim() });
        }
        let norm = complex_norm(v);
        if norm > 1.0 + 1e-12 {
            return Err(RandomPolyError::ParamOutOfRange(norm));
        }
        Ok(match self {
            CoeffFamily::Kac { .. } => ComplexPoly::new(v.to_vec()),
            CoeffFamily::Fixed { coeffs } => ComplexPoly::new(coeffs.clone()),
        })
    }
}

/// Counts the roots of `p` (nominal degree `k`) inside, in and outside the
/// annulus.
pub fn classify_roots(p: &ComplexPoly, k: usize, ann: &Annulus) -> Result<AnnulusCounts, RandomPolyError> {
    let roots = polynomial_roots(p)?;
    let mut counts = AnnulusCounts { inside: 0, annulus: 0, outside: k.saturating_sub(roots.len()) };
    for r in roots {
        let m = r.norm();
        if m <= ann.inner {
            counts.inside += 1;
        } else if m < ann.outer {
            counts.annulus += 1;
        } else {
            counts.outside += 1;
        }
    }
    Ok(counts)
}

pub fn annulus_zero_count(fam: &CoeffFamily, v: &[C64], ann: &Annulus) -> Result<usize, RandomPolyError> {
    let p = fam.instantiate(v)?;
    Ok(classify_roots(&p, fam.degree(), ann)?.annulus)
}

/// Same classification from two argument-principle counts on the
/// boundary circles.
pub fn classify_by_winding(p: &ComplexPoly, k: usize, ann: &Annulus) -> Result<AnnulusCounts, RandomPolyError> {
    let count = |rho: f64| -> Result<usize, RandomPolyError> {
        let r = winding_zero_count(|z| p.eval(z), rho, 1e-14)
            .map_err(|e| RandomPolyError::Winding(e.to_string()))?;
        match r.count {
            Count::Finite(n) => Ok(n as usize),
            Count::Degenerate => Err(RandomPolyError::Winding(format!("zero on |z| = {rho}"))),
        }
    };
    let inside = count(ann.inner)?;
    let within_outer = count(ann.outer)?;
    Ok(AnnulusCounts { inside, annulus: within_outer - inside, outside: k - within_outer })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KacSample {
    pub sample_index: usize,
    pub counts: AnnulusCounts,
    pub arguments: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KacReport {
    pub k: usize,
    pub epsilon: f64,
    pub mean_fraction: f64,
    pub fraction_standard_error: f64,
    pub samples: Vec<KacSample>,
}

impl KacReport {
    /// Root arguments of all samples in sample order.
    pub fn pooled_arguments(&self) -> Vec<f64> {
        self.samples.iter().flat_map(|s| s.arguments.iter().copied()).collect()
    }
}

fn sample_family(fam: &CoeffFamily, ann: &Annulus, seed: u64, index: usize) -> Result<KacSample, RandomPolyError> {
    let mut rng = sample_rng(seed, index as u64);
    let v = uniform_complex_ball(&mut rng, fam.param_dim());
    let p = fam.instantiate(&v)?;
    let roots = polynomial_roots(&p)?;
    let k = fam.degree();
    let mut counts = AnnulusCounts { inside: 0, annulus: 0, outside: k.saturating_sub(roots.len()) };
    let mut arguments = Vec::with_capacity(roots.len());
    for r in &roots {
        let m = r.norm();
        if m <= ann.inner {
            counts.inside += 1;
        } else if m < ann.outer {
            counts.annulus += 1;
        } else {
            counts.outside += 1;
        }
        arguments.push(r.arg());
    }
    Ok(KacSample { sample_index: index, counts, arguments })
}

/// Annulus statistics of `samples` independent draws of `fam`, with `v`
/// uniform in the complex unit ball.
pub fn family_experiment(
    fam: &CoeffFamily,
    samples: usize,
    epsilon: f64,
    seed: u64,
) -> Result<KacReport, RandomPolyError> {
    fam.validate()?;
    let ann = Annulus::from_epsilon(epsilon)?;
    let k = fam.degree();
    let results = (0..samples)
        .into_par_iter()
        .map(|i| sample_family(fam, &ann, seed, i))
        .collect::<Result<Vec<_>, _>>()?;
    let fractions: Vec<f64> = results.iter().map(|s| s.counts.annulus as f64 / k as f64).collect();
    let mean = crate::stats::mean(&fractions);
    let se = (crate::stats::sample_variance(&fractions) / samples as f64).sqrt();
    Ok(KacReport { k, epsilon, mean_fraction: mean, fraction_standard_error: se, samples: results })
}

/// Kac polynomials `sum_i v_{i+1} z^i` with `v` uniform in the unit ball
/// of `C^{k+1}`.
pub fn kac_experiment(k: usize, samples: usize, epsilon: f64, seed: u64) -> Result<KacReport, RandomPolyError> {
    if k < 2 {
        return Err(RandomPolyError::InvalidDegree { min: 2, got: k });
    }
    family_experiment(&CoeffFamily::Kac { k }, samples, epsilon, seed)
}

/// Kolmogorov-Smirnov test of angles in `[-pi, pi]` against the uniform law.
pub fn uniformity_test(angles: &[f64]) -> (f64, f64) {
    let mapped: Vec<f64> = angles.iter().map(|a| ((a + PI) / TAU).rem_euclid(1.0)).collect();
    ks_uniform01(&mapped)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LowerBoundRow {
    pub k: usize,
    pub ratio: f64,
    pub standard_error: f64,
}

/// Empirical `E[annulus count] / k` for each family.
pub fn expectation_lower_bound_check(
    families: &[CoeffFamily],
    epsilon: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<LowerBoundRow>, RandomPolyError> {
    families
        .iter()
        .enumerate()
        .map(|(j, fam)| {
            let report = family_experiment(fam, samples, epsilon, crate::sampling::mix(seed, j as u64))?;
            Ok(LowerBoundRow {
                k: fam.degree(),
                ratio: report.mean_fraction,
                standard_error: report.fraction_standard_error,
            })
        })
        .collect()
}

/// `k,sample_index,annulus_count,inside_count,outside_count` rows.
pub fn counts_csv(report: &KacReport) -> String {
    let mut out = String::from("k,sample_index,annulus_count,inside_count,outside_count\n");
    for s in &report.samples {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            report.k, s.sample_index, s.counts.annulus, s.counts.inside, s.counts.outside
        );
    }
    out
}

/// One `angle` column with every pooled root argument.
pub fn angles_csv(report: &KacReport) -> String {
    let mut out = String::from("angle\n");
    for a in report.pooled_arguments() {
        let _ = writeln!(out, "{a:?}");
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn roots_of_unity_lie_in_every_annulus() {
        for k in [3, 10, 40] {
            let fam = CoeffFamily::roots_of_unity(k);
            for eps in [0.01, 0.5] {
                let ann = Annulus::from_epsilon(eps).unwrap();
                assert_eq!(annulus_zero_count(&fam, &[c(0.0)], &ann).unwrap(), k);
            }
        }
    }

    #[test]
    fn linear_root_outside() {
        let fam = CoeffFamily::Fixed { coeffs: vec![c(-2.0), c(1.0)] };
        let ann = Annulus::from_epsilon(0.5).unwrap();
        assert_eq!(annulus_zero_count(&fam, &[c(0.0)], &ann).unwrap(), 0);
    }

    #[test]
    fn degree_two_sanity() {
        let r = kac_experiment(2, 20, 0.1, 3).unwrap();
        for s in &r.samples {
            assert_eq!(s.counts.total(), 2);
        }
        assert!(kac_experiment(1, 20, 0.1, 3).is_err());
    }

    #[test]
    fn vanishing_leading_coefficient_counts_as_outside() {
        let p = ComplexPoly::new(vec![c(1.0), c(0.5), c(0.0)]);
        let counts = classify_roots(&p, 2, &Annulus::from_epsilon(0.1).unwrap()).unwrap();
        assert_eq!(counts, AnnulusCounts { inside: 0, annulus: 0, outside: 2 });
    }

    #[test]
    fn annulus_and_winding_agree() {
        let r = kac_experiment(60, 5, 0.1, 8).unwrap();
        let ann = Annulus::from_epsilon(0.1).unwrap();
        for (i, s) in r.samples.iter().enumerate() {
            let mut rng = sample_rng(8, i as u64);
            let v = uniform_complex_ball(&mut rng, 61);
            let p = ComplexPoly::new(v);
            assert_eq!(classify_by_winding(&p, 60, &ann).unwrap(), s.counts);
        }
    }

    #[test]
    fn middle_zero_family() {
        // z^k + 1: every root on the unit circle
        let k = 12;
        let mut coeffs = vec![c(0.0); k + 1];
        coeffs[0] = c(1.0);
        coeffs[k] = c(1.0);
        let rows = expectation_lower_bound_check(&[CoeffFamily::Fixed { coeffs }], 0.05, 3, 1).unwrap();
        assert_eq!(rows[0].ratio, 1.0);
    }

    #[test]
    fn invalid_fixed_family() {
        let fam = CoeffFamily::Fixed { coeffs: vec![c(0.5), c(1.0)] };
        assert!(fam.validate().is_err());
    }

    #[test]
    fn uniformity_examples() {
        let grid: Vec<f64> = (0..1000).map(|i| -PI + TAU * (i as f64 + 0.5) / 1000.0).collect();
        let (d, p) = uniformity_test(&grid);
        assert!(d <= 1e-3 + 1e-12);
        assert!(p > 0.99);
        let (_, p) = uniformity_test(&[0.3; 500]);
        assert!(p < 1e-6);
    }

    #[test]
    fn csv_layout() {
        let r = kac_experiment(4, 2, 0.1, 1).unwrap();
        let csv = counts_csv(&r);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "k,sample_index,annulus_count,inside_count,outside_count");
        assert_eq!(lines.len(), 3);
        assert_eq!(angles_csv(&r).lines().count(), 1 + 8);
    }
}
