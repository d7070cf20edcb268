//! Complex-analytic primitives.
//!
//! Zeros are always counted with multiplicity. The winding counter only
//! needs function values, so it works for black-box families that cannot
//! supply a derivative.

use std::f64::consts::{FRAC_PI_2, TAU};
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::C64;

/// Initial number of contour panels for [`winding_zero_count`].
pub const INITIAL_PANELS: usize = 256;
/// Panels are never bisected below `2 pi / 2^MAX_BISECTION_DEPTH`.
pub const MAX_BISECTION_DEPTH: u32 = 18;
/// Default degeneracy tolerance, relative to `max |f|` on the contour.
pub const DEFAULT_CONTOUR_TOL: f64 = 1e-12;
/// Number of points on each circle used to estimate log-sups.
pub const LOG_SUP_GRID: usize = 512;

const MAX_CONTOUR_EVALUATIONS: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AnalyticError {
    #[error("phase step above pi/2 persists below the minimum panel width near theta = {theta:.6}")]
    NonConvergence { theta: f64 },
    #[error("function value is not finite at theta = {theta:.6}")]
    NonFinite { theta: f64 },
    #[error("contour radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("disk radius must lie in (0, 1), got {0}")]
    InvalidGeometry(f64),
    #[error("log-sup order violated: M1 = {m1} < M2 = {m2}")]
    OrderViolation { m1: f64, m2: f64 },
    #[error("polynomial is identically zero")]
    ZeroPolynomial,
}

/// A zero count that may be infinite (the function vanishes identically,
/// or the field is a center).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Count {
    Finite(u32),
    Degenerate,
}

impl Count {
    pub fn finite(self) -> Option<u32> {
        match self {
            Count::Finite(n) => Some(n),
            Count::Degenerate => None,
        }
    }

    pub fn is_degenerate(self) -> bool {
        matches!(self, Count::Degenerate)
    }

    /// `count >= t`, with the sentinel exceeding every threshold.
    pub fn at_least(self, t: u32) -> bool {
        match self {
            Count::Finite(n) => n >= t,
            Count::Degenerate => true,
        }
    }
}

impl PartialOrd for Count {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Count {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        use std::cmp::Ordering::*;
        match (self, other) {
            (Count::Finite(a), Count::Finite(b)) => a.cmp(b),
            (Count::Finite(_), Count::Degenerate) => Less,
            (Count::Degenerate, Count::Finite(_)) => Greater,
            (Count::Degenerate, Count::Degenerate) => Equal,
        }
    }
}

impl fmt::Display for Count {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Count::Finite(n) => write!(f, "{n}"),
            Count::Degenerate => f.write_str("inf"),
        }
    }
}

// Serialized as a JSON integer, or the string "inf" for the sentinel.
impl Serialize for Count {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Count::Finite(n) => serializer.serialize_u32(*n),
            Count::Degenerate => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Count {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u32),
            Text(String),
        }
        match Raw::deserialize(deserializer)? {
            Raw::Int(n) => Ok(Count::Finite(n)),
            Raw::Text(s) if s == "inf" => Ok(Count::Degenerate),
            Raw::Text(s) => Err(serde::de::Error::custom(format!(
                "expected a nonnegative integer or \"inf\", got {s:?}"
            ))),
        }
    }
}

/// Outcome of an argument-principle count on a circle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZeroCountResult {
    pub count: Count,
    pub contour_radius: f64,
    pub min_modulus_on_contour: f64,
    pub max_modulus_on_contour: f64,
    /// Distance of the raw winding number to the nearest integer.
    pub winding_residual: f64,
    pub evaluations: usize,
}

/// Counts the zeros of `f` strictly inside `|z| = rho` as the winding number
/// of `theta -> f(rho e^{i theta})` about the origin.
///
/// The phase is unwrapped panel by panel. Any panel whose phase increment
/// exceeds `pi/2` is bisected, down to a width of `2 pi / 2^18`. The result
/// is the degenerate sentinel when `min |f| < tol * max |f|` on the sampled
/// contour.
pub fn winding_zero_count<F>(f: F, rho: f64, tol: f64) -> Result<ZeroCountResult, AnalyticError>
where
    F: Fn(C64) -> C64,
{
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(AnalyticError::InvalidRadius(rho));
    }
    let eval = |theta: f64| -> Result<C64, AnalyticError> {
        let value = f(C64::from_polar(rho, theta));
        if value.re.is_finite() && value.im.is_finite() {
            Ok(value)
        } else {
            Err(AnalyticError::NonFinite { theta })
        }
    };

    let min_width = TAU / (1u64 << MAX_BISECTION_DEPTH) as f64;
    let mut nodes = Vec::with_capacity(INITIAL_PANELS + 1);
    for j in 0..INITIAL_PANELS {
        let theta = TAU * j as f64 / INITIAL_PANELS as f64;
        nodes.push((theta, eval(theta)?));
    }
    nodes.push((TAU, nodes[0].1));

    let mut evaluations = INITIAL_PANELS;
    let mut min_mod = f64::INFINITY;
    let mut max_mod = 0.0f64;
    for (_, value) in &nodes {
        min_mod = min_mod.min(value.norm());
        max_mod = max_mod.max(value.norm());
    }

    let mut total_phase = 0.0;
    let mut stalled_at: Option<f64> = None;
    let mut stack = Vec::new();
    for pair in nodes.windows(2).rev() {
        stack.push((pair[0], pair[1]));
    }
    while let Some(((ta, fa), (tb, fb))) = stack.pop() {
        if fa == C64::new(0.0, 0.0) || fb == C64::new(0.0, 0.0) {
            // exact zero on the contour; min_mod is already 0
            stalled_at.get_or_insert(ta);
            continue;
        }
        let step = (fb / fa).arg();
        if step.abs() <= FRAC_PI_2 {
            total_phase += step;
            continue;
        }
        if tb - ta < 2.0 * min_width || evaluations >= MAX_CONTOUR_EVALUATIONS {
            stalled_at.get_or_insert(ta);
            total_phase += step;
            continue;
        }
        let tm = 0.5 * (ta + tb);
        let fm = eval(tm)?;
        evaluations += 1;
        min_mod = min_mod.min(fm.norm());
        max_mod = max_mod.max(fm.norm());
        stack.push(((tm, fm), (tb, fb)));
        stack.push(((ta, fa), (tm, fm)));
    }

    let degenerate = max_mod == 0.0 || min_mod < tol * max_mod;
    if degenerate {
        return Ok(ZeroCountResult {
            count: Count::Degenerate,
            contour_radius: rho,
            min_modulus_on_contour: min_mod,
            max_modulus_on_contour: max_mod,
            winding_residual: 0.0,
            evaluations,
        });
    }
    if let Some(theta) = stalled_at {
        return Err(AnalyticError::NonConvergence { theta });
    }
    let winding = total_phase / TAU;
    let rounded = winding.round();
    let residual = (winding - rounded).abs();
    if rounded < 0.0 || residual >= 0.25 {
        return Err(AnalyticError::NonConvergence { theta: 0.0 });
    }
    Ok(ZeroCountResult {
        count: Count::Finite(rounded as u32),
        contour_radius: rho,
        min_modulus_on_contour: min_mod,
        max_modulus_on_contour: max_mod,
        winding_residual: residual,
        evaluations,
    })
}

fn outer_radius(s: f64) -> f64 {
    0.5 * (s + 1.0)
}

fn check_disk_radius(s: f64) -> Result<(), AnalyticError> {
    if s > 0.0 && s < 1.0 {
        Ok(())
    } else {
        Err(AnalyticError::InvalidGeometry(s))
    }
}

/// Constant `c(s)` of the Jensen-type bound, with `R = (s+1)/2`:
/// `c(s) = 1 / log((R^2 + s^2) / (2 s R))`.
///
/// `(R^2 + s^2)/(2sR)` is the reciprocal of the largest pseudo-hyperbolic
/// distance in `D_R` between two points of the closed disk `|z| <= s`, so
/// each zero in that disk lowers the Poisson-Jensen mean taken at the
/// maximizer of `|h|` on `|z| <= s` by at least its logarithm.
pub fn jensen_constant(s: f64) -> Result<f64, AnalyticError> {
    check_disk_radius(s)?;
    let r = outer_radius(s);
    Ok(1.0 / ((r * r + s * s) / (2.0 * s * r)).ln())
}

/// Radial constant `1 / log(R/s)`.
///
/// This is the growth of the circular Jensen mean per zero between the radii
/// `s` and `R`. It bounds zero counts only when `M2` is replaced by
/// `log |h(0)|`; against `sup_{D_s} log |h|` it can undercount (zeros
/// clustered near the rim), which is why [`jensen_zero_bound`] does not use it.
pub fn radial_jensen_constant(s: f64) -> Result<f64, AnalyticError> {
    check_disk_radius(s)?;
    Ok(1.0 / (outer_radius(s) / s).ln())
}

/// Upper bound `c(s) (M1 - M2)` on the number of zeros of `h` in the closed
/// disk `|z| <= s`, where `M1 = sup log|h|` on `D_{(s+1)/2}` and
/// `M2 = sup log|h|` on `D_s`.
pub fn jensen_zero_bound(m1: f64, m2: f64, s: f64) -> Result<f64, AnalyticError> {
    let c = jensen_constant(s)?;
    let slack = 1e-9 * m1.abs().max(m2.abs()).max(1.0);
    if m1 < m2 - slack {
        return Err(AnalyticError::OrderViolation { m1, m2 });
    }
    Ok(c * (m1 - m2).max(0.0))
}

/// Grid estimate of `sup log|h|` on a circle of radius `radius`.
pub fn log_sup_on_circle<F: Fn(C64) -> C64>(h: F, radius: f64) -> f64 {
    (0..LOG_SUP_GRID)
        .map(|j| {
            let theta = TAU * j as f64 / LOG_SUP_GRID as f64;
            h(C64::from_polar(radius, theta)).norm()
        })
        .fold(0.0f64, f64::max)
        .ln()
}

/// `(M1, M2)` for [`jensen_zero_bound`], estimated on the boundary circles
/// (maximum modulus principle).
pub fn log_sups<F: Fn(C64) -> C64>(h: F, s: f64) -> Result<(f64, f64), AnalyticError> {
    check_disk_radius(s)?;
    Ok((log_sup_on_circle(&h, outer_radius(s)), log_sup_on_circle(&h, s)))
}

/// Dense univariate polynomial with complex coefficients in ascending order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComplexPoly {
    coeffs: Vec<C64>,
}

impl ComplexPoly {
    /// Trailing (highest-order) exact zeros are dropped so the leading
    /// coefficient is nonzero. The zero polynomial keeps a single `0`.
    pub fn new(mut coeffs: Vec<C64>) -> Self {
        while coeffs.len() > 1 && coeffs.last() == Some(&C64::new(0.0, 0.0)) {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(C64::new(0.0, 0.0));
        }
        ComplexPoly { coeffs }
    }

    pub fn from_real(coeffs: &[f64]) -> Self {
        Self::new(coeffs.iter().map(|&c| C64::new(c, 0.0)).collect())
    }

    /// Monic polynomial `prod (z - root)`.
    pub fn from_roots(roots: &[C64]) -> Self {
        let mut coeffs = vec![C64::new(1.0, 0.0)];
        for &root in roots {
            let mut next = vec![C64::new(0.0, 0.0); coeffs.len() + 1];
            for (i, &c) in coeffs.iter().enumerate() {
                next[i + 1] += c;
                next[i] -= root * c;
            }
            coeffs = next;
        }
        Self::new(coeffs)
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|c| *c == C64::new(0.0, 0.0))
    }

    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn eval(&self, z: C64) -> C64 {
        horner(&self.coeffs, z)
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * factor).collect())
    }

    /// `z^deg P(1/z)`, with `deg` the nominal degree of `self`.
    pub fn reversed(&self) -> Self {
        Self::new(self.coeffs.iter().rev().copied().collect())
    }
}

fn horner(coeffs: &[C64], z: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

fn horner_with_derivative(coeffs: &[C64], z: C64) -> (C64, C64) {
    let zero = C64::new(0.0, 0.0);
    let mut p = zero;
    let mut dp = zero;
    for &c in coeffs.iter().rev() {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Newton correction `p(z)/p'(z)`. Outside the unit disk the reversed
/// polynomial is evaluated at `1/z` to keep the powers bounded.
fn newton_ratio(coeffs: &[C64], reversed: &[C64], z: C64) -> C64 {
    let zero = C64::new(0.0, 0.0);
    if z.norm() <= 1.0 {
        let (p, dp) = horner_with_derivative(coeffs, z);
        if p == zero {
            return zero;
        }
        p / dp
    } else {
        let n = (coeffs.len() - 1) as f64;
        let y = z.inv();
        let (q, dq) = horner_with_derivative(reversed, y);
        if q == zero {
            return zero;
        }
        // p'/p = y (n - y q'(y)/q(y))
        let log_derivative = y * (n - y * dq / q);
        log_derivative.inv()
    }
}

/// Initial Aberth guesses from the upper convex hull of `(i, log|c_i|)`:
/// each hull edge contributes as many points as its width, on a circle whose
/// radius is the edge's slope.
fn initial_guesses(coeffs: &[C64]) -> Vec<C64> {
    let n = coeffs.len() - 1;
    let points: Vec<(usize, f64)> = coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() > 0.0)
        .map(|(i, c)| (i, c.norm().ln()))
        .collect();
    let mut hull: Vec<(usize, f64)> = Vec::new();
    for &p in &points {
        while hull.len() >= 2 {
            let (i1, y1) = hull[hull.len() - 2];
            let (i2, y2) = hull[hull.len() - 1];
            // drop the middle point if it lies on or below the chord
            let cross = (i2 as f64 - i1 as f64) * (p.1 - y1) - (y2 - y1) * (p.0 as f64 - i1 as f64);
            if cross >= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    let mut guesses = Vec::with_capacity(n);
    let offset = 0.4;
    for edge in hull.windows(2) {
        let (i0, y0) = edge[0];
        let (i1, y1) = edge[1];
        let width = i1 - i0;
        let radius = ((y0 - y1) / width as f64).exp();
        for j in 0..width {
            let angle = TAU * j as f64 / width as f64 + offset + guesses.len() as f64 * 0.7;
            guesses.push(C64::from_polar(radius, angle));
        }
    }
    guesses
}

/// All roots of `p`, with multiplicity, by Aberth-Ehrlich iteration followed
/// by Newton polishing.
pub fn polynomial_roots(p: &ComplexPoly) -> Result<Vec<C64>, AnalyticError> {
    if p.is_zero() || p.max_coeff_norm() < f64::MIN_POSITIVE {
        return Err(AnalyticError::ZeroPolynomial);
    }
    let all = p.coeffs();
    let zero = C64::new(0.0, 0.0);
    let at_origin = all.iter().take_while(|c| **c == zero).count();
    let coeffs = &all[at_origin..];
    let n = coeffs.len() - 1;
    let mut roots = vec![zero; at_origin];
    match n {
        0 => return Ok(roots),
        1 => {
            roots.push(-coeffs[0] / coeffs[1]);
            return Ok(roots);
        }
        _ => {}
    }

    let reversed: Vec<C64> = coeffs.iter().rev().copied().collect();
    let mut z = initial_guesses(coeffs);
    let mut done = vec![false; n];
    for _ in 0..2000 {
        let mut all_done = true;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let ratio = newton_ratio(coeffs, &reversed, z[k]);
            let repulsion: C64 = (0..n)
                .filter(|&j| j != k)
                .map(|j| (z[k] - z[j]).inv())
                .sum();
            let correction = ratio / (C64::new(1.0, 0.0) - ratio * repulsion);
            if correction.re.is_finite() && correction.im.is_finite() {
                z[k] -= correction;
            }
            if correction.norm() <= 4.0 * f64::EPSILON * z[k].norm().max(f64::MIN_POSITIVE)
                || !correction.norm().is_finite()
            {
                done[k] = true;
            } else {
                all_done = false;
            }
        }
        if all_done {
            break;
        }
    }

    for root in z.iter_mut() {
        let mut best = *root;
        let mut best_residual = residual(coeffs, &reversed, best);
        for _ in 0..3 {
            let candidate = best - newton_ratio(coeffs, &reversed, best);
            let r = residual(coeffs, &reversed, candidate);
            if r < best_residual {
                best = candidate;
                best_residual = r;
            } else {
                break;
            }
        }
        *root = best;
    }
    roots.extend(z);
    Ok(roots)
}

/// `|p(z)|`, scaled by `|z|^-n` outside the unit disk.
fn residual(coeffs: &[C64], reversed: &[C64], z: C64) -> f64 {
    if z.norm() <= 1.0 {
        horner(coeffs, z).norm()
    } else {
        horner(reversed, z.inv()).norm()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn triple_zero_at_origin() {
        let r = winding_zero_count(|z| z * z * z, 0.5, DEFAULT_CONTOUR_TOL).unwrap();
        assert_eq!(r.count, Count::Finite(3));
        assert!(r.winding_residual < 1e-12);
        assert!(r.min_modulus_on_contour > 0.0);
    }

    #[test]
    fn placed_roots_inside_unit_circle() {
        // 6 roots inside |z| = 1, 4 outside
        let roots = [
            c(0.1, 0.2),
            c(-0.5, 0.3),
            c(0.7, -0.6),
            c(0.0, -0.9),
            c(-0.3, -0.3),
            c(0.85, 0.1),
            c(1.2, 0.0),
            c(-1.5, 0.4),
            c(0.3, 1.7),
            c(-0.9, -1.1),
        ];
        let p = ComplexPoly::from_roots(&roots);
        let r = winding_zero_count(|z| p.eval(z), 1.0, DEFAULT_CONTOUR_TOL).unwrap();
        assert_eq!(r.count, Count::Finite(6));
    }

    #[test]
    fn identically_zero_is_degenerate() {
        let r = winding_zero_count(|_| c(0.0, 0.0), 1.0, DEFAULT_CONTOUR_TOL).unwrap();
        assert_eq!(r.count, Count::Degenerate);
    }

    #[test]
    fn zero_on_contour_is_degenerate() {
        let r = winding_zero_count(|z| z - c(0.5, 0.0), 0.5, DEFAULT_CONTOUR_TOL).unwrap();
        assert_eq!(r.count, Count::Degenerate);
    }

    #[test]
    fn nonfinite_values_are_reported() {
        let err = winding_zero_count(|z| (z - c(0.5, 0.0)).inv(), 0.5, 0.0).unwrap_err();
        assert!(matches!(err, AnalyticError::NonFinite { .. }));
    }

    #[test]
    fn zero_near_contour_below_resolution_fails_to_converge() {
        // zero 1e-9 outside the contour between sample nodes; tol 0 disables
        // the sentinel
        let a = C64::from_polar(0.5 + 1e-9, 0.3);
        let err = winding_zero_count(|z| z - a, 0.5, 0.0).unwrap_err();
        assert!(matches!(err, AnalyticError::NonConvergence { .. }));
    }

    #[test]
    fn invalid_radius() {
        assert!(matches!(
            winding_zero_count(|z| z, 0.0, 1e-12),
            Err(AnalyticError::InvalidRadius(_))
        ));
    }

    #[test]
    fn jensen_bound_of_constant_is_zero() {
        assert_eq!(jensen_zero_bound(0.3, 0.3, 0.5).unwrap(), 0.0);
    }

    #[test]
    fn jensen_bound_dominates_monomial() {
        // sup |z^k| on |z| <= r is r^k
        let s = 0.5;
        for k in 1..=12 {
            let m1 = k as f64 * (0.75f64).ln();
            let m2 = k as f64 * (0.5f64).ln();
            let bound = jensen_zero_bound(m1, m2, s).unwrap();
            assert!(bound >= k as f64, "k = {k}, bound = {bound}");
        }
    }

    #[test]
    fn radial_constant_at_two_thirds() {
        let c = radial_jensen_constant(2.0 / 3.0).unwrap();
        assert!((c - 1.0 / (5.0f64 / 4.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn sound_constant_closed_form() {
        // s = 2/3, R = 5/6: (R^2 + s^2) / (2 s R) = 41/40
        let c = jensen_constant(2.0 / 3.0).unwrap();
        assert!((c - 1.0 / (41.0f64 / 40.0).ln()).abs() < 1e-9);
    }

    #[test]
    fn radial_constant_undercounts_rim_zeros() {
        // h = (z - s)^k: every zero sits on the rim of the closed disk
        let s = 0.5;
        let k = 6;
        let h = |z: C64| (z - c(s, 0.0)).powu(k);
        let (m1, m2) = log_sups(h, s).unwrap();
        let radial = radial_jensen_constant(s).unwrap() * (m1 - m2);
        let sound = jensen_zero_bound(m1, m2, s).unwrap();
        assert!(radial < k as f64);
        assert!(sound >= k as f64);
    }

    #[test]
    fn jensen_errors() {
        assert!(matches!(jensen_zero_bound(1.0, 0.0, 1.0), Err(AnalyticError::InvalidGeometry(_))));
        assert!(matches!(jensen_zero_bound(0.0, 1.0, 0.5), Err(AnalyticError::OrderViolation { .. })));
    }

    #[test]
    fn roots_of_z_squared_plus_one() {
        let p = ComplexPoly::from_real(&[1.0, 0.0, 1.0]);
        let mut roots = polynomial_roots(&p).unwrap();
        roots.sort_by(|a, b| a.im.partial_cmp(&b.im).unwrap());
        assert!((roots[0] - c(0.0, -1.0)).norm() < 1e-14);
        assert!((roots[1] - c(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn roots_of_unity() {
        for k in [3usize, 7, 16, 50] {
            let mut coeffs = vec![0.0; k + 1];
            coeffs[0] = -1.0;
            coeffs[k] = 1.0;
            let roots = polynomial_roots(&ComplexPoly::from_real(&coeffs)).unwrap();
            assert_eq!(roots.len(), k);
            for root in &roots {
                assert!((root.norm() - 1.0).abs() < 1e-12);
                assert!((root.powu(k as u32) - c(1.0, 0.0)).norm() < 1e-11);
            }
        }
    }

    #[test]
    fn zero_polynomial_is_rejected() {
        assert_eq!(
            polynomial_roots(&ComplexPoly::from_real(&[0.0, 0.0])),
            Err(AnalyticError::ZeroPolynomial)
        );
    }

    #[test]
    fn roots_at_origin_are_split_off() {
        let p = ComplexPoly::from_real(&[0.0, 0.0, -4.0, 1.0]);
        let mut roots = polynomial_roots(&p).unwrap();
        roots.sort_by(|a, b| a.re.partial_cmp(&b.re).unwrap());
        assert_eq!(roots[0], c(0.0, 0.0));
        assert_eq!(roots[1], c(0.0, 0.0));
        assert!((roots[2] - c(4.0, 0.0)).norm() < 1e-13);
    }

    #[test]
    fn reversed_inverts_roots() {
        let p = ComplexPoly::from_roots(&[c(2.0, 0.0), c(0.0, 0.5)]);
        let q = p.reversed();
        assert!(q.eval(c(0.5, 0.0)).norm() < 1e-14);
        assert!(q.eval(c(0.0, -2.0)).norm() < 1e-14);
    }

    #[test]
    fn count_ordering_and_serde() {
        assert!(Count::Degenerate > Count::Finite(1000));
        assert!(Count::Degenerate.at_least(u32::MAX));
        assert_eq!(serde_json::to_string(&Count::Finite(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Count::Degenerate).unwrap(), "\"inf\"");
        assert_eq!(serde_json::from_str::<Count>("\"inf\"").unwrap(), Count::Degenerate);
        assert!(serde_json::from_str::<Count>("\"many\"").is_err());
    }
}
