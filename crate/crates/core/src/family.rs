//! Holomorphic families `v -> f_v(z)` with `v` in a complex parameter ball
//! and `z` in the unit disk, bounded by `M` on `B_c(0, r) x D_1`.
//!
//! Zeros are counted in the closed disk `|z| <= s`. A slice `f_v` that
//! vanishes identically has count `+inf`, represented by
//! [`Count::Degenerate`].

use std::f64::consts::TAU;

use rand::seq::IndexedRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::{
    log_sup_on_circle, winding_zero_count, AnalyticError, Count, ZeroCountResult, DEFAULT_CONTOUR_TOL,
};
use crate::sampling::{complex_norm, quasi_complex_ball, rng_from_seed};
use crate::stats::{linear_fit, quantile_sorted};
use crate::C64;

/// Multipliers applied to the contour offset on successive retries.
pub const JITTER: [f64; 8] = [1.0, 1.7, 2.3, 3.1, 0.6, 0.35, 1.35, 2.7];
/// Relative tolerance of [`detect_identically_zero`] used by the counters.
pub const ZERO_SLICE_TOL: f64 = 1e-12;
/// Minimum number of exceedances for a threshold to enter the tail fit.
pub const MIN_EXCEEDANCES: usize = 30;
/// Bootstrap resamples behind the confidence interval of the decay rate.
pub const BOOTSTRAP_RESAMPLES: usize = 400;
const BOOTSTRAP_SEED: u64 = 0x07a1_1f17;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FamilyError {
    #[error("parameter norm {norm} is not below the family radius {radius}")]
    ParamOutOfRange { norm: f64, radius: f64 },
    #[error("parameter has dimension {got}, family expects {expected}")]
    ParamDimension { got: usize, expected: usize },
    #[error("every jittered contour meets a zero, but the slice is not identically zero")]
    PersistentBoundaryZero,
    #[error("slice is identically zero")]
    DegenerateSlice,
    #[error("no finite counts to average")]
    EmptyInput,
    #[error("family evaluation failed: {0}")]
    Evaluation(String),
    #[error("invalid family parameters: {0}")]
    InvalidSpec(String),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

/// A family in the class `H(M, r, s)`.
///
/// Implementations must be pure: the same `(v, z)` always gives the same
/// value, from any thread.
pub trait ParametricFamily: Send + Sync {
    fn name(&self) -> String;
    /// Complex dimension of the parameter.
    fn param_dim(&self) -> usize;
    /// Declared bound `M > 1` of `|f_v(z)|` on `B_c(0, r) x D_1`.
    fn bound_m(&self) -> f64;
    /// Parameter ball radius `r > 1`.
    fn param_radius(&self) -> f64;
    /// Counting disk radius `s in (0, 1)`.
    fn disk_radius(&self) -> f64;
    fn evaluate(&self, v: &[C64], z: C64) -> C64;

    /// `z -> f_v(z)` for repeated evaluation. Families with expensive
    /// per-parameter setup override this.
    fn slice<'a>(&'a self, v: &[C64]) -> Box<dyn Fn(C64) -> C64 + Send + Sync + 'a> {
        let v = v.to_vec();
        Box::new(move |z| self.evaluate(&v, z))
    }
}

fn check_param<F: ParametricFamily + ?Sized>(family: &F, v: &[C64]) -> Result<(), FamilyError> {
    if v.len() != family.param_dim() {
        return Err(FamilyError::ParamDimension { got: v.len(), expected: family.param_dim() });
    }
    let norm = complex_norm(v);
    if !(norm < family.param_radius()) {
        return Err(FamilyError::ParamOutOfRange { norm, radius: family.param_radius() });
    }
    Ok(())
}

/// Counting contour for the closed disk `|z| <= s`: radius `s (1 + eta m)`
/// with `eta = min(0.02, ((s+1)/2 - s) / (4 s))` and jitter multiplier `m`.
pub fn contour_radius(s: f64, multiplier: f64) -> f64 {
    let eta = (0.02f64).min((0.5 * (s + 1.0) - s) / (4.0 * s));
    s * (1.0 + eta * multiplier)
}

/// 64 points of `D_{(s+1)/2}`: four circles of 16 points each.
fn zero_test_points(s: f64) -> impl Iterator<Item = C64> {
    let outer = 0.5 * (s + 1.0);
    (1..=4).flat_map(move |i| {
        let radius = outer * i as f64 / 4.0;
        (0..16).map(move |j| C64::from_polar(radius, TAU * (j as f64 + 0.5 * i as f64) / 16.0))
    })
}

fn slice_is_zero(slice: &dyn Fn(C64) -> C64, s: f64, tol: f64, m: f64) -> bool {
    zero_test_points(s).all(|z| slice(z).norm() < tol * m)
}

/// True iff `max |f_v| < tol * M` over a 64-point grid in `D_{(s+1)/2}`.
pub fn detect_identically_zero<F: ParametricFamily + ?Sized>(family: &F, v: &[C64], tol: f64) -> bool {
    let slice = family.slice(v);
    slice_is_zero(&*slice, family.disk_radius(), tol, family.bound_m())
}

/// Zeros of `f_v` in the closed disk `|z| <= s`, with multiplicity.
///
/// The first contour that avoids the zeros of `f_v` decides the count.
/// When all [`JITTER`] radii fail, the slice is tested for vanishing
/// identically (sentinel count) before giving up.
pub fn family_zero_count<F: ParametricFamily + ?Sized>(
    family: &F,
    v: &[C64],
) -> Result<ZeroCountResult, FamilyError> {
    check_param(family, v)?;
    let s = family.disk_radius();
    let slice = family.slice(v);
    let mut tested_zero = false;
    for &m in &JITTER {
        let rho = contour_radius(s, m);
        match winding_zero_count(&*slice, rho, DEFAULT_CONTOUR_TOL) {
            Ok(result) if !result.count.is_degenerate() => return Ok(result),
            Ok(result) => {
                if !tested_zero {
                    tested_zero = true;
                    if result.max_modulus_on_contour == 0.0
                        || slice_is_zero(&*slice, s, ZERO_SLICE_TOL, family.bound_m())
                    {
                        return Ok(result);
                    }
                }
            }
            Err(AnalyticError::NonConvergence { .. }) => {}
            Err(AnalyticError::NonFinite { theta }) => {
                return Err(FamilyError::Evaluation(format!(
                    "{} is not finite on |z| = {rho} at angle {theta:.6}",
                    family.name()
                )))
            }
            Err(e) => return Err(e.into()),
        }
    }
    if slice_is_zero(&*slice, s, ZERO_SLICE_TOL, family.bound_m()) {
        let rho = contour_radius(s, 1.0);
        return Ok(ZeroCountResult {
            count: Count::Degenerate,
            contour_radius: rho,
            min_modulus_on_contour: 0.0,
            max_modulus_on_contour: 0.0,
            winding_residual: 0.0,
            evaluations: 64,
        });
    }
    Err(FamilyError::PersistentBoundaryZero)
}

/// `((M1 - log M) / log M, (M2 - log M) / log M)` where `M1`, `M2` are the
/// log-sups of `|f_v|` on `D_{(s+1)/2}` and `D_s`.
pub fn normalized_log_sups<F: ParametricFamily + ?Sized>(
    family: &F,
    v: &[C64],
) -> Result<(f64, f64), FamilyError> {
    check_param(family, v)?;
    let s = family.disk_radius();
    let slice = family.slice(v);
    if slice_is_zero(&*slice, s, ZERO_SLICE_TOL, family.bound_m()) {
        return Err(FamilyError::DegenerateSlice);
    }
    let log_m = family.bound_m().ln();
    let m1 = log_sup_on_circle(&*slice, 0.5 * (s + 1.0));
    let m2 = log_sup_on_circle(&*slice, s);
    Ok(((m1 - log_m) / log_m, (m2 - log_m) / log_m))
}

/// Least-squares fit `tail(T) ~ c1 exp(-c2 T)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c1: f64,
    pub c2: f64,
    pub r2: f64,
    /// Percentile bootstrap 95% interval for `c2`.
    pub c2_ci: Option<(f64, f64)>,
    pub thresholds_used: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailTable {
    pub thresholds: Vec<u32>,
    pub tail_fractions: Vec<f64>,
    pub exceedances: Vec<usize>,
    pub sample_count: usize,
    pub degenerate_count: usize,
    /// `None` when fewer than two thresholds have enough exceedances.
    pub fit: Option<TailFit>,
    pub inclusion_rule: String,
}

impl TailTable {
    pub fn is_nonincreasing(&self) -> bool {
        self.tail_fractions.windows(2).all(|w| w[1] <= w[0])
    }
}

fn tail_counts(counts: &[Count], thresholds: &[u32]) -> Vec<usize> {
    thresholds
        .iter()
        .map(|&t| counts.iter().filter(|c| c.at_least(t)).count())
        .collect()
}

fn fit_tail(thresholds: &[u32], exceed: &[usize], n: usize) -> Option<(f64, f64, f64, usize)> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = thresholds
        .iter()
        .zip(exceed)
        .filter(|(_, &e)| e >= MIN_EXCEEDANCES)
        .map(|(&t, &e)| (t as f64, (e as f64 / n as f64).ln()))
        .unzip();
    if xs.len() < 2 {
        return None;
    }
    let fit = linear_fit(&xs, &ys)?;
    Some((fit.intercept.exp(), -fit.slope, fit.r2, xs.len()))
}

/// Empirical `P(count >= T)` for each threshold, with sentinel counts
/// exceeding every threshold, and an exponential fit over the thresholds
/// with at least 30 exceedances.
pub fn empirical_tail(counts: &[Count], thresholds: &[u32]) -> Result<TailTable, FamilyError> {
    if counts.is_empty() {
        return Err(FamilyError::EmptyInput);
    }
    let n = counts.len();
    let exceed = tail_counts(counts, thresholds);
    let fractions = exceed.iter().map(|&e| e as f64 / n as f64).collect();
    let fit = fit_tail(thresholds, &exceed, n).map(|(c1, c2, r2, used)| TailFit {
        c1,
        c2,
        r2,
        c2_ci: bootstrap_decay_ci(counts, thresholds),
        thresholds_used: used,
    });
    Ok(TailTable {
        thresholds: thresholds.to_vec(),
        tail_fractions: fractions,
        exceedances: exceed,
        sample_count: n,
        degenerate_count: counts.iter().filter(|c| c.is_degenerate()).count(),
        fit,
        inclusion_rule: "degenerate counts are included and exceed every threshold".to_string(),
    })
}

/// Percentile bootstrap over samples. The resampling stream is fixed, so
/// the interval is a deterministic function of the counts.
fn bootstrap_decay_ci(counts: &[Count], thresholds: &[u32]) -> Option<(f64, f64)> {
    let n = counts.len();
    let mut rates: Vec<f64> = (0..BOOTSTRAP_RESAMPLES)
        .into_par_iter()
        .filter_map(|b| {
            let mut rng = crate::sampling::sample_rng(BOOTSTRAP_SEED, b as u64);
            let resample: Vec<Count> = (0..n).map(|_| *counts.choose(&mut rng).expect("nonempty")).collect();
            let exceed = tail_counts(&resample, thresholds);
            fit_tail(thresholds, &exceed, n).map(|f| f.1)
        })
        .collect();
    if rates.len() < BOOTSTRAP_RESAMPLES / 2 {
        return None;
    }
    rates.sort_by(f64::total_cmp);
    Some((quantile_sorted(&rates, 0.025), quantile_sorted(&rates, 0.975)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub expectation: f64,
    pub variance: f64,
    pub standard_error: f64,
    pub sample_count: usize,
    pub excluded_count: usize,
    /// `int_0^inf |{count >= t}| dt`, the integral of the nonincreasing
    /// rearrangement, computed level by level.
    pub rearrangement_expectation: f64,
}

/// Mean and unbiased variance of the finite counts. Sentinel counts are
/// excluded and reported in `excluded_count`.
pub fn expectation_and_variance(counts: &[Count]) -> Result<SummaryStats, FamilyError> {
    let finite: Vec<u32> = counts.iter().filter_map(|c| c.finite()).collect();
    if finite.is_empty() {
        return Err(FamilyError::EmptyInput);
    }
    let n = finite.len();
    let nf = n as f64;
    let mean = finite.iter().map(|&c| c as f64).sum::<f64>() / nf;
    let variance = if n > 1 {
        finite.iter().map(|&c| (c as f64 - mean).powi(2)).sum::<f64>() / (nf - 1.0)
    } else {
        0.0
    };

    let mut sorted = finite.clone();
    sorted.sort_unstable_by(|a, b| b.cmp(a));
    // layer cake: sum over levels t of the measure of {count >= t}
    let top = sorted.first().copied().unwrap_or(0);
    let mut above = 0usize;
    let mut rearranged = 0.0;
    for level in (1..=top).rev() {
        while above < n && sorted[above] >= level {
            above += 1;
        }
        rearranged += above as f64 / nf;
    }

    Ok(SummaryStats {
        expectation: mean,
        variance,
        standard_error: (variance / nf).sqrt(),
        sample_count: n,
        excluded_count: counts.len() - n,
        rearrangement_expectation: rearranged,
    })
}

/// Number of parameter points tried per condition.
pub fn witness_grid_size(param_dim: usize) -> usize {
    if param_dim <= 3 {
        32usize.pow(param_dim as u32)
    } else {
        4096
    }
}

fn circle_extreme(slice: &dyn Fn(C64) -> C64, radius: f64, take_min: bool) -> f64 {
    let values = (0..512).map(|j| slice(C64::from_polar(radius, TAU * j as f64 / 512.0)).norm());
    if take_min {
        values.fold(f64::INFINITY, f64::min)
    } else {
        values.fold(0.0, f64::max)
    }
}

/// Condition (a): `min_{|z| <= s} |f_v| > delta` for some `v` in the closed
/// unit ball. A slice without zeros in the closed disk attains its minimum
/// modulus on the boundary circle.
fn condition_a<F: ParametricFamily + ?Sized>(family: &F, v: &[C64], delta: f64) -> bool {
    let s = family.disk_radius();
    match family_zero_count(family, v) {
        Ok(r) if r.count == Count::Finite(0) => {
            let slice = family.slice(v);
            circle_extreme(&*slice, s, true) > delta
        }
        _ => false,
    }
}

/// Condition (b): `max_{|z| < s'} |f_v| > delta` and `f_v` has a zero in
/// the open disk `|z| < s'`.
fn condition_b<F: ParametricFamily + ?Sized>(family: &F, v: &[C64], delta: f64, s_prime: f64) -> bool {
    let slice = family.slice(v);
    let inner = s_prime * (1.0 - 1e-9);
    if circle_extreme(&*slice, inner, false) <= delta {
        return false;
    }
    matches!(
        winding_zero_count(&*slice, inner, DEFAULT_CONTOUR_TOL),
        Ok(r) if r.count.finite().is_some_and(|c| c >= 1)
    )
}

/// Searches each family for witnesses of the separation conditions with
/// constant `delta` and inner disk `D_{s'}`. Returns `(a, b)` per family;
/// `false` means no witness at the sampled resolution.
pub fn check_separation_conditions(
    families: &[&dyn ParametricFamily],
    delta: f64,
    s_prime: f64,
) -> Vec<(bool, bool)> {
    families
        .iter()
        .map(|family| {
            let points = quasi_complex_ball(family.param_dim(), witness_grid_size(family.param_dim()));
            let a = points.par_iter().any(|v| condition_a(*family, v, delta));
            let b = s_prime < family.disk_radius()
                && points.par_iter().any(|v| condition_b(*family, v, delta, s_prime));
            (a, b)
        })
        .collect()
}

/// `f_v(z) = v_1`, or a fixed constant independent of `v`.
#[derive(Clone, Debug)]
pub struct ConstantFamily {
    pub value: Option<C64>,
    pub bound: f64,
    pub disk: f64,
}

impl ParametricFamily for ConstantFamily {
    fn name(&self) -> String {
        match self.value {
            Some(c) => format!("constant({c})"),
            None => "constant(v1)".to_string(),
        }
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn bound_m(&self) -> f64 {
        self.bound
    }
    fn param_radius(&self) -> f64 {
        2.0
    }
    fn disk_radius(&self) -> f64 {
        self.disk
    }
    fn evaluate(&self, v: &[C64], _z: C64) -> C64 {
        self.value.unwrap_or(v[0])
    }
}

/// `f_v(z) = v_1 z^k`, or `z^k` when `scaled` is false.
#[derive(Clone, Debug)]
pub struct MonomialFamily {
    pub k: u32,
    pub scaled: bool,
    pub disk: f64,
}

impl ParametricFamily for MonomialFamily {
    fn name(&self) -> String {
        if self.scaled {
            format!("v1*z^{}", self.k)
        } else {
            format!("z^{}", self.k)
        }
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn bound_m(&self) -> f64 {
        if self.scaled { 2.0 } else { std::f64::consts::E }
    }
    fn param_radius(&self) -> f64 {
        2.0
    }
    fn disk_radius(&self) -> f64 {
        self.disk
    }
    fn evaluate(&self, v: &[C64], z: C64) -> C64 {
        let m = z.powu(self.k);
        if self.scaled { v[0] * m } else { m }
    }
}

/// `f_v(z) = z - scale * v_1`. With `scale = s / sqrt(p)` the count in the
/// closed disk `|z| <= s` is 1 with probability `p` for `v` uniform in the
/// unit disk, and 0 otherwise.
#[derive(Clone, Debug)]
pub struct ShiftFamily {
    pub scale: f64,
    pub disk: f64,
}

impl ShiftFamily {
    pub fn bernoulli(s: f64, p: f64) -> Result<Self, FamilyError> {
        if !(s > 0.0 && s < 1.0) || !(p > 0.0 && p <= 1.0) {
            return Err(FamilyError::InvalidSpec(format!("bernoulli needs s in (0,1), p in (0,1], got s={s}, p={p}")));
        }
        Ok(ShiftFamily { scale: s / p.sqrt(), disk: s })
    }
}

impl ParametricFamily for ShiftFamily {
    fn name(&self) -> String {
        format!("z - {}*v1", self.scale)
    }
    fn param_dim(&self) -> usize {
        1
    }
    fn bound_m(&self) -> f64 {
        (1.0 + 2.0 * self.scale).max(1.5)
    }
    fn param_radius(&self) -> f64 {
        2.0
    }
    fn disk_radius(&self) -> f64 {
        self.disk
    }
    fn evaluate(&self, v: &[C64], z: C64) -> C64 {
        z - self.scale * v[0]
    }
}

/// Finite Blaschke product `prod (z - a) / (1 - conj(a) z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Blaschke {
    pub zeros: Vec<C64>,
}

impl Blaschke {
    /// `k` zeros spread on the circle of radius `radius`.
    pub fn spread(k: usize, radius: f64) -> Self {
        let zeros = (0..k)
            .map(|j| C64::from_polar(radius, TAU * j as f64 / k.max(1) as f64 + 0.3))
            .collect();
        Blaschke { zeros }
    }

    pub fn eval(&self, z: C64) -> C64 {
        self.zeros
            .iter()
            .fold(C64::new(1.0, 0.0), |acc, a| acc * (z - a) / (1.0 - a.conj() * z))
    }
}

/// One coordinate of a holomorphic map `D_1 -> B_c(0, 1)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Component {
    Zero,
    /// `c z`
    Linear { c: f64 },
    /// `scale * B(z)`
    Blaschke { scale: f64, zeros: Vec<C64> },
}

impl Component {
    fn eval(&self, z: C64) -> C64 {
        match self {
            Component::Zero => C64::new(0.0, 0.0),
            Component::Linear { c } => *c * z,
            Component::Blaschke { scale, zeros } => *scale * Blaschke { zeros: zeros.clone() }.eval(z),
        }
    }

    fn sup_modulus(&self) -> f64 {
        match self {
            Component::Zero => 0.0,
            Component::Linear { c } => c.abs(),
            Component::Blaschke { scale, .. } => scale.abs(),
        }
    }
}

/// Hyperplane sections `l(a, f(z)) = a_1 f_1(z) + ... + a_N f_N(z) + a_{N+1}`
/// of a holomorphic map `f: D_1 -> B_c(0, 1)`, with `a in B_c(0, 2)`.
/// These lie in `H(3, 2, s)`.
#[derive(Clone, Debug)]
pub struct HyperplaneFamily {
    pub components: Vec<Component>,
    pub disk: f64,
}

impl HyperplaneFamily {
    pub fn new(components: Vec<Component>, disk: f64) -> Result<Self, FamilyError> {
        if components.is_empty() {
            return Err(FamilyError::InvalidSpec("hyperplane family needs at least one component".into()));
        }
        if !(disk > 0.0 && disk < 1.0) {
            return Err(FamilyError::InvalidSpec(format!("disk radius must lie in (0,1), got {disk}")));
        }
        let sup: f64 = components.iter().map(|c| c.sup_modulus().powi(2)).sum();
        if sup >= 1.0 {
            return Err(FamilyError::InvalidSpec("components must map the disk into the open unit ball".into()));
        }
        for c in &components {
            if let Component::Blaschke { zeros, .. } = c {
                if zeros.iter().any(|a| !(a.norm() < 1.0)) {
                    return Err(FamilyError::InvalidSpec("Blaschke zeros must lie in the open unit disk".into()));
                }
            }
        }
        Ok(HyperplaneFamily { components, disk })
    }

    /// `f = (B_k, 0, ..., 0)` in `C^dim` with `k` zeros inside `D_s`.
    pub fn blaschke(k: usize, dim: usize, s: f64) -> Result<Self, FamilyError> {
        if dim == 0 {
            return Err(FamilyError::InvalidSpec("dimension must be at least 1".into()));
        }
        let b = Blaschke::spread(k, 0.5 * s);
        let mut components = vec![Component::Blaschke { scale: 1.0 - 1e-12, zeros: b.zeros }];
        components.resize(dim, Component::Zero);
        Self::new(components, s)
    }
}

impl ParametricFamily for HyperplaneFamily {
    fn name(&self) -> String {
        format!("hyperplane(N={})", self.components.len())
    }
    fn param_dim(&self) -> usize {
        self.components.len() + 1
    }
    fn bound_m(&self) -> f64 {
        3.0
    }
    fn param_radius(&self) -> f64 {
        2.0
    }
    fn disk_radius(&self) -> f64 {
        self.disk
    }
    fn evaluate(&self, v: &[C64], z: C64) -> C64 {
        let n = self.components.len();
        self.components
            .iter()
            .zip(v)
            .fold(v[n], |acc, (c, a)| acc + a * c.eval(z))
    }
}

/// Registry entry: a family by name with its parameter block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FamilySpec {
    /// `f_v = value`, or `f_v = v_1` when `value` is absent.
    Constant {
        #[serde(default)]
        value: Option<f64>,
        #[serde(default = "default_disk")]
        s: f64,
    },
    Monomial {
        k: u32,
        #[serde(default)]
        scaled: bool,
        #[serde(default = "default_disk")]
        s: f64,
    },
    Shift {
        #[serde(default = "one")]
        scale: f64,
        #[serde(default = "default_disk")]
        s: f64,
    },
    Bernoulli {
        #[serde(default = "default_disk")]
        s: f64,
        #[serde(default = "half")]
        p: f64,
    },
    BlaschkeHyperplane {
        k: usize,
        #[serde(default = "one_usize")]
        dim: usize,
        #[serde(default = "default_disk")]
        s: f64,
    },
    Hyperplane {
        components: Vec<Component>,
        #[serde(default = "default_disk")]
        s: f64,
    },
    OdeFlow(crate::ensembles::OdeFlowSpec),
}

fn default_disk() -> f64 {
    0.5
}
fn one() -> f64 {
    1.0
}
fn half() -> f64 {
    0.5
}
fn one_usize() -> usize {
    1
}

impl FamilySpec {
    pub fn build(&self) -> Result<Box<dyn ParametricFamily>, FamilyError> {
        let check_disk = |s: f64| {
            if s > 0.0 && s < 1.0 {
                Ok(s)
            } else {
                Err(FamilyError::InvalidSpec(format!("disk radius must lie in (0,1), got {s}")))
            }
        };
        Ok(match self {
            FamilySpec::Constant { value, s } => {
                let bound = value.map_or(2.0, |c| c.abs().max(1.0 + 1e-9));
                if !bound.is_finite() {
                    return Err(FamilyError::InvalidSpec("constant must be finite".into()));
                }
                Box::new(ConstantFamily { value: value.map(|c| C64::new(c, 0.0)), bound, disk: check_disk(*s)? })
            }
            FamilySpec::Monomial { k, scaled, s } => {
                if *k > 4096 {
                    return Err(FamilyError::InvalidSpec("monomial degree above 4096".into()));
                }
                Box::new(MonomialFamily { k: *k, scaled: *scaled, disk: check_disk(*s)? })
            }
            FamilySpec::Shift { scale, s } => {
                if !(scale.is_finite() && *scale > 0.0) {
                    return Err(FamilyError::InvalidSpec("shift scale must be positive".into()));
                }
                Box::new(ShiftFamily { scale: *scale, disk: check_disk(*s)? })
            }
            FamilySpec::Bernoulli { s, p } => Box::new(ShiftFamily::bernoulli(*s, *p)?),
            FamilySpec::BlaschkeHyperplane { k, dim, s } => {
                if *k > 256 || *dim > 64 {
                    return Err(FamilyError::InvalidSpec("blaschke-hyperplane needs k <= 256, dim <= 64".into()));
                }
                Box::new(HyperplaneFamily::blaschke(*k, *dim, check_disk(*s)?)?)
            }
            FamilySpec::Hyperplane { components, s } => {
                if components.len() > 64 {
                    return Err(FamilyError::InvalidSpec("at most 64 components".into()));
                }
                Box::new(HyperplaneFamily::new(components.clone(), check_disk(*s)?)?)
            }
            FamilySpec::OdeFlow(spec) => Box::new(spec.build()?),
        })
    }
}

/// A sequence of families `f^(k)`, `k = 1, 2, ...`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "sequence", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SequenceSpec {
    /// The same family for every `k`.
    Repeat { family: FamilySpec },
    /// `l(v, (c z, 0.5 B_{m_k}(z)))` with `m_k = 1 + ((k - 1) mod period)`
    /// zeros of the Blaschke factor spread inside `D_{s/2}`.
    Hyperplane {
        #[serde(default = "half")]
        c: f64,
        #[serde(default = "default_period")]
        period: usize,
        #[serde(default = "default_disk")]
        s: f64,
    },
}

fn default_period() -> usize {
    4
}

impl SequenceSpec {
    /// Number of distinct families; index `k` and `k + period` coincide.
    pub fn period(&self) -> usize {
        match self {
            SequenceSpec::Repeat { .. } => 1,
            SequenceSpec::Hyperplane { period, .. } => *period,
        }
    }

    /// Family spec of term `k` (1-based).
    pub fn term(&self, k: usize) -> FamilySpec {
        match self {
            SequenceSpec::Repeat { family } => family.clone(),
            SequenceSpec::Hyperplane { c, period, s } => {
                let m = 1 + (k.max(1) - 1) % (*period).max(1);
                let b = Blaschke::spread(m, 0.5 * s);
                FamilySpec::Hyperplane {
                    components: vec![
                        Component::Linear { c: *c },
                        Component::Blaschke { scale: 0.5, zeros: b.zeros },
                    ],
                    s: *s,
                }
            }
        }
    }

    pub fn validate(&self) -> Result<(), FamilyError> {
        if let SequenceSpec::Hyperplane { c, period, .. } = self {
            if *c == 0.0 || !c.is_finite() {
                return Err(FamilyError::InvalidSpec("c must be nonzero".into()));
            }
            if *period == 0 || *period > 64 {
                return Err(FamilyError::InvalidSpec("period must lie in 1..=64".into()));
            }
        }
        for k in 1..=self.period() {
            self.term(k).build()?;
        }
        Ok(())
    }
}

/// Draws `count` parameters uniformly from the closed unit ball of
/// `C^dim`, reproducibly from `seed`.
pub fn draw_parameters(dim: usize, count: usize, seed: u64) -> Vec<Vec<C64>> {
    let mut rng = rng_from_seed(seed);
    (0..count).map(|_| crate::sampling::uniform_complex_ball(&mut rng, dim)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn contour_radius_defaults() {
        assert!((contour_radius(0.5, 1.0) - 0.51).abs() < 1e-15);
        // s = 0.9: ((0.95 - 0.9) / 3.6) < 0.02
        let eta = 0.05 / 3.6;
        assert!((contour_radius(0.9, 1.0) - 0.9 * (1.0 + eta)).abs() < 1e-15);
    }

    #[test]
    fn constant_family_has_no_zeros() {
        let f = ConstantFamily { value: None, bound: 2.0, disk: 0.5 };
        assert_eq!(family_zero_count(&f, &[c(0.5)]).unwrap().count, Count::Finite(0));
    }

    #[test]
    fn blaschke_section_has_k_zeros() {
        for k in [1usize, 4, 9] {
            let f = HyperplaneFamily::blaschke(k, 3, 0.5).unwrap();
            let mut a = vec![c(0.0); 4];
            a[0] = c(1.0);
            assert_eq!(family_zero_count(&f, &a).unwrap().count, Count::Finite(k as u32));
        }
    }

    #[test]
    fn blaschke_winding_on_slightly_larger_contour() {
        let b = Blaschke::spread(4, 0.3);
        let r = winding_zero_count(|z| b.eval(z), 0.32, DEFAULT_CONTOUR_TOL).unwrap();
        assert_eq!(r.count, Count::Finite(4));
    }

    #[test]
    fn shift_family_counts() {
        let f = ShiftFamily { scale: 1.0, disk: 0.5 };
        assert_eq!(family_zero_count(&f, &[c(0.3)]).unwrap().count, Count::Finite(1));
        assert_eq!(family_zero_count(&f, &[C64::new(0.0, -0.45)]).unwrap().count, Count::Finite(1));
        assert_eq!(family_zero_count(&f, &[c(0.8)]).unwrap().count, Count::Finite(0));
    }

    #[test]
    fn zero_on_first_contour_is_jittered_away() {
        let f = ShiftFamily { scale: 1.0, disk: 0.5 };
        // zero exactly on the base contour radius 0.51
        let r = family_zero_count(&f, &[c(0.51)]).unwrap();
        assert_eq!(r.count, Count::Finite(1));
        assert!(r.contour_radius > 0.51);
    }

    #[test]
    fn parameter_outside_ball_is_rejected() {
        let f = ShiftFamily { scale: 1.0, disk: 0.5 };
        assert!(matches!(
            family_zero_count(&f, &[c(2.5)]),
            Err(FamilyError::ParamOutOfRange { .. })
        ));
    }

    #[test]
    fn identically_zero_detection() {
        let f = MonomialFamily { k: 1, scaled: true, disk: 0.5 };
        assert!(detect_identically_zero(&f, &[c(0.0)], 1e-12));
        assert!(!detect_identically_zero(&f, &[c(0.3)], 1e-12));
        assert_eq!(family_zero_count(&f, &[c(0.0)]).unwrap().count, Count::Degenerate);
        let h = HyperplaneFamily::blaschke(3, 2, 0.5).unwrap();
        assert!(!detect_identically_zero(&h, &[c(0.0), c(0.0), c(1.0)], 1e-12));
    }

    #[test]
    fn normalized_log_sups_examples() {
        let m = ConstantFamily { value: Some(c(3.0)), bound: 3.0, disk: 0.5 };
        let (a, b) = normalized_log_sups(&m, &[c(0.0)]).unwrap();
        assert!(a.abs() < 1e-15 && b.abs() < 1e-15);
        let one = ConstantFamily { value: Some(c(1.0)), bound: std::f64::consts::E, disk: 0.5 };
        let (a, b) = normalized_log_sups(&one, &[c(0.0)]).unwrap();
        assert!((a + 1.0).abs() < 1e-15 && (b + 1.0).abs() < 1e-15);
        let k = 5;
        let s: f64 = 0.5;
        let mono = MonomialFamily { k, scaled: false, disk: s };
        let (a, b) = normalized_log_sups(&mono, &[c(0.0)]).unwrap();
        let expected = k as f64 * ((s + 1.0) / (2.0 * s)).ln() / mono.bound_m().ln();
        assert!((a - b - expected).abs() < 1e-12);
        let zero = MonomialFamily { k: 1, scaled: true, disk: 0.5 };
        assert_eq!(normalized_log_sups(&zero, &[c(0.0)]), Err(FamilyError::DegenerateSlice));
    }

    #[test]
    fn tail_of_all_zero_counts() {
        let t = empirical_tail(&[Count::Finite(0); 10], &[0, 1, 2]).unwrap();
        assert_eq!(t.tail_fractions, vec![1.0, 0.0, 0.0]);
        assert!(t.fit.is_none());
        assert!(empirical_tail(&[], &[0]).is_err());
    }

    #[test]
    fn tail_fit_recovers_geometric_rate() {
        use rand::Rng;
        let mut rng = rng_from_seed(31);
        let counts: Vec<Count> = (0..10_000)
            .map(|_| {
                let mut k = 0;
                while rng.random::<f64>() < 0.5 {
                    k += 1;
                }
                Count::Finite(k)
            })
            .collect();
        let thresholds: Vec<u32> = (0..12).collect();
        let t = empirical_tail(&counts, &thresholds).unwrap();
        assert!(t.is_nonincreasing());
        let fit = t.fit.unwrap();
        let ln2 = std::f64::consts::LN_2;
        assert!((fit.c2 - ln2).abs() < 0.15 * ln2, "c2 = {}", fit.c2);
        let (lo, hi) = fit.c2_ci.unwrap();
        assert!(lo > 0.0 && lo <= fit.c2 && fit.c2 <= hi);
    }

    #[test]
    fn moments_examples() {
        let s = expectation_and_variance(&[Count::Finite(0); 4]).unwrap();
        assert_eq!((s.expectation, s.variance), (0.0, 0.0));
        let s = expectation_and_variance(&[Count::Finite(2); 4]).unwrap();
        assert_eq!((s.expectation, s.variance), (2.0, 0.0));
        assert_eq!(s.rearrangement_expectation, 2.0);
        let counts: Vec<Count> = (0..4).map(Count::Finite).collect();
        let s = expectation_and_variance(&counts).unwrap();
        assert_eq!(s.expectation, 1.5);
        assert_eq!(s.rearrangement_expectation, 1.5);
        let s = expectation_and_variance(&[Count::Finite(1), Count::Degenerate]).unwrap();
        assert_eq!(s.excluded_count, 1);
        assert_eq!(expectation_and_variance(&[Count::Degenerate]), Err(FamilyError::EmptyInput));
    }

    #[test]
    fn separation_examples() {
        let one = ConstantFamily { value: Some(c(1.0)), bound: 1.0 + 1e-9, disk: 0.5 };
        let z = MonomialFamily { k: 1, scaled: false, disk: 0.5 };
        let res = check_separation_conditions(&[&one, &z], 0.1, 0.3);
        assert_eq!(res[0], (true, false));
        // min |z| on the closed disk is 0, and max over D_{0.3} is 0.3 > delta
        assert_eq!(res[1], (false, true));
        let res = check_separation_conditions(&[&z], 0.5, 0.3);
        assert_eq!(res[0], (false, false));
    }

    #[test]
    fn hyperplane_sequence_satisfies_separation() {
        let seq = SequenceSpec::Hyperplane { c: 0.5, period: 3, s: 0.5 };
        seq.validate().unwrap();
        let fams: Vec<Box<dyn ParametricFamily>> = (1..=3).map(|k| seq.term(k).build().unwrap()).collect();
        let refs: Vec<&dyn ParametricFamily> = fams.iter().map(|f| f.as_ref()).collect();
        for pair in check_separation_conditions(&refs, 0.05, 0.25) {
            assert_eq!(pair, (true, true));
        }
    }

    #[test]
    fn spec_round_trip() {
        let spec: FamilySpec = serde_json::from_str(r#"{"family":"blaschke-hyperplane","k":3,"dim":2}"#).unwrap();
        assert_eq!(spec, FamilySpec::BlaschkeHyperplane { k: 3, dim: 2, s: 0.5 });
        let back: FamilySpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
        assert!(serde_json::from_str::<FamilySpec>(r#"{"family":"nope"}"#).is_err());
        assert!(FamilySpec::Bernoulli { s: 1.5, p: 0.5 }.build().is_err());
    }
}
