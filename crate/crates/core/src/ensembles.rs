//! Experiment orchestration.
//!
//! Sample `i` of a run with master seed `s` draws from the stream
//! `mix(s, i)`, and results are folded in index order, so output does not
//! depend on the number of worker threads.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::Count;
use crate::family::{
    check_separation_conditions, empirical_tail, expectation_and_variance, family_zero_count, FamilyError,
    FamilySpec, ParametricFamily, SequenceSpec, SummaryStats, TailTable,
};
use crate::field::{Ellipsoid, FieldError, PlanarField};
use crate::poincare::{count_limit_cycles, count_real_cycles, SolverConfig};
use crate::random_poly::RandomPolyError;
use crate::sampling::{mix, sample_rng, uniform_complex_ball};
use crate::stats::{ks_standard_normal, mean};
use crate::{default_budget, C64};

/// Draws per distinct family in the moment calibration pass of the CLT
/// harness.
pub const CLT_CALIBRATION_DRAWS: usize = 10_000;
/// Variance below which the CLT normalization is refused.
pub const MIN_VARIANCE: f64 = 1e-6;
const CALIBRATION_SALT: u64 = 0xca1_1b7a;
const TAYLOR_TERMS: usize = 48;

#[derive(Debug, Error)]
pub enum EnsembleError {
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("radius t = {t} must be below R = {r_max}")]
    RadiusViolation { t: f64, r_max: f64 },
    #[error("all {0} samples failed")]
    AllFailed(usize),
    #[error("estimated variance {variance:.3e} of term {k} is below {MIN_VARIANCE:e}")]
    DegenerateVariance { k: usize, variance: f64 },
    #[error("separation conditions fail for term {k}: (a) = {a}, (b) = {b}")]
    SeparationFailed { k: usize, a: bool, b: bool },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Family(#[from] FamilyError),
    #[error(transparent)]
    RandomPoly(#[from] RandomPolyError),
    #[error("i/o error on {path}: {source}")]
    Io { path: String, source: io::Error },
}

/// Right-hand side `f(z, x) = A x` of `dx/dz = f(z, x)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FlowField {
    Zero,
    /// `x_i' = scale x_{i+1}`, `x_N' = 0`: `x_1` is a polynomial of degree
    /// below `N`.
    Chain {
        #[serde(default = "one")]
        scale: f64,
    },
    Linear { matrix: Vec<Vec<f64>> },
    /// Gaussian matrix rescaled to Frobenius norm `norm`, drawn from `seed`.
    RandomLinear { norm: f64 },
}

fn one() -> f64 {
    1.0
}

fn two() -> f64 {
    2.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OdeFlowSpec {
    pub dimension: usize,
    pub field: FlowField,
    /// Radius of the initial-value ball.
    #[serde(default = "two")]
    pub r: f64,
    /// Counting radius in the `z` plane.
    pub t: f64,
    #[serde(default)]
    pub seed: u64,
}

impl OdeFlowSpec {
    pub fn build(&self) -> Result<OdeFlowFamily, FamilyError> {
        ode_flow_family(self.dimension, &self.field, self.r, self.t, self.seed).map_err(|e| match e {
            EnsembleError::Family(f) => f,
            other => FamilyError::InvalidSpec(other.to_string()),
        })
    }
}

/// First coordinate of the solution of `dx/dz = A x`, `x(0) = v`, as a
/// family in `z`.
///
/// The solution is built by successive approximations
/// `x_{n+1}(z) = v + int_0^z A x_n(w) dw` on truncated power series. With
/// `K = |A| r` and `K1 = |A|` (Frobenius norm, an upper bound for the
/// operator norm), `R = 0.99 min(r/(4K), 1/K1, 1)`, and the family is
/// normalized as `g_v(z) = x_1(R z, (r/2) v) / (r/2)` on
/// `B_c(0, 3/2) x D_1`, so `M = 2`, `s = t/R`.
#[derive(Clone, Debug)]
pub struct OdeFlowFamily {
    matrix: Vec<Vec<f64>>,
    r: f64,
    radius: f64,
    t: f64,
}

pub fn ode_flow_family(
    dimension: usize,
    field: &FlowField,
    r: f64,
    t: f64,
    seed: u64,
) -> Result<OdeFlowFamily, EnsembleError> {
    if dimension == 0 || dimension > 64 {
        return Err(FamilyError::InvalidSpec("dimension must lie in 1..=64".into()).into());
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(FamilyError::InvalidSpec(format!("r must be positive, got {r}")).into());
    }
    let matrix = match field {
        FlowField::Zero => vec![vec![0.0; dimension]; dimension],
        FlowField::Chain { scale } => {
            let mut m = vec![vec![0.0; dimension]; dimension];
            for i in 0..dimension.saturating_sub(1) {
                m[i][i + 1] = *scale;
            }
            m
        }
        FlowField::Linear { matrix } => {
            if matrix.len() != dimension || matrix.iter().any(|row| row.len() != dimension) {
                return Err(FamilyError::InvalidSpec("matrix must be dimension x dimension".into()).into());
            }
            matrix.clone()
        }
        FlowField::RandomLinear { norm } => {
            use rand_distr::{Distribution, StandardNormal};
            let mut rng = crate::sampling::rng_from_seed(seed);
            let mut m: Vec<Vec<f64>> = (0..dimension)
                .map(|_| (0..dimension).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let f = frobenius(&m);
            for row in &mut m {
                for x in row.iter_mut() {
                    *x *= norm / f;
                }
            }
            m
        }
    };
    if matrix.iter().flatten().any(|x| !x.is_finite()) {
        return Err(FamilyError::InvalidSpec("matrix entries must be finite".into()).into());
    }
    let k1 = frobenius(&matrix);
    let k = k1 * r;
    let bound = [r / (4.0 * k), 1.0 / k1, 1.0]
        .into_iter()
        .filter(|x| x.is_finite())
        .fold(f64::INFINITY, f64::min);
    let radius = 0.99 * bound;
    if !(t > 0.0 && t < radius) {
        return Err(EnsembleError::RadiusViolation { t, r_max: radius });
    }
    Ok(OdeFlowFamily { matrix, r, radius, t })
}

fn frobenius(m: &[Vec<f64>]) -> f64 {
    m.iter().flatten().map(|x| x * x).sum::<f64>().sqrt()
}

impl OdeFlowFamily {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Power series coefficients of `x(z)` from `x(0) = x0`.
    pub fn taylor_coefficients(&self, x0: &[C64]) -> Vec<Vec<C64>> {
        let n = x0.len();
        let zero = C64::new(0.0, 0.0);
        let mut series = vec![x0.to_vec()];
        // each Picard sweep fixes one more coefficient
        for _ in 0..TAYLOR_TERMS {
            let mut next = vec![x0.to_vec()];
            for (m, coeff) in series.iter().enumerate() {
                let mut ax = vec![zero; n];
                for (i, row) in self.matrix.iter().enumerate() {
                    ax[i] = row.iter().zip(coeff).map(|(a, x)| *a * x).sum();
                }
                next.push(ax.into_iter().map(|x| x / (m + 1) as f64).collect());
            }
            next.truncate(TAYLOR_TERMS);
            let settled = next.len() == series.len()
                && next.iter().zip(&series).all(|(a, b)| a == b);
            series = next;
            if settled {
                break;
            }
        }
        series
    }

    /// `x_1(z)` for `x(0) = x0`.
    pub fn first_coordinate(&self, x0: &[C64], z: C64) -> C64 {
        let series = self.taylor_coefficients(x0);
        series.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * z + c[0])
    }
}

impl ParametricFamily for OdeFlowFamily {
    fn name(&self) -> String {
        format!("ode-flow(N={}, R={:.4})", self.matrix.len(), self.radius)
    }
    fn param_dim(&self) -> usize {
        self.matrix.len()
    }
    fn bound_m(&self) -> f64 {
        2.0
    }
    fn param_radius(&self) -> f64 {
        1.5
    }
    fn disk_radius(&self) -> f64 {
        self.t / self.radius
    }
    fn evaluate(&self, v: &[C64], z: C64) -> C64 {
        self.slice(v)(z)
    }
    fn slice<'a>(&'a self, v: &[C64]) -> Box<dyn Fn(C64) -> C64 + Send + Sync + 'a> {
        let half = 0.5 * self.r;
        let x0: Vec<C64> = v.iter().map(|c| c * half).collect();
        let series: Vec<C64> = self.taylor_coefficients(&x0).into_iter().map(|c| c[0] / half).collect();
        let radius = self.radius;
        Box::new(move |z| series.iter().rev().fold(C64::new(0.0, 0.0), |acc, c| acc * (z * radius) + c))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    TheoremA,
    TheoremBTail,
    Slln,
    Clt,
    Kac,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub degree: usize,
    /// Norm budget `N`; defaults to `1/(192 pi d^2)`.
    pub budget: Option<f64>,
    /// Cycles are counted on `(0, K]`.
    pub cycle_radius: f64,
    pub family: Option<FamilySpec>,
    pub sequence: Option<SequenceSpec>,
    pub samples: usize,
    pub seed: u64,
    pub thresholds: Vec<u32>,
    pub solver: SolverConfig,
    /// Polynomial degree of the Kac experiment.
    pub k: usize,
    pub epsilon: f64,
    /// Sequence length of the SLLN and CLT runs.
    pub n: usize,
    pub repetitions: usize,
    pub delta: f64,
    pub s_prime: Option<f64>,
    pub record_timing: bool,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            experiment: ExperimentKind::TheoremA,
            degree: 3,
            budget: None,
            cycle_radius: 0.5,
            family: None,
            sequence: None,
            samples: 1000,
            seed: crate::sampling::DEFAULT_SEED,
            thresholds: (0..=12).collect(),
            solver: SolverConfig::default(),
            k: 200,
            epsilon: 0.1,
            n: 200,
            repetitions: 500,
            delta: 0.05,
            s_prime: None,
            record_timing: false,
        }
    }
}

impl ExperimentConfig {
    pub fn budget(&self) -> f64 {
        self.budget.unwrap_or_else(|| default_budget(self.degree))
    }

    pub fn validate(&self) -> Result<(), EnsembleError> {
        let bad = |m: String| Err(EnsembleError::Config(m));
        if self.samples == 0 {
            return bad("samples must be at least 1".into());
        }
        if self.thresholds.is_empty() {
            return bad("thresholds must not be empty".into());
        }
        self.solver.validate().map_err(|e| EnsembleError::Config(e.to_string()))?;
        match self.experiment {
            ExperimentKind::TheoremA => {
                if self.degree == 0 || self.degree > 30 {
                    return bad(format!("degree must lie in 1..=30, got {}", self.degree));
                }
                let limit = default_budget(self.degree);
                let n = self.budget();
                if !(n > 0.0 && n <= limit * (1.0 + 1e-12)) {
                    return bad(format!("budget N = {n} must lie in (0, 1/(192 pi d^2)] = (0, {limit}]"));
                }
                if !(self.cycle_radius > 1e-4 && self.cycle_radius <= 0.75) {
                    return bad(format!("cycle radius must lie in (1e-4, 0.75], got {}", self.cycle_radius));
                }
            }
            ExperimentKind::TheoremBTail => {
                if self.family.is_none() {
                    return bad("tail experiment needs a family".into());
                }
            }
            ExperimentKind::Slln | ExperimentKind::Clt => {
                if self.sequence.is_none() {
                    return bad("sequence experiment needs a sequence".into());
                }
                if self.n == 0 {
                    return bad("n must be at least 1".into());
                }
                if self.experiment == ExperimentKind::Clt && self.repetitions < 2 {
                    return bad("repetitions must be at least 2".into());
                }
                if !(self.delta > 0.0) {
                    return bad("delta must be positive".into());
                }
            }
            ExperimentKind::Kac => {
                if self.k < 2 {
                    return bad("k must be at least 2".into());
                }
                if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
                    return bad("epsilon must lie in (0, 1)".into());
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SampleFlags {
    pub tangential: u32,
    pub degenerate: bool,
    pub solver_failure: Option<String>,
    /// Left out of moments (degenerate or failed).
    pub excluded_from_moments: bool,
    /// Left out of tails (failed).
    pub excluded_from_tails: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub sample_index: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub degree: Option<usize>,
    pub norm: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub real_cycles: Option<Count>,
    pub complex_zero_count: Option<Count>,
    pub flags: SampleFlags,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wall_time: Option<f64>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TheoremAReport {
    pub records: Vec<SampleRecord>,
    pub complex_tail: TailTable,
    pub real_tail: TailTable,
    pub complex_stats: Option<SummaryStats>,
    pub real_stats: Option<SummaryStats>,
    pub zero_cycle_fraction: f64,
    pub failures: usize,
}

/// Counts cycles of `cfg.samples` fields drawn uniformly from `E(1, N)`.
pub fn run_theorem_a(cfg: &ExperimentConfig) -> Result<TheoremAReport, EnsembleError> {
    cfg.validate()?;
    let budget = cfg.budget();
    let ell = Ellipsoid::new(1.0, budget, cfg.degree)?;
    let records: Vec<SampleRecord> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let seed = mix(cfg.seed, i as u64);
            let mut rng = sample_rng(cfg.seed, i as u64);
            let field = ell.sample(&mut rng);
            let mut record = field_record(i, seed, &field, count_limit_cycles(&field, cfg.cycle_radius, budget, &cfg.solver));
            if cfg.record_timing {
                record.wall_time = Some(start.elapsed().as_secs_f64());
            }
            record
        })
        .collect();
    summarize_theorem_a(records, &cfg.thresholds)
}

fn field_record(
    index: usize,
    seed: u64,
    field: &PlanarField,
    result: Result<crate::poincare::CycleCount, crate::poincare::PoincareError>,
) -> SampleRecord {
    let mut record = SampleRecord {
        sample_index: index,
        seed,
        degree: Some(field.degree()),
        norm: field.norm(),
        real_cycles: None,
        complex_zero_count: None,
        flags: SampleFlags::default(),
        wall_time: None,
    };
    match result {
        Ok(count) => {
            record.flags.tangential = count.tangential_flags;
            record.flags.degenerate = count.complex_zero_count.is_degenerate() || count.is_center;
            record.flags.excluded_from_moments = record.flags.degenerate;
            record.real_cycles = Some(count.real_cycles);
            record.complex_zero_count = Some(count.complex_zero_count);
        }
        Err(e) => {
            log::warn!("sample {index} failed: {e}");
            record.flags.solver_failure = Some(e.to_string());
            record.flags.excluded_from_moments = true;
            record.flags.excluded_from_tails = true;
        }
    }
    record
}

fn summarize_theorem_a(records: Vec<SampleRecord>, thresholds: &[u32]) -> Result<TheoremAReport, EnsembleError> {
    let ok: Vec<&SampleRecord> = records.iter().filter(|r| !r.flags.excluded_from_tails).collect();
    let failures = records.len() - ok.len();
    if ok.is_empty() {
        return Err(EnsembleError::AllFailed(records.len()));
    }
    let complex: Vec<Count> = ok.iter().filter_map(|r| r.complex_zero_count).collect();
    let real: Vec<Count> = ok.iter().filter_map(|r| r.real_cycles).collect();
    let zero_cycles = real.iter().filter(|c| **c == Count::Finite(0)).count();
    let zero_cycle_fraction = zero_cycles as f64 / real.len() as f64;
    log::info!("fraction of fields without cycles: {zero_cycle_fraction:.4}");
    let mut complex_tail = empirical_tail(&complex, thresholds)?;
    let mut real_tail = empirical_tail(&real, thresholds)?;
    let rule = format!(
        "{}; {failures} solver failures excluded",
        complex_tail.inclusion_rule
    );
    complex_tail.inclusion_rule = rule.clone();
    real_tail.inclusion_rule = rule;
    Ok(TheoremAReport {
        complex_stats: expectation_and_variance(&complex).ok(),
        real_stats: expectation_and_variance(&real).ok(),
        records,
        complex_tail,
        real_tail,
        zero_cycle_fraction,
        failures,
    })
}

/// `c prod_i (u - roots_i)` in ascending order.
pub fn rigid_polynomial(roots: &[f64], c: f64) -> Vec<f64> {
    let mut poly = vec![c];
    for &r in roots {
        let mut next = vec![0.0; poly.len() + 1];
        for (i, &a) in poly.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= r * a;
        }
        poly = next;
    }
    poly
}

/// Rigid fields `x' = -y + x f(r^2)`, `y' = x + y f(r^2)` with
/// `f = c prod (u - roots_i)`, one per sample, where `c` is a random signed
/// scaling keeping the field inside `E(1, N)`.
pub fn run_rigid_subrun(
    roots: &[f64],
    degree: usize,
    samples: usize,
    seed: u64,
    cfg: &SolverConfig,
    cycle_radius: f64,
) -> Result<Vec<SampleRecord>, EnsembleError> {
    use rand::Rng;
    let budget = default_budget(degree);
    let unit = PlanarField::rigid(degree, &rigid_polynomial(roots, 1.0))?;
    let unit_norm = unit.norm();
    Ok((0..samples)
        .into_par_iter()
        .map(|i| {
            let mut rng = sample_rng(seed, i as u64);
            let magnitude: f64 = rng.random_range(0.2..1.0);
            let sign = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let field = unit.scaled(sign * magnitude * budget / unit_norm);
            let result = count_real_cycles(&field, cycle_radius, budget, cfg);
            field_record(i, mix(seed, i as u64), &field, result)
        })
        .collect())
}

/// Zero counts of one family at parameters drawn uniformly from the unit
/// ball.
pub fn run_theorem_b_tail(cfg: &ExperimentConfig) -> Result<(Vec<SampleRecord>, TailTable, Option<SummaryStats>), EnsembleError> {
    cfg.validate()?;
    let spec = cfg.family.as_ref().expect("validated");
    let family = spec.build()?;
    let records = count_family_samples(family.as_ref(), cfg.samples, cfg.seed, cfg.record_timing);
    let counts: Vec<Count> = records
        .iter()
        .filter(|r| !r.flags.excluded_from_tails)
        .filter_map(|r| r.complex_zero_count)
        .collect();
    if counts.is_empty() {
        return Err(EnsembleError::AllFailed(records.len()));
    }
    let tail = empirical_tail(&counts, &cfg.thresholds)?;
    let stats = expectation_and_variance(&counts).ok();
    Ok((records, tail, stats))
}

fn count_family_samples(family: &dyn ParametricFamily, samples: usize, seed: u64, timing: bool) -> Vec<SampleRecord> {
    (0..samples)
        .into_par_iter()
        .map(|i| {
            let start = Instant::now();
            let mut rng = sample_rng(seed, i as u64);
            let v = uniform_complex_ball(&mut rng, family.param_dim());
            let mut record = SampleRecord {
                sample_index: i,
                seed: mix(seed, i as u64),
                degree: None,
                norm: crate::sampling::complex_norm(&v),
                real_cycles: None,
                complex_zero_count: None,
                flags: SampleFlags::default(),
                wall_time: None,
            };
            match family_zero_count(family, &v) {
                Ok(r) => {
                    record.flags.degenerate = r.count.is_degenerate();
                    record.flags.excluded_from_moments = record.flags.degenerate;
                    record.complex_zero_count = Some(r.count);
                }
                Err(e) => {
                    record.flags.solver_failure = Some(e.to_string());
                    record.flags.excluded_from_moments = true;
                    record.flags.excluded_from_tails = true;
                }
            }
            if timing {
                record.wall_time = Some(start.elapsed().as_secs_f64());
            }
            record
        })
        .collect()
}

struct BuiltSequence {
    families: Vec<Box<dyn ParametricFamily>>,
}

impl BuiltSequence {
    fn new(spec: &SequenceSpec) -> Result<Self, EnsembleError> {
        spec.validate()?;
        let families = (1..=spec.period()).map(|k| spec.term(k).build()).collect::<Result<Vec<_>, _>>()?;
        Ok(BuiltSequence { families })
    }

    fn slot(&self, k: usize) -> usize {
        (k - 1) % self.families.len()
    }

    fn family(&self, k: usize) -> &dyn ParametricFamily {
        self.families[self.slot(k)].as_ref()
    }

    /// One draw of `N_k`: the zero count at a uniform parameter.
    fn draw(&self, k: usize, stream: u64, index: u64) -> Result<Count, FamilyError> {
        let family = self.family(k);
        let mut rng = sample_rng(stream, index);
        let v = uniform_complex_ball(&mut rng, family.param_dim());
        Ok(family_zero_count(family, &v)?.count)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SllnReport {
    pub counts: Vec<Option<Count>>,
    pub running_means: Vec<f64>,
    pub standard_error: f64,
    pub last_quarter_range: f64,
    pub stabilized: bool,
    /// `limit / (log M log(N + 1))` with the largest `M` and parameter
    /// dimension `N` of the sequence.
    pub envelope_constant: f64,
    pub excluded: usize,
}

/// Running means `(1/n) sum_{k <= n} N_k` of independent zero counts, one
/// parameter draw per term.
pub fn run_slln(spec: &SequenceSpec, n: usize, seed: u64) -> Result<SllnReport, EnsembleError> {
    if n == 0 {
        return Err(EnsembleError::Config("n must be at least 1".into()));
    }
    let seq = BuiltSequence::new(spec)?;
    let counts: Vec<Option<Count>> = (1..=n)
        .into_par_iter()
        .map(|k| seq.draw(k, seed, k as u64).ok())
        .collect();
    let mut running = Vec::with_capacity(n);
    let mut sum = 0.0;
    let mut used = 0usize;
    let mut values = Vec::new();
    for c in &counts {
        if let Some(Count::Finite(x)) = c {
            sum += *x as f64;
            used += 1;
            values.push(*x as f64);
        }
        running.push(if used > 0 { sum / used as f64 } else { f64::NAN });
    }
    if used == 0 {
        return Err(EnsembleError::AllFailed(n));
    }
    let se = (crate::stats::sample_variance(&values) / used as f64).sqrt();
    let tail: Vec<f64> = running[3 * n / 4..].iter().copied().filter(|x| x.is_finite()).collect();
    let range = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - tail.iter().copied().fold(f64::INFINITY, f64::min);
    let log_m = seq.families.iter().map(|f| f.bound_m().ln()).fold(0.0, f64::max);
    let dim = seq.families.iter().map(|f| f.param_dim()).max().unwrap_or(1);
    let limit = *running.last().expect("n >= 1");
    Ok(SllnReport {
        counts,
        running_means: running,
        standard_error: se,
        last_quarter_range: range,
        stabilized: range <= 3.0 * se || se == 0.0,
        envelope_constant: limit / (log_m * ((dim + 1) as f64).ln()),
        excluded: n - used,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub b_n: f64,
    pub normalized_sums: Vec<f64>,
    pub ks_vs_normal: f64,
    pub ks_p_value: f64,
    /// Calibrated `(E, D)` per distinct family.
    pub moments: Vec<(f64, f64)>,
    pub separation: Vec<(bool, bool)>,
    pub excluded_draws: usize,
}

#[derive(Clone, Debug)]
pub struct CltOptions {
    pub n: usize,
    pub repetitions: usize,
    pub seed: u64,
    pub calibration_draws: usize,
    pub delta: f64,
    pub s_prime: Option<f64>,
}

/// Normalized sums `sum_k (N_k - E N_k) / B_n` over independent
/// repetitions, compared with the standard normal law.
///
/// Moments come from a separate calibration stream. Terms with vanishing
/// variance are reported before the separation conditions are checked.
pub fn run_clt(spec: &SequenceSpec, opts: &CltOptions) -> Result<CltReport, EnsembleError> {
    if opts.n == 0 || opts.repetitions < 2 || opts.calibration_draws < 2 {
        return Err(EnsembleError::Config("need n >= 1, repetitions >= 2 and calibration draws >= 2".into()));
    }
    let seq = BuiltSequence::new(spec)?;
    let slots = seq.families.len();

    let mut moments = Vec::with_capacity(slots);
    for slot in 0..slots {
        let stream = mix(opts.seed ^ CALIBRATION_SALT, slot as u64);
        let draws: Vec<f64> = (0..opts.calibration_draws)
            .into_par_iter()
            .filter_map(|i| match seq.draw(slot + 1, stream, i as u64) {
                Ok(Count::Finite(c)) => Some(c as f64),
                _ => None,
            })
            .collect();
        if draws.len() < 2 {
            return Err(EnsembleError::AllFailed(opts.calibration_draws));
        }
        let variance = crate::stats::sample_variance(&draws);
        if variance < MIN_VARIANCE {
            return Err(EnsembleError::DegenerateVariance { k: slot + 1, variance });
        }
        moments.push((mean(&draws), variance));
    }

    let refs: Vec<&dyn ParametricFamily> = seq.families.iter().map(|f| f.as_ref()).collect();
    let s_prime = opts.s_prime.unwrap_or(0.5 * refs[0].disk_radius());
    let separation = check_separation_conditions(&refs, opts.delta, s_prime);
    if let Some((slot, &(a, b))) = separation.iter().enumerate().find(|(_, p)| !(p.0 && p.1)) {
        return Err(EnsembleError::SeparationFailed { k: slot + 1, a, b });
    }

    let b_n = (1..=opts.n).map(|k| moments[seq.slot(k)].1).sum::<f64>().sqrt();
    let results: Vec<(f64, usize)> = (0..opts.repetitions)
        .into_par_iter()
        .map(|rep| {
            let stream = mix(opts.seed, rep as u64);
            let mut sum = 0.0;
            let mut excluded = 0;
            for k in 1..=opts.n {
                match seq.draw(k, stream, k as u64) {
                    Ok(Count::Finite(c)) => sum += c as f64 - moments[seq.slot(k)].0,
                    _ => excluded += 1,
                }
            }
            (sum / b_n, excluded)
        })
        .collect();
    let normalized_sums: Vec<f64> = results.iter().map(|r| r.0).collect();
    let excluded_draws = results.iter().map(|r| r.1).sum();
    let (ks, p) = ks_standard_normal(&normalized_sums);
    Ok(CltReport {
        n: opts.n,
        b_n,
        normalized_sums,
        ks_vs_normal: ks,
        ks_p_value: p,
        moments,
        separation,
        excluded_draws,
    })
}

/// Writes through a temporary file in the same directory and renames it
/// into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), EnsembleError> {
    let io_err = |source| EnsembleError::Io { path: path.display().to_string(), source };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    fs::create_dir_all(dir).map_err(io_err)?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io_err(e)
    })
}

pub fn records_jsonl(records: &[SampleRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("records serialize"));
        out.push('\n');
    }
    out
}

pub fn tail_csv(table: &TailTable) -> String {
    let mut out = String::from("T,fraction,count\n");
    for ((t, f), c) in table.thresholds.iter().zip(&table.tail_fractions).zip(&table.exceedances) {
        let _ = writeln!(out, "{t},{f:?},{c}");
    }
    out
}

/// `k,E,D` rows.
pub fn moments_csv(rows: &[(usize, f64, f64)]) -> String {
    let mut out = String::from("k,E,D\n");
    for (k, e, d) in rows {
        let _ = writeln!(out, "{k},{e:?},{d:?}");
    }
    out
}

pub fn clt_csv(report: &CltReport) -> String {
    let mut out = String::from("repetition,normalized_sum\n");
    for (i, s) in report.normalized_sums.iter().enumerate() {
        let _ = writeln!(out, "{i},{s:?}");
    }
    out
}

pub fn running_means_csv(report: &SllnReport) -> String {
    let mut out = String::from("n,running_mean\n");
    for (i, m) in report.running_means.iter().enumerate() {
        let _ = writeln!(out, "{},{m:?}", i + 1);
    }
    out
}

/// gnuplot commands plotting each CSV file against its first column.
pub fn plot_script(csv_files: &[(&str, &str)]) -> String {
    let mut out = String::from("set datafile separator ','\nset key autotitle columnhead\nset terminal pngcairo size 900,600\n");
    for (file, ylabel) in csv_files {
        let stem = file.trim_end_matches(".csv");
        let _ = writeln!(out, "set output '{stem}.png'");
        let _ = writeln!(out, "set ylabel '{ylabel}'");
        let logscale = if file.contains("tail") { "set logscale y\n" } else { "unset logscale y\n" };
        out.push_str(logscale);
        let _ = writeln!(out, "plot '{file}' using 1:2 with linespoints");
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
    fn zero_flow_is_constant() {
        let fam = ode_flow_family(3, &FlowField::Zero, 2.0, 0.5, 0).unwrap();
        let v = [c(0.4), c(0.1), c(-0.2)];
        assert_eq!(fam.evaluate(&v, C64::new(0.3, 0.2)), c(0.4));
        assert_eq!(family_zero_count(&fam, &v).unwrap().count, Count::Finite(0));
    }

    #[test]
    fn chain_flow_gives_polynomials() {
        // x1 = v1 + v2 z + v3 z^2 / 2
        let fam = ode_flow_family(3, &FlowField::Chain { scale: 1.0 }, 2.0, 0.05, 0).unwrap();
        let x0 = [c(0.3), C64::new(0.1, 0.2), c(-0.5)];
        let series = fam.taylor_coefficients(&x0);
        assert_eq!(series[1][0], x0[1]);
        assert_eq!(series[2][0], x0[2] / 2.0);
        assert!(series.iter().skip(3).all(|t| t[0] == c(0.0)));
    }

    #[test]
    fn linear_flow_matches_rotation_exponential() {
        // A = [[0, -a], [a, 0]]: exp(zA) v = (v1 cos az - v2 sin az, ...)
        let a = 0.3;
        let matrix = vec![vec![0.0, -a], vec![a, 0.0]];
        let fam = ode_flow_family(2, &FlowField::Linear { matrix }, 2.0, 0.5, 0).unwrap();
        let x0 = [C64::new(0.5, 0.1), c(-0.2)];
        for z in [c(0.4), C64::new(-0.3, 0.6), C64::new(0.0, 0.9)] {
            let expected = x0[0] * (a * z).cos() - x0[1] * (a * z).sin();
            assert!((fam.first_coordinate(&x0, z) - expected).norm() < 1e-14);
        }
    }

    #[test]
    fn radius_violation() {
        let err = ode_flow_family(2, &FlowField::Chain { scale: 1.0 }, 2.0, 0.9, 0).unwrap_err();
        assert!(matches!(err, EnsembleError::RadiusViolation { .. }));
    }

    #[test]
    fn ode_family_bounds_spot_check() {
        let fam = ode_flow_family(3, &FlowField::RandomLinear { norm: 0.8 }, 2.0, 0.3, 5).unwrap();
        let mut rng = crate::sampling::rng_from_seed(3);
        for _ in 0..50 {
            let v: Vec<C64> = uniform_complex_ball(&mut rng, 3).into_iter().map(|x| x * 1.5).collect();
            for j in 0..16 {
                let z = C64::from_polar(1.0, j as f64 * 0.4);
                assert!(fam.evaluate(&v, z).norm() <= fam.bound_m());
            }
        }
    }

    #[test]
    fn config_validation() {
        let mut cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        cfg.budget = Some(1.0);
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig { experiment: ExperimentKind::Clt, ..Default::default() };
        assert!(cfg.validate().is_err());
        let parsed: ExperimentConfig = serde_json::from_str(r#"{"experiment":"kac","k":50}"#).unwrap();
        assert_eq!(parsed.k, 50);
        assert_eq!(parsed.experiment, ExperimentKind::Kac);
    }

    #[test]
    fn constant_sequence_running_mean() {
        let spec = SequenceSpec::Repeat { family: FamilySpec::Monomial { k: 2, scaled: false, s: 0.5 } };
        let r = run_slln(&spec, 40, 1).unwrap();
        assert!(r.running_means.iter().all(|&m| m == 2.0));
        assert!(r.stabilized);
    }

    #[test]
    fn deterministic_family_has_degenerate_variance() {
        let spec = SequenceSpec::Repeat { family: FamilySpec::Monomial { k: 2, scaled: false, s: 0.5 } };
        let opts = CltOptions { n: 10, repetitions: 10, seed: 1, calibration_draws: 100, delta: 0.05, s_prime: None };
        assert!(matches!(run_clt(&spec, &opts), Err(EnsembleError::DegenerateVariance { .. })));
    }

    #[test]
    fn single_sample_is_reproducible() {
        let cfg = ExperimentConfig { samples: 1, seed: 7, ..Default::default() };
        let a = records_jsonl(&run_theorem_a(&cfg).unwrap().records);
        let b = records_jsonl(&run_theorem_a(&cfg).unwrap().records);
        assert_eq!(a, b);
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sub/out.csv");
        write_atomic(&path, b"one").unwrap();
        write_atomic(&path, b"two").unwrap();
        assert_eq!(fs::read(&path).unwrap(), b"two");
        assert_eq!(fs::read_dir(path.parent().unwrap()).unwrap().count(), 1);
    }

    #[test]
    fn csv_writers() {
        let table = empirical_tail(&[Count::Finite(1), Count::Finite(3)], &[1, 2]).unwrap();
        assert_eq!(tail_csv(&table), "T,fraction,count\n1,1.0,2\n2,0.5,1\n");
        assert_eq!(moments_csv(&[(1, 1.5, 0.25)]), "k,E,D\n1,1.5,0.25\n");
        assert!(plot_script(&[("tail.csv", "P")]).contains("plot 'tail.csv'"));
    }
}
