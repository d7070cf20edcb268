//! Return map of the polar equation `dr/dtheta = r P / (1 + Q)` over one
//! revolution, limit cycle counting and the normalized displacement family.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analytic::Count;
use crate::family::{family_zero_count, FamilyError, ParametricFamily};
use crate::field::{coefficient_count, FieldError, PlanarField, PolarSystem, PolarTable};
use crate::{ZeroCountResult, C64};

/// Radial grid resolution of [`denominator_guard`].
pub const GUARD_RADII: usize = 21;
/// Angular grid resolution of [`denominator_guard`].
pub const GUARD_ANGLES: usize = 720;
/// Smallest admissible value of [`denominator_guard`].
pub const MIN_GUARD: f64 = 0.4;
/// Real zeros are searched on `[ORIGIN_GUARD, K]`.
pub const ORIGIN_GUARD: f64 = 1e-4;
/// Width at which bisection of a real zero stops.
pub const BISECTION_WIDTH: f64 = 1e-10;
/// Smallest Runge-Kutta step before giving up.
pub const MIN_RK_STEP: f64 = 1e-12;

const CONTRACTION_LIMIT: f64 = 0.9;
const CONTRACTION_STRIKES: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PoincareError {
    #[error("invalid solver config: {0}")]
    Config(String),
    #[error("denominator guard {value:.3e} is below {MIN_GUARD}")]
    DenominatorGuard { value: f64 },
    #[error("initial radius |w| = {0} exceeds 3/4")]
    InitialRadius(f64),
    #[error("cycle search radius must lie in (0, 3/4], got {0}")]
    SearchRadius(f64),
    #[error("Picard iteration stopped contracting at iteration {iteration} (ratio {ratio:.3})")]
    NoContraction { iteration: usize, ratio: f64 },
    #[error("Picard iteration did not reach tolerance, last update {residual:.3e}")]
    NotConverged { residual: f64 },
    #[error("Runge-Kutta step fell below {MIN_RK_STEP:e} at theta = {theta:.6}")]
    StepUnderflow { theta: f64 },
    #[error("solution is not finite at theta = {theta:.6}")]
    NonFinite { theta: f64 },
    #[error("|p| = {value:.3e} exceeds the a priori bound {bound:.3e}")]
    DisplacementBound { value: f64, bound: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Family(#[from] FamilyError),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Number of Simpson intervals on `[0, 2 pi]` (even).
    pub theta_points: usize,
    pub picard_tol: f64,
    pub picard_max_iter: usize,
    pub rk_tol: f64,
    /// Defaults to `1e-11 * 16 pi d N` when absent.
    pub center_tol: Option<f64>,
    pub grid_points_w: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            theta_points: 1024,
            picard_tol: 1e-12,
            picard_max_iter: 60,
            rk_tol: 1e-12,
            center_tol: None,
            grid_points_w: 512,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), PoincareError> {
        let bad = |m: &str| Err(PoincareError::Config(m.to_string()));
        if self.theta_points < 4 || !self.theta_points.is_multiple_of(2) {
            return bad("theta_points must be an even number >= 4");
        }
        if self.theta_points > 1 << 20 {
            return bad("theta_points must be at most 2^20");
        }
        if !(self.picard_tol > 0.0 && self.picard_tol.is_finite()) {
            return bad("picard_tol must be positive");
        }
        if self.picard_max_iter == 0 || self.picard_max_iter > 10_000 {
            return bad("picard_max_iter must lie in 1..=10000");
        }
        if !(self.rk_tol > 0.0 && self.rk_tol.is_finite()) {
            return bad("rk_tol must be positive");
        }
        if let Some(t) = self.center_tol {
            if !(t >= 0.0 && t.is_finite()) {
                return bad("center_tol must be nonnegative");
            }
        }
        if self.grid_points_w < 2 || self.grid_points_w > 1 << 20 {
            return bad("grid_points_w must lie in 2..=2^20");
        }
        Ok(())
    }

    pub fn center_tol_for(&self, degree: usize, budget: f64) -> f64 {
        self.center_tol
            .unwrap_or(1e-11 * displacement_bound(degree, budget))
    }
}

/// A priori bound `16 pi d N` on `|p|` over `B_c(0, 2N) x D_{3/4}`.
pub fn displacement_bound(degree: usize, budget: f64) -> f64 {
    16.0 * PI * degree as f64 * budget
}

/// `p(v0, w) / w = e^{pi N} - 1` for the spiral field [`PlanarField::v0`].
pub fn v0_multiplier(budget: f64) -> f64 {
    (PI * budget).exp_m1()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverKind {
    Picard,
    RungeKutta,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub theta_grid: Vec<f64>,
    pub values: Vec<C64>,
    pub solver: SolverKind,
    pub iterations_or_steps: usize,
    pub final_residual: f64,
    /// Largest observed ratio of successive Picard updates (Picard only).
    pub contraction_ratio: Option<f64>,
}

impl Trajectory {
    pub fn endpoint(&self) -> C64 {
        *self.values.last().expect("trajectory is never empty")
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    pub fn sup_distance(&self, other: &Trajectory) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// `min |1 + Q(r, theta)|` over `r in [0, 1]` (21 radii) and 720 angles.
pub fn denominator_guard(sys: &PolarSystem) -> f64 {
    let mut best = f64::INFINITY;
    for j in 0..GUARD_ANGLES {
        let theta = TAU * j as f64 / GUARD_ANGLES as f64;
        let (_, gs) = sys.trig_coefficients(theta);
        for i in 0..GUARD_RADII {
            let r = i as f64 / (GUARD_RADII - 1) as f64;
            let q = gs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &g| acc * r + g);
            best = best.min((1.0 + q).norm());
        }
    }
    best
}

struct PicardOutcome<T> {
    values: Option<Vec<T>>,
    displacement: T,
    iterations: usize,
    residual: f64,
    max_ratio: Option<f64>,
}

/// Successive approximations
/// `r_{n+1}(theta) = w + int_0^theta r_n P(r_n, t) / (1 + Q(r_n, t)) dt`
/// with cumulative composite Simpson quadrature on a fixed grid.
///
/// The trigonometric table is built once, so one solver serves every
/// initial value of the same field.
#[derive(Clone, Debug)]
pub struct PicardSolver {
    table: PolarTable,
    cfg: SolverConfig,
    guard: f64,
}

impl PicardSolver {
    pub fn new(sys: &PolarSystem, cfg: &SolverConfig) -> Result<Self, PoincareError> {
        cfg.validate()?;
        let guard = denominator_guard(sys);
        if !(guard > MIN_GUARD) {
            return Err(PoincareError::DenominatorGuard { value: guard });
        }
        Ok(PicardSolver { table: sys.tabulate(cfg.theta_points), cfg: cfg.clone(), guard })
    }

    pub fn guard(&self) -> f64 {
        self.guard
    }

    pub fn trajectory(&self, w: C64) -> Result<Trajectory, PoincareError> {
        let out = self.run(w, true)?;
        let n = self.table.intervals();
        Ok(Trajectory {
            theta_grid: (0..=n).map(|j| self.table.theta(j)).collect(),
            values: out.values.expect("values requested"),
            solver: SolverKind::Picard,
            iterations_or_steps: out.iterations,
            final_residual: out.residual,
            contraction_ratio: out.max_ratio,
        })
    }

    /// `p(w) = r(2 pi) - w`, taken directly from the quadrature sum.
    pub fn displacement(&self, w: C64) -> Result<C64, PoincareError> {
        Ok(self.run(w, false)?.displacement)
    }

    /// Displacement at a real initial radius, in real arithmetic when the
    /// field is real.
    pub fn displacement_real(&self, w: f64) -> Result<f64, PoincareError> {
        if self.table.is_real() {
            Ok(self.iterate(w, false, |j, r| self.table.rhs_real(j, r))?.displacement)
        } else {
            Ok(self.displacement(C64::new(w, 0.0))?.re)
        }
    }

    fn run(&self, w: C64, keep: bool) -> Result<PicardOutcome<C64>, PoincareError> {
        self.iterate(w, keep, |j, r| self.table.rhs(j, r))
    }

    fn iterate<T: Scalar>(
        &self,
        w: T,
        keep: bool,
        rhs: impl Fn(usize, T) -> T,
    ) -> Result<PicardOutcome<T>, PoincareError> {
        if !(w.modulus() <= 0.75) {
            return Err(PoincareError::InitialRadius(w.modulus()));
        }
        let n = self.table.intervals();
        let h = TAU / n as f64;
        let zero = T::zero();
        let mut r = vec![w; n + 1];
        let mut next = vec![w; n + 1];
        let mut g = vec![zero; n + 1];
        let mut prev_diff: Option<f64> = None;
        let mut max_ratio: Option<f64> = None;
        let mut strikes = 0;
        let mut diff = f64::INFINITY;

        for iteration in 1..=self.cfg.picard_max_iter {
            for (j, (gj, rj)) in g.iter_mut().zip(&r).enumerate() {
                *gj = rhs(j, *rj);
                if !gj.finite() {
                    return Err(PoincareError::NonFinite { theta: self.table.theta(j) });
                }
            }
            let mut acc = zero;
            next[0] = w;
            for j in (0..n).step_by(2) {
                let (g0, g1, g2) = (g[j], g[j + 1], g[j + 2]);
                next[j + 1] = w + (acc + (g0 * 5.0 + g1 * 8.0 - g2) * (h / 12.0));
                acc += (g0 + g1 * 4.0 + g2) * (h / 3.0);
                next[j + 2] = w + acc;
            }
            diff = r.iter().zip(&next).map(|(a, b)| (*a - *b).modulus()).fold(0.0, f64::max);
            let scale = next.iter().map(|x| x.modulus()).fold(0.0, f64::max);
            std::mem::swap(&mut r, &mut next);

            // ratios of updates already at rounding level carry no information
            let floor = 1e3 * f64::EPSILON * scale.max(f64::MIN_POSITIVE);
            if let Some(prev) = prev_diff {
                if prev > floor {
                    let ratio = diff / prev;
                    max_ratio = Some(max_ratio.map_or(ratio, |m: f64| m.max(ratio)));
                    if ratio > CONTRACTION_LIMIT {
                        strikes += 1;
                        if strikes >= CONTRACTION_STRIKES {
                            return Err(PoincareError::NoContraction { iteration, ratio });
                        }
                    } else {
                        strikes = 0;
                    }
                }
            }
            if diff < self.cfg.picard_tol {
                return Ok(PicardOutcome {
                    values: keep.then_some(r),
                    displacement: acc,
                    iterations: iteration,
                    residual: diff,
                    max_ratio,
                });
            }
            prev_diff = Some(diff);
        }
        Err(PoincareError::NotConverged { residual: diff })
    }
}

trait Scalar: Copy + std::ops::Add<Output = Self> + std::ops::Sub<Output = Self> + std::ops::Mul<f64, Output = Self> + std::ops::AddAssign {
    fn zero() -> Self;
    fn modulus(self) -> f64;
    fn finite(self) -> bool;
}

impl Scalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
}

impl Scalar for C64 {
    fn zero() -> Self {
        C64::new(0.0, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

pub fn picard_solve(sys: &PolarSystem, w: C64, cfg: &SolverConfig) -> Result<Trajectory, PoincareError> {
    PicardSolver::new(sys, cfg)?.trajectory(w)
}

pub fn displacement(sys: &PolarSystem, w: C64, cfg: &SolverConfig) -> Result<C64, PoincareError> {
    PicardSolver::new(sys, cfg)?.displacement(w)
}

// Dormand-Prince 5(4) tableau
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

/// Adaptive Dormand-Prince 5(4) integration of the same equation, sampled
/// on the Picard grid through the continuous extension.
pub fn rk_solve(sys: &PolarSystem, w: C64, cfg: &SolverConfig) -> Result<Trajectory, PoincareError> {
    cfg.validate()?;
    if !(w.norm() <= 0.75) {
        return Err(PoincareError::InitialRadius(w.norm()));
    }
    let f = |theta: f64, r: C64| sys.rhs(r, theta);
    let n = cfg.theta_points;
    let grid: Vec<f64> = (0..=n).map(|j| TAU * j as f64 / n as f64).collect();
    let mut values = Vec::with_capacity(n + 1);
    values.push(w);
    let mut next_node = 1;

    let tol = cfg.rk_tol;
    let mut theta = 0.0;
    let mut y = w;
    let mut k1 = f(theta, y);
    let mut h = TAU / 64.0;
    let mut steps = 0;
    let mut last_err = 0.0;
    while theta < TAU {
        if h < MIN_RK_STEP {
            return Err(PoincareError::StepUnderflow { theta });
        }
        let last = theta + h >= TAU;
        if last {
            h = TAU - theta;
        }
        let k2 = f(theta + C2 * h, y + h * A21 * k1);
        let k3 = f(theta + C3 * h, y + h * (A31 * k1 + A32 * k2));
        let k4 = f(theta + C4 * h, y + h * (A41 * k1 + A42 * k2 + A43 * k3));
        let k5 = f(theta + C5 * h, y + h * (A51 * k1 + A52 * k2 + A53 * k3 + A54 * k4));
        let k6 = f(theta + h, y + h * (A61 * k1 + A62 * k2 + A63 * k3 + A64 * k4 + A65 * k5));
        let y1 = y + h * (A71 * k1 + A73 * k3 + A74 * k4 + A75 * k5 + A76 * k6);
        let k7 = f(theta + h, y1);
        if !(y1.re.is_finite() && y1.im.is_finite() && k7.re.is_finite() && k7.im.is_finite()) {
            h *= 0.25;
            continue;
        }
        let err_vec = h * (E1 * k1 + E3 * k3 + E4 * k4 + E5 * k5 + E6 * k6 + E7 * k7);
        let scale = tol + tol * y.norm().max(y1.norm());
        let err = err_vec.norm() / scale;
        let factor = if err == 0.0 { 10.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 10.0) };
        if err <= 1.0 {
            let end = if last { TAU } else { theta + h };
            let ydiff = y1 - y;
            let bspl = h * k1 - ydiff;
            let r4 = ydiff - h * k7 - bspl;
            let r5 = h * (D1 * k1 + D3 * k3 + D4 * k4 + D5 * k5 + D6 * k6 + D7 * k7);
            while next_node <= n && (grid[next_node] <= end || (last && next_node == n)) {
                let s = ((grid[next_node] - theta) / h).clamp(0.0, 1.0);
                let value = if next_node == n && last {
                    y1
                } else {
                    y + s * (ydiff + (1.0 - s) * (bspl + s * (r4 + (1.0 - s) * r5)))
                };
                values.push(value);
                next_node += 1;
            }
            theta = end;
            y = y1;
            k1 = k7;
            steps += 1;
            last_err = err;
            if last {
                break;
            }
        }
        h *= factor;
    }
    Ok(Trajectory {
        theta_grid: grid,
        values,
        solver: SolverKind::RungeKutta,
        iterations_or_steps: steps,
        final_residual: last_err * tol,
        contraction_ratio: None,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CycleCount {
    /// Isolated sign changes of `p` on `(0, K]`.
    pub real_cycles: Count,
    /// Grid points with `|p|` below the center tolerance and no sign change.
    pub tangential_flags: u32,
    /// Zeros of `p(v, .)` in the closed disk `|w| <= 1/2`.
    pub complex_zero_count: Count,
    pub is_center: bool,
    /// Radii of the detected cycles.
    pub cycle_radii: Vec<f64>,
}

/// Real zeros of `w -> p(v, w)` on `(0, K]` together with the complex count
/// in `|w| <= 1/2`.
pub fn count_limit_cycles(
    field: &PlanarField,
    k: f64,
    budget: f64,
    cfg: &SolverConfig,
) -> Result<CycleCount, PoincareError> {
    let real = count_real_cycles(field, k, budget, cfg)?;
    if real.is_center {
        return Ok(real);
    }
    let complex = complex_displacement_count(field, budget, cfg)?;
    Ok(CycleCount { complex_zero_count: complex.count, ..real })
}

/// The real half of [`count_limit_cycles`]; `complex_zero_count` is left as
/// the sentinel unless the field is a center.
pub fn count_real_cycles(
    field: &PlanarField,
    k: f64,
    budget: f64,
    cfg: &SolverConfig,
) -> Result<CycleCount, PoincareError> {
    if !(k > ORIGIN_GUARD && k <= 0.75) {
        return Err(PoincareError::SearchRadius(k));
    }
    let degree = field.degree();
    let solver = PicardSolver::new(&field.polar(), cfg)?;
    let center_tol = cfg.center_tol_for(degree, budget);
    let bound = displacement_bound(degree, budget) * (1.0 + 1e-6);
    let admissible = field.norm() <= 2.0 * budget;

    let p_real = |w: f64| -> Result<f64, PoincareError> {
        let p = solver.displacement_real(w)?;
        if admissible && p.abs() > bound {
            return Err(PoincareError::DisplacementBound { value: p.abs(), bound });
        }
        Ok(p)
    };

    let m = cfg.grid_points_w;
    let ws: Vec<f64> = (0..m)
        .map(|j| ORIGIN_GUARD + (k - ORIGIN_GUARD) * j as f64 / (m - 1) as f64)
        .collect();
    let ps = ws.iter().map(|&w| p_real(w)).collect::<Result<Vec<_>, _>>()?;

    if ps.iter().all(|p| p.abs() < center_tol) {
        return Ok(CycleCount {
            real_cycles: Count::Degenerate,
            tangential_flags: 0,
            complex_zero_count: Count::Degenerate,
            is_center: true,
            cycle_radii: Vec::new(),
        });
    }

    let mut radii = Vec::new();
    let mut in_change = vec![false; m];
    let mut last_nonzero: Option<usize> = None;
    for j in 0..m {
        if ps[j] == 0.0 {
            continue;
        }
        if let Some(i) = last_nonzero {
            if ps[i].signum() != ps[j].signum() {
                for flag in &mut in_change[i..=j] {
                    *flag = true;
                }
                radii.push(bisect(&p_real, ws[i], ws[j], ps[i])?);
            }
        }
        last_nonzero = Some(j);
    }
    let tangential = (0..m)
        .filter(|&j| !in_change[j] && ps[j].abs() < center_tol)
        .filter(|&j| {
            let left = j == 0 || ps[j - 1].abs() >= ps[j].abs();
            let right = j + 1 == m || ps[j + 1].abs() >= ps[j].abs();
            left && right
        })
        .count() as u32;

    Ok(CycleCount {
        real_cycles: Count::Finite(radii.len() as u32),
        tangential_flags: tangential,
        complex_zero_count: Count::Degenerate,
        is_center: false,
        cycle_radii: radii,
    })
}

fn bisect<F>(p: &F, mut a: f64, mut b: f64, mut pa: f64) -> Result<f64, PoincareError>
where
    F: Fn(f64) -> Result<f64, PoincareError>,
{
    while b - a > BISECTION_WIDTH {
        let mid = 0.5 * (a + b);
        let pm = p(mid)?;
        if pm == 0.0 {
            return Ok(mid);
        }
        if pm.signum() == pa.signum() {
            a = mid;
            pa = pm;
        } else {
            b = mid;
        }
    }
    Ok(0.5 * (a + b))
}

/// Normalized displacement family
/// `f_v(z) = p(N v, 3z/4) / p(v0, 1/2)` over `v in B_c(0, 2)`, `z in D_1`.
///
/// Its zeros in the closed disk `|z| <= 2/3` are the zeros of `p(Nv, .)` in
/// `|w| <= 1/2`. The class bounds are `M = 32 d`, `r = 2`, `s = 2/3`.
#[derive(Clone, Debug)]
pub struct DisplacementFamily {
    degree: usize,
    budget: f64,
    normalizer: f64,
    cfg: SolverConfig,
}

impl DisplacementFamily {
    pub fn new(degree: usize, budget: f64, cfg: &SolverConfig) -> Result<Self, PoincareError> {
        if degree == 0 {
            return Err(FieldError::InvalidDegree.into());
        }
        if !(budget > 0.0 && budget.is_finite()) {
            return Err(FieldError::InvalidScale(budget).into());
        }
        cfg.validate()?;
        Ok(DisplacementFamily {
            degree,
            budget,
            normalizer: v0_multiplier(budget) / 2.0,
            cfg: cfg.clone(),
        })
    }

    pub fn budget(&self) -> f64 {
        self.budget
    }

    pub fn normalizer(&self) -> f64 {
        self.normalizer
    }

    /// Normalized parameter `v = u / N` of a field `u`.
    pub fn parameter_of(&self, field: &PlanarField) -> Vec<C64> {
        field.to_vector().iter().map(|&c| C64::new(c / self.budget, 0.0)).collect()
    }

    fn solver(&self, v: &[C64]) -> Result<PicardSolver, PoincareError> {
        let coeffs: Vec<C64> = v.iter().map(|c| c * self.budget).collect();
        let sys = PolarSystem::from_complex_vector(self.degree, &coeffs)?;
        PicardSolver::new(&sys, &self.cfg)
    }
}

impl ParametricFamily for DisplacementFamily {
    fn name(&self) -> String {
        format!("displacement(d={}, N={:e})", self.degree, self.budget)
    }

    fn param_dim(&self) -> usize {
        coefficient_count(self.degree)
    }

    fn bound_m(&self) -> f64 {
        32.0 * self.degree as f64
    }

    fn param_radius(&self) -> f64 {
        2.0
    }

    fn disk_radius(&self) -> f64 {
        2.0 / 3.0
    }

    fn evaluate(&self, v: &[C64], z: C64) -> C64 {
        self.slice(v)(z)
    }

    fn slice<'a>(&'a self, v: &[C64]) -> Box<dyn Fn(C64) -> C64 + Send + Sync + 'a> {
        let nan = C64::new(f64::NAN, f64::NAN);
        match self.solver(v) {
            Ok(solver) => Box::new(move |z| {
                solver
                    .displacement(0.75 * z)
                    .map(|p| p / self.normalizer)
                    .unwrap_or(nan)
            }),
            Err(_) => Box::new(move |_| nan),
        }
    }
}

/// Zeros of `p(v, .)` in `|w| <= 1/2`, counted on the normalized family.
pub fn complex_displacement_count(
    field: &PlanarField,
    budget: f64,
    cfg: &SolverConfig,
) -> Result<ZeroCountResult, PoincareError> {
    let family = DisplacementFamily::new(field.degree(), budget, cfg)?;
    let v = family.parameter_of(field);
    Ok(family_zero_count(&family, &v)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::default_budget;
    use crate::field::Ellipsoid;
    use crate::sampling::rng_from_seed;

    fn c(x: f64) -> C64 {
        C64::new(x, 0.0)
    }

    #[test]
    fn config_defaults_and_validation() {
        let cfg = SolverConfig::default();
        cfg.validate().unwrap();
        assert!(SolverConfig { theta_points: 7, ..cfg.clone() }.validate().is_err());
        assert!(SolverConfig { picard_tol: 0.0, ..cfg.clone() }.validate().is_err());
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<SolverConfig>(&json).unwrap(), cfg);
        let partial: SolverConfig = serde_json::from_str(r#"{"theta_points": 256}"#).unwrap();
        assert_eq!(partial.theta_points, 256);
        assert_eq!(partial.picard_max_iter, 60);
    }

    #[test]
    fn guard_of_zero_and_v0_is_one() {
        assert_eq!(denominator_guard(&PlanarField::zero(3).unwrap().polar()), 1.0);
        assert_eq!(denominator_guard(&PlanarField::v0(3, 0.01).unwrap().polar()), 1.0);
    }

    #[test]
    fn v0_trajectory_is_exponential() {
        let n = default_budget(3);
        let sys = PlanarField::v0(3, n).unwrap().polar();
        let cfg = SolverConfig::default();
        for w in [c(0.3), C64::new(0.2, -0.4)] {
            for traj in [picard_solve(&sys, w, &cfg).unwrap(), rk_solve(&sys, w, &cfg).unwrap()] {
                for (theta, r) in traj.theta_grid.iter().zip(&traj.values) {
                    assert!((r - w * (n * theta / 2.0).exp()).norm() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn zero_field_is_a_fixed_point() {
        let sys = PlanarField::zero(2).unwrap().polar();
        let cfg = SolverConfig::default();
        let t = picard_solve(&sys, c(0.6), &cfg).unwrap();
        assert!(t.values.iter().all(|&r| r == c(0.6)));
        assert_eq!(t.iterations_or_steps, 1);
        let t = rk_solve(&sys, c(0.6), &cfg).unwrap();
        assert!(t.values.iter().all(|&r| r == c(0.6)));
        assert_eq!(displacement(&sys, c(0.4), &cfg).unwrap(), c(0.0));
    }

    #[test]
    fn rigid_orbit_at_root_radius_is_periodic() {
        // f(u) = u - 0.09 has its cycle at r = 0.3
        let field = PlanarField::rigid(3, &[-0.09 * 1e-3, 1e-3]).unwrap();
        let sys = field.polar();
        let cfg = SolverConfig::default();
        let t = picard_solve(&sys, c(0.3), &cfg).unwrap();
        assert!(t.values.iter().all(|r| (r - c(0.3)).norm() < 1e-14));
        let rk = rk_solve(&sys, c(0.3), &cfg).unwrap();
        assert!(t.sup_distance(&rk) < 1e-12);
        assert!(displacement(&sys, c(0.3), &cfg).unwrap().norm() < 1e-15);
    }

    #[test]
    fn v0_displacement_closed_form() {
        let n = default_budget(5);
        let sys = PlanarField::v0(5, n).unwrap().polar();
        let cfg = SolverConfig::default();
        for w in [0.1, 0.2, 0.3, 0.5, 0.7] {
            let p = displacement(&sys, c(w), &cfg).unwrap();
            assert!((p - c(v0_multiplier(n) * w)).norm() < 1e-10);
        }
    }

    #[test]
    fn picard_rejects_large_initial_radius() {
        let sys = PlanarField::zero(1).unwrap().polar();
        assert!(matches!(
            picard_solve(&sys, c(0.8), &SolverConfig::default()),
            Err(PoincareError::InitialRadius(_))
        ));
    }

    #[test]
    fn guard_rejects_large_fields() {
        let mut v = vec![0.0; coefficient_count(1)];
        v[3] = -2.0; // b_{1,1}: Q = -2 r cos^2 vanishes at r = 1/2
        let field = PlanarField::from_vector(1, &v).unwrap();
        let err = PicardSolver::new(&field.polar(), &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, PoincareError::DenominatorGuard { .. }));
    }

    #[test]
    fn no_contraction_outside_the_small_regime() {
        // strong radial growth with a benign denominator
        let field = PlanarField::rigid(3, &[0.0, 40.0]).unwrap();
        let err = picard_solve(&field.polar(), c(0.7), &SolverConfig::default()).unwrap_err();
        assert!(
            matches!(
                err,
                PoincareError::NoContraction { .. }
                    | PoincareError::NonFinite { .. }
                    | PoincareError::NotConverged { .. }
            ),
            "{err:?}"
        );
    }

    #[test]
    fn picard_matches_rk_on_random_fields() {
        let mut rng = rng_from_seed(21);
        let n = default_budget(3);
        let e = Ellipsoid::new(1.0, n, 3).unwrap();
        let cfg = SolverConfig::default();
        for _ in 0..10 {
            let sys = e.sample(&mut rng).polar();
            let w = C64::new(0.5, 0.3);
            let a = picard_solve(&sys, w, &cfg).unwrap();
            let b = rk_solve(&sys, w, &cfg).unwrap();
            assert!(a.sup_distance(&b) < 1e-8);
            assert!(a.contraction_ratio.unwrap_or(0.0) < 0.55);
        }
    }

    #[test]
    fn three_root_rigid_system() {
        let d = 7;
        let n = default_budget(d);
        // c (u - 0.04)(u - 0.09)(u - 0.16)
        let roots = [0.04, 0.09, 0.16];
        let mut poly = vec![1.0];
        for r in roots {
            let mut next = vec![0.0; poly.len() + 1];
            for (i, &a) in poly.iter().enumerate() {
                next[i + 1] += a;
                next[i] -= r * a;
            }
            poly = next;
        }
        let unit = PlanarField::rigid(d, &poly).unwrap();
        let field = unit.scaled(0.5 * n / unit.norm());
        let cfg = SolverConfig::default();
        let count = count_limit_cycles(&field, 0.5, n, &cfg).unwrap();
        assert_eq!(count.real_cycles, Count::Finite(3));
        for (got, want) in count.cycle_radii.iter().zip([0.2, 0.3, 0.4]) {
            assert!((got - want).abs() < 1e-8);
        }
        assert_eq!(count.complex_zero_count, Count::Finite(7));
    }

    #[test]
    fn v0_and_zero_field_counts() {
        let n = default_budget(3);
        let cfg = SolverConfig::default();
        let v0 = count_limit_cycles(&PlanarField::v0(3, n).unwrap(), 0.5, n, &cfg).unwrap();
        assert_eq!(v0.real_cycles, Count::Finite(0));
        assert!(!v0.is_center);
        assert_eq!(v0.complex_zero_count, Count::Finite(1));
        let zero = count_limit_cycles(&PlanarField::zero(3).unwrap(), 0.5, n, &cfg).unwrap();
        assert!(zero.is_center);
        assert_eq!(zero.real_cycles, Count::Degenerate);
    }

    #[test]
    fn zero_field_complex_count_is_degenerate() {
        let n = default_budget(2);
        let r = complex_displacement_count(&PlanarField::zero(2).unwrap(), n, &SolverConfig::default()).unwrap();
        assert_eq!(r.count, Count::Degenerate);
    }

    #[test]
    fn displacement_family_normalization() {
        // |f_{v0/N}(2/3)| = 1
        let n = default_budget(3);
        let fam = DisplacementFamily::new(3, n, &SolverConfig::default()).unwrap();
        let v = fam.parameter_of(&PlanarField::v0(3, n).unwrap());
        let value = fam.evaluate(&v, c(2.0 / 3.0));
        assert!((value.norm() - 1.0).abs() < 1e-9);
    }
}
