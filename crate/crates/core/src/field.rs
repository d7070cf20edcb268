//! Planar polynomial perturbations of the linear center.
//!
//! The system is `x' = -y + F(x, y)`, `y' = x + G(x, y)` with
//! `F = sum_k F_k`, `F_k(x, y) = sum_i a_{ki} x^i y^{k-i}` for `1 <= k <= d`,
//! and likewise `G` with `b_{ki}`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sampling::uniform_real_ball;
use crate::C64;

/// Angular grid used by the trigonometric norm check.
pub const TRIG_GRID: usize = 720;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldError {
    #[error("degree must be at least 1")]
    InvalidDegree,
    #[error("degree mismatch: field has degree {field}, expected {expected}")]
    DegreeMismatch { field: usize, expected: usize },
    #[error("coefficient row {row} of {name} has length {got}, expected {expected}")]
    InvalidShape { name: &'static str, row: usize, got: usize, expected: usize },
    #[error("{name} has {got} rows, expected {expected}")]
    InvalidRows { name: &'static str, got: usize, expected: usize },
    #[error("coefficient vector has length {got}, expected {expected}")]
    InvalidLength { got: usize, expected: usize },
    #[error("coefficients must be finite")]
    NonFinite,
    #[error("field is identically zero")]
    ZeroField,
    #[error("scale must be positive and finite, got {0}")]
    InvalidScale(f64),
}

/// Number of real coefficients of a degree-`d` perturbation, `d(d+3)`.
pub fn coefficient_count(degree: usize) -> usize {
    degree * (degree + 3)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawField", into = "RawField")]
pub struct PlanarField {
    degree: usize,
    // row k-1 holds a_{k0} .. a_{kk}
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawField {
    degree: usize,
    a: Vec<Vec<f64>>,
    b: Vec<Vec<f64>>,
}

impl TryFrom<RawField> for PlanarField {
    type Error = FieldError;
    fn try_from(raw: RawField) -> Result<Self, FieldError> {
        PlanarField::new(raw.degree, raw.a, raw.b)
    }
}

impl From<PlanarField> for RawField {
    fn from(f: PlanarField) -> Self {
        RawField { degree: f.degree, a: f.a, b: f.b }
    }
}

fn check_rows(name: &'static str, degree: usize, rows: &[Vec<f64>]) -> Result<(), FieldError> {
    if rows.len() != degree {
        return Err(FieldError::InvalidRows { name, got: rows.len(), expected: degree });
    }
    for (idx, row) in rows.iter().enumerate() {
        if row.len() != idx + 2 {
            return Err(FieldError::InvalidShape { name, row: idx + 1, got: row.len(), expected: idx + 2 });
        }
        if row.iter().any(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite);
        }
    }
    Ok(())
}

impl PlanarField {
    pub fn new(degree: usize, a: Vec<Vec<f64>>, b: Vec<Vec<f64>>) -> Result<Self, FieldError> {
        if degree == 0 {
            return Err(FieldError::InvalidDegree);
        }
        check_rows("a", degree, &a)?;
        check_rows("b", degree, &b)?;
        Ok(PlanarField { degree, a, b })
    }

    pub fn zero(degree: usize) -> Result<Self, FieldError> {
        if degree == 0 {
            return Err(FieldError::InvalidDegree);
        }
        let rows: Vec<Vec<f64>> = (1..=degree).map(|k| vec![0.0; k + 1]).collect();
        Ok(PlanarField { degree, a: rows.clone(), b: rows })
    }

    /// `F = (N/2) x`, `G = (N/2) y`: every orbit is the spiral
    /// `r = e^{N theta/2} r_0`.
    pub fn v0(degree: usize, budget: f64) -> Result<Self, FieldError> {
        let mut f = Self::zero(degree)?;
        f.a[0][1] = budget / 2.0;
        f.b[0][0] = budget / 2.0;
        Ok(f)
    }

    /// `x' = -y + x f(x^2+y^2)`, `y' = x + y f(x^2+y^2)` for
    /// `f(u) = sum_j coeffs[j] u^j`. Its limit cycles are the circles
    /// `x^2 + y^2 = u_i` over the simple positive roots `u_i` of `f`.
    pub fn rigid(degree: usize, coeffs: &[f64]) -> Result<Self, FieldError> {
        let mut f = Self::zero(degree)?;
        for (j, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let k = 2 * j + 1;
            if k > degree {
                return Err(FieldError::DegreeMismatch { field: k, expected: degree });
            }
            for m in 0..=j {
                let binom = binomial(j, m);
                f.a[k - 1][2 * m + 1] += c * binom;
                f.b[k - 1][2 * m] += c * binom;
            }
        }
        Ok(f)
    }

    /// Coefficients in the order `a_1, b_1, a_2, b_2, ...` (each row by
    /// increasing power of `x`).
    pub fn from_vector(degree: usize, v: &[f64]) -> Result<Self, FieldError> {
        if degree == 0 {
            return Err(FieldError::InvalidDegree);
        }
        let expected = coefficient_count(degree);
        if v.len() != expected {
            return Err(FieldError::InvalidLength { got: v.len(), expected });
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(FieldError::NonFinite);
        }
        let mut a = Vec::with_capacity(degree);
        let mut b = Vec::with_capacity(degree);
        let mut pos = 0;
        for k in 1..=degree {
            a.push(v[pos..pos + k + 1].to_vec());
            pos += k + 1;
            b.push(v[pos..pos + k + 1].to_vec());
            pos += k + 1;
        }
        Ok(PlanarField { degree, a, b })
    }

    pub fn to_vector(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(coefficient_count(self.degree));
        for k in 0..self.degree {
            v.extend_from_slice(&self.a[k]);
            v.extend_from_slice(&self.b[k]);
        }
        v
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn dimension(&self) -> usize {
        coefficient_count(self.degree)
    }

    pub fn a(&self) -> &[Vec<f64>] {
        &self.a
    }

    pub fn b(&self) -> &[Vec<f64>] {
        &self.b
    }

    /// Euclidean norm of the full coefficient vector.
    pub fn norm(&self) -> f64 {
        self.to_vector().iter().map(|c| c * c).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.a.iter().chain(&self.b).all(|row| row.iter().all(|&c| c == 0.0))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |rows: &[Vec<f64>]| rows.iter().map(|r| r.iter().map(|c| c * factor).collect()).collect();
        PlanarField { degree: self.degree, a: scale(&self.a), b: scale(&self.b) }
    }

    /// The same system written in the coordinates `x -> x/a`: degree-`k`
    /// coefficients are multiplied by `a^{k-1}`, so `E(a, N)` maps onto
    /// `E(1, N)` and cycles in `D_{a/2}` onto cycles in `D_{1/2}`.
    pub fn rescale_to_unit(&self, a: f64) -> Result<Self, FieldError> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(FieldError::InvalidScale(a));
        }
        let scale = |rows: &[Vec<f64>]| -> Vec<Vec<f64>> {
            rows.iter()
                .enumerate()
                .map(|(idx, r)| {
                    let s = a.powi(idx as i32);
                    r.iter().map(|c| c * s).collect()
                })
                .collect()
        };
        Ok(PlanarField { degree: self.degree, a: scale(&self.a), b: scale(&self.b) })
    }

    /// Field of the system seen in coordinates rotated by `phi`:
    /// `(F, G)~(X) = R (F, G)(R^{-1} X)`. The linear part is unchanged.
    pub fn rotated(&self, phi: f64) -> Self {
        let (s, c) = phi.sin_cos();
        // x and y as linear forms in the new coordinates, indexed by power of X
        let x_form = [s, c];
        let y_form = [c, -s];
        let mut a = Vec::with_capacity(self.degree);
        let mut b = Vec::with_capacity(self.degree);
        for k in 1..=self.degree {
            let mut fk = vec![0.0; k + 1];
            let mut gk = vec![0.0; k + 1];
            for i in 0..=k {
                let (ca, cb) = (self.a[k - 1][i], self.b[k - 1][i]);
                if ca == 0.0 && cb == 0.0 {
                    continue;
                }
                let mono = homogeneous_power_product(&x_form, i, &y_form, k - i);
                for (j, m) in mono.iter().enumerate() {
                    fk[j] += ca * m;
                    gk[j] += cb * m;
                }
            }
            a.push(fk.iter().zip(&gk).map(|(f, g)| c * f - s * g).collect());
            b.push(fk.iter().zip(&gk).map(|(f, g)| s * f + c * g).collect());
        }
        PlanarField { degree: self.degree, a, b }
    }

    /// `F_k(x, y)` and `G_k(x, y)` for every `k`.
    pub fn homogeneous_parts(&self, x: f64, y: f64) -> (Vec<f64>, Vec<f64>) {
        let mut fs = Vec::with_capacity(self.degree);
        let mut gs = Vec::with_capacity(self.degree);
        for k in 1..=self.degree {
            let mut f = 0.0;
            let mut g = 0.0;
            let mut xp = 1.0;
            for i in 0..=k {
                let m = xp * y.powi((k - i) as i32);
                f += self.a[k - 1][i] * m;
                g += self.b[k - 1][i] * m;
                xp *= x;
            }
            fs.push(f);
            gs.push(g);
        }
        (fs, gs)
    }

    /// Right-hand side of the planar system at `(x, y)`.
    pub fn rhs(&self, x: f64, y: f64) -> (f64, f64) {
        let (fs, gs) = self.homogeneous_parts(x, y);
        (-y + fs.iter().sum::<f64>(), x + gs.iter().sum::<f64>())
    }

    /// `max_{k, theta} max(|F_k|, |G_k|)` on the unit circle divided by the
    /// coefficient norm. Cauchy-Schwarz bounds this by 1.
    pub fn trig_norm_check(&self) -> Result<f64, FieldError> {
        let norm = self.norm();
        if norm == 0.0 {
            return Err(FieldError::ZeroField);
        }
        let mut best: f64 = 0.0;
        for j in 0..TRIG_GRID {
            let theta = TAU * j as f64 / TRIG_GRID as f64;
            let (fs, gs) = self.homogeneous_parts(theta.cos(), theta.sin());
            for v in fs.iter().chain(&gs) {
                best = best.max(v.abs());
            }
        }
        Ok(best / norm)
    }

    pub fn polar(&self) -> PolarSystem {
        PolarSystem::from_field(self)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn poly_mul(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; p.len() + q.len() - 1];
    for (i, a) in p.iter().enumerate() {
        for (j, b) in q.iter().enumerate() {
            out[i + j] += a * b;
        }
    }
    out
}

fn homogeneous_power_product(p: &[f64], i: usize, q: &[f64], j: usize) -> Vec<f64> {
    let mut out = vec![1.0];
    for _ in 0..i {
        out = poly_mul(&out, p);
    }
    for _ in 0..j {
        out = poly_mul(&out, q);
    }
    out
}

/// `E(a, N)`: fields with `sum_k (a^{k-1} |F_k|)^2 + (a^{k-1} |G_k|)^2 <= N^2`,
/// where `|F_k|` is the Euclidean norm of the degree-`k` coefficient row.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipsoid {
    pub a: f64,
    pub n: f64,
    pub degree: usize,
}

impl Ellipsoid {
    pub fn new(a: f64, n: f64, degree: usize) -> Result<Self, FieldError> {
        if degree == 0 {
            return Err(FieldError::InvalidDegree);
        }
        if !(a > 0.0 && a.is_finite()) {
            return Err(FieldError::InvalidScale(a));
        }
        if !(n > 0.0 && n.is_finite()) {
            return Err(FieldError::InvalidScale(n));
        }
        Ok(Ellipsoid { a, n, degree })
    }

    /// Left-hand side of the defining inequality.
    pub fn quadratic_form(&self, field: &PlanarField) -> Result<f64, FieldError> {
        if field.degree != self.degree {
            return Err(FieldError::DegreeMismatch { field: field.degree, expected: self.degree });
        }
        let mut total = 0.0;
        for k in 0..self.degree {
            let w = self.a.powi(k as i32);
            let row: f64 = field.a[k].iter().chain(&field.b[k]).map(|c| c * c).sum();
            total += w * w * row;
        }
        Ok(total)
    }

    pub fn contains(&self, field: &PlanarField) -> Result<bool, FieldError> {
        Ok(self.quadratic_form(field)? <= self.n * self.n)
    }

    /// Uniform (Lebesgue) sample: a uniform point of the unit ball in
    /// dimension `d(d+3)` with degree-`k` coordinates scaled by `N a^{-(k-1)}`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> PlanarField {
        let mut u = uniform_real_ball(rng, coefficient_count(self.degree));
        let mut pos = 0;
        for k in 1..=self.degree {
            let s = self.n / self.a.powi(k as i32 - 1);
            for c in &mut u[pos..pos + 2 * (k + 1)] {
                *c *= s;
            }
            pos += 2 * (k + 1);
        }
        PlanarField::from_vector(self.degree, &u).expect("shape matches by construction")
    }

    /// [`Ellipsoid::sample`] from a fresh stream seeded with `seed`.
    pub fn sample_seeded(&self, seed: u64) -> PlanarField {
        self.sample(&mut crate::sampling::rng_from_seed(seed))
    }
}

/// Polar form of the return equation,
/// `dr/dtheta = r P(r, theta) / (1 + Q(r, theta))`, with
/// `P = sum_k r^{k-1} f_k(theta)`, `Q = sum_k r^{k-1} g_k(theta)` and
/// `f_k = F_k cos + G_k sin`, `g_k = -F_k sin + G_k cos` on the unit circle.
///
/// Coefficients are complex; they also serve the holomorphic extension in
/// the parameter.
#[derive(Clone, Debug, PartialEq)]
pub struct PolarSystem {
    degree: usize,
    a: Vec<Vec<C64>>,
    b: Vec<Vec<C64>>,
}

impl PolarSystem {
    pub fn from_field(field: &PlanarField) -> Self {
        let lift = |rows: &[Vec<f64>]| rows.iter().map(|r| r.iter().map(|&c| C64::new(c, 0.0)).collect()).collect();
        PolarSystem { degree: field.degree, a: lift(&field.a), b: lift(&field.b) }
    }

    /// System for a complex coefficient vector in [`PlanarField::to_vector`]
    /// order.
    pub fn from_complex_vector(degree: usize, v: &[C64]) -> Result<Self, FieldError> {
        if degree == 0 {
            return Err(FieldError::InvalidDegree);
        }
        let expected = coefficient_count(degree);
        if v.len() != expected {
            return Err(FieldError::InvalidLength { got: v.len(), expected });
        }
        let mut a = Vec::with_capacity(degree);
        let mut b = Vec::with_capacity(degree);
        let mut pos = 0;
        for k in 1..=degree {
            a.push(v[pos..pos + k + 1].to_vec());
            pos += k + 1;
            b.push(v[pos..pos + k + 1].to_vec());
            pos += k + 1;
        }
        Ok(PolarSystem { degree, a, b })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    /// `(f_k(theta), g_k(theta))` for `k = 1..=d`.
    pub fn trig_coefficients(&self, theta: f64) -> (Vec<C64>, Vec<C64>) {
        let (s, c) = theta.sin_cos();
        let mut cpow = Vec::with_capacity(self.degree + 1);
        let mut spow = Vec::with_capacity(self.degree + 1);
        let (mut cp, mut sp) = (1.0, 1.0);
        for _ in 0..=self.degree {
            cpow.push(cp);
            spow.push(sp);
            cp *= c;
            sp *= s;
        }
        let mut fs = Vec::with_capacity(self.degree);
        let mut gs = Vec::with_capacity(self.degree);
        for k in 1..=self.degree {
            let mut fk = C64::new(0.0, 0.0);
            let mut gk = C64::new(0.0, 0.0);
            for i in 0..=k {
                let m = cpow[i] * spow[k - i];
                fk += self.a[k - 1][i] * m;
                gk += self.b[k - 1][i] * m;
            }
            fs.push(fk * c + gk * s);
            gs.push(-fk * s + gk * c);
        }
        (fs, gs)
    }

    /// `(P, Q)` at complex radius `r`.
    pub fn p_q(&self, r: C64, theta: f64) -> (C64, C64) {
        let (fs, gs) = self.trig_coefficients(theta);
        (horner(&fs, r), horner(&gs, r))
    }

    /// `r P / (1 + Q)`.
    pub fn rhs(&self, r: C64, theta: f64) -> C64 {
        let (p, q) = self.p_q(r, theta);
        r * p / (1.0 + q)
    }

    /// `f_k`, `g_k` tabulated on `theta_j = 2 pi j / intervals`,
    /// `j = 0..=intervals`.
    pub fn tabulate(&self, intervals: usize) -> PolarTable {
        let nodes = intervals + 1;
        let mut f = Vec::with_capacity(nodes * self.degree);
        let mut g = Vec::with_capacity(nodes * self.degree);
        for j in 0..nodes {
            let theta = TAU * j as f64 / intervals as f64;
            let (fs, gs) = self.trig_coefficients(theta);
            f.extend(fs);
            g.extend(gs);
        }
        let f_re = f.iter().map(|c| c.re).collect();
        let g_re = g.iter().map(|c| c.re).collect();
        let real = f.iter().chain(&g).all(|c| c.im == 0.0);
        PolarTable { degree: self.degree, intervals, f, g, f_re, g_re, real }
    }
}

fn horner(coeffs: &[C64], r: C64) -> C64 {
    coeffs.iter().rev().fold(C64::new(0.0, 0.0), |acc, &c| acc * r + c)
}

/// Precomputed trigonometric coefficients of a [`PolarSystem`] on a uniform
/// grid over `[0, 2 pi]`.
#[derive(Clone, Debug)]
pub struct PolarTable {
    degree: usize,
    intervals: usize,
    f: Vec<C64>,
    g: Vec<C64>,
    f_re: Vec<f64>,
    g_re: Vec<f64>,
    real: bool,
}

impl PolarTable {
    /// True when every tabulated coefficient is real.
    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn theta(&self, node: usize) -> f64 {
        TAU * node as f64 / self.intervals as f64
    }

    #[inline]
    pub fn p_q(&self, node: usize, r: C64) -> (C64, C64) {
        let base = node * self.degree;
        let fs = &self.f[base..base + self.degree];
        let gs = &self.g[base..base + self.degree];
        (horner(fs, r), horner(gs, r))
    }

    #[inline]
    pub fn rhs(&self, node: usize, r: C64) -> C64 {
        let (p, q) = self.p_q(node, r);
        r * p / (1.0 + q)
    }

    /// [`PolarTable::rhs`] on the real parts of the coefficients.
    #[inline]
    pub fn rhs_real(&self, node: usize, r: f64) -> f64 {
        let base = node * self.degree;
        let fs = &self.f_re[base..base + self.degree];
        let gs = &self.g_re[base..base + self.degree];
        let p = fs.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        let q = gs.iter().rev().fold(0.0, |acc, &c| acc * r + c);
        r * p / (1.0 + q)
    }
}
