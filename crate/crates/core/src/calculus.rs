//! Test functions `Φ(x, μ)` with Lions derivatives, the mean-field generator
//! and the Itô formula residual on simulated trajectories.
//!
//! Derivative layout conventions:
//!
//! - `hess_x` is a row-major `d × d` matrix.
//! - `grad_mu(x, μ, y)` is `∂_μΦ(x, μ)(y)`.
//! - `grad_y_grad_mu(x, μ, y)` is row-major with `D[i·d + j] = ∂_{y_i}(∂_μΦ(x, μ)(y))_j`.
//!
//! Measure integrals are empirical averages over the atoms of `μ`.

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::measures::EmpiricalMeasure;
use crate::operators::dot;
use crate::solver::{covariance_of, Coefficients, TrajectoryRecord};
use crate::stats::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalculusError {
    #[error("index range {s}..{t} is invalid for a grid of {len} points")]
    IndexOutOfRange { s: usize, t: usize, len: usize },
    #[error("non-finite coefficient at atom {atom}")]
    CoefficientBlowup { atom: usize },
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
}

pub type Result<T> = std::result::Result<T, CalculusError>;

/// Known bounds of a test function; `None` means unknown or unbounded.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct FunctionBounds {
    pub sup: Option<f64>,
    pub lipschitz_x: Option<f64>,
    /// All derivatives are uniformly bounded.
    pub bounded_derivatives: bool,
    /// All derivatives are Lipschitz continuous.
    pub lipschitz_derivatives: bool,
}

pub trait TestFunction: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], mu: &EmpiricalMeasure) -> f64;

    fn grad_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]);

    fn hess_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]);

    fn grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]);

    fn grad_y_grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]);

    fn depends_on_measure(&self) -> bool {
        true
    }

    fn bounds(&self) -> FunctionBounds {
        FunctionBounds::default()
    }

    /// `(1/N) Σ_j ⟨∂_μΦ(x, μ)(X_j), v_j⟩` for a per-atom field `v` (`N × d`).
    fn measure_pairing(&self, x: &[f64], mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        let d = mu.dim();
        let mut g = vec![0.0; d];
        let terms: Vec<f64> = mu
            .iter()
            .zip(v.chunks_exact(d))
            .map(|(y, vj)| {
                self.grad_mu(x, mu, y, &mut g);
                dot(&g, vj)
            })
            .collect();
        pairwise_sum(&terms) / mu.len() as f64
    }

    /// `(1/N) Σ_j tr(a_j ∂_y∂_μΦ(x, μ)(X_j))` for symmetric per-atom matrices `a` (`N × d × d`).
    fn measure_trace(&self, x: &[f64], mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        let d = mu.dim();
        let mut h = vec![0.0; d * d];
        let terms: Vec<f64> = mu
            .iter()
            .zip(a.chunks_exact(d * d))
            .map(|(y, aj)| {
                self.grad_y_grad_mu(x, mu, y, &mut h);
                trace_product(aj, &h, d)
            })
            .collect();
        pairwise_sum(&terms) / mu.len() as f64
    }

    /// `(1/N) Σ_i measure_pairing(X_i, μ, v)`. Quadratic in `N` unless overridden.
    fn ensemble_pairing(&self, mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        let terms: Vec<f64> = mu.iter().map(|x| self.measure_pairing(x, mu, v)).collect();
        pairwise_sum(&terms) / mu.len() as f64
    }

    /// `(1/N) Σ_i measure_trace(X_i, μ, a)`. Quadratic in `N` unless overridden.
    fn ensemble_trace(&self, mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        let terms: Vec<f64> = mu.iter().map(|x| self.measure_trace(x, mu, a)).collect();
        pairwise_sum(&terms) / mu.len() as f64
    }
}

/// `tr(A H) = Σ_{ij} A_ij H_ji`.
pub(crate) fn trace_product(a: &[f64], h: &[f64], d: usize) -> f64 {
    let mut s = 0.0;
    for i in 0..d {
        for j in 0..d {
            s += a[i * d + j] * h[j * d + i];
        }
    }
    s
}

fn sq(x: &[f64]) -> f64 {
    x.iter().map(|c| c * c).sum()
}

fn field_mean(v: &[f64], d: usize) -> Vec<f64> {
    let n = v.len() / d;
    let mut m = vec![0.0; d];
    for row in v.chunks_exact(d) {
        for (mc, c) in m.iter_mut().zip(row) {
            *mc += c;
        }
    }
    m.iter_mut().for_each(|c| *c /= n as f64);
    m
}

/// `(1/N) Σ_j ⟨X_j, v_j⟩`.
fn atom_pairing(mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
    let terms: Vec<f64> = mu.iter().zip(v.chunks_exact(mu.dim())).map(|(y, vj)| dot(y, vj)).collect();
    pairwise_sum(&terms) / mu.len() as f64
}

/// `(1/N) Σ_j tr(a_j)`.
fn mean_trace(a: &[f64], d: usize) -> f64 {
    let terms: Vec<f64> = a.chunks_exact(d * d).map(|m| (0..d).map(|i| m[i * d + i]).sum()).collect();
    pairwise_sum(&terms) / (a.len() / (d * d)) as f64
}

fn identity_into(out: &mut [f64], d: usize, scale: f64) {
    out.fill(0.0);
    for i in 0..d {
        out[i * d + i] = scale;
    }
}

/// `Φ(x, μ) = |x|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SquaredNorm {
    pub dim: usize,
}

impl TestFunction for SquaredNorm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], _mu: &EmpiricalMeasure) -> f64 {
        sq(x)
    }

    fn grad_x(&self, x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(x) {
            *o = 2.0 * c;
        }
    }

    fn hess_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        identity_into(out, self.dim, 2.0);
    }

    fn grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_y_grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn depends_on_measure(&self) -> bool {
        false
    }

    fn measure_pairing(&self, _x: &[f64], _mu: &EmpiricalMeasure, _v: &[f64]) -> f64 {
        0.0
    }

    fn measure_trace(&self, _x: &[f64], _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn ensemble_pairing(&self, _mu: &EmpiricalMeasure, _v: &[f64]) -> f64 {
        0.0
    }

    fn ensemble_trace(&self, _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn bounds(&self) -> FunctionBounds {
        FunctionBounds {
            lipschitz_derivatives: true,
            ..Default::default()
        }
    }
}

/// `Φ(x, μ) = ∫|y|² μ(dy)`, with `∂_μΦ(μ)(y) = 2y`.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondMomentFunctional {
    pub dim: usize,
}

impl TestFunction for SecondMomentFunctional {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64], mu: &EmpiricalMeasure) -> f64 {
        mu.second_moment_norm()
    }

    fn grad_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hess_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]) {
        for (o, c) in out.iter_mut().zip(y) {
            *o = 2.0 * c;
        }
    }

    fn grad_y_grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        identity_into(out, self.dim, 2.0);
    }

    fn measure_pairing(&self, _x: &[f64], mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        2.0 * atom_pairing(mu, v)
    }

    fn measure_trace(&self, _x: &[f64], _mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        2.0 * mean_trace(a, self.dim)
    }

    fn ensemble_pairing(&self, mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        2.0 * atom_pairing(mu, v)
    }

    fn ensemble_trace(&self, _mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        2.0 * mean_trace(a, self.dim)
    }

    fn bounds(&self) -> FunctionBounds {
        FunctionBounds {
            lipschitz_x: Some(0.0),
            lipschitz_derivatives: true,
            ..Default::default()
        }
    }
}

/// `Φ(x, μ) = ⟨c, x⟩ + ⟨e, mean(μ)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub c: Vec<f64>,
    pub e: Vec<f64>,
}

impl TestFunction for Linear {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64], mu: &EmpiricalMeasure) -> f64 {
        dot(&self.c, x) + dot(&self.e, mu.mean())
    }

    fn grad_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.copy_from_slice(&self.c);
    }

    fn hess_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.e);
    }

    fn grad_y_grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn depends_on_measure(&self) -> bool {
        self.e.iter().any(|c| *c != 0.0)
    }

    fn measure_pairing(&self, _x: &[f64], _mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        dot(&self.e, &field_mean(v, self.dim()))
    }

    fn measure_trace(&self, _x: &[f64], _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn ensemble_pairing(&self, _mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        dot(&self.e, &field_mean(v, self.dim()))
    }

    fn ensemble_trace(&self, _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn bounds(&self) -> FunctionBounds {
        FunctionBounds {
            lipschitz_x: Some(self.c.iter().map(|c| c * c).sum::<f64>().sqrt()),
            bounded_derivatives: true,
            lipschitz_derivatives: true,
            ..Default::default()
        }
    }
}

/// `Φ(x, μ) = ⟨c, x⟩ · ⟨e, mean(μ)⟩`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProduct {
    pub c: Vec<f64>,
    pub e: Vec<f64>,
}

impl TestFunction for LinearProduct {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn value(&self, x: &[f64], mu: &EmpiricalMeasure) -> f64 {
        dot(&self.c, x) * dot(&self.e, mu.mean())
    }

    fn grad_x(&self, _x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        let s = dot(&self.e, mu.mean());
        for (o, c) in out.iter_mut().zip(&self.c) {
            *o = c * s;
        }
    }

    fn hess_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_mu(&self, x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        let s = dot(&self.c, x);
        for (o, e) in out.iter_mut().zip(&self.e) {
            *o = e * s;
        }
    }

    fn grad_y_grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn measure_pairing(&self, x: &[f64], _mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        dot(&self.c, x) * dot(&self.e, &field_mean(v, self.dim()))
    }

    fn measure_trace(&self, _x: &[f64], _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn ensemble_pairing(&self, mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        dot(&self.c, mu.mean()) * dot(&self.e, &field_mean(v, self.dim()))
    }

    fn ensemble_trace(&self, _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constant {
    pub dim: usize,
    pub value: f64,
}

impl TestFunction for Constant {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, _x: &[f64], _mu: &EmpiricalMeasure) -> f64 {
        self.value
    }

    fn grad_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn hess_x(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn grad_y_grad_mu(&self, _x: &[f64], _mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn depends_on_measure(&self) -> bool {
        false
    }

    fn measure_pairing(&self, _x: &[f64], _mu: &EmpiricalMeasure, _v: &[f64]) -> f64 {
        0.0
    }

    fn measure_trace(&self, _x: &[f64], _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn ensemble_pairing(&self, _mu: &EmpiricalMeasure, _v: &[f64]) -> f64 {
        0.0
    }

    fn ensemble_trace(&self, _mu: &EmpiricalMeasure, _a: &[f64]) -> f64 {
        0.0
    }

    fn bounds(&self) -> FunctionBounds {
        FunctionBounds {
            sup: Some(self.value.abs()),
            lipschitz_x: Some(0.0),
            bounded_derivatives: true,
            lipschitz_derivatives: true,
        }
    }
}

/// `Φ(x, μ) = tanh(|x|²) / (1 + ‖μ‖₂²)`, bounded with bounded derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundedComposition {
    pub dim: usize,
}

impl BoundedComposition {
    fn q(mu: &EmpiricalMeasure) -> f64 {
        1.0 / (1.0 + mu.second_moment_norm())
    }

    /// `-2 / (1 + ‖μ‖₂²)²`, the scalar in `∂_μ(1/(1+‖μ‖₂²))(y) = -2y/(1+‖μ‖₂²)²`.
    fn dq(mu: &EmpiricalMeasure) -> f64 {
        let q = Self::q(mu);
        -2.0 * q * q
    }

    fn mean_g(mu: &EmpiricalMeasure) -> f64 {
        let terms: Vec<f64> = mu.iter().map(|x| sq(x).tanh()).collect();
        pairwise_sum(&terms) / mu.len() as f64
    }
}

impl TestFunction for BoundedComposition {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], mu: &EmpiricalMeasure) -> f64 {
        sq(x).tanh() * Self::q(mu)
    }

    fn grad_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        let t = sq(x).tanh();
        let s = Self::q(mu) * (1.0 - t * t) * 2.0;
        for (o, c) in out.iter_mut().zip(x) {
            *o = s * c;
        }
    }

    fn hess_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        let d = self.dim;
        let t = sq(x).tanh();
        let sech2 = 1.0 - t * t;
        let q = Self::q(mu);
        for i in 0..d {
            for j in 0..d {
                let diag = if i == j { 2.0 * sech2 } else { 0.0 };
                out[i * d + j] = q * (diag - 8.0 * t * sech2 * x[i] * x[j]);
            }
        }
    }

    fn grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]) {
        let s = sq(x).tanh() * Self::dq(mu);
        for (o, c) in out.iter_mut().zip(y) {
            *o = s * c;
        }
    }

    fn grad_y_grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, _y: &[f64], out: &mut [f64]) {
        identity_into(out, self.dim, sq(x).tanh() * Self::dq(mu));
    }

    fn measure_pairing(&self, x: &[f64], mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        sq(x).tanh() * Self::dq(mu) * atom_pairing(mu, v)
    }

    fn measure_trace(&self, x: &[f64], mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        sq(x).tanh() * Self::dq(mu) * mean_trace(a, self.dim)
    }

    fn ensemble_pairing(&self, mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        Self::mean_g(mu) * Self::dq(mu) * atom_pairing(mu, v)
    }

    fn ensemble_trace(&self, mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        Self::mean_g(mu) * Self::dq(mu) * mean_trace(a, self.dim)
    }

    fn bounds(&self) -> FunctionBounds {
        FunctionBounds {
            sup: Some(1.0),
            lipschitz_x: None,
            bounded_derivatives: true,
            lipschitz_derivatives: true,
        }
    }
}

/// `Σ_k w_k Φ_k`.
pub struct LinearCombination {
    dim: usize,
    parts: Vec<(f64, Box<dyn TestFunction>)>,
}

impl LinearCombination {
    pub fn new(dim: usize) -> Self {
        Self { dim, parts: Vec::new() }
    }

    pub fn with(mut self, weight: f64, f: impl TestFunction + 'static) -> Self {
        assert_eq!(f.dim(), self.dim, "component dimension");
        self.parts.push((weight, Box::new(f)));
        self
    }

    fn weighted<F: Fn(&dyn TestFunction, &mut [f64])>(&self, out: &mut [f64], eval: F) {
        out.fill(0.0);
        let mut buf = vec![0.0; out.len()];
        for (w, f) in &self.parts {
            eval(f.as_ref(), &mut buf);
            for (o, b) in out.iter_mut().zip(&buf) {
                *o += w * b;
            }
        }
    }

    fn sum<F: Fn(&dyn TestFunction) -> f64>(&self, eval: F) -> f64 {
        self.parts.iter().map(|(w, f)| w * eval(f.as_ref())).sum()
    }
}

impl TestFunction for LinearCombination {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64], mu: &EmpiricalMeasure) -> f64 {
        self.sum(|f| f.value(x, mu))
    }

    fn grad_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        self.weighted(out, |f, b| f.grad_x(x, mu, b));
    }

    fn hess_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        self.weighted(out, |f, b| f.hess_x(x, mu, b));
    }

    fn grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]) {
        self.weighted(out, |f, b| f.grad_mu(x, mu, y, b));
    }

    fn grad_y_grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]) {
        self.weighted(out, |f, b| f.grad_y_grad_mu(x, mu, y, b));
    }

    fn depends_on_measure(&self) -> bool {
        self.parts.iter().any(|(w, f)| *w != 0.0 && f.depends_on_measure())
    }

    fn measure_pairing(&self, x: &[f64], mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        self.sum(|f| f.measure_pairing(x, mu, v))
    }

    fn measure_trace(&self, x: &[f64], mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        self.sum(|f| f.measure_trace(x, mu, a))
    }

    fn ensemble_pairing(&self, mu: &EmpiricalMeasure, v: &[f64]) -> f64 {
        self.sum(|f| f.ensemble_pairing(mu, v))
    }

    fn ensemble_trace(&self, mu: &EmpiricalMeasure, a: &[f64]) -> f64 {
        self.sum(|f| f.ensemble_trace(mu, a))
    }

    fn bounds(&self) -> FunctionBounds {
        let all = self.parts.iter().map(|(_, f)| f.bounds());
        let sup = self
            .parts
            .iter()
            .map(|(w, f)| f.bounds().sup.map(|s| w.abs() * s))
            .sum::<Option<f64>>();
        FunctionBounds {
            sup,
            lipschitz_x: None,
            bounded_derivatives: all.clone().all(|b| b.bounded_derivatives),
            lipschitz_derivatives: all.clone().all(|b| b.lipschitz_derivatives),
        }
    }
}

/// `Φ(x, μ) = |x|² + λ ∫|y|² μ(dy)`.
pub fn mixed(dim: usize, lambda: f64) -> LinearCombination {
    LinearCombination::new(dim)
        .with(1.0, SquaredNorm { dim })
        .with(lambda, SecondMomentFunctional { dim })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LiftReport {
    pub max_abs_error: f64,
    pub particles: usize,
    pub dim: usize,
    pub step: f64,
}

/// Compares `∂_μf(μ)(X_i)` with `N ×` the central difference of the empirical
/// projection `x^i ↦ f((1/N) Σ δ_{x^l})`.
///
/// `f` is read through its measure slot only; the state argument is the origin.
pub fn lift_gradient_check(f: &dyn TestFunction, mu: &EmpiricalMeasure, step: f64) -> LiftReport {
    let d = mu.dim();
    let n = mu.len();
    let origin = vec![0.0; d];
    let errors: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|i| {
            let xi = mu.point(i).to_vec();
            let mut analytic = vec![0.0; d];
            f.grad_mu(&origin, mu, &xi, &mut analytic);
            let mut worst = 0.0_f64;
            let mut shifted = xi.clone();
            for c in 0..d {
                shifted[c] = xi[c] + step;
                let up = f.value(&origin, &mu.with_atom(i, &shifted));
                shifted[c] = xi[c] - step;
                let down = f.value(&origin, &mu.with_atom(i, &shifted));
                shifted[c] = xi[c];
                let fd = n as f64 * (up - down) / (2.0 * step);
                worst = worst.max((fd - analytic[c]).abs());
            }
            worst
        })
        .collect();
    LiftReport {
        max_abs_error: errors.into_iter().fold(0.0, f64::max),
        particles: n,
        dim: d,
        step,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivativeReport {
    /// Largest gradient mismatch relative to `max(1, |∂_xΦ|)`.
    pub grad_rel_error: f64,
    /// Largest Hessian mismatch relative to `max(1, |∂²_xΦ|)`.
    pub hess_rel_error: f64,
    pub hess_asymmetry: f64,
}

/// Central finite-difference check of `grad_x` and `hess_x` at one point.
pub fn x_derivative_check(f: &dyn TestFunction, x: &[f64], mu: &EmpiricalMeasure, step: f64) -> DerivativeReport {
    let d = x.len();
    let mut g = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    f.grad_x(x, mu, &mut g);
    f.hess_x(x, mu, &mut hess);
    let g_scale = crate::operators::norm(&g).max(1.0);
    let h_scale = hess.iter().map(|c| c.abs()).fold(1.0, f64::max);
    let mut grad_err = 0.0_f64;
    let mut hess_err = 0.0_f64;
    let mut y = x.to_vec();
    let (mut gp, mut gm) = (vec![0.0; d], vec![0.0; d]);
    for c in 0..d {
        y[c] = x[c] + step;
        let up = f.value(&y, mu);
        f.grad_x(&y, mu, &mut gp);
        y[c] = x[c] - step;
        let down = f.value(&y, mu);
        f.grad_x(&y, mu, &mut gm);
        y[c] = x[c];
        grad_err = grad_err.max(((up - down) / (2.0 * step) - g[c]).abs() / g_scale);
        for r in 0..d {
            let fd = (gp[r] - gm[r]) / (2.0 * step);
            hess_err = hess_err.max((fd - hess[r * d + c]).abs() / h_scale);
        }
    }
    let mut asym = 0.0_f64;
    for i in 0..d {
        for j in 0..d {
            asym = asym.max((hess[i * d + j] - hess[j * d + i]).abs());
        }
    }
    DerivativeReport {
        grad_rel_error: grad_err,
        hess_rel_error: hess_err,
        hess_asymmetry: asym,
    }
}

/// Drifts and diffusion covariances of every atom of one measure.
pub struct AtomCoefficients {
    pub drifts: Vec<f64>,
    pub covariances: Vec<f64>,
}

impl AtomCoefficients {
    pub fn evaluate(coeffs: &dyn Coefficients, mu: &EmpiricalMeasure) -> Result<Self> {
        let (d, m) = (coeffs.dim(), coeffs.noise_dim());
        if mu.dim() != d {
            return Err(CalculusError::DimensionMismatch {
                what: format!("measure has dimension {}, coefficients {}", mu.dim(), d),
            });
        }
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..mu.len())
            .into_par_iter()
            .map(|j| {
                let y = mu.point(j);
                let mut b = vec![0.0; d];
                let mut s = vec![0.0; d * m];
                coeffs.drift(y, mu, &mut b);
                coeffs.diffusion(y, mu, &mut s);
                (b, covariance_of(&s, d, m))
            })
            .collect();
        let mut drifts = Vec::with_capacity(mu.len() * d);
        let mut covariances = Vec::with_capacity(mu.len() * d * d);
        for (j, (b, a)) in rows.into_iter().enumerate() {
            if b.iter().chain(&a).any(|c| !c.is_finite()) {
                return Err(CalculusError::CoefficientBlowup { atom: j });
            }
            drifts.extend(b);
            covariances.extend(a);
        }
        Ok(Self { drifts, covariances })
    }
}

/// `L_μΦ(x, μ)` with precomputed atom coefficients.
pub fn generator_with(
    phi: &dyn TestFunction,
    x: &[f64],
    mu: &EmpiricalMeasure,
    coeffs: &dyn Coefficients,
    atoms: &AtomCoefficients,
) -> Result<f64> {
    let (d, m) = (coeffs.dim(), coeffs.noise_dim());
    let mut b = vec![0.0; d];
    let mut s = vec![0.0; d * m];
    coeffs.drift(x, mu, &mut b);
    coeffs.diffusion(x, mu, &mut s);
    if b.iter().chain(&s).any(|c| !c.is_finite()) {
        return Err(CalculusError::CoefficientBlowup { atom: usize::MAX });
    }
    let a = covariance_of(&s, d, m);
    let mut g = vec![0.0; d];
    let mut hess = vec![0.0; d * d];
    phi.grad_x(x, mu, &mut g);
    phi.hess_x(x, mu, &mut hess);
    let mut value = dot(&b, &g) + 0.5 * trace_product(&a, &hess, d);
    if phi.depends_on_measure() {
        value += phi.measure_pairing(x, mu, &atoms.drifts) + 0.5 * phi.measure_trace(x, mu, &atoms.covariances);
    }
    Ok(value)
}

/// `L_μΦ(x, μ) = b·∂_xΦ + ½ tr(σσ*∂²_xΦ) + ∫ b(y, μ)·∂_μΦ(x, μ)(y) μ(dy)
/// + ½ ∫ tr((σσ*)(y, μ) ∂_y∂_μΦ(x, μ)(y)) μ(dy)`.
pub fn generator(phi: &dyn TestFunction, x: &[f64], mu: &EmpiricalMeasure, coeffs: &dyn Coefficients) -> Result<f64> {
    if !phi.depends_on_measure() {
        let empty = AtomCoefficients {
            drifts: Vec::new(),
            covariances: Vec::new(),
        };
        return generator_with(phi, x, mu, coeffs, &empty);
    }
    let atoms = AtomCoefficients::evaluate(coeffs, mu)?;
    generator_with(phi, x, mu, coeffs, &atoms)
}

/// Per-atom values `L_μΦ(X_i, μ)` and `Φ(X_i, μ)`.
pub fn atom_generator_values(
    phi: &dyn TestFunction,
    mu: &EmpiricalMeasure,
    coeffs: &dyn Coefficients,
) -> Result<Vec<(f64, f64)>> {
    let atoms = AtomCoefficients::evaluate(coeffs, mu)?;
    (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let x = mu.point(i);
            generator_with(phi, x, mu, coeffs, &atoms).map(|g| (g, phi.value(x, mu)))
        })
        .collect()
}

/// `∫ L_μΦ(x, μ) μ(dx)`, linear in `N` for the library functions.
pub fn ensemble_generator(phi: &dyn TestFunction, mu: &EmpiricalMeasure, coeffs: &dyn Coefficients) -> Result<f64> {
    let atoms = AtomCoefficients::evaluate(coeffs, mu)?;
    let d = mu.dim();
    let local: Vec<f64> = (0..mu.len())
        .into_par_iter()
        .map(|i| {
            let x = mu.point(i);
            let mut g = vec![0.0; d];
            let mut hess = vec![0.0; d * d];
            phi.grad_x(x, mu, &mut g);
            phi.hess_x(x, mu, &mut hess);
            dot(&atoms.drifts[i * d..(i + 1) * d], &g)
                + 0.5 * trace_product(&atoms.covariances[i * d * d..(i + 1) * d * d], &hess, d)
        })
        .collect();
    let mut value = pairwise_sum(&local) / mu.len() as f64;
    if phi.depends_on_measure() {
        value += phi.ensemble_pairing(mu, &atoms.drifts) + 0.5 * phi.ensemble_trace(mu, &atoms.covariances);
    }
    Ok(value)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ItoReport {
    pub s_index: usize,
    pub t_index: usize,
    pub lhs: f64,
    /// Right-hand terms 1 to 7, in order.
    pub terms: [f64; 7],
    pub residual: f64,
}

impl ItoReport {
    pub fn rhs(&self) -> f64 {
        pairwise_sum(&self.terms)
    }
}

/// Ensemble average of `Φ(X_i, μ)` over the atoms of `μ`.
fn ensemble_value(phi: &dyn TestFunction, mu: &EmpiricalMeasure) -> f64 {
    let values: Vec<f64> = mu.iter().map(|x| phi.value(x, mu)).collect();
    pairwise_sum(&values) / mu.len() as f64
}

/// Discrete Itô formula on `[t_s, t_t]`.
///
/// Every right-hand term is evaluated at the left point `(X_k, μ_k)` of each
/// step and averaged over particles:
///
/// 1. `-Σ ⟨∂_xΦ, ΔK_i⟩`
/// 2. `Σ b·∂_xΦ h`
/// 3. `Σ ⟨∂_xΦ, σ ΔW_i⟩` (martingale part)
/// 4. `½ Σ tr(σσ*∂²_xΦ) h`
/// 5. `Σ (1/N) Σ_j b(X_j)·∂_μΦ(X_i)(X_j) h`
/// 6. `½ Σ (1/N) Σ_j tr((σσ*)(X_j) ∂_y∂_μΦ(X_i)(X_j)) h`
/// 7. `-Σ (1/N) Σ_j ⟨∂_μΦ(X_i)(X_j), ΔK_j⟩`
pub fn ito_residual(
    traj: &TrajectoryRecord,
    phi: &dyn TestFunction,
    coeffs: &dyn Coefficients,
    s_index: usize,
    t_index: usize,
) -> Result<ItoReport> {
    let len = traj.grid().len();
    if s_index >= t_index || t_index >= len {
        return Err(CalculusError::IndexOutOfRange { s: s_index, t: t_index, len });
    }
    let (d, m) = (traj.dim(), traj.noise_dim());
    if coeffs.dim() != d || coeffs.noise_dim() != m || phi.dim() != d {
        return Err(CalculusError::DimensionMismatch {
            what: "trajectory, coefficients and test function must agree".into(),
        });
    }
    let h = traj.h();
    let sqrt_h = h.sqrt();
    let n = traj.particles();
    let flow = traj.flow();
    let lhs = ensemble_value(phi, flow.at(t_index)) - ensemble_value(phi, flow.at(s_index));

    let per_step: Vec<[f64; 7]> = (s_index..t_index)
        .into_par_iter()
        .map(|k| -> Result<[f64; 7]> {
            let mu = flow.at(k);
            let dk = traj.increment(k);
            let zeta = traj.noise().step_block(k);
            let atoms = AtomCoefficients::evaluate(coeffs, mu)?;
            let mut local = [Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n)];
            let mut g = vec![0.0; d];
            let mut hess = vec![0.0; d * d];
            let mut s = vec![0.0; d * m];
            let mut dw = vec![0.0; d];
            for i in 0..n {
                let x = mu.point(i);
                phi.grad_x(x, mu, &mut g);
                phi.hess_x(x, mu, &mut hess);
                coeffs.diffusion(x, mu, &mut s);
                for (r, o) in dw.iter_mut().enumerate() {
                    *o = (0..m).map(|c| s[r * m + c] * zeta[i * m + c]).sum::<f64>() * sqrt_h;
                }
                local[0].push(-dot(&g, &dk[i * d..(i + 1) * d]));
                local[1].push(dot(&atoms.drifts[i * d..(i + 1) * d], &g) * h);
                local[2].push(dot(&g, &dw));
                local[3].push(0.5 * trace_product(&atoms.covariances[i * d * d..(i + 1) * d * d], &hess, d) * h);
            }
            let mut out = [0.0; 7];
            for (o, l) in out.iter_mut().zip(&local) {
                *o = pairwise_sum(l) / n as f64;
            }
            if phi.depends_on_measure() {
                out[4] = phi.ensemble_pairing(mu, &atoms.drifts) * h;
                out[5] = 0.5 * phi.ensemble_trace(mu, &atoms.covariances) * h;
                out[6] = -phi.ensemble_pairing(mu, dk);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut terms = [0.0; 7];
    for (j, t) in terms.iter_mut().enumerate() {
        let column: Vec<f64> = per_step.iter().map(|row| row[j]).collect();
        *t = pairwise_sum(&column);
    }
    let residual = lhs - pairwise_sum(&terms);
    Ok(ItoReport {
        s_index,
        t_index,
        lhs,
        terms,
        residual,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KConditionReport {
    /// One value per step.
    pub increments: Vec<f64>,
    pub min_increment: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Discrete form of `⟨∂_xF(X_t, L), dK_t⟩ + E⟨∂_μF(x, L)(X_t), dK_t⟩|_{x=X_t} ≥ 0`.
///
/// `ΔK_k` lies in `hA(X_{k+1})`, so the pairing uses the post-step state and law.
pub fn k_condition_monitor(traj: &TrajectoryRecord, f: &dyn TestFunction, tolerance: Option<f64>) -> KConditionReport {
    let d = traj.dim();
    let n = traj.particles();
    let flow = traj.flow();
    let increments: Vec<f64> = (0..traj.steps())
        .into_par_iter()
        .map(|k| {
            let mu = flow.at(k + 1);
            let dk = traj.increment(k);
            let mut g = vec![0.0; d];
            let local: Vec<f64> = (0..n)
                .map(|i| {
                    f.grad_x(mu.point(i), mu, &mut g);
                    dot(&g, &dk[i * d..(i + 1) * d])
                })
                .collect();
            let mut value = pairwise_sum(&local) / n as f64;
            if f.depends_on_measure() {
                value += f.ensemble_pairing(mu, dk);
            }
            value
        })
        .collect();
    let tolerance = tolerance.unwrap_or_else(|| {
        let sup = (0..traj.grid().len())
            .flat_map(|k| traj.positions(k).iter().chain(traj.constraint(k)))
            .fold(0.0_f64, |a, c| a.max(c.abs()));
        1e-8 * (1.0 + sup)
    });
    let min_increment = increments.iter().copied().fold(f64::INFINITY, f64::min);
    let min_increment = if min_increment.is_finite() { min_increment } else { 0.0 };
    KConditionReport {
        pass: min_increment >= -tolerance,
        increments,
        min_increment,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::auxiliary_rng;
    use crate::operators::{CatalogOperator, OperatorKind};
    use crate::solver::{simulate, ConstantDrift, InitialCondition, MeanFieldLinear, SchemeConfig};
    use rand::Rng;

    fn random_measure(n: usize, d: usize, seed: u64) -> EmpiricalMeasure {
        let mut rng = auxiliary_rng(seed, 1);
        EmpiricalMeasure::new((0..n * d).map(|_| rng.random_range(-1.5..1.5)).collect(), d).unwrap()
    }

    fn library(d: usize) -> Vec<Box<dyn TestFunction>> {
        let c: Vec<f64> = (0..d).map(|i| 1.0 + i as f64).collect();
        let e: Vec<f64> = (0..d).map(|i| 0.5 - i as f64).collect();
        vec![
            Box::new(SquaredNorm { dim: d }),
            Box::new(SecondMomentFunctional { dim: d }),
            Box::new(mixed(d, 0.7)),
            Box::new(Linear { c: c.clone(), e: e.clone() }),
            Box::new(LinearProduct { c, e }),
            Box::new(Constant { dim: d, value: 2.5 }),
            Box::new(BoundedComposition { dim: d }),
        ]
    }

    #[test]
    fn x_derivatives_match_finite_differences() {
        for d in 1..=3 {
            let mu = random_measure(6, d, d as u64);
            let x: Vec<f64> = (0..d).map(|i| 0.3 - 0.4 * i as f64).collect();
            for f in library(d) {
                let r = x_derivative_check(f.as_ref(), &x, &mu, 1e-4);
                assert!(r.grad_rel_error < 1e-5 && r.hess_rel_error < 1e-5, "{r:?}");
                assert!(r.hess_asymmetry < 1e-10);
            }
        }
    }

    #[test]
    fn lift_examples() {
        let mu = random_measure(8, 2, 11);
        let r = lift_gradient_check(&SecondMomentFunctional { dim: 2 }, &mu, 1e-4);
        assert!(r.max_abs_error <= 1e-6, "{r:?}");
        let mean_first = Linear {
            c: vec![0.0, 0.0],
            e: vec![1.0, 0.0],
        };
        assert!(lift_gradient_check(&mean_first, &mu, 1e-4).max_abs_error <= 1e-8);
        let constant = Constant { dim: 2, value: 3.0 };
        assert!(lift_gradient_check(&constant, &mu, 1e-4).max_abs_error <= 1e-12);
        assert!(lift_gradient_check(&BoundedComposition { dim: 2 }, &mu, 1e-4).max_abs_error <= 1e-5);
    }

    #[test]
    fn factorized_ensemble_sums_match_the_double_sum() {
        struct Naive<'a>(&'a dyn TestFunction);
        impl TestFunction for Naive<'_> {
            fn dim(&self) -> usize {
                self.0.dim()
            }
            fn value(&self, x: &[f64], mu: &EmpiricalMeasure) -> f64 {
                self.0.value(x, mu)
            }
            fn grad_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
                self.0.grad_x(x, mu, out)
            }
            fn hess_x(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
                self.0.hess_x(x, mu, out)
            }
            fn grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]) {
                self.0.grad_mu(x, mu, y, out)
            }
            fn grad_y_grad_mu(&self, x: &[f64], mu: &EmpiricalMeasure, y: &[f64], out: &mut [f64]) {
                self.0.grad_y_grad_mu(x, mu, y, out)
            }
        }
        let d = 2;
        let mu = random_measure(7, d, 5);
        let v: Vec<f64> = (0..7 * d).map(|i| (i as f64 * 0.37).sin()).collect();
        let a: Vec<f64> = (0..7)
            .flat_map(|j| {
                let s = 1.0 + j as f64 * 0.1;
                vec![s, 0.2, 0.2, 2.0 * s]
            })
            .collect();
        for f in library(d) {
            let naive = Naive(f.as_ref());
            assert!((f.ensemble_pairing(&mu, &v) - naive.ensemble_pairing(&mu, &v)).abs() < 1e-12);
            assert!((f.ensemble_trace(&mu, &a) - naive.ensemble_trace(&mu, &a)).abs() < 1e-12);
            let x = [0.4, -0.1];
            assert!((f.measure_pairing(&x, &mu, &v) - naive.measure_pairing(&x, &mu, &v)).abs() < 1e-12);
            assert!((f.measure_trace(&x, &mu, &a) - naive.measure_trace(&x, &mu, &a)).abs() < 1e-12);
        }
    }

    #[test]
    fn generator_examples() {
        let mu = random_measure(5, 1, 2);
        let decay = MeanFieldLinear::new(1, 1.0, 0.0, 0.0);
        let g = generator(&SquaredNorm { dim: 1 }, &[1.5], &mu, &decay).unwrap();
        assert!((g + 2.0 * 2.25).abs() < 1e-14);

        let d = 3;
        let mu = random_measure(9, d, 3);
        let unit_noise = MeanFieldLinear::new(d, 0.0, 0.0, 1.0);
        let g = generator(&SecondMomentFunctional { dim: d }, &[0.1, 0.2, 0.3], &mu, &unit_noise).unwrap();
        assert!((g - d as f64).abs() < 1e-14);

        let constant = Constant { dim: d, value: 4.0 };
        assert_eq!(generator(&constant, &[0.1, 0.2, 0.3], &mu, &MeanFieldLinear::new(d, 1.0, 0.5, 0.3)).unwrap(), 0.0);
    }

    #[test]
    fn generator_is_linear() {
        let d = 2;
        let mu = random_measure(10, d, 4);
        let coeffs = MeanFieldLinear::new(d, 1.0, 0.5, 0.3);
        let x = [0.3, -0.7];
        let phi = BoundedComposition { dim: d };
        let psi = LinearProduct {
            c: vec![1.0, 2.0],
            e: vec![-1.0, 0.5],
        };
        let combo = LinearCombination::new(d).with(2.0, phi.clone()).with(-3.0, psi.clone());
        let lhs = generator(&combo, &x, &mu, &coeffs).unwrap();
        let rhs = 2.0 * generator(&phi, &x, &mu, &coeffs).unwrap() - 3.0 * generator(&psi, &x, &mu, &coeffs).unwrap();
        assert!((lhs - rhs).abs() < 1e-10);

        let avg: f64 = (0..mu.len()).map(|i| generator(&combo, mu.point(i), &mu, &coeffs).unwrap()).sum::<f64>() / 10.0;
        assert!((ensemble_generator(&combo, &mu, &coeffs).unwrap() - avg).abs() < 1e-12);
    }

    fn zero_op(dim: usize) -> CatalogOperator {
        CatalogOperator::new(OperatorKind::Zero { dim }).unwrap()
    }

    #[test]
    fn ito_constant_function_has_zero_terms() {
        let coeffs = MeanFieldLinear::new(1, 1.0, 0.5, 0.3);
        let config = SchemeConfig::new(0.05, 20, 1.0, 1, InitialCondition::Point { point: vec![1.0] });
        let traj = simulate(&zero_op(1), &coeffs, &config).unwrap();
        let r = ito_residual(&traj, &Constant { dim: 1, value: 3.0 }, &coeffs, 0, 20).unwrap();
        assert_eq!(r.lhs, 0.0);
        assert_eq!(r.terms, [0.0; 7]);
        assert_eq!(r.residual, 0.0);
        assert!(matches!(
            ito_residual(&traj, &Constant { dim: 1, value: 3.0 }, &coeffs, 5, 5),
            Err(CalculusError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn ito_deterministic_contraction_residual_is_first_order() {
        let coeffs = MeanFieldLinear::new(1, 1.0, 0.0, 0.0);
        let mut previous = f64::INFINITY;
        for h in [0.02, 0.01, 0.005] {
            let config = SchemeConfig::new(h, 1, 1.0, 0, InitialCondition::Point { point: vec![1.0] });
            let traj = simulate(&zero_op(1), &coeffs, &config).unwrap();
            let r = ito_residual(&traj, &SquaredNorm { dim: 1 }, &coeffs, 0, traj.steps()).unwrap();
            // Per-step remainder is h²x², so the residual is h·Σ h x_k² ≤ h/2.
            let oracle: f64 = (0..traj.steps()).map(|k| h * h * traj.positions(k)[0].powi(2)).sum();
            assert!((r.residual - oracle).abs() < 1e-12, "{} vs {oracle}", r.residual);
            assert!(r.residual.abs() <= 5.0 * h);
            assert!(r.residual.abs() < 0.7 * previous);
            previous = r.residual.abs();
        }
    }

    #[test]
    fn ito_reflected_drift_reconstructs_the_path() {
        let op = CatalogOperator::new(OperatorKind::NormalConeBox {
            lo: vec![0.0],
            hi: vec![f64::INFINITY],
        })
        .unwrap();
        let coeffs = ConstantDrift::new(vec![-1.0]);
        let config = SchemeConfig::new(0.01, 1, 2.0, 0, InitialCondition::Point { point: vec![1.0] });
        let traj = simulate(&op, &coeffs, &config).unwrap();
        let phi = Linear {
            c: vec![1.0],
            e: vec![0.0],
        };
        let r = ito_residual(&traj, &phi, &coeffs, 0, traj.steps()).unwrap();
        assert!((r.terms[0] + r.terms[1] - (0.0 - 1.0)).abs() <= config.h);
        assert!(r.residual.abs() < 1e-12);
    }

    #[test]
    fn k_condition_examples() {
        let coeffs = MeanFieldLinear::new(2, 0.0, 0.0, 0.8);
        let config = SchemeConfig::new(0.01, 50, 1.0, 3, InitialCondition::Point { point: vec![0.5, 0.0] });
        let free = simulate(&zero_op(2), &coeffs, &config).unwrap();
        let r = k_condition_monitor(&free, &SquaredNorm { dim: 2 }, None);
        assert!(r.pass && r.increments.iter().all(|v| *v == 0.0));

        let ball = CatalogOperator::new(OperatorKind::NormalConeBall {
            center: vec![0.0, 0.0],
            radius: 0.7,
        })
        .unwrap();
        let traj = simulate(&ball, &coeffs, &config).unwrap();
        let r = k_condition_monitor(&traj, &SquaredNorm { dim: 2 }, None);
        assert!(r.pass);
        assert!(r.increments.iter().any(|v| *v > 0.0));
        let adversarial = LinearCombination::new(2).with(-1.0, SquaredNorm { dim: 2 });
        assert!(!k_condition_monitor(&traj, &adversarial, None).pass);
    }
}
