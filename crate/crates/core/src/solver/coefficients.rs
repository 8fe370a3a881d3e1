use std::fmt;

use crate::measures::EmpiricalMeasure;

/// Drift `b(x, μ)` and diffusion `σ(x, μ)` of the equation.
///
/// `diffusion` writes a row-major `dim × noise_dim` matrix.
pub trait Coefficients: Send + Sync {
    fn dim(&self) -> usize;

    fn noise_dim(&self) -> usize;

    fn drift(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]);

    fn diffusion(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]);

    /// False when neither `b` nor `σ` reads the measure argument.
    fn depends_on_measure(&self) -> bool {
        true
    }

    /// `L₁` with `|b|² + ‖σ‖² ≤ L₁(1 + |x|² + ‖μ‖₂²)`, when known.
    fn growth_constant(&self) -> Option<f64> {
        None
    }

    /// `L₃` with `|Δb|² + ‖Δσ‖² ≤ L₃(|Δx|² + ρ²)`, when known.
    fn lipschitz_constant(&self) -> Option<f64> {
        None
    }

    /// `sup ‖σ‖` (Frobenius), when σ is bounded.
    fn diffusion_bound(&self) -> Option<f64> {
        None
    }
}

impl fmt::Debug for dyn Coefficients + '_ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Coefficients")
            .field("dim", &self.dim())
            .field("noise_dim", &self.noise_dim())
            .finish()
    }
}

/// `σσ*(x, μ)` as a row-major `d × d` matrix.
pub fn diffusion_covariance(coeffs: &dyn Coefficients, x: &[f64], mu: &EmpiricalMeasure) -> Vec<f64> {
    let (d, m) = (coeffs.dim(), coeffs.noise_dim());
    let mut sigma = vec![0.0; d * m];
    coeffs.diffusion(x, mu, &mut sigma);
    covariance_of(&sigma, d, m)
}

pub(crate) fn covariance_of(sigma: &[f64], d: usize, m: usize) -> Vec<f64> {
    let mut a = vec![0.0; d * d];
    for i in 0..d {
        for j in 0..d {
            a[i * d + j] = (0..m).map(|r| sigma[i * m + r] * sigma[j * m + r]).sum();
        }
    }
    a
}

/// `b(x, μ) = -a·x + b̄·mean(μ)`, `σ = s·I` (noise dimension = state dimension).
///
/// Covers the mean-field Ornstein-Uhlenbeck family; `b̄ = 0` gives plain OU.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldLinear {
    pub dim: usize,
    pub a: f64,
    pub mean_coupling: f64,
    pub sigma: f64,
}

impl MeanFieldLinear {
    pub fn new(dim: usize, a: f64, mean_coupling: f64, sigma: f64) -> Self {
        Self {
            dim,
            a,
            mean_coupling,
            sigma,
        }
    }
}

impl Coefficients for MeanFieldLinear {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.dim
    }

    fn drift(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        if self.mean_coupling == 0.0 {
            for (o, xi) in out.iter_mut().zip(x) {
                *o = -self.a * xi;
            }
        } else {
            for ((o, xi), m) in out.iter_mut().zip(x).zip(mu.mean()) {
                *o = -self.a * xi + self.mean_coupling * m;
            }
        }
    }

    fn diffusion(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
        for i in 0..self.dim {
            out[i * self.dim + i] = self.sigma;
        }
    }

    fn depends_on_measure(&self) -> bool {
        self.mean_coupling != 0.0
    }

    fn growth_constant(&self) -> Option<f64> {
        let s2 = self.sigma * self.sigma * self.dim as f64;
        Some((2.0 * self.a * self.a).max(2.0 * self.mean_coupling * self.mean_coupling).max(s2))
    }

    // |mean(μ) - mean(ν)| ≤ W₁(μ, ν) is the only measure dependence.
    fn lipschitz_constant(&self) -> Option<f64> {
        Some(2.0 * (self.a * self.a).max(self.mean_coupling * self.mean_coupling))
    }

    fn diffusion_bound(&self) -> Option<f64> {
        Some(self.sigma.abs() * (self.dim as f64).sqrt())
    }
}

/// Constant drift `b ≡ c`, no diffusion.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantDrift {
    pub drift: Vec<f64>,
}

impl ConstantDrift {
    pub fn new(drift: Vec<f64>) -> Self {
        Self { drift }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            drift: vec![0.0; dim],
        }
    }
}

impl Coefficients for ConstantDrift {
    fn dim(&self) -> usize {
        self.drift.len()
    }

    fn noise_dim(&self) -> usize {
        1
    }

    fn drift(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.copy_from_slice(&self.drift);
    }

    fn diffusion(&self, _x: &[f64], _mu: &EmpiricalMeasure, out: &mut [f64]) {
        out.fill(0.0);
    }

    fn depends_on_measure(&self) -> bool {
        false
    }

    fn growth_constant(&self) -> Option<f64> {
        Some(self.drift.iter().map(|c| c * c).sum())
    }

    fn lipschitz_constant(&self) -> Option<f64> {
        Some(0.0)
    }

    fn diffusion_bound(&self) -> Option<f64> {
        Some(0.0)
    }
}

type DriftFn = dyn Fn(&[f64], &EmpiricalMeasure, &mut [f64]) + Send + Sync;

/// Coefficients assembled from closures.
pub struct FnCoefficients {
    dim: usize,
    noise_dim: usize,
    drift: Box<DriftFn>,
    diffusion: Box<DriftFn>,
    depends_on_measure: bool,
}

impl FnCoefficients {
    pub fn new<B, S>(dim: usize, noise_dim: usize, drift: B, diffusion: S) -> Self
    where
        B: Fn(&[f64], &EmpiricalMeasure, &mut [f64]) + Send + Sync + 'static,
        S: Fn(&[f64], &EmpiricalMeasure, &mut [f64]) + Send + Sync + 'static,
    {
        Self {
            dim,
            noise_dim,
            drift: Box::new(drift),
            diffusion: Box::new(diffusion),
            depends_on_measure: true,
        }
    }

    pub fn measure_free(mut self) -> Self {
        self.depends_on_measure = false;
        self
    }
}

impl Coefficients for FnCoefficients {
    fn dim(&self) -> usize {
        self.dim
    }

    fn noise_dim(&self) -> usize {
        self.noise_dim
    }

    fn drift(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        (self.drift)(x, mu, out)
    }

    fn diffusion(&self, x: &[f64], mu: &EmpiricalMeasure, out: &mut [f64]) {
        (self.diffusion)(x, mu, out)
    }

    fn depends_on_measure(&self) -> bool {
        self.depends_on_measure
    }
}
