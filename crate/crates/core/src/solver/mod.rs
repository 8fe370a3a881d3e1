//! Interacting-particle resolvent splitting for
//! `dX ∈ -A(X)dt + b(X, μ)dt + σ(X, μ)dW`.
//!
//! One step of size `h` is explicit Euler-Maruyama for `b, σ` followed by the
//! resolvent of `A`:
//!
//! ```text
//! Y_i  = X_i + h b(X_i, μ) + √h σ(X_i, μ) ζ_i
//! X_i' = J_h(Y_i)
//! ΔK_i = Y_i - X_i'            (so ΔK_i ∈ h A(X_i'))
//! ```
//!
//! `μ` is either the empirical law of the ensemble itself ([`simulate`]) or a
//! prescribed flow ([`solve_frozen_flow`]); [`picard`] iterates the latter to a
//! fixed point.

mod coefficients;
mod picard;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use coefficients::{
    diffusion_covariance, Coefficients, ConstantDrift, FnCoefficients, MeanFieldLinear,
};
pub(crate) use coefficients::covariance_of;
pub use picard::{
    contraction_ratio, contraction_window_sweep, picard, picard_iterate, PicardOptions,
    PicardOutcome, WindowSweep,
};

use crate::measures::{EmpiricalMeasure, MeasureError, MeasureFlow};
use crate::noise::{normal_at, uniform_at, NoiseTensor};
use crate::operators::{distance, norm, MonotoneOperator, OperatorError};

/// `|x|` above which a run aborts.
pub const DEFAULT_BLOWUP_THRESHOLD: f64 = 1e8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid scheme configuration at `{key}`: {message}")]
    InvalidConfig { key: &'static str, message: String },
    #[error("coefficient returned a non-finite value for particle {particle} at step {step}")]
    CoefficientBlowup { step: usize, particle: usize },
    #[error("particle {particle} exceeded |x| = {threshold} at step {step}")]
    StateBlowup {
        step: usize,
        particle: usize,
        threshold: f64,
    },
    #[error("frozen flow grid does not match the scheme grid")]
    GridMismatch,
    #[error("dimension mismatch: {what}")]
    DimensionMismatch { what: String },
    #[error("Picard iteration did not converge; deltas {deltas:?}")]
    NotConverged { deltas: Vec<f64> },
    #[error("flows coincide on the grid; contraction ratio undefined")]
    ZeroDenominator,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

pub type Result<T> = std::result::Result<T, SolverError>;

/// Law of the initial condition `ξ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialCondition {
    /// Deterministic `ξ = x₀`.
    Point { point: Vec<f64> },
    /// Independent coordinates `N(mean_i, std_i²)`.
    Gaussian { mean: Vec<f64>, std: Vec<f64> },
    /// Independent coordinates uniform on `[lo_i, hi_i)`.
    Uniform { lo: Vec<f64>, hi: Vec<f64> },
}

impl InitialCondition {
    pub fn dim(&self) -> usize {
        match self {
            InitialCondition::Point { point } => point.len(),
            InitialCondition::Gaussian { mean, .. } => mean.len(),
            InitialCondition::Uniform { lo, .. } => lo.len(),
        }
    }

    pub fn is_deterministic(&self) -> bool {
        matches!(self, InitialCondition::Point { .. })
    }

    fn validate(&self) -> Result<()> {
        let bad = |message: String| SolverError::InvalidConfig {
            key: "initial",
            message,
        };
        match self {
            InitialCondition::Point { point } => {
                if point.is_empty() || point.iter().any(|c| !c.is_finite()) {
                    return Err(bad("point must be nonempty and finite".into()));
                }
            }
            InitialCondition::Gaussian { mean, std } => {
                if mean.is_empty() || mean.len() != std.len() {
                    return Err(bad("mean and std must be nonempty with equal length".into()));
                }
                if mean.iter().chain(std).any(|c| !c.is_finite()) || std.iter().any(|s| *s < 0.0) {
                    return Err(bad("mean must be finite and std nonnegative".into()));
                }
            }
            InitialCondition::Uniform { lo, hi } => {
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(bad("lo and hi must be nonempty with equal length".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l.is_finite() && h.is_finite() && l <= h)) {
                    return Err(bad("bounds must be finite with lo <= hi".into()));
                }
            }
        }
        Ok(())
    }

    /// Row-major `particles × dim` sample, addressed by `(seed, particle, coordinate)`.
    pub fn sample(&self, particles: usize, seed: u64) -> Vec<f64> {
        let key = seed ^ 0x5bd1_e995_c3a5_c85c;
        let d = self.dim();
        let mut out = Vec::with_capacity(particles * d);
        for p in 0..particles {
            for c in 0..d {
                out.push(match self {
                    InitialCondition::Point { point } => point[c],
                    InitialCondition::Gaussian { mean, std } => {
                        mean[c] + std[c] * normal_at(key, p, 0, c, d)
                    }
                    InitialCondition::Uniform { lo, hi } => {
                        lo[c] + (hi[c] - lo[c]) * uniform_at(key, p, c)
                    }
                });
            }
        }
        out
    }
}

/// Step size, ensemble size, horizon, seed and initial law.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeConfig {
    pub h: f64,
    pub particles: usize,
    pub horizon: f64,
    pub seed: u64,
    pub initial: InitialCondition,
    #[serde(default = "default_blowup")]
    pub blowup_threshold: f64,
}

fn default_blowup() -> f64 {
    DEFAULT_BLOWUP_THRESHOLD
}

impl SchemeConfig {
    pub fn new(h: f64, particles: usize, horizon: f64, seed: u64, initial: InitialCondition) -> Self {
        Self {
            h,
            particles,
            horizon,
            seed,
            initial,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self {
            seed,
            ..self.clone()
        }
    }

    pub fn with_horizon(&self, horizon: f64) -> Self {
        Self {
            horizon,
            ..self.clone()
        }
    }

    pub fn with_step(&self, h: f64) -> Self {
        Self { h, ..self.clone() }
    }

    /// Number of steps `T / h`; errors unless it is an integer up to a few ulps.
    pub fn steps(&self) -> Result<usize> {
        if !(self.h.is_finite() && self.h > 0.0) {
            return Err(SolverError::InvalidConfig {
                key: "scheme.h",
                message: format!("step size must be positive and finite, got {}", self.h),
            });
        }
        if self.particles == 0 {
            return Err(SolverError::InvalidConfig {
                key: "scheme.particles",
                message: "at least one particle is required".into(),
            });
        }
        if !(self.horizon.is_finite() && self.horizon >= self.h) {
            return Err(SolverError::InvalidConfig {
                key: "scheme.horizon",
                message: format!("horizon {} must be finite and at least h = {}", self.horizon, self.h),
            });
        }
        let ratio = self.horizon / self.h;
        let n = ratio.round();
        if (ratio - n).abs() > 4.0 * f64::EPSILON * n {
            return Err(SolverError::InvalidConfig {
                key: "scheme.horizon",
                message: format!(
                    "horizon {} is not an integer multiple of h = {} (grid exactness)",
                    self.horizon, self.h
                ),
            });
        }
        if !(self.blowup_threshold > 0.0) {
            return Err(SolverError::InvalidConfig {
                key: "scheme.blowup_threshold",
                message: "threshold must be positive".into(),
            });
        }
        Ok(n as usize)
    }

    /// Uniform grid `t_k = k h`.
    pub fn grid(&self) -> Result<Vec<f64>> {
        let n = self.steps()?;
        Ok((0..=n).map(|k| k as f64 * self.h).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.steps()?;
        self.initial.validate()
    }
}

/// Particle positions `X`, constraint processes `K` and running variations `|K|`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub dim: usize,
    pub x: Vec<f64>,
    pub k: Vec<f64>,
    pub variation: Vec<f64>,
}

impl Ensemble {
    pub fn at_rest(x: Vec<f64>, dim: usize) -> Self {
        let n = x.len() / dim;
        Self {
            dim,
            k: vec![0.0; x.len()],
            variation: vec![0.0; n],
            x,
        }
    }

    pub fn len(&self) -> usize {
        self.variation.len()
    }

    pub fn is_empty(&self) -> bool {
        self.variation.is_empty()
    }

    pub fn measure(&self) -> EmpiricalMeasure {
        EmpiricalMeasure::from_trusted(self.x.clone(), self.dim)
    }
}

enum Fault {
    Coefficient,
    State,
}

struct Scratch {
    drift: Vec<f64>,
    sigma: Vec<f64>,
    y: Vec<f64>,
}

/// Positions after one splitting step plus the increments `ΔK`.
#[allow(clippy::too_many_arguments)]
fn advance_positions(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    x: &[f64],
    mu: &EmpiricalMeasure,
    h: f64,
    noise: &[f64],
    step_index: usize,
    threshold: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (d, m) = (coeffs.dim(), coeffs.noise_dim());
    let sqrt_h = h.sqrt();
    let mut next = vec![0.0; x.len()];
    let mut dk = vec![0.0; x.len()];
    let faults: Vec<Option<Fault>> = next
        .par_chunks_mut(d)
        .zip(dk.par_chunks_mut(d))
        .enumerate()
        .with_min_len(64)
        .map_init(
            || Scratch {
                drift: vec![0.0; d],
                sigma: vec![0.0; d * m],
                y: vec![0.0; d],
            },
            |s, (i, (out_x, out_dk))| {
                let xi = &x[i * d..(i + 1) * d];
                let zeta = &noise[i * m..(i + 1) * m];
                coeffs.drift(xi, mu, &mut s.drift);
                coeffs.diffusion(xi, mu, &mut s.sigma);
                if s.drift.iter().chain(&s.sigma).any(|c| !c.is_finite()) {
                    return Some(Fault::Coefficient);
                }
                for r in 0..d {
                    let diffusion: f64 = (0..m).map(|c| s.sigma[r * m + c] * zeta[c]).sum();
                    s.y[r] = xi[r] + h * s.drift[r] + sqrt_h * diffusion;
                }
                if s.y.iter().any(|c| !c.is_finite()) {
                    return Some(Fault::State);
                }
                op.resolvent_into(&s.y, h, out_x);
                for r in 0..d {
                    out_dk[r] = s.y[r] - out_x[r];
                }
                if !(norm(out_x) <= threshold) {
                    return Some(Fault::State);
                }
                None
            },
        )
        .collect();
    if let Some((particle, fault)) = faults
        .into_iter()
        .enumerate()
        .find_map(|(i, f)| f.map(|f| (i, f)))
    {
        return Err(match fault {
            Fault::Coefficient => SolverError::CoefficientBlowup {
                step: step_index,
                particle,
            },
            Fault::State => SolverError::StateBlowup {
                step: step_index,
                particle,
                threshold,
            },
        });
    }
    Ok((next, dk))
}

/// One splitting step for the whole ensemble with coefficients evaluated at `mu`.
///
/// `noise` holds `N × m` standard normals. Returns the new state and `ΔK`.
pub fn step(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    state: &Ensemble,
    mu: &EmpiricalMeasure,
    h: f64,
    noise: &[f64],
) -> Result<(Ensemble, Vec<f64>)> {
    check_dims(op, coeffs)?;
    if state.dim != coeffs.dim() || noise.len() != state.len() * coeffs.noise_dim() {
        return Err(SolverError::DimensionMismatch {
            what: "state or noise block does not match the coefficients".into(),
        });
    }
    if !(h.is_finite() && h > 0.0) {
        return Err(SolverError::InvalidConfig {
            key: "scheme.h",
            message: format!("step size must be positive, got {h}"),
        });
    }
    let (x, dk) = advance_positions(op, coeffs, &state.x, mu, h, noise, 0, DEFAULT_BLOWUP_THRESHOLD)?;
    let k = state.k.iter().zip(&dk).map(|(a, b)| a + b).collect();
    let variation = state
        .variation
        .iter()
        .zip(dk.chunks_exact(state.dim))
        .map(|(v, inc)| v + norm(inc))
        .collect();
    Ok((
        Ensemble {
            dim: state.dim,
            x,
            k,
            variation,
        },
        dk,
    ))
}

fn check_dims(op: &dyn MonotoneOperator, coeffs: &dyn Coefficients) -> Result<()> {
    if op.dim() != coeffs.dim() {
        return Err(SolverError::DimensionMismatch {
            what: format!("operator dimension {} vs coefficient dimension {}", op.dim(), coeffs.dim()),
        });
    }
    Ok(())
}

/// Full record of one run.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    config: SchemeConfig,
    grid: Vec<f64>,
    flow: MeasureFlow,
    k: Vec<Vec<f64>>,
    k_variation: Vec<Vec<f64>>,
    increments: Vec<Vec<f64>>,
    noise: Arc<NoiseTensor>,
    diffusion_dim: usize,
}

impl TrajectoryRecord {
    pub fn config(&self) -> &SchemeConfig {
        &self.config
    }

    pub fn seed(&self) -> u64 {
        self.config.seed
    }

    pub fn h(&self) -> f64 {
        self.config.h
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn steps(&self) -> usize {
        self.grid.len() - 1
    }

    pub fn particles(&self) -> usize {
        self.config.particles
    }

    pub fn dim(&self) -> usize {
        self.flow.dim()
    }

    pub fn noise_dim(&self) -> usize {
        self.diffusion_dim
    }

    /// Empirical laws `μ_k` of the ensemble.
    pub fn flow(&self) -> &MeasureFlow {
        &self.flow
    }

    pub fn into_flow(self) -> MeasureFlow {
        self.flow
    }

    pub fn positions(&self, k: usize) -> &[f64] {
        self.flow.at(k).points()
    }

    pub fn constraint(&self, k: usize) -> &[f64] {
        &self.k[k]
    }

    pub fn variation(&self, k: usize) -> &[f64] {
        &self.k_variation[k]
    }

    /// `ΔK` for the step `t_k → t_{k+1}`.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k]
    }

    pub fn noise(&self) -> &NoiseTensor {
        &self.noise
    }

    pub fn particle_path(&self, i: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        (0..self.grid.len())
            .map(|k| self.positions(k)[i * d..(i + 1) * d].to_vec())
            .collect()
    }

    pub fn constraint_path(&self, i: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        self.k.iter().map(|k| k[i * d..(i + 1) * d].to_vec()).collect()
    }

    /// Ensemble second moments `m(t_k) = (1/N) Σ |X_i(t_k)|²`.
    pub fn second_moments(&self) -> Vec<f64> {
        self.flow.measures().iter().map(|m| m.second_moment_norm()).collect()
    }

    /// Ensemble means `(1/N) Σ X_i(t_k)`.
    pub fn means(&self) -> Vec<Vec<f64>> {
        self.flow.measures().iter().map(|m| m.mean().to_vec()).collect()
    }
}

/// Measure fed to the coefficients at each step.
enum MeasureSource<'a> {
    SelfConsistent,
    Frozen(&'a MeasureFlow),
}

pub(crate) fn initial_positions(op: &dyn MonotoneOperator, config: &SchemeConfig) -> Result<Vec<f64>> {
    let d = op.dim();
    if config.initial.dim() != d {
        return Err(SolverError::DimensionMismatch {
            what: format!("initial law has dimension {}, operator {d}", config.initial.dim()),
        });
    }
    let raw = config.initial.sample(config.particles, config.seed);
    let mut projected = vec![0.0; raw.len()];
    for (src, dst) in raw.chunks_exact(d).zip(projected.chunks_exact_mut(d)) {
        op.project_domain_into(src, dst);
    }
    if config.initial.is_deterministic() {
        let gap = distance(&raw[..d], &projected[..d]);
        if gap > 1e-12 {
            return Err(SolverError::InvalidConfig {
                key: "initial.point",
                message: format!("initial point lies outside cl(D(A)) (distance {gap})"),
            });
        }
        return Ok(raw);
    }
    Ok(projected)
}

fn run(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
    noise: Arc<NoiseTensor>,
    source: MeasureSource<'_>,
) -> Result<TrajectoryRecord> {
    check_dims(op, coeffs)?;
    config.validate()?;
    let grid = config.grid()?;
    let steps = grid.len() - 1;
    if noise.particles() != config.particles || noise.steps() < steps || noise.noise_dim() != coeffs.noise_dim() {
        return Err(SolverError::DimensionMismatch {
            what: format!(
                "noise tensor {}×{}×{} does not cover {} particles × {} steps × {}",
                noise.particles(),
                noise.steps(),
                noise.noise_dim(),
                config.particles,
                steps,
                coeffs.noise_dim()
            ),
        });
    }
    if let MeasureSource::Frozen(frozen) = &source {
        if frozen.grid() != grid.as_slice() {
            return Err(SolverError::GridMismatch);
        }
        if frozen.dim() != coeffs.dim() {
            return Err(SolverError::DimensionMismatch {
                what: "frozen flow dimension".into(),
            });
        }
    }
    let d = op.dim();
    let n = config.particles;
    let x0 = initial_positions(op, config)?;
    let mut measures = Vec::with_capacity(steps + 1);
    let mut k_hist = Vec::with_capacity(steps + 1);
    let mut var_hist = Vec::with_capacity(steps + 1);
    let mut increments = Vec::with_capacity(steps);
    measures.push(EmpiricalMeasure::from_trusted(x0, d));
    k_hist.push(vec![0.0; n * d]);
    var_hist.push(vec![0.0; n]);
    for k in 0..steps {
        let current = &measures[k];
        let mu = match &source {
            MeasureSource::SelfConsistent => current,
            MeasureSource::Frozen(flow) => flow.at(k),
        };
        let (next, dk) = advance_positions(
            op,
            coeffs,
            current.points(),
            mu,
            config.h,
            noise.step_block(k),
            k,
            config.blowup_threshold,
        )?;
        let k_next: Vec<f64> = k_hist[k].iter().zip(&dk).map(|(a, b)| a + b).collect();
        let v_next: Vec<f64> = var_hist[k]
            .iter()
            .zip(dk.chunks_exact(d))
            .map(|(v, inc)| v + norm(inc))
            .collect();
        measures.push(EmpiricalMeasure::from_trusted(next, d));
        k_hist.push(k_next);
        var_hist.push(v_next);
        increments.push(dk);
    }
    Ok(TrajectoryRecord {
        config: config.clone(),
        flow: MeasureFlow::new(grid.clone(), measures)?,
        grid,
        k: k_hist,
        k_variation: var_hist,
        increments,
        noise,
        diffusion_dim: coeffs.noise_dim(),
    })
}

/// Noise tensor for `config` and `coeffs`, derived from the seed.
pub fn noise_for(coeffs: &dyn Coefficients, config: &SchemeConfig) -> Result<NoiseTensor> {
    Ok(NoiseTensor::generate(
        config.seed,
        config.particles,
        config.steps()?,
        coeffs.noise_dim(),
    ))
}

/// Self-consistent particle simulation: `μ_k` is the empirical law of the ensemble at step `k`.
pub fn simulate(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
) -> Result<TrajectoryRecord> {
    let noise = Arc::new(noise_for(coeffs, config)?);
    run(op, coeffs, config, noise, MeasureSource::SelfConsistent)
}

/// [`simulate`] with an externally supplied noise tensor.
pub fn simulate_with_noise(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
    noise: Arc<NoiseTensor>,
) -> Result<TrajectoryRecord> {
    run(op, coeffs, config, noise, MeasureSource::SelfConsistent)
}

/// Auxiliary equation with the measure argument prescribed by `frozen`.
pub fn solve_frozen_flow(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    frozen: &MeasureFlow,
    config: &SchemeConfig,
    noise: Arc<NoiseTensor>,
) -> Result<TrajectoryRecord> {
    run(op, coeffs, config, noise, MeasureSource::Frozen(frozen))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    /// `E sup_{s ≤ T} |X_s|²` over the ensemble.
    pub sup_second_moment: f64,
    /// `E sup_{s ≤ t_k} |X_s|²` for every grid time.
    pub running_sup_second_moment: Vec<f64>,
    /// `sup_k E|X_{t_k}|²`.
    pub max_second_moment: f64,
    pub second_moments: Vec<f64>,
    /// `E|ξ - a|²`.
    pub initial_offset_moment: f64,
    /// `|a|²`.
    pub anchor_norm_sq: f64,
    pub horizon: f64,
}

/// Inputs of the moment bound `E sup|X_s|² ≤ 2(2E|ξ - a|² + Ct)e^{ct} + 2|a|²`.
pub fn moment_monitor(traj: &TrajectoryRecord, anchor: &[f64]) -> Result<MomentReport> {
    let d = traj.dim();
    if anchor.len() != d {
        return Err(SolverError::DimensionMismatch {
            what: "anchor point".into(),
        });
    }
    let n = traj.particles();
    let mut running = vec![0.0_f64; n];
    let mut running_mean = Vec::with_capacity(traj.grid().len());
    for k in 0..traj.grid().len() {
        for (r, p) in running.iter_mut().zip(traj.positions(k).chunks_exact(d)) {
            *r = r.max(p.iter().map(|c| c * c).sum());
        }
        running_mean.push(running.iter().sum::<f64>() / n as f64);
    }
    let initial_offset_moment = traj
        .positions(0)
        .chunks_exact(d)
        .map(|p| p.iter().zip(anchor).map(|(x, a)| (x - a) * (x - a)).sum::<f64>())
        .sum::<f64>()
        / n as f64;
    let second_moments = traj.second_moments();
    Ok(MomentReport {
        sup_second_moment: *running_mean.last().expect("grid is nonempty"),
        running_sup_second_moment: running_mean,
        max_second_moment: second_moments.iter().copied().fold(0.0, f64::max),
        second_moments,
        initial_offset_moment,
        anchor_norm_sq: anchor.iter().map(|c| c * c).sum(),
        horizon: *traj.grid().last().expect("grid is nonempty"),
    })
}

#[cfg(test)]
mod tests;
