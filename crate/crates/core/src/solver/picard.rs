use std::sync::Arc;

use serde::Serialize;

use super::{
    initial_positions, noise_for, solve_frozen_flow, Coefficients, Result, SchemeConfig, SolverError,
};
use crate::measures::{flow_distance, EmpiricalMeasure, MeasureFlow};
use crate::noise::NoiseTensor;
use crate::operators::MonotoneOperator;

#[derive(Debug, Clone, PartialEq)]
pub struct PicardOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// Retain every iterate flow in the outcome.
    pub keep_iterates: bool,
}

impl Default for PicardOptions {
    fn default() -> Self {
        Self {
            tol: 1e-4,
            max_iter: 50,
            keep_iterates: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct PicardOutcome {
    pub flow: MeasureFlow,
    /// `ρ̂(Ψμ^{k}, μ^{k})` for each iteration.
    pub deltas: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// `Ψμ⁰` followed by every later iterate, when requested.
    pub iterates: Vec<MeasureFlow>,
}

/// Fixed-point iteration `μ ↦ Ψμ` on the full window `[0, T]`.
///
/// `Ψμ` is the law flow of the frozen-flow solve driven by one shared noise
/// tensor. The initial guess is the constant flow of the law of `ξ`; it is
/// first replaced by its image, after which `deltas[k] = ρ̂(μ^{k+1}, μ^k)`.
/// Never fails on non-convergence; see [`picard`] for that.
pub fn picard_iterate(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
    options: &PicardOptions,
) -> Result<PicardOutcome> {
    if !(options.tol > 0.0) {
        return Err(SolverError::InvalidConfig {
            key: "picard.tol",
            message: format!("tolerance must be positive, got {}", options.tol),
        });
    }
    if options.max_iter == 0 {
        return Err(SolverError::InvalidConfig {
            key: "picard.max_iter",
            message: "at least one iteration is required".into(),
        });
    }
    config.validate()?;
    let noise = Arc::new(noise_for(coeffs, config)?);
    let grid = config.grid()?;
    let law = EmpiricalMeasure::from_trusted(initial_positions(op, config)?, op.dim());
    let guess = MeasureFlow::constant(grid, law)?;
    let mut current = solve_frozen_flow(op, coeffs, &guess, config, noise.clone())?.into_flow();
    let mut iterates = Vec::new();
    if options.keep_iterates {
        iterates.push(current.clone());
    }
    let mut deltas = Vec::new();
    let mut converged = false;
    for _ in 0..options.max_iter {
        let next = solve_frozen_flow(op, coeffs, &current, config, noise.clone())?.into_flow();
        let delta = flow_distance(&next, &current)?;
        deltas.push(delta);
        current = next;
        if options.keep_iterates {
            iterates.push(current.clone());
        }
        if delta < options.tol {
            converged = true;
            break;
        }
    }
    Ok(PicardOutcome {
        flow: current,
        iterations: deltas.len(),
        deltas,
        converged,
        iterates,
    })
}

/// [`picard_iterate`], failing with `NotConverged` when the tolerance is not reached.
pub fn picard(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
    tol: f64,
    max_iter: usize,
) -> Result<PicardOutcome> {
    let outcome = picard_iterate(
        op,
        coeffs,
        config,
        &PicardOptions {
            tol,
            max_iter,
            keep_iterates: false,
        },
    )?;
    if !outcome.converged {
        return Err(SolverError::NotConverged {
            deltas: outcome.deltas,
        });
    }
    Ok(outcome)
}

/// `(E sup_t |X^{μ¹}_t - X^{μ²}_t|²)^{1/2} / ρ̂(μ¹, μ²)` with both frozen solves
/// driven by the same noise.
///
/// The numerator bounds `ρ̂(Ψμ¹, Ψμ²)` from above.
pub fn contraction_ratio(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
    first: &MeasureFlow,
    second: &MeasureFlow,
    noise: Arc<NoiseTensor>,
) -> Result<f64> {
    let denominator = flow_distance(first, second)?;
    if denominator == 0.0 {
        return Err(SolverError::ZeroDenominator);
    }
    let a = solve_frozen_flow(op, coeffs, first, config, noise.clone())?;
    let b = solve_frozen_flow(op, coeffs, second, config, noise)?;
    let d = a.dim();
    let n = a.particles();
    let mut sup = vec![0.0_f64; n];
    for k in 0..a.grid().len() {
        let (pa, pb) = (a.positions(k), b.positions(k));
        for (i, s) in sup.iter_mut().enumerate() {
            let gap: f64 = pa[i * d..(i + 1) * d]
                .iter()
                .zip(&pb[i * d..(i + 1) * d])
                .map(|(x, y)| (x - y) * (x - y))
                .sum();
            *s = s.max(gap);
        }
    }
    let numerator = (sup.iter().sum::<f64>() / n as f64).sqrt();
    Ok(numerator / denominator)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WindowSweep {
    /// `(horizon, largest contraction ratio over the supplied flow pairs)`.
    pub points: Vec<(f64, f64)>,
    /// Largest horizon whose ratios all fall below `threshold`.
    pub window: Option<f64>,
    pub threshold: f64,
}

/// Evaluates contraction ratios over candidate horizons and picks the largest
/// contractive window.
pub fn contraction_window_sweep<F>(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    base: &SchemeConfig,
    horizons: &[f64],
    threshold: f64,
    pairs: F,
) -> Result<WindowSweep>
where
    F: Fn(&SchemeConfig) -> Result<Vec<(MeasureFlow, MeasureFlow)>>,
{
    let mut points = Vec::with_capacity(horizons.len());
    for &horizon in horizons {
        let config = base.with_horizon(horizon);
        let noise = Arc::new(noise_for(coeffs, &config)?);
        let mut worst = 0.0_f64;
        for (first, second) in pairs(&config)? {
            worst = worst.max(contraction_ratio(op, coeffs, &config, &first, &second, noise.clone())?);
        }
        points.push((horizon, worst));
    }
    let window = points
        .iter()
        .filter(|(_, r)| *r < threshold)
        .map(|(h, _)| *h)
        .fold(None, |acc: Option<f64>, h| Some(acc.map_or(h, |a| a.max(h))));
    Ok(WindowSweep {
        points,
        window,
        threshold,
    })
}
