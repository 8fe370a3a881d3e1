//! Empirical checks of Lyapunov-type stability criteria.
//!
//! Three hypothesis families are distinguished by [`Family`]:
//!
//! - `Exponential`: integrated dissipativity `∫(L_μF + αF) dμ ≤ 0` and the
//!   sandwich `a₁‖μ‖₂² ≤ ∫F dμ ≤ a₂‖μ‖₂²`, giving
//!   `E|X_t|² ≤ (a₂/a₁) e^{-αt} E|ξ|²`.
//! - `Ultimate`: the same with offsets `M₁, M₂, M₃`, giving
//!   `E|X_t|² ≤ (a₂/a₁) e^{-αt} E|ξ|² + (α(M₂+M₃)+M₁)/(αa₁)`.
//! - `Pointwise`: `L_μF + αF ≤ 0` at every atom and `γ₁(|x|) ≤ F ≤ γ₂(|x|)`,
//!   the almost-sure setting.
//!
//! Moment bounds are checked with a statistical allowance: three bootstrap
//! standard errors of `m(t)` plus `C_h·h`, both relative to the bound.

use std::fmt;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::calculus::{atom_generator_values, ensemble_generator, k_condition_monitor, CalculusError, KConditionReport, TestFunction};
use crate::measures::EmpiricalMeasure;
use crate::operators::{norm, MonotoneOperator};
use crate::solver::{simulate, Coefficients, SchemeConfig, SolverError, TrajectoryRecord};
use crate::stats::{bootstrap_standard_error, linear_fit, pairwise_sum};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StabilityError {
    #[error("second moment {value:e} at t = {time} is too small to fit a logarithm")]
    DegenerateFit { time: f64, value: f64 },
    #[error("invalid Lyapunov specification: {0}")]
    InvalidSpec(String),
    #[error("invalid argument `{key}`: {message}")]
    InvalidArgument { key: &'static str, message: String },
    #[error(transparent)]
    Calculus(#[from] CalculusError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

pub type Result<T> = std::result::Result<T, StabilityError>;

/// Tolerance used for sandwich and dissipativity comparisons.
pub const COMPARISON_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Exponential,
    Ultimate,
    Pointwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DissipativityMode {
    Integrated,
    Pointwise,
}

impl Family {
    pub fn mode(self) -> DissipativityMode {
        match self {
            Family::Pointwise => DissipativityMode::Pointwise,
            _ => DissipativityMode::Integrated,
        }
    }
}

/// Comparison function `γ: ℝ₊ → ℝ₊`.
#[derive(Clone)]
pub enum Comparison {
    /// `c · r^p`.
    Power { coefficient: f64, exponent: f64 },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl Comparison {
    pub fn eval(&self, r: f64) -> f64 {
        match self {
            Comparison::Power { coefficient, exponent } => coefficient * r.powf(*exponent),
            Comparison::Custom(f) => f(r),
        }
    }

    /// Sampled check of `γ(0) = 0` and strict increase on `[0, r_max]`.
    pub fn is_admissible(&self, r_max: f64, samples: usize) -> bool {
        if self.eval(0.0) != 0.0 {
            return false;
        }
        let mut prev = 0.0;
        (1..=samples).all(|i| {
            let v = self.eval(r_max * i as f64 / samples as f64);
            let ok = v > prev;
            prev = v;
            ok
        })
    }
}

impl fmt::Debug for Comparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Comparison::Power { coefficient, exponent } => write!(f, "Power({coefficient}·r^{exponent})"),
            Comparison::Custom(_) => write!(f, "Custom"),
        }
    }
}

/// A Lyapunov function with the constants of one hypothesis family.
#[derive(Clone)]
pub struct LyapunovSpec {
    pub function: Arc<dyn TestFunction>,
    pub family: Family,
    pub alpha: f64,
    pub a1: f64,
    pub a2: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub gamma1: Option<Comparison>,
    pub gamma2: Option<Comparison>,
}

impl fmt::Debug for LyapunovSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LyapunovSpec")
            .field("family", &self.family)
            .field("alpha", &self.alpha)
            .field("a1", &self.a1)
            .field("a2", &self.a2)
            .field("m1", &self.m1)
            .field("m2", &self.m2)
            .field("m3", &self.m3)
            .field("gamma1", &self.gamma1)
            .field("gamma2", &self.gamma2)
            .finish()
    }
}

impl LyapunovSpec {
    pub fn exponential(function: Arc<dyn TestFunction>, alpha: f64, a1: f64, a2: f64) -> Self {
        Self {
            function,
            family: Family::Exponential,
            alpha,
            a1,
            a2,
            m1: 0.0,
            m2: 0.0,
            m3: 0.0,
            gamma1: None,
            gamma2: None,
        }
    }

    #[allow(clippy::too_many_arguments)]
    pub fn ultimate(function: Arc<dyn TestFunction>, alpha: f64, a1: f64, a2: f64, m1: f64, m2: f64, m3: f64) -> Self {
        Self {
            family: Family::Ultimate,
            m1,
            m2,
            m3,
            ..Self::exponential(function, alpha, a1, a2)
        }
    }

    pub fn pointwise(function: Arc<dyn TestFunction>, alpha: f64, gamma1: Comparison, gamma2: Comparison) -> Self {
        Self {
            family: Family::Pointwise,
            gamma1: Some(gamma1),
            gamma2: Some(gamma2),
            ..Self::exponential(function, alpha, 1.0, 1.0)
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Self {
        Self { alpha, ..self.clone() }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(StabilityError::InvalidSpec(m.into()));
        if !(self.alpha > 0.0) {
            return bad("alpha must be positive");
        }
        if !(self.a1 > 0.0) || !(self.a2 >= self.a1) {
            return bad("require 0 < a1 <= a2");
        }
        if !(self.m1 >= 0.0 && self.m2 >= 0.0 && self.m3 >= 0.0) {
            return bad("offsets M1, M2, M3 must be nonnegative");
        }
        if self.family == Family::Pointwise {
            for (name, g) in [("gamma1", &self.gamma1), ("gamma2", &self.gamma2)] {
                match g {
                    None => return bad(&format!("{name} is required for pointwise checks")),
                    Some(g) if !g.is_admissible(100.0, 1000) => {
                        return bad(&format!("{name} must vanish at 0 and be strictly increasing"))
                    }
                    _ => {}
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DissipativityReport {
    pub mode: DissipativityMode,
    /// Integrated mean or pointwise maximum of `L_μF + αF`.
    pub value: f64,
    /// `M₁` in the ultimate family, 0 otherwise.
    pub threshold: f64,
    pub pass: bool,
}

/// Evaluates `L_μF + αF` on the atoms of `μ`, integrated or pointwise.
pub fn dissipativity_check(
    spec: &LyapunovSpec,
    coeffs: &dyn Coefficients,
    mu: &EmpiricalMeasure,
    mode: DissipativityMode,
) -> Result<DissipativityReport> {
    let f = spec.function.as_ref();
    let threshold = if spec.family == Family::Ultimate { spec.m1 } else { 0.0 };
    let (value, scale) = match mode {
        DissipativityMode::Integrated => {
            let values: Vec<f64> = mu.iter().map(|x| f.value(x, mu)).collect();
            let mean_f = pairwise_sum(&values) / mu.len() as f64;
            let g = ensemble_generator(f, mu, coeffs)?;
            (g + spec.alpha * mean_f, g.abs().max(spec.alpha * mean_f.abs()))
        }
        DissipativityMode::Pointwise => {
            let pairs = atom_generator_values(f, mu, coeffs)?;
            pairs.iter().fold((f64::NEG_INFINITY, 0.0_f64), |(v, s), (g, phi)| {
                (v.max(g + spec.alpha * phi), s.max(g.abs()).max(spec.alpha * phi.abs()))
            })
        }
    };
    Ok(DissipativityReport {
        mode,
        value,
        threshold,
        pass: value <= threshold + COMPARISON_TOLERANCE * (1.0 + scale),
    })
}

/// Largest candidate `α` for which dissipativity holds at every supplied measure.
pub fn max_dissipative_alpha(
    spec: &LyapunovSpec,
    coeffs: &dyn Coefficients,
    measures: &[EmpiricalMeasure],
    candidates: &[f64],
) -> Result<Option<f64>> {
    let mut best: Option<f64> = None;
    for &alpha in candidates {
        let trial = spec.with_alpha(alpha);
        let mut ok = true;
        for mu in measures {
            if !dissipativity_check(&trial, coeffs, mu, spec.family.mode())?.pass {
                ok = false;
                break;
            }
        }
        if ok {
            best = Some(best.map_or(alpha, |b: f64| b.max(alpha)));
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub family: Family,
    pub lower: f64,
    pub middle: f64,
    pub upper: f64,
    pub pass: bool,
}

/// The sandwich `lower ≤ middle ≤ upper` for the spec's family.
///
/// Pointwise mode reports the atom with the smallest margin.
pub fn comparison_check(spec: &LyapunovSpec, mu: &EmpiricalMeasure) -> Result<ComparisonReport> {
    let f = spec.function.as_ref();
    let tol = |a: f64, b: f64| COMPARISON_TOLERANCE * (1.0 + a.abs().max(b.abs()));
    let (lower, middle, upper) = match spec.family {
        Family::Exponential | Family::Ultimate => {
            let (m2, m3) = if spec.family == Family::Ultimate {
                (spec.m2, spec.m3)
            } else {
                (0.0, 0.0)
            };
            let values: Vec<f64> = mu.iter().map(|x| f.value(x, mu)).collect();
            let middle = pairwise_sum(&values) / mu.len() as f64;
            let moment = mu.second_moment_norm();
            (spec.a1 * moment - m2, middle, spec.a2 * moment + m3)
        }
        Family::Pointwise => {
            let (Some(g1), Some(g2)) = (&spec.gamma1, &spec.gamma2) else {
                return Err(StabilityError::InvalidSpec("gamma1 and gamma2 are required".into()));
            };
            let mut worst = (f64::INFINITY, 0.0, 0.0, 0.0);
            for x in mu.iter() {
                let r = norm(x);
                let (lo, mid, hi) = (g1.eval(r), f.value(x, mu), g2.eval(r));
                let margin = (mid - lo).min(hi - mid);
                if margin < worst.0 {
                    worst = (margin, lo, mid, hi);
                }
            }
            (worst.1, worst.2, worst.3)
        }
    };
    Ok(ComparisonReport {
        family: spec.family,
        lower,
        middle,
        upper,
        pass: lower <= middle + tol(lower, middle) && middle <= upper + tol(middle, upper),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    pub beta_hat: f64,
    pub intercept: f64,
    pub r2: f64,
    /// Number of grid points in the fit window.
    pub points: usize,
}

/// Least-squares fit of `log m(t) ≈ intercept - β̂ t` over `t ≥ burn_in · T`.
pub fn decay_fit_series(grid: &[f64], moments: &[f64], burn_in: f64) -> Result<DecayFit> {
    if !(0.0..1.0).contains(&burn_in) {
        return Err(StabilityError::InvalidArgument {
            key: "burn_in",
            message: format!("must lie in [0, 1), got {burn_in}"),
        });
    }
    let horizon = *grid.last().unwrap_or(&0.0);
    let start = burn_in * horizon;
    let mut t = Vec::new();
    let mut y = Vec::new();
    for (&time, &m) in grid.iter().zip(moments) {
        if time < start {
            continue;
        }
        if !(m >= 1e-30) {
            return Err(StabilityError::DegenerateFit { time, value: m });
        }
        t.push(time);
        y.push(m.ln());
    }
    let fit = linear_fit(&t, &y).ok_or(StabilityError::InvalidArgument {
        key: "burn_in",
        message: "fewer than two grid points in the fit window".into(),
    })?;
    Ok(DecayFit {
        beta_hat: -fit.slope,
        intercept: fit.intercept,
        r2: fit.r2,
        points: t.len(),
    })
}

/// [`decay_fit_series`] on the ensemble second moments of a trajectory.
pub fn decay_fit(traj: &TrajectoryRecord, burn_in: f64) -> Result<DecayFit> {
    decay_fit_series(traj.grid(), &traj.second_moments(), burn_in)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SlackOptions {
    /// Discretization allowance `C_h`; the relative slack includes `C_h · h`.
    pub c_h: f64,
    pub resamples: usize,
    pub seed: u64,
}

impl Default for SlackOptions {
    fn default() -> Self {
        Self {
            c_h: 0.0,
            resamples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCurve {
    pub grid: Vec<f64>,
    pub moments: Vec<f64>,
    pub bound: Vec<f64>,
    /// Relative slack applied at each grid time.
    pub slack: Vec<f64>,
    /// `max_k (m_k - bound_k (1 + slack_k))`; the check passes iff this is ≤ 0.
    pub max_violation: f64,
    pub max_slack: f64,
    pub pass: bool,
}

fn bound_curve(traj: &TrajectoryRecord, bound: &[f64], options: &SlackOptions) -> BoundCurve {
    let d = traj.dim();
    let moments = traj.second_moments();
    let h = traj.h();
    let slack: Vec<f64> = (0..traj.grid().len())
        .into_par_iter()
        .map(|k| {
            let per_particle: Vec<f64> = traj
                .positions(k)
                .chunks_exact(d)
                .map(|p| p.iter().map(|c| c * c).sum())
                .collect();
            let se = bootstrap_standard_error(&per_particle, options.resamples, options.seed.wrapping_add(k as u64));
            let scale = bound[k].max(f64::MIN_POSITIVE);
            3.0 * se / scale + options.c_h * h
        })
        .collect();
    let max_violation = moments
        .iter()
        .zip(bound)
        .zip(&slack)
        .map(|((m, b), s)| m - b * (1.0 + s))
        .fold(f64::NEG_INFINITY, f64::max);
    BoundCurve {
        grid: traj.grid().to_vec(),
        max_slack: slack.iter().copied().fold(0.0, f64::max),
        pass: max_violation <= 0.0,
        moments,
        bound: bound.to_vec(),
        slack,
        max_violation,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum BoundOutcome {
    Pass,
    Fail,
    /// A hypothesis check failed, so the conclusion is not tested.
    PreconditionFailed { gate: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GateReport {
    /// Worst dissipativity value over the grid and the time it occurred.
    pub dissipativity: DissipativityReport,
    pub dissipativity_time: f64,
    pub comparison: ComparisonReport,
    pub k_condition: KConditionReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentialBoundReport {
    pub outcome: BoundOutcome,
    pub gates: GateReport,
    pub curve: Option<BoundCurve>,
}

impl ExponentialBoundReport {
    pub fn pass(&self) -> bool {
        self.outcome == BoundOutcome::Pass
    }
}

/// Checks the hypotheses along a trajectory: dissipativity and the sandwich at
/// every grid law, then the constraint condition.
pub fn hypothesis_gates(spec: &LyapunovSpec, coeffs: &dyn Coefficients, traj: &TrajectoryRecord) -> Result<GateReport> {
    spec.validate()?;
    let flow = traj.flow();
    let mode = spec.family.mode();
    let checks: Vec<(DissipativityReport, ComparisonReport)> = flow
        .measures()
        .par_iter()
        .map(|mu| Ok((dissipativity_check(spec, coeffs, mu, mode)?, comparison_check(spec, mu)?)))
        .collect::<Result<_>>()?;
    let mut worst_d = 0;
    let mut worst_c = 0;
    for (k, (d, c)) in checks.iter().enumerate() {
        let (wd, wc) = (&checks[worst_d].0, &checks[worst_c].1);
        if (!d.pass && wd.pass) || (d.pass == wd.pass && d.value - d.threshold > wd.value - wd.threshold) {
            worst_d = k;
        }
        if !c.pass && wc.pass {
            worst_c = k;
        }
    }
    Ok(GateReport {
        dissipativity: checks[worst_d].0.clone(),
        dissipativity_time: flow.grid()[worst_d],
        comparison: checks[worst_c].1.clone(),
        k_condition: k_condition_monitor(traj, spec.function.as_ref(), None),
    })
}

/// First failed gate in the order dissipativity, constraint condition, sandwich.
pub fn gate_failure(gates: &GateReport) -> Option<BoundOutcome> {
    let gate = if !gates.dissipativity.pass {
        "dissipativity_check"
    } else if !gates.k_condition.pass {
        "k_condition_monitor"
    } else if !gates.comparison.pass {
        "comparison_check"
    } else {
        return None;
    };
    Some(BoundOutcome::PreconditionFailed { gate: gate.into() })
}

/// `m(t) ≤ (a₂/a₁) e^{-αt} m(0)` on the grid, gated by the hypotheses.
pub fn exponential_bound_check(
    traj: &TrajectoryRecord,
    spec: &LyapunovSpec,
    coeffs: &dyn Coefficients,
    options: &SlackOptions,
) -> Result<ExponentialBoundReport> {
    let gates = hypothesis_gates(spec, coeffs, traj)?;
    if let Some(outcome) = gate_failure(&gates) {
        return Ok(ExponentialBoundReport {
            outcome,
            gates,
            curve: None,
        });
    }
    let m0 = traj.flow().at(0).second_moment_norm();
    let ratio = spec.a2 / spec.a1;
    let bound: Vec<f64> = traj.grid().iter().map(|t| ratio * (-spec.alpha * t).exp() * m0).collect();
    let curve = bound_curve(traj, &bound, options);
    Ok(ExponentialBoundReport {
        outcome: if curve.pass { BoundOutcome::Pass } else { BoundOutcome::Fail },
        gates,
        curve: Some(curve),
    })
}

/// Constants of `E|X_t|² ≤ S e^{-βt} E|ξ|² + M`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct UltimateBound {
    pub s: f64,
    pub beta: f64,
    pub m: f64,
}

impl UltimateBound {
    /// `S = a₂/a₁`, `β = α`, `M = (α(M₂+M₃)+M₁)/(αa₁)`.
    pub fn from_spec(spec: &LyapunovSpec) -> Self {
        Self {
            s: spec.a2 / spec.a1,
            beta: spec.alpha,
            m: (spec.alpha * (spec.m2 + spec.m3) + spec.m1) / (spec.alpha * spec.a1),
        }
    }

    pub fn eval(&self, t: f64, m0: f64) -> f64 {
        self.s * (-self.beta * t).exp() * m0 + self.m
    }
}

pub fn ultimate_boundedness_check(traj: &TrajectoryRecord, bound: &UltimateBound, options: &SlackOptions) -> BoundCurve {
    let m0 = traj.flow().at(0).second_moment_norm();
    let values: Vec<f64> = traj.grid().iter().map(|t| bound.eval(*t, m0)).collect();
    bound_curve(traj, &values, options)
}

/// Runs one simulation per seed, in parallel.
pub fn simulate_seeds(
    op: &dyn MonotoneOperator,
    coeffs: &dyn Coefficients,
    config: &SchemeConfig,
    seeds: &[u64],
) -> Result<Vec<TrajectoryRecord>> {
    seeds
        .par_iter()
        .map(|&s| simulate(op, coeffs, &config.with_seed(s)).map_err(StabilityError::from))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AsStabilityReport {
    pub eps: Vec<f64>,
    /// Fraction of paths with `sup_{t ≥ tail} |X_t| < eps`, per level.
    pub fractions: Vec<f64>,
    pub paths: usize,
    pub tail_start: f64,
}

fn tail_sups(trajectories: &[TrajectoryRecord], tail: f64) -> (Vec<f64>, f64) {
    let mut sups = Vec::new();
    let mut tail_start = 0.0;
    for traj in trajectories {
        let horizon = *traj.grid().last().expect("grid is nonempty");
        tail_start = tail * horizon;
        let first = traj.grid().iter().position(|t| *t >= tail_start).unwrap_or(traj.grid().len() - 1);
        let d = traj.dim();
        let mut local = vec![0.0_f64; traj.particles()];
        for k in first..traj.grid().len() {
            for (s, p) in local.iter_mut().zip(traj.positions(k).chunks_exact(d)) {
                *s = s.max(norm(p));
            }
        }
        sups.extend(local);
    }
    (sups, tail_start)
}

/// Fraction of all particle paths, across trajectories, whose tail supremum of
/// `|X_t|` lies below each `eps`. Larger `eps` admits more paths.
pub fn as_stability_estimate(trajectories: &[TrajectoryRecord], eps_levels: &[f64], tail: f64) -> Result<AsStabilityReport> {
    if !(0.0..=1.0).contains(&tail) {
        return Err(StabilityError::InvalidArgument {
            key: "tail",
            message: format!("must lie in [0, 1], got {tail}"),
        });
    }
    if trajectories.is_empty() {
        return Err(StabilityError::InvalidArgument {
            key: "trajectories",
            message: "at least one trajectory is required".into(),
        });
    }
    let (sups, tail_start) = tail_sups(trajectories, tail);
    let fractions = eps_levels
        .iter()
        .map(|eps| sups.iter().filter(|s| **s < *eps).count() as f64 / sups.len() as f64)
        .collect();
    Ok(AsStabilityReport {
        eps: eps_levels.to_vec(),
        fractions,
        paths: sups.len(),
        tail_start,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChebyshevReport {
    pub lambda: f64,
    /// Empirical `P{sup_{s ≤ t} |X_s - x₀| > λ}`.
    pub probability: f64,
    /// Empirical `E sup_{s ≤ t} |X_s - x₀|²`.
    pub sup_moment: f64,
    /// `E sup |X_s - x₀|² / λ²`.
    pub bound: f64,
    pub pass: bool,
}

/// Both sides of `P{sup|X_s - x₀| > λ} ≤ E sup|X_s - x₀|² / λ²` on `[0, t_k]`.
pub fn chebyshev_check(trajectories: &[TrajectoryRecord], x0: &[f64], lambda: f64, t_index: usize) -> Result<ChebyshevReport> {
    if !(lambda > 0.0) {
        return Err(StabilityError::InvalidArgument {
            key: "lambda",
            message: "must be positive".into(),
        });
    }
    let mut sups = Vec::new();
    for traj in trajectories {
        let d = traj.dim();
        if x0.len() != d {
            return Err(StabilityError::InvalidArgument {
                key: "x0",
                message: format!("expected dimension {d}"),
            });
        }
        let last = t_index.min(traj.grid().len() - 1);
        let mut local = vec![0.0_f64; traj.particles()];
        for k in 0..=last {
            for (s, p) in local.iter_mut().zip(traj.positions(k).chunks_exact(d)) {
                let r2: f64 = p.iter().zip(x0).map(|(a, b)| (a - b) * (a - b)).sum();
                *s = s.max(r2);
            }
        }
        sups.extend(local);
    }
    let n = sups.len().max(1) as f64;
    let probability = sups.iter().filter(|s| s.sqrt() > lambda).count() as f64 / n;
    let sup_moment = pairwise_sum(&sups) / n;
    let bound = sup_moment / (lambda * lambda);
    Ok(ChebyshevReport {
        lambda,
        probability,
        sup_moment,
        bound,
        pass: probability <= bound,
    })
}
