//! Batch front end.
//!
//! Exit status: 0 success, 1 a check reported `pass = false`, 2 usage or
//! configuration error, 3 numeric abort (blowup, Picard non-convergence).
//!
//! | subcommand | files written to `--out` |
//! |------------|--------------------------|
//! | `simulate` | `trajectory.csv`, `summary.json` |
//! | `picard` | `flow_iter_<k>.csv` per iterate, `convergence.json` |
//! | `ito-check` | `ito_terms.csv`, `ito_summary.json` |
//! | `stability` | `stability.json`, `moments.csv` |
//! | `operators-test` | `operators.json` |
//! | `scenarios` | none; prints the presets |
//! | `validate` | `normalized.toml`; also printed |

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;
use serde_json::json;

use crate::calculus::{ito_residual, ItoReport};
use crate::operators::{axiom_check, catalog_samples, AxiomReport, CatalogOperator};
use crate::output::{self, ItoRow};
use crate::scenario::{self, ConfigErrors, FamilyChoice, Scenario};
use crate::solver::{picard_iterate, simulate, PicardOptions, SolverError};
use crate::stability::{
    as_stability_estimate, decay_fit, exponential_bound_check, gate_failure, hypothesis_gates, simulate_seeds, ultimate_boundedness_check,
    BoundOutcome, SlackOptions, StabilityError, UltimateBound,
};
use crate::stats::{mean, standard_error};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CHECK_FAILED: u8 = 1;
pub const EXIT_USAGE: u8 = 2;
pub const EXIT_NUMERIC: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "mvsde", version, about = "Particle schemes for multivalued McKean-Vlasov SDEs")]
pub struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// `key.path=value` override; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Simulate the particle system.
    Simulate,
    /// Fixed-point iteration on the law flow.
    Picard,
    /// Term-by-term Itô formula residual.
    ItoCheck,
    /// Lyapunov hypotheses, moment bounds and tail statistics.
    Stability,
    /// Resolvent axioms over the operator catalog.
    OperatorsTest,
    /// List the scenario presets.
    Scenarios,
    /// Print the normalized configuration.
    Validate,
}

#[derive(Debug)]
pub enum CliError {
    Config(ConfigErrors),
    Usage(String),
    Numeric(String),
    Io(std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Usage(_) => EXIT_USAGE,
            CliError::Numeric(_) => EXIT_NUMERIC,
            CliError::Io(_) => EXIT_USAGE,
        }
    }
}

impl Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "{e}"),
            CliError::Usage(m) | CliError::Numeric(m) => write!(f, "{m}"),
            CliError::Io(e) => write!(f, "io: {e}"),
        }
    }
}

impl From<ConfigErrors> for CliError {
    fn from(e: ConfigErrors) -> Self {
        CliError::Config(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<SolverError> for CliError {
    fn from(e: SolverError) -> Self {
        match e {
            SolverError::InvalidConfig { key, message } => CliError::Config(ConfigErrors(vec![scenario::ConfigIssue {
                key: key.into(),
                message,
            }])),
            SolverError::CoefficientBlowup { .. } | SolverError::StateBlowup { .. } | SolverError::NotConverged { .. } => {
                CliError::Numeric(e.to_string())
            }
            other => CliError::Usage(other.to_string()),
        }
    }
}

impl From<StabilityError> for CliError {
    fn from(e: StabilityError) -> Self {
        match e {
            StabilityError::Solver(s) => s.into(),
            StabilityError::Calculus(c) => CliError::Numeric(c.to_string()),
            StabilityError::DegenerateFit { .. } => CliError::Numeric(e.to_string()),
            StabilityError::InvalidSpec(m) => CliError::Usage(format!("stability: {m}")),
            StabilityError::InvalidArgument { key, message } => CliError::Usage(format!("stability.{key}: {message}")),
        }
    }
}

impl From<crate::calculus::CalculusError> for CliError {
    fn from(e: crate::calculus::CalculusError) -> Self {
        CliError::Numeric(e.to_string())
    }
}

type Outcome = Result<bool, CliError>;

fn load(cli: &Cli) -> Result<Scenario, CliError> {
    let config = scenario::load(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    Ok(Scenario::from_config(config)?)
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir)?;
    Ok(())
}

fn seeds(first: u64, count: usize) -> Vec<u64> {
    (0..count as u64).map(|i| first.wrapping_add(i)).collect()
}

fn cmd_simulate(cli: &Cli) -> Outcome {
    let sc = load(cli)?;
    let traj = simulate(&sc.operator, sc.coefficients.as_ref(), &sc.scheme)?;
    prepare_out(&cli.out)?;
    output::write_trajectory_csv(&traj, output::create(&cli.out.join("trajectory.csv"))?)?;
    let moments = traj.second_moments();
    let oracle = sc.oracle().map(|o| {
        let (mut mean_err, mut moment_err) = (0.0_f64, 0.0_f64);
        for (k, t) in traj.grid().iter().enumerate() {
            let (m1, m2) = o.moments(*t);
            mean_err = mean_err.max((traj.flow().at(k).mean()[0] - m1).abs());
            moment_err = moment_err.max((moments[k] - m2).abs());
        }
        json!({ "reference": o, "max_mean_error": mean_err, "max_second_moment_error": moment_err })
    });
    let summary = json!({
        "scenario": sc.config.scenario,
        "seed": sc.config.seed,
        "config": scenario::normalized(&sc.config),
        "steps": traj.steps(),
        "particles": traj.particles(),
        "grid": traj.grid(),
        "second_moments": moments,
        "means": traj.means(),
        "oracle": oracle,
    });
    output::write_json(&summary, &cli.out.join("summary.json"))?;
    Ok(true)
}

fn cmd_picard(cli: &Cli) -> Outcome {
    let sc = load(cli)?;
    let options = PicardOptions {
        tol: sc.config.picard.tol,
        max_iter: sc.config.picard.max_iter,
        keep_iterates: true,
    };
    let outcome = picard_iterate(&sc.operator, sc.coefficients.as_ref(), &sc.scheme, &options)?;
    prepare_out(&cli.out)?;
    for (k, flow) in outcome.iterates.iter().enumerate() {
        output::write_flow_csv(flow, output::create(&cli.out.join(format!("flow_iter_{k}.csv")))?)?;
    }
    let monotone = outcome.deltas.windows(2).all(|w| w[1] <= w[0]);
    let report = json!({
        "scenario": sc.config.scenario,
        "seed": sc.config.seed,
        "tol": options.tol,
        "max_iter": options.max_iter,
        "iterations": outcome.iterations,
        "deltas": outcome.deltas,
        "monotone": monotone,
        "converged": outcome.converged,
    });
    output::write_json(&report, &cli.out.join("convergence.json"))?;
    if !outcome.converged {
        return Err(CliError::Numeric(format!(
            "picard: not converged to tol {} in {} iterations",
            options.tol, options.max_iter
        )));
    }
    Ok(true)
}

fn cmd_ito(cli: &Cli) -> Outcome {
    let sc = load(cli)?;
    let n = sc.scheme.steps()?;
    let s_index = (sc.config.ito.start_fraction * n as f64).round() as usize;
    let t_index = (sc.config.ito.end_fraction * n as f64).round() as usize;
    let seed_list = seeds(sc.config.seed, sc.config.ito.seeds);
    let trajs = simulate_seeds(&sc.operator, sc.coefficients.as_ref(), &sc.scheme, &seed_list)?;
    let mut rows = Vec::with_capacity(trajs.len());
    for (traj, seed) in trajs.iter().zip(&seed_list) {
        let report: ItoReport = ito_residual(traj, sc.ito_function.as_ref(), sc.coefficients.as_ref(), s_index, t_index)?;
        rows.push(ItoRow {
            report,
            h: sc.scheme.h,
            particles: sc.scheme.particles,
            seed: *seed,
        });
    }
    prepare_out(&cli.out)?;
    output::write_ito_csv(&rows, output::create(&cli.out.join("ito_terms.csv"))?)?;
    let residuals: Vec<f64> = rows.iter().map(|r| r.report.residual).collect();
    let (m, se) = (mean(&residuals), standard_error(&residuals));
    let allowance = 3.0 * se + 5.0 * sc.scheme.h;
    let pass = m.abs() <= allowance;
    let summary = json!({
        "scenario": sc.config.scenario,
        "seeds": seed_list,
        "s_index": s_index,
        "t_index": t_index,
        "mean_residual": m,
        "standard_error": se,
        "allowance": allowance,
        "pass": pass,
    });
    output::write_json(&summary, &cli.out.join("ito_summary.json"))?;
    Ok(pass)
}

#[derive(Serialize)]
struct StabilityReport {
    scenario: String,
    family: FamilyChoice,
    hypothesis_checks: Option<serde_json::Value>,
    decay: serde_json::Value,
    bounds: Option<serde_json::Value>,
    as_fractions: serde_json::Value,
    pass: bool,
}

fn cmd_stability(cli: &Cli) -> Outcome {
    let sc = load(cli)?;
    let st = &sc.config.stability;
    let coeffs = sc.coefficients.as_ref();
    let traj = simulate(&sc.operator, coeffs, &sc.scheme)?;
    let options = SlackOptions {
        c_h: st.c_h,
        resamples: st.resamples,
        seed: sc.config.seed,
    };
    let decay = match decay_fit(&traj, st.burn_in) {
        Ok(fit) => serde_json::to_value(fit).expect("serializable"),
        Err(e @ StabilityError::DegenerateFit { .. }) => json!({ "error": e.to_string() }),
        Err(e) => return Err(e.into()),
    };
    let mut pass = true;
    let mut hypothesis_checks = None;
    let mut bounds = None;
    let mut bound_curve: Option<Vec<f64>> = None;
    if let Some(spec) = &sc.lyapunov {
        match st.family {
            FamilyChoice::Exponential => {
                let report = exponential_bound_check(&traj, spec, coeffs, &options)?;
                pass = report.pass();
                hypothesis_checks = Some(serde_json::to_value(&report.gates).expect("serializable"));
                bound_curve = report.curve.as_ref().map(|c| c.bound.clone());
                bounds = Some(json!({ "outcome": report.outcome, "curve": report.curve }));
            }
            FamilyChoice::Ultimate => {
                let gates = hypothesis_gates(spec, coeffs, &traj)?;
                let constants = UltimateBound::from_spec(spec);
                let (outcome, curve) = match gate_failure(&gates) {
                    Some(failed) => (failed, None),
                    None => {
                        let curve = ultimate_boundedness_check(&traj, &constants, &options);
                        let o = if curve.pass { BoundOutcome::Pass } else { BoundOutcome::Fail };
                        (o, Some(curve))
                    }
                };
                pass = outcome == BoundOutcome::Pass;
                hypothesis_checks = Some(serde_json::to_value(&gates).expect("serializable"));
                bound_curve = curve.as_ref().map(|c| c.bound.clone());
                bounds = Some(json!({ "outcome": outcome, "constants": constants, "curve": curve }));
            }
            FamilyChoice::Pointwise => {
                let gates = hypothesis_gates(spec, coeffs, &traj)?;
                pass = gates.dissipativity.pass && gates.k_condition.pass && gates.comparison.pass;
                hypothesis_checks = Some(serde_json::to_value(&gates).expect("serializable"));
            }
            FamilyChoice::None => {}
        }
    }
    let trajs = simulate_seeds(&sc.operator, coeffs, &sc.scheme, &seeds(sc.config.seed, st.seeds))?;
    let as_fractions = serde_json::to_value(as_stability_estimate(&trajs, &st.eps, st.tail)?).expect("serializable");
    prepare_out(&cli.out)?;
    output::write_moments_csv(
        traj.grid(),
        &traj.second_moments(),
        bound_curve.as_deref(),
        output::create(&cli.out.join("moments.csv"))?,
    )?;
    let report = StabilityReport {
        scenario: sc.config.scenario.clone(),
        family: st.family,
        hypothesis_checks,
        decay,
        bounds,
        as_fractions,
        pass,
    };
    output::write_json(&report, &cli.out.join("stability.json"))?;
    if !pass {
        if let Some(b) = &report.bounds {
            eprintln!("stability: outcome {}", b["outcome"]);
        } else {
            eprintln!("stability: hypothesis check failed");
        }
    }
    Ok(pass)
}

fn cmd_operators(cli: &Cli) -> Outcome {
    let seed = cli.seed.unwrap_or(0);
    let lambdas = [0.1, 1.0, 10.0];
    let mut reports: Vec<AxiomReport> = Vec::new();
    for d in 1..=3 {
        for kind in catalog_samples(d) {
            let op = CatalogOperator::new(kind.clone()).map_err(|e| CliError::Usage(e.to_string()))?;
            let name = format!("{}[d={d}]", kind.name());
            reports.push(axiom_check(&op, &name, 1000, &lambdas, 3.0, seed, 1e-10).map_err(|e| CliError::Usage(e.to_string()))?);
        }
    }
    if cli.config.is_some() || !cli.overrides.is_empty() {
        let sc = load(cli)?;
        let name = format!("scenario:{}", sc.config.scenario);
        reports.push(axiom_check(&sc.operator, &name, 1000, &lambdas, 3.0, seed, 1e-10).map_err(|e| CliError::Usage(e.to_string()))?);
    }
    let pass = reports.iter().all(|r| r.pass);
    prepare_out(&cli.out)?;
    output::write_json(&json!({ "seed": seed, "pass": pass, "operators": reports }), &cli.out.join("operators.json"))?;
    for r in reports.iter().filter(|r| !r.pass) {
        eprintln!("operators-test: {} failed", r.operator);
    }
    Ok(pass)
}

fn cmd_scenarios() -> Outcome {
    for p in scenario::PRESETS {
        println!("{:<28}{}", p.name, p.description);
    }
    Ok(true)
}

fn cmd_validate(cli: &Cli) -> Outcome {
    let config = scenario::load(cli.config.as_deref(), &cli.overrides, cli.seed)?;
    let text = scenario::normalized(&config);
    prepare_out(&cli.out)?;
    fs::write(cli.out.join("normalized.toml"), &text)?;
    print!("{text}");
    Ok(true)
}

fn dispatch(cli: &Cli) -> Outcome {
    match cli.command {
        Command::Simulate => cmd_simulate(cli),
        Command::Picard => cmd_picard(cli),
        Command::ItoCheck => cmd_ito(cli),
        Command::Stability => cmd_stability(cli),
        Command::OperatorsTest => cmd_operators(cli),
        Command::Scenarios => cmd_scenarios(),
        Command::Validate => cmd_validate(cli),
    }
}

/// Runs a parsed command and returns its exit status.
pub fn run(cli: &Cli) -> u8 {
    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads: must be at least 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(CliError::Usage(format!("--threads: {e}"))),
        },
        None => dispatch(cli),
    };
    match result {
        Ok(true) => EXIT_OK,
        Ok(false) => EXIT_CHECK_FAILED,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    ExitCode::from(run(&cli))
}
