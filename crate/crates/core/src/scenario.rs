//! Named presets and the configuration schema.
//!
//! A configuration is a TOML tree. Loading merges, in order: the built-in
//! defaults, the defaults of the named scenario, the user file and `--set`
//! overrides. A table that carries a different `kind` than the one below it
//! replaces it instead of being merged. The result is validated and can be
//! written back as a normalized, fully-defaulted document; normalizing that
//! document again reproduces it byte for byte.
//!
//! Defaults table:
//!
//! | key | default |
//! |-----|---------|
//! | `seed` | 0 |
//! | `scheme.h` | 0.01 |
//! | `scheme.particles` | 1000 |
//! | `scheme.horizon` | 1.0 |
//! | `scheme.blowup_threshold` | 1e8 |
//! | `picard.tol` | 1e-4 |
//! | `picard.max_iter` | 50 |
//! | `ito.seeds` | 1 |
//! | `ito.start_fraction`, `ito.end_fraction` | 0, 1 |
//! | `stability.burn_in` | 0.2 |
//! | `stability.resamples` | 200 |
//! | `stability.seeds` | 64 |
//! | `stability.eps` | [1e-3, 1e-2, 1e-1] |
//! | `stability.tail` | 0.5 |
//! | `stability.c_h` | 0 |
//!
//! `initial`, `operator`, `coefficients` and the Lyapunov constants come from
//! the scenario.

use std::fmt;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::calculus::{
    mixed, BoundedComposition, Constant, Linear, LinearProduct, SecondMomentFunctional, SquaredNorm, TestFunction,
};
use crate::operators::{distance, CatalogOperator, MonotoneOperator, OperatorKind};
use crate::solver::{Coefficients, ConstantDrift, InitialCondition, MeanFieldLinear, SchemeConfig, DEFAULT_BLOWUP_THRESHOLD};
use crate::stability::{Comparison, LyapunovSpec};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigIssue {
    pub key: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigErrors(pub Vec<ConfigIssue>);

impl ConfigErrors {
    fn single(key: impl Into<String>, message: impl Into<String>) -> Self {
        Self(vec![ConfigIssue {
            key: key.into(),
            message: message.into(),
        }])
    }
}

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.0.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{}: {}", issue.key, issue.message)?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigErrors {}

/// Coefficient presets. Each one also names a default operator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CoefficientPreset {
    /// `b = -a x + b̄ mean(μ)`, `σ = s I`; operator zero.
    MeanFieldLinear { dim: usize, a: f64, mean_coupling: f64, s: f64 },
    /// `b ≡ c`, `σ ≡ 0` on the half-line `[0, ∞)`.
    ReflectedDrift { c: f64 },
    /// `b = -θ x`, `σ = s I`, reflected in the centered ball of the given radius.
    ReflectedOuBall { dim: usize, theta: f64, radius: f64, s: f64 },
    /// `b ≡ σ ≡ 0` with `A = ∂(w|·|)`.
    SoftThresholdFlow { w: f64 },
    /// `b ≡ drift`, `σ ≡ 0`; operator zero.
    ConstantDrift { drift: Vec<f64> },
}

impl CoefficientPreset {
    pub fn dim(&self) -> usize {
        match self {
            CoefficientPreset::MeanFieldLinear { dim, .. } | CoefficientPreset::ReflectedOuBall { dim, .. } => *dim,
            CoefficientPreset::ReflectedDrift { .. } | CoefficientPreset::SoftThresholdFlow { .. } => 1,
            CoefficientPreset::ConstantDrift { drift } => drift.len(),
        }
    }

    pub fn build(&self) -> Arc<dyn Coefficients> {
        match self {
            CoefficientPreset::MeanFieldLinear {
                dim,
                a,
                mean_coupling,
                s,
            } => Arc::new(MeanFieldLinear::new(*dim, *a, *mean_coupling, *s)),
            CoefficientPreset::ReflectedDrift { c } => Arc::new(ConstantDrift::new(vec![*c])),
            CoefficientPreset::ReflectedOuBall { dim, theta, s, .. } => Arc::new(MeanFieldLinear::new(*dim, *theta, 0.0, *s)),
            CoefficientPreset::SoftThresholdFlow { .. } => Arc::new(ConstantDrift::zero(1)),
            CoefficientPreset::ConstantDrift { drift } => Arc::new(ConstantDrift::new(drift.clone())),
        }
    }

    pub fn default_operator(&self) -> OperatorKind {
        match self {
            CoefficientPreset::MeanFieldLinear { dim, .. } => OperatorKind::Zero { dim: *dim },
            CoefficientPreset::ConstantDrift { drift } => OperatorKind::Zero { dim: drift.len() },
            CoefficientPreset::ReflectedDrift { .. } => OperatorKind::NormalConeBox {
                lo: vec![0.0],
                hi: vec![f64::INFINITY],
            },
            CoefficientPreset::ReflectedOuBall { dim, radius, .. } => OperatorKind::NormalConeBall {
                center: vec![0.0; *dim],
                radius: *radius,
            },
            CoefficientPreset::SoftThresholdFlow { w } => OperatorKind::SubdifferentialAbs { weights: vec![*w] },
        }
    }

    fn issues(&self) -> Vec<ConfigIssue> {
        let mut out = Vec::new();
        let mut need = |ok: bool, key: &str, message: &str| {
            if !ok {
                out.push(ConfigIssue {
                    key: format!("coefficients.{key}"),
                    message: message.into(),
                });
            }
        };
        match self {
            CoefficientPreset::MeanFieldLinear {
                dim,
                a,
                mean_coupling,
                s,
            } => {
                need(*dim >= 1, "dim", "must be at least 1");
                need(a.is_finite() && *a > 0.0, "a", "must be positive");
                need(mean_coupling.is_finite(), "mean_coupling", "must be finite");
                need(s.is_finite(), "s", "must be finite");
            }
            CoefficientPreset::ReflectedDrift { c } => need(c.is_finite(), "c", "must be finite"),
            CoefficientPreset::ReflectedOuBall { dim, theta, radius, s } => {
                need(*dim >= 1, "dim", "must be at least 1");
                need(theta.is_finite() && *theta > 0.0, "theta", "must be positive");
                need(radius.is_finite() && *radius > 0.0, "radius", "must be positive");
                need(s.is_finite(), "s", "must be finite");
            }
            CoefficientPreset::SoftThresholdFlow { w } => need(w.is_finite() && *w >= 0.0, "w", "must be nonnegative"),
            CoefficientPreset::ConstantDrift { drift } => {
                need(!drift.is_empty(), "drift", "must be nonempty");
                need(drift.iter().all(|c| c.is_finite()), "drift", "must be finite");
            }
        }
        out
    }
}

/// Test-function presets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum FunctionChoice {
    SquaredNorm,
    SecondMoment,
    Mixed { lambda: f64 },
    Linear { c: Vec<f64>, e: Vec<f64> },
    LinearProduct { c: Vec<f64>, e: Vec<f64> },
    Constant { value: f64 },
    BoundedComposition,
}

impl FunctionChoice {
    pub fn build(&self, dim: usize) -> Result<Arc<dyn TestFunction>, String> {
        let check = |c: &Vec<f64>, e: &Vec<f64>| {
            if c.len() != dim || e.len() != dim {
                Err(format!("c and e must have length {dim}"))
            } else {
                Ok(())
            }
        };
        Ok(match self {
            FunctionChoice::SquaredNorm => Arc::new(SquaredNorm { dim }),
            FunctionChoice::SecondMoment => Arc::new(SecondMomentFunctional { dim }),
            FunctionChoice::Mixed { lambda } => Arc::new(mixed(dim, *lambda)),
            FunctionChoice::Linear { c, e } => {
                check(c, e)?;
                Arc::new(Linear { c: c.clone(), e: e.clone() })
            }
            FunctionChoice::LinearProduct { c, e } => {
                check(c, e)?;
                Arc::new(LinearProduct { c: c.clone(), e: e.clone() })
            }
            FunctionChoice::Constant { value } => Arc::new(Constant { dim, value: *value }),
            FunctionChoice::BoundedComposition => Arc::new(BoundedComposition { dim }),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FamilyChoice {
    Exponential,
    Ultimate,
    Pointwise,
    /// No Lyapunov hypotheses; only empirical stability statistics.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PowerLaw {
    pub coefficient: f64,
    pub exponent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchemeSection {
    pub h: f64,
    pub particles: usize,
    pub horizon: f64,
    pub blowup_threshold: f64,
}

impl Default for SchemeSection {
    fn default() -> Self {
        Self {
            h: 0.01,
            particles: 1000,
            horizon: 1.0,
            blowup_threshold: DEFAULT_BLOWUP_THRESHOLD,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PicardSection {
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for PicardSection {
    fn default() -> Self {
        Self { tol: 1e-4, max_iter: 50 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ItoSection {
    /// Number of consecutive seeds starting at `seed`.
    pub seeds: usize,
    pub start_fraction: f64,
    pub end_fraction: f64,
    pub function: FunctionChoice,
}

impl Default for ItoSection {
    fn default() -> Self {
        Self {
            seeds: 1,
            start_fraction: 0.0,
            end_fraction: 1.0,
            function: FunctionChoice::SquaredNorm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StabilitySection {
    pub family: FamilyChoice,
    pub alpha: f64,
    pub a1: f64,
    pub a2: f64,
    pub m1: f64,
    pub m2: f64,
    pub m3: f64,
    pub c_h: f64,
    pub burn_in: f64,
    pub resamples: usize,
    pub seeds: usize,
    pub eps: Vec<f64>,
    pub tail: f64,
    pub function: FunctionChoice,
    pub gamma1: PowerLaw,
    pub gamma2: PowerLaw,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            family: FamilyChoice::None,
            alpha: 1.0,
            a1: 1.0,
            a2: 1.0,
            m1: 0.0,
            m2: 0.0,
            m3: 0.0,
            c_h: 0.0,
            burn_in: 0.2,
            resamples: 200,
            seeds: 64,
            eps: vec![1e-3, 1e-2, 1e-1],
            tail: 0.5,
            function: FunctionChoice::SquaredNorm,
            gamma1: PowerLaw {
                coefficient: 1.0,
                exponent: 2.0,
            },
            gamma2: PowerLaw {
                coefficient: 1.0,
                exponent: 2.0,
            },
        }
    }
}

/// Fully resolved configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Config {
    pub scenario: String,
    pub seed: u64,
    pub scheme: SchemeSection,
    pub initial: InitialCondition,
    pub operator: OperatorKind,
    pub coefficients: CoefficientPreset,
    pub picard: PicardSection,
    pub ito: ItoSection,
    pub stability: StabilitySection,
}

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    build: fn() -> Config,
}

impl Preset {
    pub fn defaults(&self) -> Config {
        (self.build)()
    }
}

fn base(name: &str, coefficients: CoefficientPreset, x0: Vec<f64>) -> Config {
    Config {
        scenario: name.into(),
        seed: 0,
        scheme: SchemeSection::default(),
        initial: InitialCondition::Point { point: x0 },
        operator: coefficients.default_operator(),
        coefficients,
        picard: PicardSection::default(),
        ito: ItoSection::default(),
        stability: StabilitySection::default(),
    }
}

fn mean_field_ou() -> Config {
    let s = 0.3;
    let mut c = base(
        "mean-field-ou",
        CoefficientPreset::MeanFieldLinear {
            dim: 1,
            a: 1.0,
            mean_coupling: 0.5,
            s,
        },
        vec![1.0],
    );
    c.ito.function = FunctionChoice::Mixed { lambda: 1.0 };
    // ∫(L_μ|x|² + |x|²)dμ = -E|X|² + (E X)² + s² ≤ s².
    c.stability = StabilitySection {
        family: FamilyChoice::Ultimate,
        alpha: 1.0,
        m1: s * s,
        c_h: 1.0,
        ..StabilitySection::default()
    };
    c
}

fn reflected_drift() -> Config {
    let mut c = base("reflected-drift", CoefficientPreset::ReflectedDrift { c: -1.0 }, vec![1.0]);
    c.ito.function = FunctionChoice::Linear {
        c: vec![1.0],
        e: vec![0.0],
    };
    c
}

fn reflected_ou_ball() -> Config {
    let (theta, s, dim) = (1.0, 0.5, 2);
    let mut c = base(
        "reflected-ou-ball",
        CoefficientPreset::ReflectedOuBall {
            dim,
            theta,
            radius: 1.0,
            s,
        },
        vec![0.5, 0.0],
    );
    // L|x|² = -2θ|x|² + s² d, and ⟨2X, ΔK⟩ ≥ 0 on the centered ball.
    c.stability = StabilitySection {
        family: FamilyChoice::Ultimate,
        alpha: 2.0 * theta,
        m1: s * s * dim as f64,
        c_h: theta,
        ..StabilitySection::default()
    };
    c
}

fn soft_threshold_flow() -> Config {
    let mut c = base("soft-threshold-flow", CoefficientPreset::SoftThresholdFlow { w: 1.0 }, vec![2.0]);
    c.scheme.horizon = 4.0;
    c.scheme.particles = 1;
    c
}

fn deterministic_contraction() -> Config {
    let mut c = base(
        "deterministic-contraction",
        CoefficientPreset::MeanFieldLinear {
            dim: 1,
            a: 1.0,
            mean_coupling: 0.0,
            s: 0.0,
        },
        vec![1.0],
    );
    c.scheme.particles = 1;
    c.stability = StabilitySection {
        family: FamilyChoice::Exponential,
        alpha: 2.0,
        ..StabilitySection::default()
    };
    c
}

fn noisy_ou() -> Config {
    let (a, s) = (1.0, 0.5);
    let mut c = base(
        "noisy-ou",
        CoefficientPreset::MeanFieldLinear {
            dim: 1,
            a,
            mean_coupling: 0.0,
            s,
        },
        vec![1.0],
    );
    c.stability = StabilitySection {
        family: FamilyChoice::Ultimate,
        alpha: 2.0 * a,
        m1: s * s,
        c_h: a,
        ..StabilitySection::default()
    };
    c
}

fn null() -> Config {
    let mut c = base("null", CoefficientPreset::ConstantDrift { drift: vec![0.0] }, vec![1.0]);
    c.scheme.particles = 1;
    c
}

pub const PRESETS: &[Preset] = &[
    Preset {
        name: "mean-field-ou",
        description: "b = -x + 0.5 mean(μ), σ = 0.3, no constraint, x0 = 1",
        build: mean_field_ou,
    },
    Preset {
        name: "reflected-drift",
        description: "b = -1 reflected at 0, x0 = 1; X_t = max(1 - t, 0)",
        build: reflected_drift,
    },
    Preset {
        name: "reflected-ou-ball",
        description: "b = -x, σ = 0.5 I in the unit disc, x0 = (0.5, 0)",
        build: reflected_ou_ball,
    },
    Preset {
        name: "soft-threshold-flow",
        description: "A = ∂|x|, b = σ = 0, x0 = 2; X_t = max(2 - t, 0)",
        build: soft_threshold_flow,
    },
    Preset {
        name: "deterministic-contraction",
        description: "b = -x, σ = 0, x0 = 1; X_t = e^{-t}",
        build: deterministic_contraction,
    },
    Preset {
        name: "noisy-ou",
        description: "b = -x, σ = 0.5, x0 = 1; m(t) → s²/(2a)",
        build: noisy_ou,
    },
    Preset {
        name: "null",
        description: "b = σ = 0, A = 0, x0 = 1",
        build: null,
    },
];

pub fn preset(name: &str) -> Option<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name)
}

/// Parses `value` as a TOML value, falling back to a bare string.
fn parse_override_value(value: &str) -> toml::Value {
    match format!("v = {value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key present"),
        Err(_) => toml::Value::String(value.to_string()),
    }
}

/// Applies `key.path=value` to a TOML tree.
pub fn apply_override(table: &mut toml::Table, assignment: &str) -> Result<(), ConfigErrors> {
    let Some((path, value)) = assignment.split_once('=') else {
        return Err(ConfigErrors::single(assignment, "override must have the form key=value"));
    };
    let path = path.trim();
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(ConfigErrors::single(path, "empty key segment"));
    }
    let mut node = table;
    for k in &keys[..keys.len() - 1] {
        let entry = node
            .entry(k.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = match entry {
            toml::Value::Table(t) => t,
            _ => return Err(ConfigErrors::single(path, format!("`{k}` is not a table"))),
        };
    }
    node.insert(keys[keys.len() - 1].to_string(), parse_override_value(value.trim()));
    Ok(())
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                let replaces = matches!((b.get("kind"), o.get("kind")), (Some(x), Some(y)) if x != y);
                if replaces {
                    base.insert(k, toml::Value::Table(o));
                } else {
                    merge(b, o);
                }
            }
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

const SECTIONS: [&str; 9] = [
    "scenario",
    "seed",
    "scheme",
    "initial",
    "operator",
    "coefficients",
    "picard",
    "ito",
    "stability",
];

fn section<T: serde::de::DeserializeOwned>(table: &toml::Table, key: &str, issues: &mut Vec<ConfigIssue>) -> Option<T> {
    let value = table.get(key)?.clone();
    match value.try_into::<T>() {
        Ok(v) => Some(v),
        Err(e) => {
            issues.push(ConfigIssue {
                key: key.into(),
                message: e.to_string().trim().replace('\n', " "),
            });
            None
        }
    }
}

/// Resolves a user tree against the defaults of its scenario.
pub fn resolve_table(user: toml::Table) -> Result<Config, ConfigErrors> {
    let name = match user.get("scenario") {
        Some(toml::Value::String(s)) => s.clone(),
        Some(_) => return Err(ConfigErrors::single("scenario", "must be a string")),
        None => return Err(ConfigErrors::single("scenario", "missing; run `scenarios` for the list")),
    };
    let Some(preset) = preset(&name) else {
        let known: Vec<&str> = PRESETS.iter().map(|p| p.name).collect();
        return Err(ConfigErrors::single("scenario", format!("unknown scenario `{name}`; known: {}", known.join(", "))));
    };
    let mut merged = match toml::Value::try_from(preset.defaults()) {
        Ok(toml::Value::Table(t)) => t,
        _ => unreachable!("presets serialize to tables"),
    };
    let mut issues: Vec<ConfigIssue> = user
        .keys()
        .filter(|k| !SECTIONS.contains(&k.as_str()))
        .map(|k| ConfigIssue {
            key: k.clone(),
            message: "unknown key".into(),
        })
        .collect();
    merge(&mut merged, user);
    let seed = section::<u64>(&merged, "seed", &mut issues);
    let scheme = section::<SchemeSection>(&merged, "scheme", &mut issues);
    let initial = section::<InitialCondition>(&merged, "initial", &mut issues);
    let operator = section::<OperatorKind>(&merged, "operator", &mut issues);
    let coefficients = section::<CoefficientPreset>(&merged, "coefficients", &mut issues);
    let picard = section::<PicardSection>(&merged, "picard", &mut issues);
    let ito = section::<ItoSection>(&merged, "ito", &mut issues);
    let stability = section::<StabilitySection>(&merged, "stability", &mut issues);
    match (seed, scheme, initial, operator, coefficients, picard, ito, stability) {
        (Some(seed), Some(scheme), Some(initial), Some(operator), Some(coefficients), Some(picard), Some(ito), Some(stability))
            if issues.is_empty() =>
        {
            let config = Config {
                scenario: name,
                seed,
                scheme,
                initial,
                operator,
                coefficients,
                picard,
                ito,
                stability,
            };
            let semantic = semantic_issues(&config);
            if semantic.is_empty() {
                Ok(config)
            } else {
                Err(ConfigErrors(semantic))
            }
        }
        _ => Err(ConfigErrors(issues)),
    }
}

/// Reads an optional config file, applies overrides and an optional seed, and resolves.
pub fn load(path: Option<&Path>, overrides: &[String], seed: Option<u64>) -> Result<Config, ConfigErrors> {
    let mut table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| ConfigErrors::single("config", format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| ConfigErrors::single("config", e.to_string().trim().replace('\n', " ")))?
        }
        None => toml::Table::new(),
    };
    for o in overrides {
        apply_override(&mut table, o)?;
    }
    if let Some(s) = seed {
        table.insert("seed".into(), toml::Value::Integer(s as i64));
    }
    resolve_table(table)
}

/// Fully-defaulted TOML text of a resolved configuration.
pub fn normalized(config: &Config) -> String {
    toml::to_string(config).expect("configuration serializes")
}

/// Parses TOML text and returns its normalized form.
pub fn validate_config_text(text: &str) -> Result<String, ConfigErrors> {
    let table = text
        .parse::<toml::Table>()
        .map_err(|e| ConfigErrors::single("config", e.to_string().trim().replace('\n', " ")))?;
    resolve_table(table).map(|c| normalized(&c))
}

fn semantic_issues(config: &Config) -> Vec<ConfigIssue> {
    let mut issues = Vec::new();
    let mut push = |key: &str, message: String| {
        issues.push(ConfigIssue {
            key: key.into(),
            message,
        })
    };
    let scheme = config.scheme_config();
    if let Err(crate::solver::SolverError::InvalidConfig { key, message }) = scheme.validate() {
        push(key, message);
    }
    for issue in config.coefficients.issues() {
        push(&issue.key, issue.message);
    }
    let d = config.coefficients.dim();
    let op = match CatalogOperator::new(config.operator.clone()) {
        Ok(op) => Some(op),
        Err(e) => {
            push("operator", e.to_string());
            None
        }
    };
    if config.operator.dim() != d {
        push("operator", format!("dimension {} does not match coefficients dimension {d}", config.operator.dim()));
    }
    if config.initial.dim() != d {
        push("initial", format!("dimension {} does not match coefficients dimension {d}", config.initial.dim()));
    } else if let (Some(op), InitialCondition::Point { point }) = (&op, &config.initial) {
        let mut proj = vec![0.0; d];
        op.project_domain_into(point, &mut proj);
        if distance(point, &proj) > 1e-12 {
            push("initial.point", "lies outside the closure of the operator domain".into());
        }
    }
    if !(config.picard.tol > 0.0) {
        push("picard.tol", "must be positive".into());
    }
    if config.picard.max_iter == 0 {
        push("picard.max_iter", "must be at least 1".into());
    }
    let ito = &config.ito;
    if ito.seeds == 0 {
        push("ito.seeds", "must be at least 1".into());
    }
    if !(0.0 <= ito.start_fraction && ito.start_fraction < ito.end_fraction && ito.end_fraction <= 1.0) {
        push("ito.start_fraction", "require 0 <= start_fraction < end_fraction <= 1".into());
    }
    if let Err(m) = ito.function.build(d) {
        push("ito.function", m);
    }
    let st = &config.stability;
    if let Err(m) = st.function.build(d) {
        push("stability.function", m);
    }
    if st.family != FamilyChoice::None {
        if let Some(spec) = config.lyapunov_spec() {
            if let Err(e) = spec.validate() {
                push("stability", e.to_string());
            }
        }
    }
    if !(0.0..1.0).contains(&st.burn_in) {
        push("stability.burn_in", "must lie in [0, 1)".into());
    }
    if !(0.0..=1.0).contains(&st.tail) {
        push("stability.tail", "must lie in [0, 1]".into());
    }
    if st.seeds == 0 {
        push("stability.seeds", "must be at least 1".into());
    }
    if st.eps.is_empty() || st.eps.iter().any(|e| !(*e > 0.0)) {
        push("stability.eps", "must be a nonempty list of positive levels".into());
    }
    if !(st.c_h >= 0.0) {
        push("stability.c_h", "must be nonnegative".into());
    }
    issues
}

impl Config {
    pub fn scheme_config(&self) -> SchemeConfig {
        SchemeConfig {
            h: self.scheme.h,
            particles: self.scheme.particles,
            horizon: self.scheme.horizon,
            seed: self.seed,
            initial: self.initial.clone(),
            blowup_threshold: self.scheme.blowup_threshold,
        }
    }

    pub fn lyapunov_spec(&self) -> Option<LyapunovSpec> {
        let st = &self.stability;
        let f = st.function.build(self.coefficients.dim()).ok()?;
        let power = |p: PowerLaw| Comparison::Power {
            coefficient: p.coefficient,
            exponent: p.exponent,
        };
        Some(match st.family {
            FamilyChoice::None => return None,
            FamilyChoice::Exponential => LyapunovSpec::exponential(f, st.alpha, st.a1, st.a2),
            FamilyChoice::Ultimate => LyapunovSpec::ultimate(f, st.alpha, st.a1, st.a2, st.m1, st.m2, st.m3),
            FamilyChoice::Pointwise => LyapunovSpec::pointwise(f, st.alpha, power(st.gamma1), power(st.gamma2)),
        })
    }
}

/// A resolved configuration with its runtime objects.
pub struct Scenario {
    pub config: Config,
    pub operator: CatalogOperator,
    pub coefficients: Arc<dyn Coefficients>,
    pub scheme: SchemeConfig,
    pub lyapunov: Option<LyapunovSpec>,
    pub ito_function: Arc<dyn TestFunction>,
}

impl Scenario {
    pub fn from_config(config: Config) -> Result<Self, ConfigErrors> {
        let issues = semantic_issues(&config);
        if !issues.is_empty() {
            return Err(ConfigErrors(issues));
        }
        let operator = CatalogOperator::new(config.operator.clone()).map_err(|e| ConfigErrors::single("operator", e.to_string()))?;
        let ito_function = config
            .ito
            .function
            .build(config.coefficients.dim())
            .map_err(|m| ConfigErrors::single("ito.function", m))?;
        Ok(Self {
            coefficients: config.coefficients.build(),
            scheme: config.scheme_config(),
            lyapunov: config.lyapunov_spec(),
            operator,
            ito_function,
            config,
        })
    }

    /// Built-in scenario with its defaults.
    pub fn named(name: &str) -> Result<Self, ConfigErrors> {
        let mut t = toml::Table::new();
        t.insert("scenario".into(), toml::Value::String(name.into()));
        Self::from_config(resolve_table(t)?)
    }

    pub fn oracle(&self) -> Option<Oracle> {
        match (&self.config.coefficients, &self.config.initial) {
            (CoefficientPreset::ReflectedDrift { c }, InitialCondition::Point { point }) if *c <= 0.0 => {
                Some(Oracle::ReflectedDrift { x0: point[0], c: *c })
            }
            (CoefficientPreset::SoftThresholdFlow { w }, InitialCondition::Point { point }) => {
                Some(Oracle::ReflectedDrift {
                    x0: point[0].abs(),
                    c: -w,
                })
            }
            (
                CoefficientPreset::MeanFieldLinear {
                    dim: 1,
                    a,
                    mean_coupling,
                    s,
                },
                InitialCondition::Point { point },
            ) => Some(Oracle::MomentOde {
                a: *a,
                mean_coupling: *mean_coupling,
                s: *s,
                x0: point[0],
            }),
            _ => None,
        }
    }
}

/// Reference solutions attached to some presets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Oracle {
    /// `|X_t| = max(x₀ + c t, 0)` for `c ≤ 0`.
    ReflectedDrift { x0: f64, c: f64 },
    /// `m₁' = (b̄ - a) m₁`, `m₂' = -2a m₂ + 2b̄ m₁² + s²` from `X₀ = x₀`.
    MomentOde { a: f64, mean_coupling: f64, s: f64, x0: f64 },
}

impl Oracle {
    /// `(E X_t, E|X_t|²)` for moment oracles, `(X_t, X_t²)` for path oracles.
    pub fn moments(&self, t: f64) -> (f64, f64) {
        match *self {
            Oracle::ReflectedDrift { x0, c } => {
                let x = (x0 + c * t).max(0.0);
                (x, x * x)
            }
            Oracle::MomentOde {
                a,
                mean_coupling,
                s,
                x0,
            } => {
                // m₁ is explicit; m₂ solves a linear ODE with that forcing.
                let steps = ((t / 1e-3).ceil() as usize).max(1);
                let dt = t / steps as f64;
                let rate = mean_coupling - a;
                let m1 = |u: f64| x0 * (rate * u).exp();
                let f = |u: f64, m2: f64| -2.0 * a * m2 + 2.0 * mean_coupling * m1(u).powi(2) + s * s;
                let mut m2 = x0 * x0;
                for k in 0..steps {
                    let u = k as f64 * dt;
                    let k1 = f(u, m2);
                    let k2 = f(u + 0.5 * dt, m2 + 0.5 * dt * k1);
                    let k3 = f(u + 0.5 * dt, m2 + 0.5 * dt * k2);
                    let k4 = f(u + dt, m2 + dt * k3);
                    m2 += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
                }
                (m1(t), m2)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_documented_defaults() {
        let text = validate_config_text("scenario = \"reflected-drift\"\nseed = 7\n").unwrap();
        let config: Config = toml::from_str(&text).unwrap();
        assert_eq!(config.scheme.h, 0.01);
        assert_eq!(config.scheme.particles, 1000);
        assert_eq!(config.scheme.horizon, 1.0);
        assert_eq!(config.seed, 7);
        assert_eq!(validate_config_text(&text).unwrap(), text);
    }

    #[test]
    fn every_preset_normalizes_idempotently() {
        for p in PRESETS {
            let text = validate_config_text(&format!("scenario = \"{}\"", p.name)).unwrap();
            assert_eq!(validate_config_text(&text).unwrap(), text, "{}", p.name);
            Scenario::named(p.name).unwrap();
        }
    }

    #[test]
    fn errors_name_their_keys() {
        let err = validate_config_text("scenario = \"null\"\n[scheme]\nh = 0.0\n").unwrap_err();
        assert_eq!(err.0[0].key, "scheme.h");
        let err = validate_config_text("scenario = \"null\"\n[scheme]\nh = 0.3\n").unwrap_err();
        assert_eq!(err.0[0].key, "scheme.horizon");
        assert!(err.0[0].message.contains("grid exactness"));
        let err = validate_config_text("scenario = \"reflected-ou-ball\"\nbogus = 1\n[coefficients]\nradius = -1.0\n").unwrap_err();
        let keys: Vec<&str> = err.0.iter().map(|i| i.key.as_str()).collect();
        assert!(keys.contains(&"bogus"), "{keys:?}");
        let err = validate_config_text("scenario = \"reflected-ou-ball\"\n[coefficients]\nradius = -1.0\n").unwrap_err();
        assert!(err.0.iter().any(|i| i.key == "coefficients.radius"), "{err}");
        assert!(validate_config_text("scenario = \"nope\"").unwrap_err().0[0].key == "scenario");
    }

    #[test]
    fn overrides_and_kind_replacement() {
        let mut t = toml::Table::new();
        apply_override(&mut t, "scenario=noisy-ou").unwrap();
        apply_override(&mut t, "scheme.h=0.02").unwrap();
        apply_override(&mut t, "stability.alpha=3").unwrap();
        let c = resolve_table(t).unwrap();
        assert_eq!(c.scheme.h, 0.02);
        assert_eq!(c.stability.alpha, 3.0);

        let mut t = toml::Table::new();
        apply_override(&mut t, "scenario=noisy-ou").unwrap();
        apply_override(&mut t, "coefficients.kind=\"constant-drift\"").unwrap();
        apply_override(&mut t, "coefficients.drift=[0.5]").unwrap();
        let c = resolve_table(t).unwrap();
        assert_eq!(c.coefficients, CoefficientPreset::ConstantDrift { drift: vec![0.5] });
    }

    #[test]
    fn moment_oracle_has_the_stationary_limit() {
        let o = Oracle::MomentOde {
            a: 1.0,
            mean_coupling: 0.0,
            s: 0.5,
            x0: 1.0,
        };
        let (m1, m2) = o.moments(20.0);
        assert!(m1.abs() < 1e-8 && (m2 - 0.125).abs() < 1e-8);
    }
}
