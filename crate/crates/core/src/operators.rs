//! Maximal monotone operators represented through their resolvents.
//!
//! Set-valued operators are never materialized. Every operator exposes
//! `J_λ = (I + λA)^{-1}` and a projection onto the closure of its domain;
//! catalog operators additionally decide membership `y ∈ A(x)` in closed form
//! and carry an interior point with the constants of the interior variation
//! bound `∫⟨X - a, dK⟩ ≥ γ₁|K| - γ₂∫|X - a| dr - γ₃ (t - s)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OperatorError {
    #[error("non-finite component at index {index}")]
    NonFinite { index: usize },
    #[error("degenerate convex set: {0}")]
    DegenerateSet(String),
    #[error("resolvent parameter must be positive and finite, got {0}")]
    NonPositiveLambda(f64),
    #[error("dimension mismatch: operator has dimension {expected}, input has {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid operator parameters: {0}")]
    InvalidParameters(String),
    #[error("length mismatch: {what} has {got} entries, expected {expected}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("operator carries no interior point / variation constants")]
    MissingMetadata,
    #[error("probe {index} is not in the graph of the operator")]
    InvalidProbe { index: usize },
}

pub type Result<T> = std::result::Result<T, OperatorError>;

/// Interior point `a ∈ Int(D(A))` together with the constants `γ₁, γ₂, γ₃`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorMetadata {
    pub point: Vec<f64>,
    pub gamma1: f64,
    pub gamma2: f64,
    pub gamma3: f64,
}

/// A maximal monotone operator on `ℝ^d`, accessed through its resolvent.
///
/// `resolvent_into` and `project_domain_into` may assume a finite input of the
/// right length and `lambda > 0`; use [`resolve`] for the checked entry point.
pub trait MonotoneOperator: Send + Sync {
    fn dim(&self) -> usize;

    fn resolvent_into(&self, x: &[f64], lambda: f64, out: &mut [f64]);

    /// Metric projection onto `cl(D(A))`.
    fn project_domain_into(&self, x: &[f64], out: &mut [f64]);

    /// Decides `y ∈ A(x)` when a closed form is available.
    fn contains(&self, _x: &[f64], _y: &[f64]) -> Option<bool> {
        None
    }

    fn interior(&self) -> Option<&InteriorMetadata> {
        None
    }

    /// True when the resolvent is a projection (normal cones), hence independent of λ.
    fn is_projection(&self) -> bool {
        false
    }

    /// True when `D(A) = ℝ^d`.
    fn has_full_domain(&self) -> bool {
        false
    }
}

/// Catalog of concrete operators with closed-form resolvents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OperatorKind {
    /// `A ≡ 0` on `ℝ^d`.
    Zero { dim: usize },
    /// Normal cone of the closed ball `B(center, radius)`.
    NormalConeBall { center: Vec<f64>, radius: f64 },
    /// Normal cone of the box `∏[lo_i, hi_i]`; infinite bounds allowed.
    NormalConeBox { lo: Vec<f64>, hi: Vec<f64> },
    /// Normal cone of the half-space `{x : ⟨normal, x⟩ ≤ offset}`.
    NormalConeHalfspace { normal: Vec<f64>, offset: f64 },
    /// Subdifferential of `x ↦ Σ w_i |x_i|`.
    SubdifferentialAbs { weights: Vec<f64> },
    /// Gradient of `x ↦ ½ xᵀMx` for symmetric positive semidefinite `M` (rows).
    SubdifferentialQuadratic { matrix: Vec<Vec<f64>> },
    /// `x ↦ Mx` with `M + Mᵀ` positive semidefinite (rows).
    LinearMonotone { matrix: Vec<Vec<f64>> },
}

impl OperatorKind {
    pub fn dim(&self) -> usize {
        match self {
            OperatorKind::Zero { dim } => *dim,
            OperatorKind::NormalConeBall { center, .. } => center.len(),
            OperatorKind::NormalConeBox { lo, .. } => lo.len(),
            OperatorKind::NormalConeHalfspace { normal, .. } => normal.len(),
            OperatorKind::SubdifferentialAbs { weights } => weights.len(),
            OperatorKind::SubdifferentialQuadratic { matrix }
            | OperatorKind::LinearMonotone { matrix } => matrix.len(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            OperatorKind::Zero { .. } => "zero",
            OperatorKind::NormalConeBall { .. } => "normal-cone-ball",
            OperatorKind::NormalConeBox { .. } => "normal-cone-box",
            OperatorKind::NormalConeHalfspace { .. } => "normal-cone-halfspace",
            OperatorKind::SubdifferentialAbs { .. } => "subdifferential-abs",
            OperatorKind::SubdifferentialQuadratic { .. } => "subdifferential-quadratic",
            OperatorKind::LinearMonotone { .. } => "linear-monotone",
        }
    }

    pub fn is_normal_cone(&self) -> bool {
        matches!(
            self,
            OperatorKind::NormalConeBall { .. }
                | OperatorKind::NormalConeBox { .. }
                | OperatorKind::NormalConeHalfspace { .. }
        )
    }
}

/// Validated catalog operator.
#[derive(Debug, Clone)]
pub struct CatalogOperator {
    kind: OperatorKind,
    dim: usize,
    matrix: Option<DMatrix<f64>>,
    interior: Option<InteriorMetadata>,
}

impl CatalogOperator {
    pub fn new(kind: OperatorKind) -> Result<Self> {
        let dim = kind.dim();
        if dim == 0 {
            return Err(OperatorError::InvalidParameters(
                "dimension must be positive".into(),
            ));
        }
        let mut matrix = None;
        match &kind {
            OperatorKind::Zero { .. } => {}
            OperatorKind::NormalConeBall { center, radius } => {
                check_finite(center)?;
                if !(radius.is_finite() && *radius > 0.0) {
                    return Err(OperatorError::DegenerateSet(format!(
                        "ball radius must be positive and finite, got {radius}"
                    )));
                }
            }
            OperatorKind::NormalConeBox { lo, hi } => {
                if hi.len() != dim {
                    return Err(OperatorError::DimensionMismatch {
                        expected: dim,
                        got: hi.len(),
                    });
                }
                for (i, (l, h)) in lo.iter().zip(hi).enumerate() {
                    if l.is_nan() || h.is_nan() {
                        return Err(OperatorError::NonFinite { index: i });
                    }
                    if l > h {
                        return Err(OperatorError::DegenerateSet(format!(
                            "box bound lo[{i}] = {l} exceeds hi[{i}] = {h}"
                        )));
                    }
                    if l == h || *l == f64::INFINITY || *h == f64::NEG_INFINITY {
                        return Err(OperatorError::DegenerateSet(format!(
                            "box has empty interior in coordinate {i}"
                        )));
                    }
                }
            }
            OperatorKind::NormalConeHalfspace { normal, offset } => {
                check_finite(normal)?;
                if !offset.is_finite() {
                    return Err(OperatorError::NonFinite { index: dim });
                }
                if norm(normal) == 0.0 {
                    return Err(OperatorError::DegenerateSet(
                        "half-space normal must be nonzero".into(),
                    ));
                }
            }
            OperatorKind::SubdifferentialAbs { weights } => {
                check_finite(weights)?;
                if weights.iter().any(|w| *w < 0.0) {
                    return Err(OperatorError::InvalidParameters(
                        "absolute-value weights must be nonnegative".into(),
                    ));
                }
            }
            OperatorKind::SubdifferentialQuadratic { matrix: rows } => {
                let m = square_matrix(rows)?;
                if (&m - m.transpose()).amax() > 1e-12 * (1.0 + m.amax()) {
                    return Err(OperatorError::InvalidParameters(
                        "quadratic matrix must be symmetric".into(),
                    ));
                }
                check_psd(&m, "quadratic matrix")?;
                matrix = Some(m);
            }
            OperatorKind::LinearMonotone { matrix: rows } => {
                let m = square_matrix(rows)?;
                check_psd(&(&m + m.transpose()), "M + Mᵀ")?;
                matrix = Some(m);
            }
        }
        let interior = default_interior(&kind, matrix.as_ref());
        Ok(Self {
            kind,
            dim,
            matrix,
            interior,
        })
    }

    /// Replaces the interior point and variation constants.
    pub fn with_interior(mut self, meta: InteriorMetadata) -> Result<Self> {
        if meta.point.len() != self.dim {
            return Err(OperatorError::DimensionMismatch {
                expected: self.dim,
                got: meta.point.len(),
            });
        }
        self.interior = Some(meta);
        Ok(self)
    }

    pub fn kind(&self) -> &OperatorKind {
        &self.kind
    }

    fn linear_image(&self, x: &[f64]) -> Vec<f64> {
        let m = self.matrix.as_ref().expect("linear kinds carry a matrix");
        (m * DVector::from_column_slice(x)).as_slice().to_vec()
    }
}

fn check_finite(v: &[f64]) -> Result<()> {
    match v.iter().position(|c| !c.is_finite()) {
        Some(index) => Err(OperatorError::NonFinite { index }),
        None => Ok(()),
    }
}

fn square_matrix(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let d = rows.len();
    for (i, r) in rows.iter().enumerate() {
        if r.len() != d {
            return Err(OperatorError::InvalidParameters(format!(
                "matrix row {i} has length {}, expected {d}",
                r.len()
            )));
        }
        check_finite(r)?;
    }
    Ok(DMatrix::from_fn(d, d, |i, j| rows[i][j]))
}

fn check_psd(m: &DMatrix<f64>, what: &str) -> Result<()> {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigenvalues();
    let scale = 1.0 + m.amax();
    if eig.iter().any(|&l| l < -1e-12 * scale) {
        return Err(OperatorError::InvalidParameters(format!(
            "{what} must be positive semidefinite"
        )));
    }
    Ok(())
}

fn default_interior(kind: &OperatorKind, matrix: Option<&DMatrix<f64>>) -> Option<InteriorMetadata> {
    let meta = match kind {
        OperatorKind::Zero { dim } => InteriorMetadata {
            point: vec![0.0; *dim],
            gamma1: 0.0,
            gamma2: 0.0,
            gamma3: 0.0,
        },
        // ⟨X - c, n⟩ = radius·|n| for any outward normal n at a boundary point.
        OperatorKind::NormalConeBall { center, radius } => InteriorMetadata {
            point: center.clone(),
            gamma1: *radius,
            gamma2: 0.0,
            gamma3: 0.0,
        },
        // With B(a, δ) inside the set, ⟨X - a, n⟩ ≥ δ|n| for every normal n at X.
        OperatorKind::NormalConeBox { lo, hi } => {
            let mut point = Vec::with_capacity(lo.len());
            let mut delta = f64::INFINITY;
            for (&l, &h) in lo.iter().zip(hi) {
                let (p, dist) = match (l.is_finite(), h.is_finite()) {
                    (true, true) => (0.5 * (l + h), 0.5 * (h - l)),
                    (true, false) => (l + 1.0, 1.0),
                    (false, true) => (h - 1.0, 1.0),
                    (false, false) => (0.0, f64::INFINITY),
                };
                point.push(p);
                delta = delta.min(dist);
            }
            InteriorMetadata {
                point,
                gamma1: if delta.is_finite() { delta } else { 1.0 },
                gamma2: 0.0,
                gamma3: 0.0,
            }
        }
        OperatorKind::NormalConeHalfspace { normal, offset } => {
            let n = norm(normal);
            let shift = (offset - n) / (n * n);
            InteriorMetadata {
                point: normal.iter().map(|c| c * shift).collect(),
                gamma1: 1.0,
                gamma2: 0.0,
                gamma3: 0.0,
            }
        }
        // ⟨x, y⟩ ≥ 0 and |y| ≤ |w| for y ∈ ∂(Σ w_i|x_i|).
        OperatorKind::SubdifferentialAbs { weights } => InteriorMetadata {
            point: vec![0.0; weights.len()],
            gamma1: 1.0,
            gamma2: 0.0,
            gamma3: norm(weights),
        },
        // ⟨x, Mx⟩ ≥ 0 ≥ |Mx| - ‖M‖|x|.
        OperatorKind::SubdifferentialQuadratic { .. } | OperatorKind::LinearMonotone { .. } => {
            let m = matrix?;
            InteriorMetadata {
                point: vec![0.0; m.nrows()],
                gamma1: 1.0,
                gamma2: m.clone().svd(false, false).singular_values.max(),
                gamma3: 0.0,
            }
        }
    };
    Some(meta)
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|c| c * c).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

impl MonotoneOperator for CatalogOperator {
    fn dim(&self) -> usize {
        self.dim
    }

    fn resolvent_into(&self, x: &[f64], lambda: f64, out: &mut [f64]) {
        match &self.kind {
            OperatorKind::SubdifferentialAbs { weights } => {
                for ((o, &xi), &w) in out.iter_mut().zip(x).zip(weights) {
                    let t = lambda * w;
                    *o = if xi > t {
                        xi - t
                    } else if xi < -t {
                        xi + t
                    } else {
                        0.0
                    };
                }
            }
            OperatorKind::SubdifferentialQuadratic { .. } | OperatorKind::LinearMonotone { .. } => {
                let m = self.matrix.as_ref().expect("linear kinds carry a matrix");
                let system = DMatrix::identity(self.dim, self.dim) + m * lambda;
                let rhs = DVector::from_column_slice(x);
                let sol = system
                    .lu()
                    .solve(&rhs)
                    .expect("I + λM is invertible when M + Mᵀ is positive semidefinite");
                out.copy_from_slice(sol.as_slice());
            }
            _ => self.project_domain_into(x, out),
        }
    }

    fn project_domain_into(&self, x: &[f64], out: &mut [f64]) {
        match &self.kind {
            OperatorKind::NormalConeBall { center, radius } => {
                let r = distance(x, center);
                if r <= *radius {
                    out.copy_from_slice(x);
                } else {
                    let s = radius / r;
                    for ((o, &xi), &c) in out.iter_mut().zip(x).zip(center) {
                        *o = c + s * (xi - c);
                    }
                }
            }
            OperatorKind::NormalConeBox { lo, hi } => {
                for (((o, &xi), &l), &h) in out.iter_mut().zip(x).zip(lo).zip(hi) {
                    *o = xi.clamp(l, h);
                }
            }
            OperatorKind::NormalConeHalfspace { normal, offset } => {
                let excess = dot(normal, x) - offset;
                if excess <= 0.0 {
                    out.copy_from_slice(x);
                } else {
                    let s = excess / dot(normal, normal);
                    for ((o, &xi), &n) in out.iter_mut().zip(x).zip(normal) {
                        *o = xi - s * n;
                    }
                }
            }
            _ => out.copy_from_slice(x),
        }
    }

    fn contains(&self, x: &[f64], y: &[f64]) -> Option<bool> {
        if x.len() != self.dim || y.len() != self.dim {
            return Some(false);
        }
        let tol = 1e-9 * (1.0 + norm(x) + norm(y));
        let is_zero = |v: &[f64]| norm(v) <= tol;
        let member = match &self.kind {
            OperatorKind::Zero { .. } => is_zero(y),
            OperatorKind::NormalConeBall { center, radius } => {
                let r = distance(x, center);
                if r > radius + tol {
                    false
                } else if r < radius - tol {
                    is_zero(y)
                } else {
                    let dir: Vec<f64> = x.iter().zip(center).map(|(a, c)| (a - c) / r).collect();
                    let t = dot(y, &dir);
                    let perp: Vec<f64> = y.iter().zip(&dir).map(|(a, u)| a - t * u).collect();
                    t >= -tol && is_zero(&perp)
                }
            }
            OperatorKind::NormalConeBox { lo, hi } => {
                x.iter().zip(y).zip(lo.iter().zip(hi)).all(|((&xi, &yi), (&l, &h))| {
                    if xi < l - tol || xi > h + tol {
                        return false;
                    }
                    let at_lo = (xi - l).abs() <= tol;
                    let at_hi = (xi - h).abs() <= tol;
                    match (at_lo, at_hi) {
                        (true, true) => true,
                        (true, false) => yi <= tol,
                        (false, true) => yi >= -tol,
                        (false, false) => yi.abs() <= tol,
                    }
                })
            }
            OperatorKind::NormalConeHalfspace { normal, offset } => {
                let n = norm(normal);
                let slack = (dot(normal, x) - offset) / n;
                if slack > tol {
                    false
                } else if slack < -tol {
                    is_zero(y)
                } else {
                    let t = dot(y, normal) / (n * n);
                    let perp: Vec<f64> = y.iter().zip(normal).map(|(a, u)| a - t * u).collect();
                    t >= -tol && is_zero(&perp)
                }
            }
            OperatorKind::SubdifferentialAbs { weights } => {
                x.iter().zip(y).zip(weights).all(|((&xi, &yi), &w)| {
                    if xi > tol {
                        (yi - w).abs() <= tol
                    } else if xi < -tol {
                        (yi + w).abs() <= tol
                    } else {
                        yi.abs() <= w + tol
                    }
                })
            }
            OperatorKind::SubdifferentialQuadratic { .. } | OperatorKind::LinearMonotone { .. } => {
                let image = self.linear_image(x);
                distance(&image, y) <= tol
            }
        };
        Some(member)
    }

    fn interior(&self) -> Option<&InteriorMetadata> {
        self.interior.as_ref()
    }

    fn is_projection(&self) -> bool {
        self.kind.is_normal_cone() || matches!(self.kind, OperatorKind::Zero { .. })
    }

    fn has_full_domain(&self) -> bool {
        !self.kind.is_normal_cone()
    }
}

fn check_input(op: &dyn MonotoneOperator, x: &[f64], lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(OperatorError::NonPositiveLambda(lambda));
    }
    if x.len() != op.dim() {
        return Err(OperatorError::DimensionMismatch {
            expected: op.dim(),
            got: x.len(),
        });
    }
    check_finite(x)
}

/// `J_λ(x) = (I + λA)^{-1} x`.
pub fn resolve(op: &dyn MonotoneOperator, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    check_input(op, x, lambda)?;
    let mut out = vec![0.0; x.len()];
    op.resolvent_into(x, lambda, &mut out);
    Ok(out)
}

/// Yosida approximation `A_λ(x) = (x - J_λ(x)) / λ`, an element of `A(J_λ(x))`.
pub fn yosida(op: &dyn MonotoneOperator, x: &[f64], lambda: f64) -> Result<Vec<f64>> {
    let j = resolve(op, x, lambda)?;
    Ok(x.iter().zip(&j).map(|(a, b)| (a - b) / lambda).collect())
}

/// Graph points `(J_λ(z), A_λ(z))` generated from arbitrary seeds `z`.
pub fn graph_probes(
    op: &dyn MonotoneOperator,
    seeds: &[Vec<f64>],
    lambda: f64,
) -> Result<Vec<(Vec<f64>, Vec<f64>)>> {
    seeds
        .iter()
        .map(|z| Ok((resolve(op, z, lambda)?, yosida(op, z, lambda)?)))
        .collect()
}

/// Default pairing tolerance `1e-8 · (1 + sup-norm of the X and K paths)`.
pub fn default_pairing_tolerance(x_path: &[Vec<f64>], k_path: &[Vec<f64>]) -> f64 {
    let sup = x_path
        .iter()
        .chain(k_path)
        .map(|p| norm(p))
        .fold(0.0, f64::max);
    1e-8 * (1.0 + sup)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairingReport {
    /// One discrete pairing sum per probe.
    pub sums: Vec<f64>,
    pub min_value: f64,
    pub tolerance: f64,
    pub pass: bool,
}

fn check_path_lengths(x_path: &[Vec<f64>], k_path: &[Vec<f64>], grid: &[f64]) -> Result<()> {
    if x_path.len() != grid.len() {
        return Err(OperatorError::LengthMismatch {
            what: "X path",
            expected: grid.len(),
            got: x_path.len(),
        });
    }
    if k_path.len() != grid.len() {
        return Err(OperatorError::LengthMismatch {
            what: "K path",
            expected: grid.len(),
            got: k_path.len(),
        });
    }
    Ok(())
}

/// Discrete form of `⟨X_t - x, dK_t - y dt⟩ ≥ 0` for every probe `(x, y) ∈ Gr(A)`.
///
/// Each increment `K_{k+1} - K_k` is paired with the right endpoint
/// `X_{k+1}`, matching the backward-Euler constraint `ΔK ∈ hA(X_{k+1})`.
pub fn check_pairing_inequality(
    op: &dyn MonotoneOperator,
    x_path: &[Vec<f64>],
    k_path: &[Vec<f64>],
    grid: &[f64],
    probes: &[(Vec<f64>, Vec<f64>)],
    tolerance: Option<f64>,
) -> Result<PairingReport> {
    check_path_lengths(x_path, k_path, grid)?;
    for (index, (x, y)) in probes.iter().enumerate() {
        if x.len() != op.dim() || y.len() != op.dim() {
            return Err(OperatorError::DimensionMismatch {
                expected: op.dim(),
                got: x.len().max(y.len()),
            });
        }
        if op.contains(x, y) == Some(false) {
            return Err(OperatorError::InvalidProbe { index });
        }
    }
    let tolerance = tolerance.unwrap_or_else(|| default_pairing_tolerance(x_path, k_path));
    let sums: Vec<f64> = probes
        .iter()
        .map(|(px, py)| {
            (0..grid.len().saturating_sub(1))
                .map(|k| {
                    let dt = grid[k + 1] - grid[k];
                    x_path[k + 1]
                        .iter()
                        .zip(px)
                        .zip(k_path[k + 1].iter().zip(&k_path[k]))
                        .zip(py)
                        .map(|(((xv, pxv), (k1, k0)), pyv)| (xv - pxv) * ((k1 - k0) - pyv * dt))
                        .sum::<f64>()
                })
                .sum()
        })
        .collect();
    let min_value = sums.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(PairingReport {
        pass: sums.iter().all(|s| *s >= -tolerance),
        min_value: if sums.is_empty() { 0.0 } else { min_value },
        sums,
        tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VariationBoundReport {
    pub lhs: f64,
    pub rhs: f64,
    pub total_variation: f64,
    pub tolerance: f64,
    pub pass: bool,
}

/// Evaluates both sides of `Σ⟨X - a, ΔK⟩ ≥ γ₁ Σ|ΔK| - γ₂ Σ|X - a|Δt - γ₃ (t - s)`
/// over the whole path, pairing increments with right endpoints.
pub fn interior_variation_bound_check(
    op: &dyn MonotoneOperator,
    x_path: &[Vec<f64>],
    k_path: &[Vec<f64>],
    grid: &[f64],
    tolerance: Option<f64>,
) -> Result<VariationBoundReport> {
    let meta = op.interior().ok_or(OperatorError::MissingMetadata)?;
    check_path_lengths(x_path, k_path, grid)?;
    let tolerance = tolerance.unwrap_or_else(|| default_pairing_tolerance(x_path, k_path));
    let a = &meta.point;
    let (mut lhs, mut variation, mut offset_integral) = (0.0, 0.0, 0.0);
    for k in 0..grid.len().saturating_sub(1) {
        let dt = grid[k + 1] - grid[k];
        let dk: Vec<f64> = k_path[k + 1].iter().zip(&k_path[k]).map(|(p, q)| p - q).collect();
        let centered: Vec<f64> = x_path[k + 1].iter().zip(a).map(|(x, c)| x - c).collect();
        lhs += dot(&centered, &dk);
        variation += norm(&dk);
        offset_integral += norm(&centered) * dt;
    }
    let elapsed = match (grid.first(), grid.last()) {
        (Some(s), Some(t)) => t - s,
        _ => 0.0,
    };
    let rhs = meta.gamma1 * variation - meta.gamma2 * offset_integral - meta.gamma3 * elapsed;
    Ok(VariationBoundReport {
        lhs,
        rhs,
        total_variation: variation,
        tolerance,
        pass: lhs >= rhs - tolerance,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub operator: String,
    pub pairs: usize,
    pub lambdas: Vec<f64>,
    /// `max (|J_λx - J_λy| - |x - y|)`; nonexpansive iff ≤ tolerance.
    pub max_expansion: f64,
    /// `min ⟨J_λx - J_λy, A_λx - A_λy⟩`; monotone iff ≥ -tolerance.
    pub min_monotone_pairing: f64,
    /// `max |P_D(J_λx) - J_λx|` over the samples.
    pub max_domain_distance: f64,
    /// Normal cones only: resolvents agree bit-for-bit across `λ`.
    pub lambda_independent: Option<bool>,
    pub tolerance: f64,
    pub pass: bool,
}

/// Sampled resolvent axioms on `pairs` random pairs from `[-scale, scale]^d`
/// for each `λ`.
pub fn axiom_check(
    op: &dyn MonotoneOperator,
    name: &str,
    pairs: usize,
    lambdas: &[f64],
    scale: f64,
    seed: u64,
    tolerance: f64,
) -> Result<AxiomReport> {
    use rand::Rng;
    let d = op.dim();
    let mut rng = crate::noise::auxiliary_rng(seed, 0xa710);
    let mut sample = || -> Vec<f64> { (0..d).map(|_| rng.random_range(-scale..scale)).collect() };
    let points: Vec<(Vec<f64>, Vec<f64>)> = (0..pairs).map(|_| (sample(), sample())).collect();
    let mut max_expansion = f64::NEG_INFINITY;
    let mut min_pairing = f64::INFINITY;
    let mut max_domain = 0.0_f64;
    let mut independent = true;
    let mut proj = vec![0.0; d];
    for (x, y) in &points {
        let mut first: Option<(Vec<f64>, Vec<f64>)> = None;
        for &lambda in lambdas {
            let (jx, jy) = (resolve(op, x, lambda)?, resolve(op, y, lambda)?);
            let (ax, ay) = (yosida(op, x, lambda)?, yosida(op, y, lambda)?);
            max_expansion = max_expansion.max(distance(&jx, &jy) - distance(x, y));
            let dj: Vec<f64> = jx.iter().zip(&jy).map(|(a, b)| a - b).collect();
            let da: Vec<f64> = ax.iter().zip(&ay).map(|(a, b)| a - b).collect();
            min_pairing = min_pairing.min(dot(&dj, &da));
            for j in [&jx, &jy] {
                op.project_domain_into(j, &mut proj);
                max_domain = max_domain.max(distance(&proj, j));
            }
            match &first {
                None => first = Some((jx, jy)),
                Some((fx, fy)) => independent &= *fx == jx && *fy == jy,
            }
        }
    }
    let lambda_independent = op.is_projection().then_some(independent);
    let pass = max_expansion <= tolerance
        && min_pairing >= -tolerance
        && max_domain <= tolerance
        && lambda_independent != Some(false);
    Ok(AxiomReport {
        operator: name.to_string(),
        pairs,
        lambdas: lambdas.to_vec(),
        max_expansion,
        min_monotone_pairing: min_pairing,
        max_domain_distance: max_domain,
        lambda_independent,
        tolerance,
        pass,
    })
}

/// One instance of every catalog kind in dimension `d`.
pub fn catalog_samples(d: usize) -> Vec<OperatorKind> {
    let e: Vec<f64> = (0..d).map(|i| if i == 0 { 1.0 } else { 0.0 }).collect();
    let mut psd = vec![vec![0.0; d]; d];
    let mut skewed = vec![vec![0.0; d]; d];
    for i in 0..d {
        for j in 0..d {
            psd[i][j] = if i == j { 2.0 } else { 0.5 };
            skewed[i][j] = if i == j {
                0.5
            } else if i < j {
                1.0
            } else {
                -1.0
            };
        }
    }
    vec![
        OperatorKind::Zero { dim: d },
        OperatorKind::NormalConeBall {
            center: vec![0.25; d],
            radius: 1.0,
        },
        OperatorKind::NormalConeBox {
            lo: vec![-1.0; d],
            hi: (0..d).map(|i| if i == 0 { f64::INFINITY } else { 0.5 }).collect(),
        },
        OperatorKind::NormalConeHalfspace { normal: e, offset: 0.3 },
        OperatorKind::SubdifferentialAbs {
            weights: (0..d).map(|i| 0.5 + i as f64).collect(),
        },
        OperatorKind::SubdifferentialQuadratic { matrix: psd },
        OperatorKind::LinearMonotone { matrix: skewed },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ball() -> CatalogOperator {
        CatalogOperator::new(OperatorKind::NormalConeBall {
            center: vec![0.0, 0.0],
            radius: 1.0,
        })
        .unwrap()
    }

    fn half_line() -> CatalogOperator {
        CatalogOperator::new(OperatorKind::NormalConeBox {
            lo: vec![0.0],
            hi: vec![f64::INFINITY],
        })
        .unwrap()
    }

    // Brute-force minimizer of ½(u - x)² + λ|u| over a grid of step 1e-5.
    fn soft_threshold_oracle(x: f64, lambda: f64) -> f64 {
        let (mut best_u, mut best) = (0.0, f64::INFINITY);
        let mut u = -3.0;
        while u <= 3.0 {
            let v = 0.5 * (u - x) * (u - x) + lambda * u.abs();
            if v < best {
                best = v;
                best_u = u;
            }
            u += 1e-5;
        }
        best_u
    }

    #[test]
    fn resolve_examples() {
        let zero = CatalogOperator::new(OperatorKind::Zero { dim: 2 }).unwrap();
        assert_eq!(resolve(&zero, &[3.0, -1.0], 0.5).unwrap(), vec![3.0, -1.0]);
        assert_eq!(resolve(&ball(), &[2.0, 0.0], 7.0).unwrap(), vec![1.0, 0.0]);

        let abs = CatalogOperator::new(OperatorKind::SubdifferentialAbs { weights: vec![1.0] }).unwrap();
        for (x, expected) in [(0.3, 0.0), (1.2, 0.7)] {
            let oracle = soft_threshold_oracle(x, 0.5);
            assert!((oracle - expected).abs() < 1e-4, "oracle {oracle} vs {expected}");
            let j = resolve(&abs, &[x], 0.5).unwrap()[0];
            assert!((j - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn resolve_errors() {
        assert_eq!(
            resolve(&ball(), &[f64::NAN, 0.0], 1.0),
            Err(OperatorError::NonFinite { index: 0 })
        );
        assert_eq!(
            resolve(&ball(), &[0.0, 0.0], 0.0),
            Err(OperatorError::NonPositiveLambda(0.0))
        );
        assert!(matches!(
            resolve(&ball(), &[0.0], 1.0),
            Err(OperatorError::DimensionMismatch { .. })
        ));
        let degenerate = CatalogOperator::new(OperatorKind::NormalConeBox {
            lo: vec![1.0],
            hi: vec![0.0],
        });
        assert!(matches!(degenerate, Err(OperatorError::DegenerateSet(_))));
        let radius = CatalogOperator::new(OperatorKind::NormalConeBall {
            center: vec![0.0],
            radius: 0.0,
        });
        assert!(matches!(radius, Err(OperatorError::DegenerateSet(_))));
        let asym = CatalogOperator::new(OperatorKind::SubdifferentialQuadratic {
            matrix: vec![vec![1.0, 2.0], vec![0.0, 1.0]],
        });
        assert!(matches!(asym, Err(OperatorError::InvalidParameters(_))));
        let not_monotone = CatalogOperator::new(OperatorKind::LinearMonotone {
            matrix: vec![vec![-1.0, 0.0], vec![0.0, 1.0]],
        });
        assert!(matches!(not_monotone, Err(OperatorError::InvalidParameters(_))));
    }

    #[test]
    fn yosida_examples() {
        let zero = CatalogOperator::new(OperatorKind::Zero { dim: 3 }).unwrap();
        assert_eq!(yosida(&zero, &[1.0, -2.0, 5.0], 1.0).unwrap(), vec![0.0; 3]);
        assert_eq!(yosida(&half_line(), &[-2.0], 1.0).unwrap(), vec![-2.0]);
        let quad = CatalogOperator::new(OperatorKind::SubdifferentialQuadratic {
            matrix: vec![vec![1.0]],
        })
        .unwrap();
        // (I + M) J = 4 → J = 2.
        assert_eq!(resolve(&quad, &[4.0], 1.0).unwrap(), vec![2.0]);
        assert_eq!(yosida(&quad, &[4.0], 1.0).unwrap(), vec![2.0]);
    }

    #[test]
    fn rotation_is_linear_monotone() {
        // Skew part does not affect monotonicity.
        let op = CatalogOperator::new(OperatorKind::LinearMonotone {
            matrix: vec![vec![0.5, 1.0], vec![-1.0, 0.5]],
        })
        .unwrap();
        let x = [1.0, 2.0];
        let j = resolve(&op, &x, 0.3).unwrap();
        let y = yosida(&op, &x, 0.3).unwrap();
        assert_eq!(op.contains(&j, &y), Some(true));
    }

    #[test]
    fn membership_on_boundaries() {
        let b = ball();
        assert_eq!(b.contains(&[1.0, 0.0], &[3.0, 0.0]), Some(true));
        assert_eq!(b.contains(&[1.0, 0.0], &[-3.0, 0.0]), Some(false));
        assert_eq!(b.contains(&[1.0, 0.0], &[1.0, 1.0]), Some(false));
        assert_eq!(b.contains(&[0.5, 0.0], &[0.0, 0.0]), Some(true));
        assert_eq!(b.contains(&[0.5, 0.0], &[0.1, 0.0]), Some(false));
        let h = half_line();
        assert_eq!(h.contains(&[0.0], &[-1.0]), Some(true));
        assert_eq!(h.contains(&[0.0], &[1.0]), Some(false));
        let half = CatalogOperator::new(OperatorKind::NormalConeHalfspace {
            normal: vec![0.0, 2.0],
            offset: 1.0,
        })
        .unwrap();
        assert_eq!(half.contains(&[3.0, 0.5], &[0.0, 4.0]), Some(true));
        assert_eq!(resolve(&half, &[3.0, 2.0], 1.0).unwrap(), vec![3.0, 0.5]);
        let meta = half.interior().unwrap();
        assert!((dot(&[0.0, 2.0], &meta.point) - (1.0 - 2.0)).abs() < 1e-12);
    }

    fn reflected_drift_paths(h: f64, steps: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>) {
        let grid: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
        let x = grid.iter().map(|t| vec![(1.0 - t).max(0.0)]).collect();
        let k = grid.iter().map(|t| vec![-(t - 1.0).max(0.0)]).collect();
        (x, k, grid)
    }

    #[test]
    fn pairing_inequality_examples() {
        let zero = CatalogOperator::new(OperatorKind::Zero { dim: 1 }).unwrap();
        let grid = vec![0.0, 0.5, 1.0];
        let xs = vec![vec![1.0], vec![-3.0], vec![2.0]];
        let ks = vec![vec![0.0]; 3];
        let report =
            check_pairing_inequality(&zero, &xs, &ks, &grid, &[(vec![0.5], vec![0.0])], None).unwrap();
        assert_eq!(report.min_value, 0.0);
        assert!(report.pass);

        let op = half_line();
        let (xs, ks, grid) = reflected_drift_paths(0.1, 20);
        let probes = vec![(vec![1.0], vec![0.0]), (vec![0.0], vec![-2.0])];
        let report = check_pairing_inequality(&op, &xs, &ks, &grid, &probes, None).unwrap();
        assert!(report.pass, "{report:?}");

        // Negate the increments after contact.
        let mut bad = ks.clone();
        for (k, t) in grid.iter().enumerate() {
            bad[k][0] = (t - 1.0).max(0.0);
        }
        let report =
            check_pairing_inequality(&op, &xs, &bad, &grid, &[(vec![1.0], vec![0.0])], None).unwrap();
        assert!(!report.pass);
        assert!(report.min_value < 0.0);

        assert!(matches!(
            check_pairing_inequality(&op, &xs[..3], &ks, &grid, &probes, None),
            Err(OperatorError::LengthMismatch { .. })
        ));
        assert!(matches!(
            check_pairing_inequality(&op, &xs, &ks, &grid, &[(vec![0.0], vec![1.0])], None),
            Err(OperatorError::InvalidProbe { index: 0 })
        ));
    }

    #[test]
    fn variation_bound_examples() {
        let op = half_line()
            .with_interior(InteriorMetadata {
                point: vec![1.0],
                gamma1: 1.0,
                gamma2: 0.0,
                gamma3: 1.0,
            })
            .unwrap();
        let (xs, ks, grid) = reflected_drift_paths(0.05, 40);
        let report = interior_variation_bound_check(&op, &xs, &ks, &grid, None).unwrap();
        assert!(report.pass, "{report:?}");
        assert!((report.total_variation - 1.0).abs() < 1e-9);

        let zero_k = vec![vec![0.0]; grid.len()];
        let report = interior_variation_bound_check(&op, &xs, &zero_k, &grid, None).unwrap();
        assert_eq!(report.lhs, 0.0);
        assert!(report.pass);

        struct Bare;
        impl MonotoneOperator for Bare {
            fn dim(&self) -> usize {
                1
            }
            fn resolvent_into(&self, x: &[f64], _: f64, out: &mut [f64]) {
                out.copy_from_slice(x)
            }
            fn project_domain_into(&self, x: &[f64], out: &mut [f64]) {
                out.copy_from_slice(x)
            }
        }
        assert_eq!(
            interior_variation_bound_check(&Bare, &xs, &ks, &grid, None),
            Err(OperatorError::MissingMetadata)
        );
    }

    #[test]
    fn axiom_check_passes_the_catalog_and_flags_an_expansive_map() {
        for kind in catalog_samples(2) {
            let op = CatalogOperator::new(kind.clone()).unwrap();
            let report = axiom_check(&op, kind.name(), 200, &[0.5, 2.0], 2.0, 1, 1e-10).unwrap();
            assert!(report.pass, "{report:?}");
            if kind.is_normal_cone() {
                assert_eq!(report.lambda_independent, Some(true));
            }
        }

        struct Doubling;
        impl MonotoneOperator for Doubling {
            fn dim(&self) -> usize {
                1
            }
            fn resolvent_into(&self, x: &[f64], _: f64, out: &mut [f64]) {
                out[0] = 2.0 * x[0];
            }
            fn project_domain_into(&self, x: &[f64], out: &mut [f64]) {
                out.copy_from_slice(x)
            }
        }
        let report = axiom_check(&Doubling, "doubling", 50, &[1.0], 1.0, 2, 1e-10).unwrap();
        assert!(!report.pass);
        assert!(report.max_expansion > 0.0 && report.min_monotone_pairing < 0.0);
    }
}
