//! Empirical measures on `ℝ^d`, measure flows and upper bounds for the dual
//! metric `ρ` on `M_2(ℝ^d)`.
//!
//! The unit ball of the `ρ` test-function norm only contains 1-Lipschitz
//! functions, so `ρ ≤ W₁`. Every distance computed here is an upper bound on
//! `ρ`: exact `W₁` where it is cheap (sorted matching in one dimension, exact
//! assignment up to `assignment_cutoff` atoms) and the paired coupling bound
//! `(1/N) Σ |x_i - y_i|` otherwise.

use std::sync::OnceLock;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::operators::distance;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MeasureError {
    #[error("empirical measure needs at least one atom")]
    Empty,
    #[error("point buffer of length {len} is not a multiple of dimension {dim}")]
    Ragged { len: usize, dim: usize },
    #[error("non-finite coordinate in atom {atom}")]
    NonFinite { atom: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("size mismatch: {left} atoms vs {right} atoms")]
    SizeMismatch { left: usize, right: usize },
    #[error("measure flows live on different time grids")]
    GridMismatch,
    #[error("time grid must be strictly increasing and start at 0")]
    InvalidGrid,
    #[error("flow has {grid} grid points but {measures} measures")]
    FlowLength { grid: usize, measures: usize },
}

pub type Result<T> = std::result::Result<T, MeasureError>;

/// Uniform atomic measure `(1/N) Σ δ_{x_i}` stored as a row-major `N × d` buffer.
#[derive(Debug, Clone)]
pub struct EmpiricalMeasure {
    dim: usize,
    points: Vec<f64>,
    mean: OnceLock<Vec<f64>>,
    second_moment: OnceLock<f64>,
}

impl PartialEq for EmpiricalMeasure {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points
    }
}

impl EmpiricalMeasure {
    pub fn new(points: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || points.is_empty() {
            return Err(MeasureError::Empty);
        }
        if points.len() % dim != 0 {
            return Err(MeasureError::Ragged {
                len: points.len(),
                dim,
            });
        }
        if let Some(i) = points.iter().position(|c| !c.is_finite()) {
            return Err(MeasureError::NonFinite { atom: i / dim });
        }
        Ok(Self::from_trusted(points, dim))
    }

    /// Skips validation; callers guarantee a nonempty, finite, aligned buffer.
    pub(crate) fn from_trusted(points: Vec<f64>, dim: usize) -> Self {
        Self {
            dim,
            points,
            mean: OnceLock::new(),
            second_moment: OnceLock::new(),
        }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.first().map(Vec::len).ok_or(MeasureError::Empty)?;
        if let Some(r) = rows.iter().find(|r| r.len() != dim) {
            return Err(MeasureError::DimensionMismatch {
                left: dim,
                right: r.len(),
            });
        }
        Self::new(rows.concat(), dim)
    }

    /// Dirac mass at `x`.
    pub fn dirac(x: &[f64]) -> Result<Self> {
        Self::new(x.to_vec(), x.len())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn iter(&self) -> std::slice::ChunksExact<'_, f64> {
        self.points.chunks_exact(self.dim)
    }

    pub fn mean(&self) -> &[f64] {
        self.mean.get_or_init(|| {
            let n = self.len() as f64;
            let mut m = vec![0.0; self.dim];
            for p in self.iter() {
                for (acc, c) in m.iter_mut().zip(p) {
                    *acc += c;
                }
            }
            m.iter_mut().for_each(|c| *c /= n);
            m
        })
    }

    /// `‖μ‖₂² = (1/N) Σ |x_i|²`.
    pub fn second_moment_norm(&self) -> f64 {
        *self
            .second_moment
            .get_or_init(|| self.iter().map(|p| p.iter().map(|c| c * c).sum::<f64>()).sum::<f64>() / self.len() as f64)
    }

    /// Copy with atom `i` replaced by `x`.
    pub fn with_atom(&self, i: usize, x: &[f64]) -> Self {
        let mut points = self.points.clone();
        points[i * self.dim..(i + 1) * self.dim].copy_from_slice(x);
        Self::from_trusted(points, self.dim)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self::from_trusted(self.points.iter().map(|p| p * c).collect(), self.dim)
    }
}

/// Time-indexed family of empirical measures on a strictly increasing grid.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureFlow {
    grid: Vec<f64>,
    measures: Vec<EmpiricalMeasure>,
}

impl MeasureFlow {
    pub fn new(grid: Vec<f64>, measures: Vec<EmpiricalMeasure>) -> Result<Self> {
        if grid.len() != measures.len() {
            return Err(MeasureError::FlowLength {
                grid: grid.len(),
                measures: measures.len(),
            });
        }
        if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(MeasureError::InvalidGrid);
        }
        let dim = measures[0].dim();
        if let Some(m) = measures.iter().find(|m| m.dim() != dim) {
            return Err(MeasureError::DimensionMismatch {
                left: dim,
                right: m.dim(),
            });
        }
        Ok(Self { grid, measures })
    }

    /// The same measure at every grid time.
    pub fn constant(grid: Vec<f64>, measure: EmpiricalMeasure) -> Result<Self> {
        let measures = vec![measure; grid.len()];
        Self::new(grid, measures)
    }

    pub fn grid(&self) -> &[f64] {
        &self.grid
    }

    pub fn measures(&self) -> &[EmpiricalMeasure] {
        &self.measures
    }

    pub fn at(&self, k: usize) -> &EmpiricalMeasure {
        &self.measures[k]
    }

    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.measures[0].dim()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum RhoMode {
    /// Exact `W₁` in one dimension via quantile matching.
    SortedExact,
    /// Exact `W₁` via optimal assignment.
    AssignmentExact,
    /// Coupling bound `(1/N) Σ |x_i - y_i|` for index-paired atoms.
    Paired,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RhoOptions {
    pub assignment_cutoff: usize,
}

impl Default for RhoOptions {
    fn default() -> Self {
        Self {
            assignment_cutoff: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RhoEstimate {
    pub value: f64,
    pub mode: RhoMode,
}

/// Upper bound on `ρ(μ, ν)` with the default assignment cutoff.
pub fn rho_upper(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    rho_upper_with(mu, nu, &RhoOptions::default()).map(|e| e.value)
}

pub fn rho_upper_with(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    options: &RhoOptions,
) -> Result<RhoEstimate> {
    if mu.dim() != nu.dim() {
        return Err(MeasureError::DimensionMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    if mu.dim() == 1 {
        return Ok(RhoEstimate {
            value: wasserstein1_line(mu.points(), nu.points()),
            mode: RhoMode::SortedExact,
        });
    }
    if mu.len() != nu.len() {
        return Err(MeasureError::SizeMismatch {
            left: mu.len(),
            right: nu.len(),
        });
    }
    if mu.len() <= options.assignment_cutoff {
        // Taking the smaller of both orientations makes the result exactly symmetric.
        let value = assignment_w1(mu, nu).min(assignment_w1(nu, mu));
        return Ok(RhoEstimate {
            value,
            mode: RhoMode::AssignmentExact,
        });
    }
    paired_bound(mu, nu).map(|value| RhoEstimate {
        value,
        mode: RhoMode::Paired,
    })
}

/// `(1/N) Σ |x_i - y_i|`, a coupling bound on `W₁`.
pub fn paired_bound(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64> {
    check_paired(mu, nu)?;
    let total: f64 = mu.iter().zip(nu.iter()).map(|(x, y)| distance(x, y)).sum();
    Ok(total / mu.len() as f64)
}

fn check_paired(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<()> {
    if mu.dim() != nu.dim() {
        return Err(MeasureError::DimensionMismatch {
            left: mu.dim(),
            right: nu.dim(),
        });
    }
    if mu.len() != nu.len() {
        return Err(MeasureError::SizeMismatch {
            left: mu.len(),
            right: nu.len(),
        });
    }
    Ok(())
}

/// Exact `W₁` between uniform measures on the line, any sizes.
fn wasserstein1_line(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(f64::total_cmp);
    ys.sort_by(f64::total_cmp);
    if xs.len() == ys.len() {
        let total: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - y).abs()).sum();
        return total / xs.len() as f64;
    }
    // Integrate |F⁻¹(u) - G⁻¹(u)| over the merged quantile breakpoints.
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0, 0);
    let (mut u, mut total) = (0.0_f64, 0.0);
    while i < n && j < m {
        let next_x = (i + 1) as f64 / n as f64;
        let next_y = (j + 1) as f64 / m as f64;
        let next = next_x.min(next_y);
        total += (next - u) * (xs[i] - ys[j]).abs();
        u = next;
        if next_x <= next {
            i += 1;
        }
        if next_y <= next {
            j += 1;
        }
    }
    total
}

/// Exact optimal assignment cost (Hungarian method with potentials), divided by `N`.
fn assignment_w1(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> f64 {
    let n = mu.len();
    let cost = |i: usize, j: usize| distance(mu.point(i), nu.point(j));
    // 1-based arrays; row 0 / column 0 are sentinels.
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        matched_row[0] = row;
        let mut col0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[col0] = true;
            let i0 = matched_row[col0];
            let mut delta = f64::INFINITY;
            let mut col1 = 0;
            for j in 1..=n {
                if !used[j] {
                    let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                    if cur < minv[j] {
                        minv[j] = cur;
                        way[j] = col0;
                    }
                    if minv[j] < delta {
                        delta = minv[j];
                        col1 = j;
                    }
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            col0 = col1;
            if matched_row[col0] == 0 {
                break;
            }
        }
        loop {
            let col1 = way[col0];
            matched_row[col0] = matched_row[col1];
            col0 = col1;
            if col0 == 0 {
                break;
            }
        }
    }
    let total: f64 = (1..=n).map(|j| cost(matched_row[j] - 1, j - 1)).sum();
    total / n as f64
}

/// `ρ̂(μ·, ν·) = max_k ρ(μ_{t_k}, ν_{t_k})` on a shared grid.
pub fn flow_distance(mu: &MeasureFlow, nu: &MeasureFlow) -> Result<f64> {
    flow_distance_with(mu, nu, &RhoOptions::default())
}

pub fn flow_distance_with(mu: &MeasureFlow, nu: &MeasureFlow, options: &RhoOptions) -> Result<f64> {
    if mu.grid() != nu.grid() {
        return Err(MeasureError::GridMismatch);
    }
    let values: Vec<Result<f64>> = mu
        .measures()
        .par_iter()
        .zip(nu.measures().par_iter())
        .map(|(a, b)| rho_upper_with(a, b, options).map(|e| e.value))
        .collect();
    values
        .into_iter()
        .try_fold(0.0_f64, |acc, v| v.map(|v| acc.max(v)))
}

/// `((1/N) Σ |x_i - y_i|²)^{1/2}` for index-coupled ensembles.
pub fn coupled_moment_distance(x: &EmpiricalMeasure, y: &EmpiricalMeasure) -> Result<f64> {
    check_paired(x, y)?;
    let total: f64 = x
        .iter()
        .zip(y.iter())
        .map(|(a, b)| a.iter().zip(b).map(|(p, q)| (p - q) * (p - q)).sum::<f64>())
        .sum();
    Ok((total / x.len() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(points: &[f64]) -> EmpiricalMeasure {
        EmpiricalMeasure::new(points.to_vec(), 1).unwrap()
    }

    /// Brute-force W₁ over all permutations.
    fn brute_w1(a: &EmpiricalMeasure, b: &EmpiricalMeasure) -> f64 {
        fn permute(k: usize, perm: &mut Vec<usize>, best: &mut f64, a: &EmpiricalMeasure, b: &EmpiricalMeasure) {
            if k == perm.len() {
                let c: f64 = (0..perm.len()).map(|i| distance(a.point(i), b.point(perm[i]))).sum();
                *best = best.min(c / perm.len() as f64);
                return;
            }
            for i in k..perm.len() {
                perm.swap(k, i);
                permute(k + 1, perm, best, a, b);
                perm.swap(k, i);
            }
        }
        let mut perm: Vec<usize> = (0..a.len()).collect();
        let mut best = f64::INFINITY;
        permute(0, &mut perm, &mut best, a, b);
        best
    }

    #[test]
    fn second_moment_examples() {
        assert_eq!(line(&[0.0]).second_moment_norm(), 0.0);
        let m = EmpiricalMeasure::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(m.second_moment_norm(), 1.0);
        assert_eq!(line(&[3.0, 4.0]).second_moment_norm(), (9.0 + 16.0) / 2.0);
        assert_eq!(line(&[3.0, 4.0]).second_moment_norm(), 12.5);
    }

    #[test]
    fn construction_errors() {
        assert_eq!(EmpiricalMeasure::new(vec![], 1), Err(MeasureError::Empty));
        assert!(matches!(
            EmpiricalMeasure::new(vec![1.0, 2.0, 3.0], 2),
            Err(MeasureError::Ragged { .. })
        ));
        assert_eq!(
            EmpiricalMeasure::new(vec![0.0, f64::INFINITY], 1),
            Err(MeasureError::NonFinite { atom: 1 })
        );
        assert_eq!(
            MeasureFlow::new(vec![0.0, 0.0], vec![line(&[0.0]), line(&[0.0])]),
            Err(MeasureError::InvalidGrid)
        );
    }

    #[test]
    fn rho_examples() {
        assert_eq!(rho_upper(&line(&[0.0]), &line(&[0.0])).unwrap(), 0.0);
        assert_eq!(rho_upper(&line(&[0.0]), &line(&[1.0])).unwrap(), 1.0);
        let (a, b) = (line(&[0.0, 2.0]), line(&[1.0, 3.0]));
        assert_eq!(brute_w1(&a, &b), 1.0);
        assert_eq!(rho_upper(&a, &b).unwrap(), 1.0);
        // Unequal sizes: {0} vs {0, 2} moves half the mass a distance 2.
        assert_eq!(rho_upper(&line(&[0.0]), &line(&[0.0, 2.0])).unwrap(), 1.0);
    }

    #[test]
    fn rho_errors() {
        let a = EmpiricalMeasure::from_rows(&[vec![0.0, 0.0]]).unwrap();
        let b = EmpiricalMeasure::from_rows(&[vec![0.0, 0.0], vec![1.0, 1.0]]).unwrap();
        assert!(matches!(rho_upper(&a, &line(&[0.0])), Err(MeasureError::DimensionMismatch { .. })));
        assert!(matches!(rho_upper(&a, &b), Err(MeasureError::SizeMismatch { .. })));
        let many: Vec<f64> = (0..200).map(|i| i as f64).collect();
        let big = EmpiricalMeasure::new(many.clone(), 2).unwrap();
        let est = rho_upper_with(&big, &big.scaled(2.0), &RhoOptions::default()).unwrap();
        assert_eq!(est.mode, RhoMode::Paired);
    }

    #[test]
    fn flow_distance_examples() {
        let grid = vec![0.0, 1.0];
        let f = MeasureFlow::new(grid.clone(), vec![line(&[0.0]), line(&[0.0])]).unwrap();
        let g = MeasureFlow::new(grid.clone(), vec![line(&[0.0]), line(&[1.0])]).unwrap();
        assert_eq!(flow_distance(&f, &f).unwrap(), 0.0);
        assert_eq!(flow_distance(&f, &g).unwrap(), 1.0);

        let p = MeasureFlow::new(grid.clone(), vec![line(&[0.0, 1.0]), line(&[0.0, 1.0])]).unwrap();
        let q = MeasureFlow::new(grid.clone(), vec![line(&[0.5, 1.5]), line(&[0.2, 1.2])]).unwrap();
        let per_time: Vec<f64> = (0..2).map(|k| rho_upper(p.at(k), q.at(k)).unwrap()).collect();
        assert!((per_time[0] - 0.5).abs() < 1e-15 && (per_time[1] - 0.2).abs() < 1e-15);
        assert_eq!(flow_distance(&p, &q).unwrap(), 0.5);

        let h = MeasureFlow::new(vec![0.0, 2.0], vec![line(&[0.0]), line(&[0.0])]).unwrap();
        assert_eq!(flow_distance(&f, &h), Err(MeasureError::GridMismatch));
    }

    #[test]
    fn coupled_distance_examples() {
        let x = line(&[0.0, 2.0]);
        assert_eq!(coupled_moment_distance(&x, &x).unwrap(), 0.0);
        assert_eq!(coupled_moment_distance(&line(&[0.0, 0.0]), &line(&[1.0, 1.0])).unwrap(), 1.0);
        assert_eq!(coupled_moment_distance(&x, &line(&[1.0, 5.0])).unwrap(), 5.0_f64.sqrt());
        assert!(matches!(
            coupled_moment_distance(&x, &line(&[1.0])),
            Err(MeasureError::SizeMismatch { .. })
        ));
    }

    fn cloud(dim: usize, n: usize) -> impl Strategy<Value = EmpiricalMeasure> {
        prop::collection::vec(-5.0..5.0f64, n * dim)
            .prop_map(move |p| EmpiricalMeasure::new(p, dim).unwrap())
    }

    proptest! {
        #[test]
        fn assignment_matches_brute_force(
            (a, b) in (1usize..=6, 1usize..=3).prop_flat_map(|(n, d)| (cloud(d, n), cloud(d, n)))
        ) {
            let exact = rho_upper(&a, &b).unwrap();
            prop_assert!((exact - brute_w1(&a, &b)).abs() < 1e-10);
            prop_assert_eq!(exact, rho_upper(&b, &a).unwrap());
        }

        #[test]
        fn triangle_inequality(
            (a, b, c) in (1usize..=6, 1usize..=3)
                .prop_flat_map(|(n, d)| (cloud(d, n), cloud(d, n), cloud(d, n)))
        ) {
            let ab = rho_upper(&a, &b).unwrap();
            let bc = rho_upper(&b, &c).unwrap();
            let ac = rho_upper(&a, &c).unwrap();
            prop_assert!(ac <= ab + bc + 1e-10);
        }

        #[test]
        fn paired_bounds_exact_and_moment_bounds_paired(
            (a, b) in (1usize..=8).prop_flat_map(|n| (cloud(1, n), cloud(1, n)))
        ) {
            let paired = paired_bound(&a, &b).unwrap();
            prop_assert!(paired >= rho_upper(&a, &b).unwrap() - 1e-12);
            prop_assert!(coupled_moment_distance(&a, &b).unwrap() >= paired - 1e-12);
        }

        #[test]
        fn second_moment_scales_quadratically(a in cloud(2, 5), c in -4.0..4.0f64) {
            // Powers of two keep the scaling exact in floating point.
            let c = c.signum() * 2f64.powi(c.abs() as i32);
            prop_assert_eq!(a.scaled(c).second_moment_norm(), c * c * a.second_moment_norm());
        }
    }
}
