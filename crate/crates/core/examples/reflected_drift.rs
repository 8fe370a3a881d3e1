//! Constant drift pushing against the boundary of `[0, ∞)`.
//!
//! The exact solution is `X_t = max(1 - t, 0)` with `K_t = -(t - 1)⁺`; the
//! scheme reproduces it on the grid.

use mvsde::operators::{CatalogOperator, OperatorKind};
use mvsde::solver::{simulate, ConstantDrift, InitialCondition, SchemeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let op = CatalogOperator::new(OperatorKind::NormalConeBox {
        lo: vec![0.0],
        hi: vec![f64::INFINITY],
    })?;
    let drift = ConstantDrift::new(vec![-1.0]);
    for h in [0.1, 0.05, 0.025] {
        let config = SchemeConfig::new(h, 1, 2.0, 0, InitialCondition::Point { point: vec![1.0] });
        let traj = simulate(&op, &drift, &config)?;
        let mut err = 0.0_f64;
        for (k, t) in traj.grid().iter().enumerate() {
            let x = (1.0 - t).max(0.0);
            err = err.max((traj.positions(k)[0] - x).abs());
            err = err.max((traj.constraint(k)[0] + (t - 1.0).max(0.0)).abs());
        }
        let last = traj.steps();
        println!(
            "h = {h:<6} X_T = {:.3e}  K_T = {:.6}  |K|_T = {:.6}  max grid error {err:.1e}",
            traj.positions(last)[0],
            traj.constraint(last)[0],
            traj.variation(last)[0]
        );
    }
    Ok(())
}
