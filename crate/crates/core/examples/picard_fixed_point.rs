//! Fixed point of the law map on a short window, found by sweeping horizons
//! for contraction and then iterating.

use mvsde::measures::{EmpiricalMeasure, MeasureFlow};
use mvsde::operators::{CatalogOperator, OperatorKind};
use mvsde::solver::{contraction_window_sweep, picard_iterate, InitialCondition, MeanFieldLinear, PicardOptions, SchemeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let n = 500;
    let op = CatalogOperator::new(OperatorKind::Zero { dim: 1 })?;
    let coeffs = MeanFieldLinear::new(1, 1.0, 1.0, 0.3);
    let base = SchemeConfig::new(0.01, n, 4.0, 3, InitialCondition::Gaussian {
        mean: vec![1.0],
        std: vec![0.5],
    });

    let sweep = contraction_window_sweep(&op, &coeffs, &base, &[4.0, 2.0, 1.0, 0.5, 0.25], 0.5, |config| {
        let grid = config.grid()?;
        let at = |c: f64| EmpiricalMeasure::new(vec![c; n], 1).unwrap();
        Ok(vec![(MeasureFlow::constant(grid.clone(), at(1.0))?, MeasureFlow::constant(grid, at(0.0))?)])
    })?;
    for (horizon, ratio) in &sweep.points {
        println!("T = {horizon:<5} contraction ratio {ratio:.4}");
    }
    let window = sweep.window.ok_or("no contractive window")?;
    println!("window T = {window}\n");

    let outcome = picard_iterate(&op, &coeffs, &base.with_horizon(window), &PicardOptions::default())?;
    for (k, delta) in outcome.deltas.iter().enumerate() {
        println!("iteration {:>2}: rho = {delta:.3e}", k + 1);
    }
    let last = outcome.flow.len() - 1;
    println!("E X_T = {:.5}, converged = {}", outcome.flow.at(last).mean()[0], outcome.converged);
    Ok(())
}
