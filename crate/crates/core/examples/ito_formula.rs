//! Term-by-term discrete Itô formula for `Φ(x, μ) = |x|² + ∫|y|²μ(dy)` on a
//! reflected mean-field process in the unit disc.

use mvsde::calculus::{ito_residual, mixed};
use mvsde::operators::{CatalogOperator, OperatorKind};
use mvsde::solver::{simulate, InitialCondition, MeanFieldLinear, SchemeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let op = CatalogOperator::new(OperatorKind::NormalConeBall {
        center: vec![0.0, 0.0],
        radius: 1.0,
    })?;
    let coeffs = MeanFieldLinear::new(2, 0.5, 0.5, 0.8);
    let phi = mixed(2, 1.0);
    let names = [
        "-<dPhi, dK>",
        "b . dPhi h",
        "martingale",
        "1/2 tr(a D2Phi) h",
        "measure drift",
        "measure trace",
        "-E<dmuPhi, dK>",
    ];
    for h in [0.01, 0.005] {
        let config = SchemeConfig::new(h, 1000, 1.0, 5, InitialCondition::Uniform {
            lo: vec![-0.5, -0.5],
            hi: vec![0.5, 0.5],
        });
        let traj = simulate(&op, &coeffs, &config)?;
        let report = ito_residual(&traj, &phi, &coeffs, 0, traj.steps())?;
        println!("h = {h}");
        for (name, value) in names.iter().zip(report.terms) {
            println!("  {name:<20} {value:>12.6}");
        }
        println!("  {:<20} {:>12.6}\n  {:<20} {:>12.2e}\n", "lhs", report.lhs, "residual", report.residual);
    }
    Ok(())
}
