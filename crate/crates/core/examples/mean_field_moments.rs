//! Mean-field Ornstein-Uhlenbeck particles against their moment equations
//! `m₁' = (b̄ - a) m₁`, `m₂' = -2a m₂ + 2b̄ m₁² + s²`.

use mvsde::operators::{CatalogOperator, OperatorKind};
use mvsde::solver::{moment_monitor, simulate, InitialCondition, MeanFieldLinear, SchemeConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (a, bbar, s) = (1.0, 0.5, 0.3);
    let op = CatalogOperator::new(OperatorKind::Zero { dim: 1 })?;
    let coeffs = MeanFieldLinear::new(1, a, bbar, s);
    let config = SchemeConfig::new(0.005, 4000, 4.0, 1, InitialCondition::Point { point: vec![1.0] });
    let traj = simulate(&op, &coeffs, &config)?;

    let (mut m1, mut m2, mut t) = (1.0_f64, 1.0_f64, 0.0);
    let dt = 1e-4;
    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "t", "E X", "ode", "E X^2", "ode");
    for (k, tk) in traj.grid().iter().enumerate() {
        while t < tk - 1e-12 {
            let (d1, d2) = ((bbar - a) * m1, -2.0 * a * m2 + 2.0 * bbar * m1 * m1 + s * s);
            m1 += dt * d1;
            m2 += dt * d2;
            t += dt;
        }
        if k % 100 == 0 {
            let mu = traj.flow().at(k);
            println!("{tk:>5.2} {:>10.5} {m1:>10.5} {:>10.5} {m2:>10.5}", mu.mean()[0], mu.second_moment_norm());
        }
    }
    let report = moment_monitor(&traj, &[0.0])?;
    println!("\nE sup_t |X_t|^2 = {:.4}", report.sup_second_moment);
    Ok(())
}
