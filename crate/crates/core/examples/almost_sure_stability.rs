//! Tail suprema over many seeds: the soft-threshold flow reaches zero in
//! finite time, the contraction decays exponentially, the null flow stays put.

use mvsde::scenario::{self, Scenario};
use mvsde::stability::{as_stability_estimate, chebyshev_check, simulate_seeds};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seeds: Vec<u64> = (0..64).collect();
    let eps = [1e-3, 1e-2, 1e-1];
    for name in ["soft-threshold-flow", "deterministic-contraction", "null", "noisy-ou"] {
        let overrides = [format!("scenario=\"{name}\""), "scheme.horizon=16.0".into(), "scheme.particles=16".into()];
        let sc = Scenario::from_config(scenario::load(None, &overrides, None)?)?;
        let trajs = simulate_seeds(&sc.operator, sc.coefficients.as_ref(), &sc.scheme, &seeds)?;
        let report = as_stability_estimate(&trajs, &eps, 0.5)?;
        println!("{name:<28} fractions {:?} over {} paths", report.fractions, report.paths);
        if name == "noisy-ou" {
            let cheb = chebyshev_check(&trajs, &[1.0], 1.5, 100)?;
            println!("{:<28} P(sup|X - x0| > 1.5) = {:.4} <= {:.4}", "", cheb.probability, cheb.bound);
        }
    }
    Ok(())
}
