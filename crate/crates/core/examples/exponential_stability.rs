//! Exponential mean-square stability of `dX = -X dt`: hypothesis gates, the
//! bound `m(t) ≤ (a₂/a₁) e^{-αt} m(0)` and the fitted decay rate.

use mvsde::scenario::Scenario;
use mvsde::solver::simulate;
use mvsde::stability::{decay_fit, exponential_bound_check, max_dissipative_alpha, SlackOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let sc = Scenario::named("deterministic-contraction")?;
    let spec = sc.lyapunov.clone().ok_or("no Lyapunov data")?;
    let traj = simulate(&sc.operator, sc.coefficients.as_ref(), &sc.scheme.with_step(1e-4))?;

    let report = exponential_bound_check(&traj, &spec, sc.coefficients.as_ref(), &SlackOptions::default())?;
    println!("outcome {:?}", report.outcome);
    println!("dissipativity value {:.3e}, k-condition min {:.3e}", report.gates.dissipativity.value, report.gates.k_condition.min_increment);
    let candidates: Vec<f64> = (1..=12).map(|i| 0.25 * i as f64).collect();
    let alpha_max = max_dissipative_alpha(&spec, sc.coefficients.as_ref(), traj.flow().measures(), &candidates)?;
    println!("largest admissible alpha on the grid {{0.25, .., 3}}: {alpha_max:?}");
    let fit = decay_fit(&traj, 0.2)?;
    println!("beta_hat = {:.6} (r2 {:.8})", fit.beta_hat, fit.r2);

    let adversarial = spec.with_alpha(3.0);
    let report = exponential_bound_check(&traj, &adversarial, sc.coefficients.as_ref(), &SlackOptions::default())?;
    println!("alpha = 3: {:?}", report.outcome);
    Ok(())
}
