//! Ultimate boundedness of a reflected Ornstein-Uhlenbeck process in the unit
//! disc: `E|X_t|² ≤ S e^{-βt} E|ξ|² + M` with constants taken from the
//! Lyapunov data.

use mvsde::scenario::{self, Scenario};
use mvsde::solver::simulate;
use mvsde::stability::{gate_failure, hypothesis_gates, ultimate_boundedness_check, SlackOptions, UltimateBound};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let overrides = ["scenario=\"reflected-ou-ball\"".to_string(), "scheme.horizon=4.0".into(), "scheme.particles=4000".into()];
    let sc = Scenario::from_config(scenario::load(None, &overrides, None)?)?;
    let spec = sc.lyapunov.clone().ok_or("no Lyapunov data")?;
    let traj = simulate(&sc.operator, sc.coefficients.as_ref(), &sc.scheme)?;

    let gates = hypothesis_gates(&spec, sc.coefficients.as_ref(), &traj)?;
    println!("failed gate: {:?}", gate_failure(&gates));
    let bound = UltimateBound::from_spec(&spec);
    println!("S = {}, beta = {}, M = {}", bound.s, bound.beta, bound.m);
    let options = SlackOptions {
        c_h: sc.config.stability.c_h,
        ..SlackOptions::default()
    };
    let curve = ultimate_boundedness_check(&traj, &bound, &options);
    for k in (0..curve.grid.len()).step_by(50) {
        println!("t = {:<5.2} m = {:.4}  bound = {:.4}", curve.grid[k], curve.moments[k], curve.bound[k]);
    }
    println!("pass = {}, max violation {:.3e}", curve.pass, curve.max_violation);
    Ok(())
}
