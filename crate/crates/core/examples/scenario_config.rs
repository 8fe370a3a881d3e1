//! Loading a scenario from TOML, printing its normalized form and running it.

use mvsde::scenario::{validate_config_text, Config, Scenario};
use mvsde::solver::simulate;

const CONFIG: &str = r#"
scenario = "reflected-ou-ball"
seed = 42

[scheme]
h = 0.02
particles = 200

[coefficients]
s = 0.8
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let normalized = validate_config_text(CONFIG)?;
    print!("{normalized}");
    let config: Config = toml::from_str(&normalized)?;
    let sc = Scenario::from_config(config)?;
    let traj = simulate(&sc.operator, sc.coefficients.as_ref(), &sc.scheme)?;
    let last = traj.steps();
    let max_var = traj.variation(last).iter().copied().fold(0.0, f64::max);
    println!("\nE|X_T|^2 = {:.4}, largest |K|_T = {max_var:.4}", traj.second_moments()[last]);

    match validate_config_text("scenario = \"null\"\n[scheme]\nh = 0.0\n[picard]\ntol = 0.0\n") {
        Ok(_) => unreachable!(),
        Err(errors) => println!("\nrejected:\n{errors}"),
    }
    Ok(())
}
