//! Distances between empirical measures: exact on the line, exact assignment
//! for small ensembles, and the paired coupling bound otherwise.

use mvsde::measures::{paired_bound, rho_upper_with, EmpiricalMeasure, RhoOptions};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let line_a = EmpiricalMeasure::new(vec![0.0, 1.0, 2.0], 1)?;
    let line_b = EmpiricalMeasure::new(vec![0.5, 3.0], 1)?;
    let r = rho_upper_with(&line_a, &line_b, &RhoOptions::default())?;
    println!("line, unequal sizes: {:.4} ({:?})", r.value, r.mode);

    let ring = |n: usize, shift: f64, phase: f64| {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let t = std::f64::consts::TAU * (i as f64 + phase) / n as f64;
                vec![t.cos() + shift, t.sin()]
            })
            .collect();
        EmpiricalMeasure::from_rows(&rows).unwrap()
    };
    for n in [16, 200] {
        let (mu, nu) = (ring(n, 0.0, 0.0), ring(n, 0.0, 0.5));
        let r = rho_upper_with(&mu, &nu, &RhoOptions::default())?;
        println!("rotated ring, N = {n:<4} rho <= {:.5} ({:?}); paired {:.5}", r.value, r.mode, paired_bound(&mu, &nu)?);
    }
    let (mu, nu) = (ring(32, 0.0, 0.0), ring(32, 0.3, 0.0));
    println!("translated ring: rho <= {:.5}", rho_upper_with(&mu, &nu, &RhoOptions::default())?.value);
    Ok(())
}
