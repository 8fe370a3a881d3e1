//! Measure derivatives of the library test functions against finite
//! differences of their empirical projections.

use mvsde::calculus::{lift_gradient_check, mixed, BoundedComposition, LinearProduct, SecondMomentFunctional, TestFunction};
use mvsde::measures::EmpiricalMeasure;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for d in 1..=3 {
        let points: Vec<f64> = (0..8 * d).map(|i| ((i * 7919) % 23) as f64 / 11.5 - 1.0).collect();
        let mu = EmpiricalMeasure::new(points, d)?;
        let functions: Vec<(&str, Box<dyn TestFunction>)> = vec![
            ("second-moment", Box::new(SecondMomentFunctional { dim: d })),
            ("linear-product", Box::new(LinearProduct { c: vec![1.0; d], e: vec![0.5; d] })),
            ("bounded-composition", Box::new(BoundedComposition { dim: d })),
            ("mixed", Box::new(mixed(d, 2.0))),
        ];
        for (name, f) in functions {
            let r = lift_gradient_check(f.as_ref(), &mu, 1e-4);
            println!("d = {d}  {name:<20} max error {:.2e}", r.max_abs_error);
        }
    }
    Ok(())
}
