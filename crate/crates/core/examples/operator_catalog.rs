//! Resolvents and Yosida approximations of every catalog operator, with a
//! sampled check of nonexpansiveness and monotonicity.

use mvsde::operators::{axiom_check, catalog_samples, resolve, yosida, CatalogOperator};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = [1.7, -0.4];
    println!("{:<28} {:>24} {:>24}", "operator", "J_1(x)", "A_1(x)");
    for kind in catalog_samples(2) {
        let op = CatalogOperator::new(kind.clone())?;
        let j = resolve(&op, &x, 1.0)?;
        let a = yosida(&op, &x, 1.0)?;
        println!("{:<28} {:>24} {:>24}", kind.name(), format!("{j:.4?}"), format!("{a:.4?}"));
    }

    println!();
    for kind in catalog_samples(3) {
        let op = CatalogOperator::new(kind.clone())?;
        let r = axiom_check(&op, kind.name(), 1000, &[0.1, 1.0, 10.0], 3.0, 0, 1e-10)?;
        println!(
            "{:<28} expansion {:>9.1e}  pairing {:>9.1e}  lambda-independent {:<6} {}",
            r.operator,
            r.max_expansion,
            r.min_monotone_pairing,
            r.lambda_independent.map_or("-".to_string(), |b| b.to_string()),
            if r.pass { "ok" } else { "FAILED" }
        );
    }
    Ok(())
}
