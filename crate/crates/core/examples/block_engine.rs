//! Conley–Zehnder indices of iterates from a block decomposition.

use meanindex::contact::{chi_closed_form, chi_limit_compare, Direction, ReebOrbitSystem};
use meanindex::models::{engine_orbit, Block, LinearizedReturnMap};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let good = LinearizedReturnMap::new(vec![Block::Elliptic { theta: 2f64.sqrt() - 1.0 }], 1)?;
    let bad = LinearizedReturnMap::new(vec![Block::NegativeHyperbolic { eigenvalue: -3.0, winding: 0 }], 1)?;
    for (name, map) in [("good", &good), ("bad", &bad)] {
        let mus: Vec<i64> = (1..=8).map(|k| map.mu(k)).collect::<Result<_, _>>()?;
        println!("{name}: class {:?}, mean index {:.6}, mu = {mus:?}", map.class(), map.mean_index().to_f64());
    }
    let sys = ReebOrbitSystem::new(2, vec![engine_orbit("e", good, 2)?, engine_orbit("h", bad, 2)?], None, false)?;
    println!("chi+ closed form {}", chi_closed_form(&sys, Direction::Positive)?);
    let cmp = chi_limit_compare(&sys, Direction::Positive, &[100, 1_000, 10_000])?;
    for row in &cmp.rows {
        println!("N = {:>5}  chi/N = {:.6}", row.big_n, row.normalized);
    }
    Ok(())
}
