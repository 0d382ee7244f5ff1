//! Truncated complexes of the golden ellipsoid against the closed form.

use meanindex::contact::{asymptotic_morse, chi_limit_compare, Direction};
use meanindex::models::{ellipsoid_system, EllipsoidSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let sys = ellipsoid_system(&EllipsoidSpec::numeric(vec![1.0, phi])?)?;
    let n_list = [10, 100, 1_000, 10_000, 100_000];
    let cmp = chi_limit_compare(&sys, Direction::Positive, &n_list)?;
    println!("closed form {}", cmp.closed_form);
    for row in &cmp.rows {
        println!("N = {:>6}  chi = {:>6}  N·|diff| = {:.4}", row.big_n, row.chi, row.scaled_difference);
    }
    println!("C_theory = {}, within envelope: {}", cmp.c_theory, cmp.within_envelope);
    let morse = asymptotic_morse(&sys, Direction::Positive, &n_list)?;
    println!("generator density {:?}", morse.empirical_rhs.last());
    Ok(())
}
