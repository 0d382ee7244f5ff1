//! The closed form on rational ellipsoids: always 1/2 and 0.

use meanindex::contact::{euler_report, Direction};
use meanindex::exactnum::rat;
use meanindex::models::{ellipsoid_system, EllipsoidSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let weight_sets = [vec![rat(1, 1), rat(1, 1)], vec![rat(1, 1), rat(3, 2), rat(7, 5)], vec![rat(2, 1), rat(3, 1), rat(5, 1), rat(7, 1)]];
    for w in weight_sets {
        let sys = ellipsoid_system(&EllipsoidSpec::rational(w.clone())?)?;
        let r = euler_report(&sys)?;
        let shown: Vec<String> = w.iter().map(ToString::to_string).collect();
        println!("weights ({}): chi+ = {}, chi- = {}", shown.join(", "), r.chi_plus, r.chi_minus);
        for c in r.per_orbit.iter().filter(|c| Direction::Positive.includes(c.delta)) {
            println!("  {} delta = {}", c.orbit, c.delta);
        }
    }
    Ok(())
}
