//! Dimension and component count of the closure of `{kΔ/2N}` in the torus.

use meanindex::exactnum::{ExactScalar, SymbolTable};
use meanindex::resonance::{gamma_structure, ChernNumber, MeanIndexProblem};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cases: [(&str, &[&str]); 3] = [
        ("rational", &["1/2", "1/3", "5/4"]),
        ("one irrational", &["a", "2*a + 1/3", "1"]),
        ("independent", &["a", "b", "a + b"]),
    ];
    for (name, deltas) in cases {
        let deltas = deltas.iter().map(|d| d.parse::<ExactScalar>()).collect::<Result<Vec<_>, _>>()?;
        let table = SymbolTable::new().with("a", 2f64.sqrt()).with("b", 3f64.sqrt());
        let problem = MeanIndexProblem::new(1, ChernNumber::Finite(2), deltas, None, table)?;
        let g = gamma_structure(&problem)?;
        println!(
            "{name:>15}: m = {}, rk R = {}, dim Gamma0 = {}, components = {}",
            g.m, g.rank_r, g.dim_gamma0, g.torsion_order
        );
    }
    Ok(())
}
