//! Resonance lattice and generator verdicts for a quadratic flow on ℂPⁿ with
//! generic (symbolic) eigenvalues.

use meanindex::exactnum::{ExactScalar, Symbol, SymbolTable};
use meanindex::lattice::matrix_to_text;
use meanindex::models::cpn_mean_indices;
use meanindex::resonance::{resonance_lattice_exact, theorem_one_report, IndexFilter};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in 2..=4 {
        let lambdas: Vec<ExactScalar> = (0..=n)
            .map(|i| Symbol::new(format!("l{i}")).map(ExactScalar::symbol))
            .collect::<Result<_, _>>()?;
        let problem = cpn_mean_indices(&lambdas, SymbolTable::new())?;
        let lattice = resonance_lattice_exact(&problem)?;
        let report = theorem_one_report(&problem, IndexFilter::None)?;
        println!("n = {n}");
        for (label, d) in problem.labels().iter().zip(problem.deltas()) {
            println!("  {label} = {d}");
        }
        print!("  basis:\n{}", matrix_to_text(lattice.basis()));
        if let (Some(sum), Some(bound)) = (&report.sum_value, &report.bound_value) {
            println!("  sum = {sum}, bound = {bound}, consistent = {}", report.consistent());
        }
    }
    Ok(())
}
