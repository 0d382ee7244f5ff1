//! Mean Euler characteristics distinguishing the Brieskorn structures.

use meanindex::models::{admissible_p, ustilovsky_chi, UstilovskySpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for n in [3, 5, 7] {
        let values: Vec<String> = admissible_p(8)
            .into_iter()
            .map(|p| ustilovsky_chi(UstilovskySpec::new(n, p)?).map(|(plus, _)| format!("p={p}: {plus}")))
            .collect::<Result<_, _>>()?;
        println!("S^{}: {}", 2 * n - 1, values.join(", "));
    }
    Ok(())
}
