//! Scan of the iterates `kΔ/2N` against the arc `[0, n/N]`.

use meanindex::cli::parse_lambdas;
use meanindex::models::cpn_mean_indices;
use meanindex::resonance::prohibited_region_scan;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (lambdas, table) = parse_lambdas(&["0".into(), "sqrt2".into(), "sqrt3".into()], &[])?;
    let problem = cpn_mean_indices(&lambdas, table)?;
    let scan = prohibited_region_scan(&problem, 100_000, None)?;
    println!("k <= {}, arc [0, {:.6}]", scan.k_max, scan.arc_end);
    println!("violations: {}", scan.violation_count);
    println!("closest approach: margin {:.3e} at k = {}", scan.min_margin, scan.min_margin_k);
    println!("histogram: {:?}", scan.margin_histogram);
    Ok(())
}
