//! Recovering an integer relation `a·x ≡ 0 (mod M)` from floats.

use meanindex::lattice::integer_relation;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let modulus = 6.0;
    let (s2, s3) = (2f64.sqrt(), 3f64.sqrt());
    // 3·x0 − 2·x1 + x2 = 6
    let x = [s2, s3, 6.0 - 3.0 * s2 + 2.0 * s3];
    for c in integer_relation(&x, modulus, 10, 1e-10)?.iter().take(5) {
        println!("{:?}  residual {:.2e}  confidence {:.3}", c.vector, c.residual, c.confidence);
    }
    Ok(())
}
