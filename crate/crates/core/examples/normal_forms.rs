//! Hermite and Smith normal forms, saturation and lattice index.

use meanindex::lattice::{
    elementary_divisors, hermite_normal_form, lattice_index, matrix_to_text, saturation, smith_normal_form,
    to_int_vec,
};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = vec![to_int_vec(&[2, 4, 4]), to_int_vec(&[-6, 6, 12]), to_int_vec(&[10, -4, -16])];
    let hnf = hermite_normal_form(&rows)?;
    print!("HNF:\n{}", matrix_to_text(hnf.basis()));
    let snf = smith_normal_form(&rows);
    println!("Smith diagonal: {:?}", snf.diagonal.iter().map(ToString::to_string).collect::<Vec<_>>());
    println!("elementary divisors: {:?}", elementary_divisors(&hnf).iter().map(ToString::to_string).collect::<Vec<_>>());
    let sat = saturation(&hnf);
    print!("saturation:\n{}", matrix_to_text(sat.basis()));
    println!("[sat : L] = {:?}", lattice_index(&hnf, &sat)?.finite().map(ToString::to_string));
    Ok(())
}
