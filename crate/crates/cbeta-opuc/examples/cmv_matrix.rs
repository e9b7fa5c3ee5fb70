//! Build the five-diagonal unitary matrix attached to a coefficient
//! sequence and verify its two structural guarantees: unitarity and the
//! banded sparsity pattern.
//!
//! Run with: cargo run --release --example cmv_matrix

use cbeta_opuc::opuc::build_cmv;
use cbeta_opuc::verblunsky::{MeasureTag, RadialLaw, VerblunskySequence};
use num_complex::Complex64;

fn main() -> cbeta_opuc::Result<()> {
    let beta = 2.0;

    // Small matrix, printed entry by entry. The terminal coefficient must
    // be unimodular; keep the sampled angle and promote the modulus.
    let mut coeffs = VerblunskySequence::sample(RadialLaw::cbeta(beta)?, MeasureTag::Q, 6, 1, 0).coeffs;
    let last = *coeffs.last().expect("non-empty");
    *coeffs.last_mut().expect("non-empty") = last / last.norm();

    let matrix = build_cmv(&coeffs)?;
    println!("6 x 6 five-diagonal matrix (|entry| shown, . = structural zero):\n");
    for i in 0..matrix.size() {
        let row: Vec<String> = (0..matrix.size())
            .map(|j| {
                let v = matrix.get(i, j);
                if v == Complex64::ZERO {
                    "   .  ".into()
                } else {
                    format!("{:.4}", v.norm())
                }
            })
            .collect();
        println!("  {}", row.join("  "));
    }

    println!("\nstructure checks across sizes:");
    println!("   n    unitarity defect   worst entry outside the band");
    for n in [4usize, 16, 64] {
        let mut coeffs =
            VerblunskySequence::sample(RadialLaw::cbeta(beta)?, MeasureTag::Q, n, 7, 0).coeffs;
        let last = *coeffs.last().expect("non-empty");
        *coeffs.last_mut().expect("non-empty") = last / last.norm();
        let matrix = build_cmv(&coeffs)?;
        println!(
            "  {n:3}   {:.3e}          {:.1e}",
            matrix.unitarity_defect(),
            matrix.max_outside_band()
        );
    }
    Ok(())
}
