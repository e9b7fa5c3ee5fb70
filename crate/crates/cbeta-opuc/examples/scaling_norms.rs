//! The fractional-index norm ladder behind the dimension estimate, and
//! the crossing equation that balances polynomial growth against the
//! distance to the unit circle.
//!
//! ||a||_x^2 sums |a_k|^2 up to the integer part of x plus a linear
//! sliver of the next term; x_r solves
//! (1 - r) ||phi||_{x} ||psi||_{x} = sqrt(2). For the free sequence
//! (all coefficients zero) everything is closed-form: phi_k(1) = 1, so
//! ||phi||_x^2 = x + 1 and x(r) = sqrt(2)/(1 - r) - 1.
//!
//! Run with: cargo run --release --example scaling_norms

use cbeta_opuc::dimension::{solve_xr, JlNormLadder};

fn main() -> cbeta_opuc::Result<()> {
    // A tiny ladder by hand: terms |a_k|^2 = 1 for k = 0..7 (stored as
    // log |a_k|^2 = 0), so the norm at x = 2.5 is exactly 3.5.
    let ones = JlNormLadder::from_log_sq_terms([0.0; 8]);
    println!("all-ones ladder:");
    for x in [0.0, 1.0, 2.5, 6.25] {
        println!("  ||1||_{x:<4}^2 = {}", ones.norm_sq(x)?);
    }

    // A geometric ladder exercises the log-domain bookkeeping: terms
    // |a_k|^2 = 4^k reach 4^40 without overflow trouble.
    let geometric = JlNormLadder::from_log_sq_terms((0..=40).map(|k| k as f64 * 4f64.ln()));
    let exact = |x: f64| {
        let whole = x.floor();
        // sum_{k<=m} 4^k + frac * 4^{m+1}
        ((4f64.powf(whole + 1.0) - 1.0) / 3.0) + (x - whole) * 4f64.powf(whole + 1.0)
    };
    println!("\ngeometric ladder |a_k|^2 = 4^k:");
    for x in [3.25, 20.5, 39.75] {
        let got = geometric.norm_sq(x)?;
        let want = exact(x);
        println!(
            "  ||a||_{x:<5}^2 = {got:.6e}   closed form {want:.6e}   rel. gap {:.1e}",
            ((got - want) / want).abs()
        );
    }

    // Crossing equation on the free sequence vs its closed form.
    let n = 4096;
    let free = JlNormLadder::from_log_sq_terms(std::iter::repeat_n(0.0, n));
    println!("\ncrossing point x(r) on the free sequence (closed form sqrt(2)/(1-r) - 1):");
    for r in [0.0, 0.5, 0.9, 0.999] {
        let x = solve_xr(r, &free, &free)?;
        let closed = std::f64::consts::SQRT_2 / (1.0 - r) - 1.0;
        println!("  r = {r:<6}  x_r = {x:12.6}   closed form {closed:12.6}");
    }
    Ok(())
}
