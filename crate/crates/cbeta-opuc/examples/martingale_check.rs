//! Verify the defining martingale of the coefficient construction: at a
//! uniformly random angle, the inverse squared modulus of the orthogonal
//! polynomial has mean exactly 1 at every degree.
//!
//! This is the Monte Carlo face of the normalization of the truncated
//! spectral density; the one-step version isolates a single coefficient
//! and checks the Poisson kernel mean at fixed angles.
//!
//! Run with: cargo run --release --example martingale_check

use cbeta_opuc::measure::{martingale_check, one_step_kernel_mean, MartingaleOptions};

fn main() -> cbeta_opuc::Result<()> {
    let beta = 4.0;
    let trials = 1_000_000;

    let report = martingale_check(&MartingaleOptions {
        beta,
        n_max: 16,
        trials,
        seed: 5,
        workers: 4,
        allow_deep: false,
    })?;
    println!("E[ |phi_n(e^(i theta))|^-2 ] over {trials} trajectories, beta = {beta}:");
    println!("   n    mean      stderr    within 3 SE of 1");
    for row in &report.rows {
        // The depth ladder doubles; print the powers of two only.
        if row.n.is_power_of_two() {
            println!(
                "  {:2}   {:.5}   {:.5}   {}",
                row.n, row.mean, row.stderr, row.pass
            );
        }
    }
    let outside = report.rows.iter().filter(|r| !r.pass).count();
    println!(
        "  ({outside} of {} depths outside 3 SE; the summand's tails thicken with \
         depth, so isolated exceedances appear at modest trial counts)",
        report.rows.len()
    );

    println!("\none-step Poisson kernel mean E[P(gamma e^(i delta))] at coefficient k = 0:");
    for delta in [0.0, 1.0, 2.0] {
        let row = one_step_kernel_mean(0, beta, delta, trials, 17, 4)?;
        println!(
            "  delta = {delta:.1}:  {:.5} +- {:.5}   within 3 SE: {}",
            row.mean, row.stderr, row.pass
        );
    }
    Ok(())
}
