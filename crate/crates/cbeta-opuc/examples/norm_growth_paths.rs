//! Watch the normalized log-modulus process Z_n(t) along single
//! trajectories, together with the norm-growth exponent and the running
//! maximum of t - Z_n(t) that controls it.
//!
//! The harmonic time change t_k = H_k / H_n stretches early coefficients:
//! half of [0, 1] is spent on the first sqrt(n) indices. On this clock
//! Z_n behaves like a Brownian motion of variance 4/beta per unit time,
//! and the norm exponent is max_t (t - Z_n(t)) up to O(loglog n/log n).
//!
//! Run with: cargo run --release --example norm_growth_paths

use cbeta_opuc::ldp::{laplace_max, sample_zn_path, TimeScale};
use cbeta_opuc::verblunsky::MeasureTag;

fn main() -> cbeta_opuc::Result<()> {
    let beta = 4.0;
    let n = 1 << 14;

    let scale = TimeScale::new(n)?;
    println!(
        "harmonic clock at n = {n}: t(1) = {:.4}, t(sqrt n) = {:.4}, t(n) = 1",
        scale.t(1),
        scale.t((n as f64).sqrt() as usize),
    );

    // A fine grid (spacing 1e-3) so the running maximum is trustworthy.
    let grid: Vec<f64> = (0..=1000).map(|i| i as f64 / 1000.0).collect();

    println!("\n                 t:   0.00   0.25   0.50   0.75   1.00    upsilon   max(t - Z)");
    for stream in 0..4u64 {
        let path = sample_zn_path(n, &grid, MeasureTag::Q, beta, 321, stream)?;
        let marks: Vec<String> = [0, 250, 500, 750, 1000]
            .iter()
            .map(|&i| format!("{:+.2}", path.values[i]))
            .collect();
        println!(
            "  trajectory {stream}:    {}    {:+.3}     {:+.3}",
            marks.join("  "),
            path.upsilon,
            laplace_max(&path)?
        );
    }

    println!(
        "\ntypical exponent under the raw law: 1 + 2/beta = {:.3}",
        1.0 + 2.0 / beta
    );
    println!("(single paths scatter around it; the rate-curve example shows the deviations)");
    Ok(())
}
