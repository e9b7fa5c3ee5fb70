//! Concentration of the norm-growth exponent: the squared L2 norm of
//! the polynomial sequence grows like n^(1 + 2/beta) under the raw law
//! and n^(1 - 2/beta) under the size-biased law, with Gaussian
//! fluctuations of variance (4/beta) log n in the log.
//!
//! Run with: cargo run --release --example norm_exponent

use cbeta_opuc::ldp::{run_upsilon_experiment, UpsilonOptions};
use cbeta_opuc::verblunsky::MeasureTag;

fn main() -> cbeta_opuc::Result<()> {
    let beta = 4.0;
    let n_max = 1 << 13;
    let trials = 96;

    println!("beta = {beta}, n = {n_max}, {trials} trajectories per law\n");
    for measure in [MeasureTag::Q, MeasureTag::Q0] {
        let report = run_upsilon_experiment(&UpsilonOptions {
            beta,
            n_max,
            trials,
            measure,
            seed: 61,
            workers: 4,
            truncate_delta: None,
        })?;
        let typical = match measure {
            MeasureTag::Q => 1.0 + 2.0 / beta,
            _ => 1.0 - 2.0 / beta,
        };
        println!("{measure}:");
        println!(
            "  exponent  = {:.4} +- {:.4}   (typical value {typical:.4})",
            report.mean, report.stderr
        );
        println!(
            "  var log|phi|^2 = {:.2}          (CLT scale (4/beta) log n = {:.2})\n",
            report.var_log_norm_sq,
            4.0 / beta * (n_max as f64).ln()
        );
    }
    Ok(())
}
