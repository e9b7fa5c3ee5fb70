//! Histogram the norm-growth exponent into an empirical large-deviation
//! rate curve and compare it with the closed-form parabola.
//!
//! The norm exponent concentrates at 1 + 2/beta under the raw law; the
//! probability of landing elsewhere decays polynomially in n with
//! exponent I(x) = (beta/8)(x - 1 - 2/beta)^2, so
//! -log(frequency)/log n traces the parabola.
//!
//! Run with: cargo run --release --example rate_curve

use cbeta_opuc::ldp::{
    empirical_rate, rate_curve_minimum, rate_eval, RateCurveOptions, RateFunctionSpec, RateKind,
};
use cbeta_opuc::verblunsky::MeasureTag;

fn main() -> cbeta_opuc::Result<()> {
    let beta = 4.0;
    let n = 1 << 12;
    let trials = 6000;

    let report = empirical_rate(&RateCurveOptions {
        beta,
        measure: MeasureTag::Q,
        n_ladder: vec![n],
        trials,
        bins: 36,
        seed: 99,
        workers: 4,
    })?;

    println!(
        "beta = {beta}, n = {n}, {trials} trajectories, {} occupied bins",
        report.points.len()
    );
    println!("\n  exponent x   empirical rate   analytic I(x)    count");
    let spec = RateFunctionSpec {
        beta,
        which: RateKind::I,
    };
    for point in &report.points {
        // Print the informative center of the curve, skipping the noisy
        // single-count tails.
        if point.count < 3 {
            continue;
        }
        println!(
            "  {:+9.4}   {:14.4}   {:13.4}   {:6}",
            point.x,
            point.empirical_rate,
            rate_eval(spec, point.x),
            point.count
        );
    }

    let (vertex, curvature) = rate_curve_minimum(&report.points, 0.4)?;
    println!("\nfitted minimum:   x = {vertex:.4}, curvature = {curvature:.4}");
    println!(
        "analytic minimum: x = {:.4}, curvature = {:.4}",
        1.0 + 2.0 / beta,
        beta / 4.0
    );
    Ok(())
}
