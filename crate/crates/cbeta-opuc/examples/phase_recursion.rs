//! The two independent routes to the polynomial modulus: the full 2x2
//! matrix recursion, and the product of Poisson kernels driven by the
//! relative phase recursion. They agree to near machine precision, which
//! is the workhorse cross-check behind every Monte Carlo experiment here.
//!
//! Run with: cargo run --release --example phase_recursion

use cbeta_opuc::opuc::{
    log_poisson_kernel, CoefficientFrame, EvalPoint, PolyTrajectory, ThetaGrid, TrajectoryState,
};
use cbeta_opuc::verblunsky::{MeasureTag, RadialLaw, VerblunskySequence};

fn main() -> cbeta_opuc::Result<()> {
    let beta = 2.0;
    let n = 2000;
    let seq = VerblunskySequence::sample(RadialLaw::cbeta(beta)?, MeasureTag::Q, n, 13, 0);

    // Route 1: Szego matrix recursion at z = 1 (log-scaled 2x2 states).
    let mut matrix_route = PolyTrajectory::new(EvalPoint::one());
    // Route 2: kernel-product recursion on gamma_k, which is alpha_k
    // rotated into the frame where the evaluation point is angle 0. At
    // that angle the relative phase vanishes identically, so each step
    // contributes exactly log P(gamma_k).
    let mut phase_route = TrajectoryState::new(ThetaGrid::empty());
    let mut frame = CoefficientFrame::new();

    let mut worst = 0.0f64;
    let mut kernel_sum = 0.0;
    for (k, &alpha) in seq.coeffs.iter().enumerate() {
        matrix_route.step(alpha)?;
        let gamma = frame.gamma_from_alpha(alpha);
        kernel_sum += log_poisson_kernel(gamma, 0.0);
        phase_route.step(gamma)?;

        let gap = (matrix_route.log_phi_inv_sq() - phase_route.log_phi_inv_sq_at_1()).abs();
        worst = worst.max(gap);
        if k + 1 == 10 || k + 1 == 100 || k + 1 == n {
            println!(
                "after {:4} steps: log|phi|^-2 = {:+12.6} (matrix) {:+12.6} (phases)  gap {:.2e}",
                k + 1,
                matrix_route.log_phi_inv_sq(),
                phase_route.log_phi_inv_sq_at_1(),
                gap
            );
        }
    }
    println!("\nworst disagreement over {n} steps: {worst:.2e}");
    println!("bare kernel-product sum of the same quantity: {kernel_sum:+12.6}");

    // The reversed polynomial rides along on the same recursion through
    // the (X, Y) accumulators.
    println!(
        "reversed-polynomial log|psi|^-2 at 1: {:+12.6} (matrix) {:+12.6} (X/Y route)",
        matrix_route.log_psi_inv_sq(),
        phase_route.log_psi_inv_sq_at_1()
    );
    Ok(())
}
