//! Szegő recursion machinery: orthogonal polynomials evaluated on the unit
//! circle, relative Prüfer phases, and log-domain modulus accumulators.
//!
//! Two independent computational routes to the same quantities are kept
//! deliberately separate so they can cross-check each other:
//!
//! * the *matrix route* advances the four polynomial values
//!   (φ_n, φ_n*, ψ_n, ψ_n*) at a fixed point z with the normalized one-step
//!   transfer matrix;
//! * the *kernel route* accumulates log |φ_n(e^{iθ})|⁻² as a running sum of
//!   Poisson kernel logarithms driven by the modified coefficients γ_k and
//!   their relative Prüfer phases δ_k(θ),
//!
//! ```text
//!     |φ_n(e^{iθ})|⁻² = Π_{k<n} P(γ_k e^{iδ_k(θ)}),
//!     P(z) = (1-|z|²)/|1-z|²,
//!     δ_{k+1}(θ) = δ_k(θ) + θ + 2 Im log[(1-γ_k)/(1-γ_k e^{iδ_k(θ)})],
//!     δ_0(θ) = θ.
//! ```
//!
//! At z = 1 the second-kind ratio is carried by two real accumulators
//! (X_n, Y_n) with Y_{n-1} = |φ_n(1)|⁻² and
//! |ψ_n(1)/φ_n(1)|² = X_{n-1}² + Y_{n-1}².
//!
//! All products of moduli live in the log domain; raw polynomial values are
//! periodically rescaled with the scale tracked in a separate log
//! accumulator, so trajectories of any realistic length neither overflow
//! nor underflow.

mod cmv;

pub use cmv::{build_cmv, CmvMatrix};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::stats::logaddexp;

/// Trajectories abort when a coefficient modulus reaches this guard; the
/// Poisson kernel pole at modulus 1 makes anything beyond numerically
/// meaningless.
pub const GUARD_RADIUS: f64 = 1.0 - 1e-12;

/// Point e^{iθ} on the unit circle, with the angle kept alongside.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalPoint {
    theta: f64,
    z: Complex64,
}

impl EvalPoint {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            z: Complex64::from_polar(1.0, theta),
        }
    }

    /// The point z = 1 (θ = 0), where the second-kind accumulators live.
    pub fn one() -> Self {
        Self {
            theta: 0.0,
            z: Complex64::new(1.0, 0.0),
        }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn z(&self) -> Complex64 {
        self.z
    }
}

/// Poisson kernel of the unit disk evaluated against the boundary point 1:
/// P(z) = (1-|z|²)/|1-z|² = Re[(1+z)/(1-z)].
pub fn poisson_kernel(z: Complex64) -> Result<f64> {
    let norm_sqr = z.norm_sqr();
    if norm_sqr >= 1.0 {
        return Err(Error::CoefficientOutsideDisk {
            modulus: norm_sqr.sqrt(),
        });
    }
    Ok((1.0 - norm_sqr) / (Complex64::new(1.0, 0.0) - z).norm_sqr())
}

/// log P(γ e^{iδ}): the rotation does not change the modulus, so the
/// numerator uses |γ|² directly.
pub fn log_poisson_kernel(gamma: Complex64, delta: f64) -> f64 {
    let rotated = gamma * Complex64::from_polar(1.0, delta);
    let w = Complex64::new(1.0, 0.0) - rotated;
    f64::ln_1p(-gamma.norm_sqr()) - w.norm_sqr().ln()
}

/// First- and second-kind polynomial values at a fixed evaluation point.
///
/// `phi_star` and `psi_star` are the reversed polynomials
/// φ_n*(z) = zⁿ conj(φ_n(1/z̄)); on the unit circle |φ_n*| = |φ_n|.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyState {
    pub n: usize,
    pub phi: Complex64,
    pub phi_star: Complex64,
    pub psi: Complex64,
    pub psi_star: Complex64,
}

impl PolyState {
    /// Degree zero: all four polynomials are the constant 1.
    pub fn initial() -> Self {
        let one = Complex64::new(1.0, 0.0);
        Self {
            n: 0,
            phi: one,
            phi_star: one,
            psi: one,
            psi_star: one,
        }
    }

    /// Largest modulus among the four tracked values; drives rescaling.
    pub fn max_modulus(&self) -> f64 {
        self.phi
            .norm()
            .max(self.phi_star.norm())
            .max(self.psi.norm())
            .max(self.psi_star.norm())
    }

    fn scale(&mut self, factor: f64) {
        self.phi *= factor;
        self.phi_star *= factor;
        self.psi *= factor;
        self.psi_star *= factor;
    }
}

/// One step of the normalized Szegő recursion at `point`:
///
/// ```text
///     φ_{n+1} = ρ⁻¹ (z φ_n - ᾱ_n φ_n*),     φ*_{n+1} = ρ⁻¹ (φ_n* - α_n z φ_n),
/// ```
///
/// with ρ = sqrt(1-|α_n|²). The second-kind pair evolves identically with
/// α_n replaced by -α_n, so ψ rides along in the same state.
pub fn szego_matrix_step(state: &PolyState, alpha: Complex64, point: EvalPoint) -> Result<PolyState> {
    let norm_sqr = alpha.norm_sqr();
    if norm_sqr >= 1.0 {
        return Err(Error::CoefficientOutsideDisk {
            modulus: norm_sqr.sqrt(),
        });
    }
    let inv_rho = 1.0 / (1.0 - norm_sqr).sqrt();
    let z = point.z();
    let z_phi = z * state.phi;
    let z_psi = z * state.psi;
    let a_bar = alpha.conj();
    Ok(PolyState {
        n: state.n + 1,
        phi: (z_phi - a_bar * state.phi_star) * inv_rho,
        phi_star: (state.phi_star - alpha * z_phi) * inv_rho,
        psi: (z_psi + a_bar * state.psi_star) * inv_rho,
        psi_star: (state.psi_star + alpha * z_psi) * inv_rho,
    })
}

/// Matrix-route trajectory: `PolyState` plus a log-domain scale so long
/// products neither overflow nor underflow.
#[derive(Debug, Clone)]
pub struct PolyTrajectory {
    state: PolyState,
    point: EvalPoint,
    log_scale: f64,
}

impl PolyTrajectory {
    pub fn new(point: EvalPoint) -> Self {
        Self {
            state: PolyState::initial(),
            point,
            log_scale: 0.0,
        }
    }

    pub fn n(&self) -> usize {
        self.state.n
    }

    pub fn point(&self) -> EvalPoint {
        self.point
    }

    /// Scaled polynomial values; the true values are these times
    /// e^{log_scale}.
    pub fn state(&self) -> &PolyState {
        &self.state
    }

    pub fn log_scale(&self) -> f64 {
        self.log_scale
    }

    pub fn step(&mut self, alpha: Complex64) -> Result<()> {
        self.state = szego_matrix_step(&self.state, alpha, self.point)?;
        let magnitude = self.state.max_modulus();
        if !(1e-120..=1e120).contains(&magnitude) {
            self.state.scale(1.0 / magnitude);
            self.log_scale += magnitude.ln();
        }
        Ok(())
    }

    /// log |φ_n(z)|⁻²
    pub fn log_phi_inv_sq(&self) -> f64 {
        -2.0 * (self.state.phi.norm().ln() + self.log_scale)
    }

    /// log |ψ_n(z)|⁻²
    pub fn log_psi_inv_sq(&self) -> f64 {
        -2.0 * (self.state.psi.norm().ln() + self.log_scale)
    }
}

/// One step of the relative Prüfer phase recursion.
///
/// Both arguments of the logarithm have positive real part for |γ| < 1, so
/// the principal branch is the correct one and the step is continuous in δ.
/// The phase flow is strictly increasing in θ, and δ_n(0) = 0 for all n.
pub fn prufer_step(delta: f64, theta: f64, gamma: Complex64) -> f64 {
    let one = Complex64::new(1.0, 0.0);
    let numer = one - gamma;
    let denom = one - gamma * Complex64::from_polar(1.0, delta);
    delta + theta + 2.0 * (numer.arg() - denom.arg())
}

/// Kernel-route modulus update: add log P(γ e^{iδ}) to the running
/// log |φ|⁻² accumulator. The evaluation angle enters only through the
/// current relative phase δ = δ_n(θ); at θ = 0 the phase is identically 0
/// and the increment is log P(γ).
pub fn log_phi_step(log_phi_inv_sq: f64, gamma: Complex64, delta: f64) -> f64 {
    log_phi_inv_sq + log_poisson_kernel(gamma, delta)
}

/// One step of the second-kind accumulators at z = 1:
///
/// ```text
///     X_n = X_{n-1} + 2 Y_{n-1} Im[γ_n/(1-γ_n)],
///     Y_n = Y_{n-1} (1 + 2 Re[γ_n/(1-γ_n)]),
/// ```
///
/// from (X_{-1}, Y_{-1}) = (0, 1). The Y multiplier equals P(γ_n), so Y
/// stays positive and Y_{n-1} = |φ_n(1)|⁻².
pub fn xy_step(x: f64, y: f64, gamma: Complex64) -> (f64, f64) {
    let q = gamma / (Complex64::new(1.0, 0.0) - gamma);
    (x + 2.0 * y * q.im, y * (1.0 + 2.0 * q.re))
}

/// (X, Y) pair with a shared log-domain scale, so extreme large-deviation
/// tails cannot overflow the accumulators.
#[derive(Debug, Clone, Copy)]
pub struct ScaledXy {
    x: f64,
    y: f64,
    log_scale: f64,
}

impl Default for ScaledXy {
    fn default() -> Self {
        Self::new()
    }
}

impl ScaledXy {
    pub fn new() -> Self {
        Self {
            x: 0.0,
            y: 1.0,
            log_scale: 0.0,
        }
    }

    pub fn step(&mut self, gamma: Complex64) {
        let (x, y) = xy_step(self.x, self.y, gamma);
        self.x = x;
        self.y = y;
        let magnitude = self.x.abs().max(self.y);
        if !(1e-120..=1e120).contains(&magnitude) {
            self.x /= magnitude;
            self.y /= magnitude;
            self.log_scale += magnitude.ln();
        }
    }

    /// The true (X, Y); may overflow to ±inf for extreme trajectories, in
    /// which case the log accessors below are still exact.
    pub fn values(&self) -> (f64, f64) {
        let scale = self.log_scale.exp();
        (self.x * scale, self.y * scale)
    }

    /// log Y, which equals log |φ_{n+1}(1)|⁻² after n+1 steps.
    pub fn log_y(&self) -> f64 {
        self.log_scale + self.y.ln()
    }

    /// log(X² + Y²) with the larger component factored out.
    pub fn log_norm_sqr(&self) -> f64 {
        let m = self.x.abs().max(self.y.abs());
        if m == 0.0 {
            return f64::NEG_INFINITY;
        }
        let xs = self.x / m;
        let ys = self.y / m;
        2.0 * (self.log_scale + m.ln()) + (xs * xs + ys * ys).ln()
    }
}

/// Sorted evaluation angles in (-π, π] for phase tracking.
///
/// The equispaced grid has spacing 2π/resolution and always contains 0
/// exactly: angles are 2πj/resolution for j centered on zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaGrid {
    angles: Vec<f64>,
}

impl ThetaGrid {
    pub fn equispaced(resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::InvalidParameter(
                "grid resolution must be positive".into(),
            ));
        }
        let r = resolution as i64;
        let lo = -((r - 1) / 2);
        let angles = (lo..lo + r)
            .map(|j| std::f64::consts::TAU * j as f64 / r as f64)
            .collect();
        Ok(Self { angles })
    }

    /// Grid with no angles: phase tracking disabled, only the θ = 0
    /// quantities of a trajectory advance. The fast path for z = 1 work.
    pub fn empty() -> Self {
        Self { angles: Vec::new() }
    }

    pub fn from_angles(mut angles: Vec<f64>) -> Self {
        angles.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self { angles }
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn len(&self) -> usize {
        self.angles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles.is_empty()
    }

    /// Index of the angle 0, if the grid contains it exactly.
    pub fn zero_index(&self) -> Option<usize> {
        self.angles
            .binary_search_by(|a| a.partial_cmp(&0.0).unwrap())
            .ok()
    }
}

/// Kernel-route trajectory state at z = 1 plus relative Prüfer phases on a
/// grid of angles.
///
/// After n steps (coefficients γ_0 … γ_{n-1} consumed):
///
/// * `log_phi_inv_sq_at_1` holds log |φ_n(1)|⁻² = Σ log P(γ_k);
/// * the X/Y pair holds (X_{n-1}, Y_{n-1}), so log Y must equal
///   `log_phi_inv_sq_at_1` up to roundoff — two routes to one number;
/// * `delta[j]` holds δ_n(θ_j);
/// * `log_norm_phi` holds log Σ_{k≤n} |φ_k(1)|², which is nonnegative and
///   feeds the norm-growth statistics.
#[derive(Debug, Clone)]
pub struct TrajectoryState {
    n: usize,
    grid: ThetaGrid,
    delta: Vec<f64>,
    log_phi_inv_sq_at_1: f64,
    xy: ScaledXy,
    log_norm_phi: f64,
}

impl TrajectoryState {
    pub fn new(grid: ThetaGrid) -> Self {
        let delta = grid.angles().to_vec();
        Self {
            n: 0,
            grid,
            delta,
            log_phi_inv_sq_at_1: 0.0,
            xy: ScaledXy::new(),
            log_norm_phi: 0.0,
        }
    }

    /// Advance every tracked quantity by one coefficient.
    ///
    /// Fails with a numeric-guard abort when |γ| ≥ 1 - 1e-12; callers
    /// running ensembles count these rather than crash.
    pub fn step(&mut self, gamma: Complex64) -> Result<()> {
        let modulus = gamma.norm();
        if modulus >= GUARD_RADIUS {
            return Err(Error::TrajectoryAbort {
                modulus,
                step: self.n,
            });
        }
        // Kernel increments use the phases *before* this step's update.
        self.log_phi_inv_sq_at_1 = log_phi_step(self.log_phi_inv_sq_at_1, gamma, 0.0);
        self.xy.step(gamma);
        for (delta, &theta) in self.delta.iter_mut().zip(self.grid.angles()) {
            *delta = prufer_step(*delta, theta, gamma);
        }
        self.log_norm_phi = logaddexp(self.log_norm_phi, -self.log_phi_inv_sq_at_1);
        self.n += 1;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn grid(&self) -> &ThetaGrid {
        &self.grid
    }

    pub fn deltas(&self) -> &[f64] {
        &self.delta
    }

    pub fn log_phi_inv_sq_at_1(&self) -> f64 {
        self.log_phi_inv_sq_at_1
    }

    /// The second-kind accumulators (X_{n-1}, Y_{n-1}).
    pub fn xy(&self) -> (f64, f64) {
        self.xy.values()
    }

    /// log Y_{n-1} through the product route (independent of
    /// `log_phi_inv_sq_at_1`).
    pub fn log_y(&self) -> f64 {
        self.xy.log_y()
    }

    /// log(X² + Y²) = log |ψ_n(1)/φ_n(1)|².
    pub fn log_xy_norm_sqr(&self) -> f64 {
        self.xy.log_norm_sqr()
    }

    /// log |ψ_n(1)|⁻², combining the kernel route with the X/Y ratio.
    pub fn log_psi_inv_sq_at_1(&self) -> f64 {
        self.log_phi_inv_sq_at_1 - self.xy.log_norm_sqr()
    }

    /// log ‖φ·(1)‖²_n = log Σ_{k ≤ n} |φ_k(1)|² (never negative: the k = 0
    /// term is 1).
    pub fn log_norm_phi(&self) -> f64 {
        self.log_norm_phi
    }
}

/// Kernel-route tracker for a single angle θ: the pair
/// (δ_n(θ), log |φ_n(e^{iθ})|⁻²).
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    theta: f64,
    delta: f64,
    log_phi_inv_sq: f64,
}

impl PointState {
    pub fn new(theta: f64) -> Self {
        Self {
            theta,
            delta: theta,
            log_phi_inv_sq: 0.0,
        }
    }

    pub fn step(&mut self, gamma: Complex64) {
        debug_assert!(gamma.norm() < 1.0);
        self.log_phi_inv_sq = log_phi_step(self.log_phi_inv_sq, gamma, self.delta);
        self.delta = prufer_step(self.delta, self.theta, gamma);
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn log_phi_inv_sq(&self) -> f64 {
        self.log_phi_inv_sq
    }
}

/// Running conversion between raw coefficients α_n and modified
/// coefficients γ_n = α_n B_n(1).
///
/// B_n(1) lives on the unit circle and evolves as
/// B_{n+1}(1) = B_n(1)(1-γ̄_n)/(1-γ_n) from B_0(1) = 1; the stored value is
/// renormalized to unit modulus each step so drift cannot accumulate. For
/// sequences with all-real coefficients the frame stays at 1 and α ≡ γ.
#[derive(Debug, Clone, Copy)]
pub struct CoefficientFrame {
    b: Complex64,
}

impl Default for CoefficientFrame {
    fn default() -> Self {
        Self::new()
    }
}

impl CoefficientFrame {
    pub fn new() -> Self {
        Self {
            b: Complex64::new(1.0, 0.0),
        }
    }

    /// Current B_n(1).
    pub fn frame(&self) -> Complex64 {
        self.b
    }

    pub fn gamma_from_alpha(&mut self, alpha: Complex64) -> Complex64 {
        let gamma = alpha * self.b;
        self.advance(gamma);
        gamma
    }

    pub fn alpha_from_gamma(&mut self, gamma: Complex64) -> Complex64 {
        let alpha = gamma * self.b.conj();
        self.advance(gamma);
        alpha
    }

    fn advance(&mut self, gamma: Complex64) {
        let one = Complex64::new(1.0, 0.0);
        self.b *= (one - gamma.conj()) / (one - gamma);
        self.b /= self.b.norm();
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verblunsky::{CoefficientStream, MeasureTag, RadialLaw};

    fn q_stream(beta: f64, seed: u64, stream: u64) -> CoefficientStream {
        CoefficientStream::new(RadialLaw::cbeta(beta).unwrap(), MeasureTag::Q, seed, stream)
    }

    #[test]
    fn poisson_kernel_values() {
        assert_eq!(poisson_kernel(Complex64::new(0.0, 0.0)).unwrap(), 1.0);
        assert!((poisson_kernel(Complex64::new(0.5, 0.0)).unwrap() - 3.0).abs() < 1e-15);
        assert!(poisson_kernel(Complex64::new(1.0, 0.0)).is_err());
        // Mean over a circle of fixed radius is 1 (harmonicity). The
        // trapezoid rule on a periodic analytic function converges
        // geometrically, so 64 nodes are plenty at radius 1/2.
        let m = 64;
        let mean: f64 = (0..m)
            .map(|j| {
                let phi = std::f64::consts::TAU * j as f64 / m as f64;
                poisson_kernel(Complex64::from_polar(0.5, phi)).unwrap()
            })
            .sum::<f64>()
            / m as f64;
        assert!((mean - 1.0).abs() < 1e-13, "mean = {mean}");
    }

    #[test]
    fn szego_step_free_case_is_plain_rotation() {
        let point = EvalPoint::new(0.9);
        let mut state = PolyState::initial();
        for _ in 0..7 {
            state = szego_matrix_step(&state, Complex64::new(0.0, 0.0), point).unwrap();
        }
        let z7 = point.z().powu(7);
        assert!((state.phi - z7).norm() < 1e-14);
        assert!((state.psi - z7).norm() < 1e-14);
        assert!((state.phi_star - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        assert!((state.psi_star - Complex64::new(1.0, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn szego_step_single_real_coefficient_at_one() {
        // One step with α_0 = r at z = 1: φ₁ = (1-r)/sqrt(1-r²), so
        // |φ₁(1)|⁻² = (1+r)/(1-r) = P(r); and ψ₁ = (1+r)/sqrt(1-r²).
        let r = 0.5;
        let state = szego_matrix_step(
            &PolyState::initial(),
            Complex64::new(r, 0.0),
            EvalPoint::one(),
        )
        .unwrap();
        let rho = (1.0 - r * r).sqrt();
        assert!((state.phi.re - (1.0 - r) / rho).abs() < 1e-15);
        assert!((state.psi.re - (1.0 + r) / rho).abs() < 1e-15);
        let phi_inv_sq = 1.0 / state.phi.norm_sqr();
        assert!((phi_inv_sq - poisson_kernel(Complex64::new(r, 0.0)).unwrap()).abs() < 1e-13);
        // Rejects coefficients on or outside the circle.
        assert!(szego_matrix_step(
            &PolyState::initial(),
            Complex64::new(0.0, 1.0),
            EvalPoint::one()
        )
        .is_err());
    }

    #[test]
    fn reversed_polynomials_share_modulus_on_the_circle() {
        let mut stream = q_stream(2.0, 5, 0);
        let point = EvalPoint::new(1.23);
        let mut traj = PolyTrajectory::new(point);
        for _ in 0..300 {
            traj.step(stream.next_coefficient()).unwrap();
        }
        let state = traj.state();
        let rel = (state.phi.norm() - state.phi_star.norm()).abs() / state.phi.norm();
        assert!(rel < 1e-10, "|φ*| must equal |φ| on the circle, rel = {rel}");
        let rel_psi = (state.psi.norm() - state.psi_star.norm()).abs() / state.psi.norm();
        assert!(rel_psi < 1e-10);
    }

    #[test]
    fn prufer_free_and_half_turn_cases() {
        // γ = 0: the increment is exactly θ.
        let d = prufer_step(0.5, 0.25, Complex64::new(0.0, 0.0));
        assert_eq!(d, 0.75);
        // Real γ at δ = π: (1-γ)/(1+γ) is positive real, branch term zero.
        let d = prufer_step(
            std::f64::consts::PI,
            0.3,
            Complex64::new(0.7, 0.0),
        );
        assert!((d - (std::f64::consts::PI + 0.3)).abs() < 1e-15);
    }

    #[test]
    fn prufer_flow_is_monotone_in_delta() {
        // d(next δ)/dδ = P(γ e^{iδ}) > 0, so ordering is preserved.
        let mut stream = q_stream(2.0, 8, 1);
        for _ in 0..50 {
            let gamma = stream.next_coefficient();
            let mut last = f64::NEG_INFINITY;
            for j in 0..200 {
                let delta = -8.0 + j as f64 * 0.08;
                let out = prufer_step(delta, 0.0, gamma);
                assert!(out > last, "phase map must be strictly increasing");
                last = out;
            }
        }
    }

    #[test]
    fn xy_step_worked_examples() {
        // Zero coefficients leave (X, Y) at the initial (0, 1).
        let (x, y) = xy_step(0.0, 1.0, Complex64::new(0.0, 0.0));
        assert_eq!((x, y), (0.0, 1.0));
        // γ_0 = 1/2: Y picks up P(1/2) = 3, X stays 0 for real γ.
        let (x, y) = xy_step(0.0, 1.0, Complex64::new(0.5, 0.0));
        assert_eq!(x, 0.0);
        assert!((y - 3.0).abs() < 1e-15);
    }

    #[test]
    fn trajectory_consistency_between_routes() {
        // log Y (product route) and log |φ_n(1)|⁻² (log-sum route) are two
        // independent accumulations of the same number.
        let mut stream = q_stream(2.0, 21, 2);
        let mut traj = TrajectoryState::new(ThetaGrid::equispaced(9).unwrap());
        for _ in 0..2000 {
            traj.step(stream.next_coefficient()).unwrap();
        }
        let a = traj.log_phi_inv_sq_at_1();
        let b = traj.log_y();
        assert!(
            (a - b).abs() <= 1e-8 * a.abs().max(1.0),
            "kernel route {a} vs product route {b}"
        );
        // The angle θ = 0 never moves.
        let zero = traj.grid().zero_index().unwrap();
        assert_eq!(traj.deltas()[zero], 0.0);
        // ‖φ·(1)‖² ≥ 1 always.
        assert!(traj.log_norm_phi() >= 0.0);
    }

    #[test]
    fn trajectory_free_case_norm_and_phases() {
        let grid = ThetaGrid::equispaced(8).unwrap();
        let mut traj = TrajectoryState::new(grid);
        for _ in 0..63 {
            traj.step(Complex64::new(0.0, 0.0)).unwrap();
        }
        // ‖φ·(1)‖²_n = n + 1 when every |φ_k(1)| = 1.
        assert!((traj.log_norm_phi() - 64.0_f64.ln()).abs() < 1e-12);
        // δ_n(θ) = (n+1)θ; dyadic angles make the repeated addition exact.
        for (&delta, &theta) in traj.deltas().iter().zip(traj.grid().angles()) {
            assert!((delta - 64.0 * theta).abs() < 1e-12);
        }
        assert_eq!(traj.xy(), (0.0, 1.0));
    }

    #[test]
    fn trajectory_aborts_on_guard_radius() {
        let mut traj = TrajectoryState::new(ThetaGrid::empty());
        let near_one = Complex64::new(1.0 - 1e-13, 0.0);
        assert!(matches!(
            traj.step(near_one),
            Err(Error::TrajectoryAbort { .. })
        ));
    }

    #[test]
    fn matrix_and_kernel_routes_agree_with_heavy_coefficients() {
        // Fixed radius 0.9 forces |φ_n| through ~10¹⁵⁰ by n = 600; the
        // rescaled matrix route must still match the kernel route, fed the
        // same trajectory through the frame conversion.
        let law = RadialLaw::fixed_table(vec![0.9]).unwrap();
        let mut stream = CoefficientStream::new(law, MeasureTag::Q, 3, 0);
        let theta = 0.77;
        let mut matrix = PolyTrajectory::new(EvalPoint::new(theta));
        let mut kernel = PointState::new(theta);
        let mut frame = CoefficientFrame::new();
        for _ in 0..600 {
            let gamma = stream.next_coefficient();
            let alpha = frame.alpha_from_gamma(gamma);
            matrix.step(alpha).unwrap();
            kernel.step(gamma);
        }
        let a = matrix.log_phi_inv_sq();
        let b = kernel.log_phi_inv_sq();
        assert!(
            (a - b).abs() <= 1e-8 * a.abs(),
            "matrix route {a} vs kernel route {b}"
        );
    }

    #[test]
    fn frame_round_trips_and_stays_trivial_for_real_sequences() {
        let mut stream = q_stream(4.0, 13, 7);
        let mut forward = CoefficientFrame::new();
        let mut backward = CoefficientFrame::new();
        for _ in 0..200 {
            let gamma = stream.next_coefficient();
            let alpha = forward.alpha_from_gamma(gamma);
            let back = backward.gamma_from_alpha(alpha);
            assert!((back - gamma).norm() < 1e-13);
        }
        let mut frame = CoefficientFrame::new();
        for r in [0.1, 0.5, -0.3, 0.8] {
            let gamma = frame.gamma_from_alpha(Complex64::new(r, 0.0));
            assert_eq!(gamma, Complex64::new(r, 0.0));
        }
        assert!((frame.frame() - Complex64::new(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn theta_grid_shapes() {
        let grid = ThetaGrid::equispaced(257).unwrap();
        assert_eq!(grid.len(), 257);
        assert!(grid.zero_index().is_some());
        let angles = grid.angles();
        for pair in angles.windows(2) {
            let gap = pair[1] - pair[0];
            assert!((gap - std::f64::consts::TAU / 257.0).abs() < 1e-14);
        }
        assert!(*angles.first().unwrap() > -std::f64::consts::PI);
        assert!(*angles.last().unwrap() <= std::f64::consts::PI + 1e-15);

        // Even resolutions include both 0 and π.
        let grid = ThetaGrid::equispaced(8).unwrap();
        assert_eq!(grid.len(), 8);
        assert!(grid.zero_index().is_some());
        assert!((grid.angles().last().unwrap() - std::f64::consts::PI).abs() < 1e-15);
    }

    #[test]
    fn scaled_xy_handles_extreme_growth() {
        let mut xy = ScaledXy::new();
        let gamma = Complex64::new(0.95, 0.0);
        for _ in 0..5000 {
            xy.step(gamma);
        }
        // Y grows like P(0.95)^n = 39^n: far beyond f64 range, but the log
        // stays exact.
        let expected = 5000.0 * poisson_kernel(gamma).unwrap().ln();
        assert!((xy.log_y() - expected).abs() < 1e-6 * expected);
        assert!(xy.log_norm_sqr().is_finite());
    }
}
