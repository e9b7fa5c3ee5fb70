//! Local scaling exponents of the spectral measure via two-sided
//! polynomial growth.
//!
//! The bridge from polynomial asymptotics to measure geometry is the
//! subordinacy framework: with the fractional-index norms
//!
//! ```text
//!     ‖a·‖²_x = Σ_{k=0}^{⌊x⌋} |a_k|² + (x-⌊x⌋)|a_{⌈x⌉}|²
//! ```
//!
//! the scale x(r) matched to radius r solves
//! (1-r)·‖φ·‖_{x(r)}·‖ψ·‖_{x(r)} = √2, and power-law growth exponents of
//! the two families translate into the local dimension of the measure: if
//! log|φ_n|⁻²/log n → c and log|ψ_n|⁻²/log n → d with c, d < 1, the
//! measure scales with exact local exponent
//!
//! ```text
//!     s₀ = 2(1-c)/(2-c-d).
//! ```
//!
//! The Monte Carlo experiment at the bottom of the module estimates c and
//! d by regressing the log-moduli on log n over dyadic checkpoints and
//! reports the plug-in ŝ₀. For the coefficient ensembles sampled here the
//! size-biased law gives c → 2/β and d → -2/β, hence ŝ₀ → 1 - 2/β; under
//! the raw law both exponents sit near -2/β.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::opuc::{ThetaGrid, TrajectoryState};
use crate::parallel;
use crate::stats::{ols_fit, RunningStats};
use crate::verblunsky::{CoefficientStream, MeasureTag, RadialLaw};

/// Smallest dyadic checkpoint used in slope regressions. Below this the
/// pre-asymptotic transient dominates.
pub const FIRST_CHECKPOINT: usize = 256;

/// Streaming fractional-index norm accumulator.
///
/// Stores log|a_k|² per index together with a running-max-factored prefix
/// sum, so that squared norms are available at any fractional index
/// without overflow, and without any log/exp round trip when the terms
/// share a common scale (the all-ones ladder yields exact partial sums).
#[derive(Debug, Clone, Default)]
pub struct JlNormLadder {
    /// L_k = log |a_k|².
    log_sq_terms: Vec<f64>,
    /// M_k = max_{j ≤ k} L_j.
    max_log: Vec<f64>,
    /// S_k = Σ_{j ≤ k} exp(L_j - M_k).
    scaled_prefix: Vec<f64>,
}

impl JlNormLadder {
    pub fn new() -> Self {
        Self::default()
    }

    /// Build from the logs of the squared term moduli.
    pub fn from_log_sq_terms(terms: impl IntoIterator<Item = f64>) -> Self {
        let mut ladder = Self::new();
        for t in terms {
            ladder.push(t);
        }
        ladder
    }

    /// Append the next term as log|a_k|².
    pub fn push(&mut self, log_sq: f64) {
        let (prev_max, prev_sum) = match self.max_log.last() {
            Some(&m) => (m, *self.scaled_prefix.last().unwrap()),
            None => (f64::NEG_INFINITY, 0.0),
        };
        let max = prev_max.max(log_sq);
        let sum = if max == prev_max {
            prev_sum + (log_sq - max).exp()
        } else {
            // New running max: rescale the old prefix onto the new scale.
            prev_sum * (prev_max - max).exp() + 1.0
        };
        self.log_sq_terms.push(log_sq);
        self.max_log.push(max);
        self.scaled_prefix.push(sum);
    }

    pub fn len(&self) -> usize {
        self.log_sq_terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_sq_terms.is_empty()
    }

    /// Largest admissible fractional index.
    pub fn max_index(&self) -> f64 {
        self.len() as f64 - 1.0
    }

    fn check_index(&self, x: f64) -> Result<()> {
        if !(x >= 0.0) {
            return Err(Error::InvalidParameter(format!(
                "norm index must be nonnegative, got {x}"
            )));
        }
        if x > self.max_index() {
            return Err(Error::InvalidParameter(format!(
                "norm index {x} exceeds the stored terms (max {})",
                self.max_index()
            )));
        }
        Ok(())
    }

    /// Squared norm at fractional index x: full terms through ⌊x⌋ plus the
    /// fraction (x-⌊x⌋) of term ⌈x⌉.
    pub fn norm_sq(&self, x: f64) -> Result<f64> {
        self.check_index(x)?;
        let floor = x.floor() as usize;
        let frac = x - x.floor();
        let max = self.max_log[floor];
        let mut scaled = self.scaled_prefix[floor];
        if frac > 0.0 {
            scaled += frac * (self.log_sq_terms[floor + 1] - max).exp();
        }
        Ok(max.exp() * scaled)
    }

    /// log of the squared norm, safe for ladders whose terms overflow f64
    /// in linear scale.
    pub fn log_norm_sq(&self, x: f64) -> Result<f64> {
        self.check_index(x)?;
        let floor = x.floor() as usize;
        let frac = x - x.floor();
        let max = self.max_log[floor];
        let mut scaled = self.scaled_prefix[floor];
        if frac > 0.0 {
            scaled += frac * (self.log_sq_terms[floor + 1] - max).exp();
        }
        Ok(max + scaled.ln())
    }

    /// Largest stored log|a_k|², useful for continuity bounds.
    pub fn max_log_term(&self) -> f64 {
        self.max_log.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Squared fractional-index norm ‖a·‖²_x of a stored ladder.
pub fn jl_norm(ladder: &JlNormLadder, x: f64) -> Result<f64> {
    ladder.norm_sq(x)
}

/// Solve (1-r)·‖φ·‖_x·‖ψ·‖_x = √2 for x by bisection.
///
/// The left side is continuous and nondecreasing in x, so the root is
/// located to absolute tolerance 1e-9; if the product at x = 0 already
/// meets √2 the root is reported as 0. When even the full ladders cannot
/// reach √2/(1-r) the ladder length is the binding constraint and the
/// caller must supply longer trajectories.
pub fn solve_xr(r: f64, phi: &JlNormLadder, psi: &JlNormLadder) -> Result<f64> {
    if !(0.0..1.0).contains(&r) {
        return Err(Error::InvalidParameter(format!(
            "radius must lie in [0, 1), got {r}"
        )));
    }
    if phi.is_empty() || psi.is_empty() {
        return Err(Error::InvalidParameter(
            "both ladders must hold at least one term".into(),
        ));
    }
    let x_max = phi.max_index().min(psi.max_index());
    // Work with logs: g(x) = log(1-r) + (log‖φ‖²_x + log‖ψ‖²_x)/2 - log√2.
    let target = 0.5 * std::f64::consts::LN_2;
    let gap = |x: f64| -> Result<f64> {
        Ok(f64::ln_1p(-r) + 0.5 * (phi.log_norm_sq(x)? + psi.log_norm_sq(x)?) - target)
    };
    if gap(x_max)? < 0.0 {
        return Err(Error::LadderExhausted { x_max });
    }
    if gap(0.0)? >= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, x_max);
    while hi - lo > 1e-9 {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Ordinary least squares of recorded log-values against log n.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeEstimate {
    pub slope: f64,
    pub intercept: f64,
    pub sample_points: Vec<usize>,
    pub residual: f64,
}

/// Regress `samples` = (n, value) pairs as value ≈ slope·log n + intercept.
///
/// Meaningful slope estimates want at least four dyadic checkpoints;
/// anything below two is rejected outright, and indices below 2 make
/// log n degenerate.
pub fn estimate_slope(samples: &[(usize, f64)]) -> Result<SlopeEstimate> {
    if samples.len() < 2 {
        return Err(Error::NotEnoughCheckpoints {
            found: samples.len(),
        });
    }
    if samples.iter().any(|&(n, _)| n < 2) {
        return Err(Error::InvalidParameter(
            "slope regression needs all checkpoint indices ≥ 2".into(),
        ));
    }
    if samples.windows(2).any(|w| w[0].0 >= w[1].0) {
        return Err(Error::InvalidParameter(
            "checkpoint indices must be strictly increasing".into(),
        ));
    }
    let xs: Vec<f64> = samples.iter().map(|&(n, _)| (n as f64).ln()).collect();
    let ys: Vec<f64> = samples.iter().map(|&(_, v)| v).collect();
    let (slope, intercept, residual) = ols_fit(&xs, &ys);
    Ok(SlopeEstimate {
        slope,
        intercept,
        sample_points: samples.iter().map(|&(n, _)| n).collect(),
        residual,
    })
}

/// Dyadic regression checkpoints: powers of two from 256 through n_max,
/// with n_max itself appended when it is not a power of two.
pub fn dyadic_checkpoints(n_max: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut p = FIRST_CHECKPOINT;
    while p <= n_max {
        points.push(p);
        match p.checked_mul(2) {
            Some(next) => p = next,
            None => break,
        }
    }
    if points.last() != Some(&n_max) && n_max >= 2 {
        points.push(n_max);
    }
    points
}

/// Local dimension from the two growth exponents: 2(1-c)/(2-c-d).
///
/// Requires both exponents strictly below 1; beyond that threshold the
/// norm asymptotics no longer identify a dimension.
pub fn local_dimension(c: f64, d: f64) -> Result<f64> {
    if c >= 1.0 || d >= 1.0 {
        return Err(Error::InvalidParameter(format!(
            "local dimension needs both exponents below 1, got c = {c}, d = {d}"
        )));
    }
    Ok(2.0 * (1.0 - c) / (2.0 - c - d))
}

/// The exponent pairing t = s/(2-s) used in the norm-ratio test.
pub fn t_exponent(s: f64) -> f64 {
    s / (2.0 - s)
}

/// Diagnostic scan of ‖φ‖_x / ‖ψ‖_x^{s/(2-s)} along an index grid.
///
/// The ratio trends to 0 for s above the local dimension and to ∞ below
/// it; the scan reports the raw values and leaves the judgement to the
/// caller.
pub fn jl_ratio_scan(
    phi: &JlNormLadder,
    psi: &JlNormLadder,
    s: f64,
    x_grid: &[f64],
) -> Result<Vec<f64>> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "the ratio scan needs s in (0, 1), got {s}"
        )));
    }
    let t = t_exponent(s);
    x_grid
        .iter()
        .map(|&x| {
            let log_ratio = 0.5 * phi.log_norm_sq(x)? - t * 0.5 * psi.log_norm_sq(x)?;
            Ok(log_ratio.exp())
        })
        .collect()
}

/// Configuration of the end-to-end dimension experiment.
#[derive(Debug, Clone)]
pub struct DimensionOptions {
    pub beta: f64,
    pub n_max: usize,
    pub trials: usize,
    pub measure: MeasureTag,
    pub seed: u64,
    pub workers: usize,
    pub truncate_delta: Option<f64>,
}

/// Monte Carlo estimates of the growth exponents and the plug-in local
/// dimension. Field order is the artifact schema.
#[derive(Debug, Clone, Serialize)]
pub struct DimensionReport {
    pub beta: f64,
    pub measure: MeasureTag,
    pub n_max: usize,
    pub trials: usize,
    pub c_mean: f64,
    pub c_sd: f64,
    pub d_mean: f64,
    pub d_sd: f64,
    /// NaN (null in JSON) when a mean exponent reaches 1 and the formula
    /// does not apply.
    pub s0_hat: f64,
    /// The dimension reading requires β > 2 and both exponents below 1;
    /// the slopes themselves are valid for every β > 0.
    pub s0_interpretable: bool,
    pub aborts: usize,
    pub seed: u64,
}

/// Sample `trials` coefficient trajectories, regress both log-modulus
/// slopes over dyadic checkpoints, and report the plug-in dimension.
///
/// The raw measure feeds the phase recursion directly; the size-biased one
/// is sampled through the same stream abstraction. Trajectories whose
/// coefficients reach the numeric guard are aborted and counted, not
/// silently dropped.
pub fn run_dimension_experiment(opts: &DimensionOptions) -> Result<DimensionReport> {
    match opts.measure {
        MeasureTag::Q | MeasureTag::Q0 => {}
        other => {
            return Err(Error::MeasureMismatch {
                expected: "q or q0",
                found: other.to_string(),
            })
        }
    }
    if opts.trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    let checkpoints = dyadic_checkpoints(opts.n_max);
    if checkpoints.len() < 2 {
        return Err(Error::NotEnoughCheckpoints {
            found: checkpoints.len(),
        });
    }
    let mut law = RadialLaw::cbeta(opts.beta)?;
    if let Some(delta) = opts.truncate_delta {
        law = law.with_truncation(delta)?;
    }

    struct Acc {
        c: RunningStats,
        d: RunningStats,
        aborts: usize,
    }
    let acc = parallel::chunked_fold(
        opts.trials,
        opts.workers,
        || Acc {
            c: RunningStats::new(),
            d: RunningStats::new(),
            aborts: 0,
        },
        |acc, trajectory_id| {
            let mut stream =
                CoefficientStream::new(law.clone(), opts.measure, opts.seed, trajectory_id);
            let mut state = TrajectoryState::new(ThetaGrid::empty());
            let mut c_samples = Vec::with_capacity(checkpoints.len());
            let mut d_samples = Vec::with_capacity(checkpoints.len());
            let mut next_checkpoint = 0;
            for k in 1..=opts.n_max {
                if state.step(stream.next_coefficient()).is_err() {
                    acc.aborts += 1;
                    return;
                }
                if next_checkpoint < checkpoints.len() && k == checkpoints[next_checkpoint] {
                    c_samples.push((k, state.log_phi_inv_sq_at_1()));
                    d_samples.push((k, state.log_psi_inv_sq_at_1()));
                    next_checkpoint += 1;
                }
            }
            let c_fit = estimate_slope(&c_samples).expect("checkpoint count validated");
            let d_fit = estimate_slope(&d_samples).expect("checkpoint count validated");
            acc.c.push(c_fit.slope);
            acc.d.push(d_fit.slope);
        },
        |mut left, right| {
            left.c.merge(&right.c);
            left.d.merge(&right.d);
            left.aborts += right.aborts;
            left
        },
    );

    let c_mean = acc.c.mean();
    let d_mean = acc.d.mean();
    let s0_hat = local_dimension(c_mean, d_mean).unwrap_or(f64::NAN);
    Ok(DimensionReport {
        beta: opts.beta,
        measure: opts.measure,
        n_max: opts.n_max,
        trials: opts.trials,
        c_mean,
        c_sd: acc.c.sd(),
        d_mean,
        d_sd: acc.d.sd(),
        s0_hat,
        s0_interpretable: opts.beta > 2.0 && s0_hat.is_finite(),
        aborts: acc.aborts,
        seed: opts.seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opuc::{CoefficientFrame, EvalPoint, PolyTrajectory};
    use crate::verblunsky::stream_rng;
    use num_complex::Complex64;
    use proptest::prelude::*;
    use rand::Rng;

    fn free_ladder(terms: usize) -> JlNormLadder {
        JlNormLadder::from_log_sq_terms(std::iter::repeat(0.0).take(terms))
    }

    #[test]
    fn all_ones_fractional_norm_is_exact() {
        let ladder = free_ladder(8);
        assert_eq!(jl_norm(&ladder, 2.5).unwrap(), 3.5);
        assert_eq!(jl_norm(&ladder, 0.0).unwrap(), 1.0);
        assert_eq!(jl_norm(&ladder, 6.25).unwrap(), 7.25);
    }

    #[test]
    fn free_polynomial_ladder_is_linear() {
        // α ≡ 0 keeps |φ_k(1)| = 1, so the squared norm is x + 1.
        let point = EvalPoint::one();
        let mut traj = PolyTrajectory::new(point);
        let mut ladder = JlNormLadder::new();
        ladder.push(0.0);
        for _ in 0..31 {
            traj.step(Complex64::new(0.0, 0.0)).unwrap();
            ladder.push(-traj.log_phi_inv_sq());
        }
        assert_eq!(jl_norm(&ladder, 17.5).unwrap(), 18.5);
    }

    #[test]
    fn norm_rejects_out_of_range_indices() {
        let ladder = free_ladder(4);
        assert!(jl_norm(&ladder, 3.0).is_ok());
        assert!(jl_norm(&ladder, 3.0001).is_err());
        assert!(jl_norm(&ladder, -0.5).is_err());
    }

    #[test]
    fn integer_index_is_the_plain_partial_sum() {
        let terms = [0.3, -1.2, 2.5, 0.0, -0.7];
        let ladder = JlNormLadder::from_log_sq_terms(terms.iter().copied());
        for k in 0..terms.len() {
            let direct: f64 = terms[..=k].iter().map(|t| t.exp()).sum();
            let viaw = ladder.norm_sq(k as f64).unwrap();
            assert!((viaw - direct).abs() <= 1e-12 * direct);
        }
    }

    #[test]
    fn huge_terms_stay_in_log_domain() {
        let ladder = JlNormLadder::from_log_sq_terms([500.0, 1600.0, 1700.0]);
        let log_norm = ladder.log_norm_sq(2.0).unwrap();
        // 1700 dominates: log(e^500 + e^1600 + e^1700) ≈ 1700 + log(1+e^-100).
        assert!((log_norm - 1700.0 - f64::ln_1p((-100.0f64).exp())).abs() < 1e-12);
        assert!(ladder.norm_sq(2.0).unwrap().is_infinite());
    }

    proptest! {
        #[test]
        fn norm_is_monotone_and_continuous(
            terms in proptest::collection::vec(-3.0f64..3.0, 4..40),
            x in 0.0f64..1.0,
            eps in 1e-6f64..0.5,
        ) {
            let ladder = JlNormLadder::from_log_sq_terms(terms.iter().copied());
            let span = ladder.max_index();
            let x1 = x * (span - 1.0);
            let x2 = (x1 + eps).min(span);
            let n1 = ladder.norm_sq(x1).unwrap();
            let n2 = ladder.norm_sq(x2).unwrap();
            prop_assert!(n2 >= n1 - 1e-12);
            let bound = (x2 - x1) * ladder.max_log_term().exp();
            prop_assert!(n2 - n1 <= bound * (1.0 + 1e-9) + 1e-12);
        }
    }

    #[test]
    fn solve_xr_free_case_closed_form() {
        let phi = free_ladder(1000);
        let psi = free_ladder(1000);
        for r in [0.0, 0.3, 0.9] {
            let x = solve_xr(r, &phi, &psi).unwrap();
            let expected = std::f64::consts::SQRT_2 / (1.0 - r) - 1.0;
            assert!((x - expected).abs() < 1e-7, "r = {r}: {x} vs {expected}");
            // Root verification: plugging back recovers √2.
            let product = (1.0 - r)
                * (phi.norm_sq(x).unwrap() * psi.norm_sq(x).unwrap()).sqrt();
            assert!((product - std::f64::consts::SQRT_2).abs() <= 1e-8 * std::f64::consts::SQRT_2);
        }
        let x0 = solve_xr(0.0, &phi, &psi).unwrap();
        assert!((x0 - 0.414_213_56).abs() < 1e-6);
    }

    #[test]
    fn solve_xr_is_monotone_in_r() {
        let mut rng = stream_rng(7, 0);
        let mut phi = JlNormLadder::new();
        let mut psi = JlNormLadder::new();
        for _ in 0..500 {
            phi.push(rng.random::<f64>() * 2.0 - 0.5);
            psi.push(rng.random::<f64>() * 2.0 - 0.5);
        }
        let xs: Vec<f64> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&r| solve_xr(r, &phi, &psi).unwrap())
            .collect();
        assert!(xs[0] <= xs[1] && xs[1] <= xs[2], "{xs:?}");
    }

    #[test]
    fn solve_xr_reports_exhausted_ladders() {
        let phi = free_ladder(4);
        let psi = free_ladder(4);
        // (1-r)·(x+1) tops out at 0.4 < √2 for r = 0.9 with only 4 terms.
        match solve_xr(0.9, &phi, &psi) {
            Err(Error::LadderExhausted { x_max }) => assert_eq!(x_max, 3.0),
            other => panic!("expected ladder exhaustion, got {other:?}"),
        }
    }

    #[test]
    fn slope_recovers_exact_lines() {
        let samples: Vec<(usize, f64)> = dyadic_checkpoints(1 << 14)
            .into_iter()
            .map(|n| (n, 0.5 * (n as f64).ln()))
            .collect();
        let fit = estimate_slope(&samples).unwrap();
        assert!((fit.slope - 0.5).abs() < 1e-12);
        assert!(fit.residual < 1e-12);

        let affine: Vec<(usize, f64)> = samples
            .iter()
            .map(|&(n, _)| (n, -1.7 * (n as f64).ln() + 42.0))
            .collect();
        let fit = estimate_slope(&affine).unwrap();
        assert!((fit.slope + 1.7).abs() < 1e-12);
        assert!((fit.intercept - 42.0).abs() < 1e-9);
    }

    #[test]
    fn slope_rejects_thin_or_degenerate_checkpoints() {
        assert!(matches!(
            estimate_slope(&[(256, 1.0)]),
            Err(Error::NotEnoughCheckpoints { found: 1 })
        ));
        assert!(estimate_slope(&[(1, 0.0), (256, 1.0)]).is_err());
        assert!(estimate_slope(&[(256, 0.0), (256, 1.0)]).is_err());
    }

    #[test]
    fn checkpoints_are_dyadic_with_endpoint() {
        assert_eq!(dyadic_checkpoints(1 << 10), vec![256, 512, 1024]);
        assert_eq!(dyadic_checkpoints(1500), vec![256, 512, 1024, 1500]);
        assert_eq!(dyadic_checkpoints(100), vec![100]);
    }

    #[test]
    fn local_dimension_worked_values() {
        assert_eq!(local_dimension(0.0, 0.0).unwrap(), 1.0);
        assert_eq!(local_dimension(0.5, -0.5).unwrap(), 0.5);
        assert_eq!(local_dimension(0.3, 0.3).unwrap(), 1.0);
        assert!(local_dimension(1.0, 0.0).is_err());
        assert!(local_dimension(0.0, 1.2).is_err());
    }

    proptest! {
        #[test]
        fn plug_in_dimension_identity(beta in 2.000001f64..64.0) {
            let c = 2.0 / beta;
            let s0 = local_dimension(c, -c).unwrap();
            prop_assert_eq!(s0, 1.0 - c);
        }
    }

    #[test]
    fn t_exponent_endpoints() {
        assert_eq!(t_exponent(1.0), 1.0);
        assert!((t_exponent(0.5) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn free_ratio_scan_grows_without_bound() {
        let phi = free_ladder(600);
        let psi = free_ladder(600);
        let grid = [1.0, 8.0, 64.0, 512.0];
        let ratios = jl_ratio_scan(&phi, &psi, 0.5, &grid).unwrap();
        for w in ratios.windows(2) {
            assert!(w[1] > w[0]);
        }
        // Closed form (x+1)^{(1-t)/2} with t = 1/3.
        let expected = 9.0f64.powf(1.0 / 3.0);
        assert!((ratios[1] - expected).abs() < 1e-10);
    }

    #[test]
    fn psi_route_matches_full_matrix_recursion() {
        // The two-accumulator route for log|ψ_n(1)|⁻² (phase recursion on
        // the modified coefficients) must agree with the full four-value
        // matrix recursion on the raw coefficients to regression accuracy.
        let n = 4096;
        let mut rng = stream_rng(41, 3);
        let mut state = TrajectoryState::new(ThetaGrid::empty());
        let mut matrix = PolyTrajectory::new(EvalPoint::one());
        let mut frame = CoefficientFrame::new();
        let checkpoints = dyadic_checkpoints(n);
        let mut xy_samples = Vec::new();
        let mut matrix_samples = Vec::new();
        let mut next = 0;
        for k in 1..=n {
            let alpha = crate::verblunsky::sample_alpha_cbeta(k - 1, 4.0, &mut rng).unwrap();
            matrix.step(alpha).unwrap();
            state.step(frame.gamma_from_alpha(alpha)).unwrap();
            if next < checkpoints.len() && k == checkpoints[next] {
                xy_samples.push((k, state.log_psi_inv_sq_at_1()));
                matrix_samples.push((k, matrix.log_psi_inv_sq()));
                next += 1;
            }
        }
        for (a, b) in xy_samples.iter().zip(&matrix_samples) {
            assert!((a.1 - b.1).abs() < 1e-6, "at n = {}: {} vs {}", a.0, a.1, b.1);
        }
        let d_xy = estimate_slope(&xy_samples).unwrap().slope;
        let d_matrix = estimate_slope(&matrix_samples).unwrap().slope;
        assert!((d_xy - d_matrix).abs() < 1e-6);
    }

    #[test]
    fn experiment_recovers_signed_slopes() {
        // Small smoke run: β = 4 raw measure drives both exponents toward
        // -1/2; the size-biased measure flips the φ exponent to +1/2.
        let mut opts = DimensionOptions {
            beta: 4.0,
            n_max: 1 << 12,
            trials: 48,
            measure: MeasureTag::Q,
            seed: 19,
            workers: 1,
            truncate_delta: None,
        };
        let q = run_dimension_experiment(&opts).unwrap();
        assert!((q.c_mean + 0.5).abs() < 0.2, "c_mean = {}", q.c_mean);
        assert!((q.d_mean + 0.5).abs() < 0.2, "d_mean = {}", q.d_mean);
        assert_eq!(q.aborts, 0);

        opts.measure = MeasureTag::Q0;
        let q0 = run_dimension_experiment(&opts).unwrap();
        assert!((q0.c_mean - 0.5).abs() < 0.2, "c_mean = {}", q0.c_mean);
        assert!((q0.d_mean + 0.5).abs() < 0.2, "d_mean = {}", q0.d_mean);
        assert!((q0.s0_hat - 0.5).abs() < 0.2, "s0_hat = {}", q0.s0_hat);
        assert!(q0.s0_interpretable);
    }

    #[test]
    fn experiment_rejects_rotated_measure_and_thin_horizons() {
        let opts = DimensionOptions {
            beta: 4.0,
            n_max: 1 << 12,
            trials: 4,
            measure: MeasureTag::QTheta(0.3),
            seed: 1,
            workers: 1,
            truncate_delta: None,
        };
        assert!(matches!(
            run_dimension_experiment(&opts),
            Err(Error::MeasureMismatch { .. })
        ));
        let thin = DimensionOptions {
            measure: MeasureTag::Q,
            n_max: 100,
            ..opts
        };
        assert!(matches!(
            run_dimension_experiment(&thin),
            Err(Error::NotEnoughCheckpoints { .. })
        ));
    }

    #[test]
    fn low_beta_slopes_reported_but_not_interpreted() {
        let opts = DimensionOptions {
            beta: 1.0,
            n_max: 1 << 11,
            trials: 16,
            measure: MeasureTag::Q0,
            seed: 3,
            workers: 1,
            truncate_delta: None,
        };
        let report = run_dimension_experiment(&opts).unwrap();
        assert!(!report.s0_interpretable);
        assert!(report.c_mean.is_finite());
    }
}
