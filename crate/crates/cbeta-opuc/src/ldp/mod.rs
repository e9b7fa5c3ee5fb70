//! Large-deviation toolkit for the polynomial growth exponents.
//!
//! On the harmonic time scale t_{k,n} = H_k/H_n the normalized log-modulus
//! path
//!
//! ```text
//!     Z_n(t) = log|φ_{k_n(t)}(1)|⁻² / log n
//! ```
//!
//! satisfies a sample-path large deviations principle with speed log n and
//! quadratic rate, and the norm-growth exponent Υ_n = log‖φ·(1)‖²_n/log n
//! obeys a one-dimensional LDP whose rate function is
//!
//! ```text
//!     I(x) = (β/8)(x - 1 - 2/β)²   (coefficients under the raw law),
//!     J(x) = (β/8)(x - 1 + 2/β)²   (under the size-biased law),
//! ```
//!
//! both +∞ for x < 0. Underlying everything is the scaled cumulant limit
//! of a single kernel factor, Λ(λ) = (2/β)λ(λ-1) = lim k·log E[P(γ_k)^λ],
//! which this module also evaluates at finite k by deterministic
//! quadrature so the convergence itself is checkable.
//!
//! Full tail rates are unreachable by Monte Carlo at desk scale — the
//! probabilities decay only polynomially in n — so the empirical rate
//! machinery quantifies the minimizer location and the local curvature
//! and reports everything else as descriptive curves.

pub mod quad;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::opuc::{ThetaGrid, TrajectoryState};
use crate::parallel;
use crate::stats::RunningStats;
use crate::verblunsky::{CoefficientStream, MeasureTag, RadialLaw};

/// Harmonic time scale: weights c_k = 1/k, clock K_n = H_n, and the mesh
/// t_{k,n} = H_k/H_n. The scale satisfies the LDP conditions: the largest
/// weight share max_k c_k/K_n vanishes and log n/K_n stays bounded.
#[derive(Debug, Clone)]
pub struct TimeScale {
    n: usize,
    harmonic_sum: f64,
    mesh: Vec<f64>,
}

impl TimeScale {
    pub fn new(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidParameter(
                "the time scale needs a positive horizon".into(),
            ));
        }
        let mut mesh = Vec::with_capacity(n + 1);
        mesh.push(0.0);
        let mut h = 0.0;
        for k in 1..=n {
            h += 1.0 / k as f64;
            mesh.push(h);
        }
        let harmonic_sum = h;
        for t in mesh.iter_mut() {
            *t /= harmonic_sum;
        }
        Ok(Self {
            n,
            harmonic_sum,
            mesh,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// K_n = H_n, the total clock.
    pub fn harmonic_sum(&self) -> f64 {
        self.harmonic_sum
    }

    /// Mesh points t_{0,n} = 0 through t_{n,n} = 1.
    pub fn mesh(&self) -> &[f64] {
        &self.mesh
    }

    /// t_{k,n}.
    pub fn t(&self, k: usize) -> f64 {
        self.mesh[k]
    }

    /// The last index k with t_{k,n} ≤ t, by binary search.
    pub fn k_of(&self, t: f64) -> usize {
        self.mesh.partition_point(|&m| m <= t).saturating_sub(1)
    }
}

/// Which member of the rate-function family to evaluate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RateKind {
    /// Rate of Υ_n under the raw coefficient law; zero at 1 + 2/β.
    I,
    /// Rate of Υ_n under the size-biased law; zero at 1 - 2/β.
    J,
    /// Legendre transform of Λ: (β/8)(x + 2/β)².
    LambdaStarQ,
    /// Tilted transform (β/8)(x - 2/β)², equal to Λ*(x) - x.
    LambdaStarQ0,
    /// The cumulant limit Λ(λ) = (2/β)λ(λ-1) itself.
    Lambda,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct RateFunctionSpec {
    pub beta: f64,
    pub which: RateKind,
}

/// Closed-form evaluation of the chosen rate function. I and J are +∞ on
/// x < 0; the quadratic transforms and Λ are finite everywhere.
pub fn rate_eval(spec: RateFunctionSpec, x: f64) -> f64 {
    debug_assert!(spec.beta > 0.0);
    let curvature = spec.beta / 8.0;
    let shift = 2.0 / spec.beta;
    match spec.which {
        RateKind::I => {
            if x < 0.0 {
                f64::INFINITY
            } else {
                curvature * (x - 1.0 - shift) * (x - 1.0 - shift)
            }
        }
        RateKind::J => {
            if x < 0.0 {
                f64::INFINITY
            } else {
                curvature * (x - 1.0 + shift) * (x - 1.0 + shift)
            }
        }
        RateKind::LambdaStarQ => curvature * (x + shift) * (x + shift),
        RateKind::LambdaStarQ0 => curvature * (x - shift) * (x - shift),
        RateKind::Lambda => lambda_limit(x, spec.beta),
    }
}

/// The scaled cumulant limit Λ(λ) = (2/β)·λ(λ-1).
pub fn lambda_limit(lambda: f64, beta: f64) -> f64 {
    debug_assert!(beta > 0.0);
    (2.0 / beta) * lambda * (lambda - 1.0)
}

/// k·log E[P(γ_k)^λ] for a single coefficient of index `k`, by
/// deterministic quadrature.
///
/// Under the size-biased law the density carries one extra kernel factor,
/// so the effective exponent is λ+1 and the limit shifts to Λ(λ+1). The
/// moment is finite exactly when the effective exponent lies in
/// (-b, b+1) with b = β(k+1)/2; the precondition enforced here is the
/// slightly stricter two-sided |λ_eff| < b, which is both the regime where
/// k·log E converges cleanly to the quadratic limit and the tail-decay
/// rate the quadrature itself relies on.
pub fn cumulant_oracle(k: usize, lambda: f64, beta: f64, measure: MeasureTag) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let lambda_eff = match measure {
        MeasureTag::Q => lambda,
        MeasureTag::Q0 => lambda + 1.0,
        other => {
            return Err(Error::MeasureMismatch {
                expected: "q or q0",
                found: other.to_string(),
            })
        }
    };
    // λ_eff = 0 is the normalization; λ_eff = 1 is the kernel's mean-value
    // property. Both give E = 1 with no quadrature error at all, and
    // E[P] = 1 needs only λ_eff < b + 1, which holds for every b > 0 — so
    // these answers come before the stricter quadrature precondition.
    if lambda_eff == 0.0 || lambda_eff == 1.0 {
        return Ok(0.0);
    }
    let b = beta * (k as f64 + 1.0) / 2.0;
    if lambda_eff >= b || lambda_eff <= -b {
        return Err(Error::DivergentMoment {
            exponent: lambda,
            bound: b,
            index: k,
        });
    }
    let tol = (5e-7 / k.max(1) as f64).max(1e-13);
    let mean = quad::kernel_power_mean(b, lambda_eff, tol);
    Ok(k as f64 * mean.ln())
}

/// One sampled normalized log-modulus path, with the norm-growth exponent
/// of the same trajectory riding along.
#[derive(Debug, Clone, Serialize)]
pub struct ZnPath {
    pub n: usize,
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub upsilon: f64,
}

/// Run one coefficient trajectory to horizon `n` and record
/// Z_n(t) = log|φ_{k(t)}(1)|⁻²/log n at every grid time, k(t) being the
/// last index whose mesh time does not exceed t.
pub fn sample_zn_path(
    n: usize,
    grid: &[f64],
    measure: MeasureTag,
    beta: f64,
    seed: u64,
    stream_id: u64,
) -> Result<ZnPath> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "path sampling needs a horizon of at least 2".into(),
        ));
    }
    match measure {
        MeasureTag::Q | MeasureTag::Q0 => {}
        other => {
            return Err(Error::MeasureMismatch {
                expected: "q or q0",
                found: other.to_string(),
            })
        }
    }
    if grid.iter().any(|&t| !(0.0..=1.0).contains(&t)) {
        return Err(Error::InvalidParameter(
            "grid times must lie in [0, 1]".into(),
        ));
    }
    let scale = TimeScale::new(n)?;
    let mut targets: Vec<(usize, usize)> = grid
        .iter()
        .enumerate()
        .map(|(i, &t)| (scale.k_of(t), i))
        .collect();
    targets.sort_unstable();

    let law = RadialLaw::cbeta(beta)?;
    let mut stream = CoefficientStream::new(law, measure, seed, stream_id);
    let mut state = TrajectoryState::new(ThetaGrid::empty());
    let log_n = (n as f64).ln();
    let mut values = vec![0.0; grid.len()];
    let mut cursor = targets.iter().peekable();
    while let Some(&&(k, slot)) = cursor.peek() {
        if k == 0 {
            values[slot] = 0.0;
            cursor.next();
        } else {
            break;
        }
    }
    for k in 1..=n {
        state.step(stream.next_coefficient())?;
        while let Some(&&(target_k, slot)) = cursor.peek() {
            if target_k == k {
                values[slot] = state.log_phi_inv_sq_at_1() / log_n;
                cursor.next();
            } else {
                break;
            }
        }
    }
    Ok(ZnPath {
        n,
        times: grid.to_vec(),
        values,
        upsilon: upsilon(n, state.log_norm_phi()),
    })
}

/// Norm-growth exponent Υ_n = log‖φ·(1)‖²_n / log n from the accumulated
/// log squared norm.
pub fn upsilon(n: usize, log_norm_sq: f64) -> f64 {
    debug_assert!(n >= 2, "the exponent needs log n > 0");
    log_norm_sq / (n as f64).ln()
}

/// Max of s - Z_n(s) over a grid covering [0, 1] with spacing at most
/// 1e-3. Exponentially equivalent to Υ_n on the same trajectory, which is
/// how the integral LDP reduces to a path functional.
pub fn laplace_max(path: &ZnPath) -> Result<f64> {
    let times = &path.times;
    if times.first() != Some(&0.0) || times.last() != Some(&1.0) {
        return Err(Error::InvalidParameter(
            "the Laplace functional needs a grid from 0 to 1".into(),
        ));
    }
    let coarse = times
        .windows(2)
        .any(|w| w[1] - w[0] > 1e-3 + 1e-12 || w[1] <= w[0]);
    if coarse {
        return Err(Error::InvalidParameter(
            "the Laplace functional needs an increasing grid with spacing ≤ 1e-3".into(),
        ));
    }
    Ok(times
        .iter()
        .zip(&path.values)
        .map(|(&s, &z)| s - z)
        .fold(f64::NEG_INFINITY, f64::max))
}

#[derive(Debug, Clone)]
pub struct UpsilonOptions {
    pub beta: f64,
    pub n_max: usize,
    pub trials: usize,
    pub measure: MeasureTag,
    pub seed: u64,
    pub workers: usize,
    pub truncate_delta: Option<f64>,
}

/// Monte Carlo summary of Υ_{n_max}. The variance of log‖φ‖² is reported
/// alongside because the CLT scale (4/β)·log n is itself a checkable
/// prediction.
#[derive(Debug, Clone, Serialize)]
pub struct UpsilonReport {
    pub beta: f64,
    pub measure: MeasureTag,
    pub n_max: usize,
    pub trials: usize,
    pub mean: f64,
    pub sd: f64,
    pub stderr: f64,
    pub var_log_norm_sq: f64,
    pub aborts: usize,
    pub seed: u64,
}

pub fn run_upsilon_experiment(opts: &UpsilonOptions) -> Result<UpsilonReport> {
    match opts.measure {
        MeasureTag::Q | MeasureTag::Q0 => {}
        other => {
            return Err(Error::MeasureMismatch {
                expected: "q or q0",
                found: other.to_string(),
            })
        }
    }
    if opts.trials == 0 || opts.n_max < 2 {
        return Err(Error::InvalidParameter(
            "the exponent experiment needs trials ≥ 1 and a horizon ≥ 2".into(),
        ));
    }
    let mut law = RadialLaw::cbeta(opts.beta)?;
    if let Some(delta) = opts.truncate_delta {
        law = law.with_truncation(delta)?;
    }

    struct Acc {
        upsilon: RunningStats,
        log_norm: RunningStats,
        aborts: usize,
    }
    let acc = parallel::chunked_fold(
        opts.trials,
        opts.workers,
        || Acc {
            upsilon: RunningStats::new(),
            log_norm: RunningStats::new(),
            aborts: 0,
        },
        |acc, trajectory_id| {
            let mut stream =
                CoefficientStream::new(law.clone(), opts.measure, opts.seed, trajectory_id);
            let mut state = TrajectoryState::new(ThetaGrid::empty());
            for _ in 0..opts.n_max {
                if state.step(stream.next_coefficient()).is_err() {
                    acc.aborts += 1;
                    return;
                }
            }
            let log_norm_sq = state.log_norm_phi();
            acc.upsilon.push(upsilon(opts.n_max, log_norm_sq));
            acc.log_norm.push(log_norm_sq);
        },
        |mut left, right| {
            left.upsilon.merge(&right.upsilon);
            left.log_norm.merge(&right.log_norm);
            left.aborts += right.aborts;
            left
        },
    );

    Ok(UpsilonReport {
        beta: opts.beta,
        measure: opts.measure,
        n_max: opts.n_max,
        trials: opts.trials,
        mean: acc.upsilon.mean(),
        sd: acc.upsilon.sd(),
        stderr: acc.upsilon.stderr(),
        var_log_norm_sq: acc.log_norm.variance(),
        aborts: acc.aborts,
        seed: opts.seed,
    })
}

/// One histogram bin of the normalized log-frequency curve at one horizon.
#[derive(Debug, Clone, Serialize)]
pub struct RatePoint {
    /// Bin center (value of Υ_n).
    pub x: f64,
    /// -log(relative frequency)/log n.
    pub empirical_rate: f64,
    /// The matching closed-form rate at x.
    pub analytic_rate: f64,
    pub n: usize,
    pub count: u64,
}

#[derive(Debug, Clone)]
pub struct RateCurveOptions {
    pub beta: f64,
    pub measure: MeasureTag,
    pub n_ladder: Vec<usize>,
    pub trials: usize,
    pub bins: usize,
    pub seed: u64,
    pub workers: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RateCurveReport {
    pub beta: f64,
    pub measure: MeasureTag,
    pub trials: usize,
    pub bins: usize,
    pub seed: u64,
    pub aborts: usize,
    pub points: Vec<RatePoint>,
}

/// Histogram Υ_n per horizon and report -log(relfreq)/log n next to the
/// analytic rate (I under the raw law, J under the size-biased one).
///
/// Zero-count bins are absent from the output rather than infinite. Only
/// the neighborhood of the minimum is quantitatively meaningful at
/// realistic trial counts; the rest of the curve is descriptive.
pub fn empirical_rate(opts: &RateCurveOptions) -> Result<RateCurveReport> {
    let which = match opts.measure {
        MeasureTag::Q => RateKind::I,
        MeasureTag::Q0 => RateKind::J,
        other => {
            return Err(Error::MeasureMismatch {
                expected: "q or q0",
                found: other.to_string(),
            })
        }
    };
    if opts.trials < 1000 {
        return Err(Error::InvalidParameter(format!(
            "rate curves need at least 1000 trials per horizon, got {}",
            opts.trials
        )));
    }
    if opts.bins < 2 {
        return Err(Error::InvalidParameter(
            "rate curves need at least 2 bins".into(),
        ));
    }
    if opts.n_ladder.is_empty() || opts.n_ladder.iter().any(|&n| n < 2) {
        return Err(Error::InvalidParameter(
            "the horizon ladder must be non-empty with every n ≥ 2".into(),
        ));
    }
    let law = RadialLaw::cbeta(opts.beta)?;
    let rate_spec = RateFunctionSpec {
        beta: opts.beta,
        which,
    };

    let mut points = Vec::new();
    let mut total_aborts = 0;
    for (horizon_idx, &n) in opts.n_ladder.iter().enumerate() {
        let stream_base = (horizon_idx * opts.trials) as u64;
        let (values, aborts) = parallel::chunked_fold(
            opts.trials,
            opts.workers,
            || (Vec::new(), 0usize),
            |acc: &mut (Vec<f64>, usize), trajectory_id| {
                let mut stream = CoefficientStream::new(
                    law.clone(),
                    opts.measure,
                    opts.seed,
                    stream_base + trajectory_id,
                );
                let mut state = TrajectoryState::new(ThetaGrid::empty());
                for _ in 0..n {
                    if state.step(stream.next_coefficient()).is_err() {
                        acc.1 += 1;
                        return;
                    }
                }
                acc.0.push(upsilon(n, state.log_norm_phi()));
            },
            |mut left, right| {
                left.0.extend(right.0);
                left.1 += right.1;
                left
            },
        );
        total_aborts += aborts;
        if values.is_empty() {
            continue;
        }
        let completed = values.len() as f64;
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_n = (n as f64).ln();
        if max == min {
            points.push(RatePoint {
                x: min,
                empirical_rate: 0.0,
                analytic_rate: rate_eval(rate_spec, min),
                n,
                count: values.len() as u64,
            });
            continue;
        }
        let width = (max - min) / opts.bins as f64;
        let mut counts = vec![0u64; opts.bins];
        for &v in &values {
            let bin = (((v - min) / width) as usize).min(opts.bins - 1);
            counts[bin] += 1;
        }
        for (i, &count) in counts.iter().enumerate() {
            if count == 0 {
                continue;
            }
            let x = min + (i as f64 + 0.5) * width;
            points.push(RatePoint {
                x,
                empirical_rate: -((count as f64 / completed).ln()) / log_n,
                analytic_rate: rate_eval(rate_spec, x),
                n,
                count,
            });
        }
    }

    Ok(RateCurveReport {
        beta: opts.beta,
        measure: opts.measure,
        trials: opts.trials,
        bins: opts.bins,
        seed: opts.seed,
        aborts: total_aborts,
        points,
    })
}

/// Least-squares parabola through (xs, ys); returns (vertex location,
/// second derivative). Rejects fits with no interior minimum.
pub fn quadratic_minimum(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    if xs.len() != ys.len() || xs.len() < 3 {
        return Err(Error::InvalidParameter(
            "a quadratic fit needs at least 3 matched points".into(),
        ));
    }
    // Center the abscissas for conditioning; the vertex shifts back.
    let x_mean = xs.iter().sum::<f64>() / xs.len() as f64;
    let (mut s1, mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0, 0.0);
    let (mut t0, mut t1, mut t2) = (0.0, 0.0, 0.0);
    let s0 = xs.len() as f64;
    for (&x, &y) in xs.iter().zip(ys) {
        let z = x - x_mean;
        let z2 = z * z;
        s1 += z;
        s2 += z2;
        s3 += z2 * z;
        s4 += z2 * z2;
        t0 += y;
        t1 += z * y;
        t2 += z2 * y;
    }
    // Solve the normal equations for y = a z² + b z + c by Cramer's rule.
    let det = s4 * (s2 * s0 - s1 * s1) - s3 * (s3 * s0 - s1 * s2) + s2 * (s3 * s1 - s2 * s2);
    if det.abs() < 1e-12 * s4.max(1.0) {
        return Err(Error::InvalidParameter(
            "quadratic fit is degenerate (collinear abscissas)".into(),
        ));
    }
    let det_a = t2 * (s2 * s0 - s1 * s1) - s3 * (t1 * s0 - t0 * s1) + s2 * (t1 * s1 - t0 * s2);
    let det_b = s4 * (t1 * s0 - t0 * s1) - t2 * (s3 * s0 - s1 * s2) + s2 * (s3 * t0 - s2 * t1);
    let a = det_a / det;
    let b = det_b / det;
    if a <= 0.0 {
        return Err(Error::InvalidParameter(
            "quadratic fit has no interior minimum (nonpositive curvature)".into(),
        ));
    }
    Ok((x_mean - b / (2.0 * a), 2.0 * a))
}

/// Locate the minimum of an empirical rate curve by a quadratic fit over
/// the points within `window` of the raw argmin. The points must all
/// belong to one horizon.
pub fn rate_curve_minimum(points: &[RatePoint], window: f64) -> Result<(f64, f64)> {
    let argmin = points
        .iter()
        .min_by(|a, b| a.empirical_rate.total_cmp(&b.empirical_rate))
        .ok_or_else(|| Error::InvalidParameter("empty rate curve".into()))?
        .x;
    let (xs, ys): (Vec<f64>, Vec<f64>) = points
        .iter()
        .filter(|p| (p.x - argmin).abs() <= window)
        .map(|p| (p.x, p.empirical_rate))
        .unzip();
    quadratic_minimum(&xs, &ys)
}
