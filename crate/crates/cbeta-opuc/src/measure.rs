//! Finite-level spectral measures and their Monte Carlo diagnostics.
//!
//! Truncating a coefficient sequence after n entries (zeros afterwards)
//! yields the Bernstein–Szegő approximation to the underlying measure: an
//! absolutely continuous probability measure with density
//!
//! ```text
//!     w_n(θ) = 1 / (2π |φ_n(e^{iθ})|²)
//! ```
//!
//! against dθ. These densities converge weakly to the spectral measure as
//! n grows, which makes them the natural finite-level object to tabulate,
//! integrate, and sample from.
//!
//! Two structural facts about the coefficient measures are checked here as
//! Monte Carlo diagnostics:
//!
//! * under the raw law, |φ_n(e^{iθ})|⁻² is a mean-one martingale in n for
//!   every fixed θ (and mixed over a uniform θ);
//! * the size-biased law satisfies E₀[γ^m] = E[|γ|^{2m}]: the rotation
//!   factor of the coupling exactly cancels the kernel weight.
//!
//! The martingale's variance grows superpolynomially in depth, so the check
//! refuses absurd depths rather than reporting garbage with a straight
//! face.

use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::opuc::{EvalPoint, PointState, PolyTrajectory, ThetaGrid};
use crate::parallel;
use crate::stats::RunningStats;
use crate::verblunsky::{
    moment_oracle, sample_alpha_cbeta, size_bias, stream_rng, CoefficientStream, MeasureTag,
    RadialLaw,
};

/// Depth beyond which `martingale_check` refuses to run without an explicit
/// override; the summand variance makes deeper Monte Carlo means
/// meaningless at any realistic sample count.
pub const MARTINGALE_DEPTH_LIMIT: usize = 256;

/// Default martingale depth: comfortably inside the well-behaved regime.
pub const MARTINGALE_DEFAULT_DEPTH: usize = 64;

/// Relative drift of total mass from 1 at which a Bernstein–Szegő
/// tabulation should be flagged as under-resolved.
pub const BS_NORMALIZATION_TOLERANCE: f64 = 1e-2;

/// Tabulated Bernstein–Szegő density on an angular grid.
#[derive(Debug, Clone, Serialize)]
pub struct BsDensity {
    /// Truncation level n.
    pub level: usize,
    /// Grid angles in (-π, π], sorted.
    pub grid: Vec<f64>,
    /// Density values w_n(θ_j) against dθ.
    pub values: Vec<f64>,
    /// Trapezoid cumulative from -π, periodic continuation on the first
    /// panel; the last entry is the total mass and should be close to 1.
    pub cumulative: Vec<f64>,
}

impl BsDensity {
    /// Total mass under the trapezoid rule.
    pub fn total_mass(&self) -> f64 {
        *self.cumulative.last().expect("grids are non-empty")
    }

    /// Whether the grid resolved the density well enough for the mass to
    /// land within 1% of 1.
    pub fn is_well_normalized(&self) -> bool {
        (self.total_mass() - 1.0).abs() <= BS_NORMALIZATION_TOLERANCE
    }
}

/// Tabulate w_n(θ) = 1/(2π |φ_n(e^{iθ})|²) for the first `level`
/// coefficients of `coeffs` on `grid`.
///
/// The matrix recursion is run independently at every grid angle. The
/// cumulative closes the circle: the panel from π (≡ -π) to the first grid
/// angle uses the periodic continuation of the density.
pub fn bs_density(coeffs: &[Complex64], level: usize, grid: &ThetaGrid) -> Result<BsDensity> {
    if level > coeffs.len() {
        return Err(Error::InvalidParameter(format!(
            "level {level} exceeds the {} available coefficients",
            coeffs.len()
        )));
    }
    if grid.len() < 3 {
        return Err(Error::InvalidParameter(
            "density tabulation needs at least 3 grid angles".into(),
        ));
    }
    let angles = grid.angles().to_vec();
    let values: Vec<f64> = angles
        .iter()
        .map(|&theta| {
            let mut traj = PolyTrajectory::new(EvalPoint::new(theta));
            for &alpha in &coeffs[..level] {
                traj.step(alpha)?;
            }
            Ok(traj.log_phi_inv_sq().exp() / std::f64::consts::TAU)
        })
        .collect::<Result<_>>()?;

    // Periodic trapezoid cumulative starting from -π. The first panel runs
    // from -π to the first angle using the value at π (= value at -π); the
    // last panel ends at π.
    let mut cumulative = Vec::with_capacity(angles.len());
    let wrap_value = {
        // Density at the seam: reuse the value at the angle closest to the
        // seam by periodicity when π itself is not a grid point.
        let last = *angles.last().unwrap();
        if (last - std::f64::consts::PI).abs() < 1e-12 {
            *values.last().unwrap()
        } else {
            // Interpolate across the seam between the last and first grid
            // angles (2π apart minus the covered span).
            let first = angles[0];
            let gap = (std::f64::consts::PI - last) + (first + std::f64::consts::PI);
            let t = (std::f64::consts::PI - last) / gap;
            (1.0 - t) * values.last().unwrap() + t * values[0]
        }
    };
    let mut acc = 0.0;
    for j in 0..angles.len() {
        if j == 0 {
            let width = angles[0] + std::f64::consts::PI;
            acc += 0.5 * (wrap_value + values[0]) * width;
        } else {
            let width = angles[j] - angles[j - 1];
            acc += 0.5 * (values[j - 1] + values[j]) * width;
        }
        cumulative.push(acc);
    }
    // Close the circle: add the panel from the last angle back to π.
    let tail = std::f64::consts::PI - *angles.last().unwrap();
    if tail > 0.0 {
        let last = cumulative.last_mut().unwrap();
        *last += 0.5 * (*values.last().unwrap() + wrap_value) * tail;
    }

    Ok(BsDensity {
        level,
        grid: angles,
        values,
        cumulative,
    })
}

/// Draw one angle from a tabulated density by inverting its
/// piecewise-linear cumulative. No rejection, one uniform per draw.
pub fn sample_theta_bs(density: &BsDensity, rng: &mut impl Rng) -> f64 {
    let total = density.total_mass();
    let target: f64 = rng.random::<f64>() * total;
    let cum = &density.cumulative;
    let idx = cum.partition_point(|&c| c < target);
    let (lo_angle, lo_cum) = if idx == 0 {
        (-std::f64::consts::PI, 0.0)
    } else {
        (density.grid[idx - 1], cum[idx - 1])
    };
    let (hi_angle, hi_cum) = if idx < cum.len() {
        (density.grid[idx], cum[idx])
    } else {
        (std::f64::consts::PI, total)
    };
    let mass = hi_cum - lo_cum;
    if mass <= 0.0 {
        return lo_angle;
    }
    lo_angle + (hi_angle - lo_angle) * (target - lo_cum) / mass
}

/// One row of the martingale diagnostic: the Monte Carlo mean of
/// |φ_n(e^{iθ})|⁻² at a fixed depth, against the exact value 1.
#[derive(Debug, Clone, Serialize)]
pub struct MartingaleRow {
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct MartingaleReport {
    pub beta: f64,
    pub trials: usize,
    pub rows: Vec<MartingaleRow>,
}

/// Options for [`martingale_check`].
#[derive(Debug, Clone)]
pub struct MartingaleOptions {
    pub beta: f64,
    pub n_max: usize,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    /// Explicit consent to run beyond [`MARTINGALE_DEPTH_LIMIT`].
    pub allow_deep: bool,
}

/// Monte Carlo check that E[|φ_n(e^{iθ})|⁻²] = 1 for 1 ≤ n ≤ n_max, with θ
/// drawn uniformly per trajectory and coefficients under the raw law.
///
/// A row passes when its mean is within three standard errors of 1. Depths
/// beyond 256 are refused without `allow_deep`: the summand variance grows
/// like n^{4/β}, and for large n the heavy tail makes the empirical mean
/// worthless long before it stops being finite.
pub fn martingale_check(opts: &MartingaleOptions) -> Result<MartingaleReport> {
    if opts.n_max == 0 || opts.trials == 0 {
        return Err(Error::InvalidParameter(
            "martingale check needs positive depth and trials".into(),
        ));
    }
    if opts.n_max > MARTINGALE_DEPTH_LIMIT && !opts.allow_deep {
        return Err(Error::DepthRefused {
            n_max: opts.n_max,
            limit: MARTINGALE_DEPTH_LIMIT,
        });
    }
    let law = RadialLaw::cbeta(opts.beta)?;

    let per_depth = parallel::chunked_fold(
        opts.trials,
        opts.workers,
        || vec![RunningStats::new(); opts.n_max],
        |acc, trajectory_id| {
            // Two streams per trajectory: one for the evaluation angle,
            // one for the coefficients, both derived from the trajectory
            // index so worker count cannot matter.
            let mut angle_rng = stream_rng(opts.seed ^ 0x9e37_79b9_7f4a_7c15, trajectory_id);
            let theta =
                (angle_rng.random::<f64>() - 0.5) * std::f64::consts::TAU;
            let mut stream =
                CoefficientStream::new(law.clone(), MeasureTag::Q, opts.seed, trajectory_id);
            let mut point = PointState::new(theta);
            for depth_stats in acc.iter_mut() {
                point.step(stream.next_coefficient());
                depth_stats.push(point.log_phi_inv_sq().exp());
            }
        },
        |mut left, right| {
            for (l, r) in left.iter_mut().zip(&right) {
                l.merge(r);
            }
            left
        },
    );

    let rows = per_depth
        .iter()
        .enumerate()
        .map(|(i, stats)| {
            let mean = stats.mean();
            let stderr = stats.stderr();
            MartingaleRow {
                n: i + 1,
                mean,
                stderr,
                pass: (mean - 1.0).abs() <= 3.0 * stderr,
            }
        })
        .collect();

    Ok(MartingaleReport {
        beta: opts.beta,
        trials: opts.trials,
        rows,
    })
}

/// Monte Carlo mean of P(γ e^{iδ}) for a single coefficient of index `k`
/// under the raw law: exactly 1 for every phase δ.
///
/// Coefficients are independent across indices, so the k-th one is drawn
/// directly from its marginal rather than by advancing a stream.
pub fn one_step_kernel_mean(
    k: usize,
    beta: f64,
    delta: f64,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<MartingaleRow> {
    RadialLaw::cbeta(beta)?;
    let stats = parallel::chunked_fold(
        trials,
        workers,
        RunningStats::new,
        |acc, trajectory_id| {
            let mut rng = stream_rng(seed, trajectory_id);
            let gamma = sample_alpha_cbeta(k, beta, &mut rng).expect("beta validated");
            acc.push(crate::opuc::log_poisson_kernel(gamma, delta).exp());
        },
        |mut left, right| {
            left.merge(&right);
            left
        },
    );
    let mean = stats.mean();
    let stderr = stats.stderr();
    Ok(MartingaleRow {
        n: k + 1,
        mean,
        stderr,
        pass: (mean - 1.0).abs() <= 3.0 * stderr,
    })
}

/// One verified identity of the size-biased coefficient law.
#[derive(Debug, Clone, Serialize)]
pub struct IdentityRow {
    pub name: String,
    pub empirical: f64,
    pub exact: f64,
    pub stderr: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Q0IdentityReport {
    pub beta: f64,
    pub k: usize,
    pub trials: usize,
    pub rows: Vec<IdentityRow>,
}

/// Monte Carlo verification of the size-bias moment identities for the
/// coefficient of index `k`:
///
/// * E₀[γ^m] = E[|γ|^{2m}] for m = 1, 2, 3 (the left side is real);
/// * 2 E₀[(Im γ)²] = E[|γ|²] - E[|γ|⁴];
/// * E₀[Im γ/(1-γ)] = 0 (the martingale increment is centered).
///
/// Each empirical value must land within three standard errors of the
/// closed-form right side.
pub fn q0_identity_check(
    k: usize,
    beta: f64,
    trials: usize,
    seed: u64,
    workers: usize,
) -> Result<Q0IdentityReport> {
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be positive".into()));
    }
    RadialLaw::cbeta(beta)?;
    // Six accumulators: Re γ*, Re (γ*)², Re (γ*)³, Im γ*, (Im γ*)²,
    // Im γ*/(1-γ*). The k-th coefficient is drawn from its marginal.
    let stats = parallel::chunked_fold(
        trials,
        workers,
        || vec![RunningStats::new(); 6],
        |acc, trajectory_id| {
            let mut rng = stream_rng(seed, trajectory_id);
            let raw = sample_alpha_cbeta(k, beta, &mut rng).expect("beta validated");
            let biased = size_bias(raw);
            let sq = biased * biased;
            let cube = sq * biased;
            acc[0].push(biased.re);
            acc[1].push(sq.re);
            acc[2].push(cube.re);
            acc[3].push(biased.im);
            acc[4].push(biased.im * biased.im);
            let increment = biased / (Complex64::new(1.0, 0.0) - biased);
            acc[5].push(increment.im);
        },
        |mut left, right| {
            for (l, r) in left.iter_mut().zip(&right) {
                l.merge(r);
            }
            left
        },
    );

    let m2 = moment_oracle(k, beta, 2)?;
    let m4 = moment_oracle(k, beta, 4)?;
    let m6 = moment_oracle(k, beta, 6)?;
    let mut rows = Vec::new();
    let mut push = |name: &str, stats: &RunningStats, exact: f64| {
        let empirical = stats.mean();
        let stderr = stats.stderr();
        rows.push(IdentityRow {
            name: name.to_string(),
            empirical,
            exact,
            stderr,
            pass: (empirical - exact).abs() <= 3.0 * stderr,
        });
    };
    push("re_moment_1", &stats[0], m2);
    push("re_moment_2", &stats[1], m4);
    push("re_moment_3", &stats[2], m6);
    push("im_mean", &stats[3], 0.0);
    push("im_sq", &stats[4], 0.5 * (m2 - m4));
    push("centered_increment", &stats[5], 0.0);

    Ok(Q0IdentityReport {
        beta,
        k,
        trials,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::verblunsky::VerblunskySequence;

    #[test]
    fn level_zero_density_is_uniform() {
        let grid = ThetaGrid::equispaced(64).unwrap();
        let density = bs_density(&[], 0, &grid).unwrap();
        for &v in &density.values {
            assert!((v - 1.0 / std::f64::consts::TAU).abs() < 1e-15);
        }
        assert!((density.total_mass() - 1.0).abs() < 1e-12);
        assert!(density.is_well_normalized());
    }

    #[test]
    fn level_one_density_is_a_poisson_kernel() {
        // One real coefficient 1/2: w_1(0) = P(1/2)/2π = 3/2π, and the mass
        // is exactly 1 in the limit of a fine grid.
        let coeffs = [Complex64::new(0.5, 0.0)];
        let grid = ThetaGrid::equispaced(2048).unwrap();
        let density = bs_density(&coeffs, 1, &grid).unwrap();
        let zero = grid.zero_index().unwrap();
        assert!((density.values[zero] - 3.0 / std::f64::consts::TAU).abs() < 1e-12);
        assert!((density.total_mass() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn grid_must_resolve_the_level() {
        // α₀ = 0.99 concentrates the density in a Poisson-kernel peak of
        // height ~199/2π and width ~0.01 rad: 16 angles cannot integrate
        // it, 8192 can.
        let coeffs = [Complex64::new(0.99, 0.0)];
        let coarse = bs_density(&coeffs, 1, &ThetaGrid::equispaced(16).unwrap()).unwrap();
        assert!(!coarse.is_well_normalized(), "mass {}", coarse.total_mass());
        let fine = bs_density(&coeffs, 1, &ThetaGrid::equispaced(8192).unwrap()).unwrap();
        assert!(fine.is_well_normalized(), "mass {}", fine.total_mass());
    }

    #[test]
    fn inverse_cdf_sampling_matches_cumulative() {
        let law = RadialLaw::cbeta(2.0).unwrap();
        let seq = VerblunskySequence::sample(law, MeasureTag::Q, 8, 3, 0);
        let grid = ThetaGrid::equispaced(1024).unwrap();
        let density = bs_density(&seq.coeffs, 8, &grid).unwrap();
        let mut rng = stream_rng(17, 0);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| sample_theta_bs(&density, &mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        // Empirical CDF vs tabulated cumulative, sup over grid angles.
        let total = density.total_mass();
        let mut worst = 0.0_f64;
        for (j, &angle) in density.grid.iter().enumerate() {
            let empirical = draws.partition_point(|&d| d <= angle) as f64 / n as f64;
            let expected = density.cumulative[j] / total;
            worst = worst.max((empirical - expected).abs());
        }
        assert!(worst <= 0.01, "sup CDF deviation {worst}");
    }

    #[test]
    fn uniform_sampling_passes_ks_test() {
        // Level 0 is the uniform measure; the empirical CDF of 10⁵ draws
        // must pass a Kolmogorov-Smirnov test at the 1% level.
        let grid = ThetaGrid::equispaced(256).unwrap();
        let density = bs_density(&[], 0, &grid).unwrap();
        let mut rng = stream_rng(23, 1);
        let n = 100_000;
        let mut draws: Vec<f64> = (0..n).map(|_| sample_theta_bs(&density, &mut rng)).collect();
        draws.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut ks = 0.0_f64;
        for (i, &d) in draws.iter().enumerate() {
            let u = (d + std::f64::consts::PI) / std::f64::consts::TAU;
            ks = ks.max((u - i as f64 / n as f64).abs());
            ks = ks.max((u - (i + 1) as f64 / n as f64).abs());
        }
        let critical = 1.628 / (n as f64).sqrt();
        assert!(ks < critical, "KS statistic {ks} vs critical {critical}");
    }

    #[test]
    fn martingale_check_passes_at_modest_depth() {
        let report = martingale_check(&MartingaleOptions {
            beta: 4.0,
            n_max: 8,
            trials: 40_000,
            seed: 11,
            workers: 1,
            allow_deep: false,
        })
        .unwrap();
        assert_eq!(report.rows.len(), 8);
        for row in &report.rows {
            assert!(row.pass, "depth {} mean {} ± {}", row.n, row.mean, row.stderr);
        }
    }

    #[test]
    fn martingale_check_refuses_heavy_tailed_depth() {
        let opts = MartingaleOptions {
            beta: 2.0,
            n_max: 257,
            trials: 10,
            seed: 1,
            workers: 1,
            allow_deep: false,
        };
        assert!(matches!(
            martingale_check(&opts),
            Err(Error::DepthRefused { .. })
        ));
        let mut allowed = opts.clone();
        allowed.allow_deep = true;
        assert!(martingale_check(&allowed).is_ok());
    }

    #[test]
    fn q0_identities_hold() {
        let report = q0_identity_check(0, 2.0, 200_000, 29, 1).unwrap();
        for row in &report.rows {
            assert!(
                row.pass,
                "{}: empirical {} vs exact {} (± {})",
                row.name, row.empirical, row.exact, row.stderr
            );
        }
    }

    #[test]
    fn q0_real_mean_scales_like_inverse_index() {
        // E₀[Re γ_k] · βk/2 → 1. At k = 10⁴ the deterministic deviation is
        // O(1/k); the Monte Carlo noise needs a large sample to match.
        let k = 10_000;
        let beta = 2.0;
        let report = q0_identity_check(k, beta, 30_000_000, 31, 1).unwrap();
        let scaled = report.rows[0].empirical * beta * k as f64 / 2.0;
        assert!(
            (scaled - 1.0).abs() < 0.05,
            "scaled mean {scaled} should approach 1"
        );
    }
}
