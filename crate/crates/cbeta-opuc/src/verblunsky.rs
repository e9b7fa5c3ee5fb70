//! Verblunsky coefficient sampling for circular beta-ensemble spectral
//! measures.
//!
//! A probability measure on the unit circle is encoded by its sequence of
//! Verblunsky coefficients, all lying in the open unit disk. For the
//! circular β-ensemble the coefficients are independent with rotationally
//! invariant law
//!
//! ```text
//!     α_k ~ e^{2πiU} · sqrt(Beta(1, β(k+1)/2)),    U ~ Uniform[0,1),
//! ```
//!
//! so the squared radius has density b(1-x)^{b-1} on [0,1] with
//! b = β(k+1)/2. Because the Beta(1, b) inverse CDF is explicit, sampling is
//! a single uniform draw: r² = 1 - U^{1/b}, evaluated as `-expm1(ln(U)/b)`
//! to stay accurate when b is large.
//!
//! Three coefficient measures appear downstream:
//!
//! * `Q`  — the raw CβE law above;
//! * `Q0` — the size-biased law obtained by reweighting each coefficient
//!   with the Poisson kernel at z = 1. It is realized pathwise through the
//!   coupling γ* = γ(1+γ̄)/(1+γ), which preserves the modulus exactly;
//! * `Qθ` — the rotated variant, obtained from a `Q0` stream by multiplying
//!   coefficient n by e^{-i(n+1)θ}.
//!
//! Reproducibility: every trajectory draws from its own counter-based
//! ChaCha8 stream derived from `(seed, stream_id)`. Stream ids are assigned
//! to trajectories, never to worker threads, so results are byte-identical
//! for any worker count. Within a stream each coefficient consumes exactly
//! two uniforms, radius first, then angle.

use std::io::Write as IoWrite;

use num_complex::Complex64;
use rand::distr::OpenClosed01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest radius a sampled coefficient may take.
///
/// The inverse-CDF formula can round to exactly 1 for extreme uniform draws
/// when b = β(k+1)/2 is tiny; clamping keeps every coefficient strictly
/// inside the disk so the Szegő recursion never divides by zero.
const MAX_RADIUS: f64 = 1.0 - 4.0 * f64::EPSILON;

/// Deterministic per-trajectory random stream.
///
/// ChaCha8 is a counter-mode generator: `(seed, stream_id)` fully determines
/// the byte stream, independent of how trajectories are scheduled onto
/// threads.
pub fn stream_rng(seed: u64, stream_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Radial distribution of the coefficient modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RadialKind {
    /// |α_k|² ~ Beta(1, β(k+1)/2), the circular β-ensemble law.
    Cbeta { beta: f64 },
    /// Deterministic radii, cycled when the sequence is longer than the
    /// table. Angles stay uniform. Useful for stress tests with pinned
    /// moduli.
    FixedTable { radii: Vec<f64> },
}

/// Radial law plus an optional hard cap on the modulus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialLaw {
    pub kind: RadialKind,
    /// When set, every coefficient is pushed back to radius 1 - δ if it
    /// lands outside. `None` means no truncation; it is never applied
    /// implicitly.
    pub truncation_delta: Option<f64>,
}

impl RadialLaw {
    pub fn cbeta(beta: f64) -> Result<Self> {
        if !(beta > 0.0) || !beta.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "beta must be positive and finite, got {beta}"
            )));
        }
        Ok(Self {
            kind: RadialKind::Cbeta { beta },
            truncation_delta: None,
        })
    }

    pub fn fixed_table(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::InvalidParameter(
                "fixed radius table must be non-empty".into(),
            ));
        }
        for &r in &radii {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidParameter(format!(
                    "fixed radius {r} must lie in [0, 1)"
                )));
            }
        }
        Ok(Self {
            kind: RadialKind::FixedTable { radii },
            truncation_delta: None,
        })
    }

    pub fn with_truncation(mut self, delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "truncation delta must lie in (0, 1), got {delta}"
            )));
        }
        self.truncation_delta = Some(delta);
        Ok(self)
    }
}

/// Which coefficient measure a stream or sequence was sampled under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "measure", content = "theta", rename_all = "lowercase")]
pub enum MeasureTag {
    Q,
    Q0,
    QTheta(f64),
}

impl std::fmt::Display for MeasureTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            MeasureTag::Q => write!(f, "q"),
            MeasureTag::Q0 => write!(f, "q0"),
            MeasureTag::QTheta(theta) => write!(f, "qtheta({theta})"),
        }
    }
}

/// Draw one raw CβE coefficient of index `k`.
///
/// Consumes exactly two uniforms from `rng`: the radial draw (on (0,1], so
/// the logarithm is always finite) and then the angle.
pub fn sample_alpha_cbeta(k: usize, beta: f64, rng: &mut impl Rng) -> Result<Complex64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    let b = beta * (k as f64 + 1.0) / 2.0;
    let u: f64 = rng.sample(OpenClosed01);
    let r_sq = -f64::exp_m1(u.ln() / b);
    let r = r_sq.sqrt().min(MAX_RADIUS);
    let angle: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    Ok(Complex64::from_polar(r, angle))
}

/// CDF of the squared modulus |α_k|² under the CβE law: 1 - (1-x)^{β(k+1)/2}.
pub fn radial_cdf(k: usize, beta: f64, x: f64) -> f64 {
    let b = beta * (k as f64 + 1.0) / 2.0;
    -f64::exp_m1(b * f64::ln_1p(-x.clamp(0.0, 1.0)))
}

/// Closed-form even moment E|α_k|^power of the CβE coefficient of index `k`.
///
/// With m = power/2 and b = β(k+1)/2 the Beta(1, b) raw moments give
/// E|α_k|^{2m} = m! / ((1+b)(2+b)···(m+b)). The independent Monte Carlo
/// sampler is tested against this closed form, never the other way around.
pub fn moment_oracle(k: usize, beta: f64, power: u32) -> Result<f64> {
    if !(beta > 0.0) || !beta.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "beta must be positive and finite, got {beta}"
        )));
    }
    if power % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "odd moments vanish by rotational invariance; ask for an even power, got {power}"
        )));
    }
    let b = beta * (k as f64 + 1.0) / 2.0;
    let m = power / 2;
    let mut value = 1.0;
    for j in 1..=m as u64 {
        value *= j as f64 / (j as f64 + b);
    }
    Ok(value)
}

/// Push a coefficient back inside radius 1 - δ, keeping its argument.
pub fn truncate(alpha: Complex64, delta: f64) -> Result<Complex64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "truncation delta must lie in (0, 1), got {delta}"
        )));
    }
    let modulus = alpha.norm();
    if modulus >= 1.0 {
        return Err(Error::CoefficientOutsideDisk { modulus });
    }
    let cap = 1.0 - delta;
    if modulus <= cap {
        Ok(alpha)
    } else {
        Ok(alpha * (cap / modulus))
    }
}

/// Size-bias coupling γ* = γ(1+γ̄)/(1+γ).
///
/// Maps a coefficient with law `Q` to one with the Poisson-kernel-weighted
/// law `Q0` while preserving the modulus: |γ*| = |γ| because (1+γ̄)/(1+γ)
/// is unimodular.
pub fn size_bias(gamma: Complex64) -> Complex64 {
    debug_assert!(gamma.norm() < 1.0, "size_bias expects |gamma| < 1");
    let v = Complex64::new(1.0, 0.0) + gamma;
    gamma * v.conj() / v
}

/// A lazily sampled coefficient stream under one of the three measures.
///
/// The `Q`-law of the raw coefficients equals the law of the modified
/// coefficients driving the phase recursions, so consumers may treat a
/// `Q`-tagged stream as either without conversion.
#[derive(Debug, Clone)]
pub struct CoefficientStream {
    law: RadialLaw,
    measure: MeasureTag,
    index: usize,
    rng: ChaCha8Rng,
}

impl CoefficientStream {
    pub fn new(law: RadialLaw, measure: MeasureTag, seed: u64, stream_id: u64) -> Self {
        Self {
            law,
            measure,
            index: 0,
            rng: stream_rng(seed, stream_id),
        }
    }

    pub fn measure(&self) -> MeasureTag {
        self.measure
    }

    /// Index of the coefficient the next call will produce.
    pub fn index(&self) -> usize {
        self.index
    }

    /// Draw the next coefficient, applying the measure transform and any
    /// truncation. Both transforms preserve the modulus, so their order
    /// relative to truncation is immaterial.
    pub fn next_coefficient(&mut self) -> Complex64 {
        let k = self.index;
        self.index += 1;
        let raw = match &self.law.kind {
            RadialKind::Cbeta { beta } => {
                sample_alpha_cbeta(k, *beta, &mut self.rng).expect("validated at construction")
            }
            RadialKind::FixedTable { radii } => {
                let r = radii[k % radii.len()];
                let angle: f64 = self.rng.random::<f64>() * std::f64::consts::TAU;
                Complex64::from_polar(r, angle)
            }
        };
        let transformed = match self.measure {
            MeasureTag::Q => raw,
            MeasureTag::Q0 => size_bias(raw),
            MeasureTag::QTheta(theta) => {
                let rotation = Complex64::from_polar(1.0, -(k as f64 + 1.0) * theta);
                size_bias(raw) * rotation
            }
        };
        match self.law.truncation_delta {
            Some(delta) => truncate(transformed, delta).expect("validated at construction"),
            None => transformed,
        }
    }
}

/// A materialized coefficient sequence together with everything needed to
/// regenerate it bit-exactly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VerblunskySequence {
    pub coeffs: Vec<Complex64>,
    pub law: RadialLaw,
    pub measure_tag: MeasureTag,
    pub seed: u64,
    pub stream_id: u64,
}

impl VerblunskySequence {
    /// Sample `len` coefficients under `measure` from the stream
    /// `(seed, stream_id)`.
    pub fn sample(
        law: RadialLaw,
        measure: MeasureTag,
        len: usize,
        seed: u64,
        stream_id: u64,
    ) -> Self {
        let mut stream = CoefficientStream::new(law.clone(), measure, seed, stream_id);
        let coeffs = (0..len).map(|_| stream.next_coefficient()).collect();
        Self {
            coeffs,
            law,
            measure_tag: measure,
            seed,
            stream_id,
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// CSV rows `index,re,im` with a single header line.
    pub fn write_csv(&self, out: &mut impl IoWrite) -> Result<()> {
        writeln!(out, "index,re,im")?;
        for (k, c) in self.coeffs.iter().enumerate() {
            writeln!(out, "{k},{},{}", c.re, c.im)?;
        }
        Ok(())
    }

    /// JSON array of `[re, im]` pairs.
    pub fn coeffs_json(&self) -> serde_json::Value {
        serde_json::Value::Array(
            self.coeffs
                .iter()
                .map(|c| serde_json::json!([c.re, c.im]))
                .collect(),
        )
    }
}

/// Reinterpret a `Q0`-sampled sequence under the rotated measure `Qθ` by
/// multiplying coefficient n with e^{-i(n+1)θ}.
pub fn rotate_to_qtheta(seq: &VerblunskySequence, theta: f64) -> Result<VerblunskySequence> {
    if seq.measure_tag != MeasureTag::Q0 {
        return Err(Error::MeasureMismatch {
            expected: "q0",
            found: seq.measure_tag.to_string(),
        });
    }
    let coeffs = seq
        .coeffs
        .iter()
        .enumerate()
        .map(|(n, &c)| c * Complex64::from_polar(1.0, -(n as f64 + 1.0) * theta))
        .collect();
    Ok(VerblunskySequence {
        coeffs,
        law: seq.law.clone(),
        measure_tag: MeasureTag::QTheta(theta),
        seed: seq.seed,
        stream_id: seq.stream_id,
    })
}
