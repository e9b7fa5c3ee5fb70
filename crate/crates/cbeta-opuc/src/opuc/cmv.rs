//! Finite CMV matrices: the canonical five-diagonal unitary representation
//! of a measure on the unit circle.
//!
//! The infinite CMV matrix is C = L·M where L = Θ_0 ⊕ Θ_2 ⊕ … and
//! M = 1 ⊕ Θ_1 ⊕ Θ_3 ⊕ …, with 2×2 blocks
//!
//! ```text
//!     Θ_j = [ ᾱ_j   ρ_j ]        ρ_j = sqrt(1 - |α_j|²).
//!           [ ρ_j  -α_j ]
//! ```
//!
//! Setting the coefficient of index n-1 to a unimodular value makes
//! ρ_{n-1} = 0, which decouples the top-left n×n corner from the rest of
//! the matrix; that corner is the finite CMV matrix built here, and it is
//! exactly unitary.
//!
//! Matrices are stored dense and row-major, which is perfectly adequate for
//! the sizes this crate targets (n ≤ 10³); the products below exploit the
//! bandwidth anyway and cost O(n).

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};

/// How far from modulus exactly 1 the terminal coefficient may be.
const TERMINAL_TOLERANCE: f64 = 1e-12;

/// Dense row-major unitary five-diagonal matrix.
#[derive(Debug, Clone, Serialize)]
pub struct CmvMatrix {
    size: usize,
    #[serde(serialize_with = "serialize_entries")]
    entries: Vec<Complex64>,
}

fn serialize_entries<S: serde::Serializer>(
    entries: &[Complex64],
    ser: S,
) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    let mut seq = ser.serialize_seq(Some(entries.len()))?;
    for c in entries {
        seq.serialize_element(&[c.re, c.im])?;
    }
    seq.end()
}

impl CmvMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.size + col]
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// ‖C*C - I‖_max: the worst entry-wise deviation from unitarity.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.size;
        let mut worst = 0.0_f64;
        for i in 0..n {
            // (C*C)[i][j] vanishes structurally beyond |i-j| ≤ 4, and the
            // matrix carries exact zeros outside the band, so a window scan
            // covers every entry that could deviate.
            let lo = i.saturating_sub(4);
            let hi = (i + 5).min(n);
            for j in lo..hi {
                let mut sum = Complex64::new(0.0, 0.0);
                let m_lo = i.max(j).saturating_sub(2);
                let m_hi = (i.min(j) + 3).min(n);
                for m in m_lo..m_hi {
                    sum += self.get(m, i).conj() * self.get(m, j);
                }
                if i == j {
                    sum -= 1.0;
                }
                worst = worst.max(sum.norm());
            }
        }
        worst
    }

    /// Largest modulus of any entry outside the five-diagonal band.
    pub fn max_outside_band(&self) -> f64 {
        let n = self.size;
        let mut worst = 0.0_f64;
        for i in 0..n {
            for j in 0..n {
                if i.abs_diff(j) > 2 {
                    worst = worst.max(self.get(i, j).norm());
                }
            }
        }
        worst
    }
}

/// Write the 2×2 block Θ_j into a padded factor matrix of width `m`.
fn place_block(mat: &mut [Complex64], m: usize, j: usize, alpha_j: Complex64, rho_j: f64) {
    mat[j * m + j] = alpha_j.conj();
    if j + 1 < m {
        mat[j * m + j + 1] = Complex64::new(rho_j, 0.0);
        mat[(j + 1) * m + j] = Complex64::new(rho_j, 0.0);
        mat[(j + 1) * m + j + 1] = -alpha_j;
    }
}

/// Build the finite n×n CMV matrix from `coeffs` = (α_0, …, α_{n-2}, λ).
///
/// The first n-1 coefficients must lie strictly inside the unit disk; the
/// last must be unimodular (within 1e-12) — its ρ is taken as exactly 0, so
/// the corner decouples exactly rather than approximately.
pub fn build_cmv(coeffs: &[Complex64]) -> Result<CmvMatrix> {
    let n = coeffs.len();
    if n == 0 {
        return Err(Error::InvalidParameter(
            "CMV matrix needs at least the terminal coefficient".into(),
        ));
    }
    for c in &coeffs[..n - 1] {
        if c.norm_sqr() >= 1.0 {
            return Err(Error::CoefficientOutsideDisk { modulus: c.norm() });
        }
    }
    let terminal = coeffs[n - 1];
    if (terminal.norm() - 1.0).abs() > TERMINAL_TOLERANCE {
        return Err(Error::WrongTerminalModulus {
            modulus: terminal.norm(),
        });
    }

    // Work padded by two zero coefficients: every Θ block touching the
    // top-left n×n corner then fits inside the padded matrices, and since
    // ρ_{n-1} = 0 nothing couples the corner to the padding.
    let m = n + 2;
    let zero = Complex64::new(0.0, 0.0);
    let mut alpha = coeffs.to_vec();
    alpha.extend_from_slice(&[zero, zero]);
    let rho: Vec<f64> = alpha
        .iter()
        .enumerate()
        .map(|(j, a)| {
            if j == n - 1 {
                0.0
            } else {
                (1.0 - a.norm_sqr()).sqrt()
            }
        })
        .collect();

    let mut l_mat = vec![zero; m * m];
    for j in (0..m).step_by(2) {
        place_block(&mut l_mat, m, j, alpha[j], rho[j]);
    }
    let mut m_mat = vec![zero; m * m];
    m_mat[0] = Complex64::new(1.0, 0.0);
    for j in (1..m).step_by(2) {
        place_block(&mut m_mat, m, j, alpha[j], rho[j]);
    }

    // C = L·M restricted to the corner. Both factors are tridiagonal, so
    // the product is five-diagonal and each entry needs at most a
    // three-term sum.
    let mut entries = vec![zero; n * n];
    for i in 0..n {
        let j_lo = i.saturating_sub(2);
        let j_hi = (i + 3).min(n);
        for j in j_lo..j_hi {
            let k_lo = i.max(j).saturating_sub(1);
            let k_hi = (i.min(j) + 2).min(m);
            let mut sum = zero;
            for k in k_lo..k_hi {
                sum += l_mat[i * m + k] * m_mat[k * m + j];
            }
            entries[i * n + j] = sum;
        }
    }

    Ok(CmvMatrix { size: n, entries })
}
