use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Fundamental matrix of the mode system in the (A, B^dagger) basis,
/// `[[conj(alpha), beta], [conj(beta), alpha]]`.
///
/// Products of such matrices keep this form, so only (alpha, beta) are stored.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl TransferMatrix {
    pub fn identity() -> Self {
        Self {
            alpha: Complex64::new(1.0, 0.0),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// Free evolution at constant frequency over dt: A -> exp(-i omega dt) A.
    pub fn phase(omega: f64, dt: f64) -> Self {
        Self {
            alpha: Complex64::from_polar(1.0, omega * dt),
            beta: Complex64::new(0.0, 0.0),
        }
    }

    /// Rebuild from the first column (conj(alpha), conj(beta)) of the fundamental matrix.
    pub fn from_first_column(a: Complex64, b: Complex64) -> Self {
        Self {
            alpha: a.conj(),
            beta: b.conj(),
        }
    }

    pub fn matrix(&self) -> [[Complex64; 2]; 2] {
        [
            [self.alpha.conj(), self.beta],
            [self.beta.conj(), self.alpha],
        ]
    }

    /// |alpha|^2 - |beta|^2.
    pub fn det(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr()
    }

    pub fn normalization_error(&self) -> f64 {
        (self.det() - 1.0).abs()
    }

    pub fn trace(&self) -> f64 {
        2.0 * self.alpha.re
    }

    pub fn inverse(&self) -> Self {
        let d = self.det();
        Self {
            alpha: self.alpha.conj() / d,
            beta: -self.beta / d,
        }
    }

    /// Apply to the amplitude vector (A, B^dagger).
    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = self.matrix();
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// Largest eigenvalue modulus. The trace is real, so the eigenvalues are
    /// the roots of x^2 - tr x + det.
    pub fn spectral_radius(&self) -> f64 {
        let tr = self.trace();
        let det = self.det();
        let disc = tr * tr - 4.0 * det;
        if disc >= 0.0 {
            0.5 * (tr.abs() + disc.sqrt())
        } else {
            det.abs().sqrt()
        }
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        (self.alpha - other.alpha)
            .norm()
            .max((self.beta - other.beta).norm())
    }

    pub fn powi(&self, n: u32) -> Self {
        let mut out = Self::identity();
        let mut base = *self;
        let mut e = n;
        while e > 0 {
            if e & 1 == 1 {
                out = base * out;
            }
            base = base * base;
            e >>= 1;
        }
        out
    }
}

/// `later * earlier`: apply `earlier` first.
impl Mul for TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, earlier: TransferMatrix) -> TransferMatrix {
        let (a2, b2) = (self.alpha, self.beta);
        let (a1, b1) = (earlier.alpha, earlier.beta);
        TransferMatrix {
            alpha: a2 * a1 + b2.conj() * b1,
            beta: a2.conj() * b1 + b2 * a1,
        }
    }
}

/// Instantaneous re-diagonalization when the frequency jumps from omega_1 to
/// omega_2 with the particle field continuous.
pub fn sudden_step(omega_1: f64, omega_2: f64) -> Result<TransferMatrix> {
    if !(omega_1 > 0.0) || !(omega_2 > 0.0) {
        return Err(domain(format!(
            "sudden step needs positive frequencies, got {omega_1} and {omega_2}"
        )));
    }
    let r = (omega_2 / omega_1).sqrt();
    Ok(TransferMatrix {
        alpha: Complex64::new(0.5 * (r + 1.0 / r), 0.0),
        beta: Complex64::new(0.5 * (r - 1.0 / r), 0.0),
    })
}

/// Bogoliubov coefficients (alpha_k, beta_k) of the complete drive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BogoCoefficients {
    pub alpha: Complex64,
    pub beta: Complex64,
}

impl BogoCoefficients {
    pub fn trivial() -> Self {
        TransferMatrix::identity().into()
    }

    pub fn normalization_error(&self) -> f64 {
        (self.alpha.norm_sqr() - self.beta.norm_sqr() - 1.0).abs()
    }

    pub fn beta_sq(&self) -> f64 {
        self.beta.norm_sqr()
    }

    /// delta_k = arg alpha - arg beta.
    pub fn delta(&self) -> f64 {
        self.alpha.arg() - self.beta.arg()
    }
}

impl From<TransferMatrix> for BogoCoefficients {
    fn from(m: TransferMatrix) -> Self {
        Self {
            alpha: m.alpha,
            beta: m.beta,
        }
    }
}

impl From<BogoCoefficients> for TransferMatrix {
    fn from(c: BogoCoefficients) -> Self {
        Self {
            alpha: c.alpha,
            beta: c.beta,
        }
    }
}
