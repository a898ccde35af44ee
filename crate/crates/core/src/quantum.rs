//! Quantum observables of a mode pair (k, -k) in the out-region and the
//! nonclassicality criteria built from them.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::evolution::{BogoCoefficients, TransferMatrix};

/// Slack for floating-point drift in the physicality bound |m|^2 <= n(n+1).
pub const PHYSICALITY_TOL: f64 = 1e-9;

/// Out-region quantities of a mode pair at time t.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeState {
    pub lambda: Complex64,
    pub gamma: Complex64,
    pub n_k: f64,
    pub m_k: Complex64,
    pub n_th: f64,
    pub t: f64,
}

impl ModeState {
    pub fn from_total(lambda: Complex64, gamma: Complex64, n_th: f64, t: f64) -> Self {
        let g = gamma.norm_sqr();
        Self {
            lambda,
            gamma,
            n_k: occupation(n_th, g),
            m_k: anomalous(n_th, lambda, gamma),
            n_th,
            t,
        }
    }

    /// State at out-region time t from the drive coefficients.
    pub fn new(
        c: &BogoCoefficients,
        u_out: f64,
        v_out: f64,
        omega_out: f64,
        t: f64,
        n_th: f64,
    ) -> Result<Self> {
        let (lambda, gamma) = total_coefficients(c, u_out, v_out, omega_out, t)?;
        Ok(Self::from_total(lambda, gamma, n_th, t))
    }

    pub fn gamma_sq(&self) -> f64 {
        self.gamma.norm_sqr()
    }

    pub fn m_sq(&self) -> f64 {
        self.m_k.norm_sqr()
    }

    pub fn normalization_error(&self) -> f64 {
        (self.lambda.norm_sqr() - self.gamma.norm_sqr() - 1.0).abs()
    }
}

/// Total coefficients (lambda, gamma) combining the out-region
/// transformation (u, v) with the drive coefficients and the free phase.
pub fn total_coefficients(
    c: &BogoCoefficients,
    u_out: f64,
    v_out: f64,
    omega_out: f64,
    t: f64,
) -> Result<(Complex64, Complex64)> {
    if !(t >= 0.0) {
        return Err(domain(format!(
            "out-region time must be non-negative, got {t}"
        )));
    }
    if (u_out * u_out - v_out * v_out - 1.0).abs() > 1e-9 {
        return Err(domain("u^2 - v^2 must equal 1"));
    }
    let ph = Complex64::from_polar(1.0, omega_out * t);
    let ph_c = ph.conj();
    let lambda = u_out * c.alpha * ph + v_out * c.beta * ph_c;
    let gamma = u_out * c.beta * ph_c + v_out * c.alpha * ph;
    Ok((lambda, gamma))
}

/// Total coefficients from a transfer matrix that already carries the free
/// phase, with the transformation (u, v) of the instantaneous interaction.
/// Used during the drive, where no out-region phase is defined.
pub fn instantaneous_coefficients(m: &TransferMatrix, u: f64, v: f64) -> (Complex64, Complex64) {
    (u * m.alpha + v * m.beta, u * m.beta + v * m.alpha)
}

/// |gamma(t)|^2 in closed form,
/// v^2 + |b|^2 + 2 v^2 |b|^2 (1 - kappa cos(2 omega t + delta)),
/// with kappa = sqrt((1 + v^-2)(1 + |b|^-2)).
pub fn gamma_sq_closed(v_out: f64, beta_mag: f64, delta: f64, omega_out: f64, t: f64) -> f64 {
    let v2 = v_out * v_out;
    let b2 = beta_mag * beta_mag;
    if v2 == 0.0 || b2 == 0.0 {
        return v2 + b2;
    }
    // 2 v^2 |b|^2 kappa written as 2 |v| u |b| |a| to avoid dividing by tiny v or b
    let cross = 2.0 * (v2 * (1.0 + v2)).sqrt() * (b2 * (1.0 + b2)).sqrt();
    v2 + b2 + 2.0 * v2 * b2 - cross * (2.0 * omega_out * t + delta).cos()
}

/// kappa_k = sqrt((1 + v^-2)(1 + |beta|^-2)); infinite in the limits v = 0 or beta = 0.
pub fn kappa(v_out: f64, beta_mag: f64) -> f64 {
    ((1.0 + 1.0 / (v_out * v_out)) * (1.0 + 1.0 / (beta_mag * beta_mag))).sqrt()
}

/// Particle occupation n = n_th + g + 2 n_th g with g = |gamma|^2.
pub fn occupation(n_th: f64, gamma_sq: f64) -> f64 {
    n_th + gamma_sq + 2.0 * n_th * gamma_sq
}

/// Anomalous correlator m = <a_k a_-k> = gamma conj(lambda) (1 + 2 n_th).
pub fn anomalous(n_th: f64, lambda: Complex64, gamma: Complex64) -> Complex64 {
    gamma * lambda.conj() * (1.0 + 2.0 * n_th)
}

/// Closed form of |m|^2 = g (1 + g) (1 + 2 n_th)^2.
pub fn anomalous_sq(n_th: f64, gamma_sq: f64) -> f64 {
    let f = 1.0 + 2.0 * n_th;
    gamma_sq * (1.0 + gamma_sq) * f * f
}

/// Which pair of operators a normally ordered fourth moment correlates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    SameMode,
    OppositeMomentum,
    Independent,
}

/// Normally ordered intensity correlator G^(2,2).
pub fn g22(n_k: f64, m_k: Complex64, relation: Relation) -> f64 {
    match relation {
        Relation::SameMode => 2.0 * n_k * n_k,
        Relation::OppositeMomentum => n_k * n_k + m_k.norm_sqr(),
        Relation::Independent => n_k * n_k,
    }
}

/// Intensity Cauchy-Schwarz violation, G_ab > G_aa.
pub fn intensity_csi_violated(n_k: f64, m_k: Complex64) -> bool {
    g22(n_k, m_k, Relation::OppositeMomentum) > g22(n_k, m_k, Relation::SameMode)
}

/// Mode Cauchy-Schwarz violation, |m|^2 > n^2.
pub fn mode_csi_violated(n_k: f64, m_k: Complex64) -> bool {
    m_k.norm_sqr() > n_k * n_k
}

/// Two-mode variance V = 1 + (n^2 - |m|^2) / n.
pub fn two_mode_variance(n_k: f64, m_k: Complex64) -> Result<f64> {
    if !(n_k > 0.0) {
        return Err(domain("two-mode variance undefined for an empty mode"));
    }
    Ok(1.0 + (n_k * n_k - m_k.norm_sqr()) / n_k)
}

/// Two-mode variance on the thermal-squeezed family,
/// n_th (1 + n_th) / (n_th (1 + 2g) + g).
pub fn two_mode_variance_alt(n_th: f64, gamma_sq: f64) -> Result<f64> {
    let den = n_th * (1.0 + 2.0 * gamma_sq) + gamma_sq;
    if !(den > 0.0) {
        return Err(domain("two-mode variance undefined for the vacuum"));
    }
    Ok(n_th * (1.0 + n_th) / den)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonseparability {
    pub nonseparable: bool,
    /// (n^2 - |m|^2)((n + 1)^2 - |m|^2).
    pub d5: f64,
}

/// Moment-determinant test. The second factor is positive for any physical
/// state, so the sign of d5 is that of n^2 - |m|^2.
pub fn nonseparability(n_k: f64, m_k: Complex64) -> Result<Nonseparability> {
    let m2 = m_k.norm_sqr();
    let bound = n_k * (n_k + 1.0);
    if n_k < 0.0 || m2 > bound + PHYSICALITY_TOL * bound.max(1.0) {
        return Err(Error::Unphysical(format!(
            "|m|^2 = {m2} exceeds n(n+1) = {bound}"
        )));
    }
    let d5 = (n_k * n_k - m2) * ((n_k + 1.0) * (n_k + 1.0) - m2);
    Ok(Nonseparability {
        nonseparable: d5 < 0.0,
        d5,
    })
}

/// gamma(t) conj(lambda(t)) in closed form (v <= 0):
/// -|u v| (2|b|^2 + 1) + sqrt(|b|^2 + 1) |b| (2 v^2 cos th + exp(-i th)),
/// th = 2 omega t + delta.
pub fn gamma_lambda_product(
    c: &BogoCoefficients,
    u_out: f64,
    v_out: f64,
    omega_out: f64,
    t: f64,
) -> Complex64 {
    let b2 = c.beta_sq();
    let th = 2.0 * omega_out * t + c.delta();
    let amp = ((b2 + 1.0) * b2).sqrt();
    Complex64::new(-(u_out * v_out).abs() * (2.0 * b2 + 1.0), 0.0)
        + amp
            * (Complex64::new(2.0 * v_out * v_out * th.cos(), 0.0)
                + Complex64::from_polar(1.0, -th))
}

/// Smallest t >= 0 with (2 omega t + delta) mod 2 pi = pi.
pub fn optimal_time(delta: f64, omega_out: f64) -> Result<f64> {
    if !(omega_out > 0.0) {
        return Err(domain("out-region frequency must be positive"));
    }
    let mut phase = (PI - delta).rem_euclid(TAU);
    if phase >= TAU {
        phase = 0.0;
    }
    Ok(phase / (2.0 * omega_out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityCorrelator {
    /// N (2 Re m + 2 n + 1).
    pub general: f64,
    /// 2 N (n - |m|) + N, the value at t_m where m is real and negative.
    pub at_t_m: f64,
}

impl DensityCorrelator {
    /// Suppression below the shot-noise level N at t_m.
    pub fn suppressed(&self, atom_number: f64) -> bool {
        self.at_t_m < atom_number
    }
}

/// Density-density correlator <rho_k rho_-k>.
pub fn density_correlator(atom_number: f64, n_k: f64, m_k: Complex64) -> DensityCorrelator {
    DensityCorrelator {
        general: atom_number * (2.0 * m_k.re + 2.0 * n_k + 1.0),
        at_t_m: 2.0 * atom_number * (n_k - m_k.norm()) + atom_number,
    }
}

/// Variance of the single-mode number operator, shot noise plus wave term.
pub fn number_variance(n_k: f64) -> f64 {
    n_k + n_k * n_k
}

/// Time average of |gamma|^2 over an out-region period.
pub fn time_averaged_gamma_sq(v_out: f64, beta_sq: f64) -> f64 {
    let v2 = v_out * v_out;
    v2 + beta_sq + 2.0 * v2 * beta_sq
}

/// Time-averaged occupation: thermal, interaction and production terms,
/// their three pairwise products and the triple product.
pub fn time_averaged_occupation(n_th: f64, v_out: f64, beta_sq: f64) -> f64 {
    let v2 = v_out * v_out;
    n_th + v2
        + beta_sq
        + 2.0 * (n_th * v2 + n_th * beta_sq + v2 * beta_sq)
        + 4.0 * n_th * v2 * beta_sq
}

/// How the mode grid is summed into a depletion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BoxMode {
    /// Each grid point counts once.
    #[serde(rename = "1d")]
    OneD,
    /// Each grid point stands for the lattice vectors 2 pi j / L of its |k| shell.
    #[serde(rename = "3d-shells")]
    Shells3d,
}

/// Number of nonzero lattice vectors 2 pi j / L (j in Z^3) falling in the
/// shell assigned to each grid point. Shell edges sit halfway between
/// neighbouring grid points; the outer edges mirror the first and last gaps.
pub fn shell_multiplicities(grid: &[f64], box_length: f64) -> Vec<f64> {
    if grid.is_empty() {
        return Vec::new();
    }
    let dk_lattice = TAU / box_length;
    let mut edges = Vec::with_capacity(grid.len() + 1);
    if grid.len() == 1 {
        edges.push((grid[0] - 0.5 * dk_lattice).max(0.0));
        edges.push(grid[0] + 0.5 * dk_lattice);
    } else {
        edges.push((grid[0] - 0.5 * (grid[1] - grid[0])).max(0.0));
        for w in grid.windows(2) {
            edges.push(0.5 * (w[0] + w[1]));
        }
        let l = grid.len();
        edges.push(grid[l - 1] + 0.5 * (grid[l - 1] - grid[l - 2]));
    }
    // squared lattice radii in units of dk_lattice
    let r2_edges: Vec<f64> = edges.iter().map(|e| (e / dk_lattice).powi(2)).collect();
    let r_max = *edges.last().unwrap() / dk_lattice;
    let jmax = r_max.ceil() as i64;
    let mut counts = vec![0.0; grid.len()];
    // count j3 for each (j1, j2) column by radius bracket
    let count_below = |r2: f64, c2: f64| -> i64 {
        // number of integers j3 with c2 + j3^2 < r2
        let rem = r2 - c2;
        if rem <= 0.0 {
            return 0;
        }
        let mut m = rem.sqrt().floor() as i64;
        while m >= 0 && (m * m) as f64 >= rem {
            m -= 1;
        }
        while (((m + 1) * (m + 1)) as f64) < rem {
            m += 1;
        }
        2 * m + 1
    };
    for j1 in -jmax..=jmax {
        for j2 in -jmax..=jmax {
            let c2 = (j1 * j1 + j2 * j2) as f64;
            if c2 >= r2_edges[grid.len()] {
                continue;
            }
            let mut prev = count_below(r2_edges[0], c2);
            for (i, &r2) in r2_edges[1..].iter().enumerate() {
                let cur = count_below(r2, c2);
                counts[i] += (cur - prev) as f64;
                prev = cur;
            }
        }
    }
    // the origin is the condensate
    if r2_edges[0] <= 0.0 && r2_edges.len() > 1 && r2_edges[1] > 0.0 {
        counts[0] -= 1.0;
    }
    counts
}

/// Per-mode weights of the depletion sum.
pub fn mode_weights(grid: &[f64], box_mode: BoxMode, box_length: f64) -> Vec<f64> {
    match box_mode {
        BoxMode::OneD => vec![1.0; grid.len()],
        BoxMode::Shells3d => shell_multiplicities(grid, box_length),
    }
}

/// Weighted depletion sum over the grid.
pub fn depletion(occupations: &[f64], weights: &[f64]) -> f64 {
    occupations.iter().zip(weights).map(|(n, w)| n * w).sum()
}

/// Bogoliubov-validity thresholds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityMonitor {
    /// Depletion must stay below this fraction of N.
    pub depletion_ratio: f64,
    /// Depletion times the largest occupation must stay below this fraction of N.
    pub density_ratio: f64,
}

impl Default for ValidityMonitor {
    fn default() -> Self {
        Self {
            depletion_ratio: 0.1,
            density_ratio: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidityFlags {
    pub depletion: bool,
    pub density_correlator: bool,
}

impl ValidityFlags {
    pub fn any(&self) -> bool {
        self.depletion || self.density_correlator
    }

    /// Compact text form: "ok" or the tripped monitors joined by ';'.
    pub fn label(&self) -> String {
        let mut parts = Vec::new();
        if self.depletion {
            parts.push("depletion");
        }
        if self.density_correlator {
            parts.push("density_correlator");
        }
        if parts.is_empty() {
            "ok".into()
        } else {
            parts.join(";")
        }
    }
}

impl ValidityMonitor {
    pub fn check(&self, depletion: f64, atom_number: f64, max_occupation: f64) -> ValidityFlags {
        ValidityFlags {
            depletion: depletion >= self.depletion_ratio * atom_number,
            density_correlator: max_occupation > 0.0
                && depletion >= self.density_ratio * atom_number / max_occupation,
        }
    }
}
