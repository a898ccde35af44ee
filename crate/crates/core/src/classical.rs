//! Classical-field reference: equipartition initial state, the same linear
//! transfer, moments from Isserlis' theorem and a Monte Carlo ensemble.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::evolution::{transfer_to, BogoCoefficients, DEFAULT_TOL};
use crate::schedule::InteractionSchedule;
use crate::units::{
    classical_thermal_occupation, kinetic_energy, omega_of, uv_from_energies, SystemParams,
};

/// Smallest ensemble accepted by [`monte_carlo_ensemble`].
pub const MIN_SAMPLES: usize = 1000;
/// Samples per RNG stream; fixed so results do not depend on the thread count.
const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalModeState {
    pub n_cl_th: f64,
    pub n_cl: f64,
    pub m_cl: Complex64,
    pub t: f64,
}

impl ClassicalModeState {
    /// Classical state from the same total coefficients as the quantum one.
    pub fn from_total(lambda: Complex64, gamma: Complex64, n_cl_th: f64, t: f64) -> Self {
        Self {
            n_cl_th,
            n_cl: classical_occupation(n_cl_th, gamma.norm_sqr()),
            m_cl: classical_anomalous(n_cl_th, lambda, gamma),
            t,
        }
    }

    /// (n^2 - |m|^2) / n, which equals n_cl_th / (2g + 1).
    pub fn variance(&self) -> f64 {
        (self.n_cl * self.n_cl - self.m_cl.norm_sqr()) / self.n_cl
    }
}

/// n_cl = (2g + 1) n_cl_th.
pub fn classical_occupation(n_cl_th: f64, gamma_sq: f64) -> f64 {
    (2.0 * gamma_sq + 1.0) * n_cl_th
}

/// m_cl = 2 gamma conj(lambda) n_cl_th.
pub fn classical_anomalous(n_cl_th: f64, lambda: Complex64, gamma: Complex64) -> Complex64 {
    2.0 * gamma * lambda.conj() * n_cl_th
}

/// |m_cl|^2 = 4 (g + 1) g n_cl_th^2.
pub fn classical_anomalous_sq(n_cl_th: f64, gamma_sq: f64) -> f64 {
    4.0 * (gamma_sq + 1.0) * gamma_sq * n_cl_th * n_cl_th
}

/// V_cl = n_cl_th / (2g + 1).
pub fn classical_tmv(n_cl_th: f64, gamma_sq: f64) -> f64 {
    n_cl_th / (2.0 * gamma_sq + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalDensityCorrelator {
    /// N (2 Re m + 2 n).
    pub general: f64,
    /// 2 N (n - |m|).
    pub at_t_m: f64,
}

pub fn classical_density_correlator(
    atom_number: f64,
    n_cl: f64,
    m_cl: Complex64,
) -> ClassicalDensityCorrelator {
    ClassicalDensityCorrelator {
        general: atom_number * (2.0 * m_cl.re + 2.0 * n_cl),
        at_t_m: 2.0 * atom_number * (n_cl - m_cl.norm()),
    }
}

/// A sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_err: f64,
}

impl Estimate {
    pub fn z_score(&self, expected: f64) -> f64 {
        if self.std_err == 0.0 {
            if self.mean == expected {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - expected) / self.std_err
        }
    }
}

/// Empirical moments of the classical ensemble at one out-region time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsembleEstimate {
    pub sample_count: usize,
    pub rng_seed: u64,
    /// E(I_a).
    pub intensity: Estimate,
    /// E(I_a I_a).
    pub auto_correlation: Estimate,
    /// E(I_a I_b).
    pub cross_correlation: Estimate,
    /// Re and Im of E(a b).
    pub anomalous_re: Estimate,
    pub anomalous_im: Estimate,
    /// Var(I_a - I_b) / E(I_a + I_b).
    pub variance: Estimate,
}

/// Closed-form expectations matching an [`EnsembleEstimate`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePrediction {
    pub intensity: f64,
    pub auto_correlation: f64,
    pub cross_correlation: f64,
    pub anomalous: Complex64,
    pub variance: f64,
}

impl EnsemblePrediction {
    pub fn from_state(s: &ClassicalModeState) -> Self {
        let n = s.n_cl;
        let m2 = s.m_cl.norm_sqr();
        Self {
            intensity: n,
            auto_correlation: 2.0 * n * n,
            cross_correlation: n * n + m2,
            anomalous: s.m_cl,
            variance: if n > 0.0 { (n * n - m2) / n } else { 0.0 },
        }
    }
}

impl EnsembleEstimate {
    /// z-scores of (intensity, auto, cross, Re m, Im m, variance).
    pub fn z_scores(&self, p: &EnsemblePrediction) -> [f64; 6] {
        [
            self.intensity.z_score(p.intensity),
            self.auto_correlation.z_score(p.auto_correlation),
            self.cross_correlation.z_score(p.cross_correlation),
            self.anomalous_re.z_score(p.anomalous.re),
            self.anomalous_im.z_score(p.anomalous.im),
            self.variance.z_score(p.variance),
        ]
    }
}

/// Pairwise summation.
fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 32 {
        return x.iter().sum();
    }
    let (a, b) = x.split_at(x.len() / 2);
    pairwise_sum(a) + pairwise_sum(b)
}

fn estimate(x: &[f64]) -> Estimate {
    let n = x.len() as f64;
    let mean = pairwise_sum(x) / n;
    let dev: Vec<f64> = x.iter().map(|v| (v - mean) * (v - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    Estimate {
        mean,
        std_err: (var / n).sqrt(),
    }
}

/// Total coefficients of the classical field at out-region time t from the
/// drive coefficients, pushed sample by sample.
struct Push {
    alpha: Complex64,
    beta: Complex64,
    u: f64,
    v: f64,
    ph: Complex64,
}

impl Push {
    /// Particle amplitudes (a, b) from initial quasiparticle amplitudes (A, B).
    fn apply(&self, a0: Complex64, b0: Complex64) -> (Complex64, Complex64) {
        // quasiparticle amplitudes at drive-off, then free phase and (u, v)
        let a1 = self.alpha.conj() * a0 + self.beta * b0.conj();
        let b1 = self.alpha.conj() * b0 + self.beta * a0.conj();
        let a = self.u * self.ph.conj() * a1 + self.v * self.ph * b1.conj();
        let b = self.u * self.ph.conj() * b1 + self.v * self.ph * a1.conj();
        (a, b)
    }
}

/// Coefficients, out-region (u, v, omega) and equipartition occupation for a
/// schedule and mode.
pub fn classical_setup(
    s: &InteractionSchedule,
    k: f64,
    params: &SystemParams,
    tol: f64,
) -> Result<(BogoCoefficients, f64, f64, f64, f64)> {
    let n = params.density_n;
    let w_in = omega_of(k, s.u_in(), n)?;
    let w_out = omega_of(k, s.u_out(), n)?;
    let (u, v) = uv_from_energies(kinetic_energy(k), w_out);
    let c: BogoCoefficients = transfer_to(s, k, 0.0, tol, params)?.into();
    let n_cl_th = classical_thermal_occupation(w_in, params.temperature)?;
    Ok((c, u, v, w_out, n_cl_th))
}

/// Sample the equipartition ensemble of quasiparticle amplitudes, push each
/// sample through the drive and estimate moments at out-region time t.
///
/// Samples are drawn in fixed chunks, each from its own ChaCha stream keyed
/// on (seed, chunk index), and reduced in chunk order.
pub fn monte_carlo_ensemble(
    s: &InteractionSchedule,
    k: f64,
    t: f64,
    params: &SystemParams,
    sample_count: usize,
    seed: u64,
) -> Result<EnsembleEstimate> {
    if sample_count < MIN_SAMPLES {
        return Err(domain(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {sample_count}"
        )));
    }
    if !(t >= 0.0) {
        return Err(domain("evaluation time must be in the out-region"));
    }
    let (c, u, v, w_out, n_cl_th) = classical_setup(s, k, params, DEFAULT_TOL)?;
    let push = Push {
        alpha: c.alpha,
        beta: c.beta,
        u,
        v,
        ph: Complex64::from_polar(1.0, w_out * t),
    };
    let sigma = (0.5 * n_cl_th).sqrt();
    let n_chunks = sample_count.div_ceil(CHUNK);
    let chunks: Vec<Vec<[f64; 6]>> = (0..n_chunks)
        .into_par_iter()
        .map(|ci| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(ci as u64);
            let len = CHUNK.min(sample_count - ci * CHUNK);
            let mut out = Vec::with_capacity(len);
            for _ in 0..len {
                let mut g = || -> f64 { StandardNormal.sample(&mut rng) };
                let a0 = Complex64::new(sigma * g(), sigma * g());
                let b0 = Complex64::new(sigma * g(), sigma * g());
                let (a, b) = push.apply(a0, b0);
                let (ia, ib) = (a.norm_sqr(), b.norm_sqr());
                let ab = a * b;
                out.push([ia, ia * ia, ia * ib, ab.re, ab.im, ia - ib]);
            }
            out
        })
        .collect();
    let samples: Vec<[f64; 6]> = chunks.into_iter().flatten().collect();
    let col = |j: usize| -> Vec<f64> { samples.iter().map(|r| r[j]).collect() };

    // Var(D) / E(I_a + I_b) with D = I_a - I_b, error by the delta method
    let d = col(5);
    let sum_ab: Vec<f64> = samples.iter().map(|r| 2.0 * r[0] - r[5]).collect();
    let nf = samples.len() as f64;
    let d_mean = pairwise_sum(&d) / nf;
    let d2: Vec<f64> = d.iter().map(|x| (x - d_mean) * (x - d_mean)).collect();
    let var_d = pairwise_sum(&d2) / (nf - 1.0);
    let m_sum = pairwise_sum(&sum_ab) / nf;
    let ratio = var_d / m_sum;
    let infl: Vec<f64> = d
        .iter()
        .zip(&sum_ab)
        .map(|(di, si)| ((di - d_mean).powi(2) - var_d) / m_sum - ratio * (si - m_sum) / m_sum)
        .collect();
    let infl_est = estimate(&infl);

    Ok(EnsembleEstimate {
        sample_count,
        rng_seed: seed,
        intensity: estimate(&col(0)),
        auto_correlation: estimate(&col(1)),
        cross_correlation: estimate(&col(2)),
        anomalous_re: estimate(&col(3)),
        anomalous_im: estimate(&col(4)),
        variance: Estimate {
            mean: ratio,
            std_err: infl_est.std_err,
        },
    })
}
