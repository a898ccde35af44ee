//! Scenario harness: V(t) traces, stability charts, spectra and
//! high-temperature convergence.

mod analysis;
mod spectrum;
mod stability;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classical::{
    classical_density_correlator, classical_occupation, classical_tmv, ClassicalModeState,
};
use crate::error::{domain, Result};
use crate::evolution::{drive_coefficients, resonance_estimate, transfer_series, TransferMatrix};
use crate::quantum::{
    density_correlator, instantaneous_coefficients, intensity_csi_violated, mode_csi_violated,
    mode_weights, nonseparability, optimal_time, time_averaged_occupation, two_mode_variance,
    BoxMode, ModeState, ValidityFlags, ValidityMonitor,
};
use crate::schedule::InteractionSchedule;
use crate::units::{
    classical_thermal_occupation, kinetic_energy, omega_of, thermal_occupation, uv_from_energies,
    SystemParams,
};

pub use analysis::{decimal_grid, dominant_frequency, linspace, richardson_to_zero, Spectrum};
pub use spectrum::{
    equilibrium_extrapolation, high_t_convergence, spectrum_sweep, ConvergenceRow, ConvergenceTable,
};
pub use stability::{stability_chart, ChartMethod, StabilityChart, TongueBoundary};

/// Which modes a scenario follows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum ModeSelection {
    Explicit(Vec<f64>),
    /// The predicted first resonance, snapped to the nearest grid point.
    FirstResonant,
    /// Every point of the mode grid.
    Grid,
}

/// Evaluation times: a uniform grid, optionally with each mode's t_m added.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub t_start: f64,
    pub t_max: f64,
    pub n_samples: usize,
    pub include_t_m: bool,
}

impl TimeGrid {
    pub fn times(&self) -> Vec<f64> {
        linspace(self.t_start, self.t_max, self.n_samples)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    /// The temperature field is ignored in favour of `temperatures`.
    pub params: SystemParams,
    pub schedule: InteractionSchedule,
    /// Temperatures in units of mu0.
    pub temperatures: Vec<f64>,
    pub times: TimeGrid,
    pub modes: ModeSelection,
    pub box_mode: BoxMode,
    pub monitor: ValidityMonitor,
    pub tol: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.temperatures.is_empty() {
            return Err(domain("at least one temperature is required"));
        }
        if self
            .temperatures
            .iter()
            .any(|t| !(*t >= 0.0) || !t.is_finite())
        {
            return Err(domain("temperatures must be finite and non-negative"));
        }
        let g = &self.times;
        if g.n_samples == 0 || !(g.t_max >= g.t_start) {
            return Err(domain(
                "time grid needs n_samples >= 1 and t_max >= t_start",
            ));
        }
        if g.t_start < self.schedule.t_in() {
            return Err(domain(format!(
                "time grid starts at {} before the drive begins at {}",
                g.t_start,
                self.schedule.t_in()
            )));
        }
        if !(self.tol > 0.0) {
            return Err(domain("integrator tolerance must be positive"));
        }
        Ok(())
    }

    /// Wavenumbers selected by the mode setting.
    pub fn resolve_modes(&self) -> Result<Vec<f64>> {
        match &self.modes {
            ModeSelection::Explicit(ks) => {
                if ks.is_empty() || ks.iter().any(|k| !(*k > 0.0)) {
                    return Err(domain("explicit modes must be positive and non-empty"));
                }
                Ok(ks.clone())
            }
            ModeSelection::Grid => {
                if self.params.mode_grid.is_empty() {
                    return Err(domain("mode grid is empty"));
                }
                Ok(self.params.mode_grid.clone())
            }
            ModeSelection::FirstResonant => {
                let est = resonance_estimate(&self.schedule, &self.params)?;
                let grid = &self.params.mode_grid;
                if grid.is_empty() {
                    return Ok(vec![est.selected]);
                }
                let k = grid
                    .iter()
                    .copied()
                    .min_by(|a, b| {
                        (a - est.selected)
                            .abs()
                            .total_cmp(&(b - est.selected).abs())
                    })
                    .expect("non-empty grid");
                Ok(vec![k])
            }
        }
    }
}

/// One output row pairing quantum and classical observables at (k, t, T).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableRecord {
    pub k: f64,
    pub t: f64,
    #[serde(rename = "T")]
    pub temperature: f64,
    pub n_th: f64,
    pub n_cl_th: f64,
    pub beta_sq: f64,
    pub gamma_sq: f64,
    pub n_k: f64,
    pub re_m_k: f64,
    pub im_m_k: f64,
    #[serde(rename = "V")]
    pub v: f64,
    #[serde(rename = "V_cl")]
    pub v_cl: f64,
    pub d5: f64,
    pub subpoisson_q: bool,
    pub subpoisson_cl: bool,
    pub intensity_csi: bool,
    pub mode_csi: bool,
    pub nonseparable: bool,
    pub rho_corr_q: f64,
    pub rho_corr_cl: f64,
    pub depletion_fraction: f64,
    pub validity_flags: String,
}

/// Column order of [`ObservableRecord`] in CSV output.
pub const RECORD_COLUMNS: [&str; 22] = [
    "k",
    "t",
    "T",
    "n_th",
    "n_cl_th",
    "beta_sq",
    "gamma_sq",
    "n_k",
    "re_m_k",
    "im_m_k",
    "V",
    "V_cl",
    "d5",
    "subpoisson_q",
    "subpoisson_cl",
    "intensity_csi",
    "mode_csi",
    "nonseparable",
    "rho_corr_q",
    "rho_corr_cl",
    "depletion_fraction",
    "validity_flags",
];

/// Per-temperature constants shared by every row.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Environment {
    pub temperature: f64,
    pub atom_number: f64,
    pub depletion_fraction: f64,
    pub flags: ValidityFlags,
}

/// Inputs for one row: total coefficients and the occupations of the in-state.
#[allow(clippy::too_many_arguments)]
pub(crate) fn make_record(
    k: f64,
    t: f64,
    lambda: Complex64,
    gamma: Complex64,
    beta_sq: f64,
    n_th: f64,
    n_cl_th: f64,
    env: &Environment,
) -> Result<ObservableRecord> {
    let q = ModeState::from_total(lambda, gamma, n_th, t);
    let g = q.gamma_sq();
    let cl = ClassicalModeState::from_total(lambda, gamma, n_cl_th, t);
    let v = if q.n_k > 0.0 {
        two_mode_variance(q.n_k, q.m_k)?
    } else {
        f64::NAN
    };
    let v_cl = classical_tmv(n_cl_th, g);
    let ns = nonseparability(q.n_k, q.m_k)?;
    let rq = density_correlator(env.atom_number, q.n_k, q.m_k);
    let rc = classical_density_correlator(env.atom_number, cl.n_cl, cl.m_cl);
    debug_assert!((cl.n_cl - classical_occupation(n_cl_th, g)).abs() <= 1e-12 * cl.n_cl.max(1.0));
    Ok(ObservableRecord {
        k,
        t,
        temperature: env.temperature,
        n_th,
        n_cl_th,
        beta_sq,
        gamma_sq: g,
        n_k: q.n_k,
        re_m_k: q.m_k.re,
        im_m_k: q.m_k.im,
        v,
        v_cl,
        d5: ns.d5,
        subpoisson_q: v < 1.0,
        subpoisson_cl: v_cl < 1.0,
        intensity_csi: intensity_csi_violated(q.n_k, q.m_k),
        mode_csi: mode_csi_violated(q.n_k, q.m_k),
        nonseparable: ns.nonseparable,
        rho_corr_q: rq.general,
        rho_corr_cl: rc.general,
        depletion_fraction: env.depletion_fraction,
        validity_flags: env.flags.label(),
    })
}

/// Drive coefficients for every mode of the grid, in grid order.
pub(crate) fn grid_coefficients(
    s: &InteractionSchedule,
    params: &SystemParams,
    tol: f64,
) -> Result<Vec<TransferMatrix>> {
    params
        .mode_grid
        .par_iter()
        .map(|&k| drive_coefficients(s, k, tol, params).map(Into::into))
        .collect()
}

/// Out-region time-averaged depletion and validity flags at temperature T,
/// summed over `ks` with the given coefficients.
pub(crate) fn environment(
    sc: &Scenario,
    ks: &[f64],
    coeffs: &[TransferMatrix],
    temperature: f64,
) -> Result<Environment> {
    let p = &sc.params;
    let n = p.density_n;
    let weights = mode_weights(ks, sc.box_mode, p.volume().cbrt());
    let mut occ = Vec::with_capacity(ks.len());
    for (&k, m) in ks.iter().zip(coeffs) {
        let w_in = omega_of(k, sc.schedule.u_in(), n)?;
        let w_out = omega_of(k, sc.schedule.u_out(), n)?;
        let (_, v) = uv_from_energies(kinetic_energy(k), w_out);
        let n_th = thermal_occupation(w_in, temperature)?;
        occ.push(time_averaged_occupation(n_th, v, m.beta.norm_sqr()));
    }
    let total = crate::quantum::depletion(&occ, &weights);
    let max_occ = occ.iter().copied().fold(0.0, f64::max);
    let atoms = p.atom_number as f64;
    Ok(Environment {
        temperature,
        atom_number: atoms,
        depletion_fraction: total / atoms,
        flags: sc.monitor.check(total, atoms, max_occ),
    })
}

/// Depletion environments for each temperature of the scenario.
pub(crate) fn environments(sc: &Scenario, modes: &[f64]) -> Result<Vec<Environment>> {
    let (ks, coeffs) = if sc.params.mode_grid.is_empty() {
        let c: Result<Vec<TransferMatrix>> = modes
            .par_iter()
            .map(|&k| drive_coefficients(&sc.schedule, k, sc.tol, &sc.params).map(Into::into))
            .collect();
        (modes.to_vec(), c?)
    } else {
        (
            sc.params.mode_grid.clone(),
            grid_coefficients(&sc.schedule, &sc.params, sc.tol)?,
        )
    };
    sc.temperatures
        .iter()
        .map(|&t| environment(sc, &ks, &coeffs, t))
        .collect()
}

/// Evaluation times for one mode: the uniform grid plus, if requested, the
/// first t_m after drive-off.
fn mode_times(sc: &Scenario, k: f64) -> Result<Vec<f64>> {
    let mut times = sc.times.times();
    if sc.times.include_t_m {
        let c = drive_coefficients(&sc.schedule, k, sc.tol, &sc.params)?;
        let w = omega_of(k, sc.schedule.u_out(), sc.params.density_n)?;
        let tm = optimal_time(c.delta(), w)?;
        if tm >= sc.times.t_start && tm <= sc.times.t_max {
            times.push(tm);
        }
    }
    times.sort_by(f64::total_cmp);
    times.dedup();
    Ok(times)
}

/// Quantum and classical observables along the time grid for every
/// selected mode and temperature, ordered by (T, k, t).
///
/// During the drive the rows use the transformation of the instantaneous
/// interaction; after drive-off the coefficients are frozen and only the
/// out-region phase evolves.
pub fn run_v_trace(sc: &Scenario) -> Result<Vec<ObservableRecord>> {
    sc.validate()?;
    let modes = sc.resolve_modes()?;
    let envs = environments(sc, &modes)?;
    let n = sc.params.density_n;
    let s = &sc.schedule;

    struct Track {
        k: f64,
        times: Vec<f64>,
        lg: Vec<(Complex64, Complex64, f64)>,
        w_in: f64,
    }
    let tracks: Vec<Track> = modes
        .par_iter()
        .map(|&k| -> Result<Track> {
            let times = mode_times(sc, k)?;
            let mats = transfer_series(s, k, &times, sc.tol, &sc.params)?;
            let e_kin = kinetic_energy(k);
            let mut lg = Vec::with_capacity(times.len());
            for (&t, m) in times.iter().zip(&mats) {
                let u_t = s.interaction_at(t)?;
                let (u, v) = uv_from_energies(e_kin, omega_of(k, u_t, n)?);
                let (l, g) = instantaneous_coefficients(m, u, v);
                lg.push((l, g, m.beta.norm_sqr()));
            }
            Ok(Track {
                k,
                times,
                lg,
                w_in: omega_of(k, s.u_in(), n)?,
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for env in &envs {
        for tr in &tracks {
            let n_th = thermal_occupation(tr.w_in, env.temperature)?;
            let n_cl_th = classical_thermal_occupation(tr.w_in, env.temperature)?;
            for (&t, &(l, g, b2)) in tr.times.iter().zip(&tr.lg) {
                out.push(make_record(tr.k, t, l, g, b2, n_th, n_cl_th, env)?);
            }
        }
    }
    Ok(out)
}
