//! Dimensionless units, Bogoliubov dispersion and thermal occupations.
//!
//! Conventions: hbar = m = k_B = 1. Energies are measured in the baseline
//! chemical potential mu0 = u0 * n, which is fixed to one, and wavenumbers in
//! inverse healing lengths. Temperatures are therefore multiples of mu0.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

const UNIT_TOLERANCE: f64 = 1e-12;

/// Physical configuration of the homogeneous gas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub density_n: f64,
    pub atom_number: u64,
    pub u0: f64,
    pub temperature: f64,
    pub mode_grid: Vec<f64>,
}

impl SystemParams {
    pub fn new(
        density_n: f64,
        atom_number: u64,
        u0: f64,
        temperature: f64,
        mode_grid: Vec<f64>,
    ) -> Result<Self> {
        if !(density_n > 0.0) || !(u0 > 0.0) {
            return Err(domain("density and baseline interaction must be positive"));
        }
        if ((u0 * density_n) - 1.0).abs() > UNIT_TOLERANCE {
            return Err(domain(format!(
                "unit convention requires u0 * n = 1, got {}",
                u0 * density_n
            )));
        }
        if atom_number < 1 {
            return Err(domain("atom number must be at least 1"));
        }
        if !(temperature >= 0.0) {
            return Err(domain("temperature must be non-negative"));
        }
        if mode_grid.iter().any(|&k| !(k > 0.0)) {
            return Err(domain("mode grid must contain only positive wavenumbers"));
        }
        if mode_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("mode grid must be strictly increasing"));
        }
        Ok(Self {
            density_n,
            atom_number,
            u0,
            temperature,
            mode_grid,
        })
    }

    /// Unit-density gas with u0 = 1 and an empty mode grid.
    pub fn unit(atom_number: u64, temperature: f64) -> Self {
        Self::new(1.0, atom_number, 1.0, temperature, Vec::new())
            .expect("unit parameters are valid")
    }

    pub fn with_grid(mut self, mode_grid: Vec<f64>) -> Result<Self> {
        self.mode_grid = mode_grid;
        Self::new(
            self.density_n,
            self.atom_number,
            self.u0,
            self.temperature,
            self.mode_grid,
        )
    }

    /// Box volume N / n.
    pub fn volume(&self) -> f64 {
        self.atom_number as f64 / self.density_n
    }

    /// Baseline chemical potential u0 * n (one by construction).
    pub fn mu0(&self) -> f64 {
        self.u0 * self.density_n
    }
}

/// Per-mode Bogoliubov quantities at a fixed interaction strength.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModePhysics {
    pub k: f64,
    pub e_kin: f64,
    pub e_k: f64,
    pub u_k: f64,
    pub v_k: f64,
}

impl ModePhysics {
    pub fn new(k: f64, interaction: f64, params: &SystemParams) -> Result<Self> {
        let e_k = dispersion(k, interaction, params)?;
        let (u_k, v_k) = uv_from_energies(kinetic_energy(k), e_k);
        Ok(Self {
            k,
            e_kin: kinetic_energy(k),
            e_k,
            u_k,
            v_k,
        })
    }

    /// Angular frequency; equal to e_k with hbar = 1.
    pub fn omega(&self) -> f64 {
        self.e_k
    }
}

pub fn kinetic_energy(k: f64) -> f64 {
    0.5 * k * k
}

/// Bogoliubov energy sqrt(e_kin (e_kin + 2 U n)).
pub fn dispersion(k: f64, interaction: f64, params: &SystemParams) -> Result<f64> {
    omega_of(k, interaction, params.density_n)
}

pub(crate) fn omega_of(k: f64, interaction: f64, density_n: f64) -> Result<f64> {
    if !(k > 0.0) {
        return Err(domain(format!("wavenumber must be positive, got {k}")));
    }
    if interaction < 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "negative interaction U = {interaction} gives a dynamically unstable dispersion"
        )));
    }
    if !interaction.is_finite() {
        return Err(domain("interaction must be finite"));
    }
    let e = kinetic_energy(k);
    if interaction == 0.0 {
        return Ok(e);
    }
    Ok((e * (e + 2.0 * interaction * density_n)).sqrt())
}

/// Real Bogoliubov coefficients (u, v) with u >= 1, v <= 0 and u^2 - v^2 = 1.
pub fn bogoliubov_uv(k: f64, interaction: f64, params: &SystemParams) -> Result<(f64, f64)> {
    let e_k = dispersion(k, interaction, params)?;
    Ok(uv_from_energies(kinetic_energy(k), e_k))
}

pub(crate) fn uv_from_energies(e_kin: f64, e_k: f64) -> (f64, f64) {
    let r = (e_kin / e_k).sqrt();
    let u = 0.5 * (r + 1.0 / r);
    let v = 0.5 * (r - 1.0 / r);
    (u, v)
}

/// Bose-Einstein occupation 1 / (exp(omega / T) - 1); zero at T = 0.
pub fn thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    check_occupation_args(omega, temperature)?;
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (omega / temperature).exp_m1())
}

/// Rayleigh-Jeans equipartition occupation T / omega.
pub fn classical_thermal_occupation(omega: f64, temperature: f64) -> Result<f64> {
    check_occupation_args(omega, temperature)?;
    Ok(temperature / omega)
}

fn check_occupation_args(omega: f64, temperature: f64) -> Result<()> {
    if !(omega > 0.0) {
        return Err(domain(format!(
            "mode frequency must be positive, got {omega}"
        )));
    }
    if !(temperature >= 0.0) {
        return Err(domain(format!(
            "temperature must be non-negative, got {temperature}"
        )));
    }
    Ok(())
}

/// Occupation at half the temperature expressed through the full-temperature
/// occupation: n(T/2) = n^2 / (2n + 1).
pub fn half_temperature_occupation(n_th: f64) -> f64 {
    n_th * n_th / (2.0 * n_th + 1.0)
}
