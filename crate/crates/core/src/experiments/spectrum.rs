use serde::{Deserialize, Serialize};

use super::{
    environment, grid_coefficients, make_record, richardson_to_zero, run_v_trace, ObservableRecord,
    Scenario,
};
use crate::error::{domain, Result};
use crate::evolution::BogoCoefficients;
use crate::quantum::total_coefficients;
use crate::units::{
    classical_thermal_occupation, kinetic_energy, omega_of, thermal_occupation, uv_from_energies,
};

/// Records over the whole mode grid at out-region time t, ordered by (T, k).
pub fn spectrum_sweep(sc: &Scenario, t: f64) -> Result<Vec<ObservableRecord>> {
    sc.validate()?;
    if !(t >= 0.0) {
        return Err(domain("spectra are evaluated in the out-region, t >= 0"));
    }
    let p = &sc.params;
    if p.mode_grid.is_empty() {
        return Err(domain("spectrum sweep needs a mode grid"));
    }
    let s = &sc.schedule;
    let n = p.density_n;
    let coeffs = grid_coefficients(s, p, sc.tol)?;
    let mut out = Vec::with_capacity(p.mode_grid.len() * sc.temperatures.len());
    for &temp in &sc.temperatures {
        let env = environment(sc, &p.mode_grid, &coeffs, temp)?;
        for (&k, m) in p.mode_grid.iter().zip(&coeffs) {
            let w_in = omega_of(k, s.u_in(), n)?;
            let w_out = omega_of(k, s.u_out(), n)?;
            let (u, v) = uv_from_energies(kinetic_energy(k), w_out);
            let c: BogoCoefficients = (*m).into();
            let (l, g) = total_coefficients(&c, u, v, w_out, t)?;
            out.push(make_record(
                k,
                t,
                l,
                g,
                c.beta_sq(),
                thermal_occupation(w_in, temp)?,
                classical_thermal_occupation(w_in, temp)?,
                &env,
            )?);
        }
    }
    Ok(out)
}

/// V extrapolated to k -> 0 from the three smallest wavenumbers among
/// records of a single temperature.
pub fn equilibrium_extrapolation(records: &[ObservableRecord]) -> Result<f64> {
    let mut rs: Vec<&ObservableRecord> = records.iter().collect();
    if rs.len() < 3 {
        return Err(domain("extrapolation needs at least three modes"));
    }
    if rs.iter().any(|r| r.temperature != rs[0].temperature) {
        return Err(domain("extrapolation mixes temperatures"));
    }
    rs.sort_by(|a, b| a.k.total_cmp(&b.k));
    richardson_to_zero([rs[0].k, rs[1].k, rs[2].k], [rs[0].v, rs[1].v, rs[2].v])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub temperature: f64,
    /// max_t |V - V_cl|.
    pub max_abs_gap: f64,
    /// max_t |V - V_cl| / V.
    pub max_rel_gap: f64,
    /// n_cl_th - n_th of the followed mode.
    pub occupation_offset: f64,
    /// First sampled time with V < 1, if any.
    pub onset_q: Option<f64>,
    /// First sampled time with V_cl < 1, if any.
    pub onset_cl: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceTable {
    pub k: f64,
    pub rows: Vec<ConvergenceRow>,
    pub abs_gap_decreasing: bool,
    pub rel_gap_decreasing: bool,
}

/// Gap between the quantum and classical variance as the temperature grows,
/// for the first selected mode.
pub fn high_t_convergence(sc: &Scenario) -> Result<ConvergenceTable> {
    let mut temps = sc.temperatures.clone();
    temps.sort_by(f64::total_cmp);
    if temps.len() < 3 || temps[0] <= 0.0 || temps[temps.len() - 1] < 10.0 * temps[0] {
        return Err(domain(
            "convergence study needs at least three positive temperatures spanning a decade",
        ));
    }
    let k = sc.resolve_modes()?[0];
    let mut one = sc.clone();
    one.temperatures = temps.clone();
    one.modes = super::ModeSelection::Explicit(vec![k]);
    let rows = run_v_trace(&one)?;
    let mut table = Vec::new();
    for &temp in &temps {
        let rs: Vec<&ObservableRecord> = rows.iter().filter(|r| r.temperature == temp).collect();
        let mut abs_gap: f64 = 0.0;
        let mut rel_gap: f64 = 0.0;
        for r in &rs {
            let gap = (r.v - r.v_cl).abs();
            abs_gap = abs_gap.max(gap);
            rel_gap = rel_gap.max(gap / r.v);
        }
        table.push(ConvergenceRow {
            temperature: temp,
            max_abs_gap: abs_gap,
            max_rel_gap: rel_gap,
            occupation_offset: rs[0].n_cl_th - rs[0].n_th,
            onset_q: rs.iter().find(|r| r.v < 1.0).map(|r| r.t),
            onset_cl: rs.iter().find(|r| r.v_cl < 1.0).map(|r| r.t),
        });
    }
    let dec = |f: fn(&ConvergenceRow) -> f64| table.windows(2).all(|w| f(&w[1]) < f(&w[0]));
    Ok(ConvergenceTable {
        k,
        abs_gap_decreasing: dec(|r| r.max_abs_gap),
        rel_gap_decreasing: dec(|r| r.max_rel_gap),
        rows: table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{linspace, ModeSelection, TimeGrid};
    use crate::quantum::{BoxMode, ValidityMonitor};
    use crate::schedule::InteractionSchedule;
    use crate::units::SystemParams;

    fn equilibrium(temps: Vec<f64>, grid: Vec<f64>) -> Scenario {
        let params = SystemParams::unit(100_000, 1.0).with_grid(grid).unwrap();
        let schedule = InteractionSchedule::constant(1.0, 0.0).unwrap();
        Scenario {
            params,
            schedule,
            temperatures: temps,
            times: TimeGrid {
                t_start: 0.0,
                t_max: 0.0,
                n_samples: 1,
                include_t_m: false,
            },
            modes: ModeSelection::Grid,
            box_mode: BoxMode::OneD,
            monitor: ValidityMonitor::default(),
            tol: 1e-12,
            seed: 0,
        }
    }

    #[test]
    fn equilibrium_v_grows_towards_small_k() {
        let sc = equilibrium(vec![1.0], linspace(0.02, 2.0, 100));
        let rows = spectrum_sweep(&sc, 0.0).unwrap();
        for w in rows.windows(2) {
            assert!(w[0].v > w[1].v, "V not decreasing in k at {}", w[1].k);
        }
        let v0 = equilibrium_extrapolation(&rows).unwrap();
        assert!((v0 - 1.0).abs() < 1e-3, "{v0}");
    }

    #[test]
    fn cold_equilibrium_is_nonseparable_at_small_k() {
        let sc = equilibrium(vec![0.5], linspace(0.02, 2.0, 100));
        let rows = spectrum_sweep(&sc, 0.0).unwrap();
        assert!(rows[0].nonseparable);
    }

    #[test]
    fn convergence_needs_a_decade() {
        let sc = equilibrium(vec![1.0, 2.0, 5.0], vec![0.5, 1.0]);
        assert!(high_t_convergence(&sc).is_err());
    }
}
