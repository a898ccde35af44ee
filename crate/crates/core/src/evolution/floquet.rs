//! One-period monodromy, parametric instability and resonance location.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{integrate_law, sudden_step, TransferMatrix};
use crate::error::{Error, Result};
use crate::schedule::{InteractionSchedule, Law, ScheduleKind};
use crate::units::{omega_of, SystemParams};

/// Amplitude above which the large-amplitude resonance condition is preferred.
pub const A_SWITCH: f64 = 0.2;

/// Fundamental matrix over one drive period of the infinitely repeated drive,
/// starting at the phase of t_in.
pub fn monodromy(
    s: &InteractionSchedule,
    k: f64,
    tol: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    let period = s.drive_period().ok_or_else(|| {
        Error::Unsupported(format!("{:?} schedule has no drive period", s.kind()))
    })?;
    let n = params.density_n;
    match s.kind() {
        ScheduleKind::Sinusoid => {
            let law = Law::Sinusoid {
                u0: s.u0(),
                amplitude: s.amplitude().unwrap_or(0.0),
                omega_d: s.omega_d().expect("periodic"),
            };
            let t0 = s.t_in();
            integrate_law(k, n, move |t| law.eval(t), t0, t0 + period, tol, 0.0).map(|p| p.matrix)
        }
        ScheduleKind::SquareWave => {
            let (low, high) = s.square_levels().expect("square wave");
            let (w_low, w_high) = (omega_of(k, low, n)?, omega_of(k, high, n)?);
            let half = 0.5 * period;
            Ok(sudden_step(w_high, w_low)?
                * TransferMatrix::phase(w_high, half)
                * sudden_step(w_low, w_high)?
                * TransferMatrix::phase(w_low, half))
        }
        _ => Err(Error::Unsupported("aperiodic schedule".into())),
    }
}

/// Parametric instability of a one-period matrix.
///
/// The eigenvalues of a unit-determinant matrix with real trace 2 Re(alpha)
/// leave the unit circle iff |Re alpha| > 1. The first tongue sits where the
/// free phase per period is pi, so there Re alpha < -1.
pub fn is_unstable(m: &TransferMatrix) -> bool {
    m.alpha.re.abs() > 1.0
}

/// Log of the spectral radius per period; zero when stable.
pub fn growth_rate(m: &TransferMatrix) -> f64 {
    if !is_unstable(m) {
        return 0.0;
    }
    m.spectral_radius().ln().max(0.0)
}

/// Predicted first-resonance wavenumber from both conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ResonanceEstimate {
    /// Root of omega_k(u0) = omega_D / 2.
    pub small_amplitude: f64,
    /// Root of omega_k(U_max) + omega_k(U_min) = omega_D.
    pub large_amplitude: f64,
    /// Extremes used by the large-amplitude condition.
    pub u_min: f64,
    pub u_max: f64,
    /// The estimate for the schedule's amplitude, switching at [`A_SWITCH`].
    pub selected: f64,
}

/// Invert the dispersion: k with omega_k(U) = omega.
pub fn invert_dispersion(omega: f64, interaction: f64, density_n: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::NoResonance(format!(
            "target frequency {omega} not positive"
        )));
    }
    let mu = interaction * density_n;
    // e^2 + 2 mu e - omega^2 = 0, written without cancellation
    let e = omega * omega / (mu + (mu * mu + omega * omega).sqrt());
    Ok((2.0 * e).sqrt())
}

/// Smallest k > 0 with f(k) = 0 for f increasing from negative values.
fn bisect_increasing<F: Fn(f64) -> Result<f64>>(f: F) -> Result<f64> {
    let mut lo = 0.0_f64;
    let mut hi = 1.0_f64;
    let mut guard = 0;
    while f(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        guard += 1;
        if guard > 200 {
            return Err(Error::NoResonance("condition has no root".into()));
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // pick the endpoint with the smaller residual
    let (flo, fhi) = if lo > 0.0 {
        (f(lo)?.abs(), f(hi)?.abs())
    } else {
        (f64::INFINITY, 0.0)
    };
    Ok(if flo < fhi { lo } else { hi })
}

/// Wavenumber where the first parametric resonance is expected.
pub fn resonance_estimate(
    s: &InteractionSchedule,
    params: &SystemParams,
) -> Result<ResonanceEstimate> {
    let omega_d = s
        .omega_d()
        .ok_or_else(|| Error::Unsupported("resonance needs a periodic schedule".into()))?;
    let a = s.amplitude().unwrap_or(0.0).abs();
    let n = params.density_n;
    let u0 = s.u0();
    let small = invert_dispersion(0.5 * omega_d, u0, n)?;
    let (u_min, u_max) = match s.kind() {
        ScheduleKind::SquareWave => s.square_levels().expect("square wave"),
        _ => (u0 * (1.0 - PI * a / 3.0), u0 * (1.0 + PI * a / 3.0)),
    };
    if u_min < 0.0 {
        return Err(Error::NoResonance(format!(
            "lower interaction extreme {u_min} is negative"
        )));
    }
    let large = bisect_increasing(|k| {
        if k == 0.0 {
            return Ok(-omega_d);
        }
        Ok(omega_of(k, u_max, n)? + omega_of(k, u_min, n)? - omega_d)
    })?;
    Ok(ResonanceEstimate {
        small_amplitude: small,
        large_amplitude: large,
        u_min,
        u_max,
        selected: if a < A_SWITCH { small } else { large },
    })
}

/// Edges extend this many widths on either side of their centre.
const EDGE_REACH: f64 = 40.0;

/// A baseline interaction plus tanh-smoothed steps `(t_edge, jump)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SmoothedSteps {
    pub base: f64,
    pub edges: Vec<(f64, f64)>,
    pub width: f64,
}

impl SmoothedSteps {
    pub fn eval(&self, t: f64) -> (f64, f64) {
        let mut u = self.base;
        let mut du = 0.0;
        for &(te, jump) in &self.edges {
            let th = ((t - te) / self.width).tanh();
            u += 0.5 * jump * (1.0 + th);
            du += 0.5 * jump * (1.0 - th * th) / self.width;
        }
        (u, du)
    }

    /// Smoothed copy of a square-wave schedule, from the in-state level to
    /// the out-region level.
    pub fn from_square_wave(s: &InteractionSchedule, width: f64) -> Result<Self> {
        if s.kind() != ScheduleKind::SquareWave {
            return Err(Error::Unsupported("smoothing needs a square wave".into()));
        }
        let mut edges = Vec::new();
        let mut prev = s.u_in();
        for j in s.jumps() {
            edges.push((j.t, j.after - prev));
            prev = j.after;
        }
        Ok(Self {
            base: s.u_in(),
            edges,
            width,
        })
    }

    /// Integrate across [t_from, t_to], resolving every edge with small steps.
    pub fn propagate(
        &self,
        k: f64,
        density_n: f64,
        t_from: f64,
        t_to: f64,
        tol: f64,
    ) -> Result<TransferMatrix> {
        let reach = EDGE_REACH * self.width;
        let mut marks = vec![t_from, t_to];
        for &(te, _) in &self.edges {
            for m in [te - reach, te + reach] {
                if m > t_from && m < t_to {
                    marks.push(m);
                }
            }
        }
        marks.sort_by(f64::total_cmp);
        marks.dedup();
        let mut acc = TransferMatrix::identity();
        for w in marks.windows(2) {
            let mid = 0.5 * (w[0] + w[1]);
            let near = self.edges.iter().any(|&(te, _)| (mid - te).abs() < reach);
            let h_max = if near { 0.25 * self.width } else { 0.0 };
            let p = integrate_law(k, density_n, |t| self.eval(t), w[0], w[1], tol, h_max)?;
            acc = p.matrix * acc;
        }
        Ok(acc)
    }
}

/// One-period matrix of the tanh-smoothed square wave, taken from a quarter
/// period into the low segment so both edges lie inside the window.
pub fn smoothed_square_monodromy(
    s: &InteractionSchedule,
    k: f64,
    width: f64,
    tol: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    let (low, high) = s
        .square_levels()
        .ok_or_else(|| Error::Unsupported("smoothing needs a square wave".into()))?;
    let period = s.drive_period().expect("square wave is periodic");
    // Local time: at |t| ~ 100 the rounding of t is visible against edges
    // of width 1e-4 and the step control stalls.
    let t0 = 0.0;
    let h = high - low;
    let law = SmoothedSteps {
        base: high,
        edges: vec![(t0, -h), (t0 + 0.5 * period, h), (t0 + period, -h)],
        width,
    };
    law.propagate(
        k,
        params.density_n,
        t0 + 0.25 * period,
        t0 + 1.25 * period,
        tol,
    )
}

/// Exact one-period matrix over the same window as [`smoothed_square_monodromy`].
pub fn square_monodromy_shifted(
    s: &InteractionSchedule,
    k: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    let (low, high) = s
        .square_levels()
        .ok_or_else(|| Error::Unsupported("needs a square wave".into()))?;
    let period = s.drive_period().expect("square wave is periodic");
    let n = params.density_n;
    let (wl, wh) = (omega_of(k, low, n)?, omega_of(k, high, n)?);
    Ok(TransferMatrix::phase(wl, 0.25 * period)
        * sudden_step(wh, wl)?
        * TransferMatrix::phase(wh, 0.5 * period)
        * sudden_step(wl, wh)?
        * TransferMatrix::phase(wl, 0.25 * period))
}

/// Residual of omega_k(u0) = omega_D / 2.
pub fn small_amplitude_residual(
    k: f64,
    s: &InteractionSchedule,
    params: &SystemParams,
) -> Result<f64> {
    let omega_d = s
        .omega_d()
        .ok_or_else(|| Error::Unsupported("resonance needs a periodic schedule".into()))?;
    Ok(omega_of(k, s.u0(), params.density_n)? - 0.5 * omega_d)
}
