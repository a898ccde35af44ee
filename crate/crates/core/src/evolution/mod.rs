//! Mode evolution dS/dt = M(t) S for S = (A, B^dagger) with
//!
//! ```text
//! M(t) = [[-i omega_k, r], [r, i omega_k]],   r = d log sqrt(omega_k) / dt
//! ```
//!
//! Smooth stretches are integrated numerically, constant stretches use the
//! exact phase, and jumps of U are crossed with [`sudden_step`].

pub mod floquet;
pub mod ode;
mod transfer;

use std::cell::Cell;

use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::schedule::{InteractionSchedule, Law};
use crate::units::{kinetic_energy, omega_of, SystemParams};

pub use floquet::{
    growth_rate, invert_dispersion, is_unstable, monodromy, resonance_estimate,
    smoothed_square_monodromy, square_monodromy_shifted, ResonanceEstimate, SmoothedSteps,
    A_SWITCH,
};
pub use ode::Dopri5;
pub use transfer::{sudden_step, BogoCoefficients, TransferMatrix};

/// Default integrator tolerance.
pub const DEFAULT_TOL: f64 = 1e-12;

/// Result of a propagation together with integrator diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct Propagation {
    pub matrix: TransferMatrix,
    /// Sum of local error estimates of all integrated stretches.
    pub error_estimate: f64,
    pub steps: usize,
}

impl Propagation {
    fn identity() -> Self {
        Self {
            matrix: TransferMatrix::identity(),
            error_estimate: 0.0,
            steps: 0,
        }
    }

    fn then(self, later: Propagation) -> Self {
        Self {
            matrix: later.matrix * self.matrix,
            error_estimate: self.error_estimate + later.error_estimate,
            steps: self.steps + later.steps,
        }
    }

    fn then_matrix(self, later: TransferMatrix) -> Self {
        Self {
            matrix: later * self.matrix,
            ..self
        }
    }
}

/// Integrate the mode system across a smooth stretch where `law(t)` returns
/// (U, dU/dt). `h_max` caps the step (zero for no cap).
pub fn integrate_law<F>(
    k: f64,
    density_n: f64,
    law: F,
    t_from: f64,
    t_to: f64,
    tol: f64,
    h_max: f64,
) -> Result<Propagation>
where
    F: Fn(f64) -> (f64, f64),
{
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    if !(k > 0.0) {
        return Err(domain(format!("wavenumber must be positive, got {k}")));
    }
    if t_from == t_to {
        return Ok(Propagation::identity());
    }
    let e_kin = kinetic_energy(k);
    let bad = Cell::new(None::<(f64, f64)>);
    let rhs = |t: f64, y: &[f64; 4]| {
        let (u, du) = law(t);
        if u < 0.0 && bad.get().is_none() {
            bad.set(Some((t, u)));
        }
        let u = u.max(0.0);
        let w2 = e_kin * (e_kin + 2.0 * u * density_n);
        let w = w2.sqrt();
        let r = 0.5 * e_kin * density_n * du / w2;
        // y = (Re A, Im A, Re B, Im B); dA = -i w A + r B, dB = r A + i w B
        [
            w * y[1] + r * y[2],
            -w * y[0] + r * y[3],
            r * y[0] - w * y[3],
            r * y[1] + w * y[2],
        ]
    };
    let w0 = omega_of(k, law(t_from).0.max(0.0), density_n)?;
    let h0 = 0.05 / w0;
    let sol =
        Dopri5::new(tol)
            .with_h_max(h_max)
            .solve(rhs, t_from, [1.0, 0.0, 0.0, 0.0], t_to, h0)?;
    if let Some((t, u)) = bad.get() {
        return Err(Error::UnsupportedRegime(format!(
            "interaction U = {u} < 0 encountered at t = {t}"
        )));
    }
    let y = sol.y;
    Ok(Propagation {
        matrix: TransferMatrix::from_first_column(
            Complex64::new(y[0], y[1]),
            Complex64::new(y[2], y[3]),
        ),
        error_estimate: sol.local_error_sum,
        steps: sol.steps,
    })
}

fn law_transfer(
    k: f64,
    density_n: f64,
    law: &Law,
    t_from: f64,
    t_to: f64,
    tol: f64,
) -> Result<Propagation> {
    if law.is_constant() {
        let u = law.eval(t_from).0;
        let w = omega_of(k, u, density_n)?;
        return Ok(Propagation {
            matrix: TransferMatrix::phase(w, t_to - t_from),
            ..Propagation::identity()
        });
    }
    let law = *law;
    integrate_law(k, density_n, move |t| law.eval(t), t_from, t_to, tol, 0.0)
}

enum Event {
    Smooth { law: Law, from: f64, to: f64 },
    Jump { before: f64, after: f64 },
}

/// Forward sequence of smooth stretches and jumps on (lo, hi]; a jump exactly
/// at `lo` is excluded and one at `hi` is included.
fn events(s: &InteractionSchedule, lo: f64, hi: f64) -> Vec<Event> {
    let pieces = s.pieces();
    let mut out = Vec::new();
    for (i, p) in pieces.iter().enumerate() {
        let a = p.t0.max(lo);
        let b = p.t1.min(hi);
        if a < b {
            out.push(Event::Smooth {
                law: p.law,
                from: a,
                to: b,
            });
        }
        if i + 1 < pieces.len() && p.t1 > lo && p.t1 <= hi {
            let before = p.law.eval(p.t1).0;
            let next = &pieces[i + 1];
            let after = next.law.eval(next.t0).0;
            if before != after {
                out.push(Event::Jump { before, after });
            }
        }
    }
    out
}

/// Fundamental matrix from `t_from` to `t_to`, with diagnostics.
///
/// Jumps at times in (t_from, t_to] are crossed; backward propagation
/// integrates in reverse and yields the inverse.
pub fn propagate_detailed(
    s: &InteractionSchedule,
    k: f64,
    t_from: f64,
    t_to: f64,
    tol: f64,
    params: &SystemParams,
) -> Result<Propagation> {
    if !(tol > 0.0) {
        return Err(domain("tolerance must be positive"));
    }
    if !(k > 0.0) {
        return Err(domain(format!("wavenumber must be positive, got {k}")));
    }
    for t in [t_from, t_to] {
        if t.is_nan() || t < s.t_in() || t.is_infinite() {
            return Err(domain(format!(
                "time {t} outside [t_in = {}, inf)",
                s.t_in()
            )));
        }
    }
    let n = params.density_n;
    let forward = t_to >= t_from;
    let (lo, hi) = if forward {
        (t_from, t_to)
    } else {
        (t_to, t_from)
    };
    let mut evs = events(s, lo, hi);
    if !forward {
        evs.reverse();
    }
    let mut acc = Propagation::identity();
    for ev in evs {
        match ev {
            Event::Smooth { law, from, to } => {
                let (a, b) = if forward { (from, to) } else { (to, from) };
                acc = acc.then(law_transfer(k, n, &law, a, b, tol)?);
            }
            Event::Jump { before, after } => {
                let (w1, w2) = (omega_of(k, before, n)?, omega_of(k, after, n)?);
                let step = if forward {
                    sudden_step(w1, w2)?
                } else {
                    sudden_step(w2, w1)?
                };
                acc = acc.then_matrix(step);
            }
        }
    }
    Ok(acc)
}

/// Fundamental matrix phi(t_to) with phi(t_from) = identity.
pub fn propagate(
    s: &InteractionSchedule,
    k: f64,
    t_from: f64,
    t_to: f64,
    tol: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    propagate_detailed(s, k, t_from, t_to, tol, params).map(|p| p.matrix)
}

/// Step from the in-region interaction into the schedule at t_in.
pub fn entry_step(
    s: &InteractionSchedule,
    k: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    let first = s.interaction_at(s.t_in())?;
    if first == s.u_in() {
        return Ok(TransferMatrix::identity());
    }
    sudden_step(
        omega_of(k, s.u_in(), params.density_n)?,
        omega_of(k, first, params.density_n)?,
    )
}

/// Transfer from the in-state to time t >= t_in, entry step included.
pub fn transfer_to(
    s: &InteractionSchedule,
    k: f64,
    t: f64,
    tol: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    Ok(propagate(s, k, s.t_in(), t, tol, params)? * entry_step(s, k, params)?)
}

/// Bogoliubov coefficients of the full drive, in-state to t_out = 0.
pub fn drive_coefficients(
    s: &InteractionSchedule,
    k: f64,
    tol: f64,
    params: &SystemParams,
) -> Result<BogoCoefficients> {
    transfer_to(s, k, 0.0, tol, params).map(Into::into)
}

/// Transfers from the in-state to each of the ascending `times`, sharing
/// one sweep of integration.
pub fn transfer_series(
    s: &InteractionSchedule,
    k: f64,
    times: &[f64],
    tol: f64,
    params: &SystemParams,
) -> Result<Vec<TransferMatrix>> {
    if times.windows(2).any(|w| w[1] < w[0]) {
        return Err(domain("times must be non-decreasing"));
    }
    let mut out = Vec::with_capacity(times.len());
    let mut acc = entry_step(s, k, params)?;
    let mut t_prev = s.t_in();
    for &t in times {
        // Past drive-off only the out-region phase evolves.
        let step = if t_prev >= 0.0 {
            let w = omega_of(k, s.u_out(), params.density_n)?;
            TransferMatrix::phase(w, t - t_prev)
        } else {
            propagate(s, k, t_prev, t, tol, params)?
        };
        acc = step * acc;
        out.push(acc);
        t_prev = t;
    }
    Ok(out)
}
