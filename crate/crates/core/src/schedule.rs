//! Interaction protocols U(t).
//!
//! A schedule covers the drive window [t_in, 0) and holds the interaction
//! constant at `u_out` for t >= 0. The thermal in-state is prepared at
//! `u_in`, which may differ from the right limit U(t_in+) (the square wave
//! enters on its low segment from the baseline). Values are right-continuous
//! at jumps.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::units::{kinetic_energy, omega_of, SystemParams};

/// Tag identifying the protocol family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKind {
    Constant,
    Sinusoid,
    SquareWave,
    PiecewiseConstant,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Protocol {
    Constant,
    Sinusoid {
        amplitude: f64,
        omega_d: f64,
        n_periods: u32,
    },
    SquareWave {
        amplitude: f64,
        omega_d: f64,
        n_periods: u32,
    },
    /// (duration, U) pairs, in time order starting at t_in.
    Piecewise {
        segments: Vec<(f64, f64)>,
    },
    /// Uniform table; sample j sits at t_in + j * dt and the last one at t = 0.
    Sampled {
        dt: f64,
        samples: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteractionSchedule {
    u0: f64,
    t_in: f64,
    protocol: Protocol,
}

/// Interaction law on one smooth piece of the schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Law {
    Constant(f64),
    Sinusoid {
        u0: f64,
        amplitude: f64,
        omega_d: f64,
    },
    Linear {
        t_ref: f64,
        u_ref: f64,
        slope: f64,
    },
}

impl Law {
    /// (U, dU/dt) at t.
    pub fn eval(&self, t: f64) -> (f64, f64) {
        match *self {
            Law::Constant(u) => (u, 0.0),
            Law::Sinusoid {
                u0,
                amplitude,
                omega_d,
            } => {
                let (s, c) = (omega_d * t).sin_cos();
                (u0 * (1.0 + amplitude * s), u0 * amplitude * omega_d * c)
            }
            Law::Linear {
                t_ref,
                u_ref,
                slope,
            } => (u_ref + slope * (t - t_ref), slope),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Law::Constant(_))
            || matches!(self, Law::Linear { slope, .. } if *slope == 0.0)
    }
}

/// A smooth stretch [t0, t1) of the schedule. The final piece has t1 = +inf.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Piece {
    pub t0: f64,
    pub t1: f64,
    pub law: Law,
}

/// An instantaneous change of U at time t.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jump {
    pub t: f64,
    pub before: f64,
    pub after: f64,
}

fn check_interaction(u: f64, what: &str) -> Result<()> {
    if !u.is_finite() {
        return Err(domain(format!("{what}: interaction must be finite")));
    }
    if u < 0.0 {
        return Err(Error::UnsupportedRegime(format!(
            "{what}: negative interaction {u}"
        )));
    }
    Ok(())
}

fn check_drive(u0: f64, amplitude: f64, omega_d: f64, n_periods: u32) -> Result<()> {
    check_interaction(u0, "baseline")?;
    if !(omega_d > 0.0) || !omega_d.is_finite() {
        return Err(domain(format!(
            "drive frequency must be positive, got {omega_d}"
        )));
    }
    if n_periods == 0 {
        return Err(domain("at least one drive period is required"));
    }
    if !amplitude.is_finite() {
        return Err(domain("amplitude must be finite"));
    }
    Ok(())
}

impl InteractionSchedule {
    /// Constant interaction over a window of the given duration before t = 0.
    pub fn constant(u0: f64, duration: f64) -> Result<Self> {
        check_interaction(u0, "constant schedule")?;
        if !(duration >= 0.0) || !duration.is_finite() {
            return Err(domain("duration must be finite and non-negative"));
        }
        Ok(Self {
            u0,
            t_in: -duration,
            protocol: Protocol::Constant,
        })
    }

    /// U(t) = u0 (1 + A sin(omega_D t)) for t in [-n 2pi/omega_D, 0).
    pub fn sinusoid(u0: f64, amplitude: f64, omega_d: f64, n_periods: u32) -> Result<Self> {
        check_drive(u0, amplitude, omega_d, n_periods)?;
        if amplitude.abs() >= 1.0 {
            return Err(Error::UnsupportedRegime(format!(
                "sinusoid amplitude |A| = {} must be below 1",
                amplitude.abs()
            )));
        }
        Ok(Self {
            u0,
            t_in: -(n_periods as f64) * 2.0 * PI / omega_d,
            protocol: Protocol::Sinusoid {
                amplitude,
                omega_d,
                n_periods,
            },
        })
    }

    /// Square wave of half-height pi A / 4 about u0, starting on the low segment.
    pub fn square_wave(u0: f64, amplitude: f64, omega_d: f64, n_periods: u32) -> Result<Self> {
        check_drive(u0, amplitude, omega_d, n_periods)?;
        if PI * amplitude.abs() / 4.0 >= 1.0 {
            return Err(Error::UnsupportedRegime(format!(
                "square-wave half-height pi|A|/4 = {} must be below 1",
                PI * amplitude.abs() / 4.0
            )));
        }
        Ok(Self {
            u0,
            t_in: -(n_periods as f64) * 2.0 * PI / omega_d,
            protocol: Protocol::SquareWave {
                amplitude,
                omega_d,
                n_periods,
            },
        })
    }

    /// Sequence of (duration, U) segments ending at t = 0. The in-state uses
    /// the first value and the out-region keeps the last one.
    pub fn piecewise_constant(segments: Vec<(f64, f64)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(domain("piecewise schedule needs at least one segment"));
        }
        for (i, &(d, u)) in segments.iter().enumerate() {
            if !(d > 0.0) || !d.is_finite() {
                return Err(domain(format!("segment {i}: duration must be positive")));
            }
            check_interaction(u, &format!("segment {i}"))?;
        }
        let total: f64 = segments.iter().map(|s| s.0).sum();
        Ok(Self {
            u0: segments[0].1,
            t_in: -total,
            protocol: Protocol::Piecewise { segments },
        })
    }

    /// Uniformly sampled U values, linearly interpolated; the last sample is at t = 0.
    pub fn sampled(dt: f64, samples: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(domain("sample spacing must be positive"));
        }
        if samples.len() < 2 {
            return Err(domain("sampled schedule needs at least two samples"));
        }
        for (i, &u) in samples.iter().enumerate() {
            check_interaction(u, &format!("sample {i}"))?;
        }
        Ok(Self {
            u0: samples[0],
            t_in: -((samples.len() - 1) as f64) * dt,
            protocol: Protocol::Sampled { dt, samples },
        })
    }

    pub fn kind(&self) -> ScheduleKind {
        match self.protocol {
            Protocol::Constant => ScheduleKind::Constant,
            Protocol::Sinusoid { .. } => ScheduleKind::Sinusoid,
            Protocol::SquareWave { .. } => ScheduleKind::SquareWave,
            Protocol::Piecewise { .. } => ScheduleKind::PiecewiseConstant,
            Protocol::Sampled { .. } => ScheduleKind::Sampled,
        }
    }

    pub fn u0(&self) -> f64 {
        self.u0
    }

    pub fn t_in(&self) -> f64 {
        self.t_in
    }

    pub fn amplitude(&self) -> Option<f64> {
        match self.protocol {
            Protocol::Sinusoid { amplitude, .. } | Protocol::SquareWave { amplitude, .. } => {
                Some(amplitude)
            }
            _ => None,
        }
    }

    pub fn omega_d(&self) -> Option<f64> {
        match self.protocol {
            Protocol::Sinusoid { omega_d, .. } | Protocol::SquareWave { omega_d, .. } => {
                Some(omega_d)
            }
            _ => None,
        }
    }

    pub fn n_periods(&self) -> Option<u32> {
        match self.protocol {
            Protocol::Sinusoid { n_periods, .. } | Protocol::SquareWave { n_periods, .. } => {
                Some(n_periods)
            }
            _ => None,
        }
    }

    /// Interaction of the in-region where the thermal state is prepared.
    pub fn u_in(&self) -> f64 {
        match &self.protocol {
            Protocol::Piecewise { segments } => segments[0].1,
            Protocol::Sampled { samples, .. } => samples[0],
            _ => self.u0,
        }
    }

    /// Interaction held for t >= 0.
    pub fn u_out(&self) -> f64 {
        match &self.protocol {
            Protocol::Piecewise { segments } => segments[segments.len() - 1].1,
            Protocol::Sampled { samples, .. } => samples[samples.len() - 1],
            _ => self.u0,
        }
    }

    /// Low and high levels of the square wave.
    pub fn square_levels(&self) -> Option<(f64, f64)> {
        match self.protocol {
            Protocol::SquareWave { amplitude, .. } => {
                let h = PI * amplitude / 4.0;
                Some((self.u0 * (1.0 - h), self.u0 * (1.0 + h)))
            }
            _ => None,
        }
    }

    /// Same protocol family with a different amplitude.
    pub fn with_amplitude(&self, amplitude: f64) -> Result<Self> {
        match self.protocol {
            Protocol::Sinusoid {
                omega_d, n_periods, ..
            } => Self::sinusoid(self.u0, amplitude, omega_d, n_periods),
            Protocol::SquareWave {
                omega_d, n_periods, ..
            } => Self::square_wave(self.u0, amplitude, omega_d, n_periods),
            _ => Err(Error::Unsupported(
                "amplitude applies to periodic schedules only".into(),
            )),
        }
    }

    /// 2 pi / omega_D for periodic kinds.
    pub fn drive_period(&self) -> Option<f64> {
        self.omega_d().map(|w| 2.0 * PI / w)
    }

    /// Smooth pieces covering [t_in, inf) in time order.
    pub fn pieces(&self) -> Vec<Piece> {
        let out = Piece {
            t0: 0.0,
            t1: f64::INFINITY,
            law: Law::Constant(self.u_out()),
        };
        let mut pieces = Vec::new();
        match &self.protocol {
            Protocol::Constant => {
                if self.t_in < 0.0 {
                    pieces.push(Piece {
                        t0: self.t_in,
                        t1: 0.0,
                        law: Law::Constant(self.u0),
                    });
                }
            }
            Protocol::Sinusoid {
                amplitude, omega_d, ..
            } => pieces.push(Piece {
                t0: self.t_in,
                t1: 0.0,
                law: Law::Sinusoid {
                    u0: self.u0,
                    amplitude: *amplitude,
                    omega_d: *omega_d,
                },
            }),
            Protocol::SquareWave {
                omega_d, n_periods, ..
            } => {
                let (low, high) = self.square_levels().expect("square wave");
                let half = PI / omega_d;
                let n_half = 2 * *n_periods as usize;
                for j in 0..n_half {
                    let t0 = self.t_in + j as f64 * half;
                    let t1 = if j + 1 == n_half {
                        0.0
                    } else {
                        self.t_in + (j + 1) as f64 * half
                    };
                    let u = if j % 2 == 0 { low } else { high };
                    pieces.push(Piece {
                        t0,
                        t1,
                        law: Law::Constant(u),
                    });
                }
            }
            Protocol::Piecewise { segments } => {
                let mut t = self.t_in;
                for (j, &(d, u)) in segments.iter().enumerate() {
                    let t1 = if j + 1 == segments.len() { 0.0 } else { t + d };
                    pieces.push(Piece {
                        t0: t,
                        t1,
                        law: Law::Constant(u),
                    });
                    t = t1;
                }
            }
            Protocol::Sampled { dt, samples } => {
                let m = samples.len() - 1;
                for j in 0..m {
                    let t0 = self.t_in + j as f64 * dt;
                    let t1 = if j + 1 == m {
                        0.0
                    } else {
                        self.t_in + (j + 1) as f64 * dt
                    };
                    pieces.push(Piece {
                        t0,
                        t1,
                        law: Law::Linear {
                            t_ref: t0,
                            u_ref: samples[j],
                            slope: (samples[j + 1] - samples[j]) / (t1 - t0),
                        },
                    });
                }
            }
        }
        pieces.push(out);
        pieces
    }

    /// Discontinuities of U on [t_in, 0], including the entry from `u_in`
    /// at t_in and the switch-off at 0 when they are not continuous.
    pub fn jumps(&self) -> Vec<Jump> {
        let pieces = self.pieces();
        let mut jumps = Vec::new();
        let first = pieces[0].law.eval(pieces[0].t0).0;
        if first != self.u_in() {
            jumps.push(Jump {
                t: self.t_in,
                before: self.u_in(),
                after: first,
            });
        }
        for w in pieces.windows(2) {
            let before = w[0].law.eval(w[0].t1).0;
            let after = w[1].law.eval(w[1].t0).0;
            if before != after {
                jumps.push(Jump {
                    t: w[0].t1,
                    before,
                    after,
                });
            }
        }
        jumps
    }

    fn check_time(&self, t: f64) -> Result<()> {
        if t.is_nan() || t < self.t_in {
            return Err(domain(format!(
                "time {t} precedes the start of the schedule t_in = {}",
                self.t_in
            )));
        }
        Ok(())
    }

    fn piece_at(&self, t: f64) -> Piece {
        let pieces = self.pieces();
        let idx = pieces.partition_point(|p| p.t1 <= t);
        pieces[idx.min(pieces.len() - 1)]
    }

    /// U(t); right-continuous at jumps and equal to `u_out` for t >= 0.
    pub fn interaction_at(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        Ok(self.piece_at(t).law.eval(t).0)
    }

    /// dU/dt, taken from the piece starting at t when t is a kink.
    pub fn interaction_rate(&self, t: f64) -> Result<f64> {
        self.check_time(t)?;
        if self.jumps().iter().any(|j| j.t == t) {
            return Err(Error::AtDiscontinuity { t });
        }
        Ok(self.piece_at(t).law.eval(t).1)
    }

    /// d log sqrt(omega_k) / dt = (1/2) e_kin n U' / omega_k^2.
    pub fn log_freq_derivative(&self, k: f64, t: f64, params: &SystemParams) -> Result<f64> {
        let u = self.interaction_at(t)?;
        let rate = self.interaction_rate(t)?;
        let omega = omega_of(k, u, params.density_n)?;
        Ok(log_freq_rate(k, omega, rate, params.density_n))
    }
}

pub(crate) fn log_freq_rate(k: f64, omega: f64, du_dt: f64, density_n: f64) -> f64 {
    0.5 * kinetic_energy(k) * density_n * du_dt / (omega * omega)
}
