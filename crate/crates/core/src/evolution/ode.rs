//! Dormand-Prince 5(4) with adaptive step size on fixed-size real states.

use crate::error::{Error, Result};

// Butcher tableau.
const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

// 5th minus 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 5.0;
const MAX_STEPS: usize = 5_000_000;

#[derive(Debug, Clone, Copy)]
pub struct Dopri5 {
    pub rtol: f64,
    pub atol: f64,
    /// Largest allowed |h|; zero disables the cap.
    pub h_max: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct OdeSolution<const N: usize> {
    pub y: [f64; N],
    pub steps: usize,
    pub rejected: usize,
    /// Sum of absolute local error estimates over accepted steps.
    pub local_error_sum: f64,
}

fn increment<const N: usize>(h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = [0.0; N];
    for (i, o) in out.iter_mut().enumerate() {
        let mut acc = 0.0;
        for (c, k) in terms {
            acc += c * k[i];
        }
        *o = h * acc;
    }
    out
}

fn axpy<const N: usize>(y: &[f64; N], h: f64, terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let d = increment(h, terms);
    let mut out = *y;
    for i in 0..N {
        out[i] += d[i];
    }
    out
}

/// Error-free sum: a + b = s + e exactly.
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

impl Dopri5 {
    pub fn new(tol: f64) -> Self {
        Self {
            rtol: tol,
            atol: tol,
            h_max: 0.0,
        }
    }

    pub fn with_h_max(mut self, h_max: f64) -> Self {
        self.h_max = h_max;
        self
    }

    /// Integrate dy/dt = f(t, y) from t0 to t1 (either direction).
    pub fn solve<const N: usize, F>(
        &self,
        mut f: F,
        t0: f64,
        y0: [f64; N],
        t1: f64,
        h_init: f64,
    ) -> Result<OdeSolution<N>>
    where
        F: FnMut(f64, &[f64; N]) -> [f64; N],
    {
        let mut sol = OdeSolution {
            y: y0,
            steps: 0,
            rejected: 0,
            local_error_sum: 0.0,
        };
        if t0 == t1 {
            return Ok(sol);
        }
        let dir = (t1 - t0).signum();
        let span = (t1 - t0).abs();
        let mut h = h_init.abs().min(span);
        if self.h_max > 0.0 {
            h = h.min(self.h_max);
        }
        if !(h > 0.0) {
            h = span * 1e-3;
        }
        let mut t = t0;
        let mut y = y0;
        let mut lo = [0.0; N];
        let mut k1 = f(t, &y);
        let mut total = 0usize;
        loop {
            let remaining = (t1 - t) * dir;
            if remaining <= 0.0 {
                break;
            }
            let min_step = 16.0 * f64::EPSILON * t.abs().max(span);
            // Stretch a step that would leave an unresolvable sliver.
            let last = h >= remaining - 2.0 * min_step;
            let hs = if last { remaining } else { h } * dir;
            if hs.abs() < min_step {
                return Err(Error::Integration {
                    last_good_t: t,
                    reason: format!("step size underflow (h = {:e})", hs.abs()),
                });
            }
            total += 1;
            if total > MAX_STEPS {
                return Err(Error::Integration {
                    last_good_t: t,
                    reason: "maximum number of steps exceeded".into(),
                });
            }

            let k2 = f(t + C2 * hs, &axpy(&y, hs, &[(A21, &k1)]));
            let k3 = f(t + C3 * hs, &axpy(&y, hs, &[(A31, &k1), (A32, &k2)]));
            let k4 = f(
                t + C4 * hs,
                &axpy(&y, hs, &[(A41, &k1), (A42, &k2), (A43, &k3)]),
            );
            let k5 = f(
                t + C5 * hs,
                &axpy(&y, hs, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]),
            );
            let k6 = f(
                t + hs,
                &axpy(
                    &y,
                    hs,
                    &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)],
                ),
            );
            // The accepted update is accumulated with compensation, so
            // rounding of the state does not build up over long runs.
            let d = increment(
                hs,
                &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)],
            );
            let mut y_new = y;
            let mut lo_new = lo;
            for i in 0..N {
                let (s, e) = two_sum(y[i], d[i] + lo[i]);
                y_new[i] = s;
                lo_new[i] = e;
            }
            let t_new = if last { t1 } else { t + hs };
            let k7 = f(t_new, &y_new);

            let mut err_sq = 0.0;
            let mut err_abs: f64 = 0.0;
            for i in 0..N {
                let e = hs
                    * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
                let sc = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                err_sq += (e / sc) * (e / sc);
                err_abs = err_abs.max(e.abs());
            }
            let err = (err_sq / N as f64).sqrt();

            if err <= 1.0 {
                t = t_new;
                y = y_new;
                lo = lo_new;
                k1 = k7;
                sol.steps += 1;
                sol.local_error_sum += err_abs;
                let fac = if err == 0.0 {
                    FAC_MAX
                } else {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, FAC_MAX)
                };
                if !last {
                    h = hs.abs() * fac;
                    if self.h_max > 0.0 {
                        h = h.min(self.h_max);
                    }
                }
            } else {
                sol.rejected += 1;
                let fac = if err.is_finite() {
                    (SAFETY * err.powf(-0.2)).clamp(FAC_MIN, 1.0)
                } else {
                    FAC_MIN
                };
                h = hs.abs() * fac;
            }
        }
        for i in 0..N {
            sol.y[i] = y[i] + lo[i];
        }
        Ok(sol)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let s = Dopri5::new(1e-12)
            .solve(|_, y: &[f64; 1]| [-y[0]], 0.0, [1.0], 3.0, 0.1)
            .unwrap();
        assert!((s.y[0] - (-3f64).exp()).abs() < 1e-11);
    }

    #[test]
    fn harmonic_oscillator_backward() {
        let f = |_: f64, y: &[f64; 2]| [y[1], -y[0]];
        let s = Dopri5::new(1e-12)
            .solve(f, 0.0, [1.0, 0.0], -2.0, 0.1)
            .unwrap();
        assert!((s.y[0] - 2f64.cos()).abs() < 1e-10);
        assert!((s.y[1] - 2f64.sin()).abs() < 1e-10);
    }

    #[test]
    fn no_sliver_at_the_end() {
        // A step that falls a few ulp short of t1 must not strand the solver.
        let t0 = std::f64::consts::FRAC_PI_2;
        let t1 = t0 + 0.1;
        let s = Dopri5::new(1e-12)
            .solve(
                |_, y: &[f64; 2]| [y[1], -y[0]],
                t0,
                [1.0, 0.0],
                t1,
                0.1 - 4e-16,
            )
            .unwrap();
        assert!((s.y[0] - 0.1f64.cos()).abs() < 1e-12);
    }

    #[test]
    fn zero_span() {
        let s = Dopri5::new(1e-9)
            .solve(|_, y: &[f64; 1]| [y[0]], 1.0, [2.0], 1.0, 0.1)
            .unwrap();
        assert_eq!(s.y[0], 2.0);
        assert_eq!(s.steps, 0);
    }

    #[test]
    fn underflow_is_reported() {
        // Blows up at t = 1.
        let r = Dopri5::new(1e-10).solve(|_, y: &[f64; 1]| [y[0] * y[0]], 0.0, [1.0], 2.0, 0.1);
        match r {
            Err(Error::Integration { last_good_t, .. }) => {
                assert!(last_good_t > 0.9 && last_good_t < 1.0)
            }
            other => panic!("expected integration failure, got {other:?}"),
        }
    }
}
