use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::evolution::{
    growth_rate, is_unstable, monodromy, smoothed_square_monodromy, TransferMatrix,
};
use crate::schedule::{InteractionSchedule, ScheduleKind};
use crate::units::{omega_of, SystemParams};

/// How one-period matrices are obtained for the chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ChartMethod {
    /// Sudden-step composition for square waves, direct integration otherwise.
    Analytic,
    /// Square wave with tanh edges of width `width_factor / omega_k`, integrated.
    SmoothedOde { width_factor: f64 },
}

/// Edge of an instability tongue along k at fixed amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TongueBoundary {
    pub amplitude: f64,
    pub k: f64,
    /// True where the mode becomes unstable with increasing k.
    pub entering: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityChart {
    pub k: Vec<f64>,
    pub amplitude: Vec<f64>,
    /// unstable[i][j] for k[i] and amplitude[j].
    pub unstable: Vec<Vec<bool>>,
    /// Log spectral radius per period.
    pub growth: Vec<Vec<f64>>,
    pub boundaries: Vec<TongueBoundary>,
}

impl StabilityChart {
    /// Fraction of cells whose flags agree with another chart on the same grid.
    pub fn agreement(&self, other: &StabilityChart) -> f64 {
        let mut same = 0usize;
        let mut total = 0usize;
        for (a, b) in self.unstable.iter().zip(&other.unstable) {
            for (x, y) in a.iter().zip(b) {
                total += 1;
                same += (x == y) as usize;
            }
        }
        same as f64 / total.max(1) as f64
    }

    /// Index of the k with the largest growth in amplitude column j.
    pub fn fastest_growing(&self, j: usize) -> usize {
        (0..self.k.len())
            .max_by(|&a, &b| self.growth[a][j].total_cmp(&self.growth[b][j]))
            .unwrap_or(0)
    }
}

fn period_matrix(
    s: &InteractionSchedule,
    k: f64,
    method: ChartMethod,
    tol: f64,
    params: &SystemParams,
) -> Result<TransferMatrix> {
    match method {
        ChartMethod::Analytic => monodromy(s, k, tol, params),
        ChartMethod::SmoothedOde { width_factor } => {
            if s.kind() != ScheduleKind::SquareWave {
                return Err(Error::Unsupported(
                    "smoothed charts need a square wave".into(),
                ));
            }
            let w = omega_of(k, s.u0(), params.density_n)?;
            smoothed_square_monodromy(s, k, width_factor / w, tol, params)
        }
    }
}

/// Instability map over (k, A) for a periodic schedule family. The template's
/// amplitude is replaced by each value of `amplitudes`.
pub fn stability_chart(
    params: &SystemParams,
    family: &InteractionSchedule,
    k_grid: &[f64],
    amplitudes: &[f64],
    method: ChartMethod,
    tol: f64,
) -> Result<StabilityChart> {
    if family.drive_period().is_none() {
        return Err(Error::Unsupported(
            "stability charts need a periodic schedule".into(),
        ));
    }
    if k_grid.is_empty() || amplitudes.is_empty() {
        return Err(domain("chart grids must be non-empty"));
    }
    let schedules: Vec<InteractionSchedule> = amplitudes
        .iter()
        .map(|&a| family.with_amplitude(a))
        .collect::<Result<_>>()?;
    let cells: Vec<Vec<(bool, f64)>> = k_grid
        .par_iter()
        .map(|&k| {
            schedules
                .iter()
                .map(|s| {
                    let m = period_matrix(s, k, method, tol, params)?;
                    Ok((is_unstable(&m), growth_rate(&m)))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let unstable: Vec<Vec<bool>> = cells
        .iter()
        .map(|r| r.iter().map(|c| c.0).collect())
        .collect();
    let growth: Vec<Vec<f64>> = cells
        .iter()
        .map(|r| r.iter().map(|c| c.1).collect())
        .collect();

    let mut boundaries = Vec::new();
    for (j, s) in schedules.iter().enumerate() {
        for i in 0..k_grid.len().saturating_sub(1) {
            if unstable[i][j] == unstable[i + 1][j] {
                continue;
            }
            let f = |k: f64| -> Result<f64> {
                Ok(period_matrix(s, k, method, tol, params)?.alpha.re.abs() - 1.0)
            };
            let (mut lo, mut hi) = (k_grid[i], k_grid[i + 1]);
            let f_lo = f(lo)?;
            for _ in 0..60 {
                let mid = 0.5 * (lo + hi);
                if (f(mid)? > 0.0) == (f_lo > 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            boundaries.push(TongueBoundary {
                amplitude: amplitudes[j],
                k: 0.5 * (lo + hi),
                entering: unstable[i + 1][j],
            });
        }
    }
    Ok(StabilityChart {
        k: k_grid.to_vec(),
        amplitude: amplitudes.to_vec(),
        unstable,
        growth,
        boundaries,
    })
}
