//! Scenario files in TOML. Unknown keys are rejected so that a misspelled
//! physics parameter never falls back to a default silently.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::{decimal_grid, ModeSelection, Scenario, TimeGrid};
use crate::quantum::{BoxMode, ValidityMonitor};
use crate::schedule::InteractionSchedule;
use crate::units::SystemParams;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub schema_version: u32,
    #[serde(default = "default_temperatures")]
    pub temperatures_over_mu: Vec<f64>,
    #[serde(default)]
    pub system: SystemSection,
    #[serde(default)]
    pub schedule: ScheduleSection,
    #[serde(default)]
    pub modes: ModesSection,
    #[serde(default)]
    pub times: TimesSection,
    #[serde(default)]
    pub integrator: IntegratorSection,
    #[serde(default)]
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub stability: StabilitySection,
    #[serde(default)]
    pub spectrum: SpectrumSection,
    #[serde(default)]
    pub validity: ValiditySection,
}

fn default_temperatures() -> Vec<f64> {
    vec![0.5, 1.0, 5.0, 20.0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSection {
    pub density_n: f64,
    #[serde(rename = "atom_number_N")]
    pub atom_number: u64,
    pub u0: f64,
    pub box_mode: BoxMode,
}

impl Default for SystemSection {
    fn default() -> Self {
        Self {
            density_n: 1.0,
            atom_number: 100_000,
            u0: 1.0,
            box_mode: BoxMode::Shells3d,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScheduleKindName {
    Constant,
    Sinusoid,
    SquareWave,
    Piecewise,
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSection {
    pub kind: ScheduleKindName,
    #[serde(rename = "A", default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
    #[serde(rename = "omega_D", default, skip_serializing_if = "Option::is_none")]
    pub omega_d: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_periods: Option<u32>,
    /// Constant schedules: length of the window before t = 0.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub duration: Option<f64>,
    /// Piecewise schedules: [duration, U] pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub segments: Option<Vec<[f64; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<Vec<f64>>,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        Self {
            kind: ScheduleKindName::Sinusoid,
            amplitude: Some(0.1),
            omega_d: Some(2.0),
            n_periods: Some(40),
            duration: None,
            segments: None,
            dt: None,
            samples: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub k_min: f64,
    pub k_max: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModesSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_list: Option<Vec<f64>>,
    #[serde(default)]
    pub auto_resonant: bool,
    /// Mode grid used for depletion sums, snapping and sweeps.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSection>,
}

impl Default for ModesSection {
    fn default() -> Self {
        Self {
            k_list: None,
            auto_resonant: true,
            grid: Some(GridSection {
                k_min: 0.1,
                k_max: 1.8,
                n: 171,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimesSection {
    pub t_max: f64,
    pub n_samples: usize,
    #[serde(default = "yes")]
    pub include_t_m: bool,
    /// Defaults to the start of the drive.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_start: Option<f64>,
}

fn yes() -> bool {
    true
}

impl Default for TimesSection {
    fn default() -> Self {
        Self {
            t_max: 60.0,
            n_samples: 2001,
            include_t_m: true,
            t_start: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorSection {
    pub tol: f64,
}

impl Default for IntegratorSection {
    fn default() -> Self {
        Self { tol: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
    /// Out-region time at which moments are compared.
    #[serde(default)]
    pub t: f64,
}

fn default_samples() -> usize {
    100_000
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        Self {
            samples: default_samples(),
            seed: 0,
            t: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub format: OutputFormat,
    pub path: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self {
            format: OutputFormat::Csv,
            path: "out".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StabilityMethodName {
    Analytic,
    Smoothed,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilitySection {
    pub k_min: f64,
    pub k_max: f64,
    pub n_k: usize,
    pub a_values: Vec<f64>,
    pub method: StabilityMethodName,
    /// Edge width of the smoothed square wave in units of 1 / omega_k.
    pub width_factor: f64,
}

impl Default for StabilitySection {
    fn default() -> Self {
        Self {
            k_min: 0.1,
            k_max: 1.8,
            n_k: 171,
            a_values: decimal_grid(0.0, 0.3, 31),
            method: StabilityMethodName::Analytic,
            width_factor: 1e-4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumSection {
    /// Out-region evaluation time.
    pub t: f64,
}

impl Default for SpectrumSection {
    fn default() -> Self {
        Self { t: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ValiditySection {
    pub depletion_ratio: f64,
    pub density_ratio: f64,
}

impl Default for ValiditySection {
    fn default() -> Self {
        let m = ValidityMonitor::default();
        Self {
            depletion_ratio: m.depletion_ratio,
            density_ratio: m.density_ratio,
        }
    }
}

fn cfg(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let c: ScenarioConfig = toml::from_str(text).map_err(|e| cfg(e.to_string()))?;
        if c.schema_version != SCHEMA_VERSION {
            return Err(cfg(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                c.schema_version
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| cfg(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// The default Fig. 1 scenario.
    pub fn fig1() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            temperatures_over_mu: default_temperatures(),
            system: SystemSection::default(),
            schedule: ScheduleSection::default(),
            modes: ModesSection::default(),
            times: TimesSection::default(),
            integrator: IntegratorSection::default(),
            monte_carlo: MonteCarloSection::default(),
            output: OutputSection::default(),
            stability: StabilitySection::default(),
            spectrum: SpectrumSection::default(),
            validity: ValiditySection::default(),
        }
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn schedule(&self) -> Result<InteractionSchedule> {
        let s = &self.schedule;
        let need = |v: Option<f64>, name: &str| {
            v.ok_or_else(|| cfg(format!("schedule.{name} is required")))
        };
        let u0 = self.system.u0;
        let sched = match s.kind {
            ScheduleKindName::Constant => {
                InteractionSchedule::constant(u0, s.duration.unwrap_or(0.0))
            }
            ScheduleKindName::Sinusoid | ScheduleKindName::SquareWave => {
                let a = need(s.amplitude, "A")?;
                let w = need(s.omega_d, "omega_D")?;
                let n = s
                    .n_periods
                    .ok_or_else(|| cfg("schedule.n_periods is required"))?;
                if s.kind == ScheduleKindName::Sinusoid {
                    InteractionSchedule::sinusoid(u0, a, w, n)
                } else {
                    InteractionSchedule::square_wave(u0, a, w, n)
                }
            }
            ScheduleKindName::Piecewise => {
                let segs = s
                    .segments
                    .clone()
                    .ok_or_else(|| cfg("schedule.segments is required"))?;
                InteractionSchedule::piecewise_constant(
                    segs.into_iter().map(|[d, u]| (d, u)).collect(),
                )
            }
            ScheduleKindName::Sampled => {
                let dt = need(s.dt, "dt")?;
                let samples = s
                    .samples
                    .clone()
                    .ok_or_else(|| cfg("schedule.samples is required"))?;
                InteractionSchedule::sampled(dt, samples)
            }
        };
        sched.map_err(|e| cfg(format!("schedule: {e}")))
    }

    pub fn mode_grid(&self) -> Vec<f64> {
        self.modes
            .grid
            .as_ref()
            .map(|g| decimal_grid(g.k_min, g.k_max, g.n))
            .unwrap_or_default()
    }

    pub fn params(&self) -> Result<SystemParams> {
        let s = &self.system;
        SystemParams::new(s.density_n, s.atom_number, s.u0, 0.0, self.mode_grid())
            .map_err(|e| cfg(format!("system: {e}")))
    }

    /// Resolve into a runnable scenario.
    pub fn scenario(&self) -> Result<Scenario> {
        let params = self.params()?;
        let schedule = self.schedule()?;
        let modes = if let Some(ks) = &self.modes.k_list {
            ModeSelection::Explicit(ks.clone())
        } else if self.modes.auto_resonant {
            ModeSelection::FirstResonant
        } else if self.modes.grid.is_some() {
            ModeSelection::Grid
        } else {
            return Err(cfg("modes: give k_list, auto_resonant = true or a grid"));
        };
        let t = &self.times;
        let sc = Scenario {
            times: TimeGrid {
                t_start: t.t_start.unwrap_or(schedule.t_in()),
                t_max: t.t_max,
                n_samples: t.n_samples,
                include_t_m: t.include_t_m,
            },
            params,
            schedule,
            temperatures: self.temperatures_over_mu.clone(),
            modes,
            box_mode: self.system.box_mode,
            monitor: ValidityMonitor {
                depletion_ratio: self.validity.depletion_ratio,
                density_ratio: self.validity.density_ratio,
            },
            tol: self.integrator.tol,
            seed: self.monte_carlo.seed,
        };
        sc.validate().map_err(|e| cfg(e.to_string()))?;
        Ok(sc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_fig1_defaults() {
        let c = ScenarioConfig::from_toml_str("schema_version = 1\n").unwrap();
        assert_eq!(c, ScenarioConfig::fig1());
        let sc = c.scenario().unwrap();
        assert_eq!(sc.temperatures, vec![0.5, 1.0, 5.0, 20.0]);
        assert_eq!(sc.params.mode_grid.len(), 171);
        assert_eq!(sc.schedule.n_periods(), Some(40));
        assert_eq!(sc.modes, ModeSelection::FirstResonant);
    }

    #[test]
    fn round_trip() {
        let c = ScenarioConfig::fig1();
        let back = ScenarioConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn strictness() {
        for bad in [
            "schema_version = 2\n",
            "schema_version = 1\nfoo = 3\n",
            "schema_version = 1\n[system]\ndensity_n = 1.0\natom_number_N = 10\nu0 = 1.0\nbox_mode = \"1d\"\nmass = 2\n",
            "schema_version = 1\n[schedule]\nkind = \"sinusoid\"\nA = 0.1\nomega_d = 2.0\nn_periods = 4\n",
            "temperatures_over_mu = [1.0]\n",
        ] {
            assert!(matches!(ScenarioConfig::from_toml_str(bad), Err(Error::Config(_))), "{bad}");
        }
    }

    #[test]
    fn schedule_kinds() {
        let text = r#"
schema_version = 1
temperatures_over_mu = [1.0]
[system]
density_n = 2.0
atom_number_N = 1000
u0 = 0.5
box_mode = "1d"
[schedule]
kind = "piecewise"
segments = [[1.0, 0.5], [2.0, 0.7], [1.5, 0.5]]
[modes]
k_list = [0.5, 1.0]
[times]
t_max = 3.0
n_samples = 11
"#;
        let c = ScenarioConfig::from_toml_str(text).unwrap();
        let sc = c.scenario().unwrap();
        assert_eq!(sc.schedule.t_in(), -4.5);
        assert_eq!(sc.times.t_start, -4.5);
        assert_eq!(sc.modes, ModeSelection::Explicit(vec![0.5, 1.0]));
        // u0 * n must be one
        let bad = text.replace("u0 = 0.5", "u0 = 0.6");
        assert!(matches!(
            ScenarioConfig::from_toml_str(&bad).unwrap().scenario(),
            Err(Error::Config(_))
        ));
        let missing = text.replace("segments = [[1.0, 0.5], [2.0, 0.7], [1.5, 0.5]]", "");
        assert!(ScenarioConfig::from_toml_str(&missing)
            .unwrap()
            .scenario()
            .is_err());
    }
}
