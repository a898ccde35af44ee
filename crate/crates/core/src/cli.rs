//! Command-line front end. Each subcommand reads a scenario file, runs one
//! experiment and writes its data plus a JSON metadata sidecar.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::classical::{
    classical_setup, monte_carlo_ensemble, ClassicalModeState, EnsemblePrediction,
};
use crate::config::{ScenarioConfig, StabilityMethodName};
use crate::error::{Error, Result};
use crate::evolution::resonance_estimate;
use crate::experiments::{
    decimal_grid, equilibrium_extrapolation, run_v_trace, spectrum_sweep, stability_chart,
    ChartMethod, ObservableRecord,
};
use crate::output::{
    ensure_dir, temperature_stem, version_string, write_chart, write_json, write_records, Metadata,
    UNITS_NOTE,
};
use crate::quantum::total_coefficients;

#[derive(Debug, Parser)]
#[command(
    name = "becnc",
    version,
    about = "Quantum and classical nonclassicality of a driven BEC"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// V(t) traces for each temperature.
    Vtrace(CommonArgs),
    /// Instability chart over (k, A).
    Stability(CommonArgs),
    /// Observables over the mode grid at one out-region time.
    Spectrum(CommonArgs),
    /// Small- and large-amplitude resonance estimates.
    Resonance(CommonArgs),
    /// Monte Carlo ensemble against the classical closed forms.
    McValidate(CommonArgs),
}

#[derive(Debug, Args, Clone)]
pub struct CommonArgs {
    /// Scenario file (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, overriding output.path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Integrator tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Random seed override.
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Command {
    pub fn args(&self) -> &CommonArgs {
        match self {
            Command::Vtrace(a)
            | Command::Stability(a)
            | Command::Spectrum(a)
            | Command::Resonance(a)
            | Command::McValidate(a) => a,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Command::Vtrace(_) => "vtrace",
            Command::Stability(_) => "stability",
            Command::Spectrum(_) => "spectrum",
            Command::Resonance(_) => "resonance",
            Command::McValidate(_) => "mc-validate",
        }
    }
}

/// Load the config and apply command-line overrides.
fn load(args: &CommonArgs) -> Result<(ScenarioConfig, PathBuf)> {
    let mut c = ScenarioConfig::load(&args.config)?;
    if let Some(t) = args.tol {
        if !(t > 0.0) {
            return Err(Error::Config(format!("--tol must be positive, got {t}")));
        }
        c.integrator.tol = t;
    }
    if let Some(s) = args.seed {
        c.monte_carlo.seed = s;
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(&c.output.path));
    Ok((c, out))
}

fn finish<E: Serialize>(
    dir: &Path,
    command: &str,
    c: &ScenarioConfig,
    files: Vec<String>,
    extra: E,
) -> Result<()> {
    let meta = Metadata {
        command,
        version: version_string(),
        units: UNITS_NOTE,
        seed: c.monte_carlo.seed,
        tol: c.integrator.tol,
        config: c,
        files,
        extra,
    };
    write_json(
        &dir.join(format!("{}_meta.json", command.replace('-', "_"))),
        &meta,
    )
}

fn split_by_temperature(
    records: Vec<ObservableRecord>,
    temps: &[f64],
) -> Vec<(f64, Vec<ObservableRecord>)> {
    temps
        .iter()
        .map(|&t| {
            (
                t,
                records
                    .iter()
                    .filter(|r| r.temperature == t)
                    .cloned()
                    .collect(),
            )
        })
        .collect()
}

#[derive(Serialize)]
struct VtraceExtra {
    modes: Vec<f64>,
    rows_per_temperature: usize,
    validity_warnings: usize,
}

fn cmd_vtrace(c: &ScenarioConfig, dir: &Path) -> Result<()> {
    let sc = c.scenario()?;
    let modes = sc.resolve_modes()?;
    let records = run_v_trace(&sc)?;
    let warnings = records.iter().filter(|r| r.validity_flags != "ok").count();
    let mut files = Vec::new();
    let mut per = 0;
    for (t, rows) in split_by_temperature(records, &sc.temperatures) {
        per = rows.len();
        files.push(write_records(
            dir,
            &temperature_stem("vtrace", t),
            c.output.format,
            &rows,
        )?);
    }
    if warnings > 0 {
        eprintln!("warning: {warnings} rows exceed the Bogoliubov validity thresholds");
    }
    finish(
        dir,
        "vtrace",
        c,
        files,
        VtraceExtra {
            modes,
            rows_per_temperature: per,
            validity_warnings: warnings,
        },
    )
}

#[derive(Serialize)]
struct SpectrumExtra {
    t: f64,
    /// Quadratic extrapolation of V to k -> 0 per temperature.
    v_at_k0: Vec<(f64, f64)>,
}

fn cmd_spectrum(c: &ScenarioConfig, dir: &Path) -> Result<()> {
    let sc = c.scenario()?;
    let t = c.spectrum.t;
    let records = spectrum_sweep(&sc, t)?;
    let mut files = Vec::new();
    let mut v0 = Vec::new();
    for (temp, rows) in split_by_temperature(records, &sc.temperatures) {
        v0.push((temp, equilibrium_extrapolation(&rows).unwrap_or(f64::NAN)));
        files.push(write_records(
            dir,
            &temperature_stem("spectrum", temp),
            c.output.format,
            &rows,
        )?);
    }
    finish(dir, "spectrum", c, files, SpectrumExtra { t, v_at_k0: v0 })
}

#[derive(Serialize)]
struct StabilityExtra {
    /// Fraction of cells where the analytic and smoothed charts agree.
    agreement: Option<f64>,
}

fn cmd_stability(c: &ScenarioConfig, dir: &Path) -> Result<()> {
    let st = &c.stability;
    let params = c.params()?;
    let family = c.schedule()?;
    let ks = decimal_grid(st.k_min, st.k_max, st.n_k);
    let tol = c.integrator.tol;
    let smoothed = ChartMethod::SmoothedOde {
        width_factor: st.width_factor,
    };
    let mut files = Vec::new();
    let mut charts = Vec::new();
    if matches!(
        st.method,
        StabilityMethodName::Analytic | StabilityMethodName::Both
    ) {
        let ch = stability_chart(
            &params,
            &family,
            &ks,
            &st.a_values,
            ChartMethod::Analytic,
            tol,
        )?;
        files.extend(write_chart(dir, "stability", &ch)?);
        charts.push(ch);
    }
    if matches!(
        st.method,
        StabilityMethodName::Smoothed | StabilityMethodName::Both
    ) {
        let ch = stability_chart(&params, &family, &ks, &st.a_values, smoothed, tol)?;
        files.extend(write_chart(dir, "stability_smoothed", &ch)?);
        charts.push(ch);
    }
    let agreement = (charts.len() == 2).then(|| charts[0].agreement(&charts[1]));
    finish(dir, "stability", c, files, StabilityExtra { agreement })
}

fn cmd_resonance(c: &ScenarioConfig, dir: &Path) -> Result<()> {
    let params = c.params()?;
    let est = resonance_estimate(&c.schedule()?, &params)?;
    println!("small_amplitude_k = {}", est.small_amplitude);
    println!("large_amplitude_k = {}", est.large_amplitude);
    println!("selected_k = {}", est.selected);
    let name = "resonance.json".to_string();
    write_json(&dir.join(&name), &est)?;
    finish(dir, "resonance", c, vec![name], est)
}

#[derive(Debug, Serialize)]
pub struct McRow {
    pub temperature: f64,
    pub k: f64,
    pub t: f64,
    pub samples: usize,
    pub names: [&'static str; 6],
    pub expected: [f64; 6],
    pub estimated: [f64; 6],
    pub std_err: [f64; 6],
    pub z: [f64; 6],
}

fn cmd_mc_validate(c: &ScenarioConfig, dir: &Path) -> Result<()> {
    let sc = c.scenario()?;
    let mc = &c.monte_carlo;
    let k = sc.resolve_modes()?[0];
    let mut rows = Vec::new();
    for &temp in &sc.temperatures {
        let mut p = sc.params.clone();
        p.temperature = temp;
        let e = monte_carlo_ensemble(&sc.schedule, k, mc.t, &p, mc.samples, mc.seed)?;
        let (coef, u, v, w, n_cl_th) =
            classical_setup(&sc.schedule, k, &p, crate::evolution::DEFAULT_TOL)?;
        let (l, g) = total_coefficients(&coef, u, v, w, mc.t)?;
        let pred =
            EnsemblePrediction::from_state(&ClassicalModeState::from_total(l, g, n_cl_th, mc.t));
        let est = [
            e.intensity,
            e.auto_correlation,
            e.cross_correlation,
            e.anomalous_re,
            e.anomalous_im,
            e.variance,
        ];
        let z = e.z_scores(&pred);
        println!(
            "T = {temp}: z = [{}]",
            z.iter()
                .map(|x| format!("{x:.3}"))
                .collect::<Vec<_>>()
                .join(", ")
        );
        rows.push(McRow {
            temperature: temp,
            k,
            t: mc.t,
            samples: mc.samples,
            names: [
                "E(I_a)",
                "E(I_a I_a)",
                "E(I_a I_b)",
                "Re E(ab)",
                "Im E(ab)",
                "V_cl",
            ],
            expected: [
                pred.intensity,
                pred.auto_correlation,
                pred.cross_correlation,
                pred.anomalous.re,
                pred.anomalous.im,
                pred.variance,
            ],
            estimated: est.map(|x| x.mean),
            std_err: est.map(|x| x.std_err),
            z,
        });
    }
    let max_z = rows
        .iter()
        .flat_map(|r| r.z.iter().map(|z| z.abs()))
        .fold(0.0, f64::max);
    let name = "mc_validate.json".to_string();
    write_json(&dir.join(&name), &rows)?;
    finish(
        dir,
        "mc-validate",
        c,
        vec![name],
        serde_json::json!({ "max_abs_z": max_z }),
    )
}

/// Run a parsed command line.
pub fn run(cli: &Cli) -> Result<()> {
    let args = cli.command.args();
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::Config("--threads must be at least 1".into()));
        }
        // A pool may already exist when called repeatedly in one process.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let (c, out) = load(args)?;
    let dir = ensure_dir(&out)?;
    match &cli.command {
        Command::Vtrace(_) => cmd_vtrace(&c, &dir),
        Command::Stability(_) => cmd_stability(&c, &dir),
        Command::Spectrum(_) => cmd_spectrum(&c, &dir),
        Command::Resonance(_) => cmd_resonance(&c, &dir),
        Command::McValidate(_) => cmd_mc_validate(&c, &dir),
    }
}
