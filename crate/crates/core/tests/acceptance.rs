//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any criterion fails.

use std::f64::consts::{PI, TAU};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use bec_nonclassical::classical::{
    classical_density_correlator, classical_setup, monte_carlo_ensemble, ClassicalModeState,
    EnsemblePrediction,
};
use bec_nonclassical::config::ScenarioConfig;
use bec_nonclassical::evolution::{
    drive_coefficients, smoothed_square_monodromy, square_monodromy_shifted, BogoCoefficients,
    DEFAULT_TOL,
};
use bec_nonclassical::experiments::{
    dominant_frequency, equilibrium_extrapolation, linspace, run_v_trace, spectrum_sweep,
    stability_chart, ChartMethod, ModeSelection, ObservableRecord, Scenario, TimeGrid,
};
use bec_nonclassical::quantum::{
    density_correlator, gamma_sq_closed, intensity_csi_violated, mode_csi_violated,
    nonseparability, occupation, time_averaged_occupation, total_coefficients, two_mode_variance,
    BoxMode, ModeState, ValidityMonitor,
};
use bec_nonclassical::schedule::InteractionSchedule;
use bec_nonclassical::units::{
    bogoliubov_uv, classical_thermal_occupation, dispersion, half_temperature_occupation,
    thermal_occupation, SystemParams,
};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Wavenumber with omega_k(u0 = 1) = 1, the first resonance at omega_D = 2.
fn k_resonant() -> f64 {
    (2.0 * (2f64.sqrt() - 1.0)).sqrt()
}

fn unit_params() -> SystemParams {
    SystemParams::unit(100_000, 1.0)
}

fn random_phase(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::from_polar(1.0, rng.random_range(0.0..TAU))
}

fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

/// The default scenario's records, computed once and timed.
struct Fig1 {
    config: ScenarioConfig,
    scenario: Scenario,
    records: Vec<ObservableRecord>,
    elapsed: Duration,
}

fn fig1() -> Fig1 {
    let config = ScenarioConfig::fig1();
    let scenario = config.scenario().expect("default scenario resolves");
    let start = Instant::now();
    let records = run_v_trace(&scenario).expect("default scenario runs");
    Fig1 {
        config,
        scenario,
        records,
        elapsed: start.elapsed(),
    }
}

fn c01_normalization() -> Outcome {
    let p = unit_params();
    let ks = [0.3, k_resonant(), 1.5];
    let mut worst_err: f64 = 0.0;
    let mut worst_time = Duration::ZERO;
    for a in [0.05, 0.1, 0.2, 0.3] {
        for s in [
            InteractionSchedule::sinusoid(1.0, a, 2.0, 40).unwrap(),
            InteractionSchedule::square_wave(1.0, a, 2.0, 40).unwrap(),
        ] {
            for &k in &ks {
                let start = Instant::now();
                let c = drive_coefficients(&s, k, DEFAULT_TOL, &p).unwrap();
                worst_time = worst_time.max(start.elapsed());
                worst_err = worst_err.max(c.normalization_error());
            }
        }
    }
    outcome(
        worst_err <= 1e-9 && worst_time < Duration::from_secs(1),
        format!("max | |a|^2-|b|^2-1 | = {worst_err:.2e}, slowest mode {worst_time:.2?}"),
    )
}

fn c02_square_wave_oracle() -> Outcome {
    let p = unit_params();
    let mut worst: f64 = 0.0;
    for a in [0.05, 0.1, 0.3] {
        let s = InteractionSchedule::square_wave(1.0, a, 2.0, 1).unwrap();
        for k in [0.4, k_resonant(), 1.5] {
            let w = dispersion(k, 1.0, &p).unwrap();
            let smooth = smoothed_square_monodromy(&s, k, 1e-4 / w, DEFAULT_TOL, &p).unwrap();
            let exact = square_monodromy_shifted(&s, k, &p).unwrap();
            let rel = (smooth.beta.norm() - exact.beta.norm()).abs() / exact.beta.norm();
            worst = worst.max(rel);
        }
    }
    outcome(
        worst <= 1e-4,
        format!("max relative |beta| error {worst:.2e}"),
    )
}

fn c03_resonance_location() -> Outcome {
    let p = unit_params();
    let family = InteractionSchedule::sinusoid(1.0, 0.05, 2.0, 40).unwrap();
    let ks = ScenarioConfig::fig1().mode_grid();
    let chart = stability_chart(
        &p,
        &family,
        &ks,
        &[0.05],
        ChartMethod::Analytic,
        DEFAULT_TOL,
    )
    .unwrap();
    let i = chart.fastest_growing(0);
    let w = |k: f64| dispersion(k, 1.0, &p).unwrap();
    let lo = ks[i.saturating_sub(1)];
    let hi = ks[(i + 1).min(ks.len() - 1)];
    let spacing = (w(hi) - w(lo)) / (hi - lo) * (ks[1] - ks[0]);
    let miss = (w(ks[i]) - 1.0).abs();
    outcome(
        chart.growth[i][0] > 0.0 && miss <= spacing,
        format!(
            "k* = {}, |omega - omega_D/2| = {miss:.2e}, grid spacing {spacing:.2e}",
            ks[i]
        ),
    )
}

/// Random thermal squeezed states (n_th, lambda, gamma) with |lambda|^2 - |gamma|^2 = 1.
fn random_states(n: usize, seed: u64) -> Vec<ModeState> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let n_th = if rng.random_bool(0.1) {
                0.0
            } else {
                log_uniform(&mut rng, 1e-4, 1e3)
            };
            let g = log_uniform(&mut rng, 1e-6, 1e4);
            let lambda = (1.0 + g).sqrt() * random_phase(&mut rng);
            let gamma = g.sqrt() * random_phase(&mut rng);
            ModeState::from_total(lambda, gamma, n_th, 0.0)
        })
        .collect()
}

fn c04_criterion_chain() -> Outcome {
    let atoms = 1e5;
    let states = random_states(20_000, 4);
    let (mut used, mut band, mut mismatches) = (0usize, 0usize, 0usize);
    for s in &states {
        let (n, m) = (s.n_k, s.m_k);
        let g = s.gamma_sq();
        let h = half_temperature_occupation(s.n_th);
        let v = two_mode_variance(n, m).unwrap();
        let ns = nonseparability(n, m).unwrap();
        let rho = density_correlator(atoms, n, m).at_t_m;
        // distance of each criterion from its threshold, on its natural scale
        let margins = [
            (v - 1.0).abs(),
            (n * n - m.norm_sqr()).abs() / (n * n).max(1.0),
            (g - h).abs() / g.max(1.0),
            (rho - atoms).abs() / atoms / n.max(1.0),
        ];
        if margins.iter().any(|&x| x <= 1e-9) {
            band += 1;
            continue;
        }
        used += 1;
        let flags = [
            v < 1.0,
            intensity_csi_violated(n, m),
            mode_csi_violated(n, m),
            ns.d5 < 0.0,
            g > h,
            rho < atoms,
        ];
        if flags.iter().any(|&f| f != flags[0]) {
            mismatches += 1;
        }
    }
    outcome(
        used >= 10_000 && mismatches == 0,
        format!("{used} states, {band} in boundary band, {mismatches} mismatches"),
    )
}

fn c05_half_temperature() -> Outcome {
    let mut worst: f64 = 0.0;
    for x in linspace(1e-3f64.ln(), 10f64.ln(), 400) {
        let w = x.exp();
        let n = thermal_occupation(w, 1.0).unwrap();
        let lhs = thermal_occupation(w, 0.5).unwrap();
        let rhs = half_temperature_occupation(n);
        worst = worst.max((lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE));
    }
    outcome(
        worst <= 1e-12,
        format!("max relative deviation {worst:.2e}"),
    )
}

fn undriven_free_scenario(temperatures: Vec<f64>) -> Scenario {
    let schedule = InteractionSchedule::piecewise_constant(vec![(5.0, 0.0)]).unwrap();
    Scenario {
        params: unit_params(),
        times: TimeGrid {
            t_start: schedule.t_in(),
            t_max: 5.0,
            n_samples: 21,
            include_t_m: false,
        },
        schedule,
        temperatures,
        modes: ModeSelection::Explicit(vec![0.1, 0.5, 1.0, 1.8]),
        box_mode: BoxMode::OneD,
        monitor: ValidityMonitor::default(),
        tol: DEFAULT_TOL,
        seed: 0,
    }
}

fn c06_equilibrium() -> Outcome {
    let rows = run_v_trace(&undriven_free_scenario(vec![0.5, 1.0, 5.0, 20.0])).unwrap();
    let mut worst: f64 = 0.0;
    for r in &rows {
        worst = worst.max((r.v - (1.0 + r.n_th)).abs() / (1.0 + r.n_th));
        worst = worst.max((r.v_cl - r.n_cl_th).abs() / r.n_cl_th);
    }
    outcome(
        !rows.is_empty() && worst <= 1e-12,
        format!("{} rows, max relative deviation {worst:.2e}", rows.len()),
    )
}

fn c07_k0_threshold() -> Outcome {
    let schedule = InteractionSchedule::constant(1.0, 0.0).unwrap();
    let sc = Scenario {
        params: unit_params().with_grid(linspace(0.02, 2.0, 100)).unwrap(),
        times: TimeGrid {
            t_start: 0.0,
            t_max: 0.0,
            n_samples: 1,
            include_t_m: false,
        },
        schedule,
        temperatures: vec![1.0],
        modes: ModeSelection::Grid,
        box_mode: BoxMode::Shells3d,
        monitor: ValidityMonitor::default(),
        tol: DEFAULT_TOL,
        seed: 0,
    };
    let rows = spectrum_sweep(&sc, 0.0).unwrap();
    let v0 = equilibrium_extrapolation(&rows).unwrap();
    outcome((v0 - 1.0).abs() <= 1e-3, format!("V(k -> 0) = {v0:.6}"))
}

fn c08_fig1_ordering(f: &Fig1) -> Outcome {
    let temps = &f.scenario.temperatures;
    let by_t = |temp: f64| f.records.iter().filter(move |r| r.temperature == temp);

    // (a) classical variance never above the quantum one
    let mut a_viol = 0usize;
    let mut a_first = None;
    for r in &f.records {
        if r.v_cl > r.v {
            a_viol += 1;
            a_first.get_or_insert((r.temperature, r.t, r.v, r.v_cl));
        }
    }
    let a = a_viol == 0;

    // (b) largest gap shrinks with temperature
    let gaps: Vec<f64> = temps
        .iter()
        .map(|&t| by_t(t).map(|r| (r.v - r.v_cl).abs()).fold(0.0, f64::max))
        .collect();
    let b = gaps.windows(2).all(|w| w[1] < w[0]);

    // (c) both variances drop below one
    let mins: Vec<(f64, f64)> = temps
        .iter()
        .map(|&t| {
            by_t(t).fold((f64::INFINITY, f64::INFINITY), |(q, c), r| {
                (q.min(r.v), c.min(r.v_cl))
            })
        })
        .collect();
    let c = mins.iter().all(|&(q, cl)| q < 1.0 && cl < 1.0);

    // (d) post-drive oscillation at 2 omega_out, on the uniform grid only
    let k = f.records[0].k;
    let w_out = dispersion(k, f.scenario.schedule.u_out(), &f.scenario.params).unwrap();
    let grid: Vec<f64> = f
        .scenario
        .times
        .times()
        .into_iter()
        .filter(|&t| t > 0.0)
        .collect();
    let dt = grid[1] - grid[0];
    let mut d = true;
    let mut d_detail = String::new();
    for &temp in temps {
        let vs: Vec<f64> = by_t(temp)
            .filter(|r| grid.binary_search_by(|t| t.total_cmp(&r.t)).is_ok())
            .map(|r| r.v)
            .collect();
        let s = dominant_frequency(&vs, dt).unwrap();
        let ok = vs.len() == grid.len() && (s.peak - 2.0 * w_out).abs() <= s.bin_width;
        d &= ok;
        if d_detail.is_empty() {
            d_detail = format!(
                "peak {:.4} vs 2 omega {:.4} (bin {:.4})",
                s.peak,
                2.0 * w_out,
                s.bin_width
            );
        }
    }
    let fast = f.elapsed < Duration::from_secs(10);

    let yn = |x: bool| if x { "ok" } else { "FAIL" };
    let a_note = match a_first {
        Some((t, time, v, vcl)) => format!(
            " ({a_viol}/{} rows, first at T={t} t={time:.3}: V={v:.4} < V_cl={vcl:.4})",
            f.records.len()
        ),
        None => String::new(),
    };
    outcome(
        a && b && c && d && fast,
        format!(
            "k = {k}: (a) {}{a_note}; (b) {} gaps {:?}; (c) {}; (d) {} {d_detail}; runtime {:.2?}",
            yn(a),
            yn(b),
            gaps.iter().map(|g| format!("{g:.3e}")).collect::<Vec<_>>(),
            yn(c),
            yn(d),
            f.elapsed
        ),
    )
}

fn c09_classical_no_violation(f: &Fig1) -> Outcome {
    let p = unit_params();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut csi, mut worst) = (0usize, 0.0f64);
    for _ in 0..10_000 {
        let temp = log_uniform(&mut rng, 1e-2, 50.0);
        let k = rng.random_range(0.05..2.0);
        let u_out = rng.random_range(0.0..2.0);
        let (u, v) = bogoliubov_uv(k, u_out, &p).unwrap();
        let w_out = dispersion(k, u_out, &p).unwrap();
        let b = log_uniform(&mut rng, 1e-4, 20.0);
        let c = BogoCoefficients {
            alpha: (1.0 + b * b).sqrt() * random_phase(&mut rng),
            beta: b * random_phase(&mut rng),
        };
        let t = rng.random_range(0.0..50.0);
        let (l, g) = total_coefficients(&c, u, v, w_out, t).unwrap();
        let n_cl_th = classical_thermal_occupation(dispersion(k, 1.0, &p).unwrap(), temp).unwrap();
        let s = ClassicalModeState::from_total(l, g, n_cl_th, t);
        if s.m_cl.norm() >= s.n_cl {
            csi += 1;
        }
        let resid =
            (s.n_cl * s.n_cl - s.m_cl.norm_sqr() - n_cl_th * n_cl_th).abs() / (s.n_cl * s.n_cl);
        worst = worst.max(resid);
    }
    // V_cl > 0 on every default-scenario row is the same statement
    let rows_ok = f.records.iter().all(|r| r.v_cl > 0.0);
    outcome(
        csi == 0 && worst <= 1e-10 && rows_ok,
        format!("10000 draws: {csi} classical CSI violations, max relative identity residual {worst:.2e}"),
    )
}

fn c10_monte_carlo() -> Outcome {
    let start = Instant::now();
    let undriven = InteractionSchedule::constant(1.0, 0.0).unwrap();
    let driven = InteractionSchedule::sinusoid(1.0, 0.1, 2.0, 40).unwrap();
    let cases = [
        (&undriven, 0.5, 1.0, 0.0),
        (&undriven, 1.2, 5.0, 3.0),
        (&driven, k_resonant(), 0.5, 0.0),
        (&driven, k_resonant(), 20.0, 2.0),
        (&driven, 0.5, 1.0, 1.0),
    ];
    let mut worst: f64 = 0.0;
    for (i, &(s, k, temp, t)) in cases.iter().enumerate() {
        let mut p = unit_params();
        p.temperature = temp;
        let e = monte_carlo_ensemble(s, k, t, &p, 100_000, 1000 + i as u64).unwrap();
        let (c, u, v, w, n_cl_th) = classical_setup(s, k, &p, DEFAULT_TOL).unwrap();
        let (l, g) = total_coefficients(&c, u, v, w, t).unwrap();
        let pred =
            EnsemblePrediction::from_state(&ClassicalModeState::from_total(l, g, n_cl_th, t));
        for z in e.z_scores(&pred) {
            worst = worst.max(z.abs());
        }
    }
    let elapsed = start.elapsed();
    outcome(
        worst < 4.0 && elapsed < Duration::from_secs(30),
        format!(
            "{} scenarios x 1e5 samples: max |z| = {worst:.2}, runtime {elapsed:.2?}",
            cases.len()
        ),
    )
}

fn c11_density_bookkeeping(f: &Fig1) -> Outcome {
    let atoms = f.config.system.atom_number as f64;
    let mut worst: f64 = 0.0;
    let mut check = |n: f64, m: Complex64| {
        let q = density_correlator(atoms, n, m);
        let c = classical_density_correlator(atoms, n, m);
        worst = worst.max((q.at_t_m - c.at_t_m - atoms).abs() / atoms);
        worst = worst.max((q.general - c.general - atoms).abs() / atoms);
    };
    for r in &f.records {
        check(r.n_k, Complex64::new(r.re_m_k, r.im_m_k));
    }
    for s in random_states(2000, 11) {
        check(s.n_k, s.m_k);
    }
    let vac = run_v_trace(&undriven_free_scenario(vec![0.0])).unwrap();
    let vac_worst = vac
        .iter()
        .map(|r| (r.rho_corr_q - 1e5).abs() / 1e5)
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-9 && vac_worst <= 1e-9,
        format!("max |q - cl - N| / N = {worst:.2e}; vacuum max |rho - N| / N = {vac_worst:.2e}"),
    )
}

fn c12_time_average() -> Outcome {
    let p = unit_params();
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut worst: f64 = 0.0;
    for _ in 0..2000 {
        let k = rng.random_range(0.05..2.0);
        let u_out = rng.random_range(0.0..2.0);
        let (u, v) = bogoliubov_uv(k, u_out, &p).unwrap();
        let w = dispersion(k, u_out, &p).unwrap();
        let n_th = log_uniform(&mut rng, 1e-3, 1e2);
        let b = log_uniform(&mut rng, 1e-3, 10.0);
        let c = BogoCoefficients {
            alpha: (1.0 + b * b).sqrt() * random_phase(&mut rng),
            beta: b * random_phase(&mut rng),
        };
        // the integrand is a first-order trigonometric polynomial in 2 omega t,
        // so a uniform rule over one period is exact
        let m = 64;
        let period = PI / w;
        let (mut closed, mut direct) = (0.0, 0.0);
        for j in 0..m {
            let t = period * j as f64 / m as f64;
            closed += occupation(n_th, gamma_sq_closed(v, b, c.delta(), w, t));
            let (_, g) = total_coefficients(&c, u, v, w, t).unwrap();
            direct += occupation(n_th, g.norm_sqr());
        }
        let expected = time_averaged_occupation(n_th, v, b * b);
        for avg in [closed / m as f64, direct / m as f64] {
            worst = worst.max((avg - expected).abs() / expected);
        }
    }
    outcome(
        worst <= 1e-10,
        format!("2000 draws, max relative deviation {worst:.2e}"),
    )
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_becnc"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    if out.status.success() {
        Ok(())
    } else {
        Err(String::from_utf8_lossy(&out.stderr).into_owned())
    }
}

fn read_dir_sorted(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

fn c13_determinism(f: &Fig1) -> Outcome {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("fig1.toml");
    let mut config = f.config.clone();
    config.monte_carlo.samples = 20_000;
    std::fs::write(&cfg, config.to_toml_string()).unwrap();
    let cfg = cfg.to_str().unwrap();
    let mut runs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "1"), ("c", "4")] {
        let out = tmp.path().join(name);
        let out = out.to_str().unwrap();
        for cmd in ["vtrace", "stability", "mc-validate"] {
            if let Err(e) = run_cli(&[cmd, "--config", cfg, "--out", out, "--threads", threads]) {
                return outcome(false, format!("{cmd} failed: {e}"));
            }
        }
        runs.push(read_dir_sorted(Path::new(out)));
    }
    let csvs = runs[0].iter().filter(|(n, _)| n.ends_with(".csv")).count();
    let same = runs.windows(2).all(|w| w[0] == w[1]);
    outcome(
        same && csvs >= 7,
        format!(
            "{} files ({csvs} CSV) identical across 3 runs, threads 1/1/4: {same}",
            runs[0].len()
        ),
    )
}

type Criterion<'a> = (u32, &'static str, Box<dyn Fn() -> Outcome + 'a>);

fn main() {
    let start = Instant::now();
    let f = fig1();
    let criteria: Vec<Criterion> = vec![
        (1, "Bogoliubov normalization", Box::new(c01_normalization)),
        (
            2,
            "square-wave dual method",
            Box::new(c02_square_wave_oracle),
        ),
        (3, "resonance location", Box::new(c03_resonance_location)),
        (
            4,
            "criterion-equivalence chain",
            Box::new(c04_criterion_chain),
        ),
        (
            5,
            "half-temperature identity",
            Box::new(c05_half_temperature),
        ),
        (6, "equilibrium values", Box::new(c06_equilibrium)),
        (7, "k -> 0 threshold", Box::new(c07_k0_threshold)),
        (
            8,
            "default-scenario ordering",
            Box::new(|| c08_fig1_ordering(&f)),
        ),
        (
            9,
            "classical no-violation",
            Box::new(|| c09_classical_no_violation(&f)),
        ),
        (10, "Monte Carlo oracle", Box::new(c10_monte_carlo)),
        (
            11,
            "density-correlator bookkeeping",
            Box::new(|| c11_density_bookkeeping(&f)),
        ),
        (12, "time-average identity", Box::new(c12_time_average)),
        (13, "determinism", Box::new(|| c13_determinism(&f))),
    ];
    let mut failed = Vec::new();
    for (id, name, run) in &criteria {
        let o = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| outcome(false, "panicked"));
        let tag = if o.pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {tag} {name}: {}", o.detail);
        if !o.pass {
            failed.push(*id);
        }
    }
    println!(
        "acceptance: {}/{} passed in {:.2?}",
        criteria.len() - failed.len(),
        criteria.len(),
        start.elapsed()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
