use bec_nonclassical::config::ScenarioConfig;
use bec_nonclassical::evolution::DEFAULT_TOL;
use bec_nonclassical::experiments::{
    decimal_grid, high_t_convergence, run_v_trace, stability_chart, ChartMethod, ModeSelection,
    StabilityChart,
};
use bec_nonclassical::schedule::InteractionSchedule;
use bec_nonclassical::units::{dispersion, SystemParams};

fn params() -> SystemParams {
    SystemParams::unit(100_000, 1.0)
}

/// True if cell (i, j) has a neighbour in k with the opposite flag.
fn on_boundary(c: &StabilityChart, i: usize, j: usize) -> bool {
    let f = c.unstable[i][j];
    (i > 0 && c.unstable[i - 1][j] != f) || (i + 1 < c.k.len() && c.unstable[i + 1][j] != f)
}

#[test]
fn square_wave_charts_agree_between_methods() {
    let family = InteractionSchedule::square_wave(1.0, 0.1, 2.0, 40).unwrap();
    let ks = decimal_grid(0.1, 1.8, 171);
    let amps = decimal_grid(0.0, 0.3, 16);
    let p = params();
    let exact =
        stability_chart(&p, &family, &ks, &amps, ChartMethod::Analytic, DEFAULT_TOL).unwrap();
    let smooth = stability_chart(
        &p,
        &family,
        &ks,
        &amps,
        ChartMethod::SmoothedOde { width_factor: 1e-4 },
        DEFAULT_TOL,
    )
    .unwrap();
    let agreement = exact.agreement(&smooth);
    assert!(agreement >= 0.999, "agreement {agreement}");
    for (i, (a, b)) in exact.unstable.iter().zip(&smooth.unstable).enumerate() {
        for (j, (x, y)) in a.iter().zip(b).enumerate() {
            if x != y {
                assert!(
                    on_boundary(&exact, i, j),
                    "interior disagreement at k = {}, A = {}",
                    ks[i],
                    amps[j]
                );
            }
        }
    }
    // zero amplitude is stable everywhere
    assert!(exact.unstable.iter().all(|row| !row[0]));
    assert!(!exact.boundaries.is_empty());
}

#[test]
fn classical_and_quantum_converge_at_high_temperature() {
    let sc = ScenarioConfig::fig1().scenario().unwrap();
    let table = high_t_convergence(&sc).unwrap();
    assert!(table.rel_gap_decreasing, "{table:?}");
    assert!(table.abs_gap_decreasing, "{table:?}");

    // Rayleigh-Jeans minus Bose-Einstein occupation tends to 1/2
    let w = dispersion(table.k, 1.0, &sc.params).unwrap();
    let offsets: Vec<f64> = table.rows.iter().map(|r| r.occupation_offset).collect();
    assert!(offsets
        .windows(2)
        .all(|o| (o[1] - 0.5).abs() < (o[0] - 0.5).abs()));
    let hot = table.rows.last().unwrap();
    assert!((hot.occupation_offset - 0.5).abs() < w / (10.0 * hot.temperature));

    // at the highest temperature both sub-Poissonian onsets fall within one period
    let period = sc.schedule.drive_period().unwrap();
    let (q, cl) = (hot.onset_q.unwrap(), hot.onset_cl.unwrap());
    assert!((q - cl).abs() <= period, "onsets {q} vs {cl}");
}

#[test]
fn emitted_records_satisfy_the_criterion_chain() {
    let sc = ScenarioConfig::fig1().scenario().unwrap();
    for r in run_v_trace(&sc).unwrap() {
        let margin = (r.n_k * r.n_k - (r.re_m_k * r.re_m_k + r.im_m_k * r.im_m_k)).abs()
            / (r.n_k * r.n_k).max(1.0);
        if margin <= 1e-9 {
            continue;
        }
        assert_eq!(r.subpoisson_q, r.intensity_csi, "{r:?}");
        assert_eq!(r.intensity_csi, r.mode_csi);
        assert_eq!(r.mode_csi, r.nonseparable);
    }
}

#[test]
fn longer_driving_pushes_the_variance_towards_zero() {
    let mut config = ScenarioConfig::fig1();
    config.temperatures_over_mu = vec![0.5];
    let min_v = |periods: u32| {
        let mut c = config.clone();
        c.schedule.n_periods = Some(periods);
        let rows = run_v_trace(&c.scenario().unwrap()).unwrap();
        rows.iter().map(|r| r.v).fold(f64::INFINITY, f64::min)
    };
    let (short, long) = (min_v(10), min_v(40));
    assert!(long < short, "{long} vs {short}");
    assert!(long < 0.05, "{long}");
}

#[test]
fn free_out_region_uses_beta_directly() {
    // With no interaction after drive-off, gamma reduces to beta.
    let mut config = ScenarioConfig::fig1();
    config.schedule.kind = bec_nonclassical::config::ScheduleKindName::Piecewise;
    config.schedule.segments = Some(vec![[3.0, 1.0], [2.0, 1.4], [4.0, 0.7], [1.0, 0.0]]);
    config.temperatures_over_mu = vec![1.0];
    config.times.t_max = 5.0;
    config.times.n_samples = 51;
    let mut sc = config.scenario().unwrap();
    sc.modes = ModeSelection::Explicit(vec![0.3, 0.9]);
    for r in run_v_trace(&sc).unwrap().iter().filter(|r| r.t >= 0.0) {
        assert!(
            (r.gamma_sq - r.beta_sq).abs() <= 1e-12 * r.beta_sq.max(1.0),
            "{r:?}"
        );
    }
}
