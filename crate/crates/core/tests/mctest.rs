use percodetect::bounds::false_alarm_exact_vs_leading;
use percodetect::mctest::{
    estimate_errors, gaussian_rates, rate_bounds, threshold_scan, wilson_interval, ErrorKind, PeSource,
    RateBoundParams, ScanContext, ScanStop, Scenario,
};
use percodetect::{
    max_cluster_size, run_test, synthesize, Calibrator, Decision, GrayField, NoiseModel, SignalSpec, SweepOptions,
    TriangularLattice,
};
use proptest::prelude::*;

fn ctx(cal: &Calibrator, pe_source: PeSource) -> ScanContext<'_> {
    ScanContext { calibrator: cal, alpha: 0.01, trials: 2000, seed: 5, pe_source }
}

#[test]
fn scan_rejects_a_noiseless_object_at_the_first_threshold() {
    let l = TriangularLattice::new(24).unwrap();
    let spec = SignalSpec { support: l.centered_square(12).unwrap(), amplitude: 1.0, noise_scale: 1e-9 };
    let field = synthesize(&spec, &NoiseModel::Gaussian, &l, 1).unwrap();
    let cal = Calibrator::new(SweepOptions::default());
    let report =
        threshold_scan(&field, &l, &[0.9, 0.7, 0.5], 0.0, &ctx(&cal, PeSource::PerTau(vec![0.3, 0.3, 0.3]))).unwrap();
    assert_eq!(report.decision, Decision::RejectH0);
    assert_eq!(report.stopped_by, ScanStop::Rejected);
    assert_eq!(report.tests_performed, 1);
    assert_eq!(report.steps[0].statistic.min(144), report.steps[0].statistic);
}

#[test]
fn scan_on_noise_stops_at_the_minimal_threshold() {
    let l = TriangularLattice::new(30).unwrap();
    let field = synthesize(&SignalSpec::null(30, 1.0), &NoiseModel::Gaussian, &l, 11).unwrap();
    let cal = Calibrator::new(SweepOptions::default());
    let source = PeSource::Model { model: NoiseModel::Gaussian, sigma: 1.0 };
    let report = threshold_scan(&field, &l, &[1.0, 0.6, 0.3, 0.1, 0.04], 0.05, &ctx(&cal, source)).unwrap();
    assert_eq!(report.decision, Decision::RetainH0);
    assert_eq!(report.stopped_by, ScanStop::BelowMinimalThreshold);
    assert_eq!(report.tests_performed, 4);
    // each step was calibrated to its own p_E
    let pes: Vec<f64> = report.steps.iter().map(|s| s.p_e.unwrap()).collect();
    assert!(pes.windows(2).all(|w| w[0] < w[1]));
    assert!(report.steps.iter().all(|s| s.p_value.is_some()));
}

#[test]
fn single_threshold_scan_is_a_plain_test() {
    let l = TriangularLattice::new(20).unwrap();
    let field = synthesize(&SignalSpec::null(20, 1.0), &NoiseModel::Laplace, &l, 2).unwrap();
    let cal = Calibrator::new(SweepOptions::default());
    let report = threshold_scan(&field, &l, &[0.2], 0.0, &ctx(&cal, PeSource::PerTau(vec![0.4]))).unwrap();
    let c0 = cal.calibrate(20, 0.4, 0.01, 2000, 5).unwrap().c0 as usize;
    let plain = run_test(&field, 0.2, c0, &l).unwrap();
    assert_eq!(report.steps[0].decision, plain.decision);
    assert_eq!(report.steps[0].statistic, plain.statistic);
}

#[test]
fn malformed_schedules_are_errors() {
    let l = TriangularLattice::new(8).unwrap();
    let f = GrayField::constant(8, 0.0);
    let cal = Calibrator::new(SweepOptions::default());
    let c = ctx(&cal, PeSource::PerTau(vec![0.3, 0.3]));
    assert!(threshold_scan(&f, &l, &[], 0.0, &c).is_err());
    assert!(threshold_scan(&f, &l, &[0.3, 0.5], 0.0, &c).is_err());
    assert!(threshold_scan(&f, &l, &[0.5, 0.5], 0.0, &c).is_err());
    assert!(threshold_scan(&f, &l, &[0.5], 0.0, &c).is_err());
    assert!(threshold_scan(&f, &l, &[0.5, 0.3], -1.0, &c).is_err());
}

#[test]
fn calibrated_null_rejects_at_most_alpha() {
    let l = TriangularLattice::new(30).unwrap();
    let cal = Calibrator::new(SweepOptions::default());
    let c0 = cal.calibrate(30, 0.5, 0.05, 20_000, 3).unwrap().c0 as usize;
    let scenario = Scenario { lattice: l.clone(), signal: SignalSpec::null(30, 1.0), model: NoiseModel::Gaussian, tau: 0.0, c0 };
    let est = estimate_errors(&scenario, 2000, 99).unwrap();
    assert_eq!(est.kind, ErrorKind::TypeI);
    assert!(est.rate <= 0.05 + 3.0 * est.standard_error(), "{est:?}");
    assert!(est.ci_low <= est.rate && est.rate <= est.ci_high);
}

#[test]
fn overwhelming_signal_is_never_missed() {
    let l = TriangularLattice::new(30).unwrap();
    for c0 in [10, 200, 900] {
        let scenario = Scenario {
            lattice: l.clone(),
            signal: SignalSpec { support: percodetect::SiteMask::full(30), amplitude: 10.0, noise_scale: 1.0 },
            model: NoiseModel::Gaussian,
            tau: 0.0,
            c0,
        };
        let est = estimate_errors(&scenario, 200, 4).unwrap();
        assert_eq!(est.kind, ErrorKind::TypeII);
        assert_eq!(est.errors, 0, "c0 = {c0}");
    }
}

#[test]
fn error_estimates_need_a_hundred_trials() {
    let l = TriangularLattice::new(5).unwrap();
    let s = Scenario { lattice: l, signal: SignalSpec::null(5, 1.0), model: NoiseModel::Gaussian, tau: 0.0, c0: 3 };
    assert!(estimate_errors(&s, 99, 1).is_err());
    let (lo, hi) = wilson_interval(50, 100, 1.96);
    assert!((lo + hi - 1.0).abs() < 1e-12);
}

#[test]
fn estimates_do_not_depend_on_thread_count() {
    let l = TriangularLattice::new(20).unwrap();
    let s = Scenario { lattice: l, signal: SignalSpec::null(20, 1.0), model: NoiseModel::Uniform, tau: 0.0, c0: 60 };
    let a = estimate_errors(&s, 300, 8).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let b = pool.install(|| estimate_errors(&s, 300, 8).unwrap());
    assert_eq!(a, b);
}

#[test]
fn disk_cache_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let first = Calibrator::new(SweepOptions::default()).with_cache_dir(dir.path());
    let a = first.calibrate(12, 0.45, 0.05, 500, 2).unwrap();
    let files: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(files.len(), 1);
    let second = Calibrator::new(SweepOptions::default()).with_cache_dir(dir.path());
    assert_eq!(second.calibrate(12, 0.45, 0.05, 500, 2).unwrap(), a);
    // a damaged file is ignored and rebuilt
    let path = files[0].as_ref().unwrap().path();
    std::fs::write(&path, b"junk").unwrap();
    let third = Calibrator::new(SweepOptions::default()).with_cache_dir(dir.path());
    assert_eq!(third.calibrate(12, 0.45, 0.05, 500, 2).unwrap(), a);
    assert!(std::fs::metadata(&path).unwrap().len() > 4);
}

#[test]
fn reference_gaussian_rates() {
    let r = gaussian_rates(0.025, 1.0, 0.05).unwrap();
    assert!((r.p_b - 0.51).abs() < 0.01 && (r.p_e - 0.49).abs() < 0.01);
    assert!(r.p_b < 0.52 && r.p_e > 0.48);
    assert!(gaussian_rates(0.1, 0.0, 1.0).is_err());
}

#[test]
fn rate_bounds_share_the_lemma_leading_term() {
    for (c, lambda, n) in [(1.0, 2.0, 100.0), (0.8, 1.5, 1000.0), (3.0, 0.5, 64.0)] {
        let p = RateBoundParams { k0: 2.0 * c, c, lambda, d: 0.2, c1: 0.3, c2: lambda - 1.0 / c, rho: None };
        let b = rate_bounds(&p, n).unwrap();
        let lemma = false_alarm_exact_vs_leading(n, c, lambda).unwrap();
        assert_eq!(b.expo_finite_leading, lemma.leading);
    }
    let grid = [64.0, 128.0, 256.0, 1024.0, 1e5];
    let p = RateBoundParams { k0: 4.0, c: 2.0, lambda: 1.0, d: 0.2, c1: 0.3, c2: 0.5, rho: None };
    let betas: Vec<f64> = grid.iter().map(|&n| rate_bounds(&p, n).unwrap().beta_bound).collect();
    assert!(betas.windows(2).all(|w| w[1] < w[0]));
    assert!(*betas.last().unwrap() < 1e-5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn decision_matches_the_maximum_cluster(seed in any::<u64>(), tau in -1.0f64..1.0, c0 in 1usize..300) {
        let l = TriangularLattice::new(16).unwrap();
        let f = synthesize(&SignalSpec::null(16, 1.0), &NoiseModel::Gaussian, &l, seed).unwrap();
        let t = max_cluster_size(&f.threshold(tau), &l).unwrap();
        let r = run_test(&f, tau, c0, &l).unwrap();
        prop_assert_eq!(r.decision.is_reject(), t >= c0);
        if !r.early_stopped {
            prop_assert_eq!(r.statistic, t);
        }
    }
}
