use percodetect::noise::{
    choose_threshold, occupancy_probabilities, validate_noise, QuantileTable, TABLE_KNOTS,
};
use percodetect::{synthesize, Error, GrayField, NoiseModel, SignalSpec, TriangularLattice};
use proptest::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

fn symmetric_models() -> Vec<NoiseModel> {
    let sample: Vec<f64> = (1..4000).map(|i| Normal::standard().inverse_cdf(i as f64 / 4000.0)).collect();
    vec![
        NoiseModel::Gaussian,
        NoiseModel::Laplace,
        NoiseModel::Uniform,
        NoiseModel::Table(QuantileTable::from_sample(&sample).unwrap().standardized().unwrap()),
    ]
}

#[test]
fn declared_families_validate() {
    for m in symmetric_models() {
        let r = validate_noise(&m).unwrap_or_else(|e| panic!("{}: {e}", m.family()));
        assert!(r.nondegenerate && r.symmetric && r.zero_mean && r.unit_variance);
    }
}

#[test]
fn fixtures_fail_with_named_conditions() {
    match validate_noise(&NoiseModel::TwoPoint) {
        Err(Error::NoiseModel(msg)) => assert!(msg.contains("degenera") || msg.contains("median"), "{msg}"),
        other => panic!("{other:?}"),
    }
    match validate_noise(&NoiseModel::ShiftedExponential) {
        Err(Error::NoiseModel(msg)) => assert!(msg.contains("symmetry"), "{msg}"),
        other => panic!("{other:?}"),
    }
    assert!(choose_threshold(&NoiseModel::TwoPoint, 1.0).is_err());
    // asymmetric but continuous at its median: a threshold still exists
    let tau = choose_threshold(&NoiseModel::ShiftedExponential, 2.0).unwrap();
    assert!((tau - (2.0 * (2f64.ln() - 1.0) + 0.5)).abs() < 1e-12);
}

#[test]
fn empirical_black_fraction_matches_survival() {
    let l = TriangularLattice::new(100).unwrap();
    for m in symmetric_models() {
        let spec = SignalSpec::null(100, 0.8);
        let field = synthesize(&spec, &m, &l, 17).unwrap();
        for tau in [-0.5, 0.0, 0.3, 1.0] {
            let p = m.survival(tau / 0.8);
            let frac = field.threshold(tau).black_count() as f64 / 1e4;
            let se = (p * (1.0 - p) / 1e4).sqrt();
            assert!((frac - p).abs() < 5.0 * se + 1e-9, "{} tau={tau}: {frac} vs {p}", m.family());
        }
    }
}

#[test]
fn signal_lifts_only_its_support() {
    let l = TriangularLattice::new(20).unwrap();
    let support = l.centered_square(7).unwrap();
    let null = synthesize(&SignalSpec::null(20, 1.0), &NoiseModel::Laplace, &l, 3).unwrap();
    let spec = SignalSpec { support: support.clone(), amplitude: 2.5, noise_scale: 1.0 };
    let sig = synthesize(&spec, &NoiseModel::Laplace, &l, 3).unwrap();
    for i in 0..400 {
        let lift = if support.contains(i) { 2.5 } else { 0.0 };
        assert!((sig.values()[i] - null.values()[i] - lift).abs() < 1e-12);
    }
    assert!(synthesize(&SignalSpec::null(20, 0.0), &NoiseModel::Gaussian, &l, 1).is_err());
    assert!(synthesize(&SignalSpec::null(21, 1.0), &NoiseModel::Gaussian, &l, 1).is_err());
}

#[test]
fn table_knot_count_is_enforced() {
    assert!(QuantileTable::from_knots(vec![0.0; 10]).is_err());
    let t = QuantileTable::from_knots((0..TABLE_KNOTS).map(|i| i as f64).collect()).unwrap();
    assert_eq!(t.knots().len(), TABLE_KNOTS);
}

proptest! {
    #[test]
    fn quantile_inverts_cdf(u in 0.001f64..0.999, which in 0usize..4) {
        let m = &symmetric_models()[which];
        let x = m.quantile(u);
        prop_assert!((m.cdf(x) - u).abs() < 1e-6);
        prop_assert!((m.survival(x) - (1.0 - m.cdf(x))).abs() < 1e-12);
    }

    #[test]
    fn symmetric_cdfs_reflect(x in -4.0f64..4.0, which in 0usize..4) {
        let m = &symmetric_models()[which];
        prop_assert!((m.cdf(-x) - (1.0 - m.cdf_left(x))).abs() < 1e-9);
    }

    #[test]
    fn straddling_threshold_gives_complementary_rates(a in 0.01f64..3.0, sigma in 0.1f64..3.0, which in 0usize..4) {
        let m = &symmetric_models()[which];
        let (p0, p1) = occupancy_probabilities(m, a / 2.0, sigma, a).unwrap();
        prop_assert!((p0 + p1 - 1.0).abs() < 1e-9);
        prop_assert!(p0 >= 0.5 && p1 <= 0.5);
    }

    #[test]
    fn black_count_falls_with_threshold(seed in any::<u64>(), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
        let l = TriangularLattice::new(12).unwrap();
        let f = synthesize(&SignalSpec::null(12, 1.0), &NoiseModel::Gaussian, &l, seed).unwrap();
        let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
        prop_assert!(f.threshold(hi).black_count() <= f.threshold(lo).black_count());
    }

    #[test]
    fn threshold_is_strict(v in -5.0f64..5.0) {
        let f = GrayField::constant(3, v);
        prop_assert_eq!(f.threshold(v).black_count(), 0);
        prop_assert_eq!(f.threshold(v - 1e-9).black_count(), 9);
    }
}
