//! The Maximum Cluster Test: threshold the image, look for a black cluster of
//! at least `c0` sites, reject the null hypothesis iff one exists.
//!
//! `c0` comes either from a simulated null distribution ([`Calibrator`]) or
//! from the asymptotic rule `phi(N) = K0 ln N` ([`phi_log`]).

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::PathBuf;
use std::sync::{Arc, Mutex, OnceLock};

use log::{debug, info, warn};
use rayon::prelude::*;
use serde::{Serialize, Serializer};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::bounds::false_alarm_leading;
use crate::clusters::find_cluster_at_least;
use crate::error::{Error, Result};
use crate::lattice::TriangularLattice;
use crate::newman_ziff::{
    critical_value, read_container, sweep, Container, CriticalValueRow, MaxClusterDistribution,
    MicroCanonicalTable, SweepOptions,
};
use crate::noise::{synthesize, GrayField, NoiseModel, SignalSpec};
use crate::rng;

/// Environment variable naming a directory for cached sweep tables.
pub const CACHE_DIR_ENV: &str = "PERCODETECT_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    RejectH0,
    RetainH0,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::RejectH0 => "reject-H0",
            Decision::RetainH0 => "retain-H0",
        }
    }

    pub fn is_reject(self) -> bool {
        self == Decision::RejectH0
    }
}

impl Serialize for Decision {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DetectionReport {
    pub decision: Decision,
    /// Largest black cluster; a lower bound when `early_stopped`.
    #[serde(rename = "T")]
    pub statistic: usize,
    pub c0: usize,
    pub tau: f64,
    #[serde(rename = "N")]
    pub side: usize,
    #[serde(rename = "pE")]
    pub p_e: Option<f64>,
    pub early_stopped: bool,
    /// `S(T)` under the calibrated null; an upper bound when `early_stopped`.
    pub p_value: Option<f64>,
}

impl DetectionReport {
    /// Attaches the calibration probability and the p-value `S(T)`.
    pub fn with_null(mut self, null: &MaxClusterDistribution) -> Self {
        self.p_e = Some(null.p());
        self.p_value = Some(null.survival(self.statistic.min(u32::MAX as usize) as u32));
        self
    }
}

pub fn run_test(
    field: &GrayField,
    tau: f64,
    c0: usize,
    lattice: &TriangularLattice,
) -> Result<DetectionReport> {
    if c0 == 0 {
        return Err(Error::Parameter("c0 must be at least 1".into()));
    }
    if field.side() != lattice.side() {
        return Err(Error::DimensionMismatch { expected: lattice.side(), actual: field.side() });
    }
    let binary = field.threshold(tau);
    let search = find_cluster_at_least(&binary, lattice, c0)?;
    Ok(DetectionReport {
        decision: if search.found { Decision::RejectH0 } else { Decision::RetainH0 },
        statistic: search.witness_size,
        c0,
        tau,
        side: lattice.side(),
        p_e: None,
        early_stopped: search.found,
        p_value: None,
    })
}

/// Key of a cached sweep.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct TableKey {
    side: usize,
    trials: u64,
    seed: u64,
}

/// Computes critical values from simulated null distributions. Sweep tables
/// are cached in memory and, when configured, on disk as NZMC1 containers.
#[derive(Debug, Default)]
pub struct Calibrator {
    tables: Mutex<HashMap<TableKey, Arc<MicroCanonicalTable>>>,
    cache_dir: Option<PathBuf>,
    options: SweepOptions,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub c0: u32,
    pub saturated: bool,
    pub row: CriticalValueRow,
}

impl Calibrator {
    pub fn new(options: SweepOptions) -> Self {
        Self { options, ..Default::default() }
    }

    pub fn with_cache_dir(mut self, dir: impl Into<PathBuf>) -> Self {
        self.cache_dir = Some(dir.into());
        self
    }

    /// Uses the directory in `PERCODETECT_CACHE_DIR`, if set.
    pub fn from_env(options: SweepOptions) -> Self {
        let c = Self::new(options);
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(d) if !d.is_empty() => c.with_cache_dir(PathBuf::from(d)),
            _ => c,
        }
    }

    fn cache_path(&self, key: TableKey) -> Option<PathBuf> {
        self.cache_dir.as_ref().map(|d| {
            d.join(format!("nzmc_n{}_t{}_s{}.bin", key.side, key.trials, key.seed))
        })
    }

    /// The null sweep for `(side, trials, seed)`.
    pub fn table(&self, side: usize, trials: u64, seed: u64) -> Result<Arc<MicroCanonicalTable>> {
        let key = TableKey { side, trials, seed };
        if let Some(t) = self.tables.lock().expect("calibrator cache poisoned").get(&key) {
            return Ok(Arc::clone(t));
        }
        let table = Arc::new(self.load_or_sweep(key)?);
        self.tables.lock().expect("calibrator cache poisoned").insert(key, Arc::clone(&table));
        Ok(table)
    }

    fn load_or_sweep(&self, key: TableKey) -> Result<MicroCanonicalTable> {
        let path = self.cache_path(key);
        if let Some(p) = path.as_ref().filter(|p| p.exists()) {
            match read_container(&mut BufReader::new(File::open(p)?)) {
                Ok(Container::Micro(t))
                    if t.side() == key.side && t.trials() == key.trials && t.seed() == key.seed =>
                {
                    debug!("loaded cached sweep {}", p.display());
                    return Ok(t);
                }
                _ => warn!("ignoring unusable cache file {}", p.display()),
            }
        }
        info!("sweeping N={} with {} trials (seed {})", key.side, key.trials, key.seed);
        let lattice = TriangularLattice::new(key.side)?;
        let table = sweep(&lattice, key.trials, key.seed, self.options)?;
        if let Some(p) = path {
            std::fs::create_dir_all(p.parent().expect("cache file has a parent"))?;
            let tmp = p.with_extension("tmp");
            let mut w = BufWriter::new(File::create(&tmp)?);
            table.write_container(&mut w)?;
            w.flush()?;
            std::fs::rename(&tmp, &p)?;
            info!("cached sweep at {}", p.display());
        }
        Ok(table)
    }

    pub fn distribution(&self, side: usize, p: f64, trials: u64, seed: u64) -> Result<MaxClusterDistribution> {
        self.table(side, trials, seed)?.canonical(p)
    }

    pub fn calibrate(&self, side: usize, p_e: f64, alpha: f64, trials: u64, seed: u64) -> Result<Calibration> {
        if !(p_e > 0.0 && p_e < 1.0) {
            return Err(Error::Parameter(format!("p_E must lie in (0, 1), got {p_e}")));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
        }
        let cv = critical_value(&self.distribution(side, p_e, trials, seed)?, alpha)?;
        Ok(Calibration {
            c0: cv.c0,
            saturated: cv.saturated,
            row: CriticalValueRow { n: side, p_e, alpha, c0: cv.c0, trials, seed },
        })
    }
}

fn global_calibrator() -> &'static Calibrator {
    static CAL: OnceLock<Calibrator> = OnceLock::new();
    CAL.get_or_init(|| Calibrator::from_env(SweepOptions::default()))
}

/// Critical value from the process-wide calibrator.
pub fn calibrate(side: usize, p_e: f64, alpha: f64, trials: u64, seed: u64) -> Result<Calibration> {
    global_calibrator().calibrate(side, p_e, alpha, trials, seed)
}

/// `K0 ln N`.
pub fn phi_log(side: f64, k0: f64) -> Result<f64> {
    if !(side >= 2.0) || !(k0 > 0.0) {
        return Err(Error::Parameter(format!("need N >= 2 and K0 > 0, got N = {side}, K0 = {k0}")));
    }
    Ok(k0 * side.ln())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaussianRates {
    pub p_e: f64,
    pub p_b: f64,
    /// False once `tau >= a`, where the signal sites stop being supercritical.
    pub p_b_supercritical: bool,
}

/// Black probabilities off (`p_E`) and on (`p_B`) a constant signal `a`
/// under standard normal noise of scale `sigma`.
pub fn gaussian_rates(tau: f64, sigma: f64, a: f64) -> Result<GaussianRates> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    if !(tau >= 0.0) {
        return Err(Error::Parameter(format!("tau must be nonnegative, got {tau}")));
    }
    let n = Normal::standard();
    Ok(GaussianRates {
        p_e: n.sf(tau / sigma),
        p_b: n.cdf((a - tau) / sigma),
        p_b_supercritical: tau < a,
    })
}

/// Where `p_E(tau)` comes from during a threshold scan.
#[derive(Debug, Clone)]
pub enum PeSource {
    /// `p_E(tau) = P(sigma * eps > tau)` under a declared noise model.
    Model { model: NoiseModel, sigma: f64 },
    /// One user-supplied estimate per scheduled threshold.
    PerTau(Vec<f64>),
}

pub struct ScanContext<'a> {
    pub calibrator: &'a Calibrator,
    pub alpha: f64,
    pub trials: u64,
    pub seed: u64,
    pub pe_source: PeSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanStop {
    Rejected,
    BelowMinimalThreshold,
    ScheduleExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanReport {
    pub steps: Vec<DetectionReport>,
    pub decision: Decision,
    pub stopped_by: ScanStop,
    /// Number of tests performed; the overall level is not corrected for it.
    pub tests_performed: usize,
}

/// Tests at decreasing thresholds until one rejects or the next threshold
/// falls below `tau0`. Each threshold is calibrated to its own `p_E`.
pub fn threshold_scan(
    field: &GrayField,
    lattice: &TriangularLattice,
    schedule: &[f64],
    tau0: f64,
    ctx: &ScanContext<'_>,
) -> Result<ScanReport> {
    if schedule.is_empty() {
        return Err(Error::Parameter("threshold schedule is empty".into()));
    }
    if schedule.windows(2).any(|w| !(w[0] > w[1])) {
        return Err(Error::Parameter("threshold schedule must be strictly decreasing".into()));
    }
    if !(tau0 >= 0.0) {
        return Err(Error::Parameter(format!("tau0 must be nonnegative, got {tau0}")));
    }
    if let PeSource::PerTau(v) = &ctx.pe_source {
        if v.len() != schedule.len() {
            return Err(Error::Parameter(format!(
                "{} p_E estimates for {} thresholds",
                v.len(),
                schedule.len()
            )));
        }
    }
    let mut steps = Vec::new();
    for (i, &tau) in schedule.iter().enumerate() {
        if tau < tau0 {
            return Ok(ScanReport {
                tests_performed: steps.len(),
                steps,
                decision: Decision::RetainH0,
                stopped_by: ScanStop::BelowMinimalThreshold,
            });
        }
        let p_e = match &ctx.pe_source {
            PeSource::Model { model, sigma } => {
                if !(*sigma > 0.0) {
                    return Err(Error::Parameter("sigma must be positive".into()));
                }
                model.survival(tau / sigma)
            }
            PeSource::PerTau(v) => v[i],
        };
        let null = ctx.calibrator.distribution(lattice.side(), p_e, ctx.trials, ctx.seed)?;
        let cv = critical_value(&null, ctx.alpha)?;
        let report = run_test(field, tau, cv.c0 as usize, lattice)?.with_null(&null);
        let rejected = report.decision.is_reject();
        steps.push(report);
        if rejected {
            return Ok(ScanReport {
                tests_performed: steps.len(),
                steps,
                decision: Decision::RejectH0,
                stopped_by: ScanStop::Rejected,
            });
        }
    }
    Ok(ScanReport {
        tests_performed: steps.len(),
        steps,
        decision: Decision::RetainH0,
        stopped_by: ScanStop::ScheduleExhausted,
    })
}

/// A full synthetic pipeline: signal, noise, threshold and critical value.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub lattice: TriangularLattice,
    pub signal: SignalSpec,
    pub model: NoiseModel,
    pub tau: f64,
    pub c0: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorKind {
    /// Rejections under a null scenario.
    TypeI,
    /// Retentions under an alternative.
    TypeII,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ErrorEstimate {
    pub kind: ErrorKind,
    pub rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub errors: u64,
    pub trials: u64,
}

impl ErrorEstimate {
    /// Binomial standard error of `rate`.
    pub fn standard_error(&self) -> f64 {
        (self.rate * (1.0 - self.rate) / self.trials as f64).sqrt()
    }
}

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson_interval(k: u64, n: u64, z: f64) -> (f64, f64) {
    let nf = n as f64;
    let phat = k as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (phat + z2 / (2.0 * nf)) / denom;
    let half = z * (phat * (1.0 - phat) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    ((center - half).max(0.0), (center + half).min(1.0))
}

/// Monte Carlo error rate of the full pipeline with a 95% Wilson interval.
/// Trial `i` synthesizes its field from the key `(seed, i)`.
pub fn estimate_errors(scenario: &Scenario, trials: u64, seed: u64) -> Result<ErrorEstimate> {
    if trials < 100 {
        return Err(Error::Parameter(format!("need at least 100 trials, got {trials}")));
    }
    if scenario.c0 == 0 {
        return Err(Error::Parameter("c0 must be at least 1".into()));
    }
    let kind = if scenario.signal.is_null() { ErrorKind::TypeI } else { ErrorKind::TypeII };
    // validate once so per-trial failures cannot happen
    synthesize(&scenario.signal, &scenario.model, &scenario.lattice, seed)?;
    let errors = (0..trials)
        .into_par_iter()
        .map(|i| {
            let field = synthesize(&scenario.signal, &scenario.model, &scenario.lattice, rng::derive(seed, i))
                .expect("scenario validated");
            let report = run_test(&field, scenario.tau, scenario.c0, &scenario.lattice).expect("scenario validated");
            let wrong = match kind {
                ErrorKind::TypeI => report.decision.is_reject(),
                ErrorKind::TypeII => !report.decision.is_reject(),
            };
            u64::from(wrong)
        })
        .sum::<u64>();
    let (ci_low, ci_high) = wilson_interval(errors, trials, 1.959_963_984_540_054);
    Ok(ErrorEstimate { kind, rate: errors as f64 / trials as f64, ci_low, ci_high, errors, trials })
}

/// Constants of the exponential error bounds. None of them is pinned by
/// theory; they are either supplied or fitted from simulated tails.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBoundParams {
    pub k0: f64,
    pub c: f64,
    /// Subcritical cluster-size decay rate at `p_E`.
    pub lambda: f64,
    /// Crossing decay rate at `p_B`.
    pub d: f64,
    pub c1: f64,
    pub c2: f64,
    /// Side of the guaranteed signal square; `phi(N)` when unset.
    pub rho: Option<f64>,
}

impl RateBoundParams {
    /// Derives constants from a fitted decay rate `lambda`: `C lambda = margin`,
    /// `K0 = 2C` and `C2 = lambda - 1/C`.
    pub fn from_decay_rate(lambda: f64, margin: f64, d: f64, c1: f64) -> Result<Self> {
        if !(lambda > 0.0) || !(margin > 1.0) {
            return Err(Error::Domain(format!("need lambda > 0 and margin > 1, got {lambda}, {margin}")));
        }
        let c = margin / lambda;
        Ok(Self { k0: 2.0 * c, c, lambda, d, c1, c2: lambda - 1.0 / c, rho: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RateBounds {
    pub phi: f64,
    pub rho: f64,
    /// `exp(-C2 phi(N))`.
    pub alpha_bound: f64,
    /// `exp(-C1 rho(N))`.
    pub beta_bound: f64,
    /// `N^(-2(C lambda - 1))`.
    pub expo_finite_leading: f64,
}

pub fn rate_bounds(params: &RateBoundParams, side: f64) -> Result<RateBounds> {
    let p = params;
    if !(p.c * p.lambda > 1.0) {
        return Err(Error::Domain(format!("C * lambda = {} must exceed 1", p.c * p.lambda)));
    }
    let phi = phi_log(side, p.k0)?;
    let rho = p.rho.unwrap_or(phi);
    if !(side > phi) || !(side > rho) {
        return Err(Error::Domain(format!("need N > phi(N) = {phi} and N > rho(N) = {rho}")));
    }
    Ok(RateBounds {
        phi,
        rho,
        alpha_bound: (-p.c2 * phi).exp(),
        beta_bound: (-p.c1 * rho).exp(),
        expo_finite_leading: false_alarm_leading(side, p.c, p.lambda),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SiteMask;

    #[test]
    fn report_json_field_names() {
        let l = TriangularLattice::new(4).unwrap();
        let r = run_test(&GrayField::constant(4, 1.0), 0.5, 3, &l).unwrap();
        let v = serde_json::to_value(&r).unwrap();
        for key in ["decision", "T", "c0", "tau", "N", "pE", "early_stopped", "p_value"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        assert_eq!(v["decision"], "reject-H0");
    }

    #[test]
    fn trivial_decisions() {
        let l = TriangularLattice::new(12).unwrap();
        let spec = SignalSpec { support: SiteMask::full(12), amplitude: 1.0, noise_scale: 1e-12 };
        let f = synthesize(&spec, &NoiseModel::Gaussian, &l, 0).unwrap();
        assert!(run_test(&f, 0.5, 144, &l).unwrap().decision.is_reject());
        let flat = GrayField::constant(12, 0.5);
        let r = run_test(&flat, 0.5, 1, &l).unwrap();
        assert_eq!(r.decision, Decision::RetainH0);
        assert_eq!(r.statistic, 0);
        assert!(run_test(&flat, 0.5, 0, &l).is_err());
        assert!(run_test(&GrayField::constant(5, 0.0), 0.5, 1, &l).is_err());
    }

    #[test]
    fn phi_values() {
        assert!((phi_log(std::f64::consts::E, 5.0).unwrap() - 5.0).abs() < 1e-12);
        assert!(phi_log(64.0, 3.0).unwrap() < phi_log(128.0, 3.0).unwrap());
        assert!(phi_log(1.0, 3.0).is_err());
    }

    #[test]
    fn gaussian_rate_cases() {
        let r = gaussian_rates(0.0, 1.7, 1.0).unwrap();
        assert_eq!(r.p_e, 0.5);
        let r = gaussian_rates(0.35, 0.9, 0.7).unwrap();
        assert!((r.p_b - (1.0 - r.p_e)).abs() < 1e-15);
        let r = gaussian_rates(0.02, 1.0, 0.05).unwrap();
        assert!(r.p_b < 0.52 && r.p_e > 0.48 && r.p_b_supercritical);
        assert!(!gaussian_rates(0.06, 1.0, 0.05).unwrap().p_b_supercritical);
    }

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(5, 100, 1.96);
        assert!(lo < 0.05 && hi > 0.05);
        let (lo, hi) = wilson_interval(0, 1000, 1.96);
        assert_eq!(lo, 0.0);
        assert!(hi < 0.004);
    }

    #[test]
    fn rate_bound_plug_in() {
        let p = RateBoundParams { k0: 2.0, c: 1.0, lambda: 2.0, d: 1.0, c1: 0.5, c2: 1.0, rho: None };
        let b = rate_bounds(&p, 100.0).unwrap();
        assert!((b.expo_finite_leading - 1e-4).abs() < 1e-18);
        let b2 = rate_bounds(&p, 200.0).unwrap();
        assert!(b2.alpha_bound < b.alpha_bound && b2.beta_bound < b.beta_bound);
        let bad = RateBoundParams { lambda: 1.0, ..p };
        assert!(matches!(rate_bounds(&bad, 100.0), Err(Error::Domain(_))));
        let fitted = RateBoundParams::from_decay_rate(0.05, 1.25, 0.1, 0.1).unwrap();
        assert!((fitted.c * fitted.lambda - 1.25).abs() < 1e-12);
    }
}
