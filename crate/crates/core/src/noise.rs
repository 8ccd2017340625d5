//! Signal-plus-noise model, noise validation, thresholding and occupation
//! probabilities.

use std::f64::consts::{LN_2, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::lattice::{SiteMask, TriangularLattice};
use crate::rng;

const SQRT_3: f64 = 1.732_050_807_568_877_2;
const MOMENT_TOL: f64 = 1e-6;
const SYMMETRY_TOL: f64 = 1e-9;

/// Number of equi-probable knots in a tabulated noise model.
pub const TABLE_KNOTS: usize = 1024;

/// Piecewise-linear quantile function on `TABLE_KNOTS` knots placed at
/// probabilities `(i + 1/2) / TABLE_KNOTS`, mirrored about its median.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileTable {
    knots: Vec<f64>,
}

impl QuantileTable {
    /// Builds a table from exactly `TABLE_KNOTS` quantile values.
    pub fn from_knots(knots: Vec<f64>) -> Result<Self> {
        if knots.len() != TABLE_KNOTS {
            return Err(Error::Parameter(format!(
                "quantile table needs {TABLE_KNOTS} knots, got {}",
                knots.len()
            )));
        }
        if knots.iter().any(|k| !k.is_finite()) {
            return Err(Error::Parameter("quantile table contains non-finite values".into()));
        }
        let mut knots = knots;
        knots.sort_by(f64::total_cmp);
        let median = 0.5 * (knots[TABLE_KNOTS / 2 - 1] + knots[TABLE_KNOTS / 2]);
        let mirrored = (0..TABLE_KNOTS)
            .map(|i| median + 0.5 * (knots[i] - knots[TABLE_KNOTS - 1 - i]))
            .collect();
        Ok(Self { knots: mirrored })
    }

    /// Builds a table from the empirical quantiles of a sample.
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.len() < 2 {
            return Err(Error::Parameter("sample needs at least two values".into()));
        }
        let mut s = sample.to_vec();
        s.sort_by(f64::total_cmp);
        let last = (s.len() - 1) as f64;
        let knots = (0..TABLE_KNOTS)
            .map(|i| {
                let h = (i as f64 + 0.5) / TABLE_KNOTS as f64 * last;
                let j = h.floor() as usize;
                let frac = h - j as f64;
                if j + 1 < s.len() {
                    s[j] + frac * (s[j + 1] - s[j])
                } else {
                    s[j]
                }
            })
            .collect();
        Self::from_knots(knots)
    }

    /// Tabulates the quantile function of another model.
    pub fn from_model(model: &NoiseModel) -> Result<Self> {
        Self::from_knots(
            (0..TABLE_KNOTS)
                .map(|i| model.quantile((i as f64 + 0.5) / TABLE_KNOTS as f64))
                .collect(),
        )
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// Affine image `scale * X + shift`.
    pub fn affine(&self, scale: f64, shift: f64) -> Result<Self> {
        if !(scale > 0.0) {
            return Err(Error::Parameter("scale must be positive".into()));
        }
        Self::from_knots(self.knots.iter().map(|k| scale * k + shift).collect())
    }

    /// Rescaled to mean 0 and variance 1.
    pub fn standardized(&self) -> Result<Self> {
        let mean = self.mean();
        let sd = (self.second_moment() - mean * mean).sqrt();
        if !(sd > 0.0) {
            return Err(Error::Parameter("table has zero spread".into()));
        }
        Self::from_knots(self.knots.iter().map(|k| (k - mean) / sd).collect())
    }

    fn quantile(&self, u: f64) -> f64 {
        let k = &self.knots;
        let h = u * TABLE_KNOTS as f64 - 0.5;
        if h <= 0.0 {
            return k[0];
        }
        if h >= (TABLE_KNOTS - 1) as f64 {
            return k[TABLE_KNOTS - 1];
        }
        let j = h.floor() as usize;
        k[j] + (h - j as f64) * (k[j + 1] - k[j])
    }

    fn level(j: usize, frac: f64) -> f64 {
        (j as f64 + 0.5 + frac) / TABLE_KNOTS as f64
    }

    fn cdf(&self, x: f64) -> f64 {
        let k = &self.knots;
        let count = k.partition_point(|&v| v <= x);
        if count == 0 {
            return 0.0;
        }
        let j = count - 1;
        if j == TABLE_KNOTS - 1 {
            return 1.0;
        }
        Self::level(j, (x - k[j]) / (k[j + 1] - k[j]))
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let k = &self.knots;
        let count = k.partition_point(|&v| v < x);
        if count == 0 {
            return 0.0;
        }
        let j = count - 1;
        if j == TABLE_KNOTS - 1 {
            return 1.0;
        }
        Self::level(j, (x - k[j]) / (k[j + 1] - k[j]))
    }

    fn density(&self, x: f64) -> f64 {
        let k = &self.knots;
        let slope = |j: usize| {
            let w = k[j + 1] - k[j];
            if w > 0.0 {
                1.0 / (TABLE_KNOTS as f64 * w)
            } else {
                f64::INFINITY
            }
        };
        let right = k.partition_point(|&v| v <= x);
        let left = k.partition_point(|&v| v < x);
        let r = if right == 0 || right == TABLE_KNOTS { 0.0 } else { slope(right - 1) };
        let l = if left == 0 || left == TABLE_KNOTS { 0.0 } else { slope(left - 1) };
        r.min(l)
    }

    fn mean(&self) -> f64 {
        let k = &self.knots;
        let n = TABLE_KNOTS as f64;
        let ends = 0.5 * (k[0] + k[TABLE_KNOTS - 1]);
        let body: f64 = k.windows(2).map(|w| 0.5 * (w[0] + w[1])).sum();
        (ends + body) / n
    }

    fn second_moment(&self) -> f64 {
        let k = &self.knots;
        let n = TABLE_KNOTS as f64;
        let ends = 0.5 * (k[0] * k[0] + k[TABLE_KNOTS - 1] * k[TABLE_KNOTS - 1]);
        let body: f64 = k.windows(2).map(|w| (w[0] * w[0] + w[0] * w[1] + w[1] * w[1]) / 3.0).sum();
        (ends + body) / n
    }
}

impl TryFrom<Vec<f64>> for QuantileTable {
    type Error = Error;

    /// Accepts an already mirrored table as is (re-mirroring would perturb
    /// the last bits); anything else is sorted and mirrored.
    fn try_from(v: Vec<f64>) -> Result<Self> {
        let n = v.len();
        let mirrored = n == TABLE_KNOTS
            && v.iter().all(|k| k.is_finite())
            && v.windows(2).all(|w| w[0] <= w[1])
            && {
                let median = 0.5 * (v[n / 2 - 1] + v[n / 2]);
                let scale = v[n - 1] - v[0];
                (0..n / 2).all(|i| ((v[i] - median) + (v[n - 1 - i] - median)).abs() <= 1e-12 * scale.max(1.0))
            };
        if mirrored {
            Ok(Self { knots: v })
        } else {
            Self::from_knots(v)
        }
    }
}

impl From<QuantileTable> for Vec<f64> {
    fn from(t: QuantileTable) -> Self {
        t.knots
    }
}

/// Distribution of a single noise variable.
///
/// Built-in families are normalised to mean 0 and variance 1.
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseModel {
    Gaussian,
    /// Laplace with scale `1/sqrt(2)`.
    Laplace,
    /// Uniform on `[-sqrt(3), sqrt(3)]`.
    Uniform,
    /// `±1` with probability 1/2 each.
    TwoPoint,
    /// `Exp(1) - 1`; kept as an asymmetric fixture.
    ShiftedExponential,
    Table(QuantileTable),
}

impl NoiseModel {
    pub fn family(&self) -> &'static str {
        match self {
            Self::Gaussian => "gaussian",
            Self::Laplace => "laplace",
            Self::Uniform => "uniform",
            Self::TwoPoint => "two_point",
            Self::ShiftedExponential => "shifted_exponential",
            Self::Table(_) => "quantile_table",
        }
    }

    /// `F(x) = P(eps <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian => std_normal().cdf(x),
            Self::Laplace => {
                let z = x * SQRT_2;
                if z < 0.0 {
                    0.5 * z.exp()
                } else {
                    1.0 - 0.5 * (-z).exp()
                }
            }
            Self::Uniform => ((x + SQRT_3) / (2.0 * SQRT_3)).clamp(0.0, 1.0),
            Self::TwoPoint => {
                if x < -1.0 {
                    0.0
                } else if x < 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            Self::ShiftedExponential => {
                if x < -1.0 {
                    0.0
                } else {
                    -(-(x + 1.0)).exp_m1()
                }
            }
            Self::Table(t) => t.cdf(x),
        }
    }

    /// `F(x-)`, the left limit of the distribution function.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match self {
            Self::TwoPoint => {
                if x <= -1.0 {
                    0.0
                } else if x <= 1.0 {
                    0.5
                } else {
                    1.0
                }
            }
            Self::Table(t) => t.cdf_left(x),
            _ => self.cdf(x),
        }
    }

    /// `P(eps > x)`.
    pub fn survival(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian => std_normal().sf(x),
            Self::Laplace if x > 0.0 => 0.5 * (-x * SQRT_2).exp(),
            Self::ShiftedExponential if x >= -1.0 => (-(x + 1.0)).exp(),
            _ => 1.0 - self.cdf(x),
        }
    }

    /// Generalised inverse `inf { x : F(x) >= u }` for `u` in `(0, 1)`.
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Self::Gaussian => std_normal().inverse_cdf(u),
            Self::Laplace => {
                if u < 0.5 {
                    (2.0 * u).ln() / SQRT_2
                } else {
                    -(2.0 * (1.0 - u)).ln() / SQRT_2
                }
            }
            Self::Uniform => (2.0 * u - 1.0) * SQRT_3,
            Self::TwoPoint => {
                if u <= 0.5 {
                    -1.0
                } else {
                    1.0
                }
            }
            Self::ShiftedExponential => -(-u).ln_1p() - 1.0,
            Self::Table(t) => t.quantile(u),
        }
    }

    /// `sup { x : F(x) <= u }`; differs from [`quantile`](Self::quantile)
    /// only where `F` is flat at level `u`.
    pub fn upper_quantile(&self, u: f64) -> f64 {
        match self {
            Self::TwoPoint => {
                if u < 0.5 {
                    -1.0
                } else if u < 1.0 {
                    1.0
                } else {
                    f64::INFINITY
                }
            }
            _ => self.quantile(u),
        }
    }

    /// Density where it exists; `0` on atoms and outside the support.
    pub fn density(&self, x: f64) -> f64 {
        match self {
            Self::Gaussian => (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt(),
            Self::Laplace => (-(x.abs()) * SQRT_2).exp() / SQRT_2,
            Self::Uniform => {
                if x.abs() <= SQRT_3 {
                    1.0 / (2.0 * SQRT_3)
                } else {
                    0.0
                }
            }
            Self::TwoPoint => 0.0,
            Self::ShiftedExponential => {
                if x >= -1.0 {
                    (-(x + 1.0)).exp()
                } else {
                    0.0
                }
            }
            Self::Table(t) => t.density(x),
        }
    }

    pub fn mean(&self) -> f64 {
        match self {
            Self::Table(t) => t.mean(),
            _ => 0.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match self {
            Self::Table(t) => {
                let m = t.mean();
                t.second_moment() - m * m
            }
            _ => 1.0,
        }
    }

    /// Median as the lower critical point `inf { x : F(x) >= 1/2 }`.
    pub fn median(&self) -> f64 {
        match self {
            Self::ShiftedExponential => LN_2 - 1.0,
            _ => self.quantile(0.5),
        }
    }

    /// Reports every noise condition without failing.
    pub fn inspect(&self) -> NoiseValidation {
        let m_plus = self.median();
        let m_minus = self.upper_quantile(0.5);
        let m = m_plus;
        let jump = self.cdf(m) - self.cdf_left(m);
        let density = self.density(m);

        let mut grid: Vec<f64> = (-800..=800).map(|i| f64::from(i) * 0.01).collect();
        if let Self::Table(t) = self {
            grid.extend(t.knots.iter().flat_map(|&k| [k, -k]));
        }
        let asymmetry = grid
            .iter()
            .map(|&x| (self.cdf(-x) - (1.0 - self.cdf_left(x))).abs())
            .fold(0.0, f64::max);

        let mean = self.mean();
        let variance = self.variance();
        let mut report = NoiseValidation {
            family: self.family().to_string(),
            symmetric: asymmetry <= SYMMETRY_TOL,
            zero_mean: mean.abs() <= MOMENT_TOL,
            unit_variance: (variance - 1.0).abs() <= MOMENT_TOL,
            nondegenerate: (m_plus - m_minus).abs() <= 1e-12 && (jump > 0.0 || density > 0.0),
            median: m,
            m_plus,
            m_minus,
            jump_at_median: jump,
            density_at_median: density,
            mean,
            variance,
            max_asymmetry: asymmetry,
            violations: Vec::new(),
        };
        if !report.symmetric {
            report.violations.push(format!("symmetry (max |F(-x) - 1 + F(x-)| = {asymmetry:.3e})"));
        }
        if !report.zero_mean {
            report.violations.push(format!("zero mean (mean = {mean})"));
        }
        if !report.unit_variance {
            report.violations.push(format!("unit variance (variance = {variance})"));
        }
        if !report.nondegenerate {
            report.violations.push(if (m_plus - m_minus).abs() > 1e-12 {
                format!("non-degeneracy (m+ = {m_plus} differs from m- = {m_minus})")
            } else {
                "non-degeneracy (no jump and zero density at the median)".to_string()
            });
        }
        report
    }

    pub fn to_descriptor(&self) -> NoiseDescriptor {
        NoiseDescriptor {
            family: self.family().to_string(),
            params: serde_json::Map::new(),
            quantile_table: match self {
                Self::Table(t) => Some(t.clone()),
                _ => None,
            },
        }
    }

    pub fn from_descriptor(d: &NoiseDescriptor) -> Result<Self> {
        let model = match d.family.as_str() {
            "gaussian" | "normal" => Self::Gaussian,
            "laplace" => Self::Laplace,
            "uniform" => Self::Uniform,
            "two_point" => Self::TwoPoint,
            "shifted_exponential" => Self::ShiftedExponential,
            "quantile_table" => Self::Table(d.quantile_table.clone().ok_or_else(|| {
                Error::Parameter("quantile_table family needs a quantile_table".into())
            })?),
            other => return Err(Error::Parameter(format!("unknown noise family {other:?}"))),
        };
        Ok(model)
    }

    /// Parses either a bare family name or a JSON descriptor.
    pub fn parse(s: &str) -> Result<Self> {
        let trimmed = s.trim();
        if trimmed.starts_with('{') {
            Self::from_descriptor(&serde_json::from_str(trimmed)?)
        } else {
            Self::from_descriptor(&NoiseDescriptor {
                family: trimmed.to_string(),
                params: serde_json::Map::new(),
                quantile_table: None,
            })
        }
    }
}

fn std_normal() -> Normal {
    Normal::standard()
}

/// JSON form of a noise model: `{family, params, quantile_table?}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseDescriptor {
    pub family: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quantile_table: Option<QuantileTable>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NoiseValidation {
    pub family: String,
    pub symmetric: bool,
    pub zero_mean: bool,
    pub unit_variance: bool,
    pub nondegenerate: bool,
    pub median: f64,
    pub m_plus: f64,
    pub m_minus: f64,
    pub jump_at_median: f64,
    pub density_at_median: f64,
    pub mean: f64,
    pub variance: f64,
    pub max_asymmetry: f64,
    pub violations: Vec<String>,
}

impl NoiseValidation {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks symmetry, unit variance, zero mean and non-degeneracy at the
/// median; the error names every violated condition.
pub fn validate_noise(model: &NoiseModel) -> Result<NoiseValidation> {
    let report = model.inspect();
    if report.is_valid() {
        Ok(report)
    } else {
        Err(Error::NoiseModel(format!("{}: {}", report.family, report.violations.join("; "))))
    }
}

/// Observed gray values `Y(s)`, one per site.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayField {
    side: usize,
    values: Vec<f64>,
}

impl GrayField {
    pub fn new(side: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != side * side {
            return Err(Error::DimensionMismatch { expected: side * side, actual: values.len() });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("gray field contains non-finite values".into()));
        }
        Ok(Self { side, values })
    }

    pub fn constant(side: usize, value: f64) -> Self {
        Self { side, values: vec![value; side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Sites with `Y(s) > tau` become black; ties stay white.
    pub fn threshold(&self, tau: f64) -> BinaryField {
        BinaryField { side: self.side, bits: self.values.iter().map(|&y| y > tau).collect() }
    }
}

/// Thresholded configuration; `true` is black (occupied).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryField {
    side: usize,
    bits: Vec<bool>,
}

impl BinaryField {
    pub fn new(side: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != side * side {
            return Err(Error::DimensionMismatch { expected: side * side, actual: bits.len() });
        }
        Ok(Self { side, bits })
    }

    pub fn filled(side: usize, black: bool) -> Self {
        Self { side, bits: vec![black; side * side] }
    }

    /// Independent Bernoulli(p) sites keyed by `seed`.
    pub fn bernoulli(side: usize, p: f64, seed: u64) -> Self {
        let bits = (0..side * side).map(|i| rng::uniform_open(seed, i as u64) < p).collect();
        Self { side, bits }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, idx: usize) -> bool {
        self.bits[idx]
    }

    pub fn set(&mut self, idx: usize, black: bool) {
        self.bits[idx] = black;
    }

    pub fn black_count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn complement(&self) -> Self {
        Self { side: self.side, bits: self.bits.iter().map(|b| !b).collect() }
    }

    /// Gray view with black = 1 and white = 0.
    pub fn to_gray(&self) -> GrayField {
        GrayField {
            side: self.side,
            values: self.bits.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

pub fn threshold(field: &GrayField, tau: f64) -> BinaryField {
    field.threshold(tau)
}

/// Signal `a * 1_support` observed through noise of scale `sigma`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalSpec {
    pub support: SiteMask,
    pub amplitude: f64,
    pub noise_scale: f64,
}

impl SignalSpec {
    pub fn null(side: usize, noise_scale: f64) -> Self {
        Self { support: SiteMask::empty(side), amplitude: 0.0, noise_scale }
    }

    /// True when the observation is pure noise.
    pub fn is_null(&self) -> bool {
        self.amplitude == 0.0 || self.support.is_empty()
    }
}

/// `Y(s) = a * 1_support(s) + sigma * eps(s)` with `eps(s)` drawn from
/// `model` by a stream keyed on `(seed, s)`.
pub fn synthesize(
    spec: &SignalSpec,
    model: &NoiseModel,
    lattice: &TriangularLattice,
    seed: u64,
) -> Result<GrayField> {
    if !(spec.noise_scale > 0.0) {
        return Err(Error::Parameter(format!("noise scale must be positive, got {}", spec.noise_scale)));
    }
    if !(spec.amplitude >= 0.0) {
        return Err(Error::Parameter(format!("amplitude must be nonnegative, got {}", spec.amplitude)));
    }
    if spec.support.side() != lattice.side() {
        return Err(Error::DimensionMismatch { expected: lattice.side(), actual: spec.support.side() });
    }
    let sites = lattice.site_count();
    let draw = |i: usize| {
        let eps = model.quantile(rng::uniform_open(seed, i as u64));
        let signal = if spec.support.contains(i) { spec.amplitude } else { 0.0 };
        signal + spec.noise_scale * eps
    };
    // Output is independent of scheduling since each site's draw is keyed.
    let values: Vec<f64> = if sites >= 1 << 16 {
        (0..sites).into_par_iter().map(draw).collect()
    } else {
        (0..sites).map(draw).collect()
    };
    Ok(GrayField { side: lattice.side(), values })
}

/// `(p0, p1)`: black probability on and off the support.
pub fn occupancy_probabilities(
    model: &NoiseModel,
    tau: f64,
    sigma: f64,
    amplitude: f64,
) -> Result<(f64, f64)> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    validate_noise(model)?;
    Ok((model.survival((tau - amplitude) / sigma), model.survival(tau / sigma)))
}

/// `tau = sigma * m + 1/2`, which puts the on-support black probability above
/// 1/2 and the off-support one below it for unit amplitude.
pub fn choose_threshold(model: &NoiseModel, sigma: f64) -> Result<f64> {
    if !(sigma > 0.0) {
        return Err(Error::Parameter(format!("sigma must be positive, got {sigma}")));
    }
    let report = model.inspect();
    if !report.nondegenerate {
        return Err(Error::NoiseModel(format!(
            "{}: cannot choose a threshold, {}",
            report.family,
            report.violations.join("; ")
        )));
    }
    Ok(sigma * report.median + 0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_families_validate() {
        for m in [NoiseModel::Gaussian, NoiseModel::Laplace, NoiseModel::Uniform] {
            let r = validate_noise(&m).unwrap();
            assert!(r.median.abs() < 1e-12, "{}", r.family);
        }
        let g = validate_noise(&NoiseModel::Gaussian).unwrap();
        assert!((g.density_at_median - 1.0 / (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn two_point_is_degenerate() {
        let r = NoiseModel::TwoPoint.inspect();
        assert!(r.symmetric && r.unit_variance);
        assert!(!r.nondegenerate);
        assert_eq!((r.m_plus, r.m_minus), (-1.0, 1.0));
        let err = validate_noise(&NoiseModel::TwoPoint).unwrap_err().to_string();
        assert!(err.contains("non-degeneracy"), "{err}");
        assert!(choose_threshold(&NoiseModel::TwoPoint, 1.0).is_err());
    }

    #[test]
    fn shifted_exponential_is_asymmetric() {
        let err = validate_noise(&NoiseModel::ShiftedExponential).unwrap_err().to_string();
        assert!(err.contains("symmetry"), "{err}");
    }

    #[test]
    fn threshold_choice() {
        assert_eq!(choose_threshold(&NoiseModel::Gaussian, 2.0).unwrap(), 0.5);
        let shifted = QuantileTable::from_model(&NoiseModel::Gaussian).unwrap().affine(1.0, 0.3).unwrap();
        let tau = choose_threshold(&NoiseModel::Table(shifted), 1.0).unwrap();
        assert!((tau - 0.8).abs() < 1e-12);
        assert!(choose_threshold(&NoiseModel::Gaussian, 0.0).is_err());
    }

    #[test]
    fn gaussian_occupancy() {
        let (p0, p1) = occupancy_probabilities(&NoiseModel::Gaussian, 0.5, 1.0, 1.0).unwrap();
        // Phi(0.5) to 10 digits
        assert!((p0 - 0.691_462_461_3).abs() < 1e-9);
        assert!((p1 - 0.308_537_538_7).abs() < 1e-9);
        let (a, b) = occupancy_probabilities(&NoiseModel::Laplace, 0.7, 1.3, 0.0).unwrap();
        assert_eq!(a, b);
        assert!(occupancy_probabilities(&NoiseModel::TwoPoint, 0.5, 1.0, 1.0).is_err());
        assert!(occupancy_probabilities(&NoiseModel::Gaussian, 0.5, -1.0, 1.0).is_err());
    }

    #[test]
    fn straddle_and_duality() {
        for m in [NoiseModel::Gaussian, NoiseModel::Laplace, NoiseModel::Uniform] {
            for sigma in [0.1, 0.5, 1.0, 3.0, 10.0] {
                let tau = choose_threshold(&m, sigma).unwrap();
                let (p0, p1) = occupancy_probabilities(&m, tau, sigma, 1.0).unwrap();
                assert!(p0 > 0.5 && p1 < 0.5, "{} sigma={sigma}", m.family());
                assert!((p0 - (1.0 - p1)).abs() < 1e-12);
                // white probabilities straddle in the opposite order
                assert!(1.0 - p0 < 0.5 && 1.0 - p1 > 0.5);
            }
        }
    }

    #[test]
    fn table_is_mirrored_and_consistent() {
        let sample: Vec<f64> = (0..5000).map(|i| ((i as f64) * 0.37).sin().powi(3) + 0.1).collect();
        let t = QuantileTable::from_sample(&sample).unwrap().standardized().unwrap();
        let m = NoiseModel::Table(t);
        let r = m.inspect();
        assert!(r.symmetric, "{:?}", r.violations);
        assert!(r.zero_mean && r.unit_variance, "{:?}", r.violations);
        for u in [0.01, 0.2, 0.5, 0.77, 0.99] {
            let x = m.quantile(u);
            assert!((m.cdf(x) - u).abs() < 1e-9);
        }
    }

    #[test]
    fn descriptor_round_trip() {
        let t = QuantileTable::from_model(&NoiseModel::Laplace).unwrap();
        for m in [NoiseModel::Gaussian, NoiseModel::Uniform, NoiseModel::Table(t)] {
            let json = serde_json::to_string(&m.to_descriptor()).unwrap();
            assert_eq!(NoiseModel::parse(&json).unwrap(), m);
        }
        assert_eq!(NoiseModel::parse("laplace").unwrap(), NoiseModel::Laplace);
        assert!(NoiseModel::parse("cauchy").is_err());
    }

    #[test]
    fn strict_threshold() {
        let f = GrayField::constant(4, 0.0);
        assert_eq!(f.threshold(0.5).black_count(), 0);
        let mut v = vec![0.0; 16];
        v[5] = 0.6;
        let f = GrayField::new(4, v).unwrap();
        let b = f.threshold(0.5);
        assert!(b.get(5) && b.black_count() == 1);
        assert_eq!(b.to_gray().threshold(0.5), b);
        assert_eq!(GrayField::constant(4, 0.5).threshold(0.5).black_count(), 0);
    }

    #[test]
    fn synthesis_is_deterministic() {
        let l = TriangularLattice::new(16).unwrap();
        let spec = SignalSpec { support: l.centered_square(6).unwrap(), amplitude: 1.0, noise_scale: 0.7 };
        let a = synthesize(&spec, &NoiseModel::Laplace, &l, 9).unwrap();
        let b = synthesize(&spec, &NoiseModel::Laplace, &l, 9).unwrap();
        let c = synthesize(&spec, &NoiseModel::Laplace, &l, 10).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
        let bad = SignalSpec { noise_scale: 0.0, ..spec };
        assert!(synthesize(&bad, &NoiseModel::Gaussian, &l, 1).is_err());
    }

    #[test]
    fn noiseless_limit_recovers_support() {
        let l = TriangularLattice::new(20).unwrap();
        let support = l.centered_square(8).unwrap();
        let spec = SignalSpec { support: support.clone(), amplitude: 1.0, noise_scale: 1e-12 };
        let f = synthesize(&spec, &NoiseModel::Gaussian, &l, 3).unwrap();
        for i in 0..l.site_count() {
            let want = if support.contains(i) { 1.0 } else { 0.0 };
            assert!((f.values()[i] - want).abs() < 1e-9);
        }
    }
}
