//! Truncated binomial weights.

/// Weights below this fraction of the peak weight are dropped.
pub const TRUNCATION: f64 = 1e-15;

/// Nonzero `Binomial(n, p)` weights as a contiguous run starting at
/// `offset`. Weights smaller than `TRUNCATION` times the mode's weight are
/// omitted.
#[derive(Debug, Clone, PartialEq)]
pub struct BinomialWeights {
    pub offset: usize,
    pub weights: Vec<f64>,
}

impl BinomialWeights {
    pub fn new(n: usize, p: f64) -> Self {
        if p <= 0.0 {
            return Self { offset: 0, weights: vec![1.0] };
        }
        if p >= 1.0 {
            return Self { offset: n, weights: vec![1.0] };
        }
        let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
        // Relative weights by the ratio recurrence outward from the mode; for
        // large n this is far more accurate than differencing ln_gamma values.
        let odds = p / (1.0 - p);
        let mut up = Vec::new();
        let mut w = 1.0;
        for k in mode..n {
            w *= (n - k) as f64 / (k + 1) as f64 * odds;
            if w < TRUNCATION {
                break;
            }
            up.push(w);
        }
        let mut down = Vec::new();
        let mut w = 1.0;
        for k in (1..=mode).rev() {
            w *= k as f64 / (n - k + 1) as f64 / odds;
            if w < TRUNCATION {
                break;
            }
            down.push(w);
        }
        let lo = mode - down.len();
        let mut weights: Vec<f64> = down.into_iter().rev().collect();
        weights.push(1.0);
        weights.extend(up);
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Self { offset: lo, weights }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.weights.iter().enumerate().map(move |(i, &w)| (self.offset + i, w))
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }
}
