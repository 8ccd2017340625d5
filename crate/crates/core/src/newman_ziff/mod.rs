//! Monte Carlo distribution of the largest cluster size.
//!
//! A sweep adds the sites of the lattice one at a time in a uniformly random
//! order and records the largest cluster after every insertion. One trial
//! therefore yields the statistic at every occupation count `n`
//! simultaneously (the microcanonical ensemble). Mixing over `n` with
//! `Binomial(N², p)` weights gives the distribution at site probability `p`.

mod binomial;
mod io;
mod two_region;

pub use binomial::{BinomialWeights, TRUNCATION};
pub use io::{read_container, Container, CONTAINER_MAGIC};
pub use two_region::{sweep_two_region, type_ii_square_support, TwoRegionTable};

use log::warn;
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::TriangularLattice;
use crate::rng;
use crate::union_find::PercolationUnionFind;

/// Default cap on the size of one exceedance table.
pub const DEFAULT_MEMORY_BUDGET: usize = 512 << 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SweepOptions {
    /// Number of trial partitions run in parallel; 0 uses the rayon pool size.
    pub jobs: usize,
    /// Upper bound in bytes for the exceedance table of one partition.
    pub memory_budget: usize,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { jobs: 0, memory_budget: DEFAULT_MEMORY_BUDGET }
    }
}

/// Cluster-size thresholds at which exceedance is recorded. Always starts
/// at 0 and is strictly increasing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    edges: Vec<u32>,
}

impl ThresholdGrid {
    pub fn exact(sites: usize) -> Self {
        Self { edges: (0..=sites as u32).collect() }
    }

    /// Unit spacing up to half the edge budget, geometric spacing beyond.
    pub fn bucketed(sites: usize, max_edges: usize) -> Self {
        let max_edges = max_edges.max(4);
        if max_edges > sites {
            return Self::exact(sites);
        }
        let linear = max_edges / 2;
        let mut edges: Vec<u32> = (0..linear as u32).collect();
        let remaining = (max_edges - linear) as f64;
        let start = linear.max(1) as f64;
        let ratio = (sites as f64 / start).powf(1.0 / remaining);
        let mut x = start;
        while (x as usize) < sites {
            let e = x.round() as u32;
            if e > *edges.last().unwrap() {
                edges.push(e);
            }
            x *= ratio;
        }
        if *edges.last().unwrap() != sites as u32 {
            edges.push(sites as u32);
        }
        Self { edges }
    }

    pub fn from_edges(edges: Vec<u32>) -> Result<Self> {
        if edges.first() != Some(&0) || edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Format("threshold grid must start at 0 and increase".into()));
        }
        Ok(Self { edges })
    }

    pub fn edges(&self) -> &[u32] {
        &self.edges
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn is_exact(&self) -> bool {
        self.edges.iter().enumerate().all(|(i, &e)| e as usize == i)
    }

    /// Index of the largest edge `<= t`.
    pub fn floor_index(&self, t: u32) -> usize {
        self.edges.partition_point(|&e| e <= t) - 1
    }
}

/// Per-occupation-count exceedance counts: entry `(n, k)` is the number of
/// trials whose largest cluster after `n` insertions is at least `edges[k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MicroCanonicalTable {
    side: usize,
    trials: u64,
    seed: u64,
    grid: ThresholdGrid,
    exceed: Vec<u32>,
}

impl MicroCanonicalTable {
    pub(crate) fn from_parts(
        side: usize,
        trials: u64,
        seed: u64,
        grid: ThresholdGrid,
        exceed: Vec<u32>,
    ) -> Result<Self> {
        let sites = side * side;
        if exceed.len() != (sites + 1) * grid.len() {
            return Err(Error::Format("exceedance table has the wrong shape".into()));
        }
        Ok(Self { side, trials, seed, grid, exceed })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn sites(&self) -> usize {
        self.side * self.side
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub(crate) fn raw_counts(&self) -> &[u32] {
        &self.exceed
    }

    /// Counts for occupation `n`, one per grid edge.
    pub fn row(&self, n: usize) -> &[u32] {
        let k = self.grid.len();
        &self.exceed[n * k..(n + 1) * k]
    }

    /// `P(T >= t | n)` estimated at the largest grid edge not above `t`.
    pub fn conditional_survival(&self, n: usize, t: u32) -> f64 {
        if t as usize > self.sites() {
            return 0.0;
        }
        f64::from(self.row(n)[self.grid.floor_index(t)]) / self.trials as f64
    }

    /// Mixes the rows with `Binomial(N², p)` weights.
    pub fn canonical(&self, p: f64) -> Result<MaxClusterDistribution> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("probability {p} outside [0, 1]")));
        }
        let k = self.grid.len();
        let mut acc = vec![0.0f64; k];
        for (n, w) in BinomialWeights::new(self.sites(), p).iter() {
            for (a, &c) in acc.iter_mut().zip(self.row(n)) {
                *a += w * f64::from(c);
            }
        }
        let scale = 1.0 / self.trials as f64;
        let mut survival: Vec<f64> = acc.into_iter().map(|a| (a * scale).min(1.0)).collect();
        survival[0] = 1.0;
        // clean up rounding so the survival function is nonincreasing
        for i in 1..survival.len() {
            if survival[i] > survival[i - 1] {
                survival[i] = survival[i - 1];
            }
        }
        Ok(MaxClusterDistribution {
            side: self.side,
            p,
            trials: self.trials,
            grid: self.grid.clone(),
            survival,
        })
    }

    /// Adds the counts of another table built on the same lattice and grid.
    pub fn merge(&mut self, other: &MicroCanonicalTable) -> Result<()> {
        if self.side != other.side || self.grid != other.grid {
            return Err(Error::Parameter("cannot merge tables of different shape".into()));
        }
        for (a, b) in self.exceed.iter_mut().zip(&other.exceed) {
            *a += b;
        }
        self.trials += other.trials;
        Ok(())
    }
}

/// Survival function `S(t) = P(T >= t)` of the largest cluster at one site
/// probability.
#[derive(Debug, Clone, PartialEq)]
pub struct MaxClusterDistribution {
    side: usize,
    p: f64,
    trials: u64,
    grid: ThresholdGrid,
    survival: Vec<f64>,
}

impl MaxClusterDistribution {
    pub(crate) fn from_parts(
        side: usize,
        p: f64,
        trials: u64,
        grid: ThresholdGrid,
        survival: Vec<f64>,
    ) -> Result<Self> {
        if survival.len() != grid.len() {
            return Err(Error::Format("survival vector has the wrong length".into()));
        }
        Ok(Self { side, p, trials, grid, survival })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn grid(&self) -> &ThresholdGrid {
        &self.grid
    }

    pub fn survival_values(&self) -> &[f64] {
        &self.survival
    }

    /// `S(t)`, read at the largest grid edge not above `t`; zero past `N²`.
    pub fn survival(&self, t: u32) -> f64 {
        if t as usize > self.side * self.side {
            return 0.0;
        }
        self.survival[self.grid.floor_index(t)]
    }

    /// `(t, S(t))` for every grid edge.
    pub fn points(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.grid.edges().iter().copied().zip(self.survival.iter().copied())
    }
}

/// Smallest `t` with `S(t) <= alpha`. Saturates at `N² + 1` when the
/// survival function never drops that low.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CriticalValue {
    pub c0: u32,
    pub saturated: bool,
}

pub fn critical_value(dist: &MaxClusterDistribution, alpha: f64) -> Result<CriticalValue> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Parameter(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    match dist.points().find(|&(_, s)| s <= alpha) {
        Some((t, _)) => Ok(CriticalValue { c0: t, saturated: false }),
        None => {
            warn!(
                "survival never drops to {alpha} on a lattice of side {}; c0 saturates at N^2 + 1",
                dist.side
            );
            Ok(CriticalValue { c0: (dist.side * dist.side + 1) as u32, saturated: true })
        }
    }
}

/// Type II error `1 - S_{p_B}(c0)` when every site carries the signal.
pub fn type_ii_full_support(micro: &MicroCanonicalTable, p_b: f64, c0: u32) -> Result<f64> {
    if p_b <= 0.5 {
        warn!("p_B = {p_b} is not supercritical");
    }
    let dist = micro.canonical(p_b)?;
    Ok((1.0 - dist.survival(c0)).max(0.0))
}

/// Largest-cluster trace `T(n)`, `n = 0..=N²`, of a single trial.
pub fn trial_trace(lattice: &TriangularLattice, seed: u64, trial: u64) -> Vec<u32> {
    let mut uf = PercolationUnionFind::new(lattice.site_count());
    let order = insertion_order(lattice.site_count(), seed, trial);
    let mut trace = Vec::with_capacity(order.len() + 1);
    trace.push(0);
    for &s in &order {
        trace.push(uf.occupy(s as usize, lattice));
    }
    trace
}

fn insertion_order(sites: usize, seed: u64, trial: u64) -> Vec<u32> {
    let mut order: Vec<u32> = (0..sites as u32).collect();
    order.shuffle(&mut rng::trial_rng(seed, trial));
    order
}

/// Splits `0..trials` into `parts` contiguous ranges.
pub(crate) fn partition(trials: u64, parts: usize) -> Vec<(u64, u64)> {
    let parts = (parts.max(1) as u64).min(trials.max(1));
    (0..parts).map(|i| (trials * i / parts, trials * (i + 1) / parts)).collect()
}

pub(crate) fn effective_jobs(jobs: usize) -> usize {
    if jobs == 0 {
        rayon::current_num_threads()
    } else {
        jobs
    }
}

/// Runs `trials` independent sweeps. Trial `i` uses the stream keyed by
/// `(seed, i)`, so the table depends only on `(lattice, trials, seed)` and the
/// chosen grid, never on `options.jobs`.
pub fn sweep(
    lattice: &TriangularLattice,
    trials: u64,
    seed: u64,
    options: SweepOptions,
) -> Result<MicroCanonicalTable> {
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    if trials > u64::from(u32::MAX) {
        return Err(Error::Parameter("trial count exceeds the 32-bit counters".into()));
    }
    let sites = lattice.site_count();
    let rows = sites + 1;
    let max_edges = options.memory_budget / (4 * rows);
    let grid = if max_edges > sites {
        ThresholdGrid::exact(sites)
    } else {
        let g = ThresholdGrid::bucketed(sites, max_edges);
        warn!(
            "exact table for side {} exceeds the memory budget; recording {} bucketed thresholds",
            lattice.side(),
            g.len()
        );
        g
    };
    let parts = partition(trials, effective_jobs(options.jobs));
    let mut tables: Vec<Vec<u32>> = parts
        .into_par_iter()
        .map(|(lo, hi)| sweep_range(lattice, &grid, seed, lo, hi))
        .collect();
    let mut hits = tables.swap_remove(0);
    for t in &tables {
        for (a, b) in hits.iter_mut().zip(t) {
            *a += b;
        }
    }
    drop(tables);
    // first-hit counts -> cumulative exceedance counts
    let k = grid.len();
    hits[0] = trials as u32;
    for n in 1..rows {
        let (done, rest) = hits.split_at_mut(n * k);
        let prev = &done[(n - 1) * k..];
        for (c, p) in rest[..k].iter_mut().zip(prev) {
            *c += p;
        }
    }
    MicroCanonicalTable::from_parts(lattice.side(), trials, seed, grid, hits)
}

/// Records, for each trial in `lo..hi`, the insertion count at which the
/// largest cluster first reaches each grid edge.
fn sweep_range(lattice: &TriangularLattice, grid: &ThresholdGrid, seed: u64, lo: u64, hi: u64) -> Vec<u32> {
    let sites = lattice.site_count();
    let edges = grid.edges();
    let k = edges.len();
    let mut hits = vec![0u32; (sites + 1) * k];
    let mut uf = PercolationUnionFind::new(sites);
    let mut order: Vec<u32> = (0..sites as u32).collect();
    for trial in lo..hi {
        uf.clear();
        order.iter_mut().enumerate().for_each(|(i, o)| *o = i as u32);
        order.shuffle(&mut rng::trial_rng(seed, trial));
        let mut next = 1;
        for (i, &s) in order.iter().enumerate() {
            let t = uf.occupy(s as usize, lattice);
            if next < k && edges[next] <= t {
                let row = &mut hits[(i + 1) * k..(i + 2) * k];
                while next < k && edges[next] <= t {
                    row[next] += 1;
                    next += 1;
                }
            }
        }
    }
    hits
}

/// One row of a critical value table.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalValueRow {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "p_E")]
    pub p_e: f64,
    pub alpha: f64,
    pub c0: u32,
    pub trials: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct CriticalValueTable {
    pub rows: Vec<CriticalValueRow>,
}

impl CriticalValueTable {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,p_E,alpha,c0,trials,seed\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{},{},{},{}\n", r.n, r.p_e, r.alpha, r.c0, r.trials, r.seed));
        }
        out
    }
}

/// Least-squares line through `(t, ln S(t))` over grid edges in
/// `[t_lo, t_hi]` where `S(t) > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LogSurvivalFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

pub fn fit_log_survival(dist: &MaxClusterDistribution, t_lo: u32, t_hi: u32) -> Result<LogSurvivalFit> {
    let pts: Vec<(f64, f64)> = dist
        .points()
        .filter(|&(t, s)| t >= t_lo && t <= t_hi && s > 0.0)
        .map(|(t, s)| (f64::from(t), s.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Parameter(format!(
            "need at least 3 positive survival points in [{t_lo}, {t_hi}], got {}",
            pts.len()
        )));
    }
    let (slope, intercept, r_squared) = linear_fit(&pts);
    Ok(LogSurvivalFit { slope, intercept, r_squared, points: pts.len() })
}

/// Ordinary least squares `y = a x + b`; returns `(a, b, R²)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    (slope, my - slope * mx, r2)
}
