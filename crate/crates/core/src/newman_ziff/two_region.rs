//! Sweeps for a signal supported on part of the lattice.
//!
//! Sites inside and outside the support are occupied with different
//! probabilities, so a single insertion order no longer covers the ensemble.
//! Instead every trial draws independent orders for the two regions and, for
//! each inner count `n_in`, continues the sweep through the outer region from
//! the state with the first `n_in` inner sites occupied. Only the declared
//! thresholds are tracked.

use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{effective_jobs, partition, BinomialWeights, SweepOptions};
use crate::error::{Error, Result};
use crate::lattice::{SiteMask, TriangularLattice};
use crate::rng;
use crate::union_find::PercolationUnionFind;

/// Entry `(k, n_in, n_out)` counts trials whose largest cluster is at least
/// `thresholds[k]` once `n_in` inner and `n_out` outer sites are occupied.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoRegionTable {
    side: usize,
    inner_size: usize,
    outer_size: usize,
    thresholds: Vec<u32>,
    trials: u64,
    seed: u64,
    exceed: Vec<u32>,
}

impl TwoRegionTable {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn inner_size(&self) -> usize {
        self.inner_size
    }

    pub fn outer_size(&self) -> usize {
        self.outer_size
    }

    pub fn thresholds(&self) -> &[u32] {
        &self.thresholds
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn index(&self, k: usize, n_in: usize, n_out: usize) -> usize {
        (k * (self.inner_size + 1) + n_in) * (self.outer_size + 1) + n_out
    }

    pub fn exceedance(&self, k: usize, n_in: usize, n_out: usize) -> u32 {
        self.exceed[self.index(k, n_in, n_out)]
    }
}

pub fn sweep_two_region(
    lattice: &TriangularLattice,
    inner: &SiteMask,
    trials: u64,
    seed: u64,
    thresholds: &[u32],
    options: SweepOptions,
) -> Result<TwoRegionTable> {
    if thresholds.is_empty() {
        return Err(Error::Parameter("threshold list is empty".into()));
    }
    if trials == 0 {
        return Err(Error::Parameter("at least one trial is required".into()));
    }
    if inner.side() != lattice.side() {
        return Err(Error::DimensionMismatch { expected: lattice.side(), actual: inner.side() });
    }
    let inner_sites: Vec<u32> = inner.iter().map(|i| i as u32).collect();
    let outer_sites: Vec<u32> =
        (0..lattice.site_count()).filter(|&i| !inner.contains(i)).map(|i| i as u32).collect();
    if inner_sites.is_empty() || outer_sites.is_empty() {
        return Err(Error::Parameter("inner region must be a nonempty proper subset".into()));
    }
    let mut thresholds = thresholds.to_vec();
    thresholds.sort_unstable();
    thresholds.dedup();

    let mut table = TwoRegionTable {
        side: lattice.side(),
        inner_size: inner_sites.len(),
        outer_size: outer_sites.len(),
        thresholds,
        trials,
        seed,
        exceed: Vec::new(),
    };
    let cells = table.thresholds.len() * (table.inner_size + 1) * (table.outer_size + 1);
    if cells.saturating_mul(4) > options.memory_budget {
        return Err(Error::Parameter(format!(
            "two-region table needs {} bytes, above the budget of {}",
            cells * 4,
            options.memory_budget
        )));
    }
    let parts = partition(trials, effective_jobs(options.jobs));
    let partials: Vec<Vec<u32>> = parts
        .into_par_iter()
        .map(|(lo, hi)| run_range(lattice, &table, &inner_sites, &outer_sites, lo, hi))
        .collect();
    let mut hits = vec![0u32; cells];
    for p in &partials {
        for (a, b) in hits.iter_mut().zip(p) {
            *a += b;
        }
    }
    // first-hit counts along n_out -> cumulative
    for row in hits.chunks_mut(table.outer_size + 1) {
        for j in 1..row.len() {
            row[j] += row[j - 1];
        }
    }
    table.exceed = hits;
    Ok(table)
}

fn run_range(
    lattice: &TriangularLattice,
    table: &TwoRegionTable,
    inner_sites: &[u32],
    outer_sites: &[u32],
    lo: u64,
    hi: u64,
) -> Vec<u32> {
    let sites = lattice.site_count();
    let thr = &table.thresholds;
    let kmax = thr.len();
    let mut hits = vec![0u32; kmax * (table.inner_size + 1) * (table.outer_size + 1)];
    let mut base = PercolationUnionFind::new(sites);
    let mut work = PercolationUnionFind::new(sites);
    let mut inner_order = inner_sites.to_vec();
    let mut outer_order = outer_sites.to_vec();
    for trial in lo..hi {
        let mut rng = rng::trial_rng(table.seed, trial);
        inner_order.copy_from_slice(inner_sites);
        outer_order.copy_from_slice(outer_sites);
        inner_order.shuffle(&mut rng);
        outer_order.shuffle(&mut rng);
        base.clear();
        for n_in in 0..=table.inner_size {
            if n_in > 0 {
                base.occupy(inner_order[n_in - 1] as usize, lattice);
            }
            work.copy_from(&base);
            let mut next = 0;
            while next < kmax && thr[next] <= work.largest() {
                hits[table.index(next, n_in, 0)] += 1;
                next += 1;
            }
            for (j, &s) in outer_order.iter().enumerate() {
                if next == kmax {
                    break;
                }
                let t = work.occupy(s as usize, lattice);
                while next < kmax && thr[next] <= t {
                    hits[table.index(next, n_in, j + 1)] += 1;
                    next += 1;
                }
            }
        }
    }
    hits
}

/// `1 - sum Binom(n_in; |Q|, p_B) Binom(n_out; N² - |Q|, p_E) P(T >= c0 | n_in, n_out)`.
pub fn type_ii_square_support(table: &TwoRegionTable, p_b: f64, p_e: f64, c0: u32) -> Result<f64> {
    for p in [p_b, p_e] {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::Parameter(format!("probability {p} outside [0, 1]")));
        }
    }
    let k = table
        .thresholds
        .iter()
        .position(|&t| t == c0)
        .ok_or(Error::ThresholdNotInGrid(c0))?;
    let w_in = BinomialWeights::new(table.inner_size, p_b);
    let w_out = BinomialWeights::new(table.outer_size, p_e);
    let mut detect = 0.0;
    for (n_in, wi) in w_in.iter() {
        let row = table.index(k, n_in, 0);
        let counts = &table.exceed[row..row + table.outer_size + 1];
        let inner_sum: f64 = w_out.iter().map(|(n_out, wo)| wo * f64::from(counts[n_out])).sum();
        detect += wi * inner_sum;
    }
    Ok((1.0 - detect / table.trials as f64).clamp(0.0, 1.0))
}
