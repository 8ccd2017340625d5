//! Reference implementations shared by the integration tests. They rebuild
//! the lattice from coordinates alone so they share no code with the crate.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn coords(n: usize, idx: usize) -> (f64, f64) {
    let (r, c) = (idx / n, idx % n);
    (c as f64 + 0.5 * (r % 2) as f64, r as f64 * 3f64.sqrt() / 2.0)
}

/// Pairs at Euclidean distance 1, found by brute force over all pairs.
pub fn unit_distance_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for i in 0..n * n {
        for j in i + 1..n * n {
            let (a, b) = (coords(n, i), coords(n, j));
            let d = ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
            if (d - 1.0).abs() < 1e-9 {
                out.push((i, j));
            }
        }
    }
    out
}

/// Sizes of the connected components of `bits == color`, sorted, by
/// breadth-first flood fill over the brute-force adjacency.
pub fn flood_fill_sizes(n: usize, bits: &[bool], color: bool) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n * n];
    for (i, j) in unit_distance_pairs(n) {
        adj[i].push(j);
        adj[j].push(i);
    }
    flood_fill_with(&adj, bits, color)
}

pub fn flood_fill_with(adj: &[Vec<usize>], bits: &[bool], color: bool) -> Vec<usize> {
    let mut seen = vec![false; bits.len()];
    let mut sizes = Vec::new();
    for s in 0..bits.len() {
        if seen[s] || bits[s] != color {
            continue;
        }
        seen[s] = true;
        let mut queue = std::collections::VecDeque::from([s]);
        let mut size = 0;
        while let Some(u) = queue.pop_front() {
            size += 1;
            for &v in &adj[u] {
                if !seen[v] && bits[v] == color {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        sizes.push(size);
    }
    sizes.sort_unstable();
    sizes
}

pub fn adjacency(n: usize) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); n * n];
    for (i, j) in unit_distance_pairs(n) {
        adj[i].push(j);
        adj[j].push(i);
    }
    adj
}

pub fn random_bits(n: usize, p: f64, seed: u64) -> Vec<bool> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n * n).map(|_| rng.random::<f64>() < p).collect()
}

pub fn binomial(n: u64, k: u64) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Whether `|(1+x)^n - 1 - nx| <= n(n-1)/2 x² (1+|x|)^(n-2)` holds exactly
/// for the binary value of `x`. Both sides are scaled by `d^n`, where
/// `x = a / d`, so only integer arithmetic is needed.
pub fn remainder_estimate_holds_exactly(x: f64, n: u32) -> bool {
    use num_bigint::BigInt;
    use num_traits::{Pow, Signed};
    let q = num_rational::BigRational::from_float(x).unwrap();
    let (a, d) = (q.numer().clone(), q.denom().clone());
    let nn = BigInt::from(n);
    let lhs: BigInt = (Pow::pow(&(&d + &a), n) - Pow::pow(&d, n) - &nn * &a * Pow::pow(&d, n - 1)).abs();
    let rhs: BigInt = if n >= 2 {
        &nn * BigInt::from(n - 1) * &a * &a * Pow::pow(&(&d + a.abs()), n - 2)
    } else {
        BigInt::from(0)
    };
    // rhs carries the factor n(n-1) without the 1/2
    BigInt::from(2) * lhs <= rhs
}
