//! Connected clusters of equally coloured sites.
//!
//! All traversals are iterative depth-first searches over sites in index
//! order, so every call is linear in the number of sites and never recurses.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::TriangularLattice;
use crate::noise::BinaryField;
use crate::pgm::PgmImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    Black,
    White,
}

impl Color {
    #[inline]
    fn matches(self, bit: bool) -> bool {
        match self {
            Color::Black => bit,
            Color::White => !bit,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    side: usize,
    /// 0 for sites of the other colour, otherwise `1 + cluster index`.
    labels: Vec<u32>,
    sizes: Vec<usize>,
    max_size: usize,
    truncated: bool,
}

impl ClusterLabeling {
    pub fn side(&self) -> usize {
        self.side
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn max_size(&self) -> usize {
        self.max_size
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// One CSV row per lattice row.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.labels.len() * 3);
        for row in self.labels.chunks(self.side) {
            let line: Vec<String> = row.iter().map(u32::to_string).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Labels as gray values; labels above 65535 wrap into `1..=65535`.
    pub fn to_pgm(&self) -> PgmImage {
        let wrap = |l: u32| if l == 0 { 0 } else { ((l - 1) % 65_535 + 1) as u16 };
        let pixels: Vec<u16> = self.labels.iter().map(|&l| wrap(l)).collect();
        let max_val = pixels.iter().copied().max().unwrap_or(0).max(1);
        PgmImage::new(self.side, self.side, max_val, pixels).expect("label raster is consistent")
    }
}

fn check_side(field: &BinaryField, lattice: &TriangularLattice) -> Result<()> {
    if field.side() != lattice.side() {
        return Err(Error::DimensionMismatch { expected: lattice.side(), actual: field.side() });
    }
    Ok(())
}

pub fn label_clusters(
    field: &BinaryField,
    lattice: &TriangularLattice,
    color: Color,
) -> Result<ClusterLabeling> {
    check_side(field, lattice)?;
    let bits = field.bits();
    let mut labels = vec![0u32; bits.len()];
    let mut sizes = Vec::new();
    let mut stack: Vec<usize> = Vec::new();
    for start in 0..bits.len() {
        if labels[start] != 0 || !color.matches(bits[start]) {
            continue;
        }
        let label = sizes.len() as u32 + 1;
        labels[start] = label;
        stack.push(start);
        let mut size = 0;
        while let Some(s) = stack.pop() {
            size += 1;
            for &t in lattice.neighbors_of(s).iter() {
                if labels[t] == 0 && color.matches(bits[t]) {
                    labels[t] = label;
                    stack.push(t);
                }
            }
        }
        sizes.push(size);
    }
    let max_size = sizes.iter().copied().max().unwrap_or(0);
    Ok(ClusterLabeling { side: field.side(), labels, sizes, max_size, truncated: false })
}

pub fn max_cluster_size(field: &BinaryField, lattice: &TriangularLattice) -> Result<usize> {
    Ok(search(field, lattice, usize::MAX)?.largest)
}

/// Outcome of a bounded cluster search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClusterSearch {
    pub found: bool,
    /// Size reached by the qualifying cluster when the search stopped, or
    /// the exact maximum cluster size when nothing qualified.
    pub witness_size: usize,
}

/// Depth-first search that stops as soon as one black cluster has reached
/// `bound` sites.
pub fn find_cluster_at_least(
    field: &BinaryField,
    lattice: &TriangularLattice,
    bound: usize,
) -> Result<ClusterSearch> {
    if bound == 0 {
        return Err(Error::Parameter("cluster bound must be at least 1".into()));
    }
    let r = search(field, lattice, bound)?;
    Ok(ClusterSearch { found: r.largest >= bound, witness_size: r.largest })
}

struct SearchResult {
    largest: usize,
}

fn search(field: &BinaryField, lattice: &TriangularLattice, bound: usize) -> Result<SearchResult> {
    check_side(field, lattice)?;
    let bits = field.bits();
    let mut seen = vec![false; bits.len()];
    let mut stack: Vec<usize> = Vec::new();
    let mut largest = 0;
    for start in 0..bits.len() {
        if seen[start] || !bits[start] {
            continue;
        }
        seen[start] = true;
        stack.push(start);
        let mut size = 0;
        while let Some(s) = stack.pop() {
            size += 1;
            if size >= bound {
                return Ok(SearchResult { largest: size });
            }
            for &t in lattice.neighbors_of(s).iter() {
                if !seen[t] && bits[t] {
                    seen[t] = true;
                    stack.push(t);
                }
            }
        }
        largest = largest.max(size);
    }
    Ok(SearchResult { largest })
}

/// Whether a black path joins column 0 (x in `[0, 1/2]`) to the last column
/// (x in `[N - 1, N - 1/2]`).
pub fn has_left_right_crossing(field: &BinaryField, lattice: &TriangularLattice) -> Result<bool> {
    check_side(field, lattice)?;
    let n = lattice.side();
    let bits = field.bits();
    let mut seen = vec![false; bits.len()];
    let mut stack: Vec<usize> = (0..n).map(|r| r * n).filter(|&i| bits[i]).collect();
    for &s in &stack {
        seen[s] = true;
    }
    while let Some(s) = stack.pop() {
        if s % n == n - 1 {
            return Ok(true);
        }
        for &t in lattice.neighbors_of(s).iter() {
            if !seen[t] && bits[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    Ok(false)
}
