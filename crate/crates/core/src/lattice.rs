//! The finite triangular lattice stored as an offset grid.
//!
//! Sites are laid out row-major in `side` rows of `side` sites each. Site
//! `(row, col)` sits at `x = col + (row odd) / 2`, `y = row * sqrt(3) / 2`, so
//! every pair of neighbours is at Euclidean distance exactly one.

use std::ops::Deref;

use crate::error::{Error, Result};

pub const ROW_HEIGHT: f64 = 0.866_025_403_784_438_6; // sqrt(3) / 2

/// Index of a site, `row * side + col`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SiteId(pub usize);

impl SiteId {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Up to six neighbours held inline.
#[derive(Debug, Clone, Copy)]
pub struct Neighbors {
    ids: [usize; 6],
    len: usize,
}

impl Neighbors {
    #[inline]
    fn push(&mut self, id: usize) {
        self.ids[self.len] = id;
        self.len += 1;
    }
}

impl Deref for Neighbors {
    type Target = [usize];

    #[inline]
    fn deref(&self) -> &[usize] {
        &self.ids[..self.len]
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TriangularLattice {
    side: usize,
}

impl TriangularLattice {
    pub fn new(side: usize) -> Result<Self> {
        if side == 0 {
            return Err(Error::InvalidDimension("lattice side must be at least 1".into()));
        }
        // Site indices are stored as u32 in the simulation tables.
        if side > 46_340 {
            return Err(Error::InvalidDimension(format!("lattice side {side} is too large")));
        }
        Ok(Self { side })
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn site_count(&self) -> usize {
        self.side * self.side
    }

    pub fn site(&self, row: usize, col: usize) -> Result<SiteId> {
        if row >= self.side || col >= self.side {
            return Err(Error::Geometry(format!(
                "({row}, {col}) lies outside a lattice of side {}",
                self.side
            )));
        }
        Ok(SiteId(row * self.side + col))
    }

    pub fn row_col(&self, s: SiteId) -> Result<(usize, usize)> {
        self.check(s)?;
        Ok((s.0 / self.side, s.0 % self.side))
    }

    fn check(&self, s: SiteId) -> Result<()> {
        if s.0 >= self.site_count() {
            return Err(Error::SiteOutOfRange { index: s.0, sites: self.site_count() });
        }
        Ok(())
    }

    /// Neighbours of a raw index; the index must be in range.
    #[inline]
    pub fn neighbors_of(&self, idx: usize) -> Neighbors {
        let n = self.side;
        let row = idx / n;
        let col = idx % n;
        let mut out = Neighbors { ids: [0; 6], len: 0 };
        if col > 0 {
            out.push(idx - 1);
        }
        if col + 1 < n {
            out.push(idx + 1);
        }
        // Even rows reach (r±1, c-1) and (r±1, c); odd rows (r±1, c) and (r±1, c+1).
        let (lo, hi) = if row % 2 == 0 {
            (col.checked_sub(1), Some(col))
        } else {
            (Some(col), if col + 1 < n { Some(col + 1) } else { None })
        };
        for r in [row.checked_sub(1), if row + 1 < n { Some(row + 1) } else { None }]
            .into_iter()
            .flatten()
        {
            if let Some(c) = lo {
                out.push(r * n + c);
            }
            if let Some(c) = hi {
                out.push(r * n + c);
            }
        }
        out
    }

    pub fn neighbors(&self, s: SiteId) -> Result<Vec<SiteId>> {
        self.check(s)?;
        Ok(self.neighbors_of(s.0).iter().map(|&i| SiteId(i)).collect())
    }

    #[inline]
    pub fn position_of(&self, idx: usize) -> (f64, f64) {
        let row = idx / self.side;
        let col = idx % self.side;
        let shift = if row % 2 == 1 { 0.5 } else { 0.0 };
        (col as f64 + shift, row as f64 * ROW_HEIGHT)
    }

    pub fn site_position(&self, s: SiteId) -> Result<(f64, f64)> {
        self.check(s)?;
        Ok(self.position_of(s.0))
    }

    /// Number of unordered neighbour pairs.
    pub fn bond_count(&self) -> usize {
        (0..self.site_count())
            .map(|i| self.neighbors_of(i).iter().filter(|&&j| j > i).count())
            .sum()
    }

    /// Sites whose position, rescaled by `(side + 1/2, sqrt(3)/2 * side)`,
    /// falls inside `shape`.
    pub fn rasterize_support<F>(&self, shape: F) -> SiteMask
    where
        F: Fn(f64, f64) -> bool,
    {
        let sx = self.side as f64 + 0.5;
        let sy = ROW_HEIGHT * self.side as f64;
        let mut mask = SiteMask::empty(self.side);
        for i in 0..self.site_count() {
            let (x, y) = self.position_of(i);
            if shape(x / sx, y / sy) {
                mask.insert(i);
            }
        }
        mask
    }

    /// The translate `origin + T^(rho)`: a `rho`-row block whose geometry
    /// matches a lattice of side `rho` placed with its corner at `origin`.
    pub fn embed_square(&self, origin: SiteId, rho: usize) -> Result<SiteMask> {
        let (r0, c0) = self.row_col(origin)?;
        if rho == 0 {
            return Err(Error::Geometry("square side must be positive".into()));
        }
        let mut mask = SiteMask::empty(self.side);
        for i in 0..rho {
            // From an odd origin row, the even rows of the block shift right by one.
            let extra = usize::from(r0 % 2 == 1 && i % 2 == 1);
            for j in 0..rho {
                let (r, c) = (r0 + i, c0 + j + extra);
                if r >= self.side || c >= self.side {
                    return Err(Error::Geometry(format!(
                        "square of side {rho} at ({r0}, {c0}) exceeds lattice of side {}",
                        self.side
                    )));
                }
                mask.insert(r * self.side + c);
            }
        }
        Ok(mask)
    }

    /// A square of side `rho` placed as close to the centre as the grid allows.
    pub fn centered_square(&self, rho: usize) -> Result<SiteMask> {
        if rho == 0 || rho > self.side {
            return Err(Error::Geometry(format!(
                "square side {rho} does not fit a lattice of side {}",
                self.side
            )));
        }
        let r0 = (self.side - rho) / 2;
        let mut c0 = (self.side - rho) / 2;
        if r0 % 2 == 1 && rho > 1 && c0 + rho >= self.side {
            c0 = c0.saturating_sub(1);
        }
        self.embed_square(SiteId(r0 * self.side + c0), rho)
    }
}

/// Membership bitset over the sites of a lattice.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SiteMask {
    side: usize,
    words: Vec<u64>,
}

impl SiteMask {
    pub fn empty(side: usize) -> Self {
        Self { side, words: vec![0; (side * side).div_ceil(64)] }
    }

    pub fn full(side: usize) -> Self {
        let mut m = Self::empty(side);
        for i in 0..side * side {
            m.insert(i);
        }
        m
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn contains(&self, idx: usize) -> bool {
        self.words[idx >> 6] >> (idx & 63) & 1 == 1
    }

    #[inline]
    pub fn insert(&mut self, idx: usize) {
        self.words[idx >> 6] |= 1 << (idx & 63);
    }

    pub fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn is_subset(&self, other: &SiteMask) -> bool {
        self.side == other.side && self.words.iter().zip(&other.words).all(|(a, b)| a & !b == 0)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.side * self.side).filter(move |&i| self.contains(i))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_side_is_rejected() {
        assert!(matches!(TriangularLattice::new(0), Err(Error::InvalidDimension(_))));
    }

    #[test]
    fn degenerate_and_reference_sizes() {
        let l = TriangularLattice::new(1).unwrap();
        assert_eq!(l.site_count(), 1);
        assert_eq!(l.bond_count(), 0);
        assert_eq!(TriangularLattice::new(55).unwrap().site_count(), 3025);
    }

    #[test]
    fn center_of_three_has_six_neighbours() {
        let l = TriangularLattice::new(3).unwrap();
        let center = l.site(1, 1).unwrap();
        assert_eq!(l.neighbors(center).unwrap().len(), 6);
    }

    #[test]
    fn corners_of_two() {
        let l = TriangularLattice::new(2).unwrap();
        let deg = |r, c| l.neighbors(l.site(r, c).unwrap()).unwrap().len();
        // (0,0): right and (1,0). (0,1): left, (1,0), (1,1).
        assert_eq!(deg(0, 0), 2);
        assert_eq!(deg(0, 1), 3);
        assert_eq!(deg(1, 0), 3);
        assert_eq!(deg(1, 1), 2);
    }

    #[test]
    fn out_of_range_site() {
        let l = TriangularLattice::new(4).unwrap();
        assert!(matches!(l.neighbors(SiteId(16)), Err(Error::SiteOutOfRange { .. })));
        assert!(l.site_position(SiteId(100)).is_err());
    }

    #[test]
    fn positions() {
        let l = TriangularLattice::new(55).unwrap();
        assert_eq!(l.site_position(l.site(0, 0).unwrap()).unwrap(), (0.0, 0.0));
        let (x, y) = l.site_position(l.site(1, 0).unwrap()).unwrap();
        assert!((x - 0.5).abs() < 1e-15 && (y - 3f64.sqrt() / 2.0).abs() < 1e-15);
        let max_x = (0..l.site_count()).map(|i| l.position_of(i).0).fold(0.0, f64::max);
        assert!(max_x <= 55.5);
        let max_y = (0..l.site_count()).map(|i| l.position_of(i).1).fold(0.0, f64::max);
        assert!(max_y <= ROW_HEIGHT * 55.0);
    }

    #[test]
    fn embed_square_cases() {
        let l = TriangularLattice::new(55).unwrap();
        assert_eq!(l.embed_square(SiteId(7), 1).unwrap().len(), 1);
        assert_eq!(l.embed_square(SiteId(0), 55).unwrap(), SiteMask::full(55));
        let sq = l.embed_square(l.site(20, 20).unwrap(), 15).unwrap();
        assert_eq!(sq.len(), 225);
        assert!(l.embed_square(l.site(50, 50).unwrap(), 10).is_err());
        assert_eq!(l.centered_square(15).unwrap().len(), 225);
    }

    #[test]
    fn odd_origin_square_is_a_translate() {
        let l = TriangularLattice::new(12).unwrap();
        let small = TriangularLattice::new(4).unwrap();
        let origin = l.site(3, 2).unwrap();
        let (ox, oy) = l.site_position(origin).unwrap();
        let sq = l.embed_square(origin, 4).unwrap();
        let mut want: Vec<(i64, i64)> = (0..16)
            .map(|i| {
                let (x, y) = small.position_of(i);
                (((x + ox) * 2.0).round() as i64, ((y + oy) / ROW_HEIGHT).round() as i64)
            })
            .collect();
        let mut got: Vec<(i64, i64)> = sq
            .iter()
            .map(|i| {
                let (x, y) = l.position_of(i);
                ((x * 2.0).round() as i64, (y / ROW_HEIGHT).round() as i64)
            })
            .collect();
        want.sort();
        got.sort();
        assert_eq!(want, got);
    }

    #[test]
    fn rasterize_trivial_shapes() {
        let l = TriangularLattice::new(20).unwrap();
        assert!(l.rasterize_support(|_, _| false).is_empty());
        let full = l.rasterize_support(|x, y| (0.0..=1.0).contains(&x) && (0.0..=1.0).contains(&y));
        assert_eq!(full.len(), 400);
    }

    #[test]
    fn rasterized_square_contains_lattice_square() {
        let l = TriangularLattice::new(55).unwrap();
        let (a, lo) = (0.3, 0.35);
        let mask = l.rasterize_support(|x, y| {
            (lo..=lo + a).contains(&x) && (lo..=lo + a).contains(&y)
        });
        let found = (0..l.site_count()).any(|o| {
            l.embed_square(SiteId(o), 16).map(|sq| sq.is_subset(&mask)).unwrap_or(false)
        });
        assert!(found);
        // and no larger square than ceil(0.3 * 55) + 1 fits
        let too_big = (0..l.site_count()).any(|o| {
            l.embed_square(SiteId(o), 19).map(|sq| sq.is_subset(&mask)).unwrap_or(false)
        });
        assert!(!too_big);
    }
}
