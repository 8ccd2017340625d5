//! Union-find over lattice sites for incremental site percolation.

use crate::lattice::TriangularLattice;

const EMPTY: u32 = u32::MAX;

/// Disjoint sets of occupied sites with union by size and path halving.
/// Tracks the size of the largest cluster as sites are added.
#[derive(Debug, Clone)]
pub struct PercolationUnionFind {
    parent: Vec<u32>,
    size: Vec<u32>,
    largest: u32,
}

impl PercolationUnionFind {
    pub fn new(sites: usize) -> Self {
        Self { parent: vec![EMPTY; sites], size: vec![0; sites], largest: 0 }
    }

    pub fn clear(&mut self) {
        self.parent.fill(EMPTY);
        self.largest = 0;
    }

    pub fn largest(&self) -> u32 {
        self.largest
    }

    #[inline]
    pub fn is_occupied(&self, s: usize) -> bool {
        self.parent[s] != EMPTY
    }

    #[inline]
    pub fn find(&mut self, mut s: u32) -> u32 {
        loop {
            let p = self.parent[s as usize];
            if p == s {
                return s;
            }
            let gp = self.parent[p as usize];
            self.parent[s as usize] = gp;
            s = gp;
        }
    }

    pub fn cluster_size(&mut self, s: usize) -> u32 {
        if !self.is_occupied(s) {
            return 0;
        }
        let r = self.find(s as u32);
        self.size[r as usize]
    }

    /// Occupies `s` (a no-op if already occupied), merges it with its occupied
    /// neighbours and returns the new largest cluster size.
    #[inline]
    pub fn occupy(&mut self, s: usize, lattice: &TriangularLattice) -> u32 {
        if self.is_occupied(s) {
            return self.largest;
        }
        let mut root = s as u32;
        self.parent[s] = root;
        self.size[s] = 1;
        for &t in lattice.neighbors_of(s).iter() {
            if self.parent[t] == EMPTY {
                continue;
            }
            let other = self.find(t as u32);
            if other == root {
                continue;
            }
            let (big, small) = if self.size[other as usize] > self.size[root as usize] {
                (other, root)
            } else {
                (root, other)
            };
            self.parent[small as usize] = big;
            self.size[big as usize] += self.size[small as usize];
            root = big;
        }
        self.largest = self.largest.max(self.size[root as usize]);
        self.largest
    }

    /// Copies the state of `other` without reallocating.
    pub fn copy_from(&mut self, other: &Self) {
        self.parent.copy_from_slice(&other.parent);
        self.size.copy_from_slice(&other.size);
        self.largest = other.largest;
    }
}
