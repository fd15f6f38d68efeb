//! Fixed-width POI coverage sets.
//!
//! A [`CoverageSet`] has one bit per point of interest. Bit `i` is set when
//! POI `i` is seen. Every set that takes part in one scene has the same width,
//! so binary operations assert matching widths in debug builds.

use smallvec::SmallVec;
use std::fmt;

type Block = u64;
const BITS: usize = Block::BITS as usize;

/// Bit-vector over POI indices.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct CoverageSet {
    width: usize,
    blocks: SmallVec<[Block; 4]>,
}

impl CoverageSet {
    /// Empty set able to hold `width` POIs.
    pub fn new(width: usize) -> Self {
        CoverageSet {
            width,
            blocks: SmallVec::from_elem(0, width.div_ceil(BITS)),
        }
    }

    /// Set with every POI present.
    pub fn full(width: usize) -> Self {
        let mut s = Self::new(width);
        for i in 0..width {
            s.insert(i);
        }
        s
    }

    pub fn from_indices(width: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut s = Self::new(width);
        for i in indices {
            s.insert(i);
        }
        s
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn insert(&mut self, i: usize) {
        assert!(i < self.width, "POI index {i} outside width {}", self.width);
        self.blocks[i / BITS] |= 1 << (i % BITS);
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.width && self.blocks[i / BITS] & (1 << (i % BITS)) != 0
    }

    /// Number of POIs in the set.
    #[inline]
    pub fn count(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    #[inline]
    pub fn union_with(&mut self, other: &CoverageSet) {
        debug_assert_eq!(self.width, other.width);
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a |= *b;
        }
    }

    pub fn union(&self, other: &CoverageSet) -> CoverageSet {
        let mut out = self.clone();
        out.union_with(other);
        out
    }

    /// `|self ∪ other|` without allocating.
    #[inline]
    pub fn union_count(&self, other: &CoverageSet) -> usize {
        debug_assert_eq!(self.width, other.width);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .map(|(a, b)| (a | b).count_ones() as usize)
            .sum()
    }

    /// True iff every POI of `other` is also in `self`.
    #[inline]
    pub fn is_superset(&self, other: &CoverageSet) -> bool {
        debug_assert_eq!(self.width, other.width);
        self.blocks
            .iter()
            .zip(&other.blocks)
            .all(|(a, b)| b & !a == 0)
    }

    #[inline]
    pub fn is_subset(&self, other: &CoverageSet) -> bool {
        other.is_superset(self)
    }

    /// True iff `other` has at least one POI not in `self`.
    #[inline]
    pub fn gains_from(&self, other: &CoverageSet) -> bool {
        !self.is_superset(other)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.width).filter(move |&i| self.contains(i))
    }
}

impl fmt::Debug for CoverageSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.iter()).finish()
    }
}
