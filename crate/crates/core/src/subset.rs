//! Variable indices and subset bitmasks.
//!
//! Subsets of the variable set `{1, .., n}` are the universal currency of the
//! library: failed sets, minimum-scopes, path sets, scan domains. They are
//! stored as `u32` bitmasks with bit `k` standing for variable `k + 1`; the
//! variable count is capped at [`MAX_VARIABLES`] because the subset DP and
//! rate tables are exponential in `n`.

use thiserror::Error;

/// Hard cap on the number of variables.
pub const MAX_VARIABLES: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SubsetError {
    #[error("variable index {0} out of range 1..={1}")]
    IndexOutOfRange(usize, usize),
    #[error("variable count {0} exceeds the supported maximum {MAX_VARIABLES}")]
    TooManyVariables(usize),
    #[error("mask {0:#x} has bits outside 1..={1}")]
    MaskOutOfRange(u32, usize),
}

/// 1-based index of a variable, `1..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct VariableIndex(u8);

impl VariableIndex {
    pub fn new(value: usize, n: usize) -> Result<Self, SubsetError> {
        if n > MAX_VARIABLES {
            return Err(SubsetError::TooManyVariables(n));
        }
        if value == 0 || value > n {
            return Err(SubsetError::IndexOutOfRange(value, n));
        }
        Ok(Self(value as u8))
    }

    /// The 1-based value.
    #[inline]
    pub fn get(self) -> usize {
        self.0 as usize
    }

    /// The 0-based bit position.
    #[inline]
    pub fn pos(self) -> usize {
        self.0 as usize - 1
    }

    /// From a 0-based bit position; caller guarantees `pos < n <= 24`.
    #[inline]
    pub fn from_pos(pos: usize) -> Self {
        debug_assert!(pos < MAX_VARIABLES);
        Self(pos as u8 + 1)
    }
}

impl std::fmt::Display for VariableIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A subset of `{1, .., n}` as an `n`-bit mask.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SubsetMask {
    bits: u32,
}

impl SubsetMask {
    pub const EMPTY: SubsetMask = SubsetMask { bits: 0 };

    pub fn new(bits: u32, n: usize) -> Result<Self, SubsetError> {
        if n > MAX_VARIABLES {
            return Err(SubsetError::TooManyVariables(n));
        }
        if n < 32 && bits >> n != 0 {
            return Err(SubsetError::MaskOutOfRange(bits, n));
        }
        Ok(Self { bits })
    }

    /// The full set `{1, .., n}`.
    pub fn full(n: usize) -> Self {
        debug_assert!(n <= MAX_VARIABLES);
        Self { bits: if n == 0 { 0 } else { (1u32 << n) - 1 } }
    }

    /// Build from 1-based indices.
    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I, n: usize) -> Result<Self, SubsetError> {
        let mut bits = 0u32;
        for i in indices {
            let v = VariableIndex::new(i, n)?;
            bits |= 1 << v.pos();
        }
        Self::new(bits, n)
    }

    #[inline]
    pub fn bits(self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn len(self) -> usize {
        self.bits.count_ones() as usize
    }

    #[inline]
    pub fn is_empty(self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(self, v: VariableIndex) -> bool {
        self.bits >> v.pos() & 1 == 1
    }

    #[inline]
    pub fn insert(self, v: VariableIndex) -> Self {
        Self { bits: self.bits | 1 << v.pos() }
    }

    #[inline]
    pub fn remove(self, v: VariableIndex) -> Self {
        Self { bits: self.bits & !(1 << v.pos()) }
    }

    #[inline]
    pub fn union(self, other: Self) -> Self {
        Self { bits: self.bits | other.bits }
    }

    #[inline]
    pub fn intersection(self, other: Self) -> Self {
        Self { bits: self.bits & other.bits }
    }

    #[inline]
    pub fn is_subset_of(self, other: Self) -> bool {
        self.bits & !other.bits == 0
    }

    /// Complement within `{1, .., n}`.
    #[inline]
    pub fn complement(self, n: usize) -> Self {
        Self { bits: Self::full(n).bits & !self.bits }
    }

    /// Members in increasing index order.
    pub fn members(self) -> impl Iterator<Item = VariableIndex> {
        let mut bits = self.bits;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let pos = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(VariableIndex::from_pos(pos))
            }
        })
    }

    /// 1-based member indices, ascending.
    pub fn indices(self) -> Vec<usize> {
        self.members().map(|v| v.get()).collect()
    }

    /// All subsets of `self` (including empty and self), in ascending mask order.
    pub fn subsets(self) -> Vec<SubsetMask> {
        let mut out = Vec::with_capacity(1 << self.len());
        let sup = self.bits;
        let mut s = 0u32;
        loop {
            out.push(SubsetMask { bits: s });
            if s == sup {
                break;
            }
            s = (s.wrapping_sub(sup)) & sup;
        }
        out.sort_unstable();
        out
    }

    /// Rank of `self` within the subsets of `superset`: bit-compressed index.
    pub fn rank_within(self, superset: SubsetMask) -> usize {
        debug_assert!(self.is_subset_of(superset));
        let mut rank = 0usize;
        let mut bit = 0usize;
        let mut sup = superset.bits;
        while sup != 0 {
            let pos = sup.trailing_zeros();
            if self.bits >> pos & 1 == 1 {
                rank |= 1 << bit;
            }
            bit += 1;
            sup &= sup - 1;
        }
        rank
    }
}

impl std::fmt::Display for SubsetMask {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        for (k, v) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, "}}")
    }
}
