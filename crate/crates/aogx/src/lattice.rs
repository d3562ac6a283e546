//! Subset-lattice primitives: variable-set bitmasks, dense tables indexed by
//! mask, and the forward/inverse transforms between value tables and effect
//! spectra.
//!
//! Everything downstream of an oracle works on these tables. A table holds one
//! `f64` per subset of the `n` input variables, indexed by the subset's
//! bitmask, so a game `v` and its effect spectrum `w` are both just
//! [`SubsetTable`]s related by the Möbius/zeta transform pair:
//!
//! ```text
//! w[S] = sum over S' ⊆ S of (-1)^(|S|-|S'|) v[S']      (Möbius)
//! v[S] = sum over S' ⊆ S of w[S']                      (zeta, its inverse)
//! ```
//!
//! Both run in `O(n 2^n)` with the standard in-place butterfly over one bit at
//! a time. Tables are dense and capped at `n <= 24` variables (16M scalars);
//! there is no sparse representation.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Hard cap on the number of variables a dense table can carry.
pub const MAX_VARIABLES: usize = 24;

/// Above this the dense tables are still exact but start costing real memory
/// and time; we warn once per construction.
const WARN_VARIABLES: usize = 20;

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("variable count {n} outside supported range [1, {MAX_VARIABLES}]")]
    Capacity { n: usize },
    #[error("table length {len} does not match 2^{n}")]
    Length { len: usize, n: usize },
    #[error("mask {bits:#x} out of range for {n} variables")]
    MaskRange { bits: u32, n: usize },
    #[error("non-finite entry at mask {mask:#x}")]
    NonFinite { mask: u32 },
}

fn check_n(n: usize) -> Result<(), LatticeError> {
    if n == 0 || n > MAX_VARIABLES {
        return Err(LatticeError::Capacity { n });
    }
    if n > WARN_VARIABLES {
        log::warn!("lattice with {n} variables allocates {} scalars per table", 1usize << n);
    }
    Ok(())
}

/// A subset `S ⊆ {1, …, n}` of the input variables, stored as a bitmask.
///
/// Bit `i` set means variable `i` (0-based) is a member. Carries `n` so that
/// complements and validity checks need no outside context.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct VariableSet {
    bits: u32,
    n: u8,
}

impl VariableSet {
    pub fn new(bits: u32, n: usize) -> Result<Self, LatticeError> {
        check_n(n)?;
        if u64::from(bits) >= 1u64 << n {
            return Err(LatticeError::MaskRange { bits, n });
        }
        Ok(Self { bits, n: n as u8 })
    }

    /// The empty set over `n` variables.
    pub fn empty(n: usize) -> Self {
        Self::new(0, n).expect("empty set is valid for any supported n")
    }

    /// The full set `{1, …, n}`.
    pub fn full(n: usize) -> Self {
        assert!((1..=MAX_VARIABLES).contains(&n), "n out of range");
        Self {
            bits: ((1u64 << n) - 1) as u32,
            n: n as u8,
        }
    }

    /// Singleton `{i}` (0-based).
    pub fn singleton(i: usize, n: usize) -> Self {
        assert!(i < n, "variable index out of range");
        Self::new(1 << i, n).expect("singleton within range")
    }

    /// Builds a set from 0-based member indices.
    pub fn from_members(members: &[usize], n: usize) -> Result<Self, LatticeError> {
        let mut bits = 0u32;
        for &i in members {
            if i >= n {
                return Err(LatticeError::MaskRange { bits: 1 << i, n });
            }
            bits |= 1 << i;
        }
        Self::new(bits, n)
    }

    #[inline]
    pub fn bits(&self) -> u32 {
        self.bits
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn cardinality(&self) -> u32 {
        self.bits.count_ones()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    #[inline]
    pub fn contains(&self, i: usize) -> bool {
        i < self.n() && (self.bits >> i) & 1 == 1
    }

    #[inline]
    pub fn is_subset_of(&self, other: &VariableSet) -> bool {
        self.bits & !other.bits == 0
    }

    #[inline]
    pub fn intersects(&self, other: &VariableSet) -> bool {
        self.bits & other.bits != 0
    }

    #[inline]
    pub fn union(&self, other: &VariableSet) -> VariableSet {
        debug_assert_eq!(self.n, other.n);
        VariableSet { bits: self.bits | other.bits, n: self.n }
    }

    #[inline]
    pub fn intersection(&self, other: &VariableSet) -> VariableSet {
        debug_assert_eq!(self.n, other.n);
        VariableSet { bits: self.bits & other.bits, n: self.n }
    }

    #[inline]
    pub fn difference(&self, other: &VariableSet) -> VariableSet {
        debug_assert_eq!(self.n, other.n);
        VariableSet { bits: self.bits & !other.bits, n: self.n }
    }

    #[inline]
    pub fn complement(&self) -> VariableSet {
        VariableSet {
            bits: VariableSet::full(self.n()).bits & !self.bits,
            n: self.n,
        }
    }

    /// 0-based member indices in ascending order.
    pub fn members(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.n()).filter(move |&i| self.contains(i))
    }

    /// All subsets of `self`, ascending by mask value (starts at ∅, ends at
    /// `self`).
    pub fn subsets(&self) -> SubsetIter {
        SubsetIter { of: *self, next: Some(0) }
    }
}

impl std::fmt::Display for VariableSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{{")?;
        let mut first = true;
        for i in self.members() {
            if !first {
                write!(f, ",")?;
            }
            write!(f, "x{}", i + 1)?;
            first = false;
        }
        write!(f, "}}")
    }
}

/// Iterates the subsets of a fixed mask via the `(s - 1) & m` walk, reordered
/// to ascend.
pub struct SubsetIter {
    of: VariableSet,
    next: Option<u32>,
}

impl Iterator for SubsetIter {
    type Item = VariableSet;

    fn next(&mut self) -> Option<VariableSet> {
        let cur = self.next?;
        self.next = if cur == self.of.bits {
            None
        } else {
            // Next subset in ascending order: increment within the mask.
            Some(((cur as u64 | !self.of.bits as u64) + 1) as u32 & self.of.bits)
        };
        Some(VariableSet { bits: cur, n: self.of.n })
    }
}

/// Dense array of `2^n` scalars indexed by subset bitmask.
///
/// Houses both value tables `{v(x_S)}` and effect spectra `{w_S}`. Immutable
/// after construction as far as the public API is concerned; transforms return
/// fresh tables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetTable {
    n: u8,
    values: Vec<f64>,
}

impl SubsetTable {
    /// A zero-filled table over `n` variables.
    pub fn zeros(n: usize) -> Result<Self, LatticeError> {
        check_n(n)?;
        Ok(Self { n: n as u8, values: vec![0.0; 1 << n] })
    }

    /// Wraps an existing dense array. Length must be a power of two matching
    /// a supported `n`, and every entry must be finite.
    pub fn from_values(n: usize, values: Vec<f64>) -> Result<Self, LatticeError> {
        check_n(n)?;
        if values.len() != 1 << n {
            return Err(LatticeError::Length { len: values.len(), n });
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(LatticeError::NonFinite { mask: bad as u32 });
        }
        Ok(Self { n: n as u8, values })
    }

    /// Fills a table by evaluating `f` on every mask, in mask order.
    pub fn from_fn(n: usize, mut f: impl FnMut(VariableSet) -> f64) -> Result<Self, LatticeError> {
        check_n(n)?;
        let values = (0..1u32 << n)
            .map(|bits| f(VariableSet { bits, n: n as u8 }))
            .collect();
        Self::from_values(n, values)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        false // length is always 2^n >= 2
    }

    #[inline]
    pub fn get(&self, s: VariableSet) -> f64 {
        debug_assert_eq!(s.n(), self.n());
        self.values[s.bits as usize]
    }

    #[inline]
    pub fn get_bits(&self, bits: u32) -> f64 {
        self.values[bits as usize]
    }

    #[inline]
    pub(crate) fn set_bits(&mut self, bits: u32, v: f64) {
        self.values[bits as usize] = v;
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Masks of the table in ascending order.
    pub fn masks(&self) -> impl Iterator<Item = VariableSet> + '_ {
        let n = self.n;
        (0..self.values.len() as u32).map(move |bits| VariableSet { bits, n })
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Sum of absolute values, `‖table‖₁`.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().map(|v| v.abs()).sum()
    }
}

/// Below this table size the parallel butterfly costs more than it saves.
const PAR_THRESHOLD: usize = 1 << 14;

/// One butterfly pass per bit. `pair(low, high)` sees the entries whose masks
/// differ only in that bit; which half is mutated decides sub- vs superset
/// direction. Splitting at the block level keeps the result bit-identical to
/// the sequential order.
fn butterfly(values: &mut [f64], pair: impl Fn(&mut f64, &mut f64) + Sync) {
    use rayon::prelude::*;
    let len = values.len();
    let mut block = 1usize;
    while block < len {
        let apply = |chunk: &mut [f64]| {
            let (lo, hi) = chunk.split_at_mut(block);
            for (l, h) in lo.iter_mut().zip(hi.iter_mut()) {
                pair(l, h);
            }
        };
        if len >= PAR_THRESHOLD {
            values.par_chunks_mut(block * 2).for_each(apply);
        } else {
            values.chunks_mut(block * 2).for_each(apply);
        }
        block <<= 1;
    }
}

/// Harsanyi/Möbius transform: value table to effect spectrum.
///
/// `w[S] = Σ_{S'⊆S} (-1)^(|S|-|S'|) v[S']`, computed in place in `O(n 2^n)`.
pub fn mobius_transform(values: &SubsetTable) -> SubsetTable {
    let mut out = values.clone();
    butterfly(&mut out.values, |lo, hi| *hi -= *lo);
    out
}

/// Zeta transform (subset sums): effect spectrum back to value table.
///
/// `v[S] = Σ_{S'⊆S} w[S']`; exact inverse of [`mobius_transform`] up to
/// floating-point roundoff.
pub fn zeta_transform(effects: &SubsetTable) -> SubsetTable {
    let mut out = effects.clone();
    butterfly(&mut out.values, |lo, hi| *hi += *lo);
    out
}

/// Superset sums: `out[U] = Σ_{S ⊇ U} table[S]`.
pub fn superset_sum(table: &SubsetTable) -> SubsetTable {
    let mut out = table.clone();
    butterfly(&mut out.values, |lo, hi| *lo += *hi);
    out
}
