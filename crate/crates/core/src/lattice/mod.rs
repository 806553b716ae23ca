//! Subset pairs, bi-capacity value tables and the lattice order on them.
//!
//! A bi-capacity over `m` sources assigns a value in `[-1, 1]` to every pair
//! `(A, B)` of disjoint source subsets. Each source is either in `A`, in `B`
//! or in neither, so the table has exactly `3^m` entries. Entries are stored
//! densely, addressed by a little-endian ternary code: digit `i` is `0` when
//! source `i` belongs to neither subset, `1` when it belongs to `A` and `2`
//! when it belongs to `B`.
//!
//! The order used throughout is "more in `A`, less in `B` is higher":
//! `(A, B) <= (E, F)` iff `A ⊆ E` and `B ⊇ F`. A valid bi-capacity is
//! monotone in that order, pinned to `+1` at `(C, ∅)` and `-1` at `(∅, C)`,
//! and, in [`Mode::Obj2`], pinned to `0` at the origin `(∅, ∅)`.

pub(crate) mod sample;
mod text;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use sample::sample_random;
pub use text::{format_value, parse_matrix_text, FormatError};

/// Largest supported source count; `3^10 = 59049` table entries.
pub const MAX_SOURCES: usize = 10;

/// Absolute slack allowed when comparing values along a cover edge.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LatticeError {
    #[error("source {0} appears in both subsets of the pair")]
    Overlap(usize),
    #[error("source index {index} is outside 1..={m}")]
    Range { index: usize, m: usize },
    #[error("source count {0} is unsupported (must be between 1 and {MAX_SOURCES})")]
    SourceCount(usize),
    #[error("expected {expected} values for m={m}, got {found}")]
    TableSize { m: usize, expected: usize, found: usize },
}

/// Which objective a bi-capacity is trained for.
///
/// `Obj1` leaves the origin `(∅, ∅)` free and drives negative bags to `-1`.
/// `Obj2` pins the origin to `0`, drives negative bags to `0` and lets
/// positive instances sit at either pole.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Obj1,
    Obj2,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Obj1 => "obj1",
            Mode::Obj2 => "obj2",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "obj1" | "1" => Ok(Mode::Obj1),
            "obj2" | "2" => Ok(Mode::Obj2),
            other => Err(format!("unknown mode '{other}' (expected obj1 or obj2)")),
        }
    }
}

pub(crate) fn check_source_count(m: usize) -> Result<(), LatticeError> {
    if m == 0 || m > MAX_SOURCES {
        Err(LatticeError::SourceCount(m))
    } else {
        Ok(())
    }
}

/// Number of subset pairs over `m` sources, `3^m`.
pub fn pair_count(m: usize) -> usize {
    3usize.pow(m as u32)
}

/// Number of entries that are not boundary conditions, `3^m - 3`.
pub fn non_boundary_count(m: usize) -> usize {
    pair_count(m) - 3
}

fn full_mask(m: usize) -> u16 {
    ((1u32 << m) - 1) as u16
}

/// A pair `(A, B)` of disjoint source subsets, stored as bitsets over
/// zero-based source indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SubsetPair {
    a: u16,
    b: u16,
}

impl SubsetPair {
    pub const ORIGIN: SubsetPair = SubsetPair { a: 0, b: 0 };

    /// Builds a pair from bitsets, rejecting overlapping subsets.
    pub fn from_masks(a: u16, b: u16) -> Result<Self, LatticeError> {
        let both = a & b;
        if both != 0 {
            return Err(LatticeError::Overlap(both.trailing_zeros() as usize + 1));
        }
        Ok(SubsetPair { a, b })
    }

    /// Builds a pair from one-based source indices.
    pub fn from_indices(a: &[usize], b: &[usize], m: usize) -> Result<Self, LatticeError> {
        let mask = |indices: &[usize]| -> Result<u16, LatticeError> {
            indices.iter().try_fold(0u16, |acc, &i| {
                if i == 0 || i > m || i > MAX_SOURCES {
                    Err(LatticeError::Range { index: i, m })
                } else {
                    Ok(acc | 1 << (i - 1))
                }
            })
        };
        Self::from_masks(mask(a)?, mask(b)?)
    }

    /// `(C, ∅)`, the top element.
    pub fn top(m: usize) -> Self {
        SubsetPair { a: full_mask(m), b: 0 }
    }

    /// `(∅, C)`, the bottom element.
    pub fn bottom(m: usize) -> Self {
        SubsetPair { a: 0, b: full_mask(m) }
    }

    pub fn a_mask(self) -> u16 {
        self.a
    }

    pub fn b_mask(self) -> u16 {
        self.b
    }

    /// One-based indices of the sources in `A`.
    pub fn a_indices(self) -> Vec<usize> {
        mask_indices(self.a)
    }

    /// One-based indices of the sources in `B`.
    pub fn b_indices(self) -> Vec<usize> {
        mask_indices(self.b)
    }

    /// `|A| + |B|`: the breadth-first layer of this pair, counted from the origin.
    pub fn layer(self) -> u32 {
        self.a.count_ones() + self.b.count_ones()
    }

    /// Dense ternary code of the pair.
    pub fn index(self) -> usize {
        let mut idx = 0usize;
        let mut place = 1usize;
        let mut rest = self.a | self.b;
        let mut bit = 0;
        while rest != 0 {
            let flag = 1u16 << bit;
            if self.a & flag != 0 {
                idx += place;
            } else if self.b & flag != 0 {
                idx += 2 * place;
            }
            rest &= !flag;
            place *= 3;
            bit += 1;
        }
        idx
    }

    /// Inverse of [`SubsetPair::index`]. `idx` must be below `3^m`.
    pub fn from_index(mut idx: usize, m: usize) -> Self {
        debug_assert!(idx < pair_count(m));
        let (mut a, mut b) = (0u16, 0u16);
        for bit in 0..m {
            match idx % 3 {
                1 => a |= 1 << bit,
                2 => b |= 1 << bit,
                _ => {}
            }
            idx /= 3;
        }
        SubsetPair { a, b }
    }

    /// `self <= other` in the bi-capacity order (`A ⊆ E`, `B ⊇ F`).
    pub fn precedes(self, other: SubsetPair) -> bool {
        self.a & !other.a == 0 && other.b & !self.b == 0
    }

    /// Pairs directly above this one: add a free source to `A`, or drop a
    /// source from `B`.
    pub fn upper_covers(self, m: usize) -> Vec<SubsetPair> {
        let mut out = Vec::with_capacity(m);
        for bit in 0..m {
            let flag = 1u16 << bit;
            if self.b & flag != 0 {
                out.push(SubsetPair { a: self.a, b: self.b & !flag });
            } else if self.a & flag == 0 {
                out.push(SubsetPair { a: self.a | flag, b: self.b });
            }
        }
        out
    }

    /// Pairs directly below this one: drop a source from `A`, or add a free
    /// source to `B`.
    pub fn lower_covers(self, m: usize) -> Vec<SubsetPair> {
        let mut out = Vec::with_capacity(m);
        for bit in 0..m {
            let flag = 1u16 << bit;
            if self.a & flag != 0 {
                out.push(SubsetPair { a: self.a & !flag, b: self.b });
            } else if self.b & flag == 0 {
                out.push(SubsetPair { a: self.a, b: self.b | flag });
            }
        }
        out
    }

    /// Every pair over `m` sources in ternary-code order.
    pub fn all(m: usize) -> impl Iterator<Item = SubsetPair> {
        (0..pair_count(m)).map(move |i| SubsetPair::from_index(i, m))
    }
}

fn mask_indices(mask: u16) -> Vec<usize> {
    (0..16).filter(|bit| mask & (1 << bit) != 0).map(|bit| bit + 1).collect()
}

/// Concatenated one-based indices, `∅` for the empty set.
pub(crate) fn subset_label(mask: u16) -> String {
    if mask == 0 {
        "∅".to_string()
    } else {
        mask_indices(mask).iter().map(|i| i.to_string()).collect()
    }
}

impl fmt::Display for SubsetPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "g_{{{},{}}}", subset_label(self.a), subset_label(self.b))
    }
}

/// One failed check reported by [`BiCapacity::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// A boundary entry does not hold its fixed value.
    Boundary { pair: SubsetPair, expected: f64, found: f64 },
    /// A value is NaN, infinite, or outside `[-1, 1]`.
    OutOfRange { pair: SubsetPair, value: f64 },
    /// `lower <= upper` is a cover edge but `g(lower) > g(upper)`.
    Monotonicity { lower: SubsetPair, upper: SubsetPair, lower_value: f64, upper_value: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Boundary { pair, expected, found } => {
                write!(f, "boundary {pair} must be {expected}, found {found}")
            }
            Violation::OutOfRange { pair, value } => {
                write!(f, "{pair} = {value} is outside [-1, 1]")
            }
            Violation::Monotonicity { lower, upper, lower_value, upper_value } => {
                write!(f, "cover edge {lower} <= {upper} violated: {lower_value} > {upper_value}")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.ok() {
            return f.write_str("ok");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// The full `3^m` value table of a bi-capacity together with its mode.
///
/// Construction never validates; call [`BiCapacity::validate`] (or use the
/// file parsers, which do).
#[derive(Debug, Clone, PartialEq)]
pub struct BiCapacity {
    m: usize,
    mode: Mode,
    values: Vec<f64>,
}

impl BiCapacity {
    /// Wraps a dense value table indexed by ternary code.
    pub fn from_values(m: usize, mode: Mode, values: Vec<f64>) -> Result<Self, LatticeError> {
        check_source_count(m)?;
        let expected = pair_count(m);
        if values.len() != expected {
            return Err(LatticeError::TableSize { m, expected, found: values.len() });
        }
        Ok(BiCapacity { m, mode, values })
    }

    /// Builds a table by evaluating `f` on every pair.
    pub fn from_fn(m: usize, mode: Mode, mut f: impl FnMut(SubsetPair) -> f64) -> Result<Self, LatticeError> {
        check_source_count(m)?;
        let values = SubsetPair::all(m).map(&mut f).collect();
        Ok(BiCapacity { m, mode, values })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, pair: SubsetPair) -> f64 {
        self.values[pair.index()]
    }

    pub fn value_at(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Returns a copy with one entry replaced. No validation is performed.
    pub fn with_value(&self, pair: SubsetPair, value: f64) -> Self {
        let mut out = self.clone();
        out.values[pair.index()] = value;
        out
    }

    pub(crate) fn set(&mut self, pair: SubsetPair, value: f64) {
        self.values[pair.index()] = value;
    }

    /// Boundary entries whose value is pinned for this mode.
    pub fn fixed_value(m: usize, mode: Mode, pair: SubsetPair) -> Option<f64> {
        if pair == SubsetPair::top(m) {
            Some(1.0)
        } else if pair == SubsetPair::bottom(m) {
            Some(-1.0)
        } else if mode == Mode::Obj2 && pair == SubsetPair::ORIGIN {
            Some(0.0)
        } else {
            None
        }
    }

    /// Entries the optimizer may change. In `Obj1` this includes the origin.
    pub fn learnable_pairs(m: usize, mode: Mode) -> Vec<SubsetPair> {
        SubsetPair::all(m).filter(|&p| Self::fixed_value(m, mode, p).is_none()).collect()
    }

    /// Current admissible interval `[max over lower covers, min over upper
    /// covers]` for `pair`, defaulting to `[-1, 1]` where a side has no covers.
    pub fn bounds(&self, pair: SubsetPair) -> (f64, f64) {
        let lo = pair.lower_covers(self.m).into_iter().map(|q| self.get(q)).fold(-1.0, f64::max);
        let hi = pair.upper_covers(self.m).into_iter().map(|q| self.get(q)).fold(1.0, f64::min);
        (lo, hi)
    }

    /// Checks boundary values, range, and monotonicity along every cover edge
    /// (sufficient by transitivity).
    pub fn validate(&self) -> ValidationReport {
        let m = self.m;
        let mut violations = Vec::new();
        for pair in SubsetPair::all(m) {
            let value = self.get(pair);
            if !value.is_finite() || !(-1.0..=1.0).contains(&value) {
                violations.push(Violation::OutOfRange { pair, value });
            }
            if let Some(expected) = Self::fixed_value(m, self.mode, pair) {
                if value != expected {
                    violations.push(Violation::Boundary { pair, expected, found: value });
                }
            }
        }
        for lower in SubsetPair::all(m) {
            let lower_value = self.get(lower);
            for upper in lower.upper_covers(m) {
                let upper_value = self.get(upper);
                if lower_value > upper_value + MONOTONICITY_TOLERANCE {
                    violations.push(Violation::Monotonicity { lower, upper, lower_value, upper_value });
                }
            }
        }
        ValidationReport { violations }
    }

    /// Renders the table as a matrix with rows indexed by `A` and columns by
    /// `B`, both in subset-bitmask order with `∅` first.
    pub fn to_matrix_text(&self) -> String {
        text::to_matrix_text(self)
    }

    /// Serializes to the line-oriented bi-capacity file format.
    pub fn to_file_text(&self) -> String {
        text::to_file_text(self)
    }

    /// Parses the line-oriented file format and validates the result.
    pub fn from_file_text(input: &str) -> Result<Self, FormatError> {
        text::from_file_text(input)
    }
}
