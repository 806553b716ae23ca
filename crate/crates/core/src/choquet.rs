//! Bipolar discrete Choquet integral under a bi-capacity.
//!
//! Sources are sorted ascending by `|h|`. For the `k`-th smallest magnitude
//! the suffix `A_k` of remaining sources is split by sign into
//! `(A_k ∩ C⁺, A_k ∩ C⁻)` and weighted by the magnitude increment
//! `|h_(k)| - |h_(k-1)|`, with `|h_(0)| = 0`. Zero counts as nonnegative.
//!
//! The weights and pairs depend only on the input, never on the bi-capacity,
//! so a whole table can be compiled once into [`TermTable`] and re-evaluated
//! against many bi-capacities.

use arrayvec::ArrayVec;
use rayon::prelude::*;
use thiserror::Error;

use crate::lattice::{BiCapacity, SubsetPair, MAX_SOURCES};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChoquetError {
    #[error("input has {found} sources, bi-capacity expects {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("source {source_index} value {value} is outside [-1, 1]")]
    OutOfRangeInput { source_index: usize, value: f64 },
}

/// How inputs outside `[-1, 1]` are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InputPolicy {
    /// Reject with [`ChoquetError::OutOfRangeInput`].
    #[default]
    Strict,
    /// Clamp into `[-1, 1]` first. NaN is still rejected.
    Clamp,
}

/// One weighted lookup of the integral.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Term {
    pub pair: SubsetPair,
    pub weight: f64,
}

pub type Terms = ArrayVec<Term, MAX_SOURCES>;

#[derive(Debug, Clone, PartialEq)]
pub struct ChiEvaluation {
    pub value: f64,
    /// Pairs that received a strictly positive weight, in summation order.
    pub used_pairs: Vec<SubsetPair>,
}

/// Checks an input vector against `policy`, returning the values to use.
pub fn prepare_input(x: &[f64], policy: InputPolicy) -> Result<ArrayVec<f64, MAX_SOURCES>, ChoquetError> {
    if x.len() > MAX_SOURCES {
        return Err(ChoquetError::DimensionMismatch { expected: MAX_SOURCES, found: x.len() });
    }
    x.iter()
        .enumerate()
        .map(|(i, &v)| match policy {
            _ if v.is_nan() => Err(ChoquetError::OutOfRangeInput { source_index: i + 1, value: v }),
            InputPolicy::Clamp => Ok(v.clamp(-1.0, 1.0)),
            InputPolicy::Strict if (-1.0..=1.0).contains(&v) => Ok(v),
            InputPolicy::Strict => Err(ChoquetError::OutOfRangeInput { source_index: i + 1, value: v }),
        })
        .collect()
}

/// The positively weighted `(pair, weight)` terms for an in-range input.
pub fn terms(x: &[f64]) -> Terms {
    let m = x.len();
    let mut order: ArrayVec<usize, MAX_SOURCES> = (0..m).collect();
    order.sort_by(|&i, &j| x[i].abs().total_cmp(&x[j].abs()).then(i.cmp(&j)));

    let positive: u16 = (0..m).filter(|&i| x[i] >= 0.0).fold(0, |acc, i| acc | 1 << i);
    let mut remaining: u16 = ((1u32 << m) - 1) as u16;
    let mut previous = 0.0;
    let mut out = Terms::new();
    for &i in &order {
        let magnitude = x[i].abs();
        let weight = magnitude - previous;
        if weight > 0.0 {
            let pair =
                SubsetPair::from_masks(remaining & positive, remaining & !positive).expect("sign split is disjoint");
            out.push(Term { pair, weight });
        }
        previous = magnitude;
        remaining &= !(1 << i);
    }
    out
}

fn check_dimension(g: &BiCapacity, x: &[f64]) -> Result<(), ChoquetError> {
    if g.m() != x.len() {
        Err(ChoquetError::DimensionMismatch { expected: g.m(), found: x.len() })
    } else {
        Ok(())
    }
}

/// Evaluates the integral of `x` under `g`, rejecting out-of-range inputs.
pub fn choquet(g: &BiCapacity, x: &[f64]) -> Result<ChiEvaluation, ChoquetError> {
    choquet_with(g, x, InputPolicy::Strict)
}

pub fn choquet_with(g: &BiCapacity, x: &[f64], policy: InputPolicy) -> Result<ChiEvaluation, ChoquetError> {
    check_dimension(g, x)?;
    let x = prepare_input(x, policy)?;
    let terms = terms(&x);
    let value = terms.iter().fold(0.0, |acc, t| acc + t.weight * g.get(t.pair));
    Ok(ChiEvaluation { value, used_pairs: terms.iter().map(|t| t.pair).collect() })
}

#[derive(Debug, Clone, PartialEq, Error)]
#[error("instance '{instance}': {source}")]
pub struct FuseError {
    pub instance: String,
    #[source]
    pub source: ChoquetError,
}

/// Evaluates every row of `rows` (row-major, `g.m()` columns) and optionally
/// takes the absolute value. Output order follows input order.
pub fn fuse_rows(
    g: &BiCapacity,
    ids: &[String],
    rows: &[f64],
    absolute: bool,
    policy: InputPolicy,
) -> Result<Vec<f64>, FuseError> {
    let m = g.m();
    rows.par_chunks(m)
        .zip(ids.par_iter())
        .map(|(x, id)| {
            let wrap = |source| FuseError { instance: id.clone(), source };
            if x.len() != m {
                return Err(wrap(ChoquetError::DimensionMismatch { expected: m, found: x.len() }));
            }
            let v = choquet_with(g, x, policy).map_err(wrap)?.value;
            Ok(if absolute { v.abs() } else { v })
        })
        .collect()
}

/// Pre-computed integral terms for a batch of instances.
#[derive(Debug, Clone)]
pub struct TermTable {
    m: usize,
    offsets: Vec<usize>,
    indices: Vec<u32>,
    weights: Vec<f64>,
}

impl TermTable {
    /// Compiles row-major, already validated rows.
    pub fn compile(m: usize, rows: &[f64]) -> Self {
        let n = rows.len().checked_div(m).unwrap_or(0);
        let mut offsets = Vec::with_capacity(n + 1);
        let mut indices = Vec::with_capacity(n * m);
        let mut weights = Vec::with_capacity(n * m);
        offsets.push(0);
        for x in rows.chunks_exact(m.max(1)) {
            for t in terms(x) {
                indices.push(t.pair.index() as u32);
                weights.push(t.weight);
            }
            offsets.push(indices.len());
        }
        TermTable { m, offsets, indices, weights }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Integral of row `row` under `g`; identical to [`choquet`] bit for bit.
    #[inline]
    pub fn evaluate(&self, g: &BiCapacity, row: usize) -> f64 {
        let (start, end) = (self.offsets[row], self.offsets[row + 1]);
        let values = g.values();
        self.indices[start..end]
            .iter()
            .zip(&self.weights[start..end])
            .fold(0.0, |acc, (&idx, &w)| acc + w * values[idx as usize])
    }

    /// Ternary codes of the pairs row `row` touches.
    pub fn used_indices(&self, row: usize) -> &[u32] {
        &self.indices[self.offsets[row]..self.offsets[row + 1]]
    }
}
