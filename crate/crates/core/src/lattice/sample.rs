use rand::Rng;

use super::{check_source_count, pair_count, BiCapacity, LatticeError, Mode, SubsetPair};

/// Draws a random monotone bi-capacity.
///
/// Elements are visited breadth-first from the origin, one layer
/// (`|A| + |B|`) at a time and in ascending ternary code within a layer. Each
/// element is drawn uniformly between the largest already-assigned lower
/// cover and the smallest already-assigned upper cover. Boundary entries are
/// assigned up front. In [`Mode::Obj1`] the origin is drawn like any other
/// element.
pub fn sample_random<R: Rng + ?Sized>(m: usize, mode: Mode, rng: &mut R) -> Result<BiCapacity, LatticeError> {
    check_source_count(m)?;
    let n = pair_count(m);
    let mut values = vec![0.0; n];
    let mut assigned = vec![false; n];
    for pair in SubsetPair::all(m) {
        if let Some(v) = BiCapacity::fixed_value(m, mode, pair) {
            values[pair.index()] = v;
            assigned[pair.index()] = true;
        }
    }

    let mut order: Vec<SubsetPair> = SubsetPair::all(m).collect();
    // stable: ternary order is kept within each layer
    order.sort_by_key(|p| p.layer());

    for pair in order {
        let idx = pair.index();
        if assigned[idx] {
            continue;
        }
        let lo = pair
            .lower_covers(m)
            .into_iter()
            .filter(|q| assigned[q.index()])
            .map(|q| values[q.index()])
            .fold(-1.0, f64::max);
        let hi = pair
            .upper_covers(m)
            .into_iter()
            .filter(|q| assigned[q.index()])
            .map(|q| values[q.index()])
            .fold(1.0, f64::min);
        debug_assert!(lo <= hi, "empty sampling interval at {pair}");
        values[idx] = uniform(rng, lo, hi);
        assigned[idx] = true;
    }
    BiCapacity::from_values(m, mode, values)
}

/// Uniform draw on `[lo, hi]`, returning `lo` for a degenerate interval.
pub(crate) fn uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        lo
    } else {
        rng.random_range(lo..=hi)
    }
}
