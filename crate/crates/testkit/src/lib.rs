//! Slow, obviously-correct reference implementations and fixtures shared by
//! the test suites. Nothing here reuses the evaluation code under test.

use bicap_core::{BiCapacity, Mode};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Dense position of `(A, B)` given as bitmasks: base-3 digits, 1 for A,
/// 2 for B, least significant digit = source 1.
pub fn ternary_code(a: u32, b: u32, m: usize) -> usize {
    (0..m).rev().fold(0, |acc, i| {
        let digit = if a >> i & 1 == 1 {
            1
        } else if b >> i & 1 == 1 {
            2
        } else {
            0
        };
        acc * 3 + digit
    })
}

fn lookup(g: &BiCapacity, a: u32, b: u32) -> f64 {
    g.values()[ternary_code(a, b, g.m())]
}

/// Bipolar Choquet integral as a level-set integral:
/// `integral_0^inf g({i: x_i >= t}, {i: x_i <= -t}) dt`, evaluated exactly
/// on the piecewise-constant pieces between distinct magnitudes.
pub fn choquet_oracle(g: &BiCapacity, x: &[f64]) -> f64 {
    let mut levels: Vec<f64> = x.iter().map(|v| v.abs()).filter(|&v| v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut total = 0.0;
    let mut prev = 0.0;
    for &t in &levels {
        let (mut a, mut b) = (0u32, 0u32);
        for (i, &v) in x.iter().enumerate() {
            if v >= t {
                a |= 1 << i;
            } else if v <= -t {
                b |= 1 << i;
            }
        }
        total += (t - prev) * lookup(g, a, b);
        prev = t;
    }
    total
}

/// Classical Choquet integral of a nonnegative vector with respect to a
/// set function given as a table indexed by bitmask.
pub fn classical_choquet(mu: &[f64], x: &[f64]) -> f64 {
    let mut levels: Vec<f64> = x.iter().copied().filter(|&v| v > 0.0).collect();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let mut total = 0.0;
    let mut prev = 0.0;
    for &t in &levels {
        let set = x.iter().enumerate().filter(|(_, &v)| v >= t).fold(0usize, |s, (i, _)| s | 1 << i);
        total += (t - prev) * mu[set];
        prev = t;
    }
    total
}

/// Random normalised capacity on `m` sources: `mu[0] = 0`, `mu[full] = 1`,
/// monotone under inclusion.
pub fn random_capacity<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    let full = (1usize << m) - 1;
    let mut order: Vec<usize> = (1..full).collect();
    order.sort_by_key(|s| s.count_ones());
    let mut mu = vec![0.0; full + 1];
    for s in order {
        let floor = (0..m).filter(|i| s >> i & 1 == 1).map(|i| mu[s & !(1 << i)]).fold(0.0, f64::max);
        mu[s] = rng.random_range(floor..=1.0);
    }
    mu[full] = 1.0;
    mu
}

/// Cumulative-prospect-theory bi-capacity `g(A, B) = mu_plus(A) - mu_minus(B)`.
pub fn cpt_bicapacity(m: usize, mu_plus: &[f64], mu_minus: &[f64]) -> BiCapacity {
    BiCapacity::from_fn(m, Mode::Obj2, |p| mu_plus[p.a_mask() as usize] - mu_minus[p.b_mask() as usize])
        .expect("source count within cap")
}

/// Fraction of (positive, negative) pairs ranked correctly, ties counting
/// one half.
pub fn pairwise_auc(scores: &[f64], targets: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &p) in scores.iter().enumerate() {
        if !targets[i] {
            continue;
        }
        for (j, &n) in scores.iter().enumerate() {
            if targets[j] {
                continue;
            }
            pairs += 1.0;
            if p > n {
                wins += 1.0;
            } else if p == n {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

/// Number of `tile x tile` blocks containing at least one set pixel.
pub fn naive_positive_tiles(mask: &[bool], width: usize, height: usize, tile: usize) -> usize {
    let mut count = 0;
    for ty in 0..height / tile {
        for tx in 0..width / tile {
            let mut hit = false;
            for y in ty * tile..(ty + 1) * tile {
                for x in tx * tile..(tx + 1) * tile {
                    hit |= mask[y * width + x];
                }
            }
            count += hit as usize;
        }
    }
    count
}

/// Bitmask of one-based source indices.
pub fn mask(sources: &[usize]) -> u32 {
    sources.iter().fold(0, |acc, &s| acc | 1 << (s - 1))
}

/// Reference three-source bi-capacity for the synthetic letter scene with
/// bipolar labels, as `(A, B, value)` rows.
pub const LETTERS_TABLE: &[(&[usize], &[usize], f64)] = &[
    (&[], &[], 0.0),
    (&[], &[1], -0.96),
    (&[], &[2], -0.94),
    (&[], &[1, 2], -1.00),
    (&[], &[3], -0.87),
    (&[], &[1, 3], -0.98),
    (&[], &[2, 3], -1.00),
    (&[], &[1, 2, 3], -1.00),
    (&[1], &[], 0.45),
    (&[1], &[2], -0.91),
    (&[1], &[3], -0.10),
    (&[1], &[2, 3], -0.95),
    (&[2], &[], 0.55),
    (&[2], &[1], -0.94),
    (&[2], &[3], 0.39),
    (&[2], &[1, 3], -0.96),
    (&[1, 2], &[], 1.00),
    (&[1, 2], &[3], 0.97),
    (&[3], &[], 0.10),
    (&[3], &[1], -0.86),
    (&[3], &[2], -0.82),
    (&[3], &[1, 2], -0.88),
    (&[1, 3], &[], 0.73),
    (&[1, 3], &[2], -0.72),
    (&[2, 3], &[], 0.77),
    (&[2, 3], &[1], -0.85),
    (&[1, 2, 3], &[], 1.00),
];

pub fn letters_table(mode: Mode) -> BiCapacity {
    let mut values = vec![f64::NAN; 27];
    for (a, b, v) in LETTERS_TABLE {
        values[ternary_code(mask(a), mask(b), 3)] = *v;
    }
    assert!(values.iter().all(|v| !v.is_nan()), "fixture covers every pair");
    BiCapacity::from_values(3, mode, values).expect("27 entries")
}

/// Uniform random point of `[-1, 1]^m`.
pub fn random_input<R: Rng>(m: usize, rng: &mut R) -> Vec<f64> {
    (0..m).map(|_| rng.random_range(-1.0..=1.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_is_a_valid_table() {
        assert!(letters_table(Mode::Obj1).validate().ok());
        assert!(letters_table(Mode::Obj2).validate().ok());
    }

    #[test]
    fn oracle_on_hand_example() {
        // (0.5, -0.3, 0.8): levels 0.3, 0.5, 0.8 give g(13,2), g(13,-), g(3,-)
        let v = choquet_oracle(&letters_table(Mode::Obj1), &[0.5, -0.3, 0.8]);
        assert!((v - (0.3 * -0.72 + 0.2 * 0.73 + 0.3 * 0.10)).abs() < 1e-15);
    }

    #[test]
    fn classical_integral_of_additive_measure_is_weighted_sum() {
        let mu = [0.0, 0.2, 0.8, 1.0];
        assert!((classical_choquet(&mu, &[0.5, 0.25]) - (0.2 * 0.5 + 0.8 * 0.25)).abs() < 1e-15);
    }

    #[test]
    fn pairwise_counts_ties_half() {
        assert_eq!(pairwise_auc(&[1.0, 1.0, 0.0], &[true, false, false]), 0.75);
    }
}
