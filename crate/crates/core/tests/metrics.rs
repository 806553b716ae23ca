use bicap_core::metrics::{rmse, roc_auc};
use bicap_testkit::{pairwise_auc, rng};
use proptest::prelude::*;
use rand::Rng;

fn random_problem(seed: u64, max_len: usize, levels: Option<u32>) -> (Vec<f64>, Vec<bool>) {
    let mut r = rng(seed);
    let n = r.random_range(2..=max_len);
    let mut targets: Vec<bool> = (0..n).map(|_| r.random_bool(0.4)).collect();
    targets[0] = true;
    targets[1] = false;
    let scores = (0..n)
        .map(|_| match levels {
            Some(k) => r.random_range(0..k) as f64 / k as f64,
            None => r.random_range(-1.0..1.0),
        })
        .collect();
    (scores, targets)
}

#[test]
fn matches_pairwise_oracle_exactly() {
    for seed in 0..100 {
        let levels = if seed % 2 == 0 { Some(7) } else { None };
        let (s, t) = random_problem(seed, 500, levels);
        assert_eq!(roc_auc(&s, &t).unwrap(), pairwise_auc(&s, &t), "seed {seed}");
    }
}

proptest! {
    #[test]
    fn invariant_under_increasing_transform(seed in any::<u64>()) {
        let (s, t) = random_problem(seed, 200, Some(20));
        let warped: Vec<f64> = s.iter().map(|v| (3.0 * v).exp() - 5.0).collect();
        prop_assert_eq!(roc_auc(&s, &t).unwrap(), roc_auc(&warped, &t).unwrap());
    }

    #[test]
    fn negation_complements(seed in any::<u64>()) {
        let (s, t) = random_problem(seed, 200, None);
        let neg: Vec<f64> = s.iter().map(|v| -v).collect();
        prop_assert!((roc_auc(&neg, &t).unwrap() - (1.0 - roc_auc(&s, &t).unwrap())).abs() < 1e-12);
    }

    #[test]
    fn rmse_symmetric(a in prop::collection::vec(-1.0f64..1.0, 1..50), seed in any::<u64>()) {
        let mut r = rng(seed);
        let b: Vec<f64> = a.iter().map(|_| r.random_range(-1.0..1.0)).collect();
        prop_assert_eq!(rmse(&a, &b).unwrap(), rmse(&b, &a).unwrap());
        prop_assert_eq!(rmse(&a, &a).unwrap(), 0.0);
    }
}
