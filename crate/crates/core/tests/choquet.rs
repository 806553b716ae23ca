use bicap_core::lattice::sample_random;
use bicap_core::{choquet, BiCapacity, Mode, SubsetPair};
use bicap_testkit::{
    choquet_oracle, classical_choquet, cpt_bicapacity, letters_table, random_capacity, random_input, rng,
};
use proptest::prelude::*;
use rand::Rng;

fn mode_of(obj2: bool) -> Mode {
    if obj2 {
        Mode::Obj2
    } else {
        Mode::Obj1
    }
}

#[test]
fn agrees_with_level_set_oracle() {
    let mut r = rng(7);
    for m in 2..=4 {
        for i in 0..10_000 {
            let g = sample_random(m, mode_of(i % 2 == 0), &mut r).unwrap();
            let mut x = random_input(m, &mut r);
            if i % 5 == 0 {
                // force ties and zeros
                x[0] = -x[m - 1];
                x[1] = 0.0;
            }
            let got = choquet(&g, &x).unwrap().value;
            assert!((got - choquet_oracle(&g, &x)).abs() <= 1e-12, "m={m} x={x:?}");
        }
    }
}

#[test]
fn vertex_identity_on_ternary_grid() {
    let mut r = rng(3);
    for i in 0..20 {
        let mode = mode_of(i % 2 == 0);
        let g = sample_random(3, mode, &mut r).unwrap();
        for p in SubsetPair::all(3) {
            // the zero input integrates to 0, which is the origin only when it is pinned
            if p == SubsetPair::ORIGIN && mode == Mode::Obj1 {
                assert_eq!(choquet(&g, &[0.0; 3]).unwrap().value, 0.0);
                continue;
            }
            let x: Vec<f64> = (0..3)
                .map(|i| {
                    if p.a_mask() >> i & 1 == 1 {
                        1.0
                    } else if p.b_mask() >> i & 1 == 1 {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect();
            assert_eq!(choquet(&g, &x).unwrap().value, g.get(p), "{p}");
        }
    }
}

#[test]
fn letters_table_worked_example() {
    let v = choquet(&letters_table(Mode::Obj1), &[0.5, -0.3, 0.8]).unwrap().value;
    assert!((v - (-0.04)).abs() <= 1e-12, "{v}");
}

#[test]
fn cpt_form_reduces_to_classical_integral() {
    let mut r = rng(11);
    for _ in 0..1000 {
        let m = r.random_range(2..=4);
        let mu_plus = random_capacity(m, &mut r);
        let mu_minus = random_capacity(m, &mut r);
        let g = cpt_bicapacity(m, &mu_plus, &mu_minus);
        assert!(g.validate().ok());
        let x: Vec<f64> = (0..m).map(|_| r.random_range(0.0..=1.0)).collect();
        let pos = choquet(&g, &x).unwrap().value;
        assert!((pos - classical_choquet(&mu_plus, &x)).abs() <= 1e-12);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        let got = choquet(&g, &neg).unwrap().value;
        assert!((got + classical_choquet(&mu_minus, &x)).abs() <= 1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn poles(seed in any::<u64>(), m in 1usize..=6, obj2 in any::<bool>()) {
        let g = sample_random(m, mode_of(obj2), &mut rng(seed)).unwrap();
        prop_assert_eq!(choquet(&g, &vec![1.0; m]).unwrap().value, 1.0);
        prop_assert_eq!(choquet(&g, &vec![-1.0; m]).unwrap().value, -1.0);
    }

    #[test]
    fn bounded_and_homogeneous(seed in any::<u64>(), m in 1usize..=5, obj2 in any::<bool>(), c in 0.0f64..=1.0) {
        let mut r = rng(seed);
        let g = sample_random(m, mode_of(obj2), &mut r).unwrap();
        let x = random_input(m, &mut r);
        let v = choquet(&g, &x).unwrap().value;
        let bound = x.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        prop_assert!(v.abs() <= bound + 1e-12);
        let scaled: Vec<f64> = x.iter().map(|xi| c * xi).collect();
        prop_assert!((choquet(&g, &scaled).unwrap().value - c * v).abs() <= 1e-12);
    }

    // needs g(A, -) >= 0 >= g(-, B), which only the pinned origin guarantees
    #[test]
    fn monotone_in_input(seed in any::<u64>(), m in 1usize..=5, bump in 0.0f64..=0.5) {
        let mut r = rng(seed);
        let g = sample_random(m, Mode::Obj2, &mut r).unwrap();
        let x = random_input(m, &mut r);
        let i = r.random_range(0..m);
        let mut y = x.clone();
        y[i] = (y[i] + bump).min(1.0);
        prop_assert!(choquet(&g, &y).unwrap().value >= choquet(&g, &x).unwrap().value - 1e-12);
    }

    #[test]
    fn monotone_in_table(seed in any::<u64>(), m in 1usize..=4) {
        let mut r = rng(seed);
        let g = sample_random(m, Mode::Obj1, &mut r).unwrap();
        let learnable = BiCapacity::learnable_pairs(m, Mode::Obj1);
        let p = learnable[r.random_range(0..learnable.len())];
        let (_, hi) = g.bounds(p);
        let raised = g.with_value(p, hi);
        prop_assert!(raised.validate().ok());
        let x = random_input(m, &mut r);
        prop_assert!(choquet(&raised, &x).unwrap().value >= choquet(&g, &x).unwrap().value);
    }
}
