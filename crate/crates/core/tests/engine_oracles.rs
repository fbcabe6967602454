//! Brute-force oracles for the dense-table engine: prefix sums against
//! direct rectangle summation, running maxima against a quadratic scan,
//! and the algebraic invariants (monotonicity, dyadic scale covariance).

use proptest::prelude::*;

use fieldmax::fieldgen::{generate, FieldModel, Margin};
use fieldmax::lattice::{iter_rectangle, LatticeTable, MultiIndex};

fn mi(coords: &[usize]) -> MultiIndex {
    MultiIndex::new(coords.to_vec()).unwrap()
}

/// O(cells^2) reference: S_m by direct summation over [1, m].
fn brute_prefix(t: &LatticeTable) -> Vec<f64> {
    iter_rectangle(t.shape())
        .map(|m| {
            iter_rectangle(&m)
                .filter(|k| k.le(&m))
                .map(|k| t.get(&k))
                .sum()
        })
        .collect()
}

/// O(cells^2) reference: M_l = max over m <= l of |S_m| w(m).
fn brute_running_max(s: &LatticeTable, w: impl Fn(&MultiIndex) -> f64) -> Vec<f64> {
    iter_rectangle(s.shape())
        .map(|l| {
            iter_rectangle(&l)
                .filter(|m| m.le(&l))
                .map(|m| s.get(&m).abs() * w(&m))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

fn shape_strategy() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        (1usize..=512).prop_map(|a| vec![a]),
        (1usize..=22, 1usize..=22).prop_map(|(a, b)| vec![a, b]),
        (1usize..=8, 1usize..=8, 1usize..=8).prop_map(|(a, b, c)| vec![a, b, c]),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn prefix_sums_match_brute_force_exactly_on_integers(
        shape in shape_strategy(),
        seed in any::<u32>(),
    ) {
        let n = mi(&shape);
        // small integers stay exact in f64
        let t = LatticeTable::from_fn(n.clone(), |coords| {
            let key: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
            let u = fieldmax::rng::CellRng::keyed(seed as u64, 0, &key).next_u64();
            ((u % 101) as i64 - 50) as f64
        }).unwrap();
        let s = t.prefix_sums().unwrap();
        let oracle = brute_prefix(&t);
        for (got, want) in s.values().iter().zip(&oracle) {
            prop_assert_eq!(got, want);
        }
    }

    #[test]
    fn prefix_sums_match_brute_force_in_floats(
        shape in shape_strategy(),
        seed in any::<u32>(),
    ) {
        let n = mi(&shape);
        let t = LatticeTable::from_fn(n.clone(), |coords| {
            let key: Vec<i64> = coords.iter().map(|&c| c as i64).collect();
            fieldmax::rng::CellRng::keyed(seed as u64, 1, &key).next_open01() * 2.0 - 1.0
        }).unwrap();
        let s = t.prefix_sums().unwrap();
        let oracle = brute_prefix(&t);
        for (got, want) in s.values().iter().zip(&oracle) {
            let scale = want.abs().max(1.0);
            prop_assert!((got - want).abs() <= 1e-12 * scale,
                "got {got}, oracle {want}");
        }
    }

    #[test]
    fn running_max_is_monotone_along_partial_order(
        shape in prop_oneof![
            (1usize..=12, 1usize..=12).prop_map(|(a, b)| vec![a, b]),
            (1usize..=5, 1usize..=5, 1usize..=5).prop_map(|(a, b, c)| vec![a, b, c]),
        ],
        seed in any::<u32>(),
    ) {
        let n = mi(&shape);
        let model = FieldModel::iid(Margin::Normal { mu: 0.0, sigma: 1.0 }, seed as u64);
        let s = generate(&model, &n, 0).unwrap().prefix_sums().unwrap();
        let m = s.running_weighted_max(|c| 1.0 / c.iter().product::<usize>() as f64).unwrap();
        for l in iter_rectangle(&n) {
            for (j, &c) in l.coords().iter().enumerate() {
                if c > 1 {
                    let mut prev = l.coords().to_vec();
                    prev[j] -= 1;
                    prop_assert!(m.get(&mi(&prev)) <= m.get(&l) + 1e-15);
                }
            }
        }
    }

    #[test]
    fn running_max_dyadic_scale_covariance(
        shape in (1usize..=10, 1usize..=10).prop_map(|(a, b)| vec![a, b]),
        seed in any::<u32>(),
        lam_exp in -2i32..=3,
    ) {
        // replacing w by lambda*w multiplies M by lambda; float-exact for
        // dyadic lambda
        let lambda = 2f64.powi(lam_exp);
        let n = mi(&shape);
        let model = FieldModel::iid(Margin::Normal { mu: 0.0, sigma: 1.0 }, seed as u64);
        let s = generate(&model, &n, 0).unwrap().prefix_sums().unwrap();
        let w = |c: &[usize]| 1.0 + (c[0] as f64).sqrt();
        let m1 = s.running_weighted_max(w).unwrap();
        let m2 = s.running_weighted_max(|c| lambda * w(c)).unwrap();
        for (a, b) in m1.values().iter().zip(m2.values()) {
            prop_assert_eq!(lambda * a, *b);
        }
    }
}

#[test]
fn running_max_matches_quadratic_oracle_on_seeded_rademacher() {
    let model = FieldModel::iid(Margin::Rademacher, 4242);
    let n = mi(&[4, 4]);
    let s = generate(&model, &n, 0).unwrap().prefix_sums().unwrap();
    let m = s.running_weighted_max(|_| 1.0).unwrap();
    let oracle = brute_running_max(&s, |_| 1.0);
    for (got, want) in m.values().iter().zip(&oracle) {
        assert_eq!(got, want);
    }
}

#[test]
fn running_max_matches_quadratic_oracle_with_weights() {
    let model = FieldModel::iid(Margin::Uniform { a: -1.0, b: 1.0 }, 99);
    let n = mi(&[6, 5]);
    let s = generate(&model, &n, 3).unwrap().prefix_sums().unwrap();
    let w = |c: &MultiIndex| 1.0 / (c.coords()[0] * c.coords()[1]) as f64;
    let m = s
        .running_weighted_max(|c| 1.0 / (c[0] * c[1]) as f64)
        .unwrap();
    let oracle = brute_running_max(&s, w);
    for (got, want) in m.values().iter().zip(&oracle) {
        let scale = want.abs().max(1.0);
        assert!((got - want).abs() <= 1e-13 * scale);
    }
}
