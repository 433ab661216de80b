mod common;

use lfpsolve::numerics::{rat, to_f64, Rational};
use lfpsolve::pps::{size_measure, to_snf, value_iterate, value_iterate_bounds, value_iterate_pps_bounds};
use num_traits::Zero;
use proptest::prelude::*;
use rand::Rng;

use common::{random_pps, random_snf, rng};

fn unit_point(r: &mut impl Rng, n: usize) -> Vec<Rational> {
    (0..n)
        .map(|_| {
            let d = r.random_range(1..=50i64);
            rat(r.random_range(0..=d), d)
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mean_value_identity(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let p = random_snf(&mut r, n, 0.5);
        let a = unit_point(&mut r, n);
        let b = unit_point(&mut r, n);
        let half = rat(1, 2);
        let diff: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| x - y).collect();
        let lhs: Vec<Rational> = p.eval(&a).iter().zip(p.eval(&b)).map(|(x, y)| x - y).collect();
        let mid: Vec<Rational> = a.iter().zip(&b).map(|(x, y)| (x + y) * &half).collect();
        prop_assert_eq!(&lhs, &p.jacobian(&mid).mul_vec(&diff));
        let avg = p.jacobian(&a).add(&p.jacobian(&b)).scale(&half);
        prop_assert_eq!(&lhs, &avg.mul_vec(&diff));
    }

    #[test]
    fn system_and_jacobian_are_monotone(seed in any::<u64>(), n in 1usize..6) {
        let mut r = rng(seed);
        let p = random_snf(&mut r, n, 0.5);
        let x = unit_point(&mut r, n);
        let y: Vec<Rational> = x.iter().map(|v| v + rat(r.random_range(0..5), 7)).collect();
        for (a, b) in p.eval(&x).iter().zip(p.eval(&y)) {
            prop_assert!(*a <= b);
        }
        let (bx, by) = (p.jacobian(&x), p.jacobian(&y));
        for i in 0..n {
            for (a, b) in bx.row(i).iter().zip(by.row(i)) {
                prop_assert!(a <= b);
            }
        }
    }

    #[test]
    fn value_iteration_is_monotone(seed in any::<u64>(), n in 1usize..5, k in 0u64..6) {
        let p = random_snf(&mut rng(seed), n, 0.4);
        let a = value_iterate(&p, k);
        let b = value_iterate(&p, k + 1);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!(*x <= *y && *x >= Rational::zero());
        }
    }

    #[test]
    fn snf_is_linear_in_size(seed in any::<u64>(), n in 1usize..5) {
        let p = random_pps(&mut rng(seed), n);
        let (q, _) = to_snf(&p);
        prop_assert!(size_measure(&q).value <= 8 * size_measure(&p).value);
    }
}

/// Both value iterations settle to within 1e-9 of each other on systems
/// where they settle at all.
#[test]
fn snf_preserves_the_least_fixed_point() {
    let mut r = rng(77);
    let mut compared = 0;
    for _ in 0..60 {
        let n = r.random_range(1..=3);
        let p = random_pps(&mut r, n);
        let (q, proj) = to_snf(&p);
        let settle = |k: u64| {
            let (lo_p, hi_p) = value_iterate_pps_bounds(&p, k, 64);
            let (lo_q, hi_q) = value_iterate_bounds(&q, k, 64);
            (lo_p, hi_p, lo_q, hi_q)
        };
        let k = 3000;
        let (lo_p, _, lo_q, _) = settle(k);
        let (next_p, _, next_q, _) = settle(k + 200);
        let stable = |a: &[Rational], b: &[Rational]| a.iter().zip(b).all(|(x, y)| to_f64(&(y - x)) < 1e-10);
        if !stable(&lo_p, &next_p) || !stable(&lo_q, &next_q) {
            continue;
        }
        compared += 1;
        for i in 0..n {
            let d = (to_f64(&next_p[i]) - to_f64(&next_q[proj[i]])).abs();
            assert!(d <= 2e-9, "variable {i} differs by {d}");
        }
    }
    assert!(compared >= 20, "only {compared} systems settled");
}
