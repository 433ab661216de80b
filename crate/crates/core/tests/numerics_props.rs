use lfpsolve::numerics::{pow2, rat, round_down_dyadic, solve_linear_exact, Rational, RationalMatrix};
use num_traits::Zero;
use proptest::prelude::*;

fn rational() -> impl Strategy<Value = Rational> {
    (-10_000i64..10_000, 1i64..10_000).prop_map(|(n, d)| rat(n, d))
}

proptest! {
    #[test]
    fn field_laws_hold_exactly(a in rational(), b in rational(), c in rational()) {
        prop_assert_eq!((&a + &b) + &c, &a + (&b + &c));
        prop_assert_eq!((&a * &b) * &c, &a * (&b * &c));
        prop_assert_eq!(&a + &b, &b + &a);
        prop_assert_eq!(&a * &b, &b * &a);
        prop_assert_eq!(&a * (&b + &c), &a * &b + &a * &c);
    }

    #[test]
    fn round_down_is_below_and_tight(a in rational(), h in 0u64..80) {
        let clamped = a.clone().max(Rational::zero());
        let v = round_down_dyadic(&a, h).to_rational();
        prop_assert!(v <= clamped);
        prop_assert!(&clamped - &v < pow2(-(h as i64)));
    }

    #[test]
    fn linear_solutions_satisfy_the_system(
        n in 1usize..6,
        entries in prop::collection::vec(rational(), 36),
        rhs in prop::collection::vec(rational(), 6),
    ) {
        let rows: Vec<Vec<Rational>> = (0..n).map(|i| entries[i * 6..i * 6 + n].to_vec()).collect();
        let a = RationalMatrix::from_rows(rows);
        let b = &rhs[..n];
        if let Ok(x) = solve_linear_exact(&a, b) {
            prop_assert_eq!(a.mul_vec(&x), b.to_vec());
        }
    }
}
