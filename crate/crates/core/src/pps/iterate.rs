use num_traits::Zero;

use super::{Pps, SnfSystem};
use crate::numerics::{Dyadic, Rational, RationalVector};

/// `x^k` of the iteration `x^{t+1} = P(x^t)` from `x^0 = 0`, exactly.
///
/// Bit lengths roughly double per step on nonlinear systems; for large `k`
/// use [`value_iterate_bounds`].
pub fn value_iterate(p: &SnfSystem, k: u64) -> RationalVector {
    let mut x = vec![Rational::zero(); p.len()];
    for _ in 0..k {
        x = p.eval(&x);
    }
    x
}

/// Dyadic enclosure `lo <= x^k <= hi` of the exact iterate.
///
/// Both sequences apply `P` exactly and then round to a multiple of `2^-h`
/// (down for `lo`, up for `hi`); monotonicity of `P` keeps the exact iterate
/// between them.
pub fn value_iterate_bounds(p: &SnfSystem, k: u64, h: u64) -> (RationalVector, RationalVector) {
    enclose(p.len(), k, h, |x| p.eval(x))
}

/// [`value_iterate_bounds`] for a system not in normal form.
pub fn value_iterate_pps_bounds(p: &Pps, k: u64, h: u64) -> (RationalVector, RationalVector) {
    enclose(p.len(), k, h, |x| p.eval(x))
}

fn enclose(
    n: usize,
    k: u64,
    h: u64,
    f: impl Fn(&[Rational]) -> RationalVector,
) -> (RationalVector, RationalVector) {
    let mut lo = vec![Rational::zero(); n];
    let mut hi = lo.clone();
    for _ in 0..k {
        lo = f(&lo)
            .iter()
            .map(|v| Dyadic::round_down(v, h).to_rational())
            .collect();
        hi = f(&hi)
            .iter()
            .map(|v| Dyadic::round_up(v, h).to_rational())
            .collect();
    }
    (lo, hi)
}
