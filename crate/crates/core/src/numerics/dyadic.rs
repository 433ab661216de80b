use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::Rational;

/// A non-negative multiple of `2^-h`: `mantissa / 2^scale`.
///
/// The scale is carried explicitly. Arithmetic between values of different
/// scales is done by promoting to [`Rational`], never by re-rounding.
#[derive(Clone, Debug)]
pub struct Dyadic {
    mantissa: BigUint,
    scale: u64,
}

impl Dyadic {
    pub fn new(mantissa: BigUint, scale: u64) -> Self {
        Dyadic { mantissa, scale }
    }

    pub fn zero(scale: u64) -> Self {
        Dyadic::new(BigUint::zero(), scale)
    }

    /// Largest non-negative multiple of `2^-h` that is `<= max(v, 0)`.
    pub fn round_down(v: &Rational, h: u64) -> Self {
        if !v.is_positive() {
            return Dyadic::zero(h);
        }
        let scaled: BigInt = (v.numer() << h).div_floor(v.denom());
        let mantissa = match scaled.into_parts() {
            (Sign::Minus, _) => BigUint::zero(),
            (_, m) => m,
        };
        Dyadic::new(mantissa, h)
    }

    /// Smallest multiple of `2^-h` that is `>= max(v, 0)`.
    pub fn round_up(v: &Rational, h: u64) -> Self {
        if !v.is_positive() {
            return Dyadic::zero(h);
        }
        let scaled: BigInt = (v.numer() << h).div_ceil(v.denom());
        Dyadic::new(scaled.into_parts().1, h)
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn scale(&self) -> u64 {
        self.scale
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn to_rational(&self) -> Rational {
        Rational::new(BigInt::from(self.mantissa.clone()), BigInt::one() << self.scale)
    }
}

impl PartialEq for Dyadic {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Dyadic {}

impl PartialOrd for Dyadic {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Dyadic {
    fn cmp(&self, other: &Self) -> Ordering {
        let s = self.scale.max(other.scale);
        let a = &self.mantissa << (s - self.scale);
        let b = &other.mantissa << (s - other.scale);
        a.cmp(&b)
    }
}

impl fmt::Display for Dyadic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/2^{}", self.mantissa, self.scale)
    }
}

/// Rounds a rational down to scale `h` (see [`Dyadic::round_down`]).
pub fn round_down_dyadic(v: &Rational, h: u64) -> Dyadic {
    Dyadic::round_down(v, h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{pow2, rat};
    use proptest::prelude::*;

    #[test]
    fn round_down_examples() {
        assert_eq!(Dyadic::round_down(&rat(5, 8), 2).to_rational(), rat(2, 4));
        assert!(Dyadic::round_down(&rat(-1, 3), 10).is_zero());
        assert_eq!(Dyadic::round_down(&rat(1, 3), 4).to_rational(), rat(5, 16));
        assert_eq!(Dyadic::round_up(&rat(1, 3), 4).to_rational(), rat(6, 16));
        assert_eq!(Dyadic::round_up(&rat(1, 4), 4).to_rational(), rat(1, 4));
    }

    #[test]
    fn ordering_across_scales() {
        let a = Dyadic::new(BigUint::from(1u32), 1);
        let b = Dyadic::new(BigUint::from(2u32), 2);
        assert_eq!(a.cmp(&b), Ordering::Equal);
        let c = Dyadic::new(BigUint::from(3u32), 3);
        assert!(c < a);
        assert_eq!(a.to_string(), "1/2^1");
    }

    proptest! {
        #[test]
        fn round_down_is_tight(n in -1000i64..1000, d in 1i64..1000, h in 0u64..40) {
            let v = rat(n, d);
            let r = Dyadic::round_down(&v, h).to_rational();
            let clamped = if v.is_positive() { v.clone() } else { Rational::zero() };
            prop_assert!(r <= clamped);
            prop_assert!(&clamped - &r < pow2(-(h as i64)));
        }
    }
}
