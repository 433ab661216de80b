//! Exact arithmetic substrate: rationals, dyadic fixed-point values, dense
//! rational linear algebra and LP feasibility.

mod dyadic;
mod lp;
mod matrix;

pub use dyadic::{round_down_dyadic, Dyadic};
pub use lp::{collatz_wielandt_feasible, lp_feasible, LinearConstraint, Relation};
pub use matrix::{solve_integer_system, solve_linear_exact, RationalMatrix, RationalVector};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Arbitrary-precision rational in lowest terms.
pub type Rational = num_rational::BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^e` as a rational, for any sign of `e`.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Orders two rationals by cross-multiplying. The `Ord` impl of
/// `num_rational` recurses once per continued-fraction term, which exhausts
/// the stack on operands with millions of bits.
pub fn rational_cmp(a: &Rational, b: &Rational) -> std::cmp::Ordering {
    (a.numer() * b.denom()).cmp(&(b.numer() * a.denom()))
}

/// Componentwise equality of reduced rationals without `Ord`.
pub fn same_rationals(a: &[Rational], b: &[Rational]) -> bool {
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| x.numer() == y.numer() && x.denom() == y.denom())
}

/// Bits of an integer under the size convention: `ceil(log2(a + 1))`.
pub fn integer_bits(a: &BigInt) -> u64 {
    a.magnitude().bits()
}

/// Bits of a rational `a/b` in lowest terms: `ceil(log2(|a|+1)) + ceil(log2(b+1))`.
pub fn rational_bits(r: &Rational) -> u64 {
    integer_bits(r.numer()) + integer_bits(r.denom())
}

/// Bits of a positive exponent: `ceil(log2(e + 1))`.
pub fn exponent_bits(e: u64) -> u64 {
    u64::from(64 - e.leading_zeros())
}

/// Largest bit length of numerator or denominator.
pub fn max_component_bits(r: &Rational) -> u64 {
    r.numer().magnitude().bits().max(r.denom().bits())
}

/// `ceil(log2(x))` for a positive integer; 0 for `x <= 1`.
pub fn ceil_log2_u(x: &BigUint) -> u64 {
    if x <= &BigUint::one() {
        return 0;
    }
    let b = x.bits();
    // x is a power of two iff x - 1 has fewer bits
    if (x - 1u32).bits() < b {
        b - 1
    } else {
        b
    }
}

/// `ceil(log2(x))` for a positive rational.
pub fn ceil_log2(x: &Rational) -> i64 {
    assert!(x.is_positive(), "log of non-positive value");
    // find smallest e with x <= 2^e
    let n = x.numer().magnitude();
    let d = x.denom().magnitude();
    let mut e = n.bits() as i64 - d.bits() as i64;
    // 2^(e-1) < x <= 2^(e+1) after this estimate; adjust exactly
    while x > &pow2(e) {
        e += 1;
    }
    while x <= &pow2(e - 1) {
        e -= 1;
    }
    e
}

/// `floor(log2(x))` for a positive rational.
pub fn floor_log2(x: &Rational) -> i64 {
    let c = ceil_log2(x);
    if &pow2(c) == x {
        c
    } else {
        c - 1
    }
}

/// `ceil(log2(log2(b)))` for an integer `b >= 2`: the least `t >= 0` with
/// `b <= 2^(2^t)`.
pub fn ceil_log2_log2(b: &BigUint) -> u64 {
    let mut t = 0u64;
    while ceil_log2_u(b) > (1u64 << t) {
        t += 1;
    }
    t
}

/// Parses `a/b`, a plain decimal, or an integer into an exact rational.
/// Scientific notation is rejected.
pub fn parse_rational(text: &str) -> Option<Rational> {
    let t = text.trim();
    if t.is_empty() || t.contains(['e', 'E']) {
        return None;
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t),
    };
    let value = if let Some((a, b)) = body.split_once('/') {
        let a: BigInt = parse_digits(a)?;
        let b: BigInt = parse_digits(b)?;
        if b.is_zero() {
            return None;
        }
        Rational::new(a, b)
    } else if let Some((whole, frac)) = body.split_once('.') {
        if whole.is_empty() && frac.is_empty() {
            return None;
        }
        let w: BigInt = if whole.is_empty() {
            BigInt::zero()
        } else {
            parse_digits(whole)?
        };
        let f: BigInt = if frac.is_empty() {
            BigInt::zero()
        } else {
            parse_digits(frac)?
        };
        let scale = num_traits::pow(BigInt::from(10u32), frac.len());
        Rational::new(w * &scale + f, scale)
    } else {
        Rational::from_integer(parse_digits(body)?)
    };
    Some(if neg { -value } else { value })
}

fn parse_digits(s: &str) -> Option<BigInt> {
    let s = s.trim();
    if s.is_empty() || !s.bytes().all(|c| c.is_ascii_digit()) {
        return None;
    }
    s.parse().ok()
}

/// Decimal rendering truncated toward zero with `digits` fractional digits.
pub fn to_decimal(r: &Rational, digits: usize) -> String {
    let neg = r.is_negative();
    let a = r.abs();
    let scale = num_traits::pow(BigInt::from(10u32), digits);
    let scaled = (a.numer() * &scale).div_floor(a.denom());
    let (whole, frac) = scaled.div_rem(&scale);
    let mut s = String::new();
    if neg && !scaled.is_zero() {
        s.push('-');
    }
    s.push_str(&whole.to_string());
    if digits > 0 {
        let f = frac.to_string();
        s.push('.');
        for _ in f.len()..digits {
            s.push('0');
        }
        s.push_str(&f);
    }
    s
}

/// Number of decimal digits that faithfully renders a `2^-j` bound:
/// `ceil(j * log10(2)) + 1`.
pub fn decimal_digits_for_bits(j: u64) -> usize {
    // log10(2) < 30103/100000
    (j * 30103).div_ceil(100_000) as usize + 1
}

/// Lossy conversion for display and Monte Carlo sampling only.
pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // huge numerator/denominator: shift both down
        let shift = max_component_bits(r).saturating_sub(1000);
        let n = r.numer() >> shift;
        let d = r.denom() >> shift;
        n.to_f64().unwrap_or(0.0) / d.to_f64().unwrap_or(f64::INFINITY)
    })
}

/// Smallest `j` with `2^-j <= eps` for a positive rational `eps`.
pub fn bits_for(eps: &Rational) -> u64 {
    let e = -floor_log2(eps);
    e.max(0) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bit_conventions() {
        assert_eq!(rational_bits(&rat(1, 2)), 3);
        assert_eq!(rational_bits(&rat(1, 4)), 4);
        assert_eq!(rational_bits(&int(1)), 2);
        assert_eq!(exponent_bits(2), 2);
        assert_eq!(exponent_bits(1), 1);
        assert_eq!(exponent_bits(4), 3);
    }

    #[test]
    fn logs() {
        assert_eq!(ceil_log2(&rat(1, 4)), -2);
        assert_eq!(ceil_log2(&rat(1, 3)), -1);
        assert_eq!(ceil_log2(&int(1000)), 10);
        assert_eq!(floor_log2(&int(1000)), 9);
        assert_eq!(floor_log2(&rat(1, 4)), -2);
        assert_eq!(ceil_log2_u(&BigUint::from(1u32)), 0);
        assert_eq!(ceil_log2_u(&BigUint::from(4u32)), 2);
        assert_eq!(ceil_log2_u(&BigUint::from(5u32)), 3);
        assert_eq!(ceil_log2_log2(&BigUint::from(2u32)), 0);
        assert_eq!(ceil_log2_log2(&BigUint::from(3u32)), 1);
        assert_eq!(ceil_log2_log2(&BigUint::from(16u32)), 2);
        assert_eq!(ceil_log2_log2(&BigUint::from(17u32)), 3);
        assert_eq!(bits_for(&rat(1, 1024)), 10);
        assert_eq!(bits_for(&rat(1, 1000)), 10);
    }

    #[test]
    fn parsing() {
        assert_eq!(parse_rational("1/2"), Some(rat(1, 2)));
        assert_eq!(parse_rational("0.25"), Some(rat(1, 4)));
        assert_eq!(parse_rational(".5"), Some(rat(1, 2)));
        assert_eq!(parse_rational("3"), Some(int(3)));
        assert_eq!(parse_rational("-1/3"), Some(rat(-1, 3)));
        assert_eq!(parse_rational("1e-3"), None);
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn decimals() {
        assert_eq!(to_decimal(&rat(1, 3), 5), "0.33333");
        assert_eq!(to_decimal(&rat(2, 3), 3), "0.666");
        assert_eq!(to_decimal(&rat(1, 40), 3), "0.025");
        assert_eq!(to_decimal(&int(1), 2), "1.00");
        assert_eq!(decimal_digits_for_bits(60), 20);
        assert_eq!(decimal_digits_for_bits(10), 5);
    }
}
