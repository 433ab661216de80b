//! Newton iteration on simple-normal-form PPSs whose least fixed point lies
//! strictly between 0 and 1.
//!
//! Two regimes are provided. The rounded-down iteration keeps every iterate
//! a multiple of `2^-h`, so each step costs a polynomial-size exact linear
//! solve, and after `h = j + 2 + 4|P|` steps the iterate is within `2^-j`
//! of `q*` from below. The exact iteration converges quadratically but its
//! rationals can double in length every step, so it runs under a bit budget.

mod decide;
mod driver;

pub use decide::{
    decide_threshold, separation_bound, separation_exponent, threshold_parameters, DecideMode,
    ThresholdParameters, ThresholdVerdict, Verdict,
};
pub use driver::{solve_pps, CoordinateValue, PpsSolution, SolveMode};

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{One, Zero};

use crate::error::{BudgetReport, Error, Result};
use crate::numerics::{
    decimal_digits_for_bits, max_component_bits, pow2, solve_integer_system, solve_linear_exact, to_decimal,
    Dyadic, Rational, RationalMatrix, RationalVector,
};
use crate::pps::{size_measure, SnfEquation, SnfSystem};

/// Default cap on the bit length of any numerator or denominator produced
/// by exact Newton iteration.
pub const DEFAULT_BUDGET_BITS: u64 = 1 << 20;

/// `N(z) = z + (I - B(z))^{-1} (P(z) - z)`, exactly.
pub fn newton_step_exact(p: &SnfSystem, z: &[Rational]) -> Result<RationalVector> {
    let n = p.len();
    let b = p.jacobian(z);
    let a = RationalMatrix::identity(n).sub(&b);
    let pz = p.eval(z);
    let rhs: Vec<Rational> = pz.iter().zip(z).map(|(a, b)| a - b).collect();
    let delta = solve_linear_exact(&a, &rhs)?;
    Ok(z.iter().zip(delta).map(|(a, d)| a + d).collect())
}

/// One Newton step from a dyadic point, rounded down to a nonnegative
/// multiple of `2^-h` in every coordinate.
pub fn rounded_newton_step(p: &SnfSystem, x: &[Dyadic], h: u64) -> Result<Vec<Dyadic>> {
    if x.iter().any(|v| v.scale() != h) {
        let z: Vec<Rational> = x.iter().map(Dyadic::to_rational).collect();
        return Ok(newton_step_exact(p, &z)?
            .iter()
            .map(|v| Dyadic::round_down(v, h))
            .collect());
    }
    // With z = X / 2^h, row i of (I - B(z)) d = P(z) - z is multiplied by
    // 2^2h (quadratic rows) or L 2^h (linear rows, L the lcm of the row's
    // denominators) so that the whole system is integral.
    let n = p.len();
    let xs: Vec<BigInt> = x.iter().map(|v| BigInt::from(v.mantissa().clone())).collect();
    let unit = BigInt::one() << h;
    let mut rows: Vec<Vec<BigInt>> = Vec::with_capacity(n);
    for (i, eq) in p.equations().iter().enumerate() {
        let mut row = vec![BigInt::zero(); n + 1];
        match eq {
            SnfEquation::Quadratic(j, k) => {
                row[i] += &unit * &unit;
                row[*j] -= &unit * &xs[*k];
                row[*k] -= &unit * &xs[*j];
                row[n] = &xs[*j] * &xs[*k] - &xs[i] * &unit;
            }
            SnfEquation::Linear { coeffs, constant } => {
                let l = coeffs
                    .iter()
                    .map(|(_, c)| c.denom())
                    .fold(constant.denom().clone(), |acc, d| acc.lcm(d));
                row[i] += &l * &unit;
                let mut rhs = constant.numer() * (&l / constant.denom()) * &unit - &l * &xs[i];
                for (v, c) in coeffs {
                    let a = c.numer() * (&l / c.denom());
                    row[*v] -= &a * &unit;
                    rhs += &a * &xs[*v];
                }
                row[n] = rhs;
            }
        }
        rows.push(row);
    }
    let (y, d) = solve_integer_system(rows)?;
    // x_i + y_i / d, scaled by 2^h and floored
    Ok(xs
        .iter()
        .zip(y)
        .map(|(xi, yi)| {
            let num = xi * &d + (yi << h);
            let v = num.div_floor(&d);
            Dyadic::new(v.to_biguint().unwrap_or_default(), h)
        })
        .collect())
}

/// Iterator over the rounded-down Newton iterates `x^[1], x^[2], ...`
/// starting from `x^[0] = 0`.
pub struct RoundedNewton<'a> {
    p: &'a SnfSystem,
    h: u64,
    x: Vec<Dyadic>,
}

impl<'a> RoundedNewton<'a> {
    pub fn new(p: &'a SnfSystem, h: u64) -> Self {
        RoundedNewton {
            p,
            h,
            x: vec![Dyadic::zero(h); p.len()],
        }
    }
}

impl Iterator for RoundedNewton<'_> {
    type Item = Result<Vec<Dyadic>>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(rounded_newton_step(self.p, &self.x, self.h).inspect(|x| self.x = x.clone()))
    }
}

/// Iterator over exact Newton iterates `x^(1), x^(2), ...` from `x^(0) = 0`.
pub struct ExactNewton<'a> {
    p: &'a SnfSystem,
    x: RationalVector,
}

impl<'a> ExactNewton<'a> {
    pub fn new(p: &'a SnfSystem) -> Self {
        ExactNewton {
            p,
            x: vec![Rational::zero(); p.len()],
        }
    }
}

impl Iterator for ExactNewton<'_> {
    type Item = Result<RationalVector>;

    fn next(&mut self) -> Option<Self::Item> {
        Some(newton_step_exact(self.p, &self.x).inspect(|x| self.x = x.clone()))
    }
}

/// Values `v` with `v <= q*` and `q* - v <= 2^-bits` componentwise.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CertifiedVector {
    pub values: Vec<Dyadic>,
    /// `j` in the error bound `2^-j`.
    pub bits: u64,
    /// Number of Newton steps performed.
    pub iterations: u64,
}

impl CertifiedVector {
    pub fn error_bound(&self) -> Rational {
        pow2(-(self.bits as i64))
    }

    pub fn to_rationals(&self) -> RationalVector {
        self.values.iter().map(Dyadic::to_rational).collect()
    }
}

/// Text rendering of one certified coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RenderedValue {
    /// `mantissa/2^h`.
    pub dyadic: String,
    /// Decimal truncation with `ceil(j log10 2) + 1` digits.
    pub decimal: String,
    /// `2^-j`.
    pub bound: String,
}

pub fn render_certified(value: &Dyadic, bits: u64) -> RenderedValue {
    RenderedValue {
        dyadic: value.to_string(),
        decimal: to_decimal(&value.to_rational(), decimal_digits_for_bits(bits)),
        bound: format!("2^-{bits}"),
    }
}

/// Certified approximation of the least fixed point of an Interior-only
/// SNF PPS by `j + 2 + 4|P|` rounded-down Newton steps at scale
/// `h = j + 2 + 4|P|`.
pub fn solve_lfp(p: &SnfSystem, j: u64) -> Result<CertifiedVector> {
    if !p.is_probabilistic() {
        return Err(Error::InvalidArgument(
            "Newton solver requires a probabilistic system".into(),
        ));
    }
    let size = size_measure(p).value;
    let h = j + 2 + 4 * size;
    let mut x = vec![Dyadic::zero(h); p.len()];
    for _ in 0..h {
        x = rounded_newton_step(p, &x, h)?;
    }
    Ok(CertifiedVector {
        values: x,
        bits: j,
        iterations: h,
    })
}

/// Exact Newton for `32|P| + 2 + 2i` steps, guaranteeing an error of at
/// most `2^(-2^i)`.
///
/// Stops early at an exact fixed point. Fails with
/// [`Error::BudgetExceeded`] as soon as an iterate needs more than
/// `budget_bits` bits in some numerator or denominator; the report then
/// carries the last iterate within budget.
pub fn solve_lfp_quadratic(p: &SnfSystem, i: u64, budget_bits: u64) -> Result<RationalVector> {
    if i == 0 {
        return Err(Error::InvalidArgument("doubling index must be at least 1".into()));
    }
    let steps = 32 * size_measure(p).value + 2 + 2 * i;
    exact_newton_budgeted(p, steps, budget_bits).map(|(x, _)| x)
}

/// Runs up to `steps` exact Newton steps, stopping at an exact fixed point.
/// Returns the iterate and the number of steps actually taken.
pub fn exact_newton_budgeted(p: &SnfSystem, steps: u64, budget_bits: u64) -> Result<(RationalVector, u64)> {
    let mut x = vec![Rational::zero(); p.len()];
    for k in 0..steps {
        if crate::numerics::same_rationals(&p.eval(&x), &x) {
            return Ok((x, k));
        }
        let next = newton_step_exact(p, &x)?;
        if next.iter().any(|v| max_component_bits(v) > budget_bits) {
            return Err(Error::BudgetExceeded(Box::new(BudgetReport {
                steps_done: k,
                partial: x,
                achieved_bound: None,
                limit_bits: budget_bits,
            })));
        }
        x = next;
    }
    Ok((x, steps))
}

/// `2^(-2^i)` is not materialised; this returns `i` such that a bound of
/// `2^(-2^i)` implies `2^-j`, i.e. `ceil(log2 j)`.
pub fn doubling_index_for_bits(j: u64) -> u64 {
    crate::numerics::ceil_log2_u(&BigUint::from(j.max(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, rat};
    use crate::pps::{parse_pps, to_snf};

    fn snf(text: &str) -> SnfSystem {
        to_snf(&parse_pps(text).unwrap()).0
    }

    #[test]
    fn first_step_of_t1() {
        let s = snf("x = 1/2 x^2 + 1/4");
        let z = vec![int(0); 2];
        assert_eq!(newton_step_exact(&s, &z).unwrap()[0], rat(1, 4));
        let r = rounded_newton_step(&s, &[Dyadic::zero(10), Dyadic::zero(10)], 10).unwrap();
        assert_eq!(r[0].mantissa(), &BigUint::from(256u32));
    }

    #[test]
    fn integer_step_matches_rational_step() {
        let s = snf("x = 1/3 x y + 1/5 y + 1/7\ny = 2/9 x^2 + 1/4 x + 1/3");
        let h = 40;
        let mut x = vec![Dyadic::zero(h); s.len()];
        for _ in 0..12 {
            let z: Vec<Rational> = x.iter().map(Dyadic::to_rational).collect();
            let expected: Vec<Dyadic> = newton_step_exact(&s, &z)
                .unwrap()
                .iter()
                .map(|v| Dyadic::round_down(v, h))
                .collect();
            x = rounded_newton_step(&s, &x, h).unwrap();
            assert_eq!(x, expected);
        }
    }

    #[test]
    fn fixed_point_is_fixed() {
        let s = snf("x = 1/2 x + 1/4");
        assert_eq!(newton_step_exact(&s, &[rat(1, 2)]).unwrap(), vec![rat(1, 2)]);
        assert_eq!(newton_step_exact(&s, &[int(0)]).unwrap(), vec![rat(1, 2)]);
    }

    #[test]
    fn exact_iterates_increase_below_closed_form() {
        // q* = 1 - 1/sqrt(2); v < q* iff (1 - v)^2 > 1/2 for v < 1
        let s = snf("x = 1/2 x^2 + 1/4");
        let xs: Vec<RationalVector> = ExactNewton::new(&s).take(3).map(Result::unwrap).collect();
        let below = |v: &Rational| (int(1) - v) * (int(1) - v) > rat(1, 2);
        assert!(xs[0][0] < xs[1][0] && xs[1][0] < xs[2][0]);
        assert!(xs.iter().all(|x| below(&x[0])));
    }

    #[test]
    fn quadratic_rejects_zero_index() {
        let s = snf("x = 1/2 x + 1/4");
        assert!(matches!(
            solve_lfp_quadratic(&s, 0, 1000),
            Err(Error::InvalidArgument(_))
        ));
        assert_eq!(solve_lfp_quadratic(&s, 1, 1000).unwrap(), vec![rat(1, 2)]);
    }

    #[test]
    fn budget_is_reported() {
        let s = snf("x = 1/2 x^2 + 1/4");
        match solve_lfp_quadratic(&s, 1, 64) {
            Err(Error::BudgetExceeded(r)) => {
                assert_eq!(r.limit_bits, 64);
                assert!(r.partial.iter().all(|v| max_component_bits(v) <= 64));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn linear_system_solves_exactly() {
        let s = snf("x = 1/2 x + 1/4");
        let v = solve_lfp(&s, 20).unwrap();
        assert_eq!(v.to_rationals(), vec![rat(1, 2)]);
        assert_eq!(v.iterations, 20 + 2 + 4 * 9);
    }

    #[test]
    fn rendering() {
        let d = Dyadic::round_down(&rat(1, 3), 10);
        let r = render_certified(&d, 10);
        assert_eq!(r.dyadic, "341/2^10");
        assert_eq!(r.decimal, "0.33300");
        assert_eq!(r.bound, "2^-10");
    }
}
