use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};

use super::{exact_newton_budgeted, solve_lfp};
use crate::error::{Error, Result};
use crate::numerics::{ceil_log2_log2, ceil_log2_u, floor_log2, pow2, Rational};
use crate::pps::{size_measure, SnfSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Greater,
    Less,
    Equal,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Greater => "GREATER",
            Verdict::Less => "LESS",
            Verdict::Equal => "EQUAL",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DecideMode {
    /// Certified rounded Newton to precision below a quarter of the
    /// separation bound. Refused for more than three variables unless
    /// `force` is set, since the bound's exponent grows like `5^n`.
    SeparationBound { force: bool },
    /// Exact Newton for `g` steps under a per-rational bit budget.
    Exact { budget_bits: u64 },
}

/// The step count `g` and margin exponent `m` of the exact decision
/// procedure.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdParameters {
    pub g: u64,
    pub m: u64,
    /// `ceil(log n) + ceil(log |P|) + ceil(log log b)`.
    pub log_terms: u64,
}

pub fn threshold_parameters(n: usize, size: u64, b: &BigUint) -> ThresholdParameters {
    let l = ceil_log2_u(&BigUint::from(n)) + ceil_log2_u(&BigUint::from(size)) + ceil_log2_log2(b);
    let n = n as u64;
    ThresholdParameters {
        g: 32 * size + 4 + 6 * n + 56 * l,
        m: 2 + 3 * n + 28 * l,
        log_terms: l,
    }
}

/// Exponent `E` of the separation bound `gamma = 2^-E`, with every logarithm
/// rounded up.
pub fn separation_exponent(n: usize, size: u64, b: &BigUint) -> BigUint {
    let n1 = BigUint::from(n as u64 + 1);
    let log_b = ceil_log2_u(b);
    let log_2n2 = ceil_log2_u(&BigUint::from(2 * n as u64 + 2));
    let inner = BigUint::from(size.max(log_b)) + BigUint::from(2u32) * &n1 * log_2n2;
    BigUint::from(2u32) * &n1 * inner * num_traits::pow(BigUint::from(5u32), n)
}

/// `gamma`: if `q*_k != r = a/b` then `|q*_k - r| >= gamma`.
pub fn separation_bound(p: &SnfSystem, r: &Rational) -> Result<Rational> {
    let b = r.denom().magnitude().clone();
    let e = separation_exponent(p.len(), size_measure(p).value, &b);
    let e = e
        .to_i64()
        .filter(|&e| e < (1 << 40))
        .ok_or_else(|| Error::InvalidArgument(format!("separation exponent {e} is too large")))?;
    Ok(pow2(-e))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdVerdict {
    pub verdict: Verdict,
    pub mode: DecideMode,
    /// The iterate coordinate the comparisons used.
    pub value: Rational,
    /// Newton steps performed.
    pub steps: u64,
    pub parameters: ThresholdParameters,
    /// `E` with `gamma = 2^-E` (separation-bound mode).
    pub gamma_exponent: Option<u64>,
    /// Precision `j` of the certified solve (separation-bound mode).
    pub bits: Option<u64>,
}

/// Decides `q*_k > r`, `q*_k < r` or `q*_k = r` for an Interior-only
/// system and `0 < r < 1`.
pub fn decide_threshold(p: &SnfSystem, k: usize, r: &Rational, mode: DecideMode) -> Result<ThresholdVerdict> {
    if k >= p.len() {
        return Err(Error::InvalidArgument(format!(
            "coordinate {k} out of range for {} variables",
            p.len()
        )));
    }
    if *r <= Rational::zero() || *r >= Rational::one() {
        return Err(Error::InvalidArgument(
            "threshold must lie strictly between 0 and 1".into(),
        ));
    }
    let n = p.len();
    let size = size_measure(p).value;
    let b = r.denom().magnitude().clone();
    let parameters = threshold_parameters(n, size, &b);

    match mode {
        DecideMode::Exact { budget_bits } => {
            let (x, steps) = exact_newton_budgeted(p, parameters.g, budget_bits)?;
            let value = x[k].clone();
            let verdict = if value > *r {
                Verdict::Greater
            } else if exceeds_margin(&(r - &value), parameters.m) {
                Verdict::Less
            } else {
                Verdict::Equal
            };
            Ok(ThresholdVerdict {
                verdict,
                mode,
                value,
                steps,
                parameters,
                gamma_exponent: None,
                bits: None,
            })
        }
        DecideMode::SeparationBound { force } => {
            if n > 3 && !force {
                return Err(Error::InvalidArgument(format!(
                    "separation-bound decision refused for {n} variables: the bound's exponent \
                     grows like 5^n; pass the override to run anyway"
                )));
            }
            let e = separation_exponent(n, size, &b)
                .to_u64()
                .filter(|&e| e < (1 << 40))
                .ok_or_else(|| Error::InvalidArgument("separation exponent is too large".into()))?;
            // 2^-j < gamma/4 = 2^-(e+2)
            let j = e + 3;
            let v = solve_lfp(p, j)?;
            let value = v.values[k].to_rational();
            let quarter_gamma = pow2(-(e as i64) - 2);
            let verdict = if value > *r {
                Verdict::Greater
            } else if &value + &quarter_gamma < *r {
                Verdict::Less
            } else {
                Verdict::Equal
            };
            Ok(ThresholdVerdict {
                verdict,
                mode,
                value,
                steps: v.iterations,
                parameters,
                gamma_exponent: Some(e),
                bits: Some(j),
            })
        }
    }
}

/// `d > 2 * 2^(-2^m)`, decided through `floor(log2 d)` so the tiny margin
/// is never materialised.
fn exceeds_margin(d: &Rational, m: u64) -> bool {
    if *d <= Rational::zero() {
        return false;
    }
    let f = BigInt::from(floor_log2(d));
    let e = BigInt::one() - (BigInt::one() << m);
    if f != e {
        return f > e;
    }
    *d != pow2(f.to_i64().expect("exponent fits"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, rat};
    use crate::pps::{parse_pps, to_snf};

    #[test]
    fn separation_example() {
        assert_eq!(
            separation_exponent(1, 9, &BigUint::from(2u32)),
            BigUint::from(340u32)
        );
        let s = to_snf(&parse_pps("x = 1/2 x + 1/4").unwrap()).0;
        assert_eq!(separation_bound(&s, &rat(1, 2)).unwrap(), pow2(-340));
    }

    #[test]
    fn separation_antitone_in_b() {
        let mut prev = separation_exponent(2, 20, &BigUint::from(2u32));
        for b in 3u32..2000 {
            let e = separation_exponent(2, 20, &BigUint::from(b));
            assert!(e >= prev);
            prev = e;
        }
    }

    #[test]
    fn margin_comparison() {
        // m = 1: margin 2 * 2^-2 = 1/2
        assert!(!exceeds_margin(&rat(1, 2), 1));
        assert!(exceeds_margin(&rat(3, 4), 1));
        assert!(!exceeds_margin(&rat(1, 3), 1));
        // m = 3: margin 2 * 2^-8 = 1/128
        assert!(exceeds_margin(&rat(1, 100), 3));
        assert!(!exceeds_margin(&rat(1, 1000), 3));
        assert!(!exceeds_margin(&rat(1, 128), 3));
        assert!(!exceeds_margin(&int(0), 3));
    }

    #[test]
    fn exact_mode_on_linear_system() {
        let s = to_snf(&parse_pps("x = 1/2 x + 1/4").unwrap()).0;
        let d = decide_threshold(&s, 0, &rat(1, 2), DecideMode::Exact { budget_bits: 1 << 12 }).unwrap();
        assert_eq!(d.verdict, Verdict::Equal);
        let d = decide_threshold(&s, 0, &rat(1, 3), DecideMode::Exact { budget_bits: 1 << 12 }).unwrap();
        assert_eq!(d.verdict, Verdict::Greater);
        let d = decide_threshold(&s, 0, &rat(2, 3), DecideMode::Exact { budget_bits: 1 << 12 }).unwrap();
        assert_eq!(d.verdict, Verdict::Less);
    }

    #[test]
    fn refusal_for_many_variables() {
        let text = "a = 1/2 b + 1/4\nb = 1/2 c + 1/4\nc = 1/2 d + 1/4\nd = 1/2 a + 1/4";
        let s = to_snf(&parse_pps(text).unwrap()).0;
        let err = decide_threshold(&s, 0, &rat(1, 2), DecideMode::SeparationBound { force: false });
        assert!(matches!(err, Err(Error::InvalidArgument(m)) if m.contains("5^n")));
    }

    #[test]
    fn argument_checks() {
        let s = to_snf(&parse_pps("x = 1/2 x + 1/4").unwrap()).0;
        let mode = DecideMode::SeparationBound { force: false };
        assert!(decide_threshold(&s, 1, &rat(1, 2), mode).is_err());
        assert!(decide_threshold(&s, 0, &int(1), mode).is_err());
    }
}
