use num_traits::{One, Zero};

use super::{termination_pps, Scfg};
use crate::error::Result;
use crate::newton::{exact_newton_budgeted, solve_lfp};
use crate::numerics::{bits_for, pow2, Rational};
use crate::pps::{to_snf, SnfSystem};
use crate::qualitative::{classify, eliminate_trivial, Tag};

/// Exact Newton steps tried before falling back to the certified rounded
/// solver; enough to hit the fixed point of any system whose interior part
/// is linear.
const EXACT_ATTEMPT_STEPS: u64 = 16;
const EXACT_ATTEMPT_BITS: u64 = 4096;

/// `E(A)` for one nonterminal: its exact classification and an enclosure
/// `lo <= E(A) <= hi`. `NE(A) = 1 - E(A)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsEntry {
    pub tag: Tag,
    pub lo: Rational,
    pub hi: Rational,
}

impl EpsEntry {
    fn exact(tag: Tag, v: Rational) -> Self {
        EpsEntry {
            tag,
            lo: v.clone(),
            hi: v,
        }
    }

    pub fn is_exact(&self) -> bool {
        self.lo == self.hi
    }

    /// Midpoint of the enclosure, within `radius()` of `E(A)`.
    pub fn mid(&self) -> Rational {
        (&self.lo + &self.hi) / Rational::from_integer(2.into())
    }

    pub fn radius(&self) -> Rational {
        (&self.hi - &self.lo) / Rational::from_integer(2.into())
    }

    pub fn ne_lo(&self) -> Rational {
        Rational::one() - &self.hi
    }

    pub fn ne_hi(&self) -> Rational {
        Rational::one() - &self.lo
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EpsProfile {
    pub entries: Vec<EpsEntry>,
    /// Requested enclosure width.
    pub accuracy: Rational,
    /// `j` of the certified solve (`2^-j <= accuracy`), zero if none ran.
    pub bits: u64,
    pub newton_steps: u64,
}

/// Exact classification of every `E(A)` as 0, 1 or interior.
pub fn epsilon_flags(g: &Scfg) -> Result<Vec<Tag>> {
    let sys = termination_pps(g);
    let (snf, _) = to_snf(&sys.epsilon);
    let class = classify(&snf)?;
    Ok(class.tags[..g.nonterminals().len()].to_vec())
}

/// Enclosures of width at most `accuracy` for every `E(A)`. Values that are
/// 0 or 1, or that exact Newton reaches in a few steps, are exact.
pub fn epsilon_profile(g: &Scfg, accuracy: &Rational) -> Result<EpsProfile> {
    let n = g.nonterminals().len();
    let sys = termination_pps(g);
    let (snf, _) = to_snf(&sys.epsilon);
    let class = classify(&snf)?;
    let reduced = eliminate_trivial(&snf, &class);
    let residual = &reduced.residual;

    let mut entries: Vec<EpsEntry> = class
        .tags
        .iter()
        .map(|&t| match t {
            Tag::Zero | Tag::Interior => EpsEntry::exact(t, Rational::zero()),
            Tag::One => EpsEntry::exact(t, Rational::one()),
        })
        .collect();
    let mut bits = 0;
    let mut newton_steps = 0;
    if !residual.is_empty() {
        if let Some((x, steps)) = exact_attempt(residual) {
            newton_steps = steps;
            for (r, &o) in reduced.original_index.iter().enumerate() {
                entries[o] = EpsEntry::exact(Tag::Interior, x[r].clone());
            }
        } else {
            let j = bits_for(accuracy);
            let v = solve_lfp(residual, j)?;
            bits = j;
            newton_steps = v.iterations;
            let width = pow2(-(j as i64));
            for (r, &o) in reduced.original_index.iter().enumerate() {
                let lo = v.values[r].to_rational();
                let hi = (&lo + &width).min(Rational::one());
                entries[o] = EpsEntry {
                    tag: Tag::Interior,
                    lo,
                    hi,
                };
            }
        }
    }
    entries.truncate(n);
    Ok(EpsProfile {
        entries,
        accuracy: accuracy.clone(),
        bits,
        newton_steps,
    })
}

fn exact_attempt(p: &SnfSystem) -> Option<(Vec<Rational>, u64)> {
    let (x, steps) = exact_newton_budgeted(p, EXACT_ATTEMPT_STEPS, EXACT_ATTEMPT_BITS).ok()?;
    (p.eval(&x) == x).then_some((x, steps))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::scfg::parse_scfg;

    const T4: &str = "S -> 1 'a' A\nA -> 1/2 A A\nA -> 1/4 eps\nA -> 1/4 N N\nN -> 1 N N";

    #[test]
    fn flags() {
        let g = parse_scfg("A -> 1 eps").unwrap();
        assert_eq!(epsilon_flags(&g).unwrap(), vec![Tag::One]);
        let g = parse_scfg("A -> 1 'a'").unwrap();
        assert_eq!(epsilon_flags(&g).unwrap(), vec![Tag::Zero]);
        let g = parse_scfg(T4).unwrap();
        assert_eq!(
            epsilon_flags(&g).unwrap(),
            vec![Tag::Zero, Tag::Interior, Tag::Zero]
        );
    }

    #[test]
    fn t4_enclosure_straddles_closed_form() {
        let g = parse_scfg(T4).unwrap();
        let acc = pow2(-40);
        let p = epsilon_profile(&g, &acc).unwrap();
        let a = &p.entries[1];
        assert!(&a.hi - &a.lo <= acc);
        // E(A) = 1 - 1/sqrt(2): v <= E(A) iff (1 - v)^2 >= 1/2
        let below = |v: &Rational| (Rational::one() - v) * (Rational::one() - v) >= rat(1, 2);
        assert!(below(&a.lo) && !below(&a.hi));
        assert!(p.entries[0].is_exact() && p.entries[0].lo.is_zero());
        assert!(p.entries[2].is_exact() && p.entries[2].lo.is_zero());
        assert_eq!(a.ne_lo() + &a.hi, Rational::one());
    }

    #[test]
    fn linear_interior_is_exact() {
        let g = parse_scfg("A -> 1/2 eps\nA -> 1/4 A\nA -> 1/4 'a'").unwrap();
        let p = epsilon_profile(&g, &pow2(-10)).unwrap();
        assert!(p.entries[0].is_exact());
        assert_eq!(p.entries[0].lo, rat(2, 3));
        assert_eq!(p.bits, 0);
    }
}
