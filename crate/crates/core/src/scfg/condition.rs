use num_traits::{One, Zero};

use super::{epsilon_flags, epsilon_profile, EpsProfile, Rule, Scfg, Symbol};
use crate::error::{Error, Result};
use crate::numerics::{pow2, Rational};
use crate::qualitative::Tag;

/// Which replacement of a source rule produced a conditioned rule.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SplitKind {
    /// `A -> a` or `A -> B`, kept with a rescaled probability.
    Direct,
    /// `A -> B C` where neither child derives ε.
    Both,
    /// `A -> B` from `A -> B C` where `C` derives ε.
    KeepLeft,
    /// `A -> C` from `A -> B C` where `B` derives ε.
    KeepRight,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RuleOrigin {
    /// Index of the rule of the cleaned grammar it comes from.
    pub source: usize,
    pub kind: SplitKind,
}

/// An ε-free grammar in which every nonterminal is conditioned on deriving
/// a nonempty string, with rationals approximating the exact conditioned
/// probabilities.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionedGrammar {
    pub grammar: Scfg,
    /// One entry per rule of `grammar`.
    pub origins: Vec<RuleOrigin>,
    /// ε-probabilities of the input grammar's nonterminals.
    pub profile: EpsProfile,
    /// `|G|` of the input grammar.
    pub input_size: u64,
    /// `m = 3|G|`.
    pub m: u64,
    /// `zeta = 2^-zeta_exponent` lower-bounds every `NE(A)`.
    pub zeta_exponent: u64,
    pub requested_delta: Rational,
    /// The tolerance used: `requested_delta`, shrunk to `1/(4m)` if larger.
    pub delta: Rational,
    /// Target accuracy of every unnormalised numerator,
    /// `delta (zeta/2)^2 / 4m`.
    pub delta_prime: Rational,
    /// Certified bound on `|p~(r) - p(r)|` over all rules.
    pub error_bound: Rational,
    /// All probabilities are exact (`error_bound = 0`).
    pub exact: bool,
}

impl ConditionedGrammar {
    pub fn delta_was_shrunk(&self) -> bool {
        self.delta != self.requested_delta
    }
}

/// Interval `[lo, hi]` around an approximation `mid` of a nonnegative
/// quantity.
#[derive(Clone)]
struct Approx {
    mid: Rational,
    lo: Rational,
    hi: Rational,
}

impl Approx {
    fn exact(v: Rational) -> Self {
        Approx {
            mid: v.clone(),
            lo: v.clone(),
            hi: v,
        }
    }

    fn mul(&self, o: &Approx) -> Approx {
        Approx {
            mid: &self.mid * &o.mid,
            lo: &self.lo * &o.lo,
            hi: &self.hi * &o.hi,
        }
    }
}

/// Replaces every rule of a cleaned SNF grammar by its conditioned versions
///
/// * `A -> a` with `p / NE(A)`,
/// * `A -> B` with `p NE(B) / NE(A)`,
/// * `A -> B C` with `p NE(B) NE(C) / NE(A)`, `A -> B` with
///   `p NE(B) E(C) / NE(A)` and `A -> C` with `p E(B) NE(C) / NE(A)`,
///
/// and drops ε-rules. Rules whose exact probability is 0 (because some
/// `E` is exactly 0) are omitted. Numerators are computed from
/// ε-enclosures of width below `delta (zeta/2)^2 / 4m` with
/// `zeta = 2^-4|G|` and `m = 3|G|`, then divided by their per-nonterminal
/// sum, which keeps the result proper and within `delta` of the exact
/// grammar rule by rule.
pub fn condition_eliminate_eps(g: &Scfg, delta: &Rational) -> Result<ConditionedGrammar> {
    if g.is_trivial() {
        return Err(Error::TrivialInput);
    }
    if !g.is_snf() {
        return Err(Error::InvalidArgument(
            "conditioning needs a grammar in simple normal form".into(),
        ));
    }
    if delta.is_zero() || *delta < Rational::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    if epsilon_flags(g)?.contains(&Tag::One) {
        return Err(Error::InvalidArgument(
            "grammar must be cleaned: some nonterminal derives ε with probability 1".into(),
        ));
    }
    let size = g.size();
    let m = 3 * size;
    let zeta_exponent = 4 * size;
    let cap = Rational::one() / Rational::from_integer((4 * m).into());
    let used = delta.clone().min(cap);
    // delta (zeta/2)^2 / 4m
    let delta_prime = &used * pow2(-2 * (zeta_exponent as i64 + 1)) / Rational::from_integer((4 * m).into());
    // numerators are products of at most two enclosure midpoints, each
    // within half the width of the true value
    let profile = epsilon_profile(g, &(&delta_prime / Rational::from_integer(2.into())))?;

    let e = |b: usize| {
        let en = &profile.entries[b];
        Approx {
            mid: en.mid(),
            lo: en.lo.clone(),
            hi: en.hi.clone(),
        }
    };
    let ne = |b: usize| {
        let en = &profile.entries[b];
        Approx {
            mid: Rational::one() - en.mid(),
            lo: en.ne_lo(),
            hi: en.ne_hi(),
        }
    };
    let is_zero_e = |b: usize| profile.entries[b].tag == Tag::Zero;

    let mut numerators: Vec<(usize, Vec<Symbol>, Approx, RuleOrigin)> = Vec::new();
    for (ri, r) in g.rules().iter().enumerate() {
        let p = Approx::exact(r.probability.clone());
        if r.probability.is_zero() {
            continue;
        }
        let origin = |kind| RuleOrigin { source: ri, kind };
        match r.rhs.as_slice() {
            [] => {}
            [Symbol::Terminal(_)] => numerators.push((r.lhs, r.rhs.clone(), p, origin(SplitKind::Direct))),
            [Symbol::Nonterminal(b)] => {
                numerators.push((r.lhs, r.rhs.clone(), p.mul(&ne(*b)), origin(SplitKind::Direct)))
            }
            [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] => {
                let (b, c) = (*b, *c);
                numerators.push((
                    r.lhs,
                    r.rhs.clone(),
                    p.mul(&ne(b)).mul(&ne(c)),
                    origin(SplitKind::Both),
                ));
                if !is_zero_e(c) {
                    numerators.push((
                        r.lhs,
                        vec![Symbol::Nonterminal(b)],
                        p.mul(&ne(b)).mul(&e(c)),
                        origin(SplitKind::KeepLeft),
                    ));
                }
                if !is_zero_e(b) {
                    numerators.push((
                        r.lhs,
                        vec![Symbol::Nonterminal(c)],
                        p.mul(&e(b)).mul(&ne(c)),
                        origin(SplitKind::KeepRight),
                    ));
                }
            }
            _ => unreachable!("simple normal form checked above"),
        }
    }

    let n = g.nonterminals().len();
    let mut sum_mid = vec![Rational::zero(); n];
    let mut sum_lo = vec![Rational::zero(); n];
    let mut sum_hi = vec![Rational::zero(); n];
    for (a, _, x, _) in &numerators {
        sum_mid[*a] += &x.mid;
        sum_lo[*a] += &x.lo;
        sum_hi[*a] += &x.hi;
    }
    // the exact numerators of A sum to NE(A)
    let ne_lo: Vec<Rational> = (0..n)
        .map(|a| sum_lo[a].clone().max(profile.entries[a].ne_lo()))
        .collect();
    let ne_hi: Vec<Rational> = (0..n)
        .map(|a| sum_hi[a].clone().min(profile.entries[a].ne_hi()))
        .collect();

    let mut rules = Vec::with_capacity(numerators.len());
    let mut origins = Vec::with_capacity(numerators.len());
    let mut error_bound = Rational::zero();
    for (a, rhs, x, origin) in numerators {
        let probability = &x.mid / &sum_mid[a];
        let true_lo = &x.lo / &ne_hi[a];
        let true_hi = if ne_lo[a].is_zero() {
            Rational::one()
        } else {
            (&x.hi / &ne_lo[a]).min(Rational::one())
        };
        let err = (&probability - true_lo).max(true_hi - &probability);
        error_bound = error_bound.max(err);
        rules.push(Rule {
            lhs: a,
            probability,
            rhs,
        });
        origins.push(origin);
    }
    let grammar = Scfg::new(
        g.nonterminals().to_vec(),
        g.terminals().to_vec(),
        rules,
        g.start(),
    )?;
    Ok(ConditionedGrammar {
        grammar,
        origins,
        profile,
        input_size: size,
        m,
        zeta_exponent,
        requested_delta: delta.clone(),
        delta: used,
        delta_prime,
        exact: error_bound.is_zero(),
        error_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{rat, to_f64};
    use crate::scfg::{parse_scfg, scfg_to_snf};

    #[test]
    fn epsilon_free_is_identity() {
        let g = parse_scfg("S -> 1/3 S S ; S -> 1/6 A ; S -> 1/2 'a' ; A -> 1 'b'").unwrap();
        let c = condition_eliminate_eps(&g, &rat(1, 1000)).unwrap();
        assert!(c.exact);
        assert_eq!(c.grammar, g);
        assert!(c
            .origins
            .iter()
            .all(|o| o.kind != SplitKind::KeepLeft && o.kind != SplitKind::KeepRight));
    }

    #[test]
    fn rational_epsilon_probabilities() {
        // E(B) = 1/2 and E(A) = 1/8 exactly
        let g = parse_scfg("A -> 1/2 B B ; A -> 1/2 'a' ; B -> 1/2 eps ; B -> 1/2 'b'").unwrap();
        let c = condition_eliminate_eps(&g, &rat(1, 100)).unwrap();
        assert!(c.exact);
        assert!(c.grammar.is_proper() && !c.grammar.has_epsilon_rules());
        // NE(A) = 7/8: A -> B B, A -> B and A -> B each get (1/8)/(7/8),
        // A -> a gets (1/2)/(7/8); B -> b gets 1
        let probs: Vec<Rational> = c.grammar.rules().iter().map(|r| r.probability.clone()).collect();
        assert_eq!(probs, vec![rat(1, 7), rat(1, 7), rat(1, 7), rat(4, 7), rat(1, 1)]);
    }

    #[test]
    fn t4_conditioned_probabilities() {
        let t4 = parse_scfg("S -> 1 'a' A\nA -> 1/2 A A\nA -> 1/4 eps\nA -> 1/4 N N\nN -> 1 N N").unwrap();
        let g1 = scfg_to_snf(&t4);
        let c = condition_eliminate_eps(&g1, &rat(1, 1 << 20)).unwrap();
        assert!(!c.exact);
        assert!(c.error_bound <= c.delta);
        assert!(c.grammar.is_proper());
        let a = c.grammar.nonterminal_index("A").unwrap();
        // A -> A has probability E(A) = 1 - 1/sqrt(2)
        let unary: Rational = c
            .grammar
            .rules()
            .iter()
            .filter(|r| r.lhs == a && r.rhs == vec![Symbol::Nonterminal(a)])
            .map(|r| r.probability.clone())
            .sum();
        assert!((to_f64(&unary) - (1.0 - 0.5f64.sqrt())).abs() < 1e-9);
    }

    #[test]
    fn rejects_trivial_and_uncleaned() {
        let g = Scfg::trivial("S", vec![]);
        assert!(matches!(
            condition_eliminate_eps(&g, &rat(1, 10)),
            Err(Error::TrivialInput)
        ));
        let g = parse_scfg("S -> 1 B 'a' ; B -> 1 eps").unwrap();
        assert!(condition_eliminate_eps(&scfg_to_snf(&g), &rat(1, 10)).is_err());
    }

    #[test]
    fn large_delta_is_shrunk() {
        let g = parse_scfg("S -> 1 'a'").unwrap();
        let c = condition_eliminate_eps(&g, &rat(1, 2)).unwrap();
        assert!(c.delta_was_shrunk());
        assert_eq!(
            c.delta,
            Rational::one() / Rational::from_integer((12 * g.size()).into())
        );
    }
}
