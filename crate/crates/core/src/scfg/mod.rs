//! Stochastic context-free grammars: parsing, normal forms, ε-probabilities,
//! conversion to an approximately equivalent Chomsky normal form, and
//! string probabilities through rounded CKY.
//!
//! The conversion runs in stages, each producing an ordinary [`Scfg`]:
//!
//! 1. [`make_proper`] routes missing probability mass to a dead nonterminal.
//! 2. [`scfg_to_snf`] splits right-hand sides into the shapes `A -> B C`,
//!    `A -> B`, `A -> a` and `A -> ε`.
//! 3. [`clean`] deletes nonterminals that derive ε with probability 1.
//! 4. [`condition_eliminate_eps`] conditions every nonterminal on not
//!    deriving ε, which removes all ε-rules. Its probabilities involve the
//!    (generally irrational) ε-probabilities and are approximated.
//! 5. [`eliminate_unary`] replaces unary chains by hitting probabilities of
//!    a finite Markov chain.
//!
//! [`to_cnf`] composes the stages under one error budget and
//! [`string_probability`] adds the CKY evaluation.

mod brute;
mod cky;
mod condition;
mod epsilon;
mod parse;
mod pipeline;
mod transform;
mod unary;

pub use brute::{brute_force_string_prob, BruteForce};
pub use cky::{cky_error_bound, inside_probability, InsideResult};
pub use condition::{condition_eliminate_eps, ConditionedGrammar, RuleOrigin, SplitKind};
pub use epsilon::{epsilon_flags, epsilon_profile, EpsEntry, EpsProfile};
pub use parse::{parse_scfg, parse_scfg_lenient};
pub use pipeline::{string_probability, to_cnf, ApproxBudget, CnfResult, StringProbability};
pub use transform::{clean, make_proper, scfg_to_snf, termination_pps, CleanedGrammar, TerminationSystems};
pub use unary::{eliminate_unary, HittingReport, UnaryElimination};

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::{rational_bits, to_decimal, Rational};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Symbol {
    Nonterminal(usize),
    Terminal(usize),
}

impl Symbol {
    pub fn nonterminal(self) -> Option<usize> {
        match self {
            Symbol::Nonterminal(i) => Some(i),
            Symbol::Terminal(_) => None,
        }
    }
}

/// `lhs -> probability rhs`; an empty `rhs` is an ε-rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub lhs: usize,
    pub probability: Rational,
    pub rhs: Vec<Symbol>,
}

/// A grammar whose rules are identified by their position, so two rules
/// with the same left- and right-hand side are distinct.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Scfg {
    nonterminals: Vec<String>,
    terminals: Vec<String>,
    rules: Vec<Rule>,
    start: usize,
}

impl Scfg {
    /// Validates symbol indices and that every probability lies in `[0, 1]`.
    /// Properness is not required; see [`Scfg::check_proper`].
    pub fn new(
        nonterminals: Vec<String>,
        terminals: Vec<String>,
        rules: Vec<Rule>,
        start: usize,
    ) -> Result<Self> {
        if start >= nonterminals.len() {
            return Err(Error::Malformed("start symbol out of range".into()));
        }
        for r in &rules {
            if r.lhs >= nonterminals.len() {
                return Err(Error::Malformed("rule left-hand side out of range".into()));
            }
            if r.probability < Rational::zero() || r.probability > Rational::one() {
                return Err(Error::Malformed(format!(
                    "rule of `{}` has probability {} outside [0, 1]",
                    nonterminals[r.lhs], r.probability
                )));
            }
            for s in &r.rhs {
                let ok = match *s {
                    Symbol::Nonterminal(i) => i < nonterminals.len(),
                    Symbol::Terminal(i) => i < terminals.len(),
                };
                if !ok {
                    return Err(Error::Malformed("rule right-hand side out of range".into()));
                }
            }
        }
        Ok(Scfg {
            nonterminals,
            terminals,
            rules,
            start,
        })
    }

    /// The grammar `S -> 1 ε`.
    pub fn trivial(start_name: &str, terminals: Vec<String>) -> Self {
        Scfg {
            nonterminals: vec![start_name.to_string()],
            terminals,
            rules: vec![Rule {
                lhs: 0,
                probability: Rational::one(),
                rhs: Vec::new(),
            }],
            start: 0,
        }
    }

    pub fn nonterminals(&self) -> &[String] {
        &self.nonterminals
    }

    pub fn terminals(&self) -> &[String] {
        &self.terminals
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn nonterminal_index(&self, name: &str) -> Option<usize> {
        self.nonterminals.iter().position(|n| n == name)
    }

    pub fn terminal_index(&self, name: &str) -> Option<usize> {
        self.terminals.iter().position(|t| t == name)
    }

    /// Indices of the rules of each nonterminal.
    pub fn rules_by_lhs(&self) -> Vec<Vec<usize>> {
        let mut by = vec![Vec::new(); self.nonterminals.len()];
        for (i, r) in self.rules.iter().enumerate() {
            by[r.lhs].push(i);
        }
        by
    }

    /// `Σ_{r in R_A} p(r)` for every nonterminal `A`.
    pub fn probability_sums(&self) -> Vec<Rational> {
        let mut sums = vec![Rational::zero(); self.nonterminals.len()];
        for r in &self.rules {
            sums[r.lhs] += &r.probability;
        }
        sums
    }

    pub fn is_proper(&self) -> bool {
        self.probability_sums().iter().all(One::is_one)
    }

    /// Fails with [`Error::ImproperGrammar`] listing every nonterminal whose
    /// rule probabilities do not sum to exactly 1.
    pub fn check_proper(&self) -> Result<()> {
        let sums: Vec<(String, Rational)> = self
            .nonterminals
            .iter()
            .zip(self.probability_sums())
            .filter(|(_, s)| !s.is_one())
            .map(|(n, s)| (n.clone(), s))
            .collect();
        if sums.is_empty() {
            Ok(())
        } else {
            Err(Error::ImproperGrammar { sums })
        }
    }

    /// Every rule has shape `A -> B C`, `A -> B`, `A -> a` or `A -> ε`.
    pub fn is_snf(&self) -> bool {
        self.rules.iter().all(|r| {
            matches!(
                r.rhs.as_slice(),
                [] | [_] | [Symbol::Nonterminal(_), Symbol::Nonterminal(_)]
            )
        })
    }

    pub fn has_epsilon_rules(&self) -> bool {
        self.rules.iter().any(|r| r.rhs.is_empty())
    }

    pub fn has_unary_rules(&self) -> bool {
        self.rules
            .iter()
            .any(|r| matches!(r.rhs.as_slice(), [Symbol::Nonterminal(_)]))
    }

    /// Is this exactly the grammar `S -> 1 ε`?
    pub fn is_trivial(&self) -> bool {
        self.nonterminals.len() == 1
            && self.rules.len() == 1
            && self.rules[0].rhs.is_empty()
            && self.rules[0].probability.is_one()
    }

    /// `|G|`: nonterminal count, plus the bits of every nonzero rule
    /// probability, plus the total length of all right-hand sides.
    pub fn size(&self) -> u64 {
        let bits: u64 = self
            .rules
            .iter()
            .filter(|r| !r.probability.is_zero())
            .map(|r| rational_bits(&r.probability))
            .sum();
        let lengths: u64 = self.rules.iter().map(|r| r.rhs.len() as u64).sum();
        self.nonterminals.len() as u64 + bits + lengths
    }

    /// Maps a string of terminal names to indices; `None` if some terminal
    /// does not occur in the grammar.
    pub fn encode<S: AsRef<str>>(&self, w: &[S]) -> Option<Vec<usize>> {
        let index: HashMap<&str, usize> = self
            .terminals
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        w.iter().map(|s| index.get(s.as_ref()).copied()).collect()
    }

    fn symbol_name(&self, s: Symbol) -> String {
        match s {
            Symbol::Nonterminal(i) => self.nonterminals[i].clone(),
            Symbol::Terminal(i) => format!("'{}'", self.terminals[i]),
        }
    }
}

/// A nonterminal name not in `taken`, derived from `base`.
pub(crate) fn fresh_name(base: &str, taken: &[String]) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    name
}

/// Renders one rule per line in the input format, with the probability as
/// an exact fraction and a truncated decimal in a trailing comment.
impl fmt::Display for Scfg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "start {}", self.nonterminals[self.start])?;
        for r in &self.rules {
            let rhs = if r.rhs.is_empty() {
                "eps".to_string()
            } else {
                r.rhs
                    .iter()
                    .map(|&s| self.symbol_name(s))
                    .collect::<Vec<_>>()
                    .join(" ")
            };
            writeln!(
                f,
                "{} -> {} {}  # {}",
                self.nonterminals[r.lhs],
                r.probability,
                rhs,
                to_decimal(&r.probability, 12)
            )?;
        }
        Ok(())
    }
}

/// A grammar in Chomsky normal form: every rule is `A -> B C` or `A -> a`,
/// except for at most one rule `S -> ε`, in which case the start symbol `S`
/// occurs on no right-hand side.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfGrammar(Scfg);

impl CnfGrammar {
    pub fn new(g: Scfg) -> Result<Self> {
        let s = g.start;
        let mut eps = 0;
        for r in &g.rules {
            match r.rhs.as_slice() {
                [Symbol::Terminal(_)] | [Symbol::Nonterminal(_), Symbol::Nonterminal(_)] => {}
                [] if r.lhs == s => eps += 1,
                _ => {
                    return Err(Error::Malformed(format!(
                        "rule of `{}` is not in Chomsky normal form",
                        g.nonterminals[r.lhs]
                    )))
                }
            }
        }
        if eps > 1 {
            return Err(Error::Malformed(
                "more than one ε-rule for the start symbol".into(),
            ));
        }
        if eps == 1 && g.rules.iter().any(|r| r.rhs.contains(&Symbol::Nonterminal(s))) {
            return Err(Error::Malformed(
                "start symbol has an ε-rule but occurs on a right-hand side".into(),
            ));
        }
        Ok(CnfGrammar(g))
    }

    pub fn grammar(&self) -> &Scfg {
        &self.0
    }

    pub fn into_grammar(self) -> Scfg {
        self.0
    }

    /// Probability of the rule `S -> ε`, zero if absent.
    pub fn epsilon_probability(&self) -> Rational {
        self.0
            .rules
            .iter()
            .filter(|r| r.rhs.is_empty())
            .map(|r| r.probability.clone())
            .sum()
    }
}

impl fmt::Display for CnfGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_predicates_and_size() {
        let g = parse_scfg("S -> 2/3 S S ; S -> 1/3 'a'").unwrap();
        assert!(g.is_proper() && g.is_snf());
        assert!(!g.has_epsilon_rules() && !g.has_unary_rules());
        // 1 nonterminal + bits(2/3) + bits(1/3) + rhs lengths 3
        assert_eq!(g.size(), 1 + 4 + 3 + 3);
        assert!(CnfGrammar::new(g).is_ok());
    }

    #[test]
    fn cnf_validation() {
        let g = parse_scfg("S -> 1 A\nA -> 1 'a'").unwrap();
        assert!(CnfGrammar::new(g).is_err());
        let g = parse_scfg("S -> 1/2 eps\nS -> 1/2 S S").unwrap();
        assert!(CnfGrammar::new(g).is_err());
        let g = parse_scfg("S -> 1/2 eps\nS -> 1/2 A A\nA -> 1 'a'").unwrap();
        let c = CnfGrammar::new(g).unwrap();
        assert_eq!(c.epsilon_probability(), crate::numerics::rat(1, 2));
    }

    #[test]
    fn display_reparses() {
        let g =
            parse_scfg("start A\nS -> 1 'x' A eps_not\nA -> 1/4 eps\nA -> 3/4 S\neps_not -> 1 'y'").unwrap();
        assert_eq!(parse_scfg(&g.to_string()).unwrap(), g);
    }
}
