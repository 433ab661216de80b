use std::collections::HashSet;

use num_traits::{One, Zero};

use super::{
    clean, condition_eliminate_eps, eliminate_unary, epsilon_flags, epsilon_profile, fresh_name,
    inside_probability, make_proper, scfg_to_snf, CnfGrammar, HittingReport, InsideResult, Rule, Scfg,
    Symbol,
};
use crate::error::{Error, Result};
use crate::numerics::{bits_for, pow2, Dyadic, Rational};
use crate::qualitative::Tag;

/// Retries of the conditioning stage at a smaller tolerance after the
/// unary stage reports that its error target cannot be met.
const MAX_RETRIES: u32 = 8;

/// Every tolerance used by [`to_cnf`] and the certified error of each stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxBudget {
    pub delta: Rational,
    /// Longest string length the guarantee covers.
    pub horizon: usize,
    /// `|G|` of the cleaned simple-normal-form grammar.
    pub cleaned_size: u64,
    /// Per-rule tolerance of the output, chosen so that rule errors below it
    /// change inside probabilities of strings up to `horizon` by at most
    /// `delta`.
    pub rule_tolerance: Rational,
    /// Target of unary elimination, half of `rule_tolerance`.
    pub unary_tolerance: Rational,
    /// Tolerance requested from the conditioning stage in the last attempt.
    pub conditioning_tolerance: Rational,
    /// Accuracy of the ε-probability enclosures.
    pub epsilon_accuracy: Rational,
    pub pruning_threshold: Rational,
    /// Certified rule-wise errors of the stages.
    pub conditioning_error: Rational,
    pub unary_error: Rational,
    pub start_error: Rational,
    /// Largest rule error of the output grammar.
    pub rule_error: Rational,
    /// Certified bound on `|p_{G,w} - p_{G',w}|` for `|w| <= horizon`.
    pub string_error: Rational,
    pub retries: u32,
    /// The start symbol derives only ε.
    pub trivial: bool,
    /// Output probabilities are the exact ones.
    pub exact: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CnfResult {
    pub cnf: CnfGrammar,
    pub budget: ApproxBudget,
    pub hitting: Option<HittingReport>,
}

/// Factor `c_n` with `|p_{G,w} - p_{G',w}| <= c_n r` for `|w| = n` when every
/// rule of the CNF grammar `G'` is within `r` of that of `G` and each
/// nonterminal has at most `per_lhs` binary rules.
///
/// From `|p'LR - pL'R'| <= p'(|L - L'| + |R - R'|) + |p - p'|` and
/// proper rows: `c_1 = 1`, `c_j = 2 sum_{k<j} c_k + per_lhs (j - 1)`.
fn perturbation_factor(n: usize, per_lhs: usize) -> Rational {
    if n <= 1 {
        return Rational::one();
    }
    let mut sum = Rational::one();
    let mut last = Rational::one();
    for j in 2..=n {
        last = Rational::from_integer(2.into()) * &sum + Rational::from_integer((per_lhs * (j - 1)).into());
        sum += &last;
    }
    last
}

/// Converts a grammar into a CNF grammar `G'` with
/// `|p_{G,w} - p_{G',w}| <= delta` for every string with `|w| <= horizon`.
///
/// The stages run with tolerances derived from `delta` and `horizon`;
/// when unary elimination cannot certify its target, conditioning is
/// redone at a smaller tolerance.
pub fn to_cnf(g: &Scfg, horizon: usize, delta: &Rational) -> Result<CnfResult> {
    if delta.is_zero() || *delta < Rational::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let g1 = scfg_to_snf(&make_proper(g)?);
    let flags = epsilon_flags(&g1)?;
    let cleaned = clean(&g1, &flags);
    let g2 = cleaned.grammar;
    let mut budget = ApproxBudget {
        delta: delta.clone(),
        horizon,
        cleaned_size: g2.size(),
        rule_tolerance: Rational::zero(),
        unary_tolerance: Rational::zero(),
        conditioning_tolerance: Rational::zero(),
        epsilon_accuracy: Rational::zero(),
        pruning_threshold: Rational::zero(),
        conditioning_error: Rational::zero(),
        unary_error: Rational::zero(),
        start_error: Rational::zero(),
        rule_error: Rational::zero(),
        string_error: Rational::zero(),
        retries: 0,
        trivial: cleaned.trivial,
        exact: true,
    };
    if cleaned.trivial {
        return Ok(CnfResult {
            cnf: CnfGrammar::new(g2)?,
            budget,
            hitting: None,
        });
    }

    // binary rules per nonterminal in the output are bounded by the distinct
    // non-unary right-hand sides, one dead rule and one ε-rule
    let gammas: HashSet<&Vec<Symbol>> = g2
        .rules()
        .iter()
        .filter(|r| r.rhs.len() != 1)
        .map(|r| &r.rhs)
        .collect();
    let per_lhs = gammas.len() + 2;
    let factor = perturbation_factor(horizon, per_lhs);
    let rule_tolerance = pow2(-(bits_for(&(delta / &factor)) as i64));
    let unary_tolerance = &rule_tolerance / Rational::from_integer(2.into());
    budget.rule_tolerance = rule_tolerance.clone();
    budget.unary_tolerance = unary_tolerance.clone();

    let mut conditioning_tolerance =
        &unary_tolerance / Rational::from_integer((8 * (per_lhs as u64 + 1)).into());
    let (conditioned, unary) = loop {
        let c = condition_eliminate_eps(&g2, &conditioning_tolerance)?;
        match eliminate_unary(&c, &unary_tolerance) {
            Ok(u) => break (c, u),
            Err(Error::ConditioningFailure { actual, .. }) if budget.retries < MAX_RETRIES => {
                let ratio = (&unary_tolerance / (Rational::from_integer(4.into()) * *actual))
                    .min(Rational::new(1.into(), 16.into()));
                conditioning_tolerance *= ratio;
                budget.retries += 1;
            }
            Err(e) => return Err(e),
        }
    };
    budget.conditioning_tolerance = conditioning_tolerance;
    budget.epsilon_accuracy = conditioned.delta_prime.clone();
    budget.conditioning_error = conditioned.error_bound.clone();
    budget.pruning_threshold = unary.report.pruning_threshold.clone();
    budget.unary_error = unary.error_bound.clone();

    // the start symbol takes back the probability of deriving ε
    let start = g2.start();
    let mut entry = conditioned.profile.entries[start].clone();
    let start_tolerance = &rule_tolerance / Rational::from_integer(4.into());
    if entry.radius() > start_tolerance {
        entry = epsilon_profile(&g2, &start_tolerance)?.entries[start].clone();
    }
    let g4 = unary.grammar;
    let mut exact = unary.exact;
    let output = if entry.tag == Tag::Zero {
        g4
    } else {
        let e_mid = entry.mid();
        let ne = Rational::one() - &e_mid;
        let ne_error = entry.radius();
        exact &= ne_error.is_zero();
        budget.start_error = &ne_error + &unary.error_bound;
        let on_rhs = g4
            .rules()
            .iter()
            .any(|r| r.rhs.iter().any(|s| *s == Symbol::Nonterminal(g4.start())));
        let mut nonterminals = g4.nonterminals().to_vec();
        let (new_start, mut rules) = if on_rhs {
            let name = fresh_name(&format!("{}_0", nonterminals[g4.start()]), &nonterminals);
            nonterminals.push(name);
            let s0 = nonterminals.len() - 1;
            let mut rules = g4.rules().to_vec();
            rules.extend(g4.rules().iter().filter(|r| r.lhs == g4.start()).map(|r| Rule {
                lhs: s0,
                probability: &r.probability * &ne,
                rhs: r.rhs.clone(),
            }));
            (s0, rules)
        } else {
            let rules = g4
                .rules()
                .iter()
                .map(|r| Rule {
                    lhs: r.lhs,
                    probability: if r.lhs == g4.start() {
                        &r.probability * &ne
                    } else {
                        r.probability.clone()
                    },
                    rhs: r.rhs.clone(),
                })
                .collect();
            (g4.start(), rules)
        };
        rules.push(Rule {
            lhs: new_start,
            probability: e_mid,
            rhs: Vec::new(),
        });
        Scfg::new(nonterminals, g4.terminals().to_vec(), rules, new_start)?
    };
    budget.rule_error = budget.unary_error.clone().max(budget.start_error.clone());
    budget.exact = exact;
    budget.string_error = &budget.rule_error * &factor;
    if budget.string_error > *delta {
        return Err(Error::ConditioningFailure {
            required: Box::new(delta.clone()),
            actual: Box::new(budget.string_error.clone()),
        });
    }
    Ok(CnfResult {
        cnf: CnfGrammar::new(output)?,
        budget,
        hitting: Some(unary.report),
    })
}

/// Approximate probability that a grammar generates a string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StringProbability {
    pub value: Dyadic,
    /// Certified bound on `|value - p_{G,w}|`.
    pub bound: Rational,
    /// Absent when the answer needed no conversion (unknown terminal or a
    /// grammar that derives only ε).
    pub budget: Option<ApproxBudget>,
    pub inside: Option<InsideResult>,
}

/// `p_{G,w}` within `delta`: the grammar is converted with [`to_cnf`] at
/// `delta / 2` for the horizon `|w|`, then evaluated by rounded CKY at
/// `delta / 4`. `w` holds terminal names.
pub fn string_probability<S: AsRef<str>>(g: &Scfg, w: &[S], delta: &Rational) -> Result<StringProbability> {
    if delta.is_zero() || *delta < Rational::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let exact_answer = |value: u64| StringProbability {
        value: Dyadic::new(value.into(), 0),
        bound: Rational::zero(),
        budget: None,
        inside: None,
    };
    let Some(word) = g.encode(w) else {
        return Ok(exact_answer(0));
    };
    let half = delta / Rational::from_integer(2.into());
    let converted = to_cnf(g, word.len(), &half)?;
    if converted.budget.trivial {
        return Ok(exact_answer(u64::from(word.is_empty())));
    }
    let inside = inside_probability(&converted.cnf, &word, &(delta / Rational::from_integer(4.into())))?;
    Ok(StringProbability {
        value: inside.value.clone(),
        bound: &converted.budget.string_error + &inside.bound,
        budget: Some(converted.budget),
        inside: Some(inside),
    })
}
