use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{fresh_name, ConditionedGrammar, Rule, Scfg, SplitKind, Symbol};
use crate::error::{Error, Result};
use crate::graph::can_reach;
use crate::numerics::{pow2, Rational, RationalMatrix};

/// Audit data of the hitting-probability computation.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HittingReport {
    /// Nonterminal states of the chain.
    pub states: usize,
    /// Absorbing states, one per distinct non-unary right-hand side.
    pub absorbing: usize,
    /// States from which some absorbing state is reachable.
    pub live: usize,
    /// `zeta'' = 2^-zeta2_exponent` with exponent `9|G|`.
    pub zeta2_exponent: u64,
    /// Split-off unary transitions at or below this are pruned.
    pub pruning_threshold: Rational,
    pub pruned: usize,
    /// Pruning was abandoned because it cut a live state off.
    pub pruning_abandoned: bool,
    /// `||(I - P~)^-1||_inf` of the live part, computed exactly.
    pub inverse_norm: Option<Rational>,
    /// Row-sum bound on `|P - P~|` including pruned mass.
    pub perturbation: Rational,
    /// Certified bound on every hitting probability.
    pub hitting_error: Rational,
    /// Certified lower bound on the smallest positive transition.
    pub min_transition: Option<Rational>,
    /// `n'/p^(n'+1)` with `p = min_transition`.
    pub a_priori_norm_bound: Option<Rational>,
    /// `2n'/p^(n'+1)`.
    pub a_priori_condition_bound: Option<Rational>,
    /// Rules with positive exact probability that came out as 0 and were
    /// put back with a floor probability.
    pub reinstated: usize,
    /// Rules `A -> N N` carrying the mass of unary cycles that never exit.
    pub dead_rules: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnaryElimination {
    /// Every rule is `A -> B C` or `A -> a`.
    pub grammar: Scfg,
    pub report: HittingReport,
    /// Certified rule-by-rule distance to the exact unary-free grammar.
    pub error_bound: Rational,
    pub exact: bool,
}

/// Removes unary rules. Nonterminals are the transient states of a Markov
/// chain whose absorbing states are the non-unary right-hand sides `γ`;
/// the rule `A -> γ` of the result has the probability that the chain
/// started in `A` is absorbed in `γ`, obtained by solving
/// `(I - P) x = b^γ` exactly over the given rationals.
///
/// When the input is approximate, split-off unary rules with probability at
/// most `zeta'' target / 2` are pruned, the error of the solution is
/// certified from the exact inverse of the solved matrix, rules with
/// positive exact probability that lost all their mass are reinstated with
/// a floor probability, and every nonterminal is renormalised. Fails with
/// [`Error::ConditioningFailure`] when the certified error exceeds
/// `target`.
pub fn eliminate_unary(c: &ConditionedGrammar, target: &Rational) -> Result<UnaryElimination> {
    let g = &c.grammar;
    if g.has_epsilon_rules() || !g.is_snf() {
        return Err(Error::InvalidArgument(
            "unary elimination needs an ε-free grammar in simple normal form".into(),
        ));
    }
    let n = g.nonterminals().len();
    let err = c.error_bound.clone();
    let zeta2_exponent = 9 * c.input_size;
    let tau = pow2(-(zeta2_exponent as i64)) * target / Rational::from_integer(2.into());

    let mut gammas: Vec<Vec<Symbol>> = Vec::new();
    let mut gamma_index: HashMap<Vec<Symbol>, usize> = HashMap::new();
    struct Unary {
        from: usize,
        to: usize,
        p: Rational,
        pruned: bool,
    }
    let mut unary: Vec<Unary> = Vec::new();
    // (lhs, gamma, probability) in rule order
    let mut exits: Vec<(usize, usize, Rational)> = Vec::new();
    for (r, origin) in g.rules().iter().zip(&c.origins) {
        match r.rhs.as_slice() {
            [Symbol::Nonterminal(b)] => {
                let split = matches!(origin.kind, SplitKind::KeepLeft | SplitKind::KeepRight);
                unary.push(Unary {
                    from: r.lhs,
                    to: *b,
                    p: r.probability.clone(),
                    pruned: !c.exact && split && r.probability <= tau,
                })
            }
            rhs => {
                let k = *gamma_index.entry(rhs.to_vec()).or_insert_with(|| {
                    gammas.push(rhs.to_vec());
                    gammas.len() - 1
                });
                exits.push((r.lhs, k, r.probability.clone()));
            }
        }
    }
    let m = gammas.len();

    let graph = |with_pruned: bool| {
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n + m];
        for u in &unary {
            if with_pruned || !u.pruned {
                adj[u.from].push(u.to);
            }
        }
        for &(a, k, _) in &exits {
            adj[a].push(n + k);
        }
        adj
    };
    let full = graph(true);
    let targets: Vec<usize> = (n..n + m).collect();
    let live_full: Vec<bool> = can_reach(&full, &targets)[..n].to_vec();
    let mut pruned_count = unary.iter().filter(|u| u.pruned).count();
    let mut abandoned = false;
    if pruned_count > 0 {
        let live_pruned = can_reach(&graph(false), &targets);
        if (0..n).any(|a| live_full[a] && !live_pruned[a]) {
            for u in &mut unary {
                u.pruned = false;
            }
            pruned_count = 0;
            abandoned = true;
        }
    }
    // exact structure: trapped mass and positivity of every A -> γ
    let dead_states: Vec<usize> = (0..n).filter(|&a| !live_full[a]).collect();
    let unary_adj: Vec<Vec<usize>> = {
        let mut adj = vec![Vec::new(); n];
        for u in &unary {
            adj[u.from].push(u.to);
        }
        adj
    };
    let trapped = can_reach(&unary_adj, &dead_states);
    let positive: Vec<Vec<bool>> = (0..m).map(|k| can_reach(&full, &[n + k])[..n].to_vec()).collect();

    // live part of the chain
    let live: Vec<usize> = (0..n).filter(|&a| live_full[a]).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &a) in live.iter().enumerate() {
        pos[a] = i;
    }
    let l = live.len();
    let mut pm = RationalMatrix::zeros(l, l);
    let mut row_err = vec![Rational::zero(); l];
    for u in &unary {
        let (i, j) = (pos[u.from], pos[u.to]);
        if i == usize::MAX || j == usize::MAX {
            continue;
        }
        if u.pruned {
            row_err[i] += &u.p + &err;
        } else {
            pm[(i, j)] += &u.p;
            row_err[i] += &err;
        }
    }
    let mut bm = RationalMatrix::zeros(l, m);
    let mut b_count = vec![vec![0u64; m]; l];
    for (a, k, p) in &exits {
        bm[(pos[*a], *k)] += p;
        b_count[pos[*a]][*k] += 1;
    }
    let inverse = RationalMatrix::identity(l).sub(&pm).inverse()?;
    let x = inverse.mul(&bm);

    let kappa = inverse.norm_inf();
    let eta = row_err.iter().cloned().max().unwrap_or_else(Rational::zero);
    let beta = &err * Rational::from_integer(b_count.iter().flatten().copied().max().unwrap_or(0).into());
    let x_max = (0..l)
        .flat_map(|i| (0..m).map(move |k| (i, k)))
        .map(|(i, k)| x[(i, k)].clone())
        .max()
        .unwrap_or_else(Rational::zero);
    let half = Rational::new(1.into(), 2.into());
    if &kappa * &eta >= half {
        return Err(Error::ConditioningFailure {
            required: Box::new(target.clone()),
            actual: Box::new(Rational::one()),
        });
    }
    let hitting_error = &kappa / (Rational::one() - &kappa * &eta) * (&eta * &x_max + &beta);

    let exact = c.exact && pruned_count == 0;
    // reinstated rules get a floor small enough that renormalising a row
    // with the widest support stays within the target
    let widest = (0..n)
        .map(|a| (0..m).filter(|&k| positive[k][a]).count())
        .max()
        .unwrap_or(0);
    let floor = target / Rational::from_integer((4 * (widest as u64 + 2)).into());

    // assemble rules: first in the order of the input's non-unary rules,
    // then those reached only through unary chains
    let mut value: Vec<Vec<Option<Rational>>> = vec![vec![None; m]; n];
    let mut reinstated = 0;
    let mut row_floor = vec![false; n];
    for &a in &live {
        for k in 0..m {
            let v = x[(pos[a], k)].clone();
            if !v.is_zero() {
                value[a][k] = Some(v);
            } else if positive[k][a] {
                value[a][k] = Some(floor.clone());
                row_floor[a] = true;
                reinstated += 1;
            }
        }
    }
    let mut order: Vec<(usize, usize)> = Vec::new();
    let mut placed = vec![vec![false; m]; n];
    for &(a, k, _) in &exits {
        if value[a][k].is_some() && !placed[a][k] {
            placed[a][k] = true;
            order.push((a, k));
        }
    }
    for a in 0..n {
        for k in 0..m {
            if value[a][k].is_some() && !placed[a][k] {
                placed[a][k] = true;
                order.push((a, k));
            }
        }
    }

    let mut nonterminals = g.nonterminals().to_vec();
    let dead = n;
    let mut dead_mass: Vec<Option<Rational>> = vec![None; n];
    let mut scale: Vec<Rational> = vec![Rational::one(); n];
    let mut error_bound = Rational::zero();
    for a in 0..n {
        if !live_full[a] {
            dead_mass[a] = Some(Rational::one());
            continue;
        }
        let vals: Vec<&Rational> = value[a].iter().flatten().collect();
        let s: Rational = vals.iter().copied().sum();
        if trapped[a] {
            if s < Rational::one() {
                dead_mass[a] = Some(Rational::one() - &s);
            } else {
                // overshoot: keep a positive share for the trapped mass
                dead_mass[a] = Some(floor.clone());
                scale[a] = (Rational::one() - &floor) / &s;
            }
        } else if !s.is_one() {
            scale[a] = Rational::one() / &s;
        }
        if !exact {
            let e = if row_floor[a] {
                hitting_error.clone().max(floor.clone())
            } else {
                hitting_error.clone()
            };
            let k = Rational::from_integer((vals.len() as u64 + 1).into());
            let denominator = Rational::one() - &k * &e;
            let bound = if denominator <= Rational::zero() {
                Rational::one()
            } else {
                (&k + Rational::one()) * &e / denominator
            };
            error_bound = error_bound.max(bound);
        }
    }
    if error_bound > *target {
        return Err(Error::ConditioningFailure {
            required: Box::new(target.clone()),
            actual: Box::new(error_bound),
        });
    }

    let mut rules: Vec<Rule> = order
        .into_iter()
        .map(|(a, k)| Rule {
            lhs: a,
            probability: value[a][k].clone().expect("placed values exist") * &scale[a],
            rhs: gammas[k].clone(),
        })
        .collect();
    let dead_rules = dead_mass.iter().flatten().count();
    if dead_rules > 0 {
        nonterminals.push(fresh_name("N", g.nonterminals()));
        for (a, mass) in dead_mass.into_iter().enumerate() {
            if let Some(p) = mass {
                rules.push(Rule {
                    lhs: a,
                    probability: p,
                    rhs: vec![Symbol::Nonterminal(dead); 2],
                });
            }
        }
        rules.push(Rule {
            lhs: dead,
            probability: Rational::one(),
            rhs: vec![Symbol::Nonterminal(dead); 2],
        });
    }

    // certified smallest positive transition of the solved chain
    let mut min_transition: Option<Rational> = None;
    for i in 0..l {
        let entries = (0..l)
            .map(|j| (pm[(i, j)].clone(), 1u64))
            .chain((0..m).map(|k| (bm[(i, k)].clone(), b_count[i][k])));
        for (v, count) in entries {
            if !v.is_zero() {
                let lo = v - &err * Rational::from_integer(count.into());
                min_transition = Some(match min_transition {
                    Some(cur) => cur.min(lo),
                    None => lo,
                });
            }
        }
    }
    let min_transition = min_transition.filter(|p| *p > Rational::zero());
    let a_priori_norm_bound = min_transition
        .as_ref()
        .map(|p| Rational::from_integer((l as u64).into()) / num_traits::pow(p.clone(), l + 1));
    let a_priori_condition_bound = a_priori_norm_bound
        .as_ref()
        .map(|b| b * Rational::from_integer(2.into()));

    let grammar = Scfg::new(nonterminals, g.terminals().to_vec(), rules, g.start())?;
    Ok(UnaryElimination {
        grammar,
        report: HittingReport {
            states: n,
            absorbing: m,
            live: l,
            zeta2_exponent,
            pruning_threshold: tau,
            pruned: pruned_count,
            pruning_abandoned: abandoned,
            inverse_norm: Some(kappa),
            perturbation: eta,
            hitting_error,
            min_transition,
            a_priori_norm_bound,
            a_priori_condition_bound,
            reinstated,
            dead_rules,
        },
        error_bound,
        exact,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::scfg::{condition_eliminate_eps, parse_scfg};

    fn exact_elimination(text: &str) -> UnaryElimination {
        let g = parse_scfg(text).unwrap();
        let c = condition_eliminate_eps(&g, &rat(1, 1000)).unwrap();
        assert!(c.exact);
        eliminate_unary(&c, &rat(1, 1000)).unwrap()
    }

    fn prob(g: &Scfg, lhs: &str, rhs: &[Symbol]) -> Rational {
        let a = g.nonterminal_index(lhs).unwrap();
        g.rules()
            .iter()
            .filter(|r| r.lhs == a && r.rhs == rhs)
            .map(|r| r.probability.clone())
            .sum()
    }

    #[test]
    fn two_state_chain() {
        let u = exact_elimination("A -> 1/2 B\nA -> 1/2 'a'\nB -> 1 'b'");
        assert!(u.exact);
        assert!(u.error_bound.is_zero());
        let g = &u.grammar;
        assert_eq!(prob(g, "A", &[Symbol::Terminal(0)]), rat(1, 2));
        assert_eq!(prob(g, "A", &[Symbol::Terminal(1)]), rat(1, 2));
        assert_eq!(prob(g, "B", &[Symbol::Terminal(1)]), rat(1, 1));
        assert!(!g.has_unary_rules() && g.is_proper());
    }

    #[test]
    fn self_loop_is_geometric() {
        let u = exact_elimination("A -> 1/2 A\nA -> 1/2 'a'");
        assert_eq!(u.grammar.rules().len(), 1);
        assert_eq!(u.grammar.rules()[0].probability, rat(1, 1));
    }

    #[test]
    fn unary_free_is_identity() {
        let text = "S -> 2/3 S S\nS -> 1/3 'a'";
        let u = exact_elimination(text);
        assert_eq!(u.grammar, parse_scfg(text).unwrap());
        assert_eq!(u.report.live, 1);
    }

    #[test]
    fn trapped_mass_goes_to_dead_rule() {
        // A -> C leads into a cycle that never exits
        let u = exact_elimination("A -> 1/4 C\nA -> 3/4 'a'\nC -> 1 D\nD -> 1 C");
        let g = &u.grammar;
        assert!(g.is_proper());
        let dead = g.nonterminal_index("N").unwrap();
        assert_eq!(prob(g, "A", &[Symbol::Nonterminal(dead); 2]), rat(1, 4));
        assert_eq!(prob(g, "C", &[Symbol::Nonterminal(dead); 2]), rat(1, 1));
        assert_eq!(u.report.dead_rules, 3);
    }

    #[test]
    fn hitting_solution_is_consistent() {
        let u = exact_elimination("A -> 1/3 B\nA -> 1/3 'a'\nA -> 1/3 A A\nB -> 1/2 A\nB -> 1/2 'b'");
        let g = &u.grammar;
        // x_A = 1/3 x_B + 1/3, x_B = 1/2 x_A for absorption in 'a'
        assert_eq!(prob(g, "A", &[Symbol::Terminal(0)]), rat(2, 5));
        assert_eq!(prob(g, "B", &[Symbol::Terminal(0)]), rat(1, 5));
        assert!(g.is_proper());
    }
}
