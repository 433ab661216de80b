use num_traits::{One, Zero};

use super::{fresh_name, Rule, Scfg, Symbol};
use crate::error::{Error, Result};
use crate::numerics::Rational;
use crate::pps::{Monomial, Polynomial, Pps};
use crate::qualitative::Tag;

/// Routes the missing probability `1 - p_A` of every nonterminal to a rule
/// `A -> N N`, where the fresh nonterminal `N` has the single rule
/// `N -> 1 N N` and so generates no finite string. `N` is added only when
/// needed.
pub fn make_proper(g: &Scfg) -> Result<Scfg> {
    let sums = g.probability_sums();
    if let Some((i, s)) = sums.iter().enumerate().find(|(_, s)| **s > Rational::one()) {
        return Err(Error::SumExceedsOne {
            nonterminal: g.nonterminals()[i].clone(),
            sum: s.clone(),
        });
    }
    if sums.iter().all(One::is_one) {
        return Ok(g.clone());
    }
    let mut nonterminals = g.nonterminals().to_vec();
    let dead = nonterminals.len();
    nonterminals.push(fresh_name("N", g.nonterminals()));
    let mut rules = g.rules().to_vec();
    for (a, s) in sums.iter().enumerate() {
        if !s.is_one() {
            rules.push(Rule {
                lhs: a,
                probability: Rational::one() - s,
                rhs: vec![Symbol::Nonterminal(dead); 2],
            });
        }
    }
    rules.push(Rule {
        lhs: dead,
        probability: Rational::one(),
        rhs: vec![Symbol::Nonterminal(dead); 2],
    });
    Scfg::new(nonterminals, g.terminals().to_vec(), rules, g.start())
}

/// Simple normal form. A terminal inside a longer right-hand side is
/// replaced by a pre-terminal `T -> 1 a`, and a right-hand side of length
/// `k > 2` becomes a chain of `k - 2` auxiliary nonterminals with
/// probability-1 rules. Rules of probability 0 are dropped. Every string
/// keeps its probability and no ε-rule is introduced.
pub fn scfg_to_snf(g: &Scfg) -> Scfg {
    let mut nonterminals = g.nonterminals().to_vec();
    let mut rules: Vec<Rule> = Vec::new();
    let mut preterminal: Vec<Option<usize>> = vec![None; g.terminals().len()];
    let mut aux_rules: Vec<Rule> = Vec::new();

    let new_nt = |base: String, nts: &mut Vec<String>| {
        let name = fresh_name(&base, nts);
        nts.push(name);
        nts.len() - 1
    };

    for (ri, r) in g.rules().iter().enumerate() {
        if r.probability.is_zero() {
            continue;
        }
        if r.rhs.len() <= 1 || (r.rhs.len() == 2 && r.rhs.iter().all(|s| matches!(s, Symbol::Nonterminal(_))))
        {
            rules.push(r.clone());
            continue;
        }
        let ys: Vec<usize> = r
            .rhs
            .iter()
            .map(|&s| match s {
                Symbol::Nonterminal(b) => b,
                Symbol::Terminal(t) => *preterminal[t].get_or_insert_with(|| {
                    let p = new_nt(format!("T_{}", sanitize(&g.terminals()[t])), &mut nonterminals);
                    aux_rules.push(Rule {
                        lhs: p,
                        probability: Rational::one(),
                        rhs: vec![Symbol::Terminal(t)],
                    });
                    p
                }),
            })
            .collect();
        let k = ys.len();
        let mut lhs = r.lhs;
        let mut probability = r.probability.clone();
        for (pos, &y) in ys.iter().enumerate().take(k - 2) {
            let z = new_nt(format!("R{ri}_{}", pos + 1), &mut nonterminals);
            rules.push(Rule {
                lhs,
                probability,
                rhs: vec![Symbol::Nonterminal(y), Symbol::Nonterminal(z)],
            });
            lhs = z;
            probability = Rational::one();
        }
        rules.push(Rule {
            lhs,
            probability,
            rhs: vec![Symbol::Nonterminal(ys[k - 2]), Symbol::Nonterminal(ys[k - 1])],
        });
    }
    rules.extend(aux_rules);
    Scfg::new(nonterminals, g.terminals().to_vec(), rules, g.start())
        .expect("normal form construction keeps indices in range")
}

fn sanitize(t: &str) -> String {
    let s: String = t
        .chars()
        .filter(|c| c.is_ascii_alphanumeric() || *c == '_')
        .collect();
    if s.is_empty() {
        "t".into()
    } else {
        s
    }
}

/// The two polynomial systems of a grammar. Variable `i` is nonterminal
/// `i` in both; the ε-system may have one extra dead variable at the end.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TerminationSystems {
    /// Terminals count as the constant 1, so the least fixed point is the
    /// vector of termination probabilities.
    pub termination: Pps,
    /// Every rule containing a terminal is redirected to two copies of a
    /// dead variable `N = N^2`, so the least fixed point is the vector of
    /// ε-probabilities `E(A)`.
    pub epsilon: Pps,
    pub dead: Option<usize>,
}

pub fn termination_pps(g: &Scfg) -> TerminationSystems {
    let n = g.nonterminals().len();
    let by = g.rules_by_lhs();
    let has_terminal = |r: &Rule| r.rhs.iter().any(|s| matches!(s, Symbol::Terminal(_)));
    let redirect = g
        .rules()
        .iter()
        .any(|r| !r.probability.is_zero() && has_terminal(r));
    let dead = redirect.then_some(n);

    let monomial =
        |r: &Rule| Monomial::from_powers(r.rhs.iter().filter_map(|s| s.nonterminal()).map(|b| (b, 1)));
    let termination: Vec<Polynomial> = by
        .iter()
        .map(|rs| {
            Polynomial::from_terms(
                rs.iter()
                    .map(|&i| &g.rules()[i])
                    .filter(|r| !r.probability.is_zero())
                    .map(|r| (r.probability.clone(), monomial(r))),
            )
        })
        .collect();
    let mut epsilon: Vec<Polynomial> = by
        .iter()
        .map(|rs| {
            Polynomial::from_terms(
                rs.iter()
                    .map(|&i| &g.rules()[i])
                    .filter(|r| !r.probability.is_zero())
                    .map(|r| {
                        let m = match dead {
                            Some(d) if has_terminal(r) => Monomial::from_powers([(d, 2)]),
                            _ => monomial(r),
                        };
                        (r.probability.clone(), m)
                    }),
            )
        })
        .collect();
    let mut names = g.nonterminals().to_vec();
    let termination = Pps::new(names.clone(), termination).expect("proper grammar yields a PPS");
    if let Some(d) = dead {
        epsilon.push(Polynomial::from_terms([(
            Rational::one(),
            Monomial::from_powers([(d, 2)]),
        )]));
        names.push(fresh_name("N", &names));
    }
    TerminationSystems {
        termination,
        epsilon: Pps::new(names, epsilon).expect("proper grammar yields a PPS"),
        dead,
    }
}

/// Output of [`clean`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CleanedGrammar {
    pub grammar: Scfg,
    /// New nonterminal index -> index in the input grammar.
    pub kept: Vec<usize>,
    /// The start symbol derives ε with probability 1 and the grammar is
    /// `S -> 1 ε`.
    pub trivial: bool,
}

/// Removes every nonterminal with `E(A) = 1` and deletes its occurrences
/// from right-hand sides; a right-hand side that becomes empty turns into
/// an ε-rule. `flags` are the exact ε-classifications of the nonterminals.
pub fn clean(g: &Scfg, flags: &[Tag]) -> CleanedGrammar {
    let s = g.start();
    if flags[s] == Tag::One {
        return CleanedGrammar {
            grammar: Scfg::trivial(&g.nonterminals()[s], g.terminals().to_vec()),
            kept: vec![s],
            trivial: true,
        };
    }
    let kept: Vec<usize> = (0..g.nonterminals().len())
        .filter(|&a| flags[a] != Tag::One)
        .collect();
    let mut new_index = vec![None; g.nonterminals().len()];
    for (new, &old) in kept.iter().enumerate() {
        new_index[old] = Some(new);
    }
    let rules = g
        .rules()
        .iter()
        .filter_map(|r| {
            let lhs = new_index[r.lhs]?;
            let rhs = r
                .rhs
                .iter()
                .filter_map(|&sym| match sym {
                    Symbol::Nonterminal(b) => new_index[b].map(Symbol::Nonterminal),
                    t => Some(t),
                })
                .collect();
            Some(Rule {
                lhs,
                probability: r.probability.clone(),
                rhs,
            })
        })
        .collect();
    let nonterminals = kept.iter().map(|&a| g.nonterminals()[a].clone()).collect();
    CleanedGrammar {
        grammar: Scfg::new(
            nonterminals,
            g.terminals().to_vec(),
            rules,
            new_index[s].expect("start is kept"),
        )
        .expect("cleaning keeps indices in range"),
        kept,
        trivial: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::pps::parse_pps;
    use crate::scfg::{parse_scfg, parse_scfg_lenient};

    #[test]
    fn make_proper_adds_dead_rule() {
        let g = parse_scfg_lenient("S -> 1/2 S S\nS -> 1/4 'a'").unwrap();
        let p = make_proper(&g).unwrap();
        assert!(p.is_proper());
        assert_eq!(p.nonterminals(), ["S", "N"]);
        assert_eq!(p.rules()[2].probability, rat(1, 4));
        assert_eq!(p.rules()[2].rhs, vec![Symbol::Nonterminal(1); 2]);
        let q = parse_scfg("S -> 1 'a'").unwrap();
        assert_eq!(make_proper(&q).unwrap(), q);
        let bad = parse_scfg_lenient("S -> 3/4 'a' ; S -> 1/2 'b'").unwrap();
        assert!(matches!(make_proper(&bad), Err(Error::SumExceedsOne { .. })));
    }

    #[test]
    fn snf_chains() {
        let g = parse_scfg("A -> 1 'a' B 'c'\nB -> 1 eps").unwrap();
        let s = scfg_to_snf(&g);
        assert!(s.is_snf() && s.is_proper());
        // A -> T_a R0_1, R0_1 -> B T_c, plus two pre-terminal rules
        assert_eq!(s.rules().len(), 5);
        assert_eq!(s.rules().iter().filter(|r| r.rhs.is_empty()).count(), 1);
        let already = parse_scfg("S -> 1/2 S S ; S -> 1/4 S ; S -> 1/8 'a' ; S -> 1/8 eps").unwrap();
        assert_eq!(scfg_to_snf(&already), already);
    }

    #[test]
    fn termination_and_epsilon_systems() {
        let g = parse_scfg("S -> 2/3 S S ; S -> 1/3 'a'").unwrap();
        let t = termination_pps(&g);
        assert_eq!(t.termination, parse_pps("S = 2/3 S^2 + 1/3").unwrap());
        assert_eq!(t.epsilon, parse_pps("S = 2/3 S^2 + 1/3 N^2\nN = N^2").unwrap());
        let t4 = parse_scfg("S -> 1 'a' A\nA -> 1/2 A A\nA -> 1/4 eps\nA -> 1/4 N N\nN -> 1 N N").unwrap();
        let e = termination_pps(&t4).epsilon;
        assert_eq!(e.names(), ["S", "A", "N", "N_"]);
        let x = [rat(1, 2), rat(1, 3), rat(1, 5), rat(1, 7)];
        assert_eq!(e.eval(&x)[0], rat(1, 49));
        assert_eq!(e.eval(&x)[1], rat(1, 18) + rat(1, 4) + rat(1, 100));
    }

    #[test]
    fn clean_deletes_sure_epsilon() {
        let g = parse_scfg("A -> 1/2 B C\nA -> 1/2 'a'\nB -> 1 eps\nC -> 1 'c'").unwrap();
        let c = clean(&g, &[Tag::Interior, Tag::One, Tag::Zero]);
        assert!(!c.trivial);
        assert_eq!(c.kept, vec![0, 2]);
        assert_eq!(c.grammar.rules()[0].rhs, vec![Symbol::Nonterminal(1)]);
        let g = parse_scfg("S -> 1 B B\nB -> 1 eps").unwrap();
        let c = clean(&g, &[Tag::One, Tag::One]);
        assert!(c.trivial && c.grammar.is_trivial());
    }
}
