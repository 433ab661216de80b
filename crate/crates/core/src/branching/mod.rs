//! Multi-type branching processes, their exact translation to and from
//! PPSs, and a Monte Carlo extinction simulator used as a statistical
//! cross-check.

mod simulate;

pub use simulate::{simulate_extinction, ExtinctionEstimate, SimulationConfig};

use std::collections::HashMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::numerics::Rational;
use crate::pps::parse::Lexer;
use crate::pps::{Monomial, Polynomial, Pps};

/// One rule `S_i -> p {offspring}`; offspring is a sparse count vector.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BpRule {
    pub probability: Rational,
    pub offspring: Vec<(usize, u64)>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BranchingProcess {
    types: Vec<String>,
    rules: Vec<Vec<BpRule>>,
}

impl BranchingProcess {
    /// Checks that probabilities lie in `(0, 1]`, sum to exactly 1 per type,
    /// and that offspring reference existing types.
    pub fn new(types: Vec<String>, rules: Vec<Vec<BpRule>>) -> Result<Self> {
        if types.len() != rules.len() {
            return Err(Error::Malformed("one rule list per type is required".into()));
        }
        let n = types.len();
        for (name, rs) in types.iter().zip(&rules) {
            let mut sum = Rational::zero();
            for r in rs {
                if r.probability <= Rational::zero() || r.probability > Rational::one() {
                    return Err(Error::Malformed(format!(
                        "rule of `{name}` has probability {} outside (0, 1]",
                        r.probability
                    )));
                }
                if r.offspring.iter().any(|&(t, _)| t >= n) {
                    return Err(Error::Malformed(format!(
                        "rule of `{name}` references an unknown type"
                    )));
                }
                sum += &r.probability;
            }
            if !sum.is_one() {
                return Err(Error::Malformed(format!(
                    "rule probabilities of `{name}` sum to {sum}, not 1"
                )));
            }
        }
        let rules = rules
            .into_iter()
            .map(|rs| {
                rs.into_iter()
                    .map(|r| BpRule {
                        probability: r.probability,
                        offspring: normalise_offspring(r.offspring),
                    })
                    .collect()
            })
            .collect();
        Ok(BranchingProcess { types, rules })
    }

    pub fn types(&self) -> &[String] {
        &self.types
    }

    pub fn rules(&self) -> &[Vec<BpRule>] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.types.len()
    }

    pub fn is_empty(&self) -> bool {
        self.types.is_empty()
    }

    pub fn type_index(&self, name: &str) -> Option<usize> {
        self.types.iter().position(|t| t == name)
    }
}

fn normalise_offspring(v: Vec<(usize, u64)>) -> Vec<(usize, u64)> {
    let mut m: std::collections::BTreeMap<usize, u64> = Default::default();
    for (t, c) in v {
        if c > 0 {
            *m.entry(t).or_insert(0) += c;
        }
    }
    m.into_iter().collect()
}

impl fmt::Display for BranchingProcess {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, rs) in self.types.iter().zip(&self.rules) {
            for r in rs {
                let kids: Vec<String> = r
                    .offspring
                    .iter()
                    .map(|&(t, c)| {
                        if c == 1 {
                            self.types[t].clone()
                        } else {
                            format!("{}*{c}", self.types[t])
                        }
                    })
                    .collect();
                writeln!(f, "{name} -> {} {{ {} }}", r.probability, kids.join(", "))?;
            }
        }
        Ok(())
    }
}

/// Parses one rule per line: `TYPE -> PROB { TYPE*COUNT, ... }`, with
/// `TYPE` alone meaning a count of one and `{}` the empty multiset.
pub fn parse_bp(text: &str) -> Result<BranchingProcess> {
    let mut types: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    type RawRule = (usize, Rational, Vec<(String, u64, usize, usize)>);
    let mut raw: Vec<RawRule> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let mut lx = Lexer::new(content, line_no);
        let (lhs, _) = lx.ident()?.ok_or_else(|| lx.error("expected type name"))?;
        if !lx.eat_str("->") {
            return Err(lx.error("expected `->`"));
        }
        let prob = lx.number()?.ok_or_else(|| lx.error("expected probability"))?;
        if !lx.eat('{') {
            return Err(lx.error("expected `{`"));
        }
        let mut kids = Vec::new();
        if !lx.eat('}') {
            loop {
                let col = {
                    lx.skip_ws();
                    lx.column()
                };
                let (name, _) = lx.ident()?.ok_or_else(|| lx.error("expected type name"))?;
                let count = if lx.eat('*') {
                    let c = lx.number()?.ok_or_else(|| lx.error("expected count"))?;
                    if !c.is_integer() || c <= Rational::zero() {
                        return Err(Error::parse(line_no, col, "count must be a positive integer"));
                    }
                    c.to_integer()
                        .try_into()
                        .map_err(|_| Error::parse(line_no, col, "count too large"))?
                } else {
                    1
                };
                kids.push((name, count, line_no, col));
                if lx.eat('}') {
                    break;
                }
                if !lx.eat(',') {
                    return Err(lx.error("expected `,` or `}`"));
                }
            }
        }
        if !lx.at_end() {
            return Err(lx.error("unexpected text after rule"));
        }
        let t = *index.entry(lhs.clone()).or_insert_with(|| {
            types.push(lhs);
            types.len() - 1
        });
        raw.push((t, prob, kids));
    }

    let mut rules: Vec<Vec<BpRule>> = vec![Vec::new(); types.len()];
    for (t, prob, kids) in raw {
        let mut offspring = Vec::with_capacity(kids.len());
        for (name, count, line, col) in kids {
            let k = *index
                .get(&name)
                .ok_or_else(|| Error::parse(line, col, format!("type `{name}` has no rules")))?;
            offspring.push((k, count));
        }
        rules[t].push(BpRule {
            probability: prob,
            offspring,
        });
    }
    BranchingProcess::new(types, rules)
}

/// `x_i = Σ_r p_r x^{v(r)}`; its least fixed point is the extinction vector.
pub fn bp_to_pps(g: &BranchingProcess) -> Pps {
    let equations = g
        .rules
        .iter()
        .map(|rs| {
            Polynomial::from_terms(rs.iter().map(|r| {
                (
                    r.probability.clone(),
                    Monomial::from_powers(r.offspring.iter().copied()),
                )
            }))
        })
        .collect();
    Pps::new(g.types.clone(), equations).expect("a proper branching process yields a PPS")
}

/// Every term becomes a rule. A leaky equation gets an extra rule sending
/// the missing probability to two copies of a fresh type that only
/// reproduces itself, which is added only when some equation leaks.
pub fn pps_to_bp(p: &Pps) -> BranchingProcess {
    let n = p.len();
    let leaks: Vec<Rational> = p
        .equations()
        .iter()
        .map(|e| Rational::one() - e.coefficient_sum())
        .collect();
    let leaky = leaks.iter().any(|l| !l.is_zero());
    let mut types = p.names().to_vec();
    let dead = if leaky {
        let mut name = "Dead".to_string();
        while types.contains(&name) {
            name.push('_');
        }
        types.push(name);
        Some(n)
    } else {
        None
    };
    let mut rules: Vec<Vec<BpRule>> = p
        .equations()
        .iter()
        .zip(&leaks)
        .map(|(eq, leak)| {
            let mut rs: Vec<BpRule> = eq
                .terms
                .iter()
                .map(|t| BpRule {
                    probability: t.coeff.clone(),
                    offspring: t.monomial.powers().collect(),
                })
                .collect();
            if !eq.constant.is_zero() {
                rs.push(BpRule {
                    probability: eq.constant.clone(),
                    offspring: Vec::new(),
                });
            }
            if let (Some(d), false) = (dead, leak.is_zero()) {
                rs.push(BpRule {
                    probability: leak.clone(),
                    offspring: vec![(d, 2)],
                });
            }
            rs
        })
        .collect();
    if let Some(d) = dead {
        rules.push(vec![BpRule {
            probability: Rational::one(),
            offspring: vec![(d, 2)],
        }]);
    }
    BranchingProcess::new(types, rules).expect("construction yields a proper process")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::pps::parse_pps;

    #[test]
    fn parse_and_translate() {
        let g = parse_bp("S -> 1/2 { S*2 }\nS -> 1/2 {}").unwrap();
        assert_eq!(bp_to_pps(&g), parse_pps("S = 1/2 S^2 + 1/2").unwrap());
        let g = parse_bp("S -> 1 {}").unwrap();
        assert_eq!(bp_to_pps(&g), parse_pps("S = 1").unwrap());
        let g = parse_bp("S -> 1 { S, S }").unwrap();
        assert_eq!(bp_to_pps(&g), parse_pps("S = S^2").unwrap());
    }

    #[test]
    fn improper_and_malformed() {
        assert!(matches!(parse_bp("S -> 1/2 {}"), Err(Error::Malformed(_))));
        assert!(matches!(
            parse_bp("S -> 1 { T }"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_bp("S -> 1 { S*0 }"), Err(Error::Parse { .. })));
        assert!(matches!(parse_bp("S 1 {}"), Err(Error::Parse { .. })));
    }

    #[test]
    fn leaky_pps_gets_dead_type() {
        let p = parse_pps("x = 1/2 x^2 + 1/4").unwrap();
        let g = pps_to_bp(&p);
        assert_eq!(g.len(), 2);
        assert_eq!(g.types()[1], "Dead");
        let leak = g.rules()[0].iter().find(|r| r.offspring == vec![(1, 2)]).unwrap();
        assert_eq!(leak.probability, rat(1, 4));
        assert_eq!(g.rules()[1].len(), 1);
    }

    #[test]
    fn non_leaky_round_trip() {
        let p = parse_pps("x = 1/2 x y + 1/2\ny = 1/3 x + 2/3 y^3").unwrap();
        let g = pps_to_bp(&p);
        assert_eq!(g.len(), 2);
        assert_eq!(bp_to_pps(&g), p);
    }

    #[test]
    fn display_reparses() {
        let g = parse_bp("A -> 1/3 { A*2, B }\nA -> 2/3 {}\nB -> 1 { }").unwrap();
        assert_eq!(parse_bp(&g.to_string()).unwrap(), g);
    }
}
