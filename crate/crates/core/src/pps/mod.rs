//! Monotone and probabilistic polynomial systems `x = P(x)`.

mod iterate;
pub(crate) mod parse;
mod size;
mod snf;

pub use iterate::{value_iterate, value_iterate_bounds, value_iterate_pps_bounds};
pub use parse::parse_pps;
pub use size::{size_measure, Measurable, SizeMeasure};
pub use snf::{dependency_scc, to_snf, DependencyGraph, SnfEquation, SnfSystem};

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::numerics::Rational;

/// Sparse monomial: variable index -> positive exponent.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(BTreeMap<usize, u64>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(BTreeMap::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial::from_powers([(i, 1)])
    }

    /// Builds a monomial, summing repeated variables and dropping zero
    /// exponents.
    pub fn from_powers(powers: impl IntoIterator<Item = (usize, u64)>) -> Self {
        let mut m = BTreeMap::new();
        for (v, e) in powers {
            if e > 0 {
                *m.entry(v).or_insert(0) += e;
            }
        }
        Monomial(m)
    }

    pub fn powers(&self) -> impl Iterator<Item = (usize, u64)> + '_ {
        self.0.iter().map(|(&v, &e)| (v, e))
    }

    pub fn degree(&self) -> u64 {
        self.0.values().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    pub fn exponent(&self, v: usize) -> u64 {
        self.0.get(&v).copied().unwrap_or(0)
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        let mut acc = Rational::one();
        for (v, e) in self.powers() {
            acc *= num_traits::pow(x[v].clone(), e as usize);
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Term {
    pub coeff: Rational,
    pub monomial: Monomial,
}

/// `constant + Σ coeff · monomial`, all coefficients strictly positive.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Polynomial {
    pub constant: Rational,
    pub terms: Vec<Term>,
}

impl Polynomial {
    /// Collects terms, merging equal monomials and folding constant
    /// monomials into the constant. Zero coefficients are dropped.
    pub fn from_terms(terms: impl IntoIterator<Item = (Rational, Monomial)>) -> Self {
        let mut constant = Rational::zero();
        let mut merged: BTreeMap<Monomial, Rational> = BTreeMap::new();
        let mut order: Vec<Monomial> = Vec::new();
        for (c, m) in terms {
            if m.is_constant() {
                constant += c;
            } else {
                let slot = merged.entry(m.clone()).or_insert_with(|| {
                    order.push(m);
                    Rational::zero()
                });
                *slot += c;
            }
        }
        let terms = order
            .into_iter()
            .filter_map(|m| {
                let c = merged.remove(&m)?;
                (!c.is_zero()).then_some(Term {
                    coeff: c,
                    monomial: m,
                })
            })
            .collect();
        Polynomial { constant, terms }
    }

    /// Constant plus all coefficients, i.e. `P_i(1)`.
    pub fn coefficient_sum(&self) -> Rational {
        self.terms
            .iter()
            .fold(self.constant.clone(), |acc, t| acc + &t.coeff)
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        self.terms.iter().fold(self.constant.clone(), |acc, t| {
            acc + &t.coeff * t.monomial.eval(x)
        })
    }

    pub fn variables(&self) -> impl Iterator<Item = usize> + '_ {
        self.terms
            .iter()
            .flat_map(|t| t.monomial.powers().map(|(v, _)| v))
    }
}

/// A polynomial system with one equation per variable.
///
/// Constructed through [`Pps::new`] (probabilistic: coefficient sums at most
/// one) or [`Pps::new_monotone`] (no sum constraint).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Pps {
    names: Vec<String>,
    equations: Vec<Polynomial>,
}

impl Pps {
    pub fn new(names: Vec<String>, equations: Vec<Polynomial>) -> Result<Self> {
        let p = Self::new_monotone(names, equations)?;
        for (name, eq) in p.names.iter().zip(&p.equations) {
            let s = eq.coefficient_sum();
            if s > Rational::one() {
                return Err(Error::NotProbabilistic {
                    var: name.clone(),
                    sum: s,
                });
            }
        }
        Ok(p)
    }

    pub fn new_monotone(names: Vec<String>, equations: Vec<Polynomial>) -> Result<Self> {
        let n = names.len();
        if equations.len() != n {
            return Err(Error::Malformed(format!(
                "{} variables but {} equations",
                n,
                equations.len()
            )));
        }
        for (name, eq) in names.iter().zip(&equations) {
            if eq.constant.is_negative() || eq.terms.iter().any(|t| !t.coeff.is_positive()) {
                return Err(Error::Malformed(format!(
                    "equation for `{name}` has a non-positive coefficient"
                )));
            }
            if let Some(v) = eq.variables().find(|&v| v >= n) {
                return Err(Error::Malformed(format!(
                    "equation for `{name}` references variable index {v} out of range"
                )));
            }
        }
        Ok(Pps { names, equations })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn equations(&self) -> &[Polynomial] {
        &self.equations
    }

    pub fn is_probabilistic(&self) -> bool {
        self.equations
            .iter()
            .all(|e| e.coefficient_sum() <= Rational::one())
    }

    pub fn eval(&self, x: &[Rational]) -> Vec<Rational> {
        self.equations.iter().map(|e| e.eval(x)).collect()
    }
}

impl fmt::Display for Pps {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, eq) in self.names.iter().zip(&self.equations) {
            write!(f, "{name} =")?;
            let mut first = true;
            for t in &eq.terms {
                if !first {
                    write!(f, " +")?;
                }
                first = false;
                write!(f, " {}", t.coeff)?;
                for (v, e) in t.monomial.powers() {
                    if e == 1 {
                        write!(f, " {}", self.names[v])?;
                    } else {
                        write!(f, " {}^{}", self.names[v], e)?;
                    }
                }
            }
            if !eq.constant.is_zero() || first {
                if !first {
                    write!(f, " +")?;
                }
                write!(f, " {}", eq.constant)?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;

    #[test]
    fn merging_terms() {
        let p = Polynomial::from_terms([
            (rat(1, 4), Monomial::var(0)),
            (rat(1, 8), Monomial::one()),
            (rat(1, 4), Monomial::var(0)),
            (rat(1, 8), Monomial::one()),
        ]);
        assert_eq!(p.constant, rat(1, 4));
        assert_eq!(p.terms.len(), 1);
        assert_eq!(p.terms[0].coeff, rat(1, 2));
        assert_eq!(p.coefficient_sum(), rat(3, 4));
    }

    #[test]
    fn probabilistic_check() {
        let eq = Polynomial::from_terms([
            (rat(2, 3), Monomial::from_powers([(0, 2)])),
            (rat(2, 3), Monomial::one()),
        ]);
        let err = Pps::new(vec!["x".into()], vec![eq.clone()]).unwrap_err();
        assert!(matches!(err, Error::NotProbabilistic { ref sum, .. } if *sum == rat(4, 3)));
        assert!(Pps::new_monotone(vec!["x".into()], vec![eq]).is_ok());
    }

    #[test]
    fn display_roundtrips_through_parser() {
        let p = parse_pps("x = 1/2 x^2 + 1/4\ny = 1/3 x y + 1/3").unwrap();
        let again = parse_pps(&p.to_string()).unwrap();
        assert_eq!(p, again);
    }
}
