use std::collections::HashMap;

use num_traits::{One, Zero};

use super::{Monomial, Polynomial, Pps};
use crate::error::{Error, Result};
use crate::graph::sccs_bottom_up;
use crate::numerics::{Rational, RationalMatrix, RationalVector};

/// One equation of a system in simple normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SnfEquation {
    /// `x_i = x_j * x_k` (possibly `j == k`).
    Quadratic(usize, usize),
    /// `x_i = Σ c_j x_j + constant`, every `c_j > 0`, indices strictly increasing.
    Linear {
        coeffs: Vec<(usize, Rational)>,
        constant: Rational,
    },
}

impl SnfEquation {
    pub fn linear(coeffs: impl IntoIterator<Item = (usize, Rational)>, constant: Rational) -> Self {
        let mut map: std::collections::BTreeMap<usize, Rational> = Default::default();
        for (v, c) in coeffs {
            *map.entry(v).or_insert_with(Rational::zero) += c;
        }
        SnfEquation::Linear {
            coeffs: map.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            constant,
        }
    }

    pub fn variables(&self) -> Vec<usize> {
        match self {
            SnfEquation::Quadratic(j, k) if j == k => vec![*j],
            SnfEquation::Quadratic(j, k) => vec![*j, *k],
            SnfEquation::Linear { coeffs, .. } => coeffs.iter().map(|(v, _)| *v).collect(),
        }
    }

    pub fn eval(&self, x: &[Rational]) -> Rational {
        match self {
            SnfEquation::Quadratic(j, k) => &x[*j] * &x[*k],
            SnfEquation::Linear { coeffs, constant } => coeffs
                .iter()
                .fold(constant.clone(), |acc, (v, c)| acc + c * &x[*v]),
        }
    }

    /// `P_i(1)`: 1 for a product, coefficient sum for an affine form.
    pub fn value_at_one(&self) -> Rational {
        match self {
            SnfEquation::Quadratic(..) => Rational::one(),
            SnfEquation::Linear { coeffs, constant } => {
                coeffs.iter().fold(constant.clone(), |acc, (_, c)| acc + c)
            }
        }
    }

    fn to_polynomial(&self) -> Polynomial {
        match self {
            SnfEquation::Quadratic(j, k) => {
                Polynomial::from_terms([(Rational::one(), Monomial::from_powers([(*j, 1), (*k, 1)]))])
            }
            SnfEquation::Linear { coeffs, constant } => Polynomial::from_terms(
                coeffs
                    .iter()
                    .map(|(v, c)| (c.clone(), Monomial::var(*v)))
                    .chain(std::iter::once((constant.clone(), Monomial::one()))),
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SnfSystem {
    names: Vec<String>,
    equations: Vec<SnfEquation>,
}

impl SnfSystem {
    /// Validates indices and signs. Coefficient sums are not constrained here;
    /// see [`SnfSystem::is_probabilistic`].
    pub fn new(names: Vec<String>, equations: Vec<SnfEquation>) -> Result<Self> {
        let n = names.len();
        if equations.len() != n {
            return Err(Error::Malformed(format!(
                "{n} variables but {} equations",
                equations.len()
            )));
        }
        for (i, eq) in equations.iter().enumerate() {
            if eq.variables().iter().any(|&v| v >= n) {
                return Err(Error::Malformed(format!(
                    "equation {i} references a variable out of range"
                )));
            }
            if let SnfEquation::Linear { coeffs, constant } = eq {
                if constant < &Rational::zero() || coeffs.iter().any(|(_, c)| c <= &Rational::zero()) {
                    return Err(Error::Malformed(format!(
                        "equation {i} has a non-positive coefficient"
                    )));
                }
            }
        }
        Ok(SnfSystem { names, equations })
    }

    pub fn len(&self) -> usize {
        self.equations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.equations.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn equations(&self) -> &[SnfEquation] {
        &self.equations
    }

    pub fn is_probabilistic(&self) -> bool {
        self.equations.iter().all(|e| e.value_at_one() <= Rational::one())
    }

    /// The same system viewed as a general polynomial system.
    pub fn to_pps(&self) -> Pps {
        Pps::new_monotone(
            self.names.clone(),
            self.equations.iter().map(SnfEquation::to_polynomial).collect(),
        )
        .expect("SNF system is a valid monotone system")
    }

    pub fn eval(&self, x: &[Rational]) -> RationalVector {
        assert_eq!(x.len(), self.len(), "dimension mismatch");
        self.equations.iter().map(|e| e.eval(x)).collect()
    }

    /// `B(x)_{ij} = dP_i/dx_j`.
    pub fn jacobian(&self, x: &[Rational]) -> RationalMatrix {
        let n = self.len();
        assert_eq!(x.len(), n, "dimension mismatch");
        let mut b = RationalMatrix::zeros(n, n);
        for (i, eq) in self.equations.iter().enumerate() {
            match eq {
                SnfEquation::Quadratic(j, k) => {
                    b[(i, *j)] += &x[*k];
                    b[(i, *k)] += &x[*j];
                }
                SnfEquation::Linear { coeffs, .. } => {
                    for (v, c) in coeffs {
                        b[(i, *v)] += c;
                    }
                }
            }
        }
        b
    }

    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        self.equations.iter().map(SnfEquation::variables).collect()
    }

    /// Sub-system on `keep` (in the given order), with every other variable
    /// replaced by the constant from `values`. A product with a substituted
    /// factor becomes affine.
    pub fn substitute(&self, keep: &[usize], values: &[Option<Rational>]) -> SnfSystem {
        let mut new_index = vec![usize::MAX; self.len()];
        for (ni, &old) in keep.iter().enumerate() {
            new_index[old] = ni;
        }
        let fixed = |v: usize| -> Option<&Rational> {
            if new_index[v] == usize::MAX {
                Some(values[v].as_ref().expect("substituted variable needs a value"))
            } else {
                None
            }
        };
        let equations = keep
            .iter()
            .map(|&i| match &self.equations[i] {
                SnfEquation::Quadratic(j, k) => match (fixed(*j), fixed(*k)) {
                    (None, None) => SnfEquation::Quadratic(new_index[*j], new_index[*k]),
                    (Some(a), None) => SnfEquation::linear([(new_index[*k], a.clone())], Rational::zero()),
                    (None, Some(b)) => SnfEquation::linear([(new_index[*j], b.clone())], Rational::zero()),
                    (Some(a), Some(b)) => SnfEquation::linear([], a * b),
                },
                SnfEquation::Linear { coeffs, constant } => {
                    let mut c0 = constant.clone();
                    let mut kept = Vec::new();
                    for (v, c) in coeffs {
                        match fixed(*v) {
                            Some(val) => c0 += c * val,
                            None => kept.push((new_index[*v], c.clone())),
                        }
                    }
                    SnfEquation::linear(kept, c0)
                }
            })
            .collect();
        SnfSystem {
            names: keep.iter().map(|&i| self.names[i].clone()).collect(),
            equations,
        }
    }
}

/// Dependency graph with its strongly connected components in bottom-up
/// order (every component after the ones it depends on).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DependencyGraph {
    pub adjacency: Vec<Vec<usize>>,
    pub sccs: Vec<Vec<usize>>,
    pub component_of: Vec<usize>,
}

pub fn dependency_scc(p: &SnfSystem) -> DependencyGraph {
    let adjacency = p.adjacency();
    let sccs = sccs_bottom_up(&adjacency);
    let mut component_of = vec![0; p.len()];
    for (c, members) in sccs.iter().enumerate() {
        for &v in members {
            component_of[v] = c;
        }
    }
    DependencyGraph {
        adjacency,
        sccs,
        component_of,
    }
}

/// Converts a monotone system into simple normal form.
///
/// Original variables keep their indices; auxiliary product variables are
/// appended. Each monomial is realised by squaring chains for its powers
/// and a left-to-right product of the factors; identical sub-products are
/// shared. Returns the system and, for each original variable, its index
/// in the output (currently the identity).
pub fn to_snf(p: &Pps) -> (SnfSystem, Vec<usize>) {
    let n = p.len();
    let mut b = Builder {
        names: p.names().to_vec(),
        equations: vec![None; n],
        products: HashMap::new(),
    };
    for (i, poly) in p.equations().iter().enumerate() {
        let single_square = poly.constant.is_zero()
            && poly.terms.len() == 1
            && poly.terms[0].coeff.is_one()
            && poly.terms[0].monomial.degree() == 2;
        let eq = if single_square {
            let vars: Vec<usize> = poly.terms[0]
                .monomial
                .powers()
                .flat_map(|(v, e)| std::iter::repeat_n(v, e as usize))
                .collect();
            SnfEquation::Quadratic(vars[0], vars[1])
        } else {
            let coeffs: Vec<(usize, Rational)> = poly
                .terms
                .iter()
                .map(|t| (b.monomial(&t.monomial), t.coeff.clone()))
                .collect();
            SnfEquation::linear(coeffs, poly.constant.clone())
        };
        b.equations[i] = Some(eq);
    }
    let equations = b
        .equations
        .into_iter()
        .map(|e| e.expect("every equation built"))
        .collect();
    let sys = SnfSystem::new(b.names, equations).expect("SNF construction is well-formed");
    (sys, (0..n).collect())
}

struct Builder {
    names: Vec<String>,
    equations: Vec<Option<SnfEquation>>,
    products: HashMap<(usize, usize), usize>,
}

impl Builder {
    fn product(&mut self, a: usize, b: usize) -> usize {
        let key = (a.min(b), a.max(b));
        if let Some(&v) = self.products.get(&key) {
            return v;
        }
        let v = self.names.len();
        self.names.push(format!("[{}*{}]", self.names[a], self.names[b]));
        self.equations.push(Some(SnfEquation::Quadratic(a, b)));
        self.products.insert(key, v);
        v
    }

    fn power(&mut self, v: usize, e: u64) -> usize {
        let mut acc: Option<usize> = None;
        let mut square = v;
        let mut rest = e;
        loop {
            if rest & 1 == 1 {
                acc = Some(match acc {
                    None => square,
                    Some(a) => self.product(a, square),
                });
            }
            rest >>= 1;
            if rest == 0 {
                break;
            }
            square = self.product(square, square);
        }
        acc.expect("positive exponent")
    }

    fn monomial(&mut self, m: &Monomial) -> usize {
        let mut acc: Option<usize> = None;
        for (v, e) in m.powers() {
            let p = self.power(v, e);
            acc = Some(match acc {
                None => p,
                Some(a) => self.product(a, p),
            });
        }
        acc.expect("non-constant monomial")
    }
}
