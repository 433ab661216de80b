//! Exact classification of least-fixed-point coordinates into `q*_i = 0`,
//! `q*_i = 1` and `0 < q*_i < 1`, and removal of the trivial ones.
//!
//! Zero: a variable is zero iff it cannot reach termination, i.e. it lies
//! outside the least fixed point of the Boolean system where an affine
//! equation terminates if its constant is positive or some successor
//! terminates, and a product terminates if both factors do.
//!
//! One: components are visited bottom-up. If `q*_i = 1` then
//! `P_i(q*) = P_i(1) = 1` and every variable occurring in `P_i` has value 1,
//! so a component can only be One when it contains no zero variable, all its
//! outside successors are One, and it has no leak. In that case its value is
//! 1 iff the spectral radius of `B_S(1)` is at most 1, which is decided by
//! exact feasibility of `{B_S(1) x <= x, x >= 1}`.

use num_traits::{One, Zero};

use crate::error::Result;
use crate::numerics::{collatz_wielandt_feasible, Rational, RationalMatrix};
use crate::pps::{dependency_scc, SnfEquation, SnfSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Tag {
    Zero,
    One,
    Interior,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub tags: Vec<Tag>,
}

impl Classification {
    pub fn all_interior(&self) -> bool {
        self.tags.iter().all(|&t| t == Tag::Interior)
    }

    pub fn indices(&self, tag: Tag) -> Vec<usize> {
        (0..self.tags.len()).filter(|&i| self.tags[i] == tag).collect()
    }
}

pub fn classify(p: &SnfSystem) -> Result<Classification> {
    let n = p.len();
    let terminates = can_terminate(p);
    let mut tags: Vec<Option<Tag>> = (0..n).map(|i| (!terminates[i]).then_some(Tag::Zero)).collect();

    let graph = dependency_scc(p);
    let ones = vec![Rational::one(); n];
    let full_b = p.jacobian(&ones);

    for scc in &graph.sccs {
        let c = graph.component_of[scc[0]];
        let has_zero = scc.iter().any(|&v| tags[v] == Some(Tag::Zero));
        let outside_ok = scc.iter().all(|&v| {
            graph.adjacency[v]
                .iter()
                .all(|&w| graph.component_of[w] == c || tags[w] == Some(Tag::One))
        });
        let leak_free = scc
            .iter()
            .all(|&v| p.equations()[v].value_at_one() == Rational::one());

        let one = !has_zero && outside_ok && leak_free && {
            let mut b = RationalMatrix::zeros(scc.len(), scc.len());
            for (a, &i) in scc.iter().enumerate() {
                for (bcol, &j) in scc.iter().enumerate() {
                    b[(a, bcol)] = full_b[(i, j)].clone();
                }
            }
            collatz_wielandt_feasible(&b)?
        };
        for &v in scc {
            if tags[v].is_none() {
                tags[v] = Some(if one { Tag::One } else { Tag::Interior });
            }
        }
    }
    Ok(Classification {
        tags: tags
            .into_iter()
            .map(|t| t.expect("every variable tagged"))
            .collect(),
    })
}

fn can_terminate(p: &SnfSystem) -> Vec<bool> {
    let n = p.len();
    let mut t = vec![false; n];
    let mut changed = true;
    while changed {
        changed = false;
        for (i, eq) in p.equations().iter().enumerate() {
            if t[i] {
                continue;
            }
            let now = match eq {
                SnfEquation::Quadratic(j, k) => t[*j] && t[*k],
                SnfEquation::Linear { coeffs, constant } => {
                    !constant.is_zero() || coeffs.iter().any(|(v, _)| t[*v])
                }
            };
            if now {
                t[i] = true;
                changed = true;
            }
        }
    }
    t
}

/// The Interior-only residual system together with the values of the
/// eliminated variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReducedSystem {
    pub residual: SnfSystem,
    /// For every original variable: `Some(0)` or `Some(1)` if eliminated.
    pub fixed: Vec<Option<Rational>>,
    /// Residual index -> original index.
    pub original_index: Vec<usize>,
}

impl ReducedSystem {
    /// Combines a residual solution with the eliminated constants into a
    /// vector over the original variables.
    pub fn lift(&self, residual_values: &[Rational]) -> Vec<Rational> {
        let mut out: Vec<Rational> = self
            .fixed
            .iter()
            .map(|v| v.clone().unwrap_or_else(Rational::zero))
            .collect();
        for (r, &o) in self.original_index.iter().enumerate() {
            out[o] = residual_values[r].clone();
        }
        out
    }
}

pub fn eliminate_trivial(p: &SnfSystem, c: &Classification) -> ReducedSystem {
    let fixed: Vec<Option<Rational>> = c
        .tags
        .iter()
        .map(|t| match t {
            Tag::Zero => Some(Rational::zero()),
            Tag::One => Some(Rational::one()),
            Tag::Interior => None,
        })
        .collect();
    let keep = c.indices(Tag::Interior);
    ReducedSystem {
        residual: p.substitute(&keep, &fixed),
        fixed,
        original_index: keep,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::{int, rat};
    use crate::pps::{parse_pps, to_snf};

    fn tags(text: &str) -> Vec<Tag> {
        classify(&to_snf(&parse_pps(text).unwrap()).0).unwrap().tags
    }

    #[test]
    fn univariate_examples() {
        assert_eq!(tags("x = 1/2 x^2 + 1/2")[0], Tag::One);
        assert_eq!(tags("x = 2/3 x^2 + 1/3")[0], Tag::Interior);
        assert_eq!(tags("x = x^2")[0], Tag::Zero);
        assert_eq!(tags("x = 1")[0], Tag::One);
        assert_eq!(tags("x = 0")[0], Tag::Zero);
        assert_eq!(tags("x = x"), vec![Tag::Zero]);
    }

    #[test]
    fn dependence_on_interior_is_interior() {
        let t = tags("a = b\nb = 1/2 b^2 + 1/4\nc = 1/2 c + 1/2 d\nd = 1");
        assert_eq!(&t[..4], &[Tag::Interior, Tag::Interior, Tag::One, Tag::One]);
    }

    #[test]
    fn supercritical_component_with_leak_free_rows() {
        // x = 3/4 x^2 + 1/4 has q* = 1/3; B(1) = 3/2 > 1
        assert_eq!(tags("x = 3/4 x^2 + 1/4")[0], Tag::Interior);
    }

    #[test]
    fn substituting_one_makes_affine() {
        let s = SnfSystem::new(
            vec!["x1".into(), "x2".into(), "x3".into()],
            vec![
                SnfEquation::Quadratic(1, 2),
                SnfEquation::linear([], int(1)),
                SnfEquation::linear([(2, rat(1, 2))], rat(1, 4)),
            ],
        )
        .unwrap();
        let c = classify(&s).unwrap();
        assert_eq!(c.tags, vec![Tag::Interior, Tag::One, Tag::Interior]);
        let r = eliminate_trivial(&s, &c);
        assert_eq!(
            r.residual.equations()[0],
            SnfEquation::linear([(1, int(1))], int(0))
        );
        assert!(classify(&r.residual).unwrap().all_interior());
    }

    #[test]
    fn zero_factor_propagates() {
        let s = SnfSystem::new(
            vec!["x1".into(), "x2".into(), "x3".into()],
            vec![
                SnfEquation::Quadratic(1, 2),
                SnfEquation::Quadratic(1, 1),
                SnfEquation::linear([(2, rat(1, 2))], rat(1, 4)),
            ],
        )
        .unwrap();
        let c = classify(&s).unwrap();
        assert_eq!(c.tags, vec![Tag::Zero, Tag::Zero, Tag::Interior]);
        let r = eliminate_trivial(&s, &c);
        assert_eq!(r.residual.len(), 1);
        assert!(classify(&r.residual).unwrap().all_interior());
        assert_eq!(r.lift(&[rat(1, 2)]), vec![int(0), int(0), rat(1, 2)]);
    }

    #[test]
    fn all_interior_is_identity() {
        let s = to_snf(&parse_pps("x = 1/2 x^2 + 1/4").unwrap()).0;
        let c = classify(&s).unwrap();
        assert!(c.all_interior());
        assert_eq!(eliminate_trivial(&s, &c).residual, s);
    }
}
