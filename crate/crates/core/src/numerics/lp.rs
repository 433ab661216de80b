use num_traits::{One, Signed, Zero};

use super::Rational;
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// `coeffs · x  (relation)  rhs` over free rational variables.
#[derive(Clone, Debug)]
pub struct LinearConstraint {
    pub coeffs: Vec<Rational>,
    pub relation: Relation,
    pub rhs: Rational,
}

impl LinearConstraint {
    pub fn new(coeffs: Vec<Rational>, relation: Relation, rhs: Rational) -> Self {
        LinearConstraint {
            coeffs,
            relation,
            rhs,
        }
    }
}

/// Decides whether a system of linear constraints over free rational
/// variables has a solution.
///
/// Phase I of the simplex method on exact rationals, Bland's rule for both
/// entering and leaving variables (terminates without cycling).
pub fn lp_feasible(nvars: usize, constraints: &[LinearConstraint]) -> Result<bool> {
    if let Some(c) = constraints.iter().find(|c| c.coeffs.len() != nvars) {
        return Err(Error::Malformed(format!(
            "constraint has {} coefficients, expected {nvars}",
            c.coeffs.len()
        )));
    }
    let m = constraints.len();
    if m == 0 {
        return Ok(true);
    }

    // columns: x+ (nvars), x- (nvars), one slack/surplus per inequality,
    // one artificial per row that lacks a slack basis
    let mut rows: Vec<(Vec<Rational>, Relation, Rational)> = constraints
        .iter()
        .map(|c| {
            let mut coeffs: Vec<Rational> = c.coeffs.clone();
            coeffs.extend(c.coeffs.iter().map(|a| -a));
            let (coeffs, rel, rhs) = if c.rhs.is_negative() {
                let flipped = match c.relation {
                    Relation::Le => Relation::Ge,
                    Relation::Ge => Relation::Le,
                    Relation::Eq => Relation::Eq,
                };
                (coeffs.iter().map(|a| -a).collect(), flipped, -c.rhs.clone())
            } else {
                (coeffs, c.relation, c.rhs.clone())
            };
            (coeffs, rel, rhs)
        })
        .collect();

    let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
    let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
    let base = 2 * nvars;
    let total = base + n_slack + n_art;

    let mut tableau: Vec<Vec<Rational>> = Vec::with_capacity(m);
    let mut basis: Vec<usize> = Vec::with_capacity(m);
    let mut slack_col = base;
    let mut art_col = base + n_slack;
    for (coeffs, rel, rhs) in rows.drain(..) {
        let mut row = vec![Rational::zero(); total + 1];
        row[..base].clone_from_slice(&coeffs);
        row[total] = rhs;
        match rel {
            Relation::Le => {
                row[slack_col] = Rational::one();
                basis.push(slack_col);
                slack_col += 1;
            }
            Relation::Ge => {
                row[slack_col] = -Rational::one();
                slack_col += 1;
                row[art_col] = Rational::one();
                basis.push(art_col);
                art_col += 1;
            }
            Relation::Eq => {
                row[art_col] = Rational::one();
                basis.push(art_col);
                art_col += 1;
            }
        }
        tableau.push(row);
    }

    // objective: minimise the sum of artificials; reduced costs row
    let art_start = base + n_slack;
    let mut cost = vec![Rational::zero(); total + 1];
    for (r, &b) in basis.iter().enumerate() {
        if b >= art_start {
            for (c, v) in cost.iter_mut().zip(&tableau[r]) {
                *c -= v;
            }
        }
    }
    for c in cost.iter_mut().take(total).skip(art_start) {
        *c += Rational::one();
    }
    // cost[j] for j < total is the reduced cost; cost[total] = -objective

    loop {
        let entering = (0..total).find(|&j| cost[j].is_negative());
        let Some(e) = entering else { break };
        // ratio test, ties broken by smallest basic variable index
        let mut leave: Option<(usize, Rational)> = None;
        for (r, row) in tableau.iter().enumerate() {
            if row[e].is_positive() {
                let ratio = &row[total] / &row[e];
                let better = match &leave {
                    None => true,
                    Some((lr, lratio)) => ratio < *lratio || (ratio == *lratio && basis[r] < basis[*lr]),
                };
                if better {
                    leave = Some((r, ratio));
                }
            }
        }
        // phase I objective is bounded below by 0, so a leaving row exists
        let Some((p, _)) = leave else { break };
        pivot(&mut tableau, &mut cost, p, e);
        basis[p] = e;
    }

    Ok(cost[total].is_zero())
}

fn pivot(tableau: &mut [Vec<Rational>], cost: &mut [Rational], p: usize, e: usize) {
    let pv = tableau[p][e].clone();
    for v in tableau[p].iter_mut() {
        *v /= &pv;
    }
    let prow = tableau[p].clone();
    for (r, row) in tableau.iter_mut().enumerate() {
        if r == p || row[e].is_zero() {
            continue;
        }
        let f = row[e].clone();
        for (v, pvv) in row.iter_mut().zip(&prow) {
            if !pvv.is_zero() {
                *v -= &f * pvv;
            }
        }
    }
    if !cost[e].is_zero() {
        let f = cost[e].clone();
        for (v, pvv) in cost.iter_mut().zip(&prow) {
            if !pvv.is_zero() {
                *v -= &f * pvv;
            }
        }
    }
}

/// Feasibility of the Collatz–Wielandt system `{A x <= x, x >= 1}` for a
/// square nonnegative matrix. For irreducible `A` this holds iff the
/// spectral radius is at most 1.
pub fn collatz_wielandt_feasible(a: &super::RationalMatrix) -> Result<bool> {
    let n = a.rows();
    let mut cons = Vec::with_capacity(2 * n);
    for i in 0..n {
        let mut row: Vec<Rational> = a.row(i).to_vec();
        row[i] -= Rational::one();
        cons.push(LinearConstraint::new(row, Relation::Le, Rational::zero()));
        let mut unit = vec![Rational::zero(); n];
        unit[i] = Rational::one();
        cons.push(LinearConstraint::new(unit, Relation::Ge, Rational::one()));
    }
    lp_feasible(n, &cons)
}
