use std::collections::HashSet;

use num_bigint::BigUint;
use num_traits::Zero;
use rayon::prelude::*;

use super::{CnfGrammar, Symbol};
use crate::error::{Error, Result};
use crate::numerics::{ceil_log2, pow2, Dyadic, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct InsideResult {
    /// Lower approximation of the inside probability of the start symbol.
    pub value: Dyadic,
    /// Certified bound on the distance to the exact inside probability of
    /// the given grammar.
    pub bound: Rational,
    /// Every cell is a multiple of `2^-scale`.
    pub scale: u64,
    /// `m`: rules plus distinct right-hand sides.
    pub m: u64,
}

/// Audited rounding error of the CKY table for strings of length `n` at
/// scale `t`, when each nonterminal has at most `per_lhs` rules.
///
/// Rule probabilities and cells are rounded down to multiples of `2^-t`.
/// A cell of span `j` inherits the errors of all split pairs
/// (`|LR - L'R'| <= |L - L'| + |R - R'|` as all values lie in `[0, 1]`),
/// the rounding of rule probabilities over at most `j - 1` splits, and one
/// rounding of its own.
pub fn cky_error_bound(n: usize, t: u64, per_lhs: usize) -> Rational {
    if n == 0 {
        return pow2(-(t as i64));
    }
    let u = pow2(-(t as i64));
    let r = Rational::from_integer(per_lhs.into());
    let mut errors: Vec<Rational> = vec![&r * &u];
    let mut sum = errors[0].clone();
    for j in 2..=n {
        let splits = Rational::from_integer((j - 1).into());
        let e = Rational::from_integer(2.into()) * &sum + &u + &r * splits * &u;
        sum += &e;
        errors.push(e);
    }
    errors.pop().expect("n >= 1")
}

/// Inside probability `q^S_{1,|w|}` of a CNF grammar, computed bottom-up
/// over spans with every cell rounded down to scale `2^-t`.
///
/// `t` starts at `ceil(log2((4 m^2)^N 2N / delta))` and is raised until the
/// audited bound of [`cky_error_bound`] is at most `delta`. Terminal indices
/// outside the grammar's alphabet give probability 0.
pub fn inside_probability(cnf: &CnfGrammar, w: &[usize], delta: &Rational) -> Result<InsideResult> {
    if delta.is_zero() || *delta < Rational::zero() {
        return Err(Error::InvalidArgument("tolerance must be positive".into()));
    }
    let g = cnf.grammar();
    let distinct: HashSet<&Vec<Symbol>> = g.rules().iter().map(|r| &r.rhs).collect();
    let m = (g.rules().len() + distinct.len()) as u64;
    let n = w.len();
    let nt = g.nonterminals().len();
    let mut per_lhs = vec![0usize; nt];
    for r in g.rules() {
        per_lhs[r.lhs] += 1;
    }
    let per_lhs = per_lhs.into_iter().max().unwrap_or(0).max(1);

    let horizon = n.max(1) as i64;
    let four_m2 = Rational::from_integer((4 * m * m).into());
    let initial = num_traits::pow(four_m2, n.max(1)) * Rational::from_integer((2 * horizon).into()) / delta;
    let mut t = ceil_log2(&initial).max(1) as u64;
    loop {
        if cky_error_bound(n, t, per_lhs) <= *delta {
            break;
        }
        t += 1;
    }
    let bound = cky_error_bound(n, t, per_lhs);

    if n == 0 {
        let p = cnf.epsilon_probability();
        let value = Dyadic::round_down(&p, t);
        let bound = if value.to_rational() == p {
            Rational::zero()
        } else {
            pow2(-(t as i64))
        };
        return Ok(InsideResult {
            value,
            bound,
            scale: t,
            m,
        });
    }
    if w.iter().any(|&a| a >= g.terminals().len()) {
        return Ok(InsideResult {
            value: Dyadic::zero(t),
            bound: Rational::zero(),
            scale: t,
            m,
        });
    }

    let mantissa = |p: &Rational| Dyadic::round_down(p, t).mantissa().clone();
    let mut lexical: Vec<(usize, usize, BigUint)> = Vec::new();
    let mut binary: Vec<(usize, usize, usize, BigUint)> = Vec::new();
    for r in g.rules() {
        match r.rhs.as_slice() {
            [Symbol::Terminal(a)] => lexical.push((r.lhs, *a, mantissa(&r.probability))),
            [Symbol::Nonterminal(b), Symbol::Nonterminal(c)] => {
                binary.push((r.lhs, *b, *c, mantissa(&r.probability)))
            }
            _ => {}
        }
    }
    let shift = 2 * t as usize;

    // table[len - 1][i][A]: mantissa of q^A for the span of length len at i
    let mut table: Vec<Vec<Vec<BigUint>>> = Vec::with_capacity(n);
    let first: Vec<Vec<BigUint>> = w
        .iter()
        .map(|&a| {
            let mut cell = vec![BigUint::zero(); nt];
            for (lhs, b, p) in &lexical {
                if *b == a {
                    cell[*lhs] += p;
                }
            }
            cell
        })
        .collect();
    table.push(first);
    for len in 2..=n {
        let row: Vec<Vec<BigUint>> = (0..=n - len)
            .into_par_iter()
            .map(|i| {
                let mut acc = vec![BigUint::zero(); nt];
                for left in 1..len {
                    let lcell = &table[left - 1][i];
                    let rcell = &table[len - left - 1][i + left];
                    for (a, b, c, p) in &binary {
                        if lcell[*b].is_zero() || rcell[*c].is_zero() || p.is_zero() {
                            continue;
                        }
                        acc[*a] += p * &lcell[*b] * &rcell[*c];
                    }
                }
                acc.into_iter().map(|v| v >> shift).collect()
            })
            .collect();
        table.push(row);
    }
    let top = table[n - 1][0][g.start()].clone();
    let value = Dyadic::new(top, t);
    Ok(InsideResult {
        value,
        bound,
        scale: t,
        m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::scfg::parse_scfg;

    fn cnf(text: &str) -> CnfGrammar {
        CnfGrammar::new(parse_scfg(text).unwrap()).unwrap()
    }

    fn within(res: &InsideResult, exact: Rational) {
        let v = res.value.to_rational();
        assert!(v <= exact, "rounded value above exact");
        assert!(&exact - &v <= res.bound, "outside bound");
    }

    #[test]
    fn single_terminal_is_exact() {
        let g = cnf("S -> 1 'a'");
        let r = inside_probability(&g, &[0], &rat(1, 1000)).unwrap();
        assert_eq!(r.value.to_rational(), rat(1, 1));
    }

    #[test]
    fn catalan_grammar() {
        let g = cnf("S -> 2/3 S S ; S -> 1/3 'a'");
        let delta = rat(1, 1 << 30);
        within(&inside_probability(&g, &[0, 0], &delta).unwrap(), rat(2, 27));
        within(&inside_probability(&g, &[0, 0, 0], &delta).unwrap(), rat(8, 243));
    }

    #[test]
    fn epsilon_and_unknown_terminals() {
        let g = cnf("S -> 1/2 eps ; S -> 1/2 A A ; A -> 1 'a'");
        let r = inside_probability(&g, &[], &rat(1, 100)).unwrap();
        assert_eq!(r.value.to_rational(), rat(1, 2));
        let r = inside_probability(&g, &[7], &rat(1, 100)).unwrap();
        assert!(r.value.is_zero());
        within(&inside_probability(&g, &[0, 0], &rat(1, 100)).unwrap(), rat(1, 2));
    }

    #[test]
    fn bound_grows_with_length() {
        assert!(cky_error_bound(5, 40, 2) > cky_error_bound(4, 40, 2));
        assert!(cky_error_bound(5, 41, 2) < cky_error_bound(5, 40, 2));
    }
}
