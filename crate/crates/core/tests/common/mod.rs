//! Generators and reference values shared by the integration tests.
#![allow(dead_code)]

use lfpsolve::numerics::{rat, Rational};
use lfpsolve::pps::{Monomial, Polynomial, Pps, SnfEquation, SnfSystem};
use lfpsolve::qualitative::classify;
use lfpsolve::scfg::{Rule, Scfg, Symbol};
use num_bigint::BigInt;
use num_traits::{One, Pow};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `1 - 1/sqrt(2)` rounded up to 200 decimals: the true value lies in
/// `[r - 10^-200, r]`.
pub fn one_minus_inv_sqrt2() -> Rational {
    let scale: BigInt = BigInt::from(10u32).pow(200u32);
    let s = (&scale * &scale / BigInt::from(2u32)).sqrt();
    Rational::one() - Rational::new(s, scale)
}

pub fn ten_pow(e: i32) -> Rational {
    let p = Rational::from_integer(BigInt::from(10u32).pow(e.unsigned_abs()));
    if e >= 0 {
        p
    } else {
        Rational::one() / p
    }
}

/// A random SNF system whose coefficients have denominators below 16, so
/// each coefficient has at most 8 bits. Every linear row sums to at most 1.
pub fn random_snf(r: &mut ChaCha8Rng, n: usize, quadratic_share: f64) -> SnfSystem {
    let equations = (0..n)
        .map(|_| {
            if r.random_bool(quadratic_share) {
                return SnfEquation::Quadratic(r.random_range(0..n), r.random_range(0..n));
            }
            let d: i64 = r.random_range(2..=15);
            let mut left = d - r.random_range(0..=1);
            let mut coeffs = Vec::new();
            for _ in 0..r.random_range(1..=n.min(3)) {
                if left == 0 {
                    break;
                }
                let w = r.random_range(1..=left);
                left -= w;
                coeffs.push((r.random_range(0..n), rat(w, d)));
            }
            let c = if left > 0 { r.random_range(0..=left) } else { 0 };
            SnfEquation::linear(coeffs, rat(c, d))
        })
        .collect();
    let names = (0..n).map(|i| format!("x{i}")).collect();
    SnfSystem::new(names, equations).expect("generated system is valid")
}

/// `count` SNF systems with at most `max_n` variables whose least fixed
/// point is strictly inside `(0, 1)` in every coordinate.
pub fn interior_corpus(seed: u64, count: usize, max_n: usize) -> Vec<SnfSystem> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let n = r.random_range(1..=max_n);
        let p = random_snf(&mut r, n, 0.35);
        if classify(&p).expect("classification succeeds").all_interior() {
            out.push(p);
        }
    }
    out
}

/// A random PPS (not in normal form) with monomials of degree at most 3.
pub fn random_pps(r: &mut ChaCha8Rng, n: usize) -> Pps {
    let equations = (0..n)
        .map(|_| {
            let d: i64 = r.random_range(2..=12);
            let mut left = d - r.random_range(0..=1);
            let mut terms = Vec::new();
            for _ in 0..r.random_range(1..=3) {
                if left == 0 {
                    break;
                }
                let w = r.random_range(1..=left);
                left -= w;
                let degree = r.random_range(0..=3);
                let powers: Vec<(usize, u64)> = (0..degree).map(|_| (r.random_range(0..n), 1)).collect();
                terms.push((rat(w, d), Monomial::from_powers(powers)));
            }
            Polynomial::from_terms(terms)
        })
        .collect();
    let names = (0..n).map(|i| format!("x{i}")).collect();
    Pps::new(names, equations).expect("generated system is probabilistic")
}

#[derive(Clone, Copy, Debug)]
pub struct GrammarShape {
    pub nonterminals: usize,
    pub epsilon: bool,
    /// Allow `A -> B` only for `B` after `A`, so no unary cycles.
    pub acyclic_unary: bool,
    pub unary: bool,
    /// Right-hand sides only mention later nonterminals, so every string
    /// has finitely many parse trees.
    pub acyclic: bool,
}

impl GrammarShape {
    pub fn new(nonterminals: usize) -> Self {
        GrammarShape {
            nonterminals,
            epsilon: false,
            acyclic_unary: true,
            unary: true,
            acyclic: false,
        }
    }
}

/// A random proper grammar over the terminals `a`, `b` with rule weights
/// in `1..=4`, normalised per nonterminal.
pub fn random_grammar(r: &mut ChaCha8Rng, shape: GrammarShape) -> Scfg {
    let k = shape.nonterminals;
    let names: Vec<String> = ["S", "A", "B", "C"]
        .iter()
        .take(k)
        .map(|s| s.to_string())
        .collect();
    let mut rules = Vec::new();
    for lhs in 0..k {
        let mut drafts: Vec<(i64, Vec<Symbol>)> = Vec::new();
        // one terminal rule keeps every nonterminal productive
        drafts.push((
            r.random_range(1..=4),
            vec![Symbol::Terminal(r.random_range(0..2))],
        ));
        for _ in 0..r.random_range(0..=3) {
            let acyclic = shape.acyclic;
            if acyclic && lhs + 1 == k {
                break;
            }
            let nt = |r: &mut ChaCha8Rng| {
                Symbol::Nonterminal(r.random_range(if acyclic { lhs + 1 } else { 0 }..k))
            };
            let rhs = match r.random_range(0..6) {
                0 => vec![Symbol::Terminal(r.random_range(0..2))],
                1 | 2 => vec![nt(r), nt(r)],
                3 => vec![Symbol::Terminal(r.random_range(0..2)), nt(r)],
                4 => vec![nt(r), Symbol::Terminal(r.random_range(0..2)), nt(r)],
                _ => {
                    let unary_ok = shape.unary && (!shape.acyclic_unary || lhs + 1 < k);
                    if unary_ok {
                        let lo = if shape.acyclic_unary { lhs + 1 } else { 0 };
                        vec![Symbol::Nonterminal(r.random_range(lo..k))]
                    } else if shape.epsilon {
                        Vec::new()
                    } else {
                        vec![nt(r), nt(r)]
                    }
                }
            };
            drafts.push((r.random_range(1..=4), rhs));
        }
        if shape.epsilon && r.random_bool(0.5) {
            drafts.push((r.random_range(1..=4), Vec::new()));
        }
        let total: i64 = drafts.iter().map(|d| d.0).sum();
        rules.extend(drafts.into_iter().map(|(w, rhs)| Rule {
            lhs,
            probability: rat(w, total),
            rhs,
        }));
    }
    Scfg::new(names, vec!["a".into(), "b".into()], rules, 0).expect("generated grammar is valid")
}

/// Every string over `{0, 1}` of length at most `max_len`.
pub fn all_strings(max_len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|w: &Vec<usize>| {
                (0..2).map(move |t| {
                    let mut v = w.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

pub fn names(w: &[usize]) -> Vec<&'static str> {
    w.iter().map(|&t| ["a", "b"][t]).collect()
}
