use num_traits::Zero;

use super::{Scfg, Symbol};
use crate::numerics::Rational;

/// Sum of parse-tree probabilities over trees with a bounded number of
/// internal nodes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BruteForce {
    pub value: Rational,
    /// No parse tree of the string has more than `node_cap` internal nodes,
    /// so `value` is the exact string probability.
    pub exact: bool,
}

/// Coefficients indexed by the number of rule applications.
trait Weight: Clone {
    fn zero() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&mut self, o: &Self);
    fn mul(&self, o: &Self) -> Self;
}

impl Weight for Rational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&mut self, o: &Self) {
        *self += o;
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
}

impl Weight for bool {
    fn zero() -> Self {
        false
    }
    fn is_zero(&self) -> bool {
        !*self
    }
    fn add(&mut self, o: &Self) {
        *self |= *o;
    }
    fn mul(&self, o: &Self) -> Self {
        *self && *o
    }
}

/// Truncated (or saturating) polynomial arithmetic in the node count.
struct Graded {
    len: usize,
    /// Degrees past the end fold into the last slot instead of being dropped.
    saturate: bool,
}

impl Graded {
    fn zeros<W: Weight>(&self) -> Vec<W> {
        vec![W::zero(); self.len]
    }

    fn index(&self, d: usize) -> Option<usize> {
        if d < self.len {
            Some(d)
        } else if self.saturate {
            Some(self.len - 1)
        } else {
            None
        }
    }

    fn conv<W: Weight>(&self, a: &[W], b: &[W]) -> Vec<W> {
        let mut out: Vec<W> = self.zeros();
        for (i, x) in a.iter().enumerate().filter(|(_, x)| !x.is_zero()) {
            for (j, y) in b.iter().enumerate().filter(|(_, y)| !y.is_zero()) {
                if let Some(k) = self.index(i + j) {
                    out[k].add(&x.mul(y));
                }
            }
        }
        out
    }

    fn monomial<W: Weight>(&self, d: usize, w: W) -> Vec<W> {
        let mut out = self.zeros();
        if let Some(k) = self.index(d) {
            out[k] = w;
        }
        out
    }
}

fn add_into<W: Weight>(acc: &mut [W], x: &[W]) {
    for (a, b) in acc.iter_mut().zip(x) {
        a.add(b);
    }
}

/// Graded inside values for every span and nonterminal.
struct Table<'g, W> {
    g: &'g Scfg,
    w: &'g [usize],
    ops: Graded,
    weight: &'g dyn Fn(&Rational) -> W,
    /// Derivations of ε, by nonterminal.
    eps: Vec<Vec<W>>,
    /// spans[i][len - 1][A]
    spans: Vec<Vec<Vec<Vec<W>>>>,
}

impl<'g, W: Weight> Table<'g, W> {
    fn new(g: &'g Scfg, w: &'g [usize], ops: Graded, weight: &'g dyn Fn(&Rational) -> W) -> Self {
        let n = w.len();
        Table {
            g,
            w,
            ops,
            weight,
            eps: Vec::new(),
            spans: (0..n).map(|_| Vec::new()).collect(),
        }
    }

    fn cell(&self, i: usize, j: usize, a: usize) -> &[W] {
        if i == j {
            &self.eps[a]
        } else {
            &self.spans[i][j - i - 1][a]
        }
    }

    /// `p z` times the product of ε-series of all symbols but `skip`, or
    /// `None` if some other symbol is a terminal.
    fn eps_product(&self, rhs: &[Symbol], p: &Rational, skip: Option<usize>) -> Option<Vec<W>> {
        let mut acc = self.ops.monomial(1, (self.weight)(p));
        for (k, s) in rhs.iter().enumerate() {
            if Some(k) == skip {
                continue;
            }
            match s {
                Symbol::Terminal(_) => return None,
                Symbol::Nonterminal(b) => acc = self.ops.conv(&acc, &self.eps[*b]),
            }
        }
        Some(acc)
    }

    /// Solves `f = base + sum_B c[A][B] f_B` where every `c[A][B]` has no
    /// constant term.
    fn solve_linear(&self, base: Vec<Vec<W>>, coef: &[Vec<(usize, Vec<W>)>], fixpoint: bool) -> Vec<Vec<W>> {
        let nt = base.len();
        if fixpoint {
            let mut f = base.clone();
            loop {
                let mut next = base.clone();
                for a in 0..nt {
                    for (b, c) in &coef[a] {
                        add_into(&mut next[a], &self.ops.conv(c, &f[*b]));
                    }
                }
                if next
                    .iter()
                    .zip(&f)
                    .all(|(x, y)| x.iter().zip(y).all(|(u, v)| u.is_zero() == v.is_zero()))
                {
                    return next;
                }
                f = next;
            }
        }
        let mut f: Vec<Vec<W>> = vec![self.ops.zeros(); nt];
        for d in 0..self.ops.len {
            for a in 0..nt {
                let mut v = base[a][d].clone();
                for (b, c) in &coef[a] {
                    for e in 1..=d {
                        if !c[e].is_zero() && !f[*b][d - e].is_zero() {
                            v.add(&c[e].mul(&f[*b][d - e]));
                        }
                    }
                }
                f[a][d] = v;
            }
        }
        f
    }

    fn fill(&mut self, fixpoint: bool) {
        let g = self.g;
        let nt = g.nonterminals().len();
        // ε-series: each rule is p z times a product over its children
        let mut unit: Vec<Vec<(usize, Vec<W>)>> = vec![Vec::new(); nt];
        let mut base: Vec<Vec<W>> = vec![self.ops.zeros(); nt];
        self.eps = vec![self.ops.zeros(); nt];
        // nonlinear in ε: each round settles one more degree, and the
        // saturating variant is a monotone Boolean fixpoint
        let mut round = 0;
        loop {
            let mut next: Vec<Vec<W>> = vec![self.ops.zeros(); nt];
            for r in g.rules() {
                if let Some(t) = self.eps_product(&r.rhs, &r.probability, None) {
                    add_into(&mut next[r.lhs], &t);
                }
            }
            let stable = next
                .iter()
                .zip(&self.eps)
                .all(|(x, y)| x.iter().zip(y).all(|(u, v)| u.is_zero() == v.is_zero()));
            self.eps = next;
            round += 1;
            if (fixpoint && stable) || (!fixpoint && round > self.ops.len) {
                break;
            }
        }
        // same-span recursion: one child takes the whole span, the rest ε
        for r in g.rules() {
            for (k, s) in r.rhs.iter().enumerate() {
                if let Symbol::Nonterminal(b) = s {
                    if let Some(c) = self.eps_product(&r.rhs, &r.probability, Some(k)) {
                        unit[r.lhs].push((*b, c));
                    }
                }
            }
        }
        let n = self.w.len();
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                for b in base.iter_mut() {
                    *b = self.ops.zeros();
                }
                for r in g.rules() {
                    let t = self.strict_split(&r.rhs, &r.probability, i, j);
                    add_into(&mut base[r.lhs], &t);
                }
                let f = self.solve_linear(base.clone(), &unit, fixpoint);
                self.spans[i].push(f);
            }
        }
    }

    /// Derivations of `w[i..j]` by the right-hand side where no
    /// nonterminal child takes the whole span.
    fn strict_split(&self, rhs: &[Symbol], p: &Rational, i: usize, j: usize) -> Vec<W> {
        // states[pos - i]: series for the prefix of rhs ending at pos
        let width = j - i + 1;
        let mut states: Vec<Option<Vec<W>>> = vec![None; width];
        states[0] = Some(self.ops.monomial(1, (self.weight)(p)));
        for s in rhs {
            let mut next: Vec<Option<Vec<W>>> = vec![None; width];
            for from in 0..width {
                let Some(acc) = &states[from] else { continue };
                let pos = i + from;
                match s {
                    Symbol::Terminal(a) => {
                        if pos < j && self.w[pos] == *a {
                            merge(&mut next[from + 1], acc.clone());
                        }
                    }
                    Symbol::Nonterminal(b) => {
                        for to in pos..=j {
                            if (pos, to) == (i, j) {
                                continue;
                            }
                            let child = self.cell(pos, to, *b);
                            if child.iter().all(|x| x.is_zero()) {
                                continue;
                            }
                            merge(&mut next[to - i], self.ops.conv(acc, child));
                        }
                    }
                }
            }
            states = next;
        }
        states[width - 1].take().unwrap_or_else(|| self.ops.zeros())
    }
}

fn merge<W: Weight>(slot: &mut Option<Vec<W>>, x: Vec<W>) {
    match slot {
        Some(acc) => add_into(acc, &x),
        None => *slot = Some(x),
    }
}

/// Enumerates the probability mass of all parse trees of `w` from the start
/// symbol with at most `node_cap` internal nodes, exactly in rationals.
pub fn brute_force_string_prob(g: &Scfg, w: &[usize], node_cap: usize) -> BruteForce {
    let rational = |p: &Rational| p.clone();
    let mut values = Table::new(
        g,
        w,
        Graded {
            len: node_cap + 1,
            saturate: false,
        },
        &rational,
    );
    values.fill(false);
    let positive = |p: &Rational| !Zero::is_zero(p);
    let mut sizes = Table::new(
        g,
        w,
        Graded {
            len: node_cap + 2,
            saturate: true,
        },
        &positive,
    );
    sizes.fill(true);

    let pick = |t: &Table<'_, Rational>| -> Rational {
        let series = t.cell(0, w.len(), g.start());
        series.iter().sum()
    };
    let too_big = *sizes.cell(0, w.len(), g.start()).last().expect("nonempty series");
    BruteForce {
        value: pick(&values),
        exact: !too_big,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;
    use crate::scfg::parse_scfg;

    #[test]
    fn catalan_counts() {
        let g = parse_scfg("S -> 2/3 S S ; S -> 1/3 'a'").unwrap();
        let b = brute_force_string_prob(&g, &[0, 0, 0], 50);
        assert_eq!(
            b,
            BruteForce {
                value: rat(8, 243),
                exact: true
            }
        );
        let b = brute_force_string_prob(&g, &[0, 0], 50);
        assert_eq!(b.value, rat(2, 27));
        // 'aaa' needs 5 rule applications
        let b = brute_force_string_prob(&g, &[0, 0, 0], 4);
        assert_eq!(
            b,
            BruteForce {
                value: rat(0, 1),
                exact: false
            }
        );
    }

    #[test]
    fn unary_cycle_is_a_series() {
        let g = parse_scfg("S -> 1/2 S ; S -> 1/2 'a'").unwrap();
        let b = brute_force_string_prob(&g, &[0], 20);
        assert!(!b.exact);
        // 1/2 + 1/4 + ... over trees with at most 20 nodes
        assert_eq!(b.value, rat(1, 1) - rat(1, 1 << 20));
    }

    #[test]
    fn epsilon_trees_are_counted() {
        let g = parse_scfg("S -> 1/2 'a' B ; S -> 1/2 'b' ; B -> 1/3 eps ; B -> 2/3 'b'").unwrap();
        assert_eq!(
            brute_force_string_prob(&g, &[0], 10),
            BruteForce {
                value: rat(1, 6),
                exact: true
            }
        );
        assert_eq!(brute_force_string_prob(&g, &[0, 1], 10).value, rat(1, 3));
        assert_eq!(brute_force_string_prob(&g, &[1], 10).value, rat(1, 2));
        assert_eq!(brute_force_string_prob(&g, &[], 10).value, rat(0, 1));
    }

    #[test]
    fn epsilon_cycles_make_infinitely_many_trees() {
        // S -> S S with ε children: infinitely many trees for every string
        let g = parse_scfg("S -> 1/4 S S ; S -> 1/4 eps ; S -> 1/2 'a'").unwrap();
        let b = brute_force_string_prob(&g, &[0], 12);
        assert!(!b.exact);
        assert!(b.value > rat(1, 2));
        let more = brute_force_string_prob(&g, &[0], 16);
        assert!(more.value > b.value);
    }
}
