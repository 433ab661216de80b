use std::collections::HashMap;

use super::{Monomial, Polynomial, Pps};
use crate::error::{Error, Result};
use crate::numerics::{parse_rational, Rational};

/// Parses the line-oriented PPS format:
///
/// ```text
/// # comment
/// x = 1/2 x^2 + 1/4
/// y = 0.3 x y + 0.7
/// ```
///
/// A term is an optional coefficient followed by zero or more factors
/// `VAR` or `VAR^EXP`, optionally joined by `*`. A missing coefficient means
/// 1. Every variable on a right-hand side must have its own equation.
pub fn parse_pps(text: &str) -> Result<Pps> {
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut raw: Vec<(usize, Vec<RawTerm>)> = Vec::new();

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        let content = line.split('#').next().unwrap_or("");
        if content.trim().is_empty() {
            continue;
        }
        let mut lx = Lexer::new(content, line_no);
        let lhs = lx.ident()?.ok_or_else(|| lx.error("expected variable name"))?;
        lx.skip_ws();
        if !lx.eat('=') {
            return Err(lx.error("expected `=`"));
        }
        if index.contains_key(&lhs.0) {
            return Err(Error::parse(
                line_no,
                lhs.1,
                format!("variable `{}` defined twice", lhs.0),
            ));
        }
        index.insert(lhs.0.clone(), names.len());
        names.push(lhs.0);
        let terms = lx.terms()?;
        raw.push((line_no, terms));
    }

    let mut equations = Vec::with_capacity(names.len());
    for (_, terms) in raw {
        let mut out = Vec::with_capacity(terms.len());
        for t in terms {
            let mut powers = Vec::with_capacity(t.factors.len());
            for (name, exp, line, col) in t.factors {
                let v = *index
                    .get(&name)
                    .ok_or_else(|| Error::parse(line, col, format!("variable `{name}` has no equation")))?;
                powers.push((v, exp));
            }
            out.push((t.coeff, Monomial::from_powers(powers)));
        }
        equations.push(Polynomial::from_terms(out));
    }
    Pps::new(names, equations)
}

struct RawTerm {
    coeff: Rational,
    factors: Vec<(String, u64, usize, usize)>,
}

pub(crate) struct Lexer<'a> {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    offset: usize,
    _src: &'a str,
}

impl<'a> Lexer<'a> {
    pub(crate) fn new(src: &'a str, line: usize) -> Self {
        Lexer::with_offset(src, line, 0)
    }

    /// Lexer over a fragment that starts `offset` characters into its line.
    pub(crate) fn with_offset(src: &'a str, line: usize, offset: usize) -> Self {
        Lexer {
            chars: src.chars().collect(),
            pos: 0,
            line,
            offset,
            _src: src,
        }
    }

    pub(crate) fn column(&self) -> usize {
        self.pos + 1 + self.offset
    }

    pub(crate) fn error(&self, msg: impl Into<String>) -> Error {
        Error::parse(self.line, self.column(), msg)
    }

    pub(crate) fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    pub(crate) fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    pub(crate) fn at_end(&mut self) -> bool {
        self.skip_ws();
        self.pos >= self.chars.len()
    }

    pub(crate) fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    pub(crate) fn eat_str(&mut self, s: &str) -> bool {
        self.skip_ws();
        let n = s.chars().count();
        if self.chars.len() >= self.pos + n
            && self.chars[self.pos..self.pos + n].iter().copied().eq(s.chars())
        {
            self.pos += n;
            true
        } else {
            false
        }
    }

    /// Identifier `[A-Za-z_][A-Za-z0-9_]*` with its starting column.
    pub(crate) fn ident(&mut self) -> Result<Option<(String, usize)>> {
        self.skip_ws();
        let start = self.pos;
        match self.peek() {
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
            _ => return Ok(None),
        }
        while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        Ok(Some((
            self.chars[start..self.pos].iter().collect(),
            start + 1 + self.offset,
        )))
    }

    /// Text between a pair of `quote` characters, if one starts here.
    pub(crate) fn quoted(&mut self, quote: char) -> Result<Option<String>> {
        self.skip_ws();
        if self.peek() != Some(quote) {
            return Ok(None);
        }
        let start = self.pos;
        self.pos += 1;
        let begin = self.pos;
        while self.peek().is_some_and(|c| c != quote) {
            self.pos += 1;
        }
        if self.peek().is_none() {
            return Err(Error::parse(
                self.line,
                start + 1 + self.offset,
                "unterminated quote",
            ));
        }
        let text: String = self.chars[begin..self.pos].iter().collect();
        self.pos += 1;
        if text.is_empty() {
            return Err(Error::parse(self.line, start + 1 + self.offset, "empty terminal"));
        }
        Ok(Some(text))
    }

    /// A rational literal: `a/b`, decimal or integer.
    pub(crate) fn number(&mut self) -> Result<Option<Rational>> {
        self.skip_ws();
        let start = self.pos;
        let is_num = |c: char| c.is_ascii_digit() || c == '.' || c == '/';
        if !self.peek().is_some_and(|c| c.is_ascii_digit() || c == '.') {
            return Ok(None);
        }
        while self.peek().is_some_and(is_num) {
            self.pos += 1;
        }
        if self.peek().is_some_and(|c| c.is_ascii_alphabetic()) {
            return Err(Error::parse(
                self.line,
                start + 1 + self.offset,
                "malformed number",
            ));
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        parse_rational(&text).map(Some).ok_or_else(|| {
            Error::parse(
                self.line,
                start + 1 + self.offset,
                format!("malformed number `{text}`"),
            )
        })
    }

    fn unsigned(&mut self) -> Result<u64> {
        self.skip_ws();
        let start = self.pos;
        while self.peek().is_some_and(|c| c.is_ascii_digit()) {
            self.pos += 1;
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        text.parse::<u64>().ok().filter(|&e| e > 0).ok_or_else(|| {
            Error::parse(
                self.line,
                start + 1 + self.offset,
                "expected positive integer exponent",
            )
        })
    }

    fn terms(&mut self) -> Result<Vec<RawTerm>> {
        let mut terms = Vec::new();
        loop {
            terms.push(self.term()?);
            if self.at_end() {
                return Ok(terms);
            }
            if !self.eat('+') {
                return Err(self.error("expected `+` or end of line"));
            }
        }
    }

    fn term(&mut self) -> Result<RawTerm> {
        self.skip_ws();
        if self.peek() == Some('-') {
            return Err(self.error("negative coefficients are not allowed"));
        }
        let coeff = self.number()?;
        let had_coeff = coeff.is_some();
        let mut factors = Vec::new();
        loop {
            let star = self.eat('*');
            if star && !had_coeff && factors.is_empty() {
                return Err(self.error("`*` without left operand"));
            }
            match self.ident()? {
                Some((name, col)) => {
                    let exp = if self.eat('^') { self.unsigned()? } else { 1 };
                    factors.push((name, exp, self.line, col));
                }
                None if star => return Err(self.error("expected variable after `*`")),
                None => break,
            }
        }
        if !had_coeff && factors.is_empty() {
            return Err(self.error("expected a term"));
        }
        Ok(RawTerm {
            coeff: coeff.unwrap_or_else(|| Rational::from_integer(1.into())),
            factors,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;

    #[test]
    fn t1() {
        let p = parse_pps("x = 1/2 x^2 + 1/4").unwrap();
        assert_eq!(p.len(), 1);
        let eq = &p.equations()[0];
        assert_eq!(eq.constant, rat(1, 4));
        assert_eq!(eq.terms.len(), 1);
        assert_eq!(eq.terms[0].coeff, rat(1, 2));
        assert_eq!(eq.terms[0].monomial, Monomial::from_powers([(0, 2)]));
    }

    #[test]
    fn constant_and_implicit_coefficient() {
        let p = parse_pps("x = 1\ny = x*y # comment\nz = 0").unwrap();
        assert_eq!(p.equations()[0].constant, rat(1, 1));
        assert_eq!(p.equations()[1].terms[0].coeff, rat(1, 1));
        assert_eq!(p.equations()[1].terms[0].monomial.degree(), 2);
        assert!(p.equations()[2].terms.is_empty());
    }

    #[test]
    fn decimals_and_repeated_factors() {
        let p = parse_pps("x = 0.25 x x + 0.5 x^2 + .25").unwrap();
        let eq = &p.equations()[0];
        assert_eq!(eq.terms.len(), 1);
        assert_eq!(eq.terms[0].coeff, rat(3, 4));
        assert_eq!(eq.constant, rat(1, 4));
    }

    #[test]
    fn not_probabilistic() {
        match parse_pps("x = 2/3 x^2 + 2/3") {
            Err(Error::NotProbabilistic { var, sum }) => {
                assert_eq!(var, "x");
                assert_eq!(sum, rat(4, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn errors_carry_positions() {
        match parse_pps("x = 1/2 x\ny = 1/2 q") {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 9)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(
            parse_pps("x = -1/2 x"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(parse_pps("x = 1e-3"), Err(Error::Parse { .. })));
        assert!(matches!(parse_pps("x 1/2"), Err(Error::Parse { column: 3, .. })));
        assert!(matches!(parse_pps("x = 1/2 x +"), Err(Error::Parse { .. })));
        assert!(matches!(
            parse_pps("x = x\nx = 1"),
            Err(Error::Parse { line: 2, .. })
        ));
    }
}
