use std::collections::HashMap;

use super::{Rule, Scfg, Symbol};
use crate::error::{Error, Result};
use crate::pps::parse::Lexer;

/// Parses a grammar and requires it to be proper.
///
/// One rule per line or per `;`-separated fragment: `NT -> PROB SYM*`, where
/// a symbol is a nonterminal name or a quoted terminal `'a'`, and `eps`
/// stands for the empty right-hand side. `start NT` selects the start
/// symbol, which otherwise is the left-hand side of the first rule. `#`
/// starts a comment.
pub fn parse_scfg(text: &str) -> Result<Scfg> {
    let g = parse_scfg_lenient(text)?;
    g.check_proper()?;
    Ok(g)
}

/// As [`parse_scfg`] but accepts per-nonterminal sums other than 1, for use
/// with [`super::make_proper`].
pub fn parse_scfg_lenient(text: &str) -> Result<Scfg> {
    let mut nonterminals: Vec<String> = Vec::new();
    let mut nt_index: HashMap<String, usize> = HashMap::new();
    let mut terminals: Vec<String> = Vec::new();
    let mut t_index: HashMap<String, usize> = HashMap::new();
    let mut rules: Vec<Rule> = Vec::new();
    let mut start: Option<usize> = None;
    let mut first_lhs: Option<usize> = None;

    let intern = |name: String, names: &mut Vec<String>, index: &mut HashMap<String, usize>| {
        *index.entry(name.clone()).or_insert_with(|| {
            names.push(name);
            names.len() - 1
        })
    };

    for (lineno, line) in text.lines().enumerate() {
        let line_no = lineno + 1;
        for (offset, fragment) in fragments(line) {
            if fragment.trim().is_empty() {
                continue;
            }
            let mut lx = Lexer::with_offset(fragment, line_no, offset);
            let (head, _) = lx.ident()?.ok_or_else(|| lx.error("expected nonterminal"))?;
            if head == "start" && !lx.eat_str("->") {
                let (name, col) = lx.ident()?.ok_or_else(|| lx.error("expected start symbol"))?;
                if !lx.at_end() {
                    return Err(lx.error("unexpected text after start directive"));
                }
                if start.is_some() {
                    return Err(Error::parse(line_no, col, "start symbol given twice"));
                }
                start = Some(intern(name, &mut nonterminals, &mut nt_index));
                continue;
            } else if head != "start" && !lx.eat_str("->") {
                return Err(lx.error("expected `->`"));
            }
            if head == "eps" {
                return Err(Error::parse(line_no, offset + 1, "`eps` is not a nonterminal"));
            }
            let lhs = intern(head, &mut nonterminals, &mut nt_index);
            first_lhs.get_or_insert(lhs);
            let probability = lx.number()?.ok_or_else(|| lx.error("expected probability"))?;
            let mut rhs = Vec::new();
            let mut saw_eps = false;
            loop {
                if lx.at_end() {
                    break;
                }
                if let Some(t) = lx.quoted('\'')? {
                    rhs.push(Symbol::Terminal(intern(t, &mut terminals, &mut t_index)));
                    continue;
                }
                let col = lx.column();
                match lx.ident()? {
                    Some((name, _)) if name == "eps" => saw_eps = true,
                    Some((name, _)) => rhs.push(Symbol::Nonterminal(intern(
                        name,
                        &mut nonterminals,
                        &mut nt_index,
                    ))),
                    None => return Err(Error::parse(line_no, col, "expected symbol")),
                }
            }
            if saw_eps && !rhs.is_empty() {
                return Err(lx.error("`eps` must be the whole right-hand side"));
            }
            if !saw_eps && rhs.is_empty() {
                return Err(lx.error("empty right-hand side; write `eps`"));
            }
            rules.push(Rule {
                lhs,
                probability,
                rhs,
            });
        }
    }
    let start = start
        .or(first_lhs)
        .ok_or_else(|| Error::Malformed("grammar has no rules".into()))?;
    Scfg::new(nonterminals, terminals, rules, start)
}

/// Splits a line at `;` outside quotes and drops a trailing `#` comment.
/// Yields each fragment with its character offset in the line.
fn fragments(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut in_quote = false;
    let mut begin_byte = 0;
    let mut begin_char = 0;
    for (ci, (bi, c)) in line.char_indices().enumerate() {
        match c {
            '\'' => in_quote = !in_quote,
            ';' if !in_quote => {
                out.push((begin_char, &line[begin_byte..bi]));
                begin_byte = bi + 1;
                begin_char = ci + 1;
            }
            '#' if !in_quote => {
                out.push((begin_char, &line[begin_byte..bi]));
                return out;
            }
            _ => {}
        }
    }
    out.push((begin_char, &line[begin_byte..]));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::rat;

    #[test]
    fn example_grammar() {
        let g = parse_scfg("S -> 2/3 S S ; S -> 1/3 'a'").unwrap();
        assert_eq!(g.rules().len(), 2);
        assert_eq!(g.rules()[0].rhs, vec![Symbol::Nonterminal(0); 2]);
        assert_eq!(g.rules()[1].rhs, vec![Symbol::Terminal(0)]);
        assert_eq!(g.terminals(), ["a"]);
    }

    #[test]
    fn epsilon_start_and_duplicates() {
        let g =
            parse_scfg("# comment\nstart A\nS -> 1 'a'\nA -> 1/4 eps\nA -> 1/4 eps ; A -> 1/2 S").unwrap();
        assert_eq!(g.start(), 0);
        assert_eq!(g.nonterminals()[0], "A");
        assert_eq!(g.rules().len(), 4);
        assert!(g.rules()[1].rhs.is_empty() && g.rules()[2].rhs.is_empty());
    }

    #[test]
    fn improper_lists_sums() {
        match parse_scfg("S -> 0.9 'a'") {
            Err(Error::ImproperGrammar { sums }) => {
                assert_eq!(sums, vec![("S".to_string(), rat(9, 10))])
            }
            other => panic!("unexpected {other:?}"),
        }
        // a nonterminal without rules sums to 0
        assert!(matches!(
            parse_scfg("S -> 1 B"),
            Err(Error::ImproperGrammar { .. })
        ));
        assert!(parse_scfg_lenient("S -> 0.9 'a'").is_ok());
    }

    #[test]
    fn errors_carry_columns() {
        match parse_scfg("S -> 1 'a' ; S -> ?") {
            Err(Error::Parse { line: 1, column, .. }) => assert_eq!(column, 19),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(parse_scfg("S -> 1 eps 'a'"), Err(Error::Parse { .. })));
        assert!(matches!(parse_scfg("S -> 1"), Err(Error::Parse { .. })));
        assert!(matches!(parse_scfg("S -> 1 'a"), Err(Error::Parse { .. })));
        assert!(matches!(parse_scfg("S 1 'a'"), Err(Error::Parse { .. })));
    }

    #[test]
    fn quoted_separators() {
        let g = parse_scfg("S -> 1/2 ';' ; S -> 1/2 '#'").unwrap();
        assert_eq!(g.terminals(), [";", "#"]);
    }
}
