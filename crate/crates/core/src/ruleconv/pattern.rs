//! Token patterns and output templates for conversion rules.
//!
//! A pattern is a whitespace-separated list of elements. `{name:class}`
//! captures tokens; anything else must equal a token's text exactly.
//!
//! | class   | matches                                                     |
//! |---------|-------------------------------------------------------------|
//! | `ident` | one identifier                                              |
//! | `name`  | dotted identifier path, `a.b.c`                             |
//! | `atom`  | one identifier, number, string or keyword                   |
//! | `expr`  | one or more balanced tokens with no top-level `,` or `:`    |
//! | `text`  | one or more balanced tokens                                 |
//!
//! `{name}` alone means `{name:expr}`. Templates refer to captures as
//! `{name}` or `{name:filter}` where the filter is `cond` (verbalize
//! comparison and boolean operators) or `dec` (subtract one; computed for
//! integer literals, written as `x-1` otherwise).

use std::collections::HashMap;

use crate::pylex::{span_text, Token, TokenKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CaptureClass {
    Ident,
    Name,
    Atom,
    Expr,
    Text,
}

impl CaptureClass {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "ident" => Self::Ident,
            "name" => Self::Name,
            "atom" => Self::Atom,
            "expr" => Self::Expr,
            "text" => Self::Text,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Element {
    Literal(String),
    Capture { name: String, class: CaptureClass },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Filter {
    Cond,
    Dec,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Piece {
    Text(String),
    Slot { name: String, filter: Option<Filter> },
}

/// Splits `{a:b}` into `("a", Some("b"))`; `None` if `s` is not braced.
pub(crate) fn braced(s: &str) -> Option<(&str, Option<&str>)> {
    let inner = s.strip_prefix('{')?.strip_suffix('}')?;
    let (name, extra) = match inner.split_once(':') {
        Some((n, e)) => (n, Some(e)),
        None => (inner, None),
    };
    let valid = !name.is_empty() && name.chars().all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_');
    valid.then_some((name, extra))
}

pub(crate) fn parse_template(s: &str) -> Result<Vec<Piece>, String> {
    let mut pieces = Vec::new();
    let mut rest = s;
    while let Some(open) = rest.find('{') {
        let close = rest[open..].find('}').ok_or_else(|| format!("unclosed placeholder in template `{s}`"))? + open;
        let (name, filter) = braced(&rest[open..=close]).ok_or_else(|| format!("malformed placeholder `{}`", &rest[open..=close]))?;
        let filter = match filter {
            None => None,
            Some("cond") => Some(Filter::Cond),
            Some("dec") => Some(Filter::Dec),
            Some(other) => return Err(format!("unknown filter `{other}`")),
        };
        if open > 0 {
            pieces.push(Piece::Text(rest[..open].to_string()));
        }
        pieces.push(Piece::Slot {
            name: name.to_string(),
            filter,
        });
        rest = &rest[close + 1..];
    }
    if !rest.is_empty() {
        pieces.push(Piece::Text(rest.to_string()));
    }
    Ok(pieces)
}

fn opens(t: &Token) -> bool {
    t.kind == TokenKind::Delimiter && matches!(t.text.as_str(), "(" | "[" | "{")
}

fn closes(t: &Token) -> bool {
    t.kind == TokenKind::Delimiter && matches!(t.text.as_str(), ")" | "]" | "}")
}

fn class_admits(class: CaptureClass, toks: &[Token]) -> bool {
    match class {
        CaptureClass::Ident => toks.len() == 1 && toks[0].kind == TokenKind::Ident,
        CaptureClass::Atom => {
            toks.len() == 1
                && matches!(
                    toks[0].kind,
                    TokenKind::Ident | TokenKind::Number | TokenKind::Str | TokenKind::Keyword
                )
        }
        CaptureClass::Name => {
            toks.len() % 2 == 1
                && toks.iter().enumerate().all(|(i, t)| {
                    if i % 2 == 0 {
                        t.kind == TokenKind::Ident
                    } else {
                        t.kind == TokenKind::Delimiter && t.text == "."
                    }
                })
        }
        CaptureClass::Expr | CaptureClass::Text => {
            let mut depth = 0i32;
            for t in toks {
                if opens(t) {
                    depth += 1;
                } else if closes(t) {
                    depth -= 1;
                    if depth < 0 {
                        return false;
                    }
                } else if depth == 0
                    && class == CaptureClass::Expr
                    && t.kind == TokenKind::Delimiter
                    && (t.text == "," || t.text == ":")
                {
                    return false;
                }
            }
            depth == 0 && !toks.is_empty()
        }
    }
}

pub type Captures<'a> = HashMap<&'a str, &'a [Token]>;

/// Matches `pattern` against the whole of `tokens`. Captures take the
/// shortest span that still lets the rest of the pattern match.
pub fn match_pattern<'p, 't>(pattern: &'p [Element], tokens: &'t [Token]) -> Option<HashMap<&'p str, &'t [Token]>> {
    let mut caps = HashMap::new();
    if match_from(pattern, tokens, 0, 0, &mut caps) {
        Some(caps)
    } else {
        None
    }
}

fn match_from<'p, 't>(
    pattern: &'p [Element],
    tokens: &'t [Token],
    pi: usize,
    ti: usize,
    caps: &mut HashMap<&'p str, &'t [Token]>,
) -> bool {
    let Some(elem) = pattern.get(pi) else {
        return ti == tokens.len();
    };
    match elem {
        Element::Literal(lit) => {
            tokens.get(ti).is_some_and(|t| &t.text == lit) && match_from(pattern, tokens, pi + 1, ti + 1, caps)
        }
        Element::Capture { name, class } => {
            for end in ti + 1..=tokens.len() {
                let span = &tokens[ti..end];
                if !class_admits(*class, span) {
                    // single-token classes cannot grow into a match
                    if matches!(class, CaptureClass::Ident | CaptureClass::Atom) {
                        return false;
                    }
                    continue;
                }
                caps.insert(name.as_str(), span);
                if match_from(pattern, tokens, pi + 1, end, caps) {
                    return true;
                }
                caps.remove(name.as_str());
            }
            false
        }
    }
}

fn verbal(tok: &Token) -> Option<&'static str> {
    if !matches!(tok.kind, TokenKind::Operator | TokenKind::Keyword) {
        return None;
    }
    Some(match tok.text.as_str() {
        "==" => "EQUALS",
        "!=" => "NOT EQUAL TO",
        "<" => "LESS THAN",
        ">" => "GREATER THAN",
        "<=" => "LESS THAN OR EQUAL TO",
        ">=" => "GREATER THAN OR EQUAL TO",
        "and" => "AND",
        "or" => "OR",
        "not" => "NOT",
        "in" => "IN",
        "is" => "IS",
        _ => return None,
    })
}

/// Re-renders `tokens` with comparison and boolean operators spelled out,
/// keeping the original spacing elsewhere.
pub fn verbalize(raw: &str, tokens: &[Token]) -> String {
    let chars: Vec<char> = raw.chars().collect();
    let mut out = String::new();
    let mut prev_end: Option<usize> = None;
    let mut force_space = false;
    for t in tokens {
        let word = verbal(t);
        if let Some(pe) = prev_end {
            let gap: String = chars[pe..t.column].iter().collect();
            if gap.is_empty() && (force_space || word.is_some()) {
                out.push(' ');
            } else {
                out.push_str(&gap);
            }
        }
        match word {
            Some(w) => out.push_str(w),
            None => out.push_str(&t.text),
        }
        force_space = word.is_some();
        prev_end = Some(t.end());
    }
    out
}

/// `n` → `n-1`, with integer literals computed.
pub fn decrement(raw: &str, tokens: &[Token]) -> String {
    if let [tok] = tokens {
        if tok.kind == TokenKind::Number {
            if let Ok(v) = tok.text.replace('_', "").parse::<i64>() {
                return (v - 1).to_string();
            }
        }
    }
    format!("{}-1", span_text(raw, tokens))
}

pub(crate) fn render(pieces: &[Piece], raw: &str, caps: &Captures<'_>) -> String {
    let mut out = String::new();
    for p in pieces {
        match p {
            Piece::Text(t) => out.push_str(t),
            Piece::Slot { name, filter } => {
                let toks = caps.get(name.as_str()).copied().unwrap_or(&[]);
                let s = match filter {
                    None => span_text(raw, toks),
                    Some(Filter::Cond) => verbalize(raw, toks),
                    Some(Filter::Dec) => decrement(raw, toks),
                };
                out.push_str(&s);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pylex::lex_line;

    fn pat(s: &str) -> Vec<Element> {
        s.split_whitespace()
            .map(|e| match braced(e) {
                Some((name, class)) => Element::Capture {
                    name: name.into(),
                    class: CaptureClass::parse(class.unwrap_or("expr")).unwrap(),
                },
                None => Element::Literal(e.into()),
            })
            .collect()
    }

    fn cap_text(line: &str, p: &str, name: &str) -> Option<String> {
        let toks = lex_line(line).unwrap();
        let pattern = pat(p);
        let caps = match_pattern(&pattern, &toks)?;
        Some(span_text(line, caps[name]))
    }

    #[test]
    fn expr_stops_at_top_level_comma() {
        let p = "for {v:ident} in range ( {stop:expr} ) :";
        assert_eq!(cap_text("for i in range(10):", p, "stop").as_deref(), Some("10"));
        assert_eq!(cap_text("for i in range(len(xs)):", p, "stop").as_deref(), Some("len(xs)"));
        assert_eq!(cap_text("for i in range(1, 10):", p, "stop"), None);
    }

    #[test]
    fn name_class_backtracks_over_dots() {
        let p = "{obj:name} . append ( {v:text} )";
        assert_eq!(cap_text("self.items.append(v)", p, "obj").as_deref(), Some("self.items"));
        assert_eq!(cap_text("f(x).append(v)", p, "obj"), None);
    }

    #[test]
    fn capture_keeps_inner_spacing() {
        assert_eq!(cap_text("return  n*2 ", "return {v:text}", "v").as_deref(), Some("n*2"));
        assert_eq!(cap_text("x = a , b", "{l:text} = {r:text}", "r").as_deref(), Some("a , b"));
    }

    #[test]
    fn verbalize_inserts_spaces() {
        let line = "n%2==0 and not x";
        let toks = lex_line(line).unwrap();
        assert_eq!(verbalize(line, &toks), "n%2 EQUALS 0 AND NOT x");
    }

    #[test]
    fn decrement_literal_and_symbolic() {
        let toks = lex_line("10").unwrap();
        assert_eq!(decrement("10", &toks), "9");
        let toks = lex_line("n").unwrap();
        assert_eq!(decrement("n", &toks), "n-1");
        let line = "len(x)";
        assert_eq!(decrement(line, &lex_line(line).unwrap()), "len(x)-1");
    }

    #[test]
    fn template_parsing() {
        let p = parse_template("FOR {v} FROM 0 TO {n:dec} DO").unwrap();
        assert_eq!(p.len(), 5);
        assert!(parse_template("X {a:bogus}").is_err());
        assert!(parse_template("X {a").is_err());
    }
}
