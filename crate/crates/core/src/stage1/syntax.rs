//! Light syntax repair for retrieved code.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::pylex::{indent_width, lex_line, TokenKind, INDENT_UNIT};

const BLOCK_KEYWORDS: &[&str] = &[
    "def", "if", "elif", "else", "for", "while", "class", "try", "except", "finally", "with",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "fix", rename_all = "snake_case")]
pub enum SyntaxFix {
    /// Appended the `:` a block header was missing.
    Colon { line: usize },
    /// Rewrote leading indentation to the 4-space unit.
    Indent { line: usize },
    TrailingWhitespace { line: usize },
    /// Report only: a bracket that never closed, or closed the wrong opener.
    Unbalanced { delim: char, line: usize },
}

impl SyntaxFix {
    /// True for entries that describe an edit to the code.
    pub fn changed_code(&self) -> bool {
        !matches!(self, SyntaxFix::Unbalanced { .. })
    }
}

impl fmt::Display for SyntaxFix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SyntaxFix::Colon { line } => write!(f, "colon@{line}"),
            SyntaxFix::Indent { line } => write!(f, "indent@{line}"),
            SyntaxFix::TrailingWhitespace { line } => write!(f, "trailing-ws@{line}"),
            SyntaxFix::Unbalanced { delim, line } => write!(f, "unbalanced {delim:?}@{line}"),
        }
    }
}

#[derive(Debug, Default, Clone, Copy)]
struct LineState {
    start_nesting: usize,
    end_nesting: usize,
    starts_in_string: bool,
    ends_in_string: bool,
}

/// Bracket and string state at each line boundary, plus imbalance reports.
fn scan(lines: &[String]) -> (Vec<LineState>, Vec<SyntaxFix>) {
    let mut states = Vec::with_capacity(lines.len());
    let mut reports = Vec::new();
    let mut stack: Vec<(char, usize)> = Vec::new();
    let mut triple: Option<char> = None;
    for (i, line) in lines.iter().enumerate() {
        let line_no = i + 1;
        let mut st = LineState {
            start_nesting: stack.len(),
            starts_in_string: triple.is_some(),
            ..LineState::default()
        };
        let chars: Vec<char> = line.chars().collect();
        let mut k = 0;
        while k < chars.len() {
            let c = chars[k];
            if let Some(q) = triple {
                if c == '\\' {
                    k += 2;
                    continue;
                }
                if c == q && chars.get(k + 1) == Some(&q) && chars.get(k + 2) == Some(&q) {
                    triple = None;
                    k += 3;
                } else {
                    k += 1;
                }
                continue;
            }
            match c {
                '#' => break,
                '"' | '\'' => {
                    if chars.get(k + 1) == Some(&c) && chars.get(k + 2) == Some(&c) {
                        triple = Some(c);
                        k += 3;
                        continue;
                    }
                    k += 1;
                    while k < chars.len() && chars[k] != c {
                        if chars[k] == '\\' {
                            k += 1;
                        }
                        k += 1;
                    }
                }
                '(' | '[' | '{' => stack.push((c, line_no)),
                ')' | ']' | '}' => {
                    let want = match c {
                        ')' => '(',
                        ']' => '[',
                        _ => '{',
                    };
                    if stack.last().map(|&(o, _)| o) == Some(want) {
                        stack.pop();
                    } else {
                        reports.push(SyntaxFix::Unbalanced { delim: c, line: line_no });
                    }
                }
                _ => {}
            }
            k += 1;
        }
        st.end_nesting = stack.len();
        st.ends_in_string = triple.is_some();
        states.push(st);
    }
    for (delim, line) in stack {
        reports.push(SyntaxFix::Unbalanced { delim, line });
    }
    (states, reports)
}

fn add_missing_colon(line: &str) -> Option<String> {
    let tokens = lex_line(line).ok()?;
    let code: Vec<_> = tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect();
    let first = code.first()?;
    if first.kind != TokenKind::Keyword || !BLOCK_KEYWORDS.contains(&first.text.as_str()) {
        return None;
    }
    let mut nesting = 0i32;
    for t in &code {
        if t.kind != TokenKind::Delimiter {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => nesting += 1,
            // a stray closer is reported by the scan, not counted here
            ")" | "]" | "}" => nesting = (nesting - 1).max(0),
            ":" if nesting == 0 => return None,
            _ => {}
        }
    }
    let end = code.last()?.end();
    let mut out: String = line.chars().take(end).collect();
    out.push(':');
    out.extend(line.chars().skip(end));
    Some(out)
}

/// Applies, in order: bracket balance report, missing block colons,
/// 4-space indentation, trailing whitespace removal. Token text is never
/// otherwise altered.
pub fn correct_syntax(code: &str) -> (String, Vec<SyntaxFix>) {
    let trailing_newline = code.ends_with('\n');
    let body = code.strip_suffix('\n').unwrap_or(code);
    let mut lines: Vec<String> = if code.is_empty() {
        Vec::new()
    } else {
        body.split('\n').map(str::to_string).collect()
    };
    let (states, mut fixes) = scan(&lines);

    for (i, line) in lines.iter_mut().enumerate() {
        let st = states[i];
        if st.start_nesting > 0 || st.end_nesting > 0 || st.starts_in_string || st.ends_in_string {
            continue;
        }
        if let Some(fixed) = add_missing_colon(line) {
            *line = fixed;
            fixes.push(SyntaxFix::Colon { line: i + 1 });
        }
    }

    let mut widths: Vec<usize> = vec![0];
    for (i, line) in lines.iter_mut().enumerate() {
        let st = states[i];
        if line.trim().is_empty() || st.start_nesting > 0 || st.starts_in_string {
            continue;
        }
        let width = indent_width(line);
        let is_comment = line.trim_start().starts_with('#');
        let level = if is_comment {
            widths.iter().filter(|&&w| w <= width).count().saturating_sub(1).min(widths.len())
        } else {
            while widths.last().is_some_and(|&w| w > width) {
                widths.pop();
            }
            if widths.last().is_none_or(|&w| w < width) {
                widths.push(width);
            }
            widths.len() - 1
        };
        let rest = line.trim_start_matches([' ', '\t']);
        let fixed = format!("{}{}", " ".repeat(level * INDENT_UNIT), rest);
        if fixed != *line {
            *line = fixed;
            fixes.push(SyntaxFix::Indent { line: i + 1 });
        }
    }

    for (i, line) in lines.iter_mut().enumerate() {
        if states[i].ends_in_string {
            continue;
        }
        let trimmed = line.trim_end();
        if trimmed.len() != line.len() {
            *line = trimmed.to_string();
            fixes.push(SyntaxFix::TrailingWhitespace { line: i + 1 });
        }
    }

    let mut out = lines.join("\n");
    if trailing_newline {
        out.push('\n');
    }
    (out, fixes)
}
