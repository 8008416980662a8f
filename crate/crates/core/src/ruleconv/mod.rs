//! Rule-based code-to-pseudocode conversion.
//!
//! Source is parsed into classified lines, each code line is rewritten by
//! the first matching rule (ADVANCED, then PREFIX, then BASIC), and every
//! block opener is closed by an `END ...` line once its body ends.

pub mod pattern;
pub mod table;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::pylex::{parse_program, LineKind, LineNode, ParseError, INDENT_UNIT};
pub use table::{load_ruleset, parse_ruleset, Rule, RuleError, RuleSet, Tier, BUILTIN_RULES, MANDATORY_KINDS};

/// Structural role of a pseudocode line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LineRole {
    /// Opens a block closed later by an `End` line at the same depth.
    Open,
    /// `ELSE` / `ELSE IF` continuing an open block.
    Continue,
    End,
    Plain,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoLine {
    pub depth: usize,
    pub text: String,
    pub role: LineRole,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PseudoDoc {
    pub lines: Vec<PseudoLine>,
    /// Physical lines in the source.
    pub source_lines: usize,
    /// Source line numbers that no rule matched.
    pub fallback_lines: Vec<usize>,
}

impl PseudoDoc {
    /// Openers and END lines pair up and nest; a running counter never
    /// goes negative and each END sits at its opener's depth.
    pub fn is_balanced(&self) -> bool {
        let mut open: Vec<usize> = Vec::new();
        for l in &self.lines {
            match l.role {
                LineRole::Open => open.push(l.depth),
                LineRole::End => match open.pop() {
                    Some(d) if d == l.depth => {}
                    _ => return false,
                },
                LineRole::Continue | LineRole::Plain => {}
            }
        }
        open.is_empty()
    }

    /// The document as `.txt` content: depth×4 spaces of indent, LF line
    /// endings, trailing newline, empty document → empty string.
    pub fn render_txt(&self) -> String {
        let mut out = String::new();
        for l in &self.lines {
            out.push_str(&" ".repeat(l.depth * INDENT_UNIT));
            out.push_str(&l.text);
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Error)]
pub enum ConvertError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("cannot write {path}: {source}")]
    Write { path: String, source: std::io::Error },
}

/// Outcome of rule selection for one line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Applied {
    pub text: String,
    /// `None` when the fallback fired.
    pub rule_line: Option<usize>,
}

pub const FALLBACK_PREFIX: &str = "EXECUTE: ";

/// Rewrites one code line with the first matching rule, falling back to
/// `EXECUTE: <code>`.
pub fn apply_rules(node: &LineNode, rules: &RuleSet) -> Applied {
    let tokens = node.code_tokens();
    for rule in rules.rules.iter().filter(|r| r.kind == node.kind) {
        if let Some(caps) = pattern::match_pattern(&rule.pattern, tokens) {
            return Applied {
                text: pattern::render(&rule.template, &node.raw, &caps),
                rule_line: Some(rule.line),
            };
        }
    }
    Applied {
        text: format!("{FALLBACK_PREFIX}{}", node.code_text()),
        rule_line: None,
    }
}

fn end_text(kind: LineKind) -> &'static str {
    match kind {
        LineKind::FuncDef => "END FUNCTION",
        LineKind::For => "END FOR",
        LineKind::While => "END WHILE",
        _ => "END IF",
    }
}

pub fn convert_program(source: &str, rules: &RuleSet) -> Result<PseudoDoc, ConvertError> {
    let nodes = parse_program(source)?;
    Ok(convert_nodes(&nodes, rules))
}

pub fn convert_nodes(nodes: &[LineNode], rules: &RuleSet) -> PseudoDoc {
    let mut doc = PseudoDoc {
        source_lines: nodes.len(),
        ..PseudoDoc::default()
    };
    // (depth, opening kind) of blocks still open
    let mut open: Vec<(usize, LineKind)> = Vec::new();
    for node in nodes {
        if matches!(node.kind, LineKind::Blank | LineKind::Comment) {
            continue;
        }
        let d = node.depth;
        let continues = matches!(node.kind, LineKind::Elif | LineKind::Else);
        let mut continuing = false;
        while let Some(&(depth, kind)) = open.last() {
            if depth < d {
                break;
            }
            if depth == d && continues && (node.kind == LineKind::Else || kind == LineKind::If) {
                continuing = true;
                break;
            }
            open.pop();
            doc.lines.push(PseudoLine {
                depth,
                text: end_text(kind).to_string(),
                role: LineRole::End,
            });
        }
        let applied = apply_rules(node, rules);
        if applied.rule_line.is_none() {
            doc.fallback_lines.push(node.line_no);
        }
        let role = if continuing {
            LineRole::Continue
        } else if node.kind.opens_block() && !continues {
            open.push((d, node.kind));
            LineRole::Open
        } else {
            LineRole::Plain
        };
        doc.lines.push(PseudoLine {
            depth: d,
            text: applied.text,
            role,
        });
    }
    while let Some((depth, kind)) = open.pop() {
        doc.lines.push(PseudoLine {
            depth,
            text: end_text(kind).to_string(),
            role: LineRole::End,
        });
    }
    doc
}

pub fn emit_txt(doc: &PseudoDoc, path: &Path) -> Result<(), ConvertError> {
    std::fs::write(path, doc.render_txt()).map_err(|source| ConvertError::Write {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn convert(src: &str) -> String {
        convert_program(src, &RuleSet::builtin()).unwrap().render_txt()
    }

    fn one(src: &str) -> String {
        let nodes = parse_program(src).unwrap();
        apply_rules(&nodes[0], &RuleSet::builtin()).text
    }

    #[test]
    fn basic_assignment() {
        assert_eq!(convert("x = 5"), "SET x TO 5\n");
    }

    #[test]
    fn for_range_with_end() {
        assert_eq!(
            convert("for i in range(10):\n    print(i)\n"),
            "FOR i FROM 0 TO 9 DO\n    DISPLAY i\nEND FOR\n"
        );
    }

    #[test]
    fn single_line_rules() {
        assert_eq!(one("return n*2"), "RETURN n*2");
        assert_eq!(one("def add(a, b):"), "FUNCTION add WITH PARAMETERS a, b");
        assert_eq!(one("yield x"), "EXECUTE: yield x");
        assert_eq!(one("for i in range(n):"), "FOR i FROM 0 TO n-1 DO");
        assert_eq!(one("for i in range(1, 11):"), "FOR i FROM 1 TO 10 DO");
        assert_eq!(one("for i in range(0, 10, 2):"), "FOR EACH i IN range(0, 10, 2) DO");
        assert_eq!(one("for x in xs:"), "FOR EACH x IN xs DO");
        assert_eq!(one("x += 1  # bump"), "INCREASE x BY 1");
        assert_eq!(one("if a >= b and not c:"), "IF a GREATER THAN OR EQUAL TO b AND NOT c THEN");
        assert_eq!(one("s = t[::-1]"), "SET s TO REVERSE OF t");
        assert_eq!(one("s = t[1:n]"), "SET s TO t FROM INDEX 1 TO n-1");
        assert_eq!(one("s = t[i]"), "SET s TO ELEMENT i OF t");
        assert_eq!(one("n = len(xs)"), "SET n TO LENGTH OF xs");
        assert_eq!(one("res.append(x * 2)"), "APPEND x * 2 TO res");
        assert_eq!(one("foo(1, 2)"), "CALL foo WITH 1, 2");
        assert_eq!(one("x %= 2"), "EXECUTE: x %= 2");
    }

    #[test]
    fn if_chain_single_end() {
        let src = "if a:\n    x = 1\nelif b:\n    x = 2\nelse:\n    x = 3\ny = x\n";
        assert_eq!(
            convert(src),
            "IF a THEN\n    SET x TO 1\nELSE IF b THEN\n    SET x TO 2\nELSE\n    SET x TO 3\nEND IF\nSET y TO x\n"
        );
    }

    #[test]
    fn nested_blocks_close_innermost_first() {
        let src = "def f(xs):\n    for x in xs:\n        if x:\n            return x\n    return None\n";
        let doc = convert_program(src, &RuleSet::builtin()).unwrap();
        assert!(doc.is_balanced());
        assert_eq!(
            doc.render_txt(),
            "FUNCTION f WITH PARAMETERS xs\n    FOR EACH x IN xs DO\n        IF x THEN\n            RETURN x\n        END IF\n    END FOR\n    RETURN None\nEND FUNCTION\n"
        );
    }

    #[test]
    fn for_else_closes_as_for() {
        let src = "for x in xs:\n    pass\nelse:\n    y = 1\n";
        assert_eq!(convert(src), "FOR EACH x IN xs DO\n    DO NOTHING\nELSE\n    SET y TO 1\nEND FOR\n");
    }

    #[test]
    fn comments_and_blanks_dropped_and_fallbacks_recorded() {
        let doc = convert_program("# hi\n\nx = 1\nclass A:\n    pass\n", &RuleSet::builtin()).unwrap();
        assert_eq!(doc.render_txt(), "SET x TO 1\nEXECUTE: class A:\n    DO NOTHING\n");
        assert_eq!(doc.fallback_lines, vec![4]);
        assert_eq!(doc.source_lines, 5);
    }

    #[test]
    fn render_format() {
        assert_eq!(PseudoDoc::default().render_txt(), "");
        let doc = PseudoDoc {
            lines: vec![PseudoLine {
                depth: 0,
                text: "RETURN 0".into(),
                role: LineRole::Plain,
            }],
            source_lines: 1,
            fallback_lines: vec![],
        };
        assert_eq!(doc.render_txt(), "RETURN 0\n");
    }

    #[test]
    fn emit_writes_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.txt");
        let doc = convert_program("return 0", &RuleSet::builtin()).unwrap();
        emit_txt(&doc, &path).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"RETURN 0\n");
        assert!(emit_txt(&doc, &dir.path().join("missing/out.txt")).is_err());
    }

    #[test]
    fn parse_errors_propagate() {
        assert!(matches!(
            convert_program("if x:\n   y = 1\n", &RuleSet::builtin()),
            Err(ConvertError::Parse(ParseError::BadIndent { line: 2, .. }))
        ));
    }
}
