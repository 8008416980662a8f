use std::collections::HashSet;
use std::fmt;
use std::path::Path;

use thiserror::Error;

use super::pattern::{braced, parse_template, CaptureClass, Element, Piece};
use crate::pylex::LineKind;

/// The built-in rule table.
pub const BUILTIN_RULES: &str = include_str!("default.rules");

/// Kinds every rule table must cover.
pub const MANDATORY_KINDS: [LineKind; 7] = [
    LineKind::FuncDef,
    LineKind::If,
    LineKind::For,
    LineKind::While,
    LineKind::Return,
    LineKind::Assign,
    LineKind::Print,
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Tier {
    Advanced,
    Prefix,
    Basic,
}

impl Tier {
    pub fn parse(s: &str) -> Option<Tier> {
        match s {
            "ADVANCED" => Some(Tier::Advanced),
            "PREFIX" => Some(Tier::Prefix),
            "BASIC" => Some(Tier::Basic),
            _ => None,
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Tier::Advanced => "ADVANCED",
            Tier::Prefix => "PREFIX",
            Tier::Basic => "BASIC",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    pub tier: Tier,
    pub kind: LineKind,
    pub pattern: Vec<Element>,
    pub template: Vec<Piece>,
    /// 1-based line in the table file.
    pub line: usize,
    /// Pattern as written, for error messages and reports.
    pub source: String,
}

impl Rule {
    fn shape(&self) -> (LineKind, Vec<ShapeElem>) {
        let shape = self
            .pattern
            .iter()
            .map(|e| match e {
                Element::Literal(s) => ShapeElem::Lit(s.clone()),
                Element::Capture { class, .. } => ShapeElem::Cap(*class),
            })
            .collect();
        (self.kind, shape)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
enum ShapeElem {
    Lit(String),
    Cap(CaptureClass),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleSet {
    /// Ordered ADVANCED, PREFIX, BASIC; file order within a tier.
    pub rules: Vec<Rule>,
    pub version: String,
}

#[derive(Debug, Error)]
pub enum RuleError {
    #[error("ruleset not found: {0}")]
    NotFound(String),
    #[error("cannot read rule table {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("rule table is empty")]
    Empty,
    #[error("line {line}: expected `TIER | KIND: pattern | template`")]
    Malformed { line: usize },
    #[error("line {line}: unknown tier `{tier}`")]
    UnknownTier { line: usize, tier: String },
    #[error("line {line}: unknown line kind `{kind}`")]
    UnknownKind { line: usize, kind: String },
    #[error("line {line}: unknown capture class `{class}`")]
    UnknownClass { line: usize, class: String },
    #[error("line {line}: capture `{name}` appears twice")]
    DuplicateCapture { line: usize, name: String },
    #[error("line {line}: {message}")]
    BadTemplate { line: usize, message: String },
    #[error("rule at line {line} (`{rule}`): placeholder `{name}` is not bound by the pattern")]
    UnboundPlaceholder { line: usize, rule: String, name: String },
    #[error("ambiguous rule at line {line}: same {tier} pattern as line {first}")]
    Ambiguous { line: usize, first: usize, tier: Tier },
    #[error("no rule for mandatory kind {0}")]
    MissingKind(LineKind),
}

fn parse_rule(line_no: usize, line: &str) -> Result<Rule, RuleError> {
    let mut fields = line.splitn(3, '|').map(str::trim);
    let (Some(tier), Some(pattern), Some(template)) = (fields.next(), fields.next(), fields.next()) else {
        return Err(RuleError::Malformed { line: line_no });
    };
    let tier = Tier::parse(tier).ok_or_else(|| RuleError::UnknownTier {
        line: line_no,
        tier: tier.to_string(),
    })?;
    let (kind, elems) = pattern.split_once(':').ok_or(RuleError::Malformed { line: line_no })?;
    let kind = LineKind::from_name(kind.trim()).ok_or_else(|| RuleError::UnknownKind {
        line: line_no,
        kind: kind.trim().to_string(),
    })?;
    let mut seen = HashSet::new();
    let mut elements = Vec::new();
    for e in elems.split_whitespace() {
        match braced(e) {
            Some((name, class)) => {
                let class_name = class.unwrap_or("expr");
                let class = CaptureClass::parse(class_name).ok_or_else(|| RuleError::UnknownClass {
                    line: line_no,
                    class: class_name.to_string(),
                })?;
                if !seen.insert(name.to_string()) {
                    return Err(RuleError::DuplicateCapture {
                        line: line_no,
                        name: name.to_string(),
                    });
                }
                elements.push(Element::Capture {
                    name: name.to_string(),
                    class,
                });
            }
            None => elements.push(Element::Literal(e.to_string())),
        }
    }
    if elements.is_empty() {
        return Err(RuleError::Malformed { line: line_no });
    }
    let template = parse_template(template).map_err(|message| RuleError::BadTemplate { line: line_no, message })?;
    for piece in &template {
        if let Piece::Slot { name, .. } = piece {
            if !seen.contains(name) {
                return Err(RuleError::UnboundPlaceholder {
                    line: line_no,
                    rule: pattern.to_string(),
                    name: name.clone(),
                });
            }
        }
    }
    Ok(Rule {
        tier,
        kind,
        pattern: elements,
        template,
        line: line_no,
        source: pattern.to_string(),
    })
}

/// Parses a rule table.
///
/// One rule per line, `TIER | KIND: pattern | template`. Blank lines and
/// lines starting with `#` are skipped; `@version <text>` sets the version.
pub fn parse_ruleset(text: &str) -> Result<RuleSet, RuleError> {
    let mut version = String::from("unversioned");
    let mut rules: Vec<Rule> = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        if let Some(v) = trimmed.strip_prefix("@version") {
            version = v.trim().to_string();
            continue;
        }
        let rule = parse_rule(line_no, trimmed)?;
        if let Some(prev) = rules.iter().find(|r| r.tier == rule.tier && r.shape() == rule.shape()) {
            return Err(RuleError::Ambiguous {
                line: line_no,
                first: prev.line,
                tier: rule.tier,
            });
        }
        rules.push(rule);
    }
    if rules.is_empty() {
        return Err(RuleError::Empty);
    }
    for kind in MANDATORY_KINDS {
        if !rules.iter().any(|r| r.kind == kind) {
            return Err(RuleError::MissingKind(kind));
        }
    }
    // stable: file order survives within a tier
    rules.sort_by_key(|r| r.tier);
    Ok(RuleSet { rules, version })
}

impl RuleSet {
    pub fn builtin() -> RuleSet {
        parse_ruleset(BUILTIN_RULES).expect("built-in rule table is valid")
    }
}

/// Loads a rule table from `path`, or the built-in one when no path is given.
pub fn load_ruleset(path: Option<&Path>) -> Result<RuleSet, RuleError> {
    let Some(path) = path else {
        return Ok(RuleSet::builtin());
    };
    if !path.exists() {
        return Err(RuleError::NotFound(path.display().to_string()));
    }
    let text = std::fs::read_to_string(path).map_err(|source| RuleError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_ruleset(&text)
}
