//! Line-oriented lexer and classifier for the Python subset the converters
//! understand.
//!
//! Each physical line is lexed on its own; block structure comes from the
//! leading indentation (4-space unit, tabs expanded to the next tab stop).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const INDENT_UNIT: usize = 4;

pub const KEYWORDS: &[&str] = &[
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue", "def", "del",
    "elif", "else", "except", "finally", "for", "from", "global", "if", "import", "in", "is", "lambda", "nonlocal",
    "not", "or", "pass", "raise", "return", "try", "while", "with", "yield",
];

// Longest first so that greedy matching picks `**=` over `**` over `*`.
const OPERATORS: &[&str] = &[
    "**=", "//=", ">>=", "<<=", "...", "->", ":=", "==", "!=", "<=", ">=", "**", "//", "<<", ">>", "+=", "-=", "*=",
    "/=", "%=", "&=", "|=", "^=", "@=", "+", "-", "*", "/", "%", "@", "&", "|", "^", "~", "<", ">", "=", "!",
];

const DELIMITERS: &[char] = &['(', ')', '[', ']', '{', '}', ',', ':', ';', '.'];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenKind {
    Keyword,
    Ident,
    Number,
    Str,
    Operator,
    Delimiter,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub kind: TokenKind,
    pub text: String,
    /// 0-based start column, in characters.
    pub column: usize,
}

impl Token {
    pub fn end(&self) -> usize {
        self.column + self.text.chars().count()
    }

    pub fn is(&self, text: &str) -> bool {
        self.text == text
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum LineKind {
    FuncDef,
    If,
    Elif,
    Else,
    For,
    While,
    Return,
    Assign,
    AugAssign,
    Call,
    Print,
    Import,
    Comment,
    Blank,
    Other,
}

impl LineKind {
    pub const ALL: [LineKind; 15] = [
        LineKind::FuncDef,
        LineKind::If,
        LineKind::Elif,
        LineKind::Else,
        LineKind::For,
        LineKind::While,
        LineKind::Return,
        LineKind::Assign,
        LineKind::AugAssign,
        LineKind::Call,
        LineKind::Print,
        LineKind::Import,
        LineKind::Comment,
        LineKind::Blank,
        LineKind::Other,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LineKind::FuncDef => "FUNC_DEF",
            LineKind::If => "IF",
            LineKind::Elif => "ELIF",
            LineKind::Else => "ELSE",
            LineKind::For => "FOR",
            LineKind::While => "WHILE",
            LineKind::Return => "RETURN",
            LineKind::Assign => "ASSIGN",
            LineKind::AugAssign => "AUG_ASSIGN",
            LineKind::Call => "CALL",
            LineKind::Print => "PRINT",
            LineKind::Import => "IMPORT",
            LineKind::Comment => "COMMENT",
            LineKind::Blank => "BLANK",
            LineKind::Other => "OTHER",
        }
    }

    pub fn from_name(name: &str) -> Option<LineKind> {
        LineKind::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Kinds whose line opens an indented block.
    pub fn opens_block(self) -> bool {
        matches!(
            self,
            LineKind::FuncDef | LineKind::If | LineKind::Elif | LineKind::Else | LineKind::For | LineKind::While
        )
    }
}

impl fmt::Display for LineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LineNode {
    pub line_no: usize,
    pub depth: usize,
    pub kind: LineKind,
    pub tokens: Vec<Token>,
    pub raw: String,
}

impl LineNode {
    /// Tokens without the trailing comment.
    pub fn code_tokens(&self) -> &[Token] {
        match self.tokens.last() {
            Some(t) if t.kind == TokenKind::Comment => &self.tokens[..self.tokens.len() - 1],
            _ => &self.tokens,
        }
    }

    /// Source text of the code tokens, trailing comment and indentation removed.
    pub fn code_text(&self) -> String {
        span_text(&self.raw, self.code_tokens())
    }
}

/// Raw source text covering `tokens`, inner whitespace preserved.
pub fn span_text(raw: &str, tokens: &[Token]) -> String {
    match (tokens.first(), tokens.last()) {
        (Some(first), Some(last)) => raw.chars().skip(first.column).take(last.end() - first.column).collect(),
        _ => String::new(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LexError {
    #[error("unterminated string literal at column {column}")]
    UnterminatedString { column: usize },
    #[error("line contains a newline")]
    Newline,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseError {
    #[error("bad indent at line {line}: {width} spaces is not a multiple of {INDENT_UNIT}")]
    BadIndent { line: usize, width: usize },
    #[error("bad indent at line {line}: jumped from depth {from} to {to}")]
    IndentJump { line: usize, from: usize, to: usize },
    #[error("line {line}: {source}")]
    Lex { line: usize, source: LexError },
}

impl ParseError {
    pub fn line(&self) -> usize {
        match self {
            ParseError::BadIndent { line, .. } | ParseError::IndentJump { line, .. } | ParseError::Lex { line, .. } => {
                *line
            }
        }
    }
}

fn is_ident_start(c: char) -> bool {
    c == '_' || c.is_alphabetic()
}

fn is_ident_char(c: char) -> bool {
    c == '_' || c.is_alphanumeric()
}

fn string_prefix_len(chars: &[char], i: usize) -> Option<usize> {
    // r, b, u, f and two-letter combinations of r with b/f, any case
    let mut j = i;
    while j < chars.len() && j - i < 2 && "rRbBuUfF".contains(chars[j]) {
        j += 1;
    }
    if j < chars.len() && (chars[j] == '"' || chars[j] == '\'') {
        let prefix: String = chars[i..j].iter().collect::<String>().to_ascii_lowercase();
        let ok = matches!(prefix.as_str(), "" | "r" | "b" | "u" | "f" | "rb" | "br" | "rf" | "fr");
        if ok {
            return Some(j - i);
        }
    }
    None
}

fn scan_string(chars: &[char], start: usize, quote_at: usize) -> Result<usize, LexError> {
    let q = chars[quote_at];
    let triple = quote_at + 2 < chars.len() && chars[quote_at + 1] == q && chars[quote_at + 2] == q;
    let mut i = if triple { quote_at + 3 } else { quote_at + 1 };
    while i < chars.len() {
        let c = chars[i];
        if c == '\\' {
            i += 2;
            continue;
        }
        if c == q {
            if !triple {
                return Ok(i + 1);
            }
            if i + 2 < chars.len() && chars[i + 1] == q && chars[i + 2] == q {
                return Ok(i + 3);
            }
        }
        i += 1;
    }
    Err(LexError::UnterminatedString { column: start })
}

fn scan_number(chars: &[char], start: usize) -> usize {
    let mut i = start;
    if chars[i] == '0' && i + 1 < chars.len() && "xXoObB".contains(chars[i + 1]) {
        i += 2;
        while i < chars.len() && (chars[i].is_ascii_hexdigit() || chars[i] == '_') {
            i += 1;
        }
        return i;
    }
    let digits = |i: &mut usize| {
        while *i < chars.len() && (chars[*i].is_ascii_digit() || chars[*i] == '_') {
            *i += 1;
        }
    };
    digits(&mut i);
    if i < chars.len() && chars[i] == '.' {
        i += 1;
        digits(&mut i);
    }
    if i < chars.len() && (chars[i] == 'e' || chars[i] == 'E') {
        let mut j = i + 1;
        if j < chars.len() && (chars[j] == '+' || chars[j] == '-') {
            j += 1;
        }
        if j < chars.len() && chars[j].is_ascii_digit() {
            i = j;
            digits(&mut i);
        }
    }
    if i < chars.len() && (chars[i] == 'j' || chars[i] == 'J') {
        i += 1;
    }
    i
}

pub fn lex_line(text: &str) -> Result<Vec<Token>, LexError> {
    if text.contains('\n') {
        return Err(LexError::Newline);
    }
    let chars: Vec<char> = text.chars().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
            continue;
        }
        let start = i;
        let kind;
        if c == '#' {
            i = chars.len();
            kind = TokenKind::Comment;
        } else if let Some(plen) = string_prefix_len(&chars, i) {
            i = scan_string(&chars, start, i + plen)?;
            kind = TokenKind::Str;
        } else if is_ident_start(c) {
            while i < chars.len() && is_ident_char(chars[i]) {
                i += 1;
            }
            let word: String = chars[start..i].iter().collect();
            kind = if KEYWORDS.contains(&word.as_str()) {
                TokenKind::Keyword
            } else {
                TokenKind::Ident
            };
        } else if c.is_ascii_digit() || (c == '.' && i + 1 < chars.len() && chars[i + 1].is_ascii_digit()) {
            i = scan_number(&chars, i);
            kind = TokenKind::Number;
        } else if let Some(op) = OPERATORS
            .iter()
            .find(|op| op.chars().enumerate().all(|(k, oc)| chars.get(i + k) == Some(&oc)))
        {
            i += op.chars().count();
            kind = TokenKind::Operator;
        } else if DELIMITERS.contains(&c) {
            i += 1;
            kind = TokenKind::Delimiter;
        } else {
            // unknown characters lex as single-character operators
            i += 1;
            kind = TokenKind::Operator;
        }
        tokens.push(Token {
            kind,
            text: chars[start..i].iter().collect(),
            column: start,
        });
    }
    Ok(tokens)
}

fn is_assign_op(t: &Token) -> bool {
    t.kind == TokenKind::Operator && t.text == "="
}

fn is_aug_op(t: &Token) -> bool {
    t.kind == TokenKind::Operator && t.text.len() >= 2 && t.text.ends_with('=') && !matches!(t.text.as_str(), "==" | "!=" | "<=" | ">=" | ":=")
}

/// Keyword table, then assignment scan, then call detection, else OTHER.
pub fn classify_line(tokens: &[Token]) -> LineKind {
    let code: Vec<&Token> = tokens.iter().filter(|t| t.kind != TokenKind::Comment).collect();
    let Some(first) = code.first() else {
        return if tokens.is_empty() {
            LineKind::Blank
        } else {
            LineKind::Comment
        };
    };
    if first.kind == TokenKind::Keyword {
        match first.text.as_str() {
            "def" => return LineKind::FuncDef,
            "if" => return LineKind::If,
            "elif" => return LineKind::Elif,
            "else" => return LineKind::Else,
            "for" => return LineKind::For,
            "while" => return LineKind::While,
            "return" => return LineKind::Return,
            "import" | "from" => return LineKind::Import,
            _ => {}
        }
    }
    // only top-level operators count; `f(x=1)` is a call
    let mut nesting = 0i32;
    for t in &code {
        match t.text.as_str() {
            "(" | "[" | "{" if t.kind == TokenKind::Delimiter => nesting += 1,
            ")" | "]" | "}" if t.kind == TokenKind::Delimiter => nesting -= 1,
            _ if nesting == 0 && is_assign_op(t) => return LineKind::Assign,
            _ if nesting == 0 && is_aug_op(t) => return LineKind::AugAssign,
            _ => {}
        }
    }
    if is_call(&code) {
        return if first.text == "print" {
            LineKind::Print
        } else {
            LineKind::Call
        };
    }
    LineKind::Other
}

/// `name(.name)*( ... )` spanning the whole line.
fn is_call(code: &[&Token]) -> bool {
    let mut i = 0;
    loop {
        match code.get(i) {
            Some(t) if t.kind == TokenKind::Ident => i += 1,
            _ => return false,
        }
        match code.get(i) {
            Some(t) if t.kind == TokenKind::Delimiter && t.text == "." => i += 1,
            Some(t) if t.kind == TokenKind::Delimiter && t.text == "(" => break,
            _ => return false,
        }
    }
    let mut nesting = 0i32;
    for (k, t) in code.iter().enumerate().skip(i) {
        if t.kind != TokenKind::Delimiter {
            continue;
        }
        match t.text.as_str() {
            "(" | "[" | "{" => nesting += 1,
            ")" | "]" | "}" => {
                nesting -= 1;
                if nesting == 0 {
                    return k == code.len() - 1;
                }
            }
            _ => {}
        }
    }
    false
}

/// Leading indentation width with tabs advanced to the next tab stop.
pub fn indent_width(line: &str) -> usize {
    let mut width = 0;
    for c in line.chars() {
        match c {
            ' ' => width += 1,
            '\t' => width = (width / INDENT_UNIT + 1) * INDENT_UNIT,
            _ => break,
        }
    }
    width
}

pub fn parse_program(source: &str) -> Result<Vec<LineNode>, ParseError> {
    let mut nodes = Vec::new();
    let mut prev_depth = 0usize;
    for (idx, raw) in source.lines().enumerate() {
        let line_no = idx + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let tokens = lex_line(raw).map_err(|source| ParseError::Lex { line: line_no, source })?;
        let kind = classify_line(&tokens);
        let depth = if matches!(kind, LineKind::Blank | LineKind::Comment) {
            prev_depth
        } else {
            let width = indent_width(raw);
            if width % INDENT_UNIT != 0 {
                return Err(ParseError::BadIndent { line: line_no, width });
            }
            let depth = width / INDENT_UNIT;
            if depth > prev_depth + 1 {
                return Err(ParseError::IndentJump {
                    line: line_no,
                    from: prev_depth,
                    to: depth,
                });
            }
            prev_depth = depth;
            depth
        };
        nodes.push(LineNode {
            line_no,
            depth,
            kind,
            tokens,
            raw: raw.to_string(),
        });
    }
    Ok(nodes)
}
