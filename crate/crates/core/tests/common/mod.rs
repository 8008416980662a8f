//! Shared helpers for the integration tests: an independent BLEU
//! evaluator, seeded fuzz generators and a synthetic task corpus.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use story2pseudo::corpus::TaskSample;
use story2pseudo::pylex::{classify_line, indent_width, lex_line, parse_program, span_text, LineKind, Token};

pub fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

// ---------------------------------------------------------------------
// brute-force BLEU

/// What the oracle computes for one corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleBleu {
    /// (clipped matches, candidate n-grams) per order 1..=max_n.
    pub precisions: Vec<(u64, u64)>,
    pub candidate_len: usize,
    pub reference_len: usize,
    pub bp: f64,
    pub score: f64,
}

fn count_occurrences(tokens: &[String], gram: &[String]) -> u64 {
    if gram.len() > tokens.len() {
        return 0;
    }
    let mut c = 0;
    for start in 0..=tokens.len() - gram.len() {
        if tokens[start..start + gram.len()] == *gram {
            c += 1;
        }
    }
    c
}

/// Corpus BLEU by direct enumeration: every candidate n-gram position is
/// visited, each distinct n-gram counted by scanning, clipped by scanning
/// every reference. No smoothing.
pub fn oracle_bleu(pairs: &[(Vec<String>, Vec<Vec<String>>)], max_n: usize) -> OracleBleu {
    let mut precisions = vec![(0u64, 0u64); max_n];
    let mut c_len = 0;
    let mut r_len = 0;
    for (cand, refs) in pairs {
        c_len += cand.len();
        let mut best = refs[0].len();
        for r in refs {
            let (d, bd) = (r.len().abs_diff(cand.len()), best.abs_diff(cand.len()));
            if d < bd || (d == bd && r.len() < best) {
                best = r.len();
            }
        }
        r_len += best;
        for n in 1..=max_n {
            if cand.len() < n {
                continue;
            }
            let mut seen: Vec<&[String]> = Vec::new();
            for start in 0..=cand.len() - n {
                let gram = &cand[start..start + n];
                precisions[n - 1].1 += 1;
                if seen.contains(&gram) {
                    continue;
                }
                seen.push(gram);
                let in_cand = count_occurrences(cand, gram);
                let in_refs = refs.iter().map(|r| count_occurrences(r, gram)).max().unwrap_or(0);
                precisions[n - 1].0 += in_cand.min(in_refs);
            }
        }
    }
    let bp = if c_len >= r_len {
        1.0
    } else {
        (1.0 - r_len as f64 / c_len as f64).exp()
    };
    let score = if precisions.iter().any(|&(m, t)| m == 0 || t == 0) {
        0.0
    } else {
        let product: f64 = precisions.iter().map(|&(m, t)| m as f64 / t as f64).product();
        bp * product.powf(1.0 / max_n as f64)
    };
    OracleBleu {
        precisions,
        candidate_len: c_len,
        reference_len: r_len,
        bp,
        score,
    }
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

/// Small random corpora over a vocabulary of at most five words, at most
/// eight tokens per sentence. Candidates are often edits of a reference so
/// that higher-order matches occur.
pub fn random_bleu_case<R: Rng>(rng: &mut R) -> Vec<(Vec<String>, Vec<Vec<String>>)> {
    let vocab = ["a", "b", "c", "d", "e"];
    let v = rng.gen_range(2..=vocab.len());
    let sentence = |rng: &mut R| -> Vec<String> {
        let len = rng.gen_range(1..=8);
        (0..len).map(|_| vocab[rng.gen_range(0..v)].to_string()).collect()
    };
    let pairs = rng.gen_range(1..=4);
    (0..pairs)
        .map(|_| {
            let refs: Vec<Vec<String>> = (0..rng.gen_range(1..=3)).map(|_| sentence(rng)).collect();
            let cand = if rng.gen_bool(0.6) {
                let mut c = refs[0].clone();
                for _ in 0..rng.gen_range(0..3) {
                    let i = rng.gen_range(0..c.len());
                    match rng.gen_range(0..3) {
                        0 => c[i] = vocab[rng.gen_range(0..v)].to_string(),
                        1 if c.len() > 1 => {
                            c.remove(i);
                        }
                        _ if c.len() < 8 => c.insert(i, vocab[rng.gen_range(0..v)].to_string()),
                        _ => {}
                    }
                }
                c
            } else {
                sentence(rng)
            };
            (cand, refs)
        })
        .collect()
}

// ---------------------------------------------------------------------
// program fuzzing

/// One generated line: nesting depth and the text without indentation.
#[derive(Debug, Clone, PartialEq)]
pub struct GenLine {
    pub depth: usize,
    pub text: String,
    pub header: bool,
}

const NAMES: &[&str] = &["x", "y", "n", "total", "count", "items", "result", "value", "key", "acc"];

fn name<R: Rng>(rng: &mut R) -> &'static str {
    NAMES.choose(rng).unwrap()
}

fn simple_statement<R: Rng>(rng: &mut R, allow_comment: bool) -> String {
    let (a, b) = (name(rng), name(rng));
    let k: u32 = rng.gen_range(0..100);
    match rng.gen_range(0..14) {
        10 if !allow_comment => format!("{a} = {k}"),
        0 => format!("{a} = {k}"),
        1 => format!("{a} = {b} + {k}"),
        2 => format!("{a} += {k}"),
        3 => format!("{a} -= {b}"),
        4 => format!("print({a})"),
        5 => format!("print(\"{a} is\", {b})"),
        6 => format!("return {a}"),
        7 => format!("{a}.append({b})"),
        8 => format!("helper({a}, {b})"),
        9 => "import math".to_string(),
        10 => format!("# update {a}"),
        11 => "break".to_string(),
        12 => format!("{a} = [{b} * 2 for {b} in range({k})]"),
        _ => format!("{a}, {b} = {b}, {a}"),
    }
}

fn header<R: Rng>(rng: &mut R, fn_id: &mut usize) -> String {
    let (a, b) = (name(rng), name(rng));
    let k: u32 = rng.gen_range(1..50);
    match rng.gen_range(0..5) {
        0 => {
            *fn_id += 1;
            format!("def func_{}({a}, {b}):", *fn_id)
        }
        1 => format!("if {a} > {k}:"),
        2 => format!("for {a} in range({k}):"),
        3 => format!("for {a} in {b}:"),
        _ => format!("while {a} < {k}:"),
    }
}

fn gen_block<R: Rng>(rng: &mut R, depth: usize, budget: &mut usize, fn_id: &mut usize, out: &mut Vec<GenLine>) {
    let statements = rng.gen_range(1..=4);
    for i in 0..statements {
        if *budget == 0 && i > 0 {
            return;
        }
        *budget = budget.saturating_sub(1);
        let nest = depth < 4 && *budget > 1 && rng.gen_bool(0.35);
        if !nest {
            out.push(GenLine {
                depth,
                text: simple_statement(rng, i > 0),
                header: false,
            });
            continue;
        }
        let h = header(rng, fn_id);
        let is_if = h.starts_with("if ");
        let is_loop = h.starts_with("for ") || h.starts_with("while ");
        out.push(GenLine {
            depth,
            text: h,
            header: true,
        });
        gen_block(rng, depth + 1, budget, fn_id, out);
        if is_if {
            while rng.gen_bool(0.3) {
                out.push(GenLine {
                    depth,
                    text: format!("elif {} == {}:", name(rng), rng.gen_range(0..9)),
                    header: true,
                });
                gen_block(rng, depth + 1, budget, fn_id, out);
            }
        }
        if (is_if || is_loop) && rng.gen_bool(0.3) {
            out.push(GenLine {
                depth,
                text: "else:".into(),
                header: true,
            });
            gen_block(rng, depth + 1, budget, fn_id, out);
        }
    }
}

/// A well-indented program of roughly `max_lines` lines.
pub fn gen_program_lines<R: Rng>(rng: &mut R, max_lines: usize) -> Vec<GenLine> {
    let mut out = Vec::new();
    let mut budget = max_lines;
    let mut fn_id = 0;
    while budget > 0 {
        gen_block(rng, 0, &mut budget, &mut fn_id, &mut out);
    }
    // sprinkle blank lines between statements
    let mut with_blanks = Vec::with_capacity(out.len());
    for l in out {
        if rng.gen_bool(0.08) {
            with_blanks.push(GenLine {
                depth: l.depth,
                text: String::new(),
                header: false,
            });
        }
        with_blanks.push(l);
    }
    with_blanks
}

// ---------------------------------------------------------------------
// lexer properties

fn kinds_and_texts(tokens: &[Token]) -> Vec<(String, String)> {
    tokens.iter().map(|t| (format!("{:?}", t.kind), t.text.clone())).collect()
}

/// Token invariants plus the single-space round trip.
pub fn check_lex_line(line: &str) {
    let tokens = lex_line(line).unwrap_or_else(|e| panic!("{line:?}: {e}"));
    let mut prev_end = 0;
    for t in &tokens {
        assert!(!t.text.is_empty());
        assert!(t.column >= prev_end, "{line:?}: overlap at {t:?}");
        prev_end = t.end();
    }
    let trimmed = line.trim_matches([' ', '\t']);
    assert_eq!(span_text(line, &tokens), trimmed, "{line:?}");
    let joined = tokens.iter().map(|t| t.text.as_str()).collect::<Vec<_>>().join(" ");
    let again = lex_line(&joined).unwrap();
    assert_eq!(kinds_and_texts(&again), kinds_and_texts(&tokens), "{line:?} -> {joined:?}");
    assert_eq!(classify_line(&again), classify_line(&tokens));
}

pub fn check_program_depths(src: &str) {
    let nodes = parse_program(src).unwrap();
    assert_eq!(nodes.len(), src.lines().count());
    let mut prev_code_depth = 0;
    for (i, n) in nodes.iter().enumerate() {
        assert_eq!(n.line_no, i + 1);
        if matches!(n.kind, LineKind::Blank | LineKind::Comment) {
            continue;
        }
        assert_eq!(n.depth * 4, indent_width(&n.raw), "line {}", n.line_no);
        assert!(n.depth <= prev_code_depth + 1);
        prev_code_depth = n.depth;
    }
}

pub fn render(lines: &[GenLine]) -> String {
    let mut s = String::new();
    for l in lines {
        if !l.text.is_empty() {
            s.push_str(&"    ".repeat(l.depth));
            s.push_str(&l.text);
        }
        s.push('\n');
    }
    s
}

pub fn gen_program<R: Rng>(rng: &mut R, max_lines: usize) -> String {
    render(&gen_program_lines(rng, max_lines))
}

/// Source lines for lexer fuzzing: random token texts joined by runs of
/// spaces and tabs, optionally indented. No comments.
pub fn gen_lex_line<R: Rng>(rng: &mut R) -> String {
    const POOL: &[&str] = &[
        "x", "total_1", "_tmp", "café", "def", "if", "for", "in", "return", "not", "None", "True", "0", "42", "3.14",
        "1e5", "0x1F", ".5", "7j", "'a b'", "\"q\\\"r\"", "'''doc'''", "f'{x}'", "b'\\x00'", "+", "-", "*", "**", "//",
        "==", "!=", "<=", ">=", "=", "+=", "->", ":=", "%", "@", "~", "(", ")", "[", "]", "{", "}", ",", ":", ";", ".",
    ];
    let mut s = String::new();
    if rng.gen_bool(0.3) {
        s.push_str(&" ".repeat(rng.gen_range(1..9)));
    }
    let n = rng.gen_range(1..=10);
    for i in 0..n {
        if i > 0 {
            for _ in 0..rng.gen_range(1..=3) {
                s.push(if rng.gen_bool(0.8) { ' ' } else { '\t' });
            }
        }
        s.push_str(POOL.choose(rng).unwrap());
    }
    if rng.gen_bool(0.2) {
        s.push_str("  ");
    }
    s
}

/// A program with damage of the kinds the syntax corrector repairs or
/// reports: missing block colons, off-unit or tab indentation, trailing
/// whitespace, stray brackets.
pub fn gen_broken_snippet<R: Rng>(rng: &mut R) -> String {
    let size = rng.gen_range(2..14);
    let lines = gen_program_lines(rng, size);
    let unit: String = match rng.gen_range(0..4) {
        0 => "  ".into(),
        1 => "\t".into(),
        2 => "   ".into(),
        _ => "    ".into(),
    };
    let mut s = String::new();
    for l in &lines {
        let mut text = l.text.clone();
        if l.header && rng.gen_bool(0.4) {
            text.pop();
        }
        if rng.gen_bool(0.05) {
            text.push_str(if rng.gen_bool(0.5) { " (" } else { " ]" });
        }
        if !text.is_empty() {
            s.push_str(&unit.repeat(l.depth));
            if rng.gen_bool(0.1) {
                s.push(' ');
            }
        }
        s.push_str(&text);
        if rng.gen_bool(0.2) {
            s.push_str(if rng.gen_bool(0.5) { "  " } else { "\t" });
        }
        s.push('\n');
    }
    if rng.gen_bool(0.3) {
        s.pop();
    }
    s
}

// ---------------------------------------------------------------------
// synthetic task corpus

/// `n` task records with distinct descriptions and small programs, in the
/// shape of a text-to-code benchmark.
pub fn synthetic_tasks<R: Rng>(rng: &mut R, n: usize) -> Vec<TaskSample> {
    const VERBS: &[&str] = &[
        "find", "count", "remove", "sort", "reverse", "sum", "merge", "filter", "check", "compute", "return", "extract",
        "replace", "split", "rotate", "convert", "group", "multiply", "flatten", "compare",
    ];
    const ADJ: &[&str] = &[
        "largest", "smallest", "even", "odd", "duplicate", "unique", "prime", "negative", "positive", "first", "last",
        "longest", "shortest", "common", "missing", "consecutive",
    ];
    const NOUNS: &[&str] = &[
        "numbers", "elements", "words", "characters", "vowels", "digits", "tuples", "keys", "values", "strings",
        "integers", "substrings", "pairs", "rows", "columns", "squares", "divisors", "factors", "letters", "items",
        "names", "dates", "scores", "prices",
    ];
    const CONTAINERS: &[&str] = &[
        "list", "string", "tuple", "dictionary", "matrix", "array", "sentence", "set", "file", "queue",
    ];
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let (v, a, o, c) = (
            VERBS.choose(rng).unwrap(),
            ADJ.choose(rng).unwrap(),
            NOUNS.choose(rng).unwrap(),
            CONTAINERS.choose(rng).unwrap(),
        );
        let description = format!("Write a function to {v} the {a} {o} in a given {c}.");
        if !seen.insert(description.clone()) {
            continue;
        }
        let id = out.len() as i64 + 1;
        let code = format!(
            "def {v}_{a}_{o}(data):\n    result = []\n    for item in data:\n        if is_{a}(item):\n            result.append(item)\n    return result"
        );
        out.push(TaskSample { id, description, code });
    }
    out
}

/// Ids of samples whose own description does not rank them first. A tie
/// with the top score counts as a hit.
pub fn self_retrieval_misses(samples: &[TaskSample]) -> Vec<i64> {
    let index = story2pseudo::stage1::build_index(samples).unwrap();
    let mut misses = Vec::new();
    for (pos, s) in samples.iter().enumerate() {
        let hits = index.search(&s.description, samples.len()).unwrap();
        let top = hits[0].1;
        let own = hits.iter().find(|h| h.0 == pos).map_or(f64::NEG_INFINITY, |h| h.1);
        if own < top - 1e-12 {
            misses.push(s.id);
        }
    }
    misses
}

/// (expected id, query) rows of the paraphrase fixture.
pub fn paraphrases() -> Vec<(i64, String)> {
    std::fs::read_to_string(fixtures().join("tasks/paraphrases.tsv"))
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (id, q) = l.split_once('\t').unwrap();
            (id.parse().unwrap(), q.to_string())
        })
        .collect()
}

pub fn mini_corpus() -> Vec<TaskSample> {
    story2pseudo::corpus::load_task_corpus(&fixtures().join("tasks/mini_mbpp.jsonl")).unwrap()
}

// ---------------------------------------------------------------------
// transformer fixtures

use story2pseudo::corpus::{load_parallel_corpus, ParallelPair};
use story2pseudo::tinyformer::config::parse_kv;
use story2pseudo::tinyformer::{forward, Example, ModelConfig, ModelParams, TrainConfig};

/// d_model 8, one layer each side, double precision.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        d_model: 8,
        heads: 2,
        encoder_layers: 1,
        decoder_layers: 1,
        ffn_dim: 16,
        max_len: 16,
        dropout: 0.0,
        seed: 3,
    }
}

/// The sample the gradient check is pinned to (vocab 12).
pub fn tiny_sample() -> Example {
    use story2pseudo::tinyformer::vocab::{BOS, EOS};
    Example {
        source: vec![4, 5, 6, 7],
        decoder_input: vec![BOS, 8, 9],
        labels: vec![8, 9, EOS],
    }
}

pub fn smoke_pairs() -> Vec<ParallelPair> {
    let dir = fixtures().join("parallel");
    load_parallel_corpus(&dir.join("smoke.code"), &dir.join("smoke.pseudo")).unwrap()
}

pub fn smoke_configs() -> (ModelConfig, TrainConfig) {
    let text = std::fs::read_to_string(fixtures().join("parallel/smoke.config")).unwrap();
    let mut m = ModelConfig::default();
    let mut t = TrainConfig::default();
    let rest = m.apply_kv(parse_kv(&text).unwrap()).unwrap();
    let rest = t.apply_kv(rest).unwrap();
    assert!(rest.is_empty());
    (m, t)
}

/// Draws a random source/target pair and a target that differs from
/// position `t+1` on, then checks logits rows `0..=t` are bit-identical.
pub fn causal_case<R: Rng>(rng: &mut R, params: &ModelParams, config: &ModelConfig) -> bool {
    let v = params.vocab_size();
    let src_len = rng.gen_range(1..=config.max_len);
    let tgt_len = rng.gen_range(2..=config.max_len);
    let src: Vec<usize> = (0..src_len).map(|_| rng.gen_range(4..v)).collect();
    let mut tgt: Vec<usize> = vec![story2pseudo::tinyformer::vocab::BOS];
    tgt.extend((1..tgt_len).map(|_| rng.gen_range(0..v)));
    let t = rng.gen_range(0..tgt_len - 1);
    let mut other = tgt.clone();
    for x in other.iter_mut().skip(t + 1) {
        *x = rng.gen_range(0..v);
    }
    let a = forward(params, config, &src, &tgt).unwrap();
    let b = forward(params, config, &src, &other).unwrap();
    (0..=t).all(|r| a.row(r) == b.row(r))
}

/// (name, source, golden) for every committed snippet.
pub fn snippets() -> Vec<(String, String, String)> {
    let dir = fixtures().join("snippets");
    let mut out = Vec::new();
    for entry in std::fs::read_dir(&dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "py") {
            let golden = std::fs::read_to_string(path.with_extension("txt")).unwrap();
            let src = std::fs::read_to_string(&path).unwrap();
            out.push((path.file_stem().unwrap().to_string_lossy().into_owned(), src, golden));
        }
    }
    out.sort();
    out
}
