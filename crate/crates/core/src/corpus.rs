//! Task corpora (description → code records) and aligned parallel corpora
//! (code line → pseudocode line), plus seeded train/valid/test splits.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_RATIOS: [f64; 3] = [0.9, 0.05, 0.05];
pub const DEFAULT_SPLIT_SEED: u64 = 13;

/// Name of the generator driving split shuffles.
pub const SPLIT_RNG: &str = "ChaCha8";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskSample {
    pub id: i64,
    #[serde(rename = "text")]
    pub description: String,
    pub code: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParallelPair {
    pub source: String,
    pub target: String,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{path}: no records")]
    NoRecords { path: String },
    #[error("{path}: line {line}: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("{path}: line {line}: duplicate id {id}")]
    DuplicateId { path: String, line: usize, id: i64 },
    #[error("line-count mismatch: {source_lines} vs {target_lines}")]
    LineCountMismatch { source_lines: usize, target_lines: usize },
    #[error("split ratios must be nonnegative and sum to 1, got {0:?}")]
    BadRatios([f64; 3]),
    #[error("empty corpus")]
    Empty,
}

fn read(path: &Path) -> Result<String, CorpusError> {
    std::fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[derive(Deserialize)]
struct RawTask {
    id: Option<i64>,
    text: Option<String>,
    code: Option<String>,
}

/// Parses line-delimited JSON task records (`id`, `text`, `code`).
/// `origin` only labels errors.
pub fn parse_task_corpus(text: &str, origin: &str) -> Result<Vec<TaskSample>, CorpusError> {
    let mut samples = Vec::new();
    let mut ids = HashSet::new();
    let malformed = |line: usize, message: String| CorpusError::Malformed {
        path: origin.to_string(),
        line,
        message,
    };
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawTask = serde_json::from_str(line).map_err(|e| malformed(line_no, e.to_string()))?;
        let id = raw.id.ok_or_else(|| malformed(line_no, "missing field `id`".into()))?;
        let description = raw.text.ok_or_else(|| malformed(line_no, "missing field `text`".into()))?;
        let code = raw.code.ok_or_else(|| malformed(line_no, "missing field `code`".into()))?;
        if description.trim().is_empty() {
            return Err(malformed(line_no, "empty `text`".into()));
        }
        if code.trim().is_empty() {
            return Err(malformed(line_no, "empty `code`".into()));
        }
        if !ids.insert(id) {
            return Err(CorpusError::DuplicateId {
                path: origin.to_string(),
                line: line_no,
                id,
            });
        }
        samples.push(TaskSample { id, description, code });
    }
    if samples.is_empty() {
        return Err(CorpusError::NoRecords {
            path: origin.to_string(),
        });
    }
    Ok(samples)
}

pub fn load_task_corpus(path: &Path) -> Result<Vec<TaskSample>, CorpusError> {
    parse_task_corpus(&read(path)?, &path.display().to_string())
}

pub fn write_task_corpus(samples: &[TaskSample], path: &Path) -> Result<(), CorpusError> {
    let mut out = String::new();
    for s in samples {
        out.push_str(&serde_json::to_string(s).expect("task sample serializes"));
        out.push('\n');
    }
    write_file(path, out.as_bytes())
}

fn split_lines(text: &str) -> Vec<&str> {
    text.lines().map(|l| l.strip_suffix('\r').unwrap_or(l)).collect()
}

/// Aligns two texts line by line. Pairs with a blank side are dropped; the
/// second value is the number of aligned lines before dropping.
pub fn align_parallel(source: &str, target: &str) -> Result<(Vec<ParallelPair>, usize), CorpusError> {
    let src = split_lines(source);
    let tgt = split_lines(target);
    if src.len() != tgt.len() {
        return Err(CorpusError::LineCountMismatch {
            source_lines: src.len(),
            target_lines: tgt.len(),
        });
    }
    let pairs = src
        .iter()
        .zip(&tgt)
        .filter(|(s, t)| !s.trim().is_empty() && !t.trim().is_empty())
        .map(|(s, t)| ParallelPair {
            source: s.to_string(),
            target: t.to_string(),
        })
        .collect();
    Ok((pairs, src.len()))
}

pub fn load_parallel_corpus(source_path: &Path, target_path: &Path) -> Result<Vec<ParallelPair>, CorpusError> {
    let (pairs, _) = align_parallel(&read(source_path)?, &read(target_path)?)?;
    Ok(pairs)
}

pub fn write_parallel_corpus(pairs: &[ParallelPair], source_path: &Path, target_path: &Path) -> Result<(), CorpusError> {
    let mut src = String::new();
    let mut tgt = String::new();
    for p in pairs {
        src.push_str(&p.source);
        src.push('\n');
        tgt.push_str(&p.target);
        tgt.push('\n');
    }
    write_file(source_path, src.as_bytes())?;
    write_file(target_path, tgt.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.display().to_string(),
        source,
    };
    let mut f = std::fs::File::create(path).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusSplit<T> {
    pub train: Vec<T>,
    pub valid: Vec<T>,
    pub test: Vec<T>,
    pub seed: u64,
    pub ratios: [f64; 3],
}

impl<T> CorpusSplit<T> {
    pub fn sizes(&self) -> (usize, usize, usize) {
        (self.train.len(), self.valid.len(), self.test.len())
    }
}

/// Sizes for `n` samples: valid and test are floored, train takes the rest.
pub fn split_sizes(n: usize, ratios: [f64; 3]) -> (usize, usize, usize) {
    // the nudge keeps e.g. 0.29 * 100 = 28.999999999999996 at 29
    let part = |r: f64| ((n as f64 * r) + 1e-9).floor() as usize;
    let valid = part(ratios[1]).min(n);
    let test = part(ratios[2]).min(n - valid);
    (n - valid - test, valid, test)
}

/// Deterministic shuffle-and-cut. Members of each split keep their
/// original relative order.
pub fn split_corpus<T: Clone>(samples: &[T], ratios: [f64; 3], seed: u64) -> Result<CorpusSplit<T>, CorpusError> {
    if ratios.iter().any(|r| !(r.is_finite() && *r >= 0.0)) || (ratios.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(CorpusError::BadRatios(ratios));
    }
    if samples.is_empty() {
        return Err(CorpusError::Empty);
    }
    let n = samples.len();
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        order.swap(i, j);
    }
    let (n_train, n_valid, _) = split_sizes(n, ratios);
    let pick = |idx: &[usize]| {
        let mut idx = idx.to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| samples[i].clone()).collect::<Vec<T>>()
    };
    Ok(CorpusSplit {
        train: pick(&order[..n_train]),
        valid: pick(&order[n_train..n_train + n_valid]),
        test: pick(&order[n_train + n_valid..]),
        seed,
        ratios,
    })
}
