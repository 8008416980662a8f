//! Corpus- and sentence-level BLEU.
//!
//! Scores are built from clipped n-gram precisions (numerators and
//! denominators summed across the corpus before dividing), a brevity
//! penalty against the closest-length reference, and a uniform-weight
//! geometric mean. Everything here works on pre-tokenized input; use
//! [`tokenize`] to get the fixed tokenization the evaluation harness uses.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default maximum n-gram order.
pub const DEFAULT_MAX_N: usize = 4;

/// Numerator substituted for a zero clipped count when smoothing is on.
pub const SMOOTHING_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum MetricError {
    #[error("n-gram order must be at least 1, got {0}")]
    InvalidOrder(usize),
    #[error("empty candidate")]
    EmptyCandidate,
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("candidate {0} has no references")]
    NoReferences(usize),
    #[error("nonpositive length: candidate {candidate}, reference {reference}")]
    NonPositiveLength { candidate: usize, reference: usize },
}

/// Splits text into scoring tokens: whitespace separates tokens and every
/// punctuation character stands alone. Case is preserved.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
        } else if ch.is_alphanumeric() || ch == '_' {
            cur.push(ch);
        } else {
            if !cur.is_empty() {
                out.push(std::mem::take(&mut cur));
            }
            out.push(ch.to_string());
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

/// Occurrence counts of every n-gram of one order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NGramProfile {
    pub n: usize,
    pub counts: HashMap<Vec<String>, usize>,
}

impl NGramProfile {
    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    pub fn get(&self, gram: &[String]) -> usize {
        self.counts.get(gram).copied().unwrap_or(0)
    }
}

pub fn ngram_profile<S: AsRef<str>>(tokens: &[S], n: usize) -> Result<NGramProfile, MetricError> {
    if n == 0 {
        return Err(MetricError::InvalidOrder(n));
    }
    let mut counts = HashMap::new();
    if tokens.len() >= n {
        for window in tokens.windows(n) {
            let gram: Vec<String> = window.iter().map(|t| t.as_ref().to_string()).collect();
            *counts.entry(gram).or_insert(0) += 1;
        }
    }
    Ok(NGramProfile { n, counts })
}

/// Clipped match count over total candidate n-grams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fraction {
    pub numerator: u64,
    pub denominator: u64,
}

impl Fraction {
    pub fn value(&self) -> f64 {
        if self.denominator == 0 {
            0.0
        } else {
            self.numerator as f64 / self.denominator as f64
        }
    }
}

pub fn clipped_precision<S: AsRef<str>, R: AsRef<[S]>>(
    candidate: &[S],
    references: &[R],
    n: usize,
) -> Result<Fraction, MetricError> {
    if candidate.is_empty() {
        return Err(MetricError::EmptyCandidate);
    }
    let cand = ngram_profile(candidate, n)?;
    let mut max_ref: HashMap<Vec<String>, usize> = HashMap::new();
    for r in references {
        let prof = ngram_profile(r.as_ref(), n)?;
        for (gram, count) in prof.counts {
            let slot = max_ref.entry(gram).or_insert(0);
            *slot = (*slot).max(count);
        }
    }
    let numerator = cand
        .counts
        .iter()
        .map(|(gram, &c)| c.min(max_ref.get(gram).copied().unwrap_or(0)) as u64)
        .sum();
    Ok(Fraction {
        numerator,
        denominator: cand.total() as u64,
    })
}

pub fn brevity_penalty(candidate_len: usize, reference_len: usize) -> Result<f64, MetricError> {
    if candidate_len == 0 || reference_len == 0 {
        return Err(MetricError::NonPositiveLength {
            candidate: candidate_len,
            reference: reference_len,
        });
    }
    if candidate_len >= reference_len {
        Ok(1.0)
    } else {
        Ok((1.0 - reference_len as f64 / candidate_len as f64).exp())
    }
}

/// Reference length closest to `candidate_len`; ties go to the shorter one.
pub fn closest_reference_len(candidate_len: usize, reference_lens: &[usize]) -> Option<usize> {
    reference_lens
        .iter()
        .copied()
        .min_by_key(|&r| (r.abs_diff(candidate_len), r))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BleuSettings {
    pub max_n: usize,
    pub smoothing: bool,
}

impl Default for BleuSettings {
    fn default() -> Self {
        Self {
            max_n: DEFAULT_MAX_N,
            smoothing: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub precisions: Vec<Fraction>,
    pub brevity_penalty: f64,
    pub score: f64,
    pub candidate_len: usize,
    pub reference_len: usize,
}

impl BleuReport {
    /// Aligned plain-text rendering used by the `eval` command.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, p) in self.precisions.iter().enumerate() {
            out.push_str(&format!(
                "p{:<11} {:>10.6}  ({}/{})\n",
                i + 1,
                p.value(),
                p.numerator,
                p.denominator
            ));
        }
        out.push_str(&format!("{:<12} {:>10.6}\n", "bp", self.brevity_penalty));
        out.push_str(&format!("{:<12} {:>10.6}\n", "score", self.score));
        out.push_str(&format!("{:<12} {:>10}\n", "cand_len", self.candidate_len));
        out.push_str(&format!("{:<12} {:>10}\n", "ref_len", self.reference_len));
        out
    }
}

/// Sufficient statistics for one (candidate, references) pair. Summing
/// these is associative, so the corpus reduction is order-independent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairStats {
    pub matches: Vec<u64>,
    pub totals: Vec<u64>,
    pub candidate_len: usize,
    pub reference_len: usize,
}

pub fn pair_stats<S: AsRef<str>, R: AsRef<[S]>>(
    candidate: &[S],
    references: &[R],
    max_n: usize,
) -> Result<PairStats, MetricError> {
    if max_n == 0 {
        return Err(MetricError::InvalidOrder(0));
    }
    if candidate.is_empty() {
        return Err(MetricError::EmptyCandidate);
    }
    let mut matches = Vec::with_capacity(max_n);
    let mut totals = Vec::with_capacity(max_n);
    for n in 1..=max_n {
        let f = clipped_precision(candidate, references, n)?;
        matches.push(f.numerator);
        totals.push(f.denominator);
    }
    let lens: Vec<usize> = references.iter().map(|r| r.as_ref().len()).collect();
    let reference_len = closest_reference_len(candidate.len(), &lens).unwrap_or(0);
    Ok(PairStats {
        matches,
        totals,
        candidate_len: candidate.len(),
        reference_len,
    })
}

/// Combines summed statistics into a report.
pub fn report_from_stats(stats: &PairStats, smoothing: bool) -> Result<BleuReport, MetricError> {
    let precisions: Vec<Fraction> = stats
        .matches
        .iter()
        .zip(&stats.totals)
        .map(|(&numerator, &denominator)| Fraction {
            numerator,
            denominator,
        })
        .collect();
    // a corpus whose references are all empty has no meaningful penalty
    let brevity_penalty = if stats.reference_len == 0 {
        1.0
    } else {
        brevity_penalty(stats.candidate_len, stats.reference_len)?
    };
    let weight = 1.0 / precisions.len() as f64;
    let mut log_sum = 0.0;
    let mut zero = false;
    for p in &precisions {
        let num = if p.numerator == 0 {
            if smoothing {
                SMOOTHING_EPSILON
            } else {
                zero = true;
                break;
            }
        } else {
            p.numerator as f64
        };
        if p.denominator == 0 {
            // no n-grams of this order anywhere in the candidates
            if smoothing {
                log_sum += weight * SMOOTHING_EPSILON.ln();
                continue;
            }
            zero = true;
            break;
        }
        log_sum += weight * (num / p.denominator as f64).ln();
    }
    let score = if zero {
        0.0
    } else {
        (brevity_penalty * log_sum.exp()).clamp(0.0, 1.0)
    };
    Ok(BleuReport {
        precisions,
        brevity_penalty,
        score,
        candidate_len: stats.candidate_len,
        reference_len: stats.reference_len,
    })
}

/// Corpus BLEU: statistics are summed over every pair before any ratio
/// is taken.
pub fn corpus_bleu<S, R, Refs>(pairs: &[(Vec<S>, Refs)], settings: BleuSettings) -> Result<BleuReport, MetricError>
where
    S: AsRef<str>,
    R: AsRef<[S]>,
    Refs: AsRef<[R]>,
{
    if pairs.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut acc = PairStats {
        matches: vec![0; settings.max_n],
        totals: vec![0; settings.max_n],
        candidate_len: 0,
        reference_len: 0,
    };
    for (i, (cand, refs)) in pairs.iter().enumerate() {
        let refs = refs.as_ref();
        if refs.is_empty() {
            return Err(MetricError::NoReferences(i));
        }
        let s = pair_stats(cand, refs, settings.max_n)?;
        for n in 0..settings.max_n {
            acc.matches[n] += s.matches[n];
            acc.totals[n] += s.totals[n];
        }
        acc.candidate_len += s.candidate_len;
        acc.reference_len += s.reference_len;
    }
    report_from_stats(&acc, settings.smoothing)
}

pub fn sentence_bleu<S: AsRef<str>, R: AsRef<[S]>>(
    candidate: &[S],
    references: &[R],
    settings: BleuSettings,
) -> Result<BleuReport, MetricError> {
    if references.is_empty() {
        return Err(MetricError::NoReferences(0));
    }
    let s = pair_stats(candidate, references, settings.max_n)?;
    report_from_stats(&s, settings.smoothing)
}
