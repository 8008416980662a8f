use std::collections::HashMap;

use super::TinyError;
use crate::corpus::ParallelPair;
use crate::metric::tokenize;

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const BOS: usize = 2;
pub const EOS: usize = 3;
pub const RESERVED: [&str; 4] = ["<pad>", "<unk>", "<bos>", "<eos>"];

/// Shared source/target vocabulary. Ids 0..4 are reserved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocab {
    to_id: HashMap<String, usize>,
    tokens: Vec<String>,
}

impl Vocab {
    /// Builds from tokens listed in id order after the reserved block.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Result<Vocab, TinyError> {
        let mut all: Vec<String> = RESERVED.iter().map(|s| s.to_string()).collect();
        let mut to_id = HashMap::new();
        for (i, t) in all.iter().enumerate() {
            to_id.insert(t.clone(), i);
        }
        for t in tokens {
            if to_id.contains_key(&t) {
                return Err(TinyError::Format(format!("duplicate vocabulary entry `{t}`")));
            }
            to_id.insert(t.clone(), all.len());
            all.push(t);
        }
        Ok(Vocab { to_id, tokens: all })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> usize {
        self.to_id.get(token).copied().unwrap_or(UNK)
    }

    pub fn token(&self, id: usize) -> &str {
        self.tokens.get(id).map(String::as_str).unwrap_or(RESERVED[UNK])
    }

    /// Non-reserved tokens in id order.
    pub fn entries(&self) -> &[String] {
        &self.tokens[RESERVED.len()..]
    }

    pub fn encode(&self, text: &str) -> Vec<usize> {
        tokenize(text).iter().map(|t| self.id(t)).collect()
    }

    /// Joins tokens with single spaces, skipping PAD/BOS/EOS.
    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter(|&&i| !matches!(i, PAD | BOS | EOS))
            .map(|&i| self.token(i))
            .collect::<Vec<_>>()
            .join(" ")
    }
}

/// Tokens from both sides of every pair, most frequent first, ties in
/// lexicographic order. Tokens seen fewer than `min_freq` times are left
/// out and encode as UNK.
pub fn build_vocab(pairs: &[ParallelPair], min_freq: usize) -> Result<Vocab, TinyError> {
    if pairs.is_empty() {
        return Err(TinyError::EmptyCorpus);
    }
    let mut freq: HashMap<String, usize> = HashMap::new();
    for p in pairs {
        for t in tokenize(&p.source).into_iter().chain(tokenize(&p.target)) {
            *freq.entry(t).or_insert(0) += 1;
        }
    }
    let mut entries: Vec<(String, usize)> = freq
        .into_iter()
        .filter(|(t, c)| *c >= min_freq && !RESERVED.contains(&t.as_str()))
        .collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Vocab::from_tokens(entries.into_iter().map(|(t, _)| t))
}
