//! Stage 1: natural-language task description → code.
//!
//! The generator is nearest-neighbour retrieval over a task corpus: the
//! description is tokenized and tagged, matched against a TF-IDF index of
//! corpus descriptions, and the best sample's code is syntax-corrected.

pub mod index;
pub mod pos;
pub mod syntax;

use serde::{Deserialize, Serialize};

pub use index::{build_index, build_index_with, IndexError, TfIdfIndex, WeightConfig};
pub use pos::{preprocess_text, PreprocessError, Tag, TaggedToken};
pub use syntax::{correct_syntax, SyntaxFix};

/// Label attached to every stage-1 output.
pub const ENGINE: &str = "retrieval";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CodeCandidate {
    pub code: String,
    pub similarity: f64,
    pub source_id: i64,
    pub syntax_fixes: Vec<SyntaxFix>,
}

/// Top-`k` corpus programs for `query`, each passed through
/// [`correct_syntax`].
pub fn generate_code(query: &str, index: &TfIdfIndex, k: usize) -> Result<Vec<CodeCandidate>, PreprocessError> {
    let hits = index.search(query, k.max(1))?;
    Ok(hits
        .into_iter()
        .map(|(pos, similarity)| {
            let sample = &index.samples[pos];
            let (code, syntax_fixes) = correct_syntax(&sample.code);
            CodeCandidate {
                code,
                similarity,
                source_id: sample.id,
                syntax_fixes,
            }
        })
        .collect())
}
