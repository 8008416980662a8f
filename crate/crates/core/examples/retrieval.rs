//! Stage 1: retrieve and syntax-correct code for a description.
//!
//!     cargo run --example retrieval -- "reverse a string"

use std::path::Path;

use story2pseudo::corpus::load_task_corpus;
use story2pseudo::stage1::{build_index, generate_code, preprocess_text};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let query = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "find the biggest number in a list".to_string());
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tasks/mini_mbpp.jsonl");
    let corpus = load_task_corpus(&path)?;
    let index = build_index(&corpus)?;
    println!("{} samples, {} terms", corpus.len(), index.vocab_size());

    let tags: Vec<String> = preprocess_text(&query)?
        .iter()
        .map(|t| format!("{}/{:?}", t.text, t.tag))
        .collect();
    println!("query: {}", tags.join(" "));

    for c in generate_code(&query, &index, 3)? {
        println!("\n#{} similarity {:.4} fixes {:?}\n{}", c.source_id, c.similarity, c.syntax_fixes, c.code);
    }
    Ok(())
}
