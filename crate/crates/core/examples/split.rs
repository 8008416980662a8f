//! Seeded train/valid/test split of the task corpus.
//!
//!     cargo run --example split [seed]

use std::path::Path;

use story2pseudo::corpus::{load_task_corpus, split_corpus, DEFAULT_RATIOS, DEFAULT_SPLIT_SEED};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = match std::env::args().nth(1) {
        Some(s) => s.parse()?,
        None => DEFAULT_SPLIT_SEED,
    };
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/tasks/mini_mbpp.jsonl");
    let corpus = load_task_corpus(&path)?;
    let split = split_corpus(&corpus, DEFAULT_RATIOS, seed)?;
    let (tr, va, te) = split.sizes();
    println!("seed {seed}: train {tr}, valid {va}, test {te}");
    let ids = |xs: &[story2pseudo::corpus::TaskSample]| xs.iter().map(|s| s.id.to_string()).collect::<Vec<_>>().join(" ");
    println!("valid ids: {}", ids(&split.valid));
    println!("test ids:  {}", ids(&split.test));
    Ok(())
}
