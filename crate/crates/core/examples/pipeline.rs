//! Story → code → pseudocode with the rule engine, on the demo story or
//! one given on the command line.
//!
//!     cargo run --example pipeline -- "As a user I want to sort my list of scores"

use std::path::Path;

use story2pseudo::pipeline::{run_pipeline, PipelineConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let demo = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/demo");
    let config = PipelineConfig::load(&demo.join("demo.config"))?;
    let story = match std::env::args().nth(1) {
        Some(s) => s,
        None => std::fs::read_to_string(demo.join("story.txt"))?.trim_end().to_string(),
    };
    let result = run_pipeline(&story, &config)?;
    println!("story: {}\n", result.story);
    println!("stage 1 (#{}, similarity {:.4}, fixes {:?}):\n{}\n", result.source_id, result.similarity, result.syntax_fixes, result.code);
    println!("stage 2 ({}):\n{}", result.engine, result.pseudocode);
    Ok(())
}
