//! Tokens, line kinds and depths for a small program.
//!
//!     cargo run --example lex [file.py]

use story2pseudo::pylex::parse_program;

const SAMPLE: &str = "def total(xs):\n    t = 0\n    for x in xs:  # sum\n        t += x\n\n    return t\n";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = match std::env::args().nth(1) {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    for node in parse_program(&source)? {
        let toks: Vec<String> = node.tokens.iter().map(|t| format!("{:?}:{}", t.kind, t.text)).collect();
        println!("{:>3} d{} {:<10} {}", node.line_no, node.depth, node.kind.name(), toks.join(" "));
    }
    Ok(())
}
