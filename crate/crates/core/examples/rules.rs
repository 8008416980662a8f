//! Rule-based conversion of a Python file (or a built-in sample) to
//! pseudocode, listing lines that fell back to EXECUTE.
//!
//!     cargo run --example rules [file.py] [table.rules]

use std::path::PathBuf;

use story2pseudo::ruleconv::{convert_program, load_ruleset};

const SAMPLE: &str = "\
def count_even(nums):
    count = 0
    for n in nums:
        if n % 2 == 0:
            count += 1
    with open('log') as f:
        f.write(str(count))
    return count
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let source = match args.next() {
        Some(path) => std::fs::read_to_string(path)?,
        None => SAMPLE.to_string(),
    };
    let rules = load_ruleset(args.next().map(PathBuf::from).as_deref())?;
    let doc = convert_program(&source, &rules)?;
    print!("{}", doc.render_txt());
    println!("-- {} rules ({}), fallback lines {:?}", rules.rules.len(), rules.version, doc.fallback_lines);
    Ok(())
}
