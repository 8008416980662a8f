//! BLEU of the rule engine on the smoke parallel corpus, written as a
//! text report plus a JSON record.
//!
//!     cargo run --example evaluate [report.txt]

use std::path::{Path, PathBuf};

use story2pseudo::corpus::load_parallel_corpus;
use story2pseudo::metric::BleuSettings;
use story2pseudo::pipeline::{evaluate_stage, write_eval_report, Converter, EvalEngine, PipelineConfig};
use story2pseudo::ruleconv::RuleSet;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/parallel");
    let pairs = load_parallel_corpus(&dir.join("smoke.code"), &dir.join("smoke.pseudo"))?;
    let converter = Converter::Rules(RuleSet::builtin());
    let settings = BleuSettings { smoothing: true, ..BleuSettings::default() };
    let outcome = evaluate_stage(&pairs, &EvalEngine::Convert(&converter), settings)?;

    let hash = PipelineConfig::default().hash();
    print!("{}", outcome.to_text(&hash));
    let mut worst: Vec<_> = outcome.records.iter().collect();
    worst.sort_by(|a, b| a.sentence_bleu.total_cmp(&b.sentence_bleu));
    for r in worst.iter().take(3) {
        println!("{:.3}  {:<22} ref: {:<28} got: {}", r.sentence_bleu, r.source, r.reference, r.hypothesis.replace('\n', " / "));
    }
    if let Some(out) = std::env::args().nth(1).map(PathBuf::from) {
        let json = write_eval_report(&outcome, &hash, &out)?;
        println!("wrote {} and {}", out.display(), json.display());
    }
    Ok(())
}
