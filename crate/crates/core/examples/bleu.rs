//! Corpus and sentence BLEU on a few hand-made pairs.
//!
//!     cargo run --example bleu

use story2pseudo::metric::{corpus_bleu, sentence_bleu, tokenize, BleuSettings};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let rows = [
        ("SET x TO 1", "SET x TO 1"),
        ("FOR i FROM 0 TO 9 DO", "FOR i FROM 0 TO n DO"),
        ("DISPLAY total", "DISPLAY the total"),
    ];
    let pairs: Vec<(Vec<String>, Vec<Vec<String>>)> = rows
        .iter()
        .map(|(c, r)| (tokenize(c), vec![tokenize(r)]))
        .collect();

    let settings = BleuSettings::default();
    println!("corpus BLEU\n{}", corpus_bleu(&pairs, settings)?.to_text());

    let smoothed = BleuSettings { smoothing: true, ..settings };
    for (cand, refs) in &pairs {
        let s = sentence_bleu(cand, refs, smoothed)?;
        println!("{:<28} {:.4}", cand.join(" "), s.score);
    }
    Ok(())
}
