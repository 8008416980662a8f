//! Trains the transformer on the 50-pair smoke corpus until it memorizes
//! it, then translates a few training sources.
//!
//!     cargo run --release --example memorize [epochs]

use std::path::Path;

use story2pseudo::corpus::load_parallel_corpus;
use story2pseudo::tinyformer::config::parse_kv;
use story2pseudo::tinyformer::{build_vocab, train, ModelConfig, TrainConfig, TrainedModel};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/parallel");
    let pairs = load_parallel_corpus(&dir.join("smoke.code"), &dir.join("smoke.pseudo"))?;
    let text = std::fs::read_to_string(dir.join("smoke.config"))?;
    let mut model_config = ModelConfig::default();
    let mut train_config = TrainConfig::default();
    let rest = model_config.apply_kv(parse_kv(&text)?)?;
    train_config.apply_kv(rest)?;
    if let Some(epochs) = std::env::args().nth(1) {
        train_config.epochs = epochs.parse()?;
    }

    let vocab = build_vocab(&pairs, train_config.min_freq)?;
    let (params, report) = train(&pairs, &vocab, &model_config, &train_config)?;
    for (i, loss) in report.epoch_losses.iter().enumerate() {
        if i == 0 || (i + 1) % 20 == 0 {
            println!("epoch {:>3}  loss {loss:.4}", i + 1);
        }
    }
    println!("train BLEU {:.4}  ({:.1}s)", report.final_train_bleu, report.wall_time_secs);

    let model = TrainedModel {
        config: model_config,
        vocab,
        params,
    };
    for p in pairs.iter().take(5) {
        println!("{:<24} -> {}", p.source, model.translate(&p.source)?);
    }
    Ok(())
}
