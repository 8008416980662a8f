//! Finite-difference check of the transformer's backward pass on a tiny
//! configuration.
//!
//!     cargo run --example grad_check

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use story2pseudo::tinyformer::gradcheck::grad_check_entries;
use story2pseudo::tinyformer::vocab::{BOS, EOS};
use story2pseudo::tinyformer::{grad_check, Example, ModelConfig, ModelParams};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ModelConfig {
        d_model: 8,
        heads: 2,
        encoder_layers: 1,
        decoder_layers: 1,
        ffn_dim: 16,
        max_len: 16,
        dropout: 0.0,
        seed: 3,
    };
    let params = ModelParams::init(&config, 12, &mut ChaCha8Rng::seed_from_u64(config.seed));
    let sample = Example {
        source: vec![4, 5, 6, 7, 8],
        decoder_input: vec![BOS, 9, 10, 11],
        labels: vec![9, 10, 11, EOS],
    };
    println!("{} parameters", params.param_count());
    for eps in [1e-4, 1e-5, 5e-6] {
        println!("eps {eps:e}: max relative error {:.3e}", grad_check(&params, &config, &sample, eps)?);
    }
    for e in grad_check_entries(&params, &config, &sample, 1e-5, 5, 1)? {
        println!("{:<28} [{:>3}] analytic {:+.6e} numeric {:+.6e}", e.tensor, e.index, e.analytic, e.numeric);
    }
    Ok(())
}
