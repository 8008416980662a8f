use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, TrainConfig};
use super::model::{self, ModelParams};
use super::vocab::{Vocab, BOS, EOS, PAD};
use super::TinyError;
use crate::corpus::ParallelPair;
use crate::metric::{corpus_bleu, tokenize, BleuSettings};

/// One teacher-forced training example.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Example {
    pub source: Vec<usize>,
    /// `[BOS, y…]`
    pub decoder_input: Vec<usize>,
    /// `[y…, EOS]`
    pub labels: Vec<usize>,
}

impl Example {
    pub fn encode(vocab: &Vocab, pair: &ParallelPair, max_len: usize) -> Result<Example, TinyError> {
        let source = vocab.encode(&pair.source);
        if source.is_empty() {
            return Err(TinyError::EmptySequence);
        }
        let target = vocab.encode(&pair.target);
        for len in [source.len(), target.len() + 1] {
            if len > max_len {
                return Err(TinyError::TooLong { len, max_len });
            }
        }
        let mut decoder_input = vec![BOS];
        decoder_input.extend(&target);
        let mut labels = target;
        labels.push(EOS);
        Ok(Example {
            source,
            decoder_input,
            labels,
        })
    }

    pub fn loss(&self, params: &ModelParams, config: &ModelConfig, grads: Option<&mut ModelParams>) -> Result<f64, TinyError> {
        model::example_loss(params, config, &self.source, &self.decoder_input, &self.labels, grads)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Token-weighted mean cross-entropy of each epoch, measured on the
    /// forward pass before each update.
    pub epoch_losses: Vec<f64>,
    /// Corpus BLEU of greedy translations of the training sources.
    pub final_train_bleu: f64,
    pub epochs: usize,
    pub seed: u64,
    pub steps: usize,
    pub vocab_size: usize,
    pub param_count: usize,
    /// Not persisted, so saved reports stay reproducible.
    #[serde(skip)]
    pub wall_time_secs: f64,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(f64::NAN)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Parameters bundled with what is needed to use them.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainedModel {
    pub config: ModelConfig,
    pub vocab: Vocab,
    pub params: ModelParams,
}

impl TrainedModel {
    pub fn translate(&self, source: &str) -> Result<String, TinyError> {
        translate(&self.params, &self.config, &self.vocab, source)
    }
}

struct Adam {
    m: ModelParams,
    v: ModelParams,
    t: i32,
}

impl Adam {
    fn new(params: &ModelParams) -> Adam {
        Adam {
            m: params.zeros_like(),
            v: params.zeros_like(),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut ModelParams, grads: &ModelParams, cfg: &TrainConfig) {
        self.t += 1;
        let c1 = 1.0 - cfg.beta1.powi(self.t);
        let c2 = 1.0 - cfg.beta2.powi(self.t);
        let grads = grads.named_tensors();
        let tensors = params
            .tensors_mut()
            .into_iter()
            .zip(grads)
            .zip(self.m.tensors_mut())
            .zip(self.v.tensors_mut());
        for (((p, (_, g)), m), v) in tensors {
            for i in 0..p.data.len() {
                let gi = g.data[i];
                m.data[i] = cfg.beta1 * m.data[i] + (1.0 - cfg.beta1) * gi;
                v.data[i] = cfg.beta2 * v.data[i] + (1.0 - cfg.beta2) * gi * gi;
                let mhat = m.data[i] / c1;
                let vhat = v.data[i] / c2;
                p.data[i] -= cfg.learning_rate * mhat / (vhat.sqrt() + cfg.adam_eps);
            }
        }
    }
}

/// Trains a fresh model on `pairs`. Parameters are drawn from a ChaCha8
/// generator seeded with `model_config.seed`; the same generator then
/// shuffles each epoch and draws dropout masks.
pub fn train(
    pairs: &[ParallelPair],
    vocab: &Vocab,
    model_config: &ModelConfig,
    train_config: &TrainConfig,
) -> Result<(ModelParams, TrainReport), TinyError> {
    model_config.validate()?;
    train_config.validate()?;
    if pairs.is_empty() {
        return Err(TinyError::EmptyCorpus);
    }
    let start = Instant::now();
    let examples = pairs
        .iter()
        .map(|p| Example::encode(vocab, p, model_config.max_len))
        .collect::<Result<Vec<_>, _>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(model_config.seed);
    let mut params = ModelParams::init(model_config, vocab.len(), &mut rng);
    let mut adam = Adam::new(&params);
    let mut order: Vec<usize> = (0..examples.len()).collect();
    let mut epoch_losses = Vec::with_capacity(train_config.epochs);
    let mut steps = 0;

    for epoch in 1..=train_config.epochs {
        order.shuffle(&mut rng);
        let mut epoch_sum = 0.0;
        let mut epoch_count = 0usize;
        for batch in order.chunks(train_config.batch_size) {
            let mut grads = params.zeros_like();
            let mut batch_sum = 0.0;
            let mut batch_count = 0usize;
            for &i in batch {
                let ex = &examples[i];
                let dropout_rng = (model_config.dropout > 0.0).then_some(&mut rng);
                let (logits, cache) = model::forward_train(&params, model_config, &ex.source, &ex.decoder_input, dropout_rng)?;
                let (sum, count, dlogits) = model::cross_entropy(&logits, &ex.labels);
                model::backward(&params, model_config, &cache, &dlogits, &mut grads);
                batch_sum += sum;
                batch_count += count;
            }
            steps += 1;
            if !batch_sum.is_finite() {
                return Err(TinyError::Divergence { epoch, step: steps });
            }
            if batch_count == 0 {
                continue;
            }
            for t in grads.tensors_mut() {
                t.scale(1.0 / batch_count as f64);
            }
            adam.step(&mut params, &grads, train_config);
            if !params.all_finite() {
                return Err(TinyError::Divergence { epoch, step: steps });
            }
            epoch_sum += batch_sum;
            epoch_count += batch_count;
        }
        epoch_losses.push(if epoch_count == 0 { 0.0 } else { epoch_sum / epoch_count as f64 });
    }

    let final_train_bleu = train_bleu(&params, model_config, vocab, pairs)?;
    let report = TrainReport {
        epoch_losses,
        final_train_bleu,
        epochs: train_config.epochs,
        seed: model_config.seed,
        steps,
        vocab_size: vocab.len(),
        param_count: params.param_count(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok((params, report))
}

fn train_bleu(params: &ModelParams, config: &ModelConfig, vocab: &Vocab, pairs: &[ParallelPair]) -> Result<f64, TinyError> {
    let mut scored = Vec::with_capacity(pairs.len());
    for p in pairs {
        let hyp = translate(params, config, vocab, &p.source)?;
        scored.push((tokenize(&hyp), vec![tokenize(&p.target)]));
    }
    // an all-empty output corpus has no defined BLEU; count it as zero
    Ok(corpus_bleu(&scored, BleuSettings::default()).map(|r| r.score).unwrap_or(0.0))
}

/// Greedy decoding from BOS until EOS or `max_len` decoder positions.
/// The source is truncated to `max_len` tokens; PAD and BOS are never
/// emitted.
pub fn translate(params: &ModelParams, config: &ModelConfig, vocab: &Vocab, source: &str) -> Result<String, TinyError> {
    let mut src = vocab.encode(source);
    if src.is_empty() {
        return Err(TinyError::EmptySequence);
    }
    src.truncate(config.max_len);
    let memory = model::encode(params, config, &src)?;
    let mut ids = vec![BOS];
    while ids.len() < config.max_len {
        let logits = model::decode_logits(params, config, &memory, &ids)?;
        let last = logits.row(logits.rows - 1);
        let mut best = EOS;
        for (id, &v) in last.iter().enumerate() {
            if id == PAD || id == BOS {
                continue;
            }
            if v > last[best] {
                best = id;
            }
        }
        if best == EOS {
            break;
        }
        ids.push(best);
    }
    Ok(vocab.decode(&ids))
}
