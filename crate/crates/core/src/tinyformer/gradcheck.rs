//! Finite-difference check of the hand-written backward pass.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::ModelConfig;
use super::model::ModelParams;
use super::train::Example;
use super::TinyError;

/// Entries checked by [`grad_check`].
pub const DEFAULT_ENTRIES: usize = 256;

#[derive(Debug, Clone, PartialEq)]
pub struct GradEntry {
    pub tensor: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

impl GradEntry {
    pub fn relative_error(&self) -> f64 {
        let (a, f) = (self.analytic, self.numeric);
        (a - f).abs() / a.abs().max(f.abs()).max(1e-8)
    }
}

/// Compares analytic and central-difference gradients of the sample's
/// mean cross-entropy on `count` parameter entries drawn with `seed`.
/// Dropout is not applied.
pub fn grad_check_entries(
    params: &ModelParams,
    config: &ModelConfig,
    sample: &Example,
    epsilon: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<GradEntry>, TinyError> {
    let mut grads = params.zeros_like();
    sample.loss(params, config, Some(&mut grads))?;
    let names: Vec<(String, usize)> = params.named_tensors().into_iter().map(|(n, m)| (n, m.len())).collect();
    let total: usize = names.iter().map(|(_, l)| l).sum();
    let grads: Vec<Vec<f64>> = grads.named_tensors().into_iter().map(|(_, m)| m.data.clone()).collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut probe = params.clone();
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let mut flat = rng.gen_range(0..total);
        let mut t = 0;
        while flat >= names[t].1 {
            flat -= names[t].1;
            t += 1;
        }
        let original = probe.tensors_mut()[t].data[flat];
        probe.tensors_mut()[t].data[flat] = original + epsilon;
        let plus = sample.loss(&probe, config, None)?;
        probe.tensors_mut()[t].data[flat] = original - epsilon;
        let minus = sample.loss(&probe, config, None)?;
        probe.tensors_mut()[t].data[flat] = original;
        out.push(GradEntry {
            tensor: names[t].0.clone(),
            index: flat,
            analytic: grads[t][flat],
            numeric: (plus - minus) / (2.0 * epsilon),
        });
    }
    Ok(out)
}

/// Largest relative error over [`DEFAULT_ENTRIES`] randomly chosen
/// parameters, sampled with `config.seed`.
pub fn grad_check(params: &ModelParams, config: &ModelConfig, sample: &Example, epsilon: f64) -> Result<f64, TinyError> {
    let entries = grad_check_entries(params, config, sample, epsilon, DEFAULT_ENTRIES, config.seed)?;
    Ok(entries.iter().map(GradEntry::relative_error).fold(0.0, f64::max))
}
