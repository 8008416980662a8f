use serde::{Deserialize, Serialize};

use super::TinyError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub encoder_layers: usize,
    pub decoder_layers: usize,
    pub ffn_dim: usize,
    pub max_len: usize,
    pub dropout: f64,
    pub seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            d_model: 64,
            heads: 4,
            encoder_layers: 2,
            decoder_layers: 2,
            ffn_dim: 128,
            max_len: 64,
            dropout: 0.0,
            seed: 13,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), TinyError> {
        let dims = [
            ("d_model", self.d_model),
            ("heads", self.heads),
            ("encoder_layers", self.encoder_layers),
            ("decoder_layers", self.decoder_layers),
            ("ffn_dim", self.ffn_dim),
            ("max_len", self.max_len),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(TinyError::Config(format!("{name} must be at least 1")));
            }
        }
        if self.d_model % self.heads != 0 {
            return Err(TinyError::Config(format!(
                "d_model {} is not divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(TinyError::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    pub fn to_kv(&self) -> String {
        format!(
            "d_model={}\nheads={}\nencoder_layers={}\ndecoder_layers={}\nffn_dim={}\nmax_len={}\ndropout={}\nseed={}\n",
            self.d_model,
            self.heads,
            self.encoder_layers,
            self.decoder_layers,
            self.ffn_dim,
            self.max_len,
            self.dropout,
            self.seed
        )
    }

    /// Overrides fields from `key=value` pairs; unknown keys are returned
    /// untouched for the caller.
    pub fn apply_kv<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Vec<(&'a str, &'a str)>, TinyError> {
        let mut rest = Vec::new();
        for (k, v) in pairs {
            match k {
                "d_model" => self.d_model = parse(k, v)?,
                "heads" => self.heads = parse(k, v)?,
                "encoder_layers" => self.encoder_layers = parse(k, v)?,
                "decoder_layers" => self.decoder_layers = parse(k, v)?,
                "ffn_dim" => self.ffn_dim = parse(k, v)?,
                "max_len" => self.max_len = parse(k, v)?,
                "dropout" => self.dropout = parse(k, v)?,
                "seed" => self.seed = parse(k, v)?,
                _ => rest.push((k, v)),
            }
        }
        Ok(rest)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub min_freq: usize,
}

/// Epochs for text-to-code style runs.
pub const STAGE1_EPOCHS: usize = 40;
/// Epochs for code-to-pseudocode runs.
pub const STAGE2_EPOCHS: usize = 5;

impl Default for TrainConfig {
    fn default() -> Self {
        Self::stage2()
    }
}

impl TrainConfig {
    pub fn stage1() -> Self {
        Self {
            epochs: STAGE1_EPOCHS,
            ..Self::stage2()
        }
    }

    pub fn stage2() -> Self {
        Self {
            epochs: STAGE2_EPOCHS,
            learning_rate: 3e-4,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 1,
            min_freq: 1,
        }
    }

    pub fn validate(&self) -> Result<(), TinyError> {
        if self.epochs == 0 || self.batch_size == 0 || self.min_freq == 0 {
            return Err(TinyError::Config("epochs, batch_size and min_freq must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(TinyError::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    pub fn apply_kv<'a>(&mut self, pairs: impl IntoIterator<Item = (&'a str, &'a str)>) -> Result<Vec<(&'a str, &'a str)>, TinyError> {
        let mut rest = Vec::new();
        for (k, v) in pairs {
            match k {
                "epochs" => self.epochs = parse(k, v)?,
                "learning_rate" | "lr" => self.learning_rate = parse(k, v)?,
                "beta1" => self.beta1 = parse(k, v)?,
                "beta2" => self.beta2 = parse(k, v)?,
                "adam_eps" => self.adam_eps = parse(k, v)?,
                "batch_size" => self.batch_size = parse(k, v)?,
                "min_freq" => self.min_freq = parse(k, v)?,
                _ => rest.push((k, v)),
            }
        }
        Ok(rest)
    }
}

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, TinyError> {
    value
        .trim()
        .parse()
        .map_err(|_| TinyError::Config(format!("bad value for {key}: `{value}`")))
}

/// `key=value` lines; `#` comments and blank lines are skipped.
pub fn parse_kv(text: &str) -> Result<Vec<(&str, &str)>, TinyError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| TinyError::Config(format!("line {}: expected key=value", i + 1)))?;
        out.push((k.trim(), v.trim()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ModelConfig::default().validate().unwrap();
        TrainConfig::default().validate().unwrap();
        assert_eq!(TrainConfig::default().epochs, 5);
        assert_eq!(TrainConfig::stage1().epochs, 40);
    }

    #[test]
    fn rejects_indivisible_heads() {
        let c = ModelConfig {
            d_model: 10,
            heads: 4,
            ..ModelConfig::default()
        };
        assert!(c.validate().is_err());
        let c = ModelConfig {
            ffn_dim: 0,
            ..ModelConfig::default()
        };
        assert!(c.validate().is_err());
    }

    #[test]
    fn kv_round_trip() {
        let c = ModelConfig {
            d_model: 32,
            dropout: 0.25,
            seed: 99,
            ..ModelConfig::default()
        };
        let text = c.to_kv();
        let mut back = ModelConfig::default();
        let rest = back.apply_kv(parse_kv(&text).unwrap()).unwrap();
        assert!(rest.is_empty());
        assert_eq!(back, c);
        let mut t = TrainConfig::default();
        let rest = t.apply_kv(parse_kv("epochs = 200\n# c\nfoo=bar\n").unwrap()).unwrap();
        assert_eq!(t.epochs, 200);
        assert_eq!(rest, vec![("foo", "bar")]);
        assert!(parse_kv("nonsense").is_err());
        assert!(t.apply_kv([("epochs", "many")]).is_err());
    }
}
