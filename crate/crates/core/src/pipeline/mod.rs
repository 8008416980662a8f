//! End-to-end orchestration: story → code (stage 1) → pseudocode
//! (stage 2) → simplified text, plus the evaluation harness.

pub mod cli;
pub mod config;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;
use thiserror::Error;

pub use config::{Engine, PipelineConfig, CONFIG_ENV};

use crate::corpus::{load_task_corpus, ParallelPair};
use crate::metric::{closest_reference_len, pair_stats, report_from_stats, sentence_bleu, tokenize, BleuReport, BleuSettings, PairStats};
use crate::pylex::{parse_program, LineKind};
use crate::ruleconv::{convert_program, load_ruleset, LineRole, PseudoDoc, PseudoLine, RuleSet};
use crate::stage1::{build_index, generate_code, SyntaxFix, TfIdfIndex, WeightConfig};
use crate::tinyformer::{load_model, TrainedModel};

pub type BoxError = Box<dyn std::error::Error + Send + Sync>;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(String),
    #[error("stage1: {0}")]
    Stage1(BoxError),
    #[error("stage2: {0}")]
    Stage2(BoxError),
    #[error("metric: {0}")]
    Metric(BoxError),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
}

impl PipelineError {
    /// 2 config, 3 stage 1, 4 stage 2, 5 metric. I/O on outputs counts
    /// as a config problem.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) | PipelineError::Io { .. } => 2,
            PipelineError::Stage1(_) => 3,
            PipelineError::Stage2(_) => 4,
            PipelineError::Metric(_) => 5,
        }
    }

    pub fn stage1(e: impl Into<BoxError>) -> Self {
        PipelineError::Stage1(e.into())
    }

    pub fn stage2(e: impl Into<BoxError>) -> Self {
        PipelineError::Stage2(e.into())
    }

    pub fn metric(e: impl Into<BoxError>) -> Self {
        PipelineError::Metric(e.into())
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Drops runs of identical consecutive lines down to one, strips trailing
/// whitespace and squeezes blanks between tokens to a single space.
/// Leading indentation and a final newline are kept as they were.
pub fn simplify_text(pseudo: &str) -> String {
    let mut out: Vec<String> = Vec::new();
    for line in pseudo.lines() {
        let body = line.trim_start_matches([' ', '\t']);
        let indent = &line[..line.len() - body.len()];
        let squeezed = body.split_whitespace().collect::<Vec<_>>().join(" ");
        let cleaned = if squeezed.is_empty() { String::new() } else { format!("{indent}{squeezed}") };
        if out.last() != Some(&cleaned) {
            out.push(cleaned);
        }
    }
    let mut text = out.join("\n");
    if pseudo.ends_with('\n') && !text.is_empty() {
        text.push('\n');
    }
    text
}

/// Translates every code line of `source` with the model, keeping its
/// depth. No END lines are produced.
pub fn translate_program(model: &TrainedModel, source: &str) -> Result<PseudoDoc, PipelineError> {
    let nodes = parse_program(source).map_err(PipelineError::stage2)?;
    let mut doc = PseudoDoc {
        source_lines: nodes.len(),
        ..PseudoDoc::default()
    };
    for node in nodes.iter().filter(|n| !matches!(n.kind, LineKind::Blank | LineKind::Comment)) {
        let text = model.translate(&node.code_text()).map_err(PipelineError::stage2)?;
        doc.lines.push(PseudoLine {
            depth: node.depth,
            text,
            role: LineRole::Plain,
        });
    }
    Ok(doc)
}

/// A loaded stage-2 converter.
#[derive(Debug, Clone)]
pub enum Converter {
    Rules(RuleSet),
    Model(Box<TrainedModel>),
}

impl Converter {
    pub fn engine(&self) -> Engine {
        match self {
            Converter::Rules(_) => Engine::Rules,
            Converter::Model(_) => Engine::Model,
        }
    }

    pub fn load(config: &PipelineConfig) -> Result<Converter, PipelineError> {
        match config.engine {
            Engine::Rules => {
                let path = config.rules.as_ref().map(|p| config.resolve(p));
                load_ruleset(path.as_deref()).map(Converter::Rules).map_err(PipelineError::stage2)
            }
            Engine::Model => {
                let path = config
                    .model
                    .as_ref()
                    .ok_or_else(|| PipelineError::Config("engine=model needs a model path".into()))?;
                load_model(&config.resolve(path))
                    .map(|m| Converter::Model(Box::new(m)))
                    .map_err(PipelineError::stage2)
            }
        }
    }

    pub fn convert(&self, code: &str) -> Result<PseudoDoc, PipelineError> {
        match self {
            Converter::Rules(rules) => convert_program(code, rules).map_err(PipelineError::stage2),
            Converter::Model(model) => translate_program(model, code),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub stage1_secs: f64,
    pub stage2_secs: f64,
    pub simplify_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineResult {
    pub story: String,
    /// Stage-1 output after syntax correction; exactly what stage 2 read.
    pub code: String,
    pub source_id: i64,
    pub similarity: f64,
    pub syntax_fixes: Vec<SyntaxFix>,
    pub engine: Engine,
    /// Stage-2 output before simplification.
    pub raw_pseudocode: String,
    pub pseudocode: String,
    pub fallback_lines: Vec<usize>,
    pub timings: StageTimings,
}

impl PipelineResult {
    /// JSON without timings, suitable for golden files.
    pub fn golden_json(&self) -> String {
        let mut v = serde_json::to_value(self).expect("result serializes");
        v.as_object_mut().expect("object").remove("timings");
        let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
        s.push('\n');
        s
    }
}

/// Index and converter loaded once for several stories.
pub struct Pipeline {
    pub index: TfIdfIndex,
    pub converter: Converter,
}

impl Pipeline {
    pub fn new(config: &PipelineConfig) -> Result<Pipeline, PipelineError> {
        config.validate()?;
        let corpus_path = config
            .corpus
            .as_ref()
            .ok_or_else(|| PipelineError::Config("no stage-1 corpus configured".into()))?;
        let corpus = load_task_corpus(&config.resolve(corpus_path)).map_err(PipelineError::stage1)?;
        let index = match &config.index_cache {
            Some(cache) => TfIdfIndex::load_or_build(&config.resolve(cache), &corpus, WeightConfig::default())
                .map(|(idx, _)| idx)
                .map_err(PipelineError::stage1)?,
            None => build_index(&corpus).map_err(PipelineError::stage1)?,
        };
        let converter = Converter::load(config)?;
        Ok(Pipeline { index, converter })
    }

    pub fn run(&self, story: &str) -> Result<PipelineResult, PipelineError> {
        let t0 = Instant::now();
        let top = generate_code(story, &self.index, 1)
            .map_err(PipelineError::stage1)?
            .into_iter()
            .next()
            .ok_or_else(|| PipelineError::stage1("no candidate retrieved"))?;
        let t1 = Instant::now();
        let doc = self.converter.convert(&top.code)?;
        let raw = doc.render_txt();
        let t2 = Instant::now();
        let pseudocode = simplify_text(&raw);
        let t3 = Instant::now();
        Ok(PipelineResult {
            story: story.to_string(),
            code: top.code,
            source_id: top.source_id,
            similarity: top.similarity,
            syntax_fixes: top.syntax_fixes,
            engine: self.converter.engine(),
            raw_pseudocode: raw,
            pseudocode,
            fallback_lines: doc.fallback_lines,
            timings: StageTimings {
                stage1_secs: (t1 - t0).as_secs_f64(),
                stage2_secs: (t2 - t1).as_secs_f64(),
                simplify_secs: (t3 - t2).as_secs_f64(),
            },
        })
    }
}

pub fn run_pipeline(story: &str, config: &PipelineConfig) -> Result<PipelineResult, PipelineError> {
    Pipeline::new(config)?.run(story)
}

/// What produces hypotheses during evaluation.
pub enum EvalEngine<'a> {
    /// Stage 1: description → top-1 retrieved code.
    Retrieval(&'a TfIdfIndex),
    /// Stage 2: code → pseudocode.
    Convert(&'a Converter),
}

impl EvalEngine<'_> {
    pub fn name(&self) -> &'static str {
        match self {
            EvalEngine::Retrieval(_) => crate::stage1::ENGINE,
            EvalEngine::Convert(c) => c.engine().name(),
        }
    }

    fn hypothesis(&self, source: &str) -> Result<String, PipelineError> {
        match self {
            EvalEngine::Retrieval(index) => Ok(generate_code(source, index, 1)
                .map_err(PipelineError::stage1)?
                .into_iter()
                .next()
                .map(|c| c.code)
                .unwrap_or_default()),
            EvalEngine::Convert(c) => Ok(c.convert(source)?.render_txt().trim_end().to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleRecord {
    pub index: usize,
    pub source: String,
    pub reference: String,
    pub hypothesis: String,
    pub sentence_bleu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub engine: String,
    pub settings: BleuSettings,
    pub corpus: BleuReport,
    pub mean_sentence_bleu: f64,
    pub records: Vec<SampleRecord>,
}

/// Generates a hypothesis for every pair's source and scores it against
/// the pair's target. An empty hypothesis counts as a zero-length
/// candidate in the corpus score and scores 0 on its own.
/// Sentence scores are always smoothed; `settings.smoothing` applies to
/// the corpus score only.
pub fn evaluate_stage(pairs: &[ParallelPair], engine: &EvalEngine<'_>, settings: BleuSettings) -> Result<EvalOutcome, PipelineError> {
    if pairs.is_empty() {
        return Err(PipelineError::metric("empty corpus"));
    }
    let mut total = PairStats {
        matches: vec![0; settings.max_n],
        totals: vec![0; settings.max_n],
        candidate_len: 0,
        reference_len: 0,
    };
    let mut records = Vec::with_capacity(pairs.len());
    for (index, pair) in pairs.iter().enumerate() {
        let hypothesis = engine.hypothesis(&pair.source)?;
        let cand = tokenize(&hypothesis);
        let refs = [tokenize(&pair.target)];
        let score = if cand.is_empty() {
            total.reference_len += closest_reference_len(0, &[refs[0].len()]).unwrap_or(0);
            0.0
        } else {
            let s = pair_stats(&cand, &refs, settings.max_n).map_err(PipelineError::metric)?;
            for n in 0..settings.max_n {
                total.matches[n] += s.matches[n];
                total.totals[n] += s.totals[n];
            }
            total.candidate_len += s.candidate_len;
            total.reference_len += s.reference_len;
            sentence_bleu(&cand, &refs, BleuSettings { smoothing: true, ..settings }).map_err(PipelineError::metric)?.score
        };
        records.push(SampleRecord {
            index,
            source: pair.source.clone(),
            reference: pair.target.clone(),
            hypothesis,
            sentence_bleu: score,
        });
    }
    let corpus = if total.candidate_len == 0 {
        report_from_stats(
            &PairStats {
                reference_len: 0,
                ..total
            },
            settings.smoothing,
        )
        .map(|r| BleuReport { score: 0.0, ..r })
    } else {
        report_from_stats(&total, settings.smoothing)
    }
    .map_err(PipelineError::metric)?;
    let mean_sentence_bleu = records.iter().map(|r| r.sentence_bleu).sum::<f64>() / records.len() as f64;
    Ok(EvalOutcome {
        engine: engine.name().to_string(),
        settings,
        corpus,
        mean_sentence_bleu,
        records,
    })
}

impl EvalOutcome {
    pub fn to_text(&self, config_hash: &str) -> String {
        let mut out = format!(
            "{:<12} {:>10}\n{:<12} {:>10}\n",
            "engine",
            self.engine,
            "samples",
            self.records.len()
        );
        out.push_str(&self.corpus.to_text());
        out.push_str(&format!("{:<12} {:>10.6}\n", "mean_sent", self.mean_sentence_bleu));
        out.push_str(&format!("config {config_hash}\n"));
        out
    }

    /// Flat record: p1..pN, bp, score, counts, plus per-sample rows.
    pub fn to_json(&self, config_hash: &str) -> String {
        let mut bleu = serde_json::Map::new();
        for (i, p) in self.corpus.precisions.iter().enumerate() {
            bleu.insert(format!("p{}", i + 1), json!(p.value()));
        }
        bleu.insert("bp".into(), json!(self.corpus.brevity_penalty));
        bleu.insert("score".into(), json!(self.corpus.score));
        bleu.insert(
            "counts".into(),
            json!(self.corpus.precisions.iter().map(|p| [p.numerator, p.denominator]).collect::<Vec<_>>()),
        );
        bleu.insert("candidate_len".into(), json!(self.corpus.candidate_len));
        bleu.insert("reference_len".into(), json!(self.corpus.reference_len));
        let v = json!({
            "engine": self.engine,
            "config_hash": config_hash,
            "settings": self.settings,
            "samples": self.records.len(),
            "bleu": bleu,
            "mean_sentence_bleu": self.mean_sentence_bleu,
            "records": self.records,
        });
        let mut s = serde_json::to_string_pretty(&v).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Writes `path` (text) and `path` with a `.json` extension (record).
/// Returns the JSON path.
pub fn write_eval_report(outcome: &EvalOutcome, config_hash: &str, path: &Path) -> Result<PathBuf, PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, outcome.to_text(config_hash)).map_err(|e| PipelineError::io(path, e))?;
    let json_path = path.with_extension("json");
    std::fs::write(&json_path, outcome.to_json(config_hash)).map_err(|e| PipelineError::io(&json_path, e))?;
    Ok(json_path)
}
