//! Command-line surface. The binary only calls [`main_with`].

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use sha2::{Digest, Sha256};

use super::{evaluate_stage, write_eval_report, Converter, Engine, EvalEngine, Pipeline, PipelineConfig, PipelineError};
use crate::corpus::{
    load_parallel_corpus, load_task_corpus, split_corpus, write_parallel_corpus, write_task_corpus, ParallelPair, TaskSample,
};
use crate::ruleconv::{convert_program, emit_txt, load_ruleset};
use crate::stage1::{build_index, generate_code, TfIdfIndex, WeightConfig};
use crate::tinyformer::{build_vocab, load_model, save_model, train, TrainedModel};

#[derive(Debug, Parser)]
#[command(name = "story2pseudo", version, about = "User story → Python → pseudocode")]
pub struct Cli {
    /// Flat key=value config file (falls back to $STORY2PSEUDO_CONFIG)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides the split and model seeds
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, short, global = true)]
    pub verbose: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Story text → pseudocode through both stages
    Convert(ConvertArgs),
    /// Retrieve code for a description
    Stage1(Stage1Args),
    /// Convert a .py file to a .txt with the rule engine
    Rulegen(RulegenArgs),
    /// Train a transformer on a parallel corpus
    Train(TrainArgs),
    /// Convert a .py file to a .txt with a trained model
    Translate(TranslateArgs),
    /// Score stage 1 or stage 2 with BLEU
    Eval(EvalArgs),
    /// Seeded train/valid/test split of a corpus
    Split(SplitArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Story text; use --story-file to read it from a file
    #[arg(long, conflicts_with = "story_file", required_unless_present = "story_file")]
    pub story: Option<String>,
    #[arg(long)]
    pub story_file: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, value_parser = parse_engine)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Also write the full result record (without timings) here
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Stage1Args {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub query: String,
    #[arg(long, default_value_t = 1)]
    pub k: usize,
}

#[derive(Debug, Args)]
pub struct RulegenArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    /// Defaults to the input path with a .txt extension
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    pub pairs: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TranslateArgs {
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// 1: description → code over the test split of a task corpus;
    /// 2: code → pseudocode over a parallel corpus
    #[arg(long, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub stage: u8,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    pub pairs: Vec<PathBuf>,
    #[arg(long, value_parser = parse_engine)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub rules: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// Text report path; the JSON record goes next to it
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    /// Task corpus (.jsonl)
    #[arg(long, conflicts_with = "pairs")]
    pub corpus: Option<PathBuf>,
    /// Parallel corpus
    #[arg(long, num_args = 2, value_names = ["SRC", "TGT"])]
    pub pairs: Vec<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn parse_engine(s: &str) -> Result<Engine, String> {
    s.parse().map_err(|e: PipelineError| e.to_string())
}

fn config_err(msg: impl Into<String>) -> PipelineError {
    PipelineError::Config(msg.into())
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn out(w: &mut dyn Write, text: &str) -> Result<(), PipelineError> {
    w.write_all(text.as_bytes()).map_err(|e| PipelineError::io(Path::new("<stdout>"), e))
}

fn sha256_file(path: &Path) -> Result<String, PipelineError> {
    let bytes = std::fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Loads config and applies global overrides.
pub fn load_config(cli: &Cli) -> Result<PipelineConfig, PipelineError> {
    let mut cfg = PipelineConfig::discover(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.set_seed(seed);
    }
    Ok(cfg)
}

fn task_corpus(cfg: &PipelineConfig, flag: &Option<PathBuf>) -> Result<Vec<TaskSample>, PipelineError> {
    let path = match (flag, &cfg.corpus) {
        (Some(p), _) => p.clone(),
        (None, Some(p)) => cfg.resolve(p),
        (None, None) => return Err(config_err("no task corpus given (--corpus or `corpus=` in config)")),
    };
    load_task_corpus(&path).map_err(PipelineError::stage1)
}

fn parallel_corpus(pairs: &[PathBuf]) -> Result<Vec<ParallelPair>, PipelineError> {
    match pairs {
        [src, tgt] => load_parallel_corpus(src, tgt).map_err(PipelineError::stage2),
        _ => Err(config_err("--pairs needs a source and a target file")),
    }
}

fn index_for(cfg: &PipelineConfig, corpus: &[TaskSample], verbose: bool) -> Result<TfIdfIndex, PipelineError> {
    match &cfg.index_cache {
        Some(cache) => {
            let (idx, hit) =
                TfIdfIndex::load_or_build(&cfg.resolve(cache), corpus, WeightConfig::default()).map_err(PipelineError::stage1)?;
            if verbose {
                eprintln!("index cache {}", if hit { "hit" } else { "rebuilt" });
            }
            Ok(idx)
        }
        None => build_index(corpus).map_err(PipelineError::stage1),
    }
}

/// Engine-related flags override the config file; explicit paths are
/// taken relative to the working directory.
fn with_engine_flags(mut cfg: PipelineConfig, engine: Option<Engine>, rules: &Option<PathBuf>, model: &Option<PathBuf>) -> PipelineConfig {
    let cwd = std::env::current_dir().unwrap_or_default();
    if let Some(r) = rules {
        cfg.rules = Some(cwd.join(r));
    }
    if let Some(m) = model {
        cfg.model = Some(cwd.join(m));
        if engine.is_none() {
            cfg.engine = Engine::Model;
        }
    }
    if let Some(e) = engine {
        cfg.engine = e;
    }
    cfg
}

pub fn execute(cli: &Cli, w: &mut dyn Write) -> Result<(), PipelineError> {
    let cfg = load_config(cli)?;
    match &cli.command {
        Command::Convert(a) => {
            let mut cfg = with_engine_flags(cfg, a.engine, &a.rules, &a.model);
            if let Some(c) = &a.corpus {
                cfg.corpus = Some(std::env::current_dir().unwrap_or_default().join(c));
            }
            let story = match (&a.story, &a.story_file) {
                (Some(s), _) => s.clone(),
                (None, Some(p)) => std::fs::read_to_string(p).map_err(|e| PipelineError::io(p, e))?,
                (None, None) => return Err(config_err("no story given")),
            };
            let result = Pipeline::new(&cfg)?.run(story.trim_end())?;
            if cli.verbose {
                eprintln!(
                    "retrieved #{} (similarity {:.4}), {} syntax fix(es), engine {}",
                    result.source_id,
                    result.similarity,
                    result.syntax_fixes.len(),
                    result.engine
                );
                eprintln!("--- code ---\n{}", result.code);
            }
            if let Some(p) = &a.json {
                write_file(p, &result.golden_json())?;
            }
            out(w, &result.pseudocode)
        }
        Command::Stage1(a) => {
            let corpus = task_corpus(&cfg, &a.corpus)?;
            let index = index_for(&cfg, &corpus, cli.verbose)?;
            let candidates = generate_code(&a.query, &index, a.k).map_err(PipelineError::stage1)?;
            for (rank, c) in candidates.iter().enumerate() {
                let fixes: Vec<String> = c.syntax_fixes.iter().map(ToString::to_string).collect();
                out(
                    w,
                    &format!(
                        "# {} similarity={:.6} id={} fixes=[{}]\n{}\n",
                        rank + 1,
                        c.similarity,
                        c.source_id,
                        fixes.join(","),
                        c.code
                    ),
                )?;
            }
            Ok(())
        }
        Command::Rulegen(a) => {
            let rules_path = a.rules.clone().or_else(|| cfg.rules.as_ref().map(|p| cfg.resolve(p)));
            let rules = load_ruleset(rules_path.as_deref()).map_err(PipelineError::stage2)?;
            let src = std::fs::read_to_string(&a.input).map_err(|e| PipelineError::io(&a.input, e))?;
            let doc = convert_program(&src, &rules).map_err(PipelineError::stage2)?;
            let dest = a.out.clone().unwrap_or_else(|| a.input.with_extension("txt"));
            emit_txt(&doc, &dest).map_err(PipelineError::stage2)?;
            if cli.verbose {
                eprintln!("{} line(s) fell back to EXECUTE: {:?}", doc.fallback_lines.len(), doc.fallback_lines);
            }
            out(w, &format!("{}\n", dest.display()))
        }
        Command::Train(a) => {
            cfg.validate()?;
            let pairs = parallel_corpus(&a.pairs)?;
            let vocab = build_vocab(&pairs, cfg.train_config.min_freq).map_err(PipelineError::stage2)?;
            let (params, report) = train(&pairs, &vocab, &cfg.model_config, &cfg.train_config).map_err(PipelineError::stage2)?;
            let model = TrainedModel {
                config: cfg.model_config.clone(),
                vocab,
                params,
            };
            if let Some(dir) = a.out.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
            }
            save_model(&a.out, &model).map_err(PipelineError::stage2)?;
            let report_path = report_path_for(&a.out);
            let record = json!({
                "config_hash": cfg.hash(),
                "model_sha256": sha256_file(&a.out)?,
                "report": report,
            });
            write_file(&report_path, &format!("{}\n", serde_json::to_string_pretty(&record).expect("serializes")))?;
            if cli.verbose {
                for (i, l) in report.epoch_losses.iter().enumerate() {
                    eprintln!("epoch {:>4} loss {l:.6}", i + 1);
                }
            }
            out(
                w,
                &format!(
                    "epochs {}  final loss {:.6}  train BLEU {:.4}  {:.1}s\n{}\n{}\n",
                    report.epochs,
                    report.final_loss(),
                    report.final_train_bleu,
                    report.wall_time_secs,
                    a.out.display(),
                    report_path.display()
                ),
            )
        }
        Command::Translate(a) => {
            let path = match (&a.model, &cfg.model) {
                (Some(p), _) => p.clone(),
                (None, Some(p)) => cfg.resolve(p),
                (None, None) => return Err(config_err("no model given (--model or `model=` in config)")),
            };
            let model = load_model(&path).map_err(PipelineError::stage2)?;
            let src = std::fs::read_to_string(&a.input).map_err(|e| PipelineError::io(&a.input, e))?;
            let doc = super::translate_program(&model, &src)?;
            let dest = a.out.clone().unwrap_or_else(|| a.input.with_extension("txt"));
            emit_txt(&doc, &dest).map_err(PipelineError::stage2)?;
            out(w, &format!("{}\n", dest.display()))
        }
        Command::Eval(a) => {
            let cfg = with_engine_flags(cfg, a.engine, &a.rules, &a.model);
            cfg.validate()?;
            let outcome = if a.stage == 1 {
                let corpus = task_corpus(&cfg, &a.corpus)?;
                let split = split_corpus(&corpus, cfg.split_ratios, cfg.split_seed).map_err(|e| config_err(e.to_string()))?;
                if split.test.is_empty() {
                    return Err(PipelineError::metric("empty corpus"));
                }
                let index = index_for(&cfg, &split.train, cli.verbose)?;
                let pairs: Vec<ParallelPair> = split
                    .test
                    .iter()
                    .map(|s| ParallelPair {
                        source: s.description.clone(),
                        target: s.code.clone(),
                    })
                    .collect();
                evaluate_stage(&pairs, &EvalEngine::Retrieval(&index), cfg.bleu)?
            } else {
                let pairs = parallel_corpus(&a.pairs)?;
                let converter = Converter::load(&cfg)?;
                evaluate_stage(&pairs, &EvalEngine::Convert(&converter), cfg.bleu)?
            };
            let dest = a
                .out
                .clone()
                .unwrap_or_else(|| cfg.resolve(&cfg.out_dir).join(format!("eval_stage{}.txt", a.stage)));
            let hash = cfg.hash();
            let json_path = write_eval_report(&outcome, &hash, &dest)?;
            out(w, &outcome.to_text(&hash))?;
            if cli.verbose {
                eprintln!("wrote {} and {}", dest.display(), json_path.display());
            }
            Ok(())
        }
        Command::Split(a) => {
            let dir = a.out_dir.clone().unwrap_or_else(|| cfg.resolve(&cfg.out_dir).join("split"));
            std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
            let mut files = Vec::new();
            let sizes;
            if !a.pairs.is_empty() {
                let pairs = parallel_corpus(&a.pairs)?;
                let split = split_corpus(&pairs, cfg.split_ratios, cfg.split_seed).map_err(|e| config_err(e.to_string()))?;
                sizes = split.sizes();
                let ext = |p: &Path, d: &str| p.extension().and_then(|e| e.to_str()).unwrap_or(d).to_string();
                let (se, te) = (ext(&a.pairs[0], "src"), ext(&a.pairs[1], "tgt"));
                for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
                    let (s, t) = (dir.join(format!("{name}.{se}")), dir.join(format!("{name}.{te}")));
                    write_parallel_corpus(part, &s, &t).map_err(|e| config_err(e.to_string()))?;
                    files.push(s);
                    files.push(t);
                }
            } else {
                let corpus = task_corpus(&cfg, &a.corpus)?;
                let split = split_corpus(&corpus, cfg.split_ratios, cfg.split_seed).map_err(|e| config_err(e.to_string()))?;
                sizes = split.sizes();
                for (name, part) in [("train", &split.train), ("valid", &split.valid), ("test", &split.test)] {
                    let p = dir.join(format!("{name}.jsonl"));
                    write_task_corpus(part, &p).map_err(|e| config_err(e.to_string()))?;
                    files.push(p);
                }
            }
            let mut digests = serde_json::Map::new();
            for f in &files {
                let name = f.file_name().and_then(|n| n.to_str()).unwrap_or_default().to_string();
                digests.insert(name, json!(sha256_file(f)?));
            }
            let record = json!({
                "config_hash": cfg.hash(),
                "seed": cfg.split_seed,
                "ratios": cfg.split_ratios,
                "rng": crate::corpus::SPLIT_RNG,
                "sizes": {"train": sizes.0, "valid": sizes.1, "test": sizes.2},
                "files": digests,
            });
            let report = dir.join("split.json");
            write_file(&report, &format!("{}\n", serde_json::to_string_pretty(&record).expect("serializes")))?;
            out(
                w,
                &format!("train {} valid {} test {}\n{}\n", sizes.0, sizes.1, sizes.2, report.display()),
            )
        }
    }
}

/// `model.bin` → `model.bin.report.json`
pub fn report_path_for(model: &Path) -> PathBuf {
    let mut s = model.as_os_str().to_os_string();
    s.push(".report.json");
    PathBuf::from(s)
}

/// Parses arguments, runs, prints errors to stderr and returns the exit
/// code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(&cli, &mut lock) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
