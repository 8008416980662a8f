mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::{fixtures, mini_corpus};
use story2pseudo::corpus::ParallelPair;
use story2pseudo::pipeline::{
    evaluate_stage, run_pipeline, simplify_text, Converter, EvalEngine, PipelineConfig, CONFIG_ENV,
};
use story2pseudo::metric::BleuSettings;
use story2pseudo::ruleconv::{convert_program, RuleSet};
use story2pseudo::stage1::correct_syntax;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_story2pseudo"));
    c.env_remove(CONFIG_ENV);
    c
}

fn run(args: &[&str], cwd: &Path) -> Output {
    bin().args(args).current_dir(cwd).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn demo_config() -> String {
    fixtures().join("demo/demo.config").display().to_string()
}

#[test]
fn convert_demo_story_writes_golden_record() {
    let dir = tempfile::tempdir().unwrap();
    let story = fixtures().join("demo/story.txt");
    let json = dir.path().join("result.json");
    let o = run(
        &["--config", &demo_config(), "convert", "--story-file", story.to_str().unwrap(), "--json", json.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("FUNCTION max_difference"));
    let golden = std::fs::read_to_string(fixtures().join("demo/golden_result.json")).unwrap();
    assert_eq!(std::fs::read_to_string(&json).unwrap(), golden);
}

#[test]
fn config_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .env(CONFIG_ENV, demo_config())
        .args(["stage1", "--query", "maximum difference between prices", "--k", "2"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.starts_with("# 1 similarity="), "{text}");
    assert!(text.contains("id=653"));
    assert_eq!(text.matches("\n# ").count() + 1, 2);
}

#[test]
fn missing_ruleset_exits_with_stage2_code() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["--config", &demo_config(), "convert", "--story", "sum a list", "--rules", "nope.rules"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("stage2: ruleset not found"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.config");
    std::fs::write(&cfg, "colour=blue\n").unwrap();
    let o = run(&["--config", cfg.to_str().unwrap(), "stage1", "--query", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("unknown config key"));

    let o = run(&["stage1", "--query", "x"], dir.path());
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    let o = run(&["frobnicate"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn rulegen_matches_golden() {
    let dir = tempfile::tempdir().unwrap();
    let src = fixtures().join("snippets/47_grade_function.py");
    let out = dir.path().join("out.txt");
    let o = run(&["rulegen", "--in", src.to_str().unwrap(), "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        std::fs::read(&out).unwrap(),
        std::fs::read(fixtures().join("snippets/47_grade_function.txt")).unwrap()
    );
}

#[test]
fn eval_stage2_writes_text_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let (src, tgt) = (fixtures().join("parallel/smoke.code"), fixtures().join("parallel/smoke.pseudo"));
    let out = dir.path().join("eval.txt");
    let o = run(
        &["eval", "--stage", "2", "--pairs", src.to_str().unwrap(), tgt.to_str().unwrap(), "--out", out.to_str().unwrap()],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains(&format!("config {}", PipelineConfig::default().hash())), "{text}");
    let json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    let score = json["bleu"]["score"].as_f64().unwrap();
    assert!(score > 0.0 && score < 1.0);
    assert_eq!(json["config_hash"], PipelineConfig::default().hash());
}

#[test]
fn eval_stage1_uses_the_split() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s1.txt");
    let o = run(&["--config", &demo_config(), "eval", "--stage", "1", "--out", out.to_str().unwrap()], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(out.with_extension("json").exists());
}

#[test]
fn split_writes_parts_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixtures().join("tasks/mini_mbpp.jsonl");
    let o = run(&["split", "--corpus", corpus.to_str().unwrap(), "--out-dir", "parts"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(stdout(&o).starts_with("train 50 valid 2 test 2"), "{}", stdout(&o));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("parts/split.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 13);
    for f in ["train.jsonl", "valid.jsonl", "test.jsonl"] {
        assert!(manifest["files"][f].is_string());
    }
}

#[test]
fn train_then_translate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.config");
    std::fs::write(&cfg, "d_model=16\nheads=2\nencoder_layers=1\ndecoder_layers=1\nffn_dim=32\nepochs=2\n").unwrap();
    let (src, tgt) = (fixtures().join("parallel/smoke.code"), fixtures().join("parallel/smoke.pseudo"));
    let o = run(
        &["--config", cfg.to_str().unwrap(), "train", "--pairs", src.to_str().unwrap(), tgt.to_str().unwrap(), "--out", "m.bin"],
        dir.path(),
    );
    assert!(o.status.success(), "{}", stderr(&o));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.bin.report.json")).unwrap()).unwrap();
    assert_eq!(report["report"]["epoch_losses"].as_array().unwrap().len(), 2);

    let py = dir.path().join("prog.py");
    std::fs::write(&py, "x = 1\nif x:\n    print(x)\n").unwrap();
    let o = run(&["translate", "--model", "m.bin", "--in", "prog.py"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let txt = std::fs::read_to_string(dir.path().join("prog.txt")).unwrap();
    assert_eq!(txt.lines().count(), 3);
    assert!(txt.lines().nth(2).unwrap().starts_with("    "));
}

#[test]
fn story_equal_to_description_round_trips() {
    let corpus = mini_corpus();
    let cfg = PipelineConfig::load(&fixtures().join("demo/demo.config")).unwrap();
    let rules = RuleSet::builtin();
    for sample in corpus.iter().take(10) {
        let r = run_pipeline(&sample.description, &cfg).unwrap();
        assert_eq!(r.source_id, sample.id);
        assert_eq!(r.code, correct_syntax(&sample.code).0);
        let raw = convert_program(&r.code, &rules).unwrap().render_txt();
        assert_eq!(r.raw_pseudocode, raw);
        assert_eq!(r.pseudocode, simplify_text(&raw));
    }
}

#[test]
fn simplify_text_contract() {
    assert_eq!(simplify_text("DISPLAY x\nDISPLAY x"), "DISPLAY x");
    assert_eq!(simplify_text("  SET  x  TO  1 "), "  SET x TO 1");
    let once = simplify_text("A\n\n\nB  b\nB b\n    C\t\n");
    assert_eq!(simplify_text(&once), once);
}

#[test]
fn rule_engine_scores_one_against_itself() {
    let cfg = PipelineConfig::default();
    let converter = Converter::load(&cfg).unwrap();
    let pairs: Vec<ParallelPair> = common::smoke_pairs()
        .into_iter()
        .map(|p| {
            let target = converter.convert(&p.source).unwrap().render_txt().trim_end().to_string();
            ParallelPair { source: p.source, target }
        })
        .collect();
    let outcome = evaluate_stage(&pairs, &EvalEngine::Convert(&converter), BleuSettings::default()).unwrap();
    assert_eq!(outcome.corpus.score, 1.0);
    for r in &outcome.records {
        if story2pseudo::metric::tokenize(&r.reference).len() >= 4 {
            assert_eq!(r.sentence_bleu, 1.0, "{}", r.reference);
        }
    }

    let err = evaluate_stage(&[], &EvalEngine::Convert(&converter), BleuSettings::default()).unwrap_err();
    assert_eq!(err.to_string(), "metric: empty corpus");
}
