mod common;

use common::{gen_program, snippets};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use story2pseudo::ruleconv::{convert_program, emit_txt, load_ruleset, LineRole, RuleSet};

#[test]
fn goldens_match_byte_for_byte() {
    let rules = RuleSet::builtin();
    let all = snippets();
    assert!(all.len() >= 40, "{}", all.len());
    for (name, src, golden) in all {
        let doc = convert_program(&src, &rules).unwrap();
        assert_eq!(doc.render_txt(), golden, "{name}");
        assert!(doc.is_balanced(), "{name}");
    }
}

#[test]
fn emitted_file_equals_render() {
    let dir = tempfile::tempdir().unwrap();
    let rules = load_ruleset(None).unwrap();
    for (name, src, golden) in snippets().into_iter().take(5) {
        let path = dir.path().join(format!("{name}.txt"));
        emit_txt(&convert_program(&src, &rules).unwrap(), &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), golden);
    }
}

#[test]
fn fuzzed_programs_stay_balanced() {
    let rules = RuleSet::builtin();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..1000 {
        let src = gen_program(&mut rng, 25);
        let doc = convert_program(&src, &rules).unwrap();
        assert!(doc.is_balanced(), "{src}");
        let mut open = 0i64;
        for l in &doc.lines {
            match l.role {
                LineRole::Open => open += 1,
                LineRole::End => open -= 1,
                _ => {}
            }
            assert!(open >= 0);
        }
        assert_eq!(open, 0);
        assert_eq!(convert_program(&src, &rules).unwrap(), doc);
    }
}

#[test]
fn missing_ruleset_is_reported() {
    let err = load_ruleset(Some(std::path::Path::new("/nonexistent/x.rules"))).unwrap_err();
    assert!(err.to_string().starts_with("ruleset not found"), "{err}");
}
