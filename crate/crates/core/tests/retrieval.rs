mod common;

use common::{gen_broken_snippet, mini_corpus, paraphrases, self_retrieval_misses, synthetic_tasks};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use story2pseudo::stage1::{build_index, correct_syntax, generate_code, SyntaxFix};

#[test]
fn mini_corpus_retrieves_itself() {
    let corpus = mini_corpus();
    assert_eq!(corpus.len(), 54);
    assert_eq!(self_retrieval_misses(&corpus), Vec::<i64>::new());
}

#[test]
fn synthetic_corpus_retrieves_itself() {
    let corpus = synthetic_tasks(&mut ChaCha8Rng::seed_from_u64(974), 974);
    assert_eq!(self_retrieval_misses(&corpus), Vec::<i64>::new());
}

#[test]
fn paraphrase_floor() {
    let index = build_index(&mini_corpus()).unwrap();
    let rows = paraphrases();
    assert_eq!(rows.len(), 10);
    let hits = rows
        .iter()
        .filter(|(id, q)| generate_code(q, &index, 1).unwrap()[0].source_id == *id)
        .count();
    // measured once when the fixture was written
    assert!(hits >= 7, "{hits}/10");
}

#[test]
fn index_rebuild_is_identical() {
    let corpus = synthetic_tasks(&mut ChaCha8Rng::seed_from_u64(5), 300);
    let a = build_index(&corpus).unwrap();
    let b = build_index(&corpus).unwrap();
    assert_eq!(a.vocab_size(), b.vocab_size());
    assert_eq!(a.search("remove the odd digits", 5).unwrap(), b.search("remove the odd digits", 5).unwrap());
}

#[test]
fn correct_syntax_is_idempotent_on_fuzz() {
    let mut rng = ChaCha8Rng::seed_from_u64(500);
    for _ in 0..500 {
        let src = gen_broken_snippet(&mut rng);
        let (once, _) = correct_syntax(&src);
        let (twice, fixes) = correct_syntax(&once);
        assert_eq!(twice, once, "{src:?}");
        assert!(fixes.iter().all(|f| !f.changed_code()), "{src:?}: {fixes:?}");
    }
}

#[test]
fn repairs_the_damaged_fixture_tasks() {
    let corpus = mini_corpus();
    let tab = corpus.iter().find(|s| s.id == 653).unwrap();
    let (code, fixes) = correct_syntax(&tab.code);
    assert!(fixes.iter().any(|f| matches!(f, SyntaxFix::Colon { .. })));
    assert!(fixes.iter().any(|f| matches!(f, SyntaxFix::Indent { .. })));
    assert!(!code.contains('\t'));
    let two = corpus.iter().find(|s| s.id == 654).unwrap();
    let (code, _) = correct_syntax(&two.code);
    assert!(story2pseudo::pylex::parse_program(&code).is_ok());
    assert!(code.lines().all(|l| l == l.trim_end()));
}
