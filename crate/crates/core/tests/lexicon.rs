use std::fs;
use std::path::{Path, PathBuf};

use priming::lexicon::{Category, LexiconPaths, VerbKind};
use priming::{Lexicon, LexiconError};
use tempfile::TempDir;

fn data(dir: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data").join(dir)
}

/// Copy of the fixture lexicon with one file rewritten.
fn tampered(file: &str, edit: impl Fn(String) -> String) -> TempDir {
    let dir = TempDir::new().unwrap();
    for p in LexiconPaths::in_dir(data("fixture")).all() {
        fs::copy(p, dir.path().join(p.file_name().unwrap())).unwrap();
    }
    let target = dir.path().join(file);
    fs::write(&target, edit(fs::read_to_string(&target).unwrap())).unwrap();
    dir
}

fn load(dir: &Path) -> Result<Lexicon, LexiconError> {
    Lexicon::load_dir(dir, 5000)
}

#[test]
fn fixture_meets_minimums() {
    let lex = load(&data("fixture")).unwrap();
    assert!(lex.sampleable_verbs(VerbKind::Transitive).count() >= 2);
    assert!(lex.sampleable_verbs(VerbKind::Ditransitive).count() >= 2);
    assert!(lex.role_nouns().count() >= 8);
    assert!(lex.role_nouns().any(|n| n.categories.contains(&Category::Person)));
    assert!(lex.role_nouns().any(|n| n.categories.contains(&Category::ObjectNonedible)));
}

#[test]
fn full_lexicon_sizes() {
    let lex = load(&data("lexicon")).unwrap();
    assert_eq!(lex.verbs().filter(|v| v.kind == VerbKind::Transitive).count(), 48);
    assert_eq!(lex.verbs().filter(|v| v.kind == VerbKind::Ditransitive).count(), 16);
    assert_eq!(lex.role_nouns().count(), 119);
    assert_eq!(lex.adjectives().count(), 164);
    assert_eq!(lex.pp_with_nouns().count(), 27);
    assert_eq!(lex.countries().count(), 23);
}

#[test]
fn associations_are_symmetric_lookups() {
    let lex = load(&data("fixture")).unwrap();
    assert!(lex.is_associated("doctor", "nurse"));
    assert!(lex.is_associated("pie", "cake"));
    assert!(!lex.is_associated("doctor", "doctor"));
    assert!(!lex.is_associated("tea", "water"), "zero strength is not an association");
    assert!(!lex.is_associated("unheard", "doctor"));
}

#[test]
fn cosine_on_fixture_vectors() {
    let lex = load(&data("fixture")).unwrap();
    assert!((lex.cosine_similarity("doctor", "doctor").unwrap() - 1.0).abs() < 1e-12);
    let ab = lex.cosine_similarity("doctor", "nurse").unwrap();
    assert_eq!(ab, lex.cosine_similarity("nurse", "doctor").unwrap());
    assert!(ab > 0.99);
    assert!(matches!(
        lex.cosine_similarity("doctor", "zebra"),
        Err(LexiconError::UnknownEmbedding(w)) if w == "zebra"
    ));
}

#[test]
fn missing_file_is_reported() {
    let dir = tampered("nouns.tsv", |s| s);
    fs::remove_file(dir.path().join("verbs.tsv")).unwrap();
    assert!(matches!(load(dir.path()), Err(LexiconError::MissingFile { path }) if path.ends_with("verbs.tsv")));
}

#[test]
fn malformed_row_has_line_number() {
    let dir = tampered("nouns.tsv", |s| s.replace("nurse\tnoun\tcountable=yes", "nurse\tnoun\tcountable=perhaps"));
    match load(dir.path()) {
        Err(LexiconError::Malformed { file, line, .. }) => {
            assert!(file.ends_with("nouns.tsv"));
            assert_eq!(line, 3);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ditransitive_without_preposition_names_lemma() {
    let dir = tampered("verbs.tsv", |s| s.replace("\tprep=for\tagent=person\tpatient=object_edible", "\tagent=person\tpatient=object_edible"));
    match load(dir.path()) {
        Err(e @ LexiconError::MissingAnnotation { .. }) => assert!(e.to_string().contains("bake"), "{e}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn noun_without_embedding_is_rejected() {
    let dir = tampered("embeddings.txt", |s| {
        let mut lines: Vec<&str> = s.lines().filter(|l| !l.starts_with("pilot ")).collect();
        let header = format!("{} 4", lines.len() - 1);
        lines[0] = &header;
        lines.join("\n") + "\n"
    });
    assert!(matches!(load(dir.path()), Err(LexiconError::MissingEmbedding { lemma, .. }) if lemma == "pilot"));
}

#[test]
fn cutoff_restricts_sampling_not_lookup() {
    let rank = |lex: &Lexicon, w: &str| lex.frequency_rank(w).unwrap();
    let all = load(&data("fixture")).unwrap();
    let cutoff = rank(&all, "doctor");
    let lex = Lexicon::load_dir(data("fixture"), cutoff).unwrap();
    assert!(lex.is_sampleable("doctor"));
    let above: Vec<_> = lex
        .nouns()
        .filter(|n| n.frequency_rank.is_some_and(|r| r > cutoff))
        .map(|n| n.lemma.clone())
        .collect();
    assert!(!above.is_empty());
    for w in &above {
        assert!(!lex.is_sampleable(w));
        assert!(lex.role_nouns().all(|n| &n.lemma != w));
    }
    assert!(lex.is_associated("nurse", "doctor"));
}

#[test]
fn loading_is_deterministic() {
    let a = load(&data("lexicon")).unwrap();
    let b = load(&data("lexicon")).unwrap();
    let names = |l: &Lexicon| l.nouns().map(|n| n.lemma.clone()).collect::<Vec<_>>();
    assert_eq!(names(&a), names(&b));
}
