use std::fs;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use priming::generator::{alternate, realize, Condition, ConditionSpec, Construction, PrimePair, PrimeTargetItem};
use priming::Lexicon;
use priming_cli::config::{Config, LexiconConfig};
use priming_cli::score::ScoreRow;
use serde_json::Value;

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..")
}

fn priming(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_priming"))
        .args(args)
        .current_dir(root())
        .env_remove("PRIMING_SCORER_URL")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// The JSON error record is the last stderr line.
fn error_record(o: &Output) -> Value {
    let text = stderr(o);
    let last = text.lines().last().expect("stderr is empty");
    serde_json::from_str(last).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generate_small(out: &Path, structure: &str, targets: usize, primes: usize, seed: u64) -> PathBuf {
    let o = priming(&[
        "generate",
        "--condition",
        "core",
        "--structure",
        structure,
        "--targets",
        &targets.to_string(),
        "--primes-per-target",
        &primes.to_string(),
        "--seed",
        &seed.to_string(),
        "--out",
        s(out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out.join("corpus/core").join(format!("{structure}.jsonl"))
}

fn items(path: &Path) -> Vec<PrimeTargetItem> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn generate_example_gives_three_items_six_pairs() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate_small(&dir.path().join("a"), "DO", 3, 2, 7);
    let got = items(&a);
    assert_eq!(got.len(), 3);
    assert_eq!(got.iter().map(|i| i.prime_pairs.len()).sum::<usize>(), 6);
    assert!(got.iter().all(|i| i.structure == Construction::Do));

    let b = generate_small(&dir.path().join("b"), "DO", 3, 2, 7);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());

    let manifest: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    let arts = manifest["artifacts"].as_array().unwrap();
    assert_eq!(arts.len(), 1);
    assert_eq!(arts[0]["path"], "corpus/core/DO.jsonl");
    assert_eq!(manifest["conditions"], serde_json::json!(["core"]));
    assert_eq!(manifest["seed"], 7);
}

#[test]
fn refuses_to_overwrite_without_force() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o");
    generate_small(&out, "ACT", 2, 1, 1);
    let args = ["generate", "--condition", "core", "--structure", "ACT", "--targets", "2", "--out", s(&out)];
    let o = priming(&args);
    assert_eq!(code(&o), 1);
    let rec = error_record(&o);
    assert_eq!(rec["error"]["kind"], "usage");
    assert!(rec["error"]["message"].as_str().unwrap().contains("--force"));
    let mut forced = args.to_vec();
    forced.push("--force");
    assert_eq!(code(&priming(&forced)), 0);
}

#[test]
fn locked_output_directory_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join(".priming.lock"), "1\n").unwrap();
    let o = priming(&["generate", "--condition", "core", "--structure", "DO", "--targets", "2", "--out", s(dir.path())]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("locked"), "{}", stderr(&o));
    assert!(!dir.path().join("corpus").exists());
}

#[test]
fn usage_errors_are_records_too() {
    let o = priming(&["frobnicate"]);
    assert_eq!(code(&o), 1);
    assert_eq!(error_record(&o)["error"]["exit_code"], 1);
    let o = priming(&["generate", "--condition", "no_such_condition", "--out", "x"]);
    assert_eq!(code(&o), 1);
    assert_eq!(code(&priming(&["--help"])), 0);
}

#[test]
fn validate_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(&dir.path().join("g"), "ACT", 40, 2, 21);
    let o = priming(&["validate", s(&corpus)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["ok"], true);
    assert_eq!(report["items"], 40);

    // Put the target's verb into one prime.
    let lex = Lexicon::load_dir(root().join("data/lexicon"), priming::lexicon::DEFAULT_FREQUENCY_CUTOFF).unwrap();
    let mut all = items(&corpus);
    let (k, mutated) = all
        .iter()
        .enumerate()
        .find_map(|(k, it)| {
            let mut spec = it.prime_pairs[0].congruent[0].spec.clone();
            spec.verb = it.target.spec.verb.clone();
            let prime = realize(&spec, &lex).ok()?;
            let other = realize(&alternate(&spec).ok()?, &lex).ok()?;
            let mut out = it.clone();
            out.prime_pairs[0] = PrimePair {
                congruent: vec![prime],
                incongruent: vec![other],
            };
            Some((k, out))
        })
        .expect("some prime takes the target verb");
    all[k] = mutated;
    let bad = dir.path().join("bad.jsonl");
    let text: String = all.iter().map(|i| serde_json::to_string(i).unwrap() + "\n").collect();
    fs::write(&bad, text).unwrap();
    let o = priming(&["validate", s(&bad)]);
    assert_eq!(code(&o), 2);
    let report: Value = serde_json::from_slice(&o.stdout).unwrap();
    let v = report["violations"].as_array().unwrap();
    assert_eq!(v.len(), 1, "{v:?}");
    assert_eq!(v[0]["words"], serde_json::json!([all[k].target.spec.verb]));
    assert_eq!(error_record(&o)["error"]["kind"], "validation");

    let empty = dir.path().join("empty.jsonl");
    fs::write(&empty, "").unwrap();
    let o = priming(&["validate", s(&empty)]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no items"), "{}", stderr(&o));

    let junk = dir.path().join("junk.jsonl");
    fs::write(&junk, "{not json}\n").unwrap();
    let o = priming(&["validate", s(&junk)]);
    assert_ne!(code(&o), 0);
    assert!(stderr(&o).contains("junk.jsonl:1"), "{}", stderr(&o));
}

fn rows(path: &Path) -> Vec<ScoreRow> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn uniform_scorer_rows_are_equal() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(&dir.path().join("g"), "DO", 3, 2, 7);
    let out = dir.path().join("scores.jsonl");
    let o = priming(&["score", s(&corpus), "--scorer", "uniform", "--out", s(&out)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let got = rows(&out);
    assert_eq!(got.len(), 6);
    assert!(got.iter().all(|r| r.lp_congruent == r.lp_incongruent && r.lp_congruent < 0.0));
    assert!(!dir.path().join("scores.jsonl.ckpt").exists());
}

#[test]
fn interrupted_scoring_resumes_to_identical_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(&dir.path().join("g"), "PO", 40, 3, 5);
    let ngram = ["--scorer", "ngram", "--train-documents", "300", "--train-seed", "4"];
    let score = |out: &Path, extra: &[&str]| {
        let mut args = vec!["score", s(&corpus), "--out", s(out)];
        args.extend_from_slice(&ngram);
        args.extend_from_slice(extra);
        priming(&args)
    };

    let full = dir.path().join("full.jsonl");
    assert_eq!(code(&score(&full, &[])), 0);
    assert_eq!(rows(&full).len(), 120);

    let part = dir.path().join("part.jsonl");
    let o = score(&part, &["--stop-after", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("part.jsonl.ckpt").exists());
    assert_eq!(rows(&part).len(), 3);
    // A block torn off mid-write.
    let mut bytes = fs::read(&part).unwrap();
    bytes.extend_from_slice(b"{\"condition\":{\"na");
    fs::write(&part, bytes).unwrap();

    let o = score(&part, &["--stop-after", "33"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(rows(&part).len(), 3 * 34);

    // A different scorer may not continue this checkpoint.
    let o = priming(&["score", s(&corpus), "--out", s(&part), "--scorer", "uniform"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("different scoring run"));

    assert_eq!(code(&score(&part, &[])), 0);
    assert_eq!(fs::read(&part).unwrap(), fs::read(&full).unwrap());
    assert!(!dir.path().join("part.jsonl.ckpt").exists());
}

#[test]
fn remote_health_failure_names_endpoint() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = generate_small(&dir.path().join("g"), "DO", 2, 1, 1);
    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let url = format!("http://127.0.0.1:{port}");
    let out = dir.path().join("s.jsonl");
    let o = priming(&["score", s(&corpus), "--out", s(&out), "--scorer", "remote", "--scorer-url", &url, "--retries", "0"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains(&format!("127.0.0.1:{port}/v1/health")), "{}", stderr(&o));
    assert_eq!(error_record(&o)["error"]["kind"], "scorer");
    assert!(!out.exists());

    let o = priming(&["score", s(&corpus), "--out", s(&out), "--scorer", "remote"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("PRIMING_SCORER_URL"));
}

fn spec(seed: u64) -> ConditionSpec {
    ConditionSpec::new(Condition::Core, seed).with_size(20, 2)
}

/// Two prime pairs per target; `diff(structure, target)` is the congruent
/// advantage of both pairs.
fn synthetic_rows(n: usize, diff: impl Fn(Construction, usize) -> f64) -> Vec<ScoreRow> {
    let mut out = Vec::new();
    for s in [Construction::Do, Construction::Po] {
        for t in 0..n {
            for j in 0..2 {
                let base = -20.0 - (t % 5) as f64 - j as f64;
                out.push(ScoreRow {
                    condition: spec(1),
                    structure: s,
                    target_id: format!("core:{s}:1:{t:04}"),
                    prime_pair_index: j,
                    lp_congruent: base + diff(s, t),
                    lp_incongruent: base,
                    scorer: "test".into(),
                });
            }
        }
    }
    out
}

fn write_rows(path: &Path, rows: &[ScoreRow]) {
    let text: String = rows.iter().map(|r| serde_json::to_string(r).unwrap() + "\n").collect();
    fs::write(path, text).unwrap();
}

fn report(files: &[&Path], out: &Path) -> (Output, Value) {
    let mut args = vec!["report"];
    args.extend(files.iter().map(|p| s(p)));
    args.extend(["--out", s(out)]);
    let o = priming(&args);
    let json = fs::read_to_string(out.join("report.json"))
        .ok()
        .map_or(Value::Null, |t| serde_json::from_str(&t).unwrap());
    (o, json)
}

#[test]
fn zero_differences_report_null() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("zero.jsonl");
    write_rows(&f, &synthetic_rows(10, |_, _| 0.0));
    let (o, json) = report(&[&f], &dir.path().join("r"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let entries = json["entries"].as_array().unwrap();
    assert_eq!(entries.len(), 2);
    for e in entries {
        assert_eq!(e["report"]["mean_pe"], 0.0);
        assert_eq!(e["report"]["behavior"], "null");
        assert_eq!(e["targets"].as_array().unwrap().len(), 10);
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("16589") && stdout.contains("15000"), "{stdout}");
    let csv = fs::read_to_string(dir.path().join("r/report.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(dir.path().join("r/plots/core.csv").exists());
}

#[test]
fn split_score_files_pool_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let all = synthetic_rows(12, |s, t| if s == Construction::Do { 0.3 * (t % 4) as f64 } else { -0.1 * t as f64 });
    let (a, b): (Vec<_>, Vec<_>) = all.iter().cloned().partition(|r| r.target_id.ends_with(['0', '2', '4']));
    let (fa, fb, fall) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"), dir.path().join("all.jsonl"));
    write_rows(&fa, &a);
    write_rows(&fb, &b);
    write_rows(&fall, &all);
    let (o1, split) = report(&[&fa, &fb], &dir.path().join("r1"));
    let (o2, whole) = report(&[&fall], &dir.path().join("r2"));
    assert_eq!((code(&o1), code(&o2)), (0, 0));
    assert_eq!(split, whole);
    assert_eq!(
        fs::read(dir.path().join("r1/report.csv")).unwrap(),
        fs::read(dir.path().join("r2/report.csv")).unwrap()
    );
}

#[test]
fn opposite_signs_report_biased() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("biased.jsonl");
    write_rows(&f, &synthetic_rows(15, |s, t| {
        let spread = 0.1 * (t % 3) as f64;
        if s == Construction::Do { 1.0 + spread } else { -1.0 - spread }
    }));
    let (o, json) = report(&[&f], &dir.path().join("r"));
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for e in json["entries"].as_array().unwrap() {
        assert_eq!(e["report"]["behavior"], "biased");
    }
}

#[test]
fn mismatched_condition_metadata_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let mut rows = synthetic_rows(5, |_, _| 0.5);
    let f1 = dir.path().join("1.jsonl");
    write_rows(&f1, &rows);
    for r in &mut rows {
        r.condition = spec(2);
        r.target_id.push('x');
    }
    let f2 = dir.path().join("2.jsonl");
    write_rows(&f2, &rows);
    let (o, _) = report(&[&f1, &f2], &dir.path().join("r"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mismatched condition metadata"), "{}", stderr(&o));

    let (o, _) = report(&[&f1, &f1], &dir.path().join("r"));
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("duplicate"));
}

#[test]
fn default_matrix_is_about_1_3_million_pairs() {
    let cfg = Config {
        seed: 0,
        lexicon: LexiconConfig {
            dir: root().join("data/lexicon"),
            frequency_cutoff: 5000,
        },
        conditions: serde_json::from_str::<Config>(r#"{"lexicon": {"dir": "x"}}"#).unwrap().conditions,
        scorer: Default::default(),
        output: Default::default(),
        report: Default::default(),
    }
    .resolved()
    .unwrap();
    let pairs: usize = cfg
        .condition_specs()
        .iter()
        .map(|(spec, structures)| spec.planned_pairs() * structures.len())
        .sum();
    assert_eq!(cfg.conditions.len(), 22);
    assert!((1_200_000..=1_400_000).contains(&pairs), "{pairs}");
}
