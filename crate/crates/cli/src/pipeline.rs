//! The generate and validate stages and the full run.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use priming::generator::{build_structure, core_similarity_threshold, ConditionSpec, PrimeTargetItem};
use priming::validator::{summarize, validate_corpus, Violation};
use priming::Lexicon;

use crate::config::Config;
use crate::error::{io_err, CliError};
use crate::files::{check_overwrite, read_corpus, write_atomic, write_jsonl, DirLock};
use crate::manifest::{unix_now, RunManifest, MANIFEST_FILE};
use crate::report::{build_report, write_report};
use crate::score::{build_scorer, score_files, ScoreJob};

pub fn corpus_path(out: &Path, spec: &ConditionSpec, structure: priming::generator::Construction) -> PathBuf {
    out.join("corpus")
        .join(spec.name.label())
        .join(format!("{}.jsonl", structure.as_str()))
}

/// Generate every (condition, structure) file of a resolved config.
pub fn generate_corpora(cfg: &Config, lex: &Lexicon, out: &Path, force: bool) -> Result<Vec<PathBuf>, CliError> {
    let mut plan = Vec::new();
    for (spec, structures) in cfg.condition_specs() {
        for s in structures {
            let path = corpus_path(out, &spec, s);
            check_overwrite(&path, force)?;
            plan.push((spec.clone(), s, path));
        }
    }
    let mut threshold = None;
    let mut written = Vec::new();
    for (mut spec, s, path) in plan {
        if spec.name.is_semantic_similarity() && spec.similarity_threshold.is_none() {
            // Calibrated once per seed instead of once per file.
            let t = match threshold {
                Some((seed, t)) if seed == spec.seed => t,
                _ => {
                    let t = core_similarity_threshold(lex, spec.seed)?;
                    threshold = Some((spec.seed, t));
                    t
                }
            };
            spec.similarity_threshold = Some(t);
        }
        let items = build_structure(&spec, s, lex)?;
        write_jsonl(&path, &items)?;
        written.push(path);
    }
    Ok(written)
}

#[derive(Debug, Serialize)]
pub struct FileCheck {
    pub path: String,
    pub condition: String,
    pub items: usize,
    pub violations: usize,
}

#[derive(Debug, Serialize)]
pub struct ValidationReport {
    pub ok: bool,
    pub items: usize,
    pub files: Vec<FileCheck>,
    pub summary: BTreeMap<String, usize>,
    pub violations: Vec<Violation>,
}

/// Validate corpus files. Items in one file must share one condition spec.
pub fn validate_files(paths: &[PathBuf], lex: &Lexicon) -> Result<ValidationReport, CliError> {
    let mut files = Vec::new();
    let mut violations = Vec::new();
    let mut total = 0;
    for path in paths {
        let items: Vec<PrimeTargetItem> = read_corpus(path)?;
        if items.is_empty() {
            return Err(CliError::Validation(format!("{}: no items", path.display())));
        }
        let spec = items[0].condition.clone();
        let found = validate_corpus(&items, &spec, lex);
        files.push(FileCheck {
            path: path.display().to_string(),
            condition: spec.name.label(),
            items: items.len(),
            violations: found.len(),
        });
        total += items.len();
        violations.extend(found);
    }
    Ok(ValidationReport {
        ok: violations.is_empty(),
        items: total,
        files,
        summary: summarize(&violations),
        violations,
    })
}

pub struct RunOptions<'a> {
    pub out: &'a Path,
    pub force: bool,
    pub scorer_url: Option<&'a str>,
}

/// Generate, validate, score and report into `out`, recording a manifest.
pub fn run(cfg: &Config, opts: &RunOptions) -> Result<RunManifest, CliError> {
    let out = opts.out;
    let _lock = DirLock::acquire(out)?;
    check_overwrite(&out.join(MANIFEST_FILE), opts.force)?;
    let mut manifest = RunManifest::new(cfg, unix_now())?;
    let lex = Lexicon::load_dir(&cfg.lexicon.dir, cfg.lexicon.frequency_cutoff)?;
    // Scorer first: an unreachable service should fail before any generation.
    let built = build_scorer(&cfg.scorer, opts.scorer_url)?;
    manifest.scorer = Some(built.scorer.identity());

    let corpora = generate_corpora(cfg, &lex, out, opts.force)?;
    let mut check = validate_files(&corpora, &lex)?;
    for (f, path) in check.files.iter_mut().zip(&corpora) {
        f.path = path.strip_prefix(out).unwrap_or(path).display().to_string();
    }
    let validation = out.join("validation.json");
    write_atomic(&validation, serde_json::to_string_pretty(&check).expect("report").as_bytes())?;
    if !check.ok {
        return Err(CliError::Validation(format!(
            "{} constraint violations in the generated corpus; see {}",
            check.violations.len(),
            validation.display()
        )));
    }

    let mut artifacts = corpora.clone();
    artifacts.push(validation);
    if let Some(lines) = &built.training_text {
        let path = out.join("training.txt");
        let mut text = lines.join("\n");
        text.push('\n');
        write_atomic(&path, text.as_bytes())?;
        artifacts.push(path);
    }

    let scores = out.join("scores.jsonl");
    let outcome = score_files(
        &ScoreJob {
            inputs: &corpora,
            out: &scores,
            mode: cfg.scorer.mode(),
            max_in_flight: cfg.scorer.max_in_flight(),
            force: opts.force,
            stop_after: None,
        },
        built.scorer.as_ref(),
    )?;
    debug_assert!(outcome.complete());
    artifacts.push(scores.clone());

    let rows = crate::report::read_scores(&[scores])?;
    let report = build_report(&rows, cfg.report.ci_method, &cfg.report.sample_size)?;
    artifacts.extend(write_report(&report, &out.join("report"), opts.force)?);
    crate::files::emit(&report.sample_size.lines());

    manifest.add_artifacts(out, &artifacts)?;
    manifest.write(out)?;
    Ok(manifest)
}

pub fn write_lines(path: &Path, lines: &[String], force: bool) -> Result<(), CliError> {
    check_overwrite(path, force)?;
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let mut text = lines.join("\n");
    text.push('\n');
    write_atomic(path, text.as_bytes())
}
