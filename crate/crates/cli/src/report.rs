//! Aggregating score rows into per-condition reports and plot tables.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use priming::generator::{Condition, ConditionSpec, Construction};
use priming::metrics::{
    aggregate, cochran_sample_size, priming_effect, CiMethod, ConditionReport, PairedScore,
    TargetPe,
};

use crate::config::SampleSizeConfig;
use crate::error::CliError;
use crate::files::{check_overwrite, read_jsonl, write_atomic};
use crate::score::ScoreRow;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSize {
    pub z: f64,
    pub margin: f64,
    pub p: f64,
    pub cochran: u64,
    pub chosen: u64,
    pub note: String,
}

impl SampleSize {
    pub fn new(cfg: &SampleSizeConfig) -> Result<Self, CliError> {
        let cochran = cochran_sample_size(cfg.z, cfg.margin, cfg.p)
            .map_err(|e| CliError::Usage(e.to_string()))?;
        let note = if cochran == cfg.chosen {
            "the chosen corpus size equals the formula's value".to_string()
        } else {
            format!(
                "the chosen corpus size of {} pairs per structure is {} the formula's {} by {}; both are reported and neither is adjusted",
                cfg.chosen,
                if cfg.chosen < cochran { "below" } else { "above" },
                cochran,
                cochran.abs_diff(cfg.chosen)
            )
        };
        Ok(Self {
            z: cfg.z,
            margin: cfg.margin,
            p: cfg.p,
            cochran,
            chosen: cfg.chosen,
            note,
        })
    }

    pub fn lines(&self) -> String {
        format!(
            "Cochran sample size (z={}, margin={}, p={}): {}\nChosen corpus size: {} pairs per structure\nNote: {}\n",
            self.z, self.margin, self.p, self.cochran, self.chosen, self.note
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportEntry {
    pub scorer: String,
    pub spec: ConditionSpec,
    pub report: ConditionReport,
    pub targets: Vec<TargetPe>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub ci_method: CiMethod,
    pub sample_size: SampleSize,
    pub entries: Vec<ReportEntry>,
}

type Key = (String, Condition, Construction);

pub fn read_scores(paths: &[PathBuf]) -> Result<Vec<ScoreRow>, CliError> {
    let mut rows = Vec::new();
    for p in paths {
        rows.extend(read_jsonl::<ScoreRow>(p)?);
    }
    if rows.is_empty() {
        return Err(CliError::Validation("no score rows in the input".into()));
    }
    Ok(rows)
}

pub fn build_report(rows: &[ScoreRow], method: CiMethod, ss: &SampleSizeConfig) -> Result<Report, CliError> {
    let mut specs: BTreeMap<(String, Condition), &ConditionSpec> = BTreeMap::new();
    let mut groups: BTreeMap<Key, BTreeMap<String, BTreeMap<usize, PairedScore>>> = BTreeMap::new();
    for row in rows {
        let k = (row.scorer.clone(), row.condition.name);
        match specs.get(&k) {
            Some(s) if **s != row.condition => {
                return Err(CliError::Validation(format!(
                    "mismatched condition metadata for {} under {}: {} vs {}",
                    row.condition.name.label(),
                    row.scorer,
                    serde_json::to_string(s).unwrap_or_default(),
                    serde_json::to_string(&row.condition).unwrap_or_default()
                )))
            }
            Some(_) => {}
            None => {
                specs.insert(k, &row.condition);
            }
        }
        let pairs = groups
            .entry((row.scorer.clone(), row.condition.name, row.structure))
            .or_default()
            .entry(row.target_id.clone())
            .or_default();
        if pairs.insert(row.prime_pair_index, row.paired()).is_some() {
            return Err(CliError::Validation(format!(
                "duplicate score for target {} pair {}",
                row.target_id, row.prime_pair_index
            )));
        }
    }

    let mut per_target: BTreeMap<&Key, Vec<TargetPe>> = BTreeMap::new();
    for (key, targets) in &groups {
        let mut pes = Vec::with_capacity(targets.len());
        for pairs in targets.values() {
            let pairs: Vec<PairedScore> = pairs.values().cloned().collect();
            pes.push(priming_effect(&pairs).map_err(|e| CliError::Validation(e.to_string()))?);
        }
        per_target.insert(key, pes);
    }

    let mut entries = Vec::new();
    for (key, targets) in &per_target {
        let (scorer, cond, structure) = key;
        let partner = structure.alternated().ok_or_else(|| {
            CliError::Validation(format!("{structure} is not a target structure"))
        })?;
        let other = per_target
            .get(&(scorer.clone(), *cond, partner))
            .ok_or_else(|| {
                CliError::Validation(format!(
                    "{} {structure}: behavior needs scores for {partner} as well",
                    cond.label()
                ))
            })?;
        let report = aggregate(&cond.label(), *structure, targets, partner, other, method)
            .map_err(|e| CliError::Validation(format!("{} {structure}: {e}", cond.label())))?;
        entries.push(ReportEntry {
            scorer: scorer.clone(),
            spec: specs[&(scorer.clone(), *cond)].clone(),
            report,
            targets: targets.clone(),
        });
    }
    Ok(Report {
        ci_method: method,
        sample_size: SampleSize::new(ss)?,
        entries,
    })
}

#[derive(Serialize)]
struct CsvRow<'a> {
    scorer: &'a str,
    condition: &'a str,
    structure: Construction,
    n_targets: usize,
    n_pairs: usize,
    mean_pe: f64,
    sd: f64,
    ci99_lo: f64,
    ci99_hi: f64,
    ci_method: &'static str,
    preference_rate: f64,
    preference_count: usize,
    paired_structure: Construction,
    paired_mean_pe: f64,
    paired_ci99_lo: f64,
    paired_ci99_hi: f64,
    behavior: &'static str,
}

#[derive(Serialize)]
struct PlotRow<'a> {
    scorer: &'a str,
    panel: String,
    condition: &'a str,
    structure: Construction,
    mean_pe: f64,
    ci99_lo: f64,
    ci99_hi: f64,
    preference_rate: f64,
    behavior: &'static str,
}

fn ci_label(m: CiMethod) -> &'static str {
    match m {
        CiMethod::StudentT => "student_t",
        CiMethod::Normal => "normal",
    }
}

/// Plot table and x-axis label for a condition.
fn plot_slot(c: Condition) -> (&'static str, String) {
    match c {
        Condition::Core => ("core", "core".into()),
        Condition::SemSimVerb | Condition::SemSimNouns | Condition::SemSimAll => {
            ("lexical_semantic", "A".into())
        }
        Condition::OverlapRandomNoun
        | Condition::OverlapAllNouns
        | Condition::OverlapVerb
        | Condition::OverlapFunctionWords
        | Condition::Identical => ("lexical_semantic", "B".into()),
        Condition::ImplausiblePrime => ("lexical_semantic", "C".into()),
        Condition::Recency(pos) => ("recency", pos.to_string()),
        Condition::Cumulative(k) => ("cumulative", k.to_string()),
        Condition::Complexity(m) => ("complexity", m.as_str().into()),
    }
}

fn csv_bytes<T: Serialize>(rows: impl IntoIterator<Item = T>) -> Vec<u8> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r).expect("csv row");
    }
    w.into_inner().expect("in-memory csv")
}

pub const REPORT_CSV: &str = "report.csv";
pub const REPORT_JSON: &str = "report.json";

/// Write report.csv, report.json and plots/*.csv; returns the paths written.
pub fn write_report(report: &Report, dir: &Path, force: bool) -> Result<Vec<PathBuf>, CliError> {
    let csv_path = dir.join(REPORT_CSV);
    let json_path = dir.join(REPORT_JSON);
    check_overwrite(&csv_path, force)?;
    check_overwrite(&json_path, force)?;

    let rows = report.entries.iter().map(|e| {
        let r = &e.report;
        CsvRow {
            scorer: &e.scorer,
            condition: &r.condition,
            structure: r.structure,
            n_targets: r.n_targets,
            n_pairs: r.n_pairs,
            mean_pe: r.mean_pe,
            sd: r.sd,
            ci99_lo: r.ci99.0,
            ci99_hi: r.ci99.1,
            ci_method: ci_label(r.ci_method),
            preference_rate: r.preference_rate,
            preference_count: r.preference_count,
            paired_structure: r.behavior_inputs.structure,
            paired_mean_pe: r.behavior_inputs.mean_pe,
            paired_ci99_lo: r.behavior_inputs.ci99.0,
            paired_ci99_hi: r.behavior_inputs.ci99.1,
            behavior: r.behavior.as_str(),
        }
    });
    write_atomic(&csv_path, &csv_bytes(rows))?;
    let mut json = serde_json::to_string_pretty(report).expect("report serializes");
    json.push('\n');
    write_atomic(&json_path, json.as_bytes())?;
    let mut written = vec![csv_path, json_path];

    let mut plots: BTreeMap<&str, Vec<PlotRow>> = BTreeMap::new();
    for e in &report.entries {
        let (table, panel) = plot_slot(e.spec.name);
        let r = &e.report;
        plots.entry(table).or_default().push(PlotRow {
            scorer: &e.scorer,
            panel,
            condition: &r.condition,
            structure: r.structure,
            mean_pe: r.mean_pe,
            ci99_lo: r.ci99.0,
            ci99_hi: r.ci99.1,
            preference_rate: r.preference_rate,
            behavior: r.behavior.as_str(),
        });
    }
    for (table, rows) in plots {
        let path = dir.join("plots").join(format!("{table}.csv"));
        write_atomic(&path, &csv_bytes(rows))?;
        written.push(path);
    }
    Ok(written)
}
