//! Priming Effect, its aggregation with confidence intervals, behaviour
//! labels and the Cochran sample-size helper.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

use crate::generator::Construction;

/// Two-sided confidence level used for every reported interval.
pub const CONFIDENCE: f64 = 0.99;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("no scores for target")]
    Empty,
    #[error("scores mix targets `{0}` and `{1}`")]
    MixedTargets(String, String),
    #[error("non-finite score for `{target_id}` pair {pair}")]
    NonFinite { target_id: String, pair: usize },
    #[error("a confidence interval needs at least 2 targets, got {0}")]
    TooFewTargets(usize),
    #[error("invalid Cochran parameter: {0}")]
    Cochran(String),
}

/// Log-probabilities of one target under its congruent and incongruent
/// contexts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedScore {
    pub target_id: String,
    pub prime_pair_index: usize,
    pub lp_congruent: f64,
    pub lp_incongruent: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TargetPe {
    pub target_id: String,
    pub pe: f64,
    pub n_pairs: usize,
    /// Pairs where the congruent context scored strictly higher.
    pub preference_count: usize,
}

pub fn priming_effect(scores: &[PairedScore]) -> Result<TargetPe, MetricsError> {
    let first = scores.first().ok_or(MetricsError::Empty)?;
    let mut sum = 0.0;
    let mut preference_count = 0;
    for s in scores {
        if s.target_id != first.target_id {
            return Err(MetricsError::MixedTargets(
                first.target_id.clone(),
                s.target_id.clone(),
            ));
        }
        if !(s.lp_congruent.is_finite() && s.lp_incongruent.is_finite()) {
            return Err(MetricsError::NonFinite {
                target_id: s.target_id.clone(),
                pair: s.prime_pair_index,
            });
        }
        sum += s.lp_congruent - s.lp_incongruent;
        if s.lp_congruent > s.lp_incongruent {
            preference_count += 1;
        }
    }
    Ok(TargetPe {
        target_id: first.target_id.clone(),
        pe: sum / scores.len() as f64,
        n_pairs: scores.len(),
        preference_count,
    })
}

/// How the interval half-width is scaled.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CiMethod {
    #[default]
    StudentT,
    /// Normal approximation, only sensible for large samples.
    Normal,
}

/// Two-sided critical value at [`CONFIDENCE`] for a sample of size `n`.
pub fn critical_value(method: CiMethod, n: usize) -> Result<f64, MetricsError> {
    if n < 2 {
        return Err(MetricsError::TooFewTargets(n));
    }
    let q = 1.0 - (1.0 - CONFIDENCE) / 2.0;
    Ok(match method {
        CiMethod::StudentT => StudentsT::new(0.0, 1.0, (n - 1) as f64)
            .expect("df is positive")
            .inverse_cdf(q),
        CiMethod::Normal => Normal::standard().inverse_cdf(q),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanCi {
    pub mean: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub sd: f64,
    pub n: usize,
    pub lo: f64,
    pub hi: f64,
}

pub fn mean_ci(values: &[f64], method: CiMethod) -> Result<MeanCi, MetricsError> {
    let n = values.len();
    let t = critical_value(method, n)?;
    let mean = values.iter().sum::<f64>() / n as f64;
    let ss: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum();
    let sd = (ss / (n - 1) as f64).sqrt();
    let half = t * sd / (n as f64).sqrt();
    Ok(MeanCi {
        mean,
        sd,
        n,
        lo: mean - half,
        hi: mean + half,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Positive,
    Zero,
    Negative,
}

impl Sign {
    /// Positive or negative only when the interval excludes zero.
    pub fn of_interval(lo: f64, hi: f64) -> Self {
        if lo > 0.0 {
            Sign::Positive
        } else if hi < 0.0 {
            Sign::Negative
        } else {
            Sign::Zero
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Behavior {
    Symmetric,
    Asymmetric,
    Biased,
    Null,
}

impl Behavior {
    pub fn as_str(self) -> &'static str {
        match self {
            Behavior::Symmetric => "symmetric",
            Behavior::Asymmetric => "asymmetric",
            Behavior::Biased => "biased",
            Behavior::Null => "null",
        }
    }
}

/// Label an alternation from the two structures' (mean, (lo, hi)).
pub fn classify_behavior(x: (f64, (f64, f64)), y: (f64, (f64, f64))) -> Behavior {
    let sx = Sign::of_interval(x.1 .0, x.1 .1);
    let sy = Sign::of_interval(y.1 .0, y.1 .1);
    use Sign::*;
    match (sx, sy) {
        (Positive, Positive) => Behavior::Symmetric,
        (Positive, Zero) | (Zero, Positive) => Behavior::Asymmetric,
        (Positive, Negative) | (Negative, Positive) => Behavior::Biased,
        _ => Behavior::Null,
    }
}

/// Summary of the counterpart structure that fed the behaviour label.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedSummary {
    pub structure: Construction,
    pub mean_pe: f64,
    pub ci99: (f64, f64),
    pub n_targets: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: String,
    pub structure: Construction,
    pub mean_pe: f64,
    pub sd: f64,
    pub ci99: (f64, f64),
    pub ci_method: CiMethod,
    pub preference_rate: f64,
    pub preference_count: usize,
    pub n_pairs: usize,
    pub n_targets: usize,
    pub behavior_inputs: PairedSummary,
    pub behavior: Behavior,
}

fn preference(targets: &[TargetPe]) -> (usize, usize) {
    targets
        .iter()
        .fold((0, 0), |(p, n), t| (p + t.preference_count, n + t.n_pairs))
}

pub fn aggregate(
    condition: &str,
    structure: Construction,
    targets: &[TargetPe],
    other_structure: Construction,
    other: &[TargetPe],
    method: CiMethod,
) -> Result<ConditionReport, MetricsError> {
    let pes: Vec<f64> = targets.iter().map(|t| t.pe).collect();
    let own = mean_ci(&pes, method)?;
    let other_pes: Vec<f64> = other.iter().map(|t| t.pe).collect();
    let theirs = mean_ci(&other_pes, method)?;
    let (preference_count, n_pairs) = preference(targets);
    Ok(ConditionReport {
        condition: condition.to_string(),
        structure,
        mean_pe: own.mean,
        sd: own.sd,
        ci99: (own.lo, own.hi),
        ci_method: method,
        preference_rate: if n_pairs == 0 {
            0.0
        } else {
            preference_count as f64 / n_pairs as f64
        },
        preference_count,
        n_pairs,
        n_targets: targets.len(),
        behavior_inputs: PairedSummary {
            structure: other_structure,
            mean_pe: theirs.mean,
            ci99: (theirs.lo, theirs.hi),
            n_targets: other.len(),
        },
        behavior: classify_behavior((own.mean, (own.lo, own.hi)), (theirs.mean, (theirs.lo, theirs.hi))),
    })
}

/// z²·p·(1−p)/margin² before rounding.
pub fn cochran_value(z: f64, margin: f64, p: f64) -> Result<f64, MetricsError> {
    if !(z.is_finite() && z > 0.0) {
        return Err(MetricsError::Cochran(format!("z must be positive, got {z}")));
    }
    if !(margin > 0.0 && margin <= 1.0) {
        return Err(MetricsError::Cochran(format!("margin must lie in (0, 1], got {margin}")));
    }
    if !(p > 0.0 && p < 1.0) {
        return Err(MetricsError::Cochran(format!("p must lie in (0, 1), got {p}")));
    }
    Ok(z * z * p * (1.0 - p) / (margin * margin))
}

/// Cochran's sample size, rounded to the nearest integer and at least 1.
pub fn cochran_sample_size(z: f64, margin: f64, p: f64) -> Result<u64, MetricsError> {
    Ok((cochran_value(z, margin, p)?.round() as u64).max(1))
}
