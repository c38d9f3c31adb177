//! Prediction parsing and evaluation metrics: accuracy, unweighted F1 and
//! unweighted average recall for emotions; per-AU binary F1.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::labels::{ActionUnit, Emotion};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub id: String,
    pub predicted_emotion: Option<Emotion>,
    pub predicted_aus: Option<BTreeSet<ActionUnit>>,
    /// Neither key could be parsed.
    pub invalid: bool,
}

fn skip_ws(s: &str) -> &str {
    s.trim_start()
}

/// Value of the first `"key": <rest>` occurrence, with `rest` starting
/// right after the colon.
fn after_key<'a>(text: &'a str, key: &str) -> impl Iterator<Item = &'a str> {
    let pat = alloc::format!("\"{key}\"");
    let mut out = Vec::new();
    let mut from = 0;
    while let Some(pos) = text[from..].find(&pat) {
        let rest = skip_ws(&text[from + pos + pat.len()..]);
        if let Some(r) = rest.strip_prefix(':') {
            out.push(skip_ws(r));
        }
        from += pos + pat.len();
    }
    out.into_iter()
}

fn quoted(s: &str) -> Option<(&str, &str)> {
    let s = s.strip_prefix('"')?;
    let end = s.find('"')?;
    Some((&s[..end], &s[end + 1..]))
}

fn parse_emotion(text: &str) -> Option<Emotion> {
    after_key(text, "emotion")
        .find_map(|rest| quoted(rest).and_then(|(v, _)| Emotion::from_alias(v.trim())))
}

fn parse_aus(text: &str) -> Option<BTreeSet<ActionUnit>> {
    after_key(text, "aus").find_map(|rest| {
        let body = rest.strip_prefix('[')?;
        let end = body.find(']')?;
        let mut set = BTreeSet::new();
        let mut items = &body[..end];
        loop {
            items = skip_ws(items.trim_start_matches([',', ' ', '\n', '\t', '\r']));
            if items.is_empty() {
                break;
            }
            let (item, tail) = quoted(items)?;
            if let Ok(au) = ActionUnit::from_str(item.trim()) {
                set.insert(au);
            }
            items = tail;
        }
        Some(set)
    })
}

/// Extracts `"emotion"` and `"aus"` values from model output, tolerating
/// surrounding prose. Unknown labels leave the field empty.
pub fn parse_prediction(id: &str, text: &str) -> PredictionRecord {
    let predicted_emotion = parse_emotion(text);
    let predicted_aus = parse_aus(text);
    PredictionRecord {
        id: id.to_string(),
        invalid: predicted_emotion.is_none() && predicted_aus.is_none(),
        predicted_emotion,
        predicted_aus,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum MetricsError {
    EmptyInput,
    EmptyClassSet,
    GroundTruthOutsideClassSet(String),
}

impl fmt::Display for MetricsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MetricsError::EmptyInput => f.write_str("no samples to evaluate"),
            MetricsError::EmptyClassSet => f.write_str("class set is empty"),
            MetricsError::GroundTruthOutsideClassSet(c) => {
                write!(f, "ground-truth label {c} is not in the class set")
            }
        }
    }
}

impl core::error::Error for MetricsError {}

/// Rows are ground truth, columns predictions; predictions outside the
/// class set (or missing) are counted per ground-truth class in `invalid`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
    pub invalid: Vec<u64>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>) -> Self {
        let k = classes.len();
        Self {
            classes,
            counts: alloc::vec![alloc::vec![0; k]; k],
            invalid: alloc::vec![0; k],
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum::<u64>() + self.invalid.iter().sum::<u64>()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub support: u64,
    pub predicted: u64,
    pub true_positive: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when the F1 denominator is zero (no support, no predictions).
    pub undefined_empty: bool,
    /// Set when the class has no ground-truth samples, so recall is 0 by convention.
    pub no_support: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub total: u64,
    pub acc: f64,
    pub uf1: f64,
    pub uar: f64,
    pub per_class: BTreeMap<String, ClassScore>,
    pub confusion: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Binary F1 from counts; zero denominator scores 0.
pub fn f1_score(tp: u64, fp: u64, fn_: u64) -> f64 {
    ratio(2 * tp, 2 * tp + fp + fn_)
}

/// One-vs-rest scores for every class of a confusion matrix.
pub fn metrics_from_confusion(cm: &ConfusionMatrix) -> Result<MetricReport, MetricsError> {
    let k = cm.classes.len();
    if k == 0 {
        return Err(MetricsError::EmptyClassSet);
    }
    let total = cm.total();
    if total == 0 {
        return Err(MetricsError::EmptyInput);
    }
    let mut per_class = BTreeMap::new();
    let (mut f1_sum, mut recall_sum) = (0.0, 0.0);
    for i in 0..k {
        let tp = cm.counts[i][i];
        let support = cm.counts[i].iter().sum::<u64>() + cm.invalid[i];
        let predicted: u64 = (0..k).map(|r| cm.counts[r][i]).sum();
        let (fp, fn_) = (predicted - tp, support - tp);
        let score = ClassScore {
            support,
            predicted,
            true_positive: tp,
            precision: ratio(tp, predicted),
            recall: ratio(tp, support),
            f1: f1_score(tp, fp, fn_),
            undefined_empty: 2 * tp + fp + fn_ == 0,
            no_support: support == 0,
        };
        f1_sum += score.f1;
        recall_sum += score.recall;
        per_class.insert(cm.classes[i].clone(), score);
    }
    Ok(MetricReport {
        total,
        acc: ratio(cm.trace(), total),
        uf1: f1_sum / k as f64,
        uar: recall_sum / k as f64,
        per_class,
        confusion: cm.clone(),
    })
}

/// Emotion metrics over aligned `(prediction, ground truth)` pairs. A
/// missing prediction counts as wrong.
pub fn emotion_metrics(
    pairs: &[(Option<Emotion>, Emotion)],
    classes: &[Emotion],
) -> Result<MetricReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut cm = ConfusionMatrix::new(classes.iter().map(|c| c.as_str().to_string()).collect());
    let index = |e: Emotion| classes.iter().position(|&c| c == e);
    for &(pred, gt) in pairs {
        let row = index(gt)
            .ok_or_else(|| MetricsError::GroundTruthOutsideClassSet(gt.as_str().to_string()))?;
        match pred.and_then(index) {
            Some(col) => cm.counts[row][col] += 1,
            None => cm.invalid[row] += 1,
        }
    }
    metrics_from_confusion(&cm)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuScore {
    pub true_positive: u64,
    pub false_positive: u64,
    pub false_negative: u64,
    pub f1: f64,
    pub undefined_empty: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuReport {
    pub total: u64,
    pub per_au: BTreeMap<ActionUnit, AuScore>,
    pub mean_f1: f64,
}

/// Positive-class F1 per AU, treating each AU as an independent binary
/// detection. A missing prediction counts as predicting no AUs.
pub fn au_metrics(
    pairs: &[(Option<BTreeSet<ActionUnit>>, BTreeSet<ActionUnit>)],
    aus: &[ActionUnit],
) -> Result<AuReport, MetricsError> {
    if pairs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    if aus.is_empty() {
        return Err(MetricsError::EmptyClassSet);
    }
    let empty = BTreeSet::new();
    let mut per_au = BTreeMap::new();
    for &au in aus {
        let (mut tp, mut fp, mut fn_) = (0, 0, 0);
        for (pred, gt) in pairs {
            let p = pred.as_ref().unwrap_or(&empty).contains(&au);
            match (p, gt.contains(&au)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        per_au.insert(
            au,
            AuScore {
                true_positive: tp,
                false_positive: fp,
                false_negative: fn_,
                f1: f1_score(tp, fp, fn_),
                undefined_empty: tp + fp + fn_ == 0,
            },
        );
    }
    let mean_f1 = per_au.values().map(|s| s.f1).sum::<f64>() / aus.len() as f64;
    Ok(AuReport {
        total: pairs.len() as u64,
        per_au,
        mean_f1,
    })
}
