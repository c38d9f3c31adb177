//! Prediction scoring against a ground-truth manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use mer_core::instruct::{apply_taxonomy, Taxonomy};
use mer_core::metrics::{
    au_metrics, emotion_metrics, parse_prediction, AuReport, MetricReport, PredictionRecord,
};
use mer_core::{ActionUnit, Emotion};
use serde::{Deserialize, Serialize};

use crate::manifest::LoadedManifest;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum EvalTask {
    Emotion,
    Au,
}

/// One prediction line: raw model output, or already-extracted labels.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrediction {
    id: String,
    #[serde(default)]
    output: Option<String>,
    #[serde(default)]
    emotion: Option<String>,
    #[serde(default)]
    aus: Option<Vec<serde_json::Value>>,
}

fn au_from_value(v: &serde_json::Value) -> Option<ActionUnit> {
    match v {
        serde_json::Value::Number(n) => n
            .as_u64()
            .and_then(|n| u8::try_from(n).ok())
            .map(ActionUnit),
        serde_json::Value::String(s) => s.trim().parse().ok(),
        _ => None,
    }
}

impl RawPrediction {
    fn into_record(self, taxonomy: &Taxonomy) -> PredictionRecord {
        if let Some(text) = &self.output {
            return parse_prediction(&self.id, text);
        }
        let predicted_emotion = self.emotion.as_deref().and_then(|e| {
            Emotion::from_alias(e).or_else(|| {
                taxonomy
                    .emotion_map
                    .get(&e.trim().to_ascii_lowercase())
                    .copied()
            })
        });
        let predicted_aus = self
            .aus
            .map(|v| v.iter().filter_map(au_from_value).collect::<BTreeSet<_>>());
        PredictionRecord {
            invalid: predicted_emotion.is_none() && predicted_aus.is_none(),
            id: self.id,
            predicted_emotion,
            predicted_aus,
        }
    }
}

/// Reads predictions as a JSON array or as JSON lines. Extracted emotion
/// labels may use any alias known to the taxonomy; unknown labels are invalid.
pub fn parse_predictions(text: &str, taxonomy: &Taxonomy) -> Result<Vec<PredictionRecord>> {
    let raw: Vec<RawPrediction> = if text.trim_start().starts_with('[') {
        serde_json::from_str(text)?
    } else {
        text.lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                serde_json::from_str(l).with_context(|| format!("prediction line {}", i + 1))
            })
            .collect::<Result<_>>()?
    };
    let mut seen = BTreeSet::new();
    for r in &raw {
        if !seen.insert(r.id.clone()) {
            bail!("duplicate prediction for id {:?}", r.id);
        }
    }
    Ok(raw.into_iter().map(|r| r.into_record(taxonomy)).collect())
}

#[derive(Debug, Clone, Serialize)]
pub struct EvalReport {
    pub task: EvalTask,
    pub samples: usize,
    /// Ground-truth samples without a prediction; scored as wrong.
    pub missing_predictions: Vec<String>,
    /// Predictions whose id is not in the (filtered) manifest; ignored.
    pub unmatched_predictions: Vec<String>,
    /// Predictions from which no label could be extracted.
    pub invalid_predictions: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub emotion: Option<MetricReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub au: Option<AuReport>,
}

/// Scores predictions for the manifest's samples. `classes` defaults to the
/// emotion classes present in the ground truth.
pub fn evaluate(
    manifest: &LoadedManifest,
    predictions: &[PredictionRecord],
    taxonomy: &Taxonomy,
    task: EvalTask,
    classes: Option<&[Emotion]>,
) -> Result<EvalReport> {
    let by_id: BTreeMap<&str, &PredictionRecord> =
        predictions.iter().map(|p| (p.id.as_str(), p)).collect();
    let gt: Vec<_> = manifest
        .samples
        .iter()
        .map(|s| apply_taxonomy(s, taxonomy).0)
        .collect();
    let ids: BTreeSet<&str> = gt.iter().map(|s| s.id.as_str()).collect();
    let missing: Vec<String> = gt
        .iter()
        .filter(|s| !by_id.contains_key(s.id.as_str()))
        .map(|s| s.id.clone())
        .collect();
    let unmatched: Vec<String> = predictions
        .iter()
        .filter(|p| !ids.contains(p.id.as_str()))
        .map(|p| p.id.clone())
        .collect();
    let invalid = gt
        .iter()
        .filter(|s| by_id.get(s.id.as_str()).is_some_and(|p| p.invalid))
        .count();
    let mut report = EvalReport {
        task,
        samples: gt.len(),
        missing_predictions: missing,
        unmatched_predictions: unmatched,
        invalid_predictions: invalid,
        emotion: None,
        au: None,
    };
    match task {
        EvalTask::Emotion => {
            let pairs: Vec<(Option<Emotion>, Emotion)> = gt
                .iter()
                .map(|s| {
                    let pred = by_id.get(s.id.as_str()).and_then(|p| p.predicted_emotion);
                    (pred, taxonomy.map_emotion(&s.gt_emotion))
                })
                .collect();
            let present: Vec<Emotion> = match classes {
                Some(c) => c.to_vec(),
                None => {
                    let set: BTreeSet<Emotion> = pairs.iter().map(|p| p.1).collect();
                    Emotion::ALL
                        .iter()
                        .copied()
                        .filter(|e| set.contains(e))
                        .collect()
                }
            };
            report.emotion = Some(emotion_metrics(&pairs, &present)?);
        }
        EvalTask::Au => {
            let pairs: Vec<_> = gt
                .iter()
                .map(|s| {
                    (
                        by_id
                            .get(s.id.as_str())
                            .and_then(|p| p.predicted_aus.clone()),
                        s.gt_aus.clone(),
                    )
                })
                .collect();
            let aus: Vec<ActionUnit> = taxonomy.au_whitelist.iter().copied().collect();
            report.au = Some(au_metrics(&pairs, &aus)?);
        }
    }
    Ok(report)
}

impl EvalReport {
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "samples: {}  missing: {}  invalid: {}",
            self.samples,
            self.missing_predictions.len(),
            self.invalid_predictions
        );
        if let Some(m) = &self.emotion {
            let _ = writeln!(s, "ACC {:.4}  UF1 {:.4}  UAR {:.4}", m.acc, m.uf1, m.uar);
            let _ = writeln!(
                s,
                "{:<12} {:>7} {:>9} {:>9} {:>9}",
                "class", "support", "precision", "recall", "f1"
            );
            for c in &m.confusion.classes {
                let sc = &m.per_class[c];
                let _ = writeln!(
                    s,
                    "{:<12} {:>7} {:>9.4} {:>9.4} {:>9.4}",
                    c, sc.support, sc.precision, sc.recall, sc.f1
                );
            }
        }
        if let Some(a) = &self.au {
            let _ = writeln!(s, "mean AU F1 {:.4}", a.mean_f1);
            let _ = writeln!(
                s,
                "{:<6} {:>4} {:>4} {:>4} {:>9}",
                "au", "tp", "fp", "fn", "f1"
            );
            for (au, sc) in &a.per_au {
                let _ = writeln!(
                    s,
                    "{:<6} {:>4} {:>4} {:>4} {:>9.4}",
                    au.to_string(),
                    sc.true_positive,
                    sc.false_positive,
                    sc.false_negative,
                    sc.f1
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use mer_core::instruct::builtin_taxonomy;

    #[test]
    fn parses_array_and_lines() {
        let tax = builtin_taxonomy();
        let arr = r#"[{"id": "a", "emotion": "happy"}, {"id": "b", "output": "{\"aus\": [\"AU4\"], \"emotion\": \"disgust\"}"}]"#;
        let p = parse_predictions(arr, &tax).unwrap();
        assert_eq!(p[0].predicted_emotion, Some(Emotion::Happiness));
        assert_eq!(p[1].predicted_emotion, Some(Emotion::Disgust));
        assert_eq!(p[1].predicted_aus, Some([ActionUnit(4)].into()));
        let lines = "{\"id\": \"a\", \"aus\": [4, \"AU12\"]}\n\n{\"id\": \"b\"}\n";
        let p = parse_predictions(lines, &tax).unwrap();
        assert_eq!(
            p[0].predicted_aus,
            Some([ActionUnit(4), ActionUnit(12)].into())
        );
        assert!(p[1].invalid);
        let p = parse_predictions(
            r#"[{"id": "a", "emotion": "repression"}, {"id": "b", "emotion": "bored"}]"#,
            &tax,
        )
        .unwrap();
        assert_eq!(p[0].predicted_emotion, Some(Emotion::Other));
        assert!(p[1].invalid);
        assert!(parse_predictions("{\"id\": \"a\"}\n{\"id\": \"a\"}", &tax).is_err());
    }
}
