//! Instruction records: label taxonomy, (category, evidence, rationale)
//! triples, layered prompts drawn from instruction pools, and dataset
//! distribution tables.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt::{self, Write};

use serde::{Deserialize, Serialize};

use crate::evidence::{Direction8, EvidenceSet};
use crate::labels::{ActionUnit, Emotion, CORE_AUS};
use crate::math::{fnv1a64, splitmix64};

pub const FEATURE_PLACEHOLDER: &str = "<feature><ExpertFeatureHere></feature>";

/// One manifest entry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SampleRecord {
    pub id: String,
    pub source_dataset: String,
    /// Ordered frame image paths; mutually exclusive with `flow_path`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frames: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flow_path: Option<String>,
    pub landmarks_path: String,
    /// Landmarks are in `[0, 1]` and scale by the frame size.
    #[serde(default)]
    pub landmarks_normalized: bool,
    #[serde(default)]
    pub gt_aus: BTreeSet<ActionUnit>,
    pub gt_emotion: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub onset: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub apex: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub offset: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RecordError {
    FlowSourceAmbiguous,
    FlowSourceMissing,
    TooFewFrames(usize),
    FrameIndexOutOfRange { index: usize, frames: usize },
    NoPreviousFrame,
    EmptyId,
}

impl fmt::Display for RecordError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RecordError::FlowSourceAmbiguous => f.write_str("both frames and flow_path are set"),
            RecordError::FlowSourceMissing => f.write_str("neither frames nor flow_path is set"),
            RecordError::TooFewFrames(n) => write!(f, "need at least 2 frames, got {n}"),
            RecordError::FrameIndexOutOfRange { index, frames } => {
                write!(f, "frame index {index} out of range for {frames} frames")
            }
            RecordError::NoPreviousFrame => {
                f.write_str("apex is the first frame; no consecutive pair exists")
            }
            RecordError::EmptyId => f.write_str("sample id is empty"),
        }
    }
}

impl core::error::Error for RecordError {}

impl SampleRecord {
    pub fn validate(&self) -> Result<(), RecordError> {
        if self.id.trim().is_empty() {
            return Err(RecordError::EmptyId);
        }
        match (&self.frames, &self.flow_path) {
            (Some(_), Some(_)) => Err(RecordError::FlowSourceAmbiguous),
            (None, None) => Err(RecordError::FlowSourceMissing),
            (Some(frames), None) => {
                if frames.len() < 2 {
                    return Err(RecordError::TooFewFrames(frames.len()));
                }
                for index in [self.onset, self.apex, self.offset].into_iter().flatten() {
                    if index >= frames.len() {
                        return Err(RecordError::FrameIndexOutOfRange {
                            index,
                            frames: frames.len(),
                        });
                    }
                }
                Ok(())
            }
            (None, Some(_)) => Ok(()),
        }
    }

    /// Indices of the two frames the flow is estimated between: onset to
    /// apex, or the frame before apex to apex in consecutive mode. Onset
    /// defaults to the first frame and apex to the last.
    pub fn frame_pair(&self, consecutive: bool) -> Result<(usize, usize), RecordError> {
        self.validate()?;
        let n = self.frames.as_ref().map_or(0, Vec::len);
        let apex = self.apex.unwrap_or(n - 1);
        if consecutive {
            if apex == 0 {
                return Err(RecordError::NoPreviousFrame);
            }
            Ok((apex - 1, apex))
        } else {
            Ok((self.onset.unwrap_or(0), apex))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub au_whitelist: BTreeSet<ActionUnit>,
    /// Lower-case source label to target class.
    pub emotion_map: BTreeMap<String, Emotion>,
}

impl Taxonomy {
    /// Target class for a source label; anything unmapped is "other".
    pub fn map_emotion(&self, label: &str) -> Emotion {
        let key = label.trim().to_ascii_lowercase();
        self.emotion_map
            .get(&key)
            .copied()
            .unwrap_or(Emotion::Other)
    }
}

pub fn builtin_taxonomy() -> Taxonomy {
    let pairs: [(&str, Emotion); 27] = [
        ("happiness", Emotion::Happiness),
        ("happy", Emotion::Happiness),
        ("joy", Emotion::Happiness),
        ("positive", Emotion::Happiness),
        ("sadness", Emotion::Sadness),
        ("sad", Emotion::Sadness),
        ("sorrow", Emotion::Sadness),
        ("surprise", Emotion::Surprise),
        ("surprised", Emotion::Surprise),
        ("fear", Emotion::Fear),
        ("fearful", Emotion::Fear),
        ("afraid", Emotion::Fear),
        ("fright", Emotion::Fear),
        ("anger", Emotion::Anger),
        ("angry", Emotion::Anger),
        ("disgust", Emotion::Disgust),
        ("disgusted", Emotion::Disgust),
        ("disgusting", Emotion::Disgust),
        ("contempt", Emotion::Contempt),
        ("contemptuous", Emotion::Contempt),
        ("other", Emotion::Other),
        ("others", Emotion::Other),
        ("repression", Emotion::Other),
        ("tense", Emotion::Other),
        ("negative", Emotion::Other),
        ("helpless", Emotion::Other),
        ("pain", Emotion::Other),
    ];
    Taxonomy {
        au_whitelist: CORE_AUS.iter().map(|&n| ActionUnit(n)).collect(),
        emotion_map: pairs.iter().map(|&(k, e)| (k.to_string(), e)).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TaxonomyLog {
    pub dropped_aus: Vec<ActionUnit>,
    pub original_emotion: String,
}

/// Keeps whitelisted AUs and maps the emotion to its target class name.
pub fn apply_taxonomy(record: &SampleRecord, taxonomy: &Taxonomy) -> (SampleRecord, TaxonomyLog) {
    let mut out = record.clone();
    let (kept, dropped): (BTreeSet<ActionUnit>, BTreeSet<ActionUnit>) = record
        .gt_aus
        .iter()
        .partition(|au| taxonomy.au_whitelist.contains(au));
    out.gt_aus = kept;
    out.gt_emotion = taxonomy
        .map_emotion(&record.gt_emotion)
        .as_str()
        .to_string();
    let log = TaxonomyLog {
        dropped_aus: dropped.into_iter().collect(),
        original_emotion: record.gt_emotion.clone(),
    };
    (out, log)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Category {
    pub aus: Vec<ActionUnit>,
    pub emotion: Emotion,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvidenceEntry {
    pub direction: Direction8,
    /// One of "low", "medium", "high".
    pub intensity: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionTriple {
    pub category: Category,
    pub evidence: BTreeMap<String, EvidenceEntry>,
    pub rationale: String,
}

pub fn build_triple(
    gt_aus: &BTreeSet<ActionUnit>,
    emotion: Emotion,
    evidence: &EvidenceSet,
    rationale: String,
) -> InstructionTriple {
    InstructionTriple {
        category: Category {
            aus: gt_aus.iter().copied().collect(),
            emotion,
        },
        evidence: evidence
            .regions
            .iter()
            .map(|(name, ev)| {
                (
                    name.clone(),
                    EvidenceEntry {
                        direction: ev.direction,
                        intensity: ev.band.level_word().to_string(),
                    },
                )
            })
            .collect(),
        rationale,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Emotion,
    Flow,
}

impl Task {
    pub fn token(self) -> &'static str {
        match self {
            Task::Emotion => "[emotion]",
            Task::Flow => "[flow]",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionPools {
    pub system_prompt: String,
    pub emotion: Vec<String>,
    pub flow: Vec<String>,
}

impl InstructionPools {
    pub fn pool(&self, task: Task) -> &[String] {
        match task {
            Task::Emotion => &self.emotion,
            Task::Flow => &self.flow,
        }
    }

    pub fn validate(&self) -> Result<(), &'static str> {
        if self.emotion.is_empty() || self.flow.is_empty() {
            return Err("instruction pools must not be empty");
        }
        if self.system_prompt.trim().is_empty() {
            return Err("system prompt must not be empty");
        }
        Ok(())
    }
}

const SYSTEM_PROMPT: &str = "You are a micro-expression analysis assistant specialized in linking Facial Action Units (AUs) to emotions and inferring AUs from motion cues in optical flow under user-provided conventions.
General rules:
- Follow the dialogue instructions strictly; reason stepwise but only output final structured findings.
- Treat <feature> contents as evidence containers provided by the user; do not hallucinate missing signals.
Multimodal feature policy (text-aligned features):
- Inputs may include features produced by an external image/video encoder and projected into the language space; treat tokens in <feature> as aligned, high-priority cues but still cross-check against context.
- Use internal knowledge of AU–emotion relationships, but defer to explicit evidence when conflicts occur.
- Assume the optical-flow hue/direction convention and any AU region-of-interest definition are provided in the user message; do not invent unmapped conventions.
Constraints:
- No medical or legal claims; calibrate uncertainty; remain concise and factual.
- If features are missing, say so and proceed with what is available.";

const EMOTION_PROMPTS: [&str; 3] = [
    "Return JSON only with reasoning:
\"emotion\": one of [anger, sadness, happiness, fear, disgust, surprise, other, contempt],
\"rationale\": Analyze the optical flow visualization where hue indicates motion direction and brightness indicates motion intensity. The color-to-direction map is: Up=purple, Upper-Right=pink, Right=red, Lower-Right=orange, Down=yellow-green, Lower-Left=green, Left=cyan, Upper-Left=blue. Structure your response with these headings:
1. Analysis process: Based on the color blocks, identify the active facial regions and their motion patterns. Focus on eyebrow movements (raising/lowering), eye movements (lid changes), nose/upper lip changes, and mouth/chin movements.
2. Expression reasoning: Explain how the combination of these facial movements suggests a specific emotion.
3. Conclusion: State the final emotion, choosing from: anger, sadness, happiness, fear, disgust, surprise, other, contempt.",
    "Reply with a JSON object only.
\"emotion\": exactly one of [anger, sadness, happiness, fear, disgust, surprise, other, contempt],
\"rationale\": In the optical flow map, hue gives the direction of motion and brightness gives its strength, using Up=purple, Upper-Right=pink, Right=red, Lower-Right=orange, Down=yellow-green, Lower-Left=green, Left=cyan, Upper-Left=blue. Organize the rationale under these headings:
1. Analysis process: Describe which facial regions move and how, covering the eyebrows, eyelids, nose and upper lip, mouth and chin.
2. Expression reasoning: Relate the combined movements to an emotion.
3. Conclusion: Name the final emotion from: anger, sadness, happiness, fear, disgust, surprise, other, contempt.",
    "Output JSON only, including your reasoning:
\"emotion\": choose from [anger, sadness, happiness, fear, disgust, surprise, other, contempt],
\"rationale\": Read the flow visualization (hue = direction, brightness = intensity; Up=purple, Upper-Right=pink, Right=red, Lower-Right=orange, Down=yellow-green, Lower-Left=green, Left=cyan, Upper-Left=blue) and answer in three parts:
1. Analysis process: List the regions with visible motion and their direction and intensity.
2. Expression reasoning: Explain which emotion these Action Unit movements point to.
3. Conclusion: Give the final emotion from: anger, sadness, happiness, fear, disgust, surprise, other, contempt.",
];

const FLOW_PROMPTS: [&str; 3] = [
    "Using FACS principles, analyze facial motion patterns in the optical flow map. Key regions: eyebrows (brow raising/lowering), eyes (lid movements), nose (nasal changes), mouth (lip movements). Focus on bilateral symmetry and motion intensity. Ignore weak signals and lighting artifacts. Return JSON:
\"aus\": [\"AUXX\",\"AUYY\",...],
\"evidence\": \"region name\": {\"direction\": \"Up|UR|R|LR|D|LL|L|UL\", \"intensity\": \"low|medium|high\"},
\"rationale\": { \"FACS-based systematic analysis\"}.",
    "Identify the active Action Units from the optical flow map. Reference: AU1 raises the inner brow, AU2 the outer brow, AU4 lowers the brows, AU5 raises the upper lid, AU6 raises the cheek, AU7 tightens the lids, AU9 wrinkles the nose, AU10 raises the upper lip, AU12 pulls the lip corners up, AU14 dimples the lip corners, AU15 depresses the lip corners, AU17 raises the chin. Return JSON:
\"aus\": [\"AUXX\",\"AUYY\",...],
\"evidence\": \"region name\": {\"direction\": \"Up|UR|R|LR|D|LL|L|UL\", \"intensity\": \"low|medium|high\"},
\"rationale\": { \"FACS-based systematic analysis\"}.",
    "Examine the optical flow map and report which Action Units are active, based on the direction and strength of regional motion. Discount faint motion and illumination changes. Return JSON:
\"aus\": [\"AUXX\",\"AUYY\",...],
\"evidence\": \"region name\": {\"direction\": \"Up|UR|R|LR|D|LL|L|UL\", \"intensity\": \"low|medium|high\"},
\"rationale\": { \"FACS-based systematic analysis\"}.",
];

pub fn builtin_pools() -> InstructionPools {
    InstructionPools {
        system_prompt: SYSTEM_PROMPT.to_string(),
        emotion: EMOTION_PROMPTS.iter().map(|s| s.to_string()).collect(),
        flow: FLOW_PROMPTS.iter().map(|s| s.to_string()).collect(),
    }
}

/// Deterministic pool position for a sample.
pub fn pool_index(seed: u64, sample_id: &str, pool_len: usize) -> usize {
    if pool_len == 0 {
        return 0;
    }
    (splitmix64(seed ^ fnv1a64(sample_id.as_bytes())) % pool_len as u64) as usize
}

/// Training target in the shape the task's prompt requests.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptTarget {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub emotion: Option<Emotion>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aus: Option<Vec<ActionUnit>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evidence: Option<BTreeMap<String, EvidenceEntry>>,
    pub rationale: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub system_prompt: String,
    pub feature_placeholder: String,
    pub task_id: Task,
    pub pool_index: usize,
    pub user_prompt: String,
    pub target: PromptTarget,
}

impl PromptBundle {
    /// System prompt, feature placeholder, then task token and prompt.
    pub fn input_text(&self) -> String {
        alloc::format!(
            "{}\n{}\n{} {}",
            self.system_prompt,
            self.feature_placeholder,
            self.task_id.token(),
            self.user_prompt
        )
    }
}

pub fn render_prompt(
    triple: &InstructionTriple,
    task: Task,
    seed: u64,
    sample_id: &str,
    pools: &InstructionPools,
) -> PromptBundle {
    let pool = pools.pool(task);
    let idx = pool_index(seed, sample_id, pool.len());
    let target = match task {
        Task::Emotion => PromptTarget {
            emotion: Some(triple.category.emotion),
            aus: None,
            evidence: None,
            rationale: triple.rationale.clone(),
        },
        Task::Flow => PromptTarget {
            emotion: None,
            aus: Some(triple.category.aus.clone()),
            evidence: Some(triple.evidence.clone()),
            rationale: triple.rationale.clone(),
        },
    };
    PromptBundle {
        system_prompt: pools.system_prompt.clone(),
        feature_placeholder: FEATURE_PLACEHOLDER.to_string(),
        task_id: task,
        pool_index: idx,
        user_prompt: pool.get(idx).cloned().unwrap_or_default(),
        target,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountRow {
    pub label: String,
    pub count: u64,
    pub percent: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub total: u64,
    pub emotions: Vec<CountRow>,
    /// Percentages over the sample count; a sample may carry several AUs.
    pub aus: Vec<CountRow>,
    /// Source dataset to per-emotion counts, emotions in table order.
    pub by_source: BTreeMap<String, Vec<u64>>,
}

fn percent(count: u64, total: u64) -> f64 {
    if total == 0 {
        0.0
    } else {
        count as f64 * 100.0 / total as f64
    }
}

/// Distribution tables over records that already went through the taxonomy.
pub fn dataset_stats(records: &[SampleRecord], taxonomy: &Taxonomy) -> DatasetStats {
    let total = records.len() as u64;
    let mut emotion_counts = [0u64; 8];
    let mut au_counts: BTreeMap<ActionUnit, u64> =
        taxonomy.au_whitelist.iter().map(|&au| (au, 0)).collect();
    let mut by_source: BTreeMap<String, Vec<u64>> = BTreeMap::new();
    for r in records {
        let e = taxonomy.map_emotion(&r.gt_emotion);
        let col = Emotion::ALL.iter().position(|&x| x == e).expect("listed");
        emotion_counts[col] += 1;
        by_source
            .entry(r.source_dataset.clone())
            .or_insert_with(|| alloc::vec![0; 8])[col] += 1;
        for au in &r.gt_aus {
            if let Some(c) = au_counts.get_mut(au) {
                *c += 1;
            }
        }
    }
    DatasetStats {
        total,
        emotions: Emotion::ALL
            .iter()
            .zip(emotion_counts)
            .map(|(e, c)| CountRow {
                label: e.as_str().to_string(),
                count: c,
                percent: percent(c, total),
            })
            .collect(),
        aus: au_counts
            .into_iter()
            .map(|(au, c)| CountRow {
                label: alloc::format!("{au}"),
                count: c,
                percent: percent(c, total),
            })
            .collect(),
        by_source,
    }
}

impl DatasetStats {
    /// Plain-text tables: emotions, AUs, then the source cross-tabulation.
    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Emotion distribution (n = {})", self.total);
        for row in &self.emotions {
            let _ = writeln!(
                s,
                "{:<12} {:>7} {:>7.2}%",
                row.label, row.count, row.percent
            );
        }
        let _ = writeln!(s, "\nAU distribution (n = {})", self.total);
        for row in &self.aus {
            let name = row
                .label
                .parse::<ActionUnit>()
                .ok()
                .and_then(ActionUnit::facs_name)
                .unwrap_or("");
            let _ = writeln!(
                s,
                "{:<6} {:<22} {:>7} {:>7.2}%",
                row.label, name, row.count, row.percent
            );
        }
        let _ = write!(s, "\n{:<16}", "Dataset");
        for e in Emotion::ALL {
            let _ = write!(s, " {:>9}", e.as_str());
        }
        let _ = writeln!(s, " {:>7}", "total");
        let mut col_totals = [0u64; 8];
        for (source, counts) in &self.by_source {
            let _ = write!(s, "{source:<16}");
            for (i, c) in counts.iter().enumerate() {
                col_totals[i] += c;
                let _ = write!(s, " {c:>9}");
            }
            let _ = writeln!(s, " {:>7}", counts.iter().sum::<u64>());
        }
        let _ = write!(s, "{:<16}", "total");
        for c in col_totals {
            let _ = write!(s, " {c:>9}");
        }
        let _ = writeln!(s, " {:>7}", self.total);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn record(id: &str, source: &str, aus: &[u8], emotion: &str) -> SampleRecord {
        SampleRecord {
            id: id.to_string(),
            source_dataset: source.to_string(),
            frames: None,
            flow_path: Some("f.flo".to_string()),
            landmarks_path: "l.json".to_string(),
            landmarks_normalized: false,
            gt_aus: aus.iter().map(|&n| ActionUnit(n)).collect(),
            gt_emotion: emotion.to_string(),
            onset: None,
            apex: None,
            offset: None,
        }
    }

    #[test]
    fn taxonomy_filters_and_maps() {
        let tax = builtin_taxonomy();
        let (r, log) = apply_taxonomy(&record("a", "s", &[1, 4, 43], "happy"), &tax);
        assert_eq!(
            r.gt_aus,
            [ActionUnit(1), ActionUnit(4)].into_iter().collect()
        );
        assert_eq!(log.dropped_aus, vec![ActionUnit(43)]);
        assert_eq!(r.gt_emotion, "happiness");
        let (r2, log2) = apply_taxonomy(&r, &tax);
        assert_eq!(r2, r);
        assert!(log2.dropped_aus.is_empty());
        assert_eq!(tax.map_emotion("repression"), Emotion::Other);
        assert_eq!(tax.map_emotion("Something Else"), Emotion::Other);
        for e in Emotion::ALL {
            assert_eq!(tax.map_emotion(e.as_str()), e);
        }
    }

    #[test]
    fn frame_pairs() {
        let mut r = record("a", "s", &[], "fear");
        r.flow_path = None;
        r.frames = Some(vec![
            "0.png".into(),
            "1.png".into(),
            "2.png".into(),
            "3.png".into(),
        ]);
        assert_eq!(r.frame_pair(false), Ok((0, 3)));
        r.onset = Some(1);
        r.apex = Some(2);
        assert_eq!(r.frame_pair(false), Ok((1, 2)));
        assert_eq!(r.frame_pair(true), Ok((1, 2)));
        r.apex = Some(0);
        assert_eq!(r.frame_pair(true), Err(RecordError::NoPreviousFrame));
        r.apex = Some(9);
        assert!(matches!(
            r.validate(),
            Err(RecordError::FrameIndexOutOfRange { .. })
        ));
        r.apex = None;
        r.flow_path = Some("x".into());
        assert_eq!(r.validate(), Err(RecordError::FlowSourceAmbiguous));
    }

    #[test]
    fn pools_follow_contract() {
        let pools = builtin_pools();
        pools.validate().unwrap();
        assert!(pools.emotion.iter().all(|p| p.contains("Up=purple")));
        assert!(pools.flow.iter().all(|p| p.contains("\"aus\"")));
    }

    #[test]
    fn prompt_is_deterministic_and_layered() {
        let triple = InstructionTriple {
            category: Category {
                aus: vec![ActionUnit(4)],
                emotion: Emotion::Disgust,
            },
            evidence: BTreeMap::new(),
            rationale: "r".to_string(),
        };
        let pools = builtin_pools();
        let a = render_prompt(&triple, Task::Flow, 0, "s1", &pools);
        assert_eq!(a, render_prompt(&triple, Task::Flow, 0, "s1", &pools));
        assert!(a.user_prompt.contains("\"aus\""));
        assert_eq!(a.user_prompt, pools.flow[a.pool_index]);
        let text = a.input_text();
        let sys = text.find("You are a micro-expression").unwrap();
        let feat = text.find(FEATURE_PLACEHOLDER).unwrap();
        let task = text.find("[flow] ").unwrap();
        assert!(sys < feat && feat < task);
        let e = render_prompt(&triple, Task::Emotion, 7, "s1", &pools);
        assert!(e.user_prompt.contains("Up=purple"));
        assert_eq!(e.target.emotion, Some(Emotion::Disgust));
        assert!(e.target.aus.is_none());
    }

    #[test]
    fn pool_index_spreads_over_ids() {
        let seen: BTreeSet<usize> = (0..64)
            .map(|i| pool_index(0, &alloc::format!("s{i}"), 3))
            .collect();
        assert_eq!(seen.len(), 3);
    }

    #[test]
    fn stats_hand_tally() {
        let tax = builtin_taxonomy();
        let recs = vec![
            record("1", "A", &[4, 7], "disgust"),
            record("2", "A", &[4], "disgust"),
            record("3", "B", &[12, 6], "happiness"),
            record("4", "B", &[], "other"),
        ];
        let st = dataset_stats(&recs, &tax);
        assert_eq!(st.total, 4);
        let get = |rows: &[CountRow], l: &str| {
            rows.iter()
                .find(|r| r.label == l)
                .map(|r| (r.count, r.percent))
                .unwrap()
        };
        assert_eq!(get(&st.emotions, "disgust"), (2, 50.0));
        assert_eq!(get(&st.emotions, "happiness"), (1, 25.0));
        assert_eq!(get(&st.aus, "AU4"), (2, 50.0));
        assert_eq!(get(&st.aus, "AU1"), (0, 0.0));
        assert_eq!(st.by_source["A"], vec![0, 0, 0, 0, 0, 2, 0, 0]);
        let sum: f64 = st.emotions.iter().map(|r| r.percent).sum();
        assert!((sum - 100.0).abs() < 0.05);
        assert!(st.render().contains("disgust"));
    }
}
