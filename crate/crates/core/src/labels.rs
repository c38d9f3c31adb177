//! Action Unit and emotion labels.

use alloc::string::{String, ToString};
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// The twelve Action Units retained by the taxonomy.
pub const CORE_AUS: [u8; 12] = [1, 2, 4, 5, 6, 7, 9, 10, 12, 14, 15, 17];

/// A FACS Action Unit, e.g. `AU4`.
///
/// Any AU number parses; membership in the retained set is a taxonomy
/// question, see [`ActionUnit::is_core`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActionUnit(pub u8);

impl ActionUnit {
    pub fn number(self) -> u8 {
        self.0
    }

    pub fn is_core(self) -> bool {
        CORE_AUS.contains(&self.0)
    }

    pub fn core() -> impl Iterator<Item = ActionUnit> {
        CORE_AUS.iter().map(|&n| ActionUnit(n))
    }

    /// FACS name for the retained AUs.
    pub fn facs_name(self) -> Option<&'static str> {
        Some(match self.0 {
            1 => "Inner Brow Raiser",
            2 => "Outer Brow Raiser",
            4 => "Brow Lowerer",
            5 => "Upper Lid Raiser",
            6 => "Cheek Raiser",
            7 => "Lid Tightener",
            9 => "Nose Wrinkler",
            10 => "Upper Lip Raiser",
            12 => "Lip Corner Puller",
            14 => "Dimpler",
            15 => "Lip Corner Depressor",
            17 => "Chin Raiser",
            _ => return None,
        })
    }
}

impl fmt::Display for ActionUnit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "AU{}", self.0)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseLabelError(pub String);

impl fmt::Display for ParseLabelError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unrecognized label {:?}", self.0)
    }
}

impl core::error::Error for ParseLabelError {}

impl FromStr for ActionUnit {
    type Err = ParseLabelError;

    /// Accepts `AU4`, `au04`, `4`, and FACS intensity suffixes such as `AU4B`
    /// or lateral prefixes such as `L12` / `R14`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let body = if t.len() >= 2 && t[..2].eq_ignore_ascii_case("au") {
            &t[2..]
        } else if t.len() >= 2
            && (t.starts_with('L')
                || t.starts_with('R')
                || t.starts_with('l')
                || t.starts_with('r'))
            && t.as_bytes()[1].is_ascii_digit()
        {
            &t[1..]
        } else {
            t
        };
        let digits: &str = {
            let end = body
                .char_indices()
                .find(|(_, c)| !c.is_ascii_digit())
                .map(|(i, _)| i)
                .unwrap_or(body.len());
            &body[..end]
        };
        let rest = &body[digits.len()..];
        let suffix_ok =
            rest.is_empty() || (rest.len() == 1 && rest.as_bytes()[0].is_ascii_alphabetic());
        if digits.is_empty() || !suffix_ok {
            return Err(ParseLabelError(s.to_string()));
        }
        digits
            .parse::<u8>()
            .map(ActionUnit)
            .map_err(|_| ParseLabelError(s.to_string()))
    }
}

impl Serialize for ActionUnit {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for ActionUnit {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct Visitor;
        impl serde::de::Visitor<'_> for Visitor {
            type Value = ActionUnit;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an AU label such as \"AU4\" or an integer")
            }
            fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<ActionUnit, E> {
                u8::try_from(v)
                    .map(ActionUnit)
                    .map_err(|_| E::custom("AU number out of range"))
            }
            fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<ActionUnit, E> {
                u8::try_from(v)
                    .map(ActionUnit)
                    .map_err(|_| E::custom("AU number out of range"))
            }
            fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<ActionUnit, E> {
                v.parse().map_err(E::custom)
            }
        }
        deserializer.deserialize_any(Visitor)
    }
}

/// The eight target emotion classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Emotion {
    Happiness,
    Sadness,
    Surprise,
    Fear,
    Anger,
    Disgust,
    Contempt,
    Other,
}

impl Emotion {
    /// Column order used by the distribution tables.
    pub const ALL: [Emotion; 8] = [
        Emotion::Happiness,
        Emotion::Sadness,
        Emotion::Surprise,
        Emotion::Fear,
        Emotion::Anger,
        Emotion::Disgust,
        Emotion::Contempt,
        Emotion::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Emotion::Happiness => "happiness",
            Emotion::Sadness => "sadness",
            Emotion::Surprise => "surprise",
            Emotion::Fear => "fear",
            Emotion::Anger => "anger",
            Emotion::Disgust => "disgust",
            Emotion::Contempt => "contempt",
            Emotion::Other => "other",
        }
    }

    /// Exact canonical name or one of the built-in synonyms.
    pub fn from_alias(label: &str) -> Option<Emotion> {
        let lower = label.trim().to_ascii_lowercase();
        let e = match lower.as_str() {
            "happiness" | "happy" | "joy" | "positive" => Emotion::Happiness,
            "sadness" | "sad" | "sorrow" => Emotion::Sadness,
            "surprise" | "surprised" => Emotion::Surprise,
            "fear" | "fearful" | "afraid" | "fright" => Emotion::Fear,
            "anger" | "angry" => Emotion::Anger,
            "disgust" | "disgusted" | "disgusting" => Emotion::Disgust,
            "contempt" | "contemptuous" => Emotion::Contempt,
            "other" | "others" => Emotion::Other,
            _ => return None,
        };
        Some(e)
    }
}

impl fmt::Display for Emotion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Emotion {
    type Err = ParseLabelError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Emotion::from_alias(s).ok_or_else(|| ParseLabelError(s.to_string()))
    }
}
