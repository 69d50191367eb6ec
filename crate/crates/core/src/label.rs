use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Number of style-transfer inputs behind an image: one pass (source +
/// target) or two passes (source + two targets).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    #[serde(rename = "Deepfake-2")]
    Deepfake2,
    #[serde(rename = "Deepfake-3")]
    Deepfake3,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::Deepfake2, Label::Deepfake3];

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Deepfake2 => "Deepfake-2",
            Label::Deepfake3 => "Deepfake-3",
        }
    }

    pub fn index(self) -> usize {
        match self {
            Label::Deepfake2 => 0,
            Label::Deepfake3 => 1,
        }
    }

    pub fn from_index(i: usize) -> Label {
        if i == 0 {
            Label::Deepfake2
        } else {
            Label::Deepfake3
        }
    }

    /// Sign convention for margin-based models: Deepfake-2 is -1.
    pub fn sign(self) -> f64 {
        match self {
            Label::Deepfake2 => -1.0,
            Label::Deepfake3 => 1.0,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("unknown class label {0:?}")]
pub struct ParseLabelError(pub String);

impl FromStr for Label {
    type Err = ParseLabelError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "Deepfake-2" | "deepfake-2" | "2" => Ok(Label::Deepfake2),
            "Deepfake-3" | "deepfake-3" | "3" => Ok(Label::Deepfake3),
            other => Err(ParseLabelError(other.to_string())),
        }
    }
}
