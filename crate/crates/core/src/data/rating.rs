//! Likert ratings and the label-construction rules applied to them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One proto-role annotation: an integer 1–5 or "not applicable".
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Rating {
    Likert(u8),
    NotApplicable,
}

impl Rating {
    /// Every admissible rating.
    pub const ALL: [Rating; 6] = [
        Rating::Likert(1),
        Rating::Likert(2),
        Rating::Likert(3),
        Rating::Likert(4),
        Rating::Likert(5),
        Rating::NotApplicable,
    ];

    /// Spelling of [`Rating::NotApplicable`] in dataset files.
    pub const NA_TOKEN: &'static str = "NA";

    pub fn likert(value: u8) -> Result<Self> {
        if (1..=5).contains(&value) {
            Ok(Rating::Likert(value))
        } else {
            Err(Error::Domain(format!("rating {value} outside 1..=5")))
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        if text == Self::NA_TOKEN {
            return Ok(Rating::NotApplicable);
        }
        text.parse::<u8>()
            .map_err(|_| Error::Domain(format!("invalid rating {text:?}")))
            .and_then(Rating::likert)
    }
}

impl fmt::Display for Rating {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Rating::Likert(v) => write!(f, "{v}"),
            Rating::NotApplicable => f.write_str(Self::NA_TOKEN),
        }
    }
}

/// 4 and 5 hold; 1, 2, 3 and N/A do not.
pub fn map_binary(rating: Rating) -> bool {
    matches!(rating, Rating::Likert(4) | Rating::Likert(5))
}

/// N/A counts as 1; other ratings keep their value.
pub fn map_scalar(rating: Rating) -> f64 {
    match rating {
        Rating::Likert(v) => f64::from(v),
        Rating::NotApplicable => 1.0,
    }
}

/// Mean of the scalar values of two redundant annotations.
pub fn merge_redundant(first: Rating, second: Rating) -> f64 {
    (map_scalar(first) + map_scalar(second)) / 2.0
}

/// Binary cut-point on the scalar scale: strictly greater than 3.
pub fn binarize_scalar(value: f64) -> bool {
    value > 3.0
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LabelMode {
    Binary,
    Scalar,
}

impl fmt::Display for LabelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LabelMode::Binary => "binary",
            LabelMode::Scalar => "scalar",
        })
    }
}

impl std::str::FromStr for LabelMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(LabelMode::Binary),
            "scalar" => Ok(LabelMode::Scalar),
            other => Err(Error::Config(format!(
                "unknown label mode {other:?} (expected binary or scalar)"
            ))),
        }
    }
}

/// A property label after mode conversion.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Label {
    Binary(bool),
    Scalar(f64),
}

impl Label {
    pub fn as_bool(self) -> Option<bool> {
        match self {
            Label::Binary(b) => Some(b),
            Label::Scalar(_) => None,
        }
    }

    pub fn as_scalar(self) -> Option<f64> {
        match self {
            Label::Scalar(v) => Some(v),
            Label::Binary(_) => None,
        }
    }
}
