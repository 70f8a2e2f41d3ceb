//! JSON Lines dataset records.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::rating::{binarize_scalar, map_binary, map_scalar, merge_redundant, Label, LabelMode, Rating};
use crate::error::{Error, Result};

/// A property value as it appears in a file.
///
/// Raw files carry single ratings (`4`, `"NA"`) or two-way redundant pairs
/// (`[4, "NA"]`); prepared files carry booleans or reals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum LabelValue {
    Rating(Rating),
    Pair(Rating, Rating),
    Binary(bool),
    Scalar(f64),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawRating {
    Int(u64),
    Text(String),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RawValue {
    Bool(bool),
    Int(u64),
    Float(f64),
    Text(String),
    Pair(Vec<RawRating>),
}

fn rating_from_raw(raw: RawRating) -> Result<Rating> {
    match raw {
        RawRating::Int(v) => u8::try_from(v)
            .map_err(|_| Error::Domain(format!("rating {v} outside 1..=5")))
            .and_then(Rating::likert),
        RawRating::Text(t) => Rating::parse(&t),
    }
}

fn rating_to_raw(r: Rating) -> RawRating {
    match r {
        Rating::Likert(v) => RawRating::Int(u64::from(v)),
        Rating::NotApplicable => RawRating::Text(Rating::NA_TOKEN.to_string()),
    }
}

impl TryFrom<RawValue> for LabelValue {
    type Error = Error;

    fn try_from(raw: RawValue) -> Result<Self> {
        Ok(match raw {
            RawValue::Bool(b) => LabelValue::Binary(b),
            RawValue::Int(v) => LabelValue::Rating(rating_from_raw(RawRating::Int(v))?),
            RawValue::Text(t) => LabelValue::Rating(Rating::parse(&t)?),
            RawValue::Float(v) => LabelValue::Scalar(v),
            RawValue::Pair(items) => {
                let n = items.len();
                let mut it = items.into_iter();
                match (it.next(), it.next(), it.next()) {
                    (Some(a), Some(b), None) => {
                        LabelValue::Pair(rating_from_raw(a)?, rating_from_raw(b)?)
                    }
                    _ => {
                        return Err(Error::Domain(format!(
                            "redundant annotation needs exactly 2 ratings, found {n}"
                        )))
                    }
                }
            }
        })
    }
}

impl From<LabelValue> for RawValue {
    fn from(v: LabelValue) -> Self {
        match v {
            LabelValue::Rating(r) => match rating_to_raw(r) {
                RawRating::Int(i) => RawValue::Int(i),
                RawRating::Text(t) => RawValue::Text(t),
            },
            LabelValue::Pair(a, b) => RawValue::Pair(vec![rating_to_raw(a), rating_to_raw(b)]),
            LabelValue::Binary(b) => RawValue::Bool(b),
            LabelValue::Scalar(x) => RawValue::Float(x),
        }
    }
}

impl Serialize for LabelValue {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        RawValue::from(*self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for LabelValue {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawValue::deserialize(d)?;
        LabelValue::try_from(raw).map_err(serde::de::Error::custom)
    }
}

impl LabelValue {
    /// Applies the label-construction rule for `mode`.
    pub fn to_label(self, mode: LabelMode) -> Result<Label> {
        match (mode, self) {
            (LabelMode::Binary, LabelValue::Rating(r)) => Ok(Label::Binary(map_binary(r))),
            (LabelMode::Binary, LabelValue::Pair(a, b)) => {
                Ok(Label::Binary(binarize_scalar(merge_redundant(a, b))))
            }
            (LabelMode::Binary, LabelValue::Binary(b)) => Ok(Label::Binary(b)),
            (LabelMode::Binary, LabelValue::Scalar(x)) => {
                check_scalar(x)?;
                Ok(Label::Binary(binarize_scalar(x)))
            }
            (LabelMode::Scalar, LabelValue::Rating(r)) => Ok(Label::Scalar(map_scalar(r))),
            (LabelMode::Scalar, LabelValue::Pair(a, b)) => {
                Ok(Label::Scalar(merge_redundant(a, b)))
            }
            (LabelMode::Scalar, LabelValue::Scalar(x)) => {
                check_scalar(x)?;
                Ok(Label::Scalar(x))
            }
            (LabelMode::Scalar, LabelValue::Binary(_)) => Err(Error::Domain(
                "a boolean label cannot be used in scalar mode".into(),
            )),
        }
    }

    pub fn from_label(label: Label) -> Self {
        match label {
            Label::Binary(b) => LabelValue::Binary(b),
            Label::Scalar(x) => LabelValue::Scalar(x),
        }
    }
}

fn check_scalar(x: f64) -> Result<()> {
    if (1.0..=5.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain(format!("scalar label {x} outside [1, 5]")))
    }
}

/// One line of a dataset file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Record {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub pred_head: usize,
    pub arg_head: usize,
    #[serde(default)]
    pub labels: BTreeMap<String, LabelValue>,
    /// Supersense name → annotator count (or probability once prepared).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub supersense: Option<BTreeMap<String, f64>>,
    /// Raw word-sense selections, one list per annotator.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wsd: Option<Vec<Vec<String>>>,
    /// Abstract role (`PAG`) or, together with `propbank_sense`, a sense-specific label (`ARG0`).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propbank_role: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub propbank_sense: Option<String>,
}

/// Parses JSON Lines, collecting one diagnostic per bad line.
pub fn parse_jsonl<T, R>(reader: R, source_name: &str) -> Result<Vec<T>>
where
    T: serde::de::DeserializeOwned,
    R: BufRead,
{
    let mut out = Vec::new();
    let mut diagnostics = Vec::new();
    for (n, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str::<T>(&line) {
            Ok(v) => out.push(v),
            Err(e) => diagnostics.push(format!("{source_name}:{}: {e}", n + 1)),
        }
    }
    if !diagnostics.is_empty() {
        return Err(Error::Data(diagnostics));
    }
    Ok(out)
}

pub fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    parse_jsonl(std::io::BufReader::new(file), &path.display().to_string())
}

pub fn write_jsonl<T: Serialize, W: Write>(items: &[T], mut writer: W) -> Result<()> {
    for item in items {
        serde_json::to_writer(&mut writer, item)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()?;
    Ok(())
}

pub fn save_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_jsonl(items, std::io::BufWriter::new(file))
}
