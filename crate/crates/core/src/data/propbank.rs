//! Sense-independent PropBank role labels.

use std::collections::HashMap;
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

/// The 16 abstract PropBank function tags predicted by the role decoder.
pub const PROPBANK_LABELS: [&str; 16] = [
    "PAG", "PPT", "GOL", "LOC", "DIR", "MNR", "TMP", "EXT", "PRP", "CAU", "COM", "ADV", "ADJ",
    "PRD", "REC", "VSP",
];

pub fn propbank_index(label: &str) -> Option<usize> {
    PROPBANK_LABELS.iter().position(|l| *l == label)
}

/// `(predicate sense, sense-specific label)` → abstract label, from frame files.
#[derive(Clone, Debug, Default)]
pub struct FrameMap(HashMap<(String, String), usize>);

impl FrameMap {
    pub fn insert(&mut self, predicate_sense: &str, label: &str, abstract_label: &str) -> Result<()> {
        let i = propbank_index(abstract_label)
            .ok_or_else(|| Error::data(format!("unknown abstract role {abstract_label:?}")))?;
        self.0
            .insert((predicate_sense.to_string(), label.to_string()), i);
        Ok(())
    }

    /// Two whitespace-separated columns: `<sense>:<label>` and the abstract label,
    /// e.g. `eat.01:ARG0 PAG`.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn from_reader<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut map = FrameMap::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                source_name: source_name.to_string(),
                line: n + 1,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [key, abstract_label] = fields[..] else {
                return Err(parse_err(format!("expected 2 columns, found {}", fields.len())));
            };
            let Some((sense, label)) = key.rsplit_once(':') else {
                return Err(parse_err(format!("key {key:?} is not <sense>:<label>")));
            };
            map.insert(sense, label, abstract_label)
                .map_err(|e| parse_err(e.to_string()))?;
        }
        Ok(map)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Maps a sense-specific label (e.g. `ARG0` of `eat.01`) to its abstract role index.
pub fn map_propbank(label: &str, predicate_sense: &str, frames: &FrameMap) -> Result<usize> {
    frames
        .0
        .get(&(predicate_sense.to_string(), label.to_string()))
        .copied()
        .ok_or_else(|| Error::Lookup {
            key: label.to_string(),
            context: predicate_sense.to_string(),
        })
}
