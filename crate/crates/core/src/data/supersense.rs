//! Supersense label distributions built from per-annotator word-sense selections.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use crate::error::{Error, Result};

/// The 26 coarse WordNet noun supersenses.
pub const SUPERSENSES: [&str; 26] = [
    "noun.Tops",
    "noun.act",
    "noun.animal",
    "noun.artifact",
    "noun.attribute",
    "noun.body",
    "noun.cognition",
    "noun.communication",
    "noun.event",
    "noun.feeling",
    "noun.food",
    "noun.group",
    "noun.location",
    "noun.motive",
    "noun.object",
    "noun.person",
    "noun.phenomenon",
    "noun.plant",
    "noun.possession",
    "noun.process",
    "noun.quantity",
    "noun.relation",
    "noun.shape",
    "noun.state",
    "noun.substance",
    "noun.time",
];

/// Index of a supersense name; the `noun.` prefix is optional.
pub fn supersense_index(name: &str) -> Option<usize> {
    let bare = name.strip_prefix("noun.").unwrap_or(name);
    SUPERSENSES
        .iter()
        .position(|s| s.strip_prefix("noun.").unwrap() == bare)
}

/// Probability vector over [`SUPERSENSES`].
#[derive(Clone, Debug, PartialEq)]
pub struct SupersenseDistribution(Vec<f64>);

impl SupersenseDistribution {
    pub const TOLERANCE: f64 = 1e-9;

    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() != SUPERSENSES.len() {
            return Err(Error::Dimension {
                op: "supersense_distribution",
                lhs: vec![SUPERSENSES.len()],
                rhs: vec![probs.len()],
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::data("supersense distribution has a negative or non-finite entry"));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > Self::TOLERANCE {
            return Err(Error::data(format!(
                "supersense distribution sums to {total}, not 1"
            )));
        }
        Ok(SupersenseDistribution(probs))
    }

    /// Normalizes non-negative per-supersense weights (e.g. annotator counts).
    pub fn from_weights(weights: &BTreeMap<String, f64>) -> Result<Self> {
        let mut probs = vec![0.0; SUPERSENSES.len()];
        for (name, w) in weights {
            let i = supersense_index(name)
                .ok_or_else(|| Error::data(format!("unknown supersense {name:?}")))?;
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::data(format!("invalid weight {w} for supersense {name:?}")));
            }
            probs[i] += w;
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::data("supersense weights are all zero"));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Ok(SupersenseDistribution(probs))
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn entropy(&self) -> f64 {
        -self
            .0
            .iter()
            .filter(|p| **p > 0.0)
            .map(|p| p * p.ln())
            .sum::<f64>()
    }

    pub fn perplexity(&self) -> f64 {
        self.entropy().exp()
    }

    /// Non-zero entries keyed by supersense name.
    pub fn to_weights(&self) -> BTreeMap<String, f64> {
        self.0
            .iter()
            .enumerate()
            .filter(|(_, p)| **p > 0.0)
            .map(|(i, p)| (SUPERSENSES[i].to_string(), *p))
            .collect()
    }
}

/// Fine-grained sense → supersense(s).
#[derive(Clone, Debug, Default)]
pub struct SenseMap(HashMap<String, BTreeSet<usize>>);

impl SenseMap {
    pub fn insert(&mut self, sense: impl Into<String>, supersense: &str) -> Result<()> {
        let i = supersense_index(supersense)
            .ok_or_else(|| Error::data(format!("unknown supersense {supersense:?}")))?;
        self.0.entry(sense.into()).or_default().insert(i);
        Ok(())
    }

    pub fn get(&self, sense: &str) -> Option<&BTreeSet<usize>> {
        self.0.get(sense)
    }

    /// Two whitespace-separated columns per line: fine sense, supersense.
    /// A sense may appear on several lines. `#` starts a comment line.
    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(std::io::BufReader::new(file), &path.display().to_string())
    }

    pub fn from_reader<R: BufRead>(reader: R, source_name: &str) -> Result<Self> {
        let mut map = SenseMap::default();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [sense, supersense] = fields[..] else {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: n + 1,
                    message: format!("expected 2 columns, found {}", fields.len()),
                });
            };
            map.insert(sense, supersense).map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                line: n + 1,
                message: e.to_string(),
            })?;
        }
        Ok(map)
    }
}

/// Builds a gold distribution from each annotator's selected fine senses.
///
/// A supersense's weight is the number of annotators who selected at least
/// one sense mapping to it; an annotator counts at most once per supersense.
pub fn supersense_distribution(
    selections: &[Vec<String>],
    map: &SenseMap,
) -> Result<SupersenseDistribution> {
    if selections.iter().all(|s| s.is_empty()) {
        return Err(Error::data("no word senses selected by any annotator"));
    }
    let mut counts = vec![0.0; SUPERSENSES.len()];
    for annotator in selections {
        let mut hit = BTreeSet::new();
        for sense in annotator {
            let targets = map.get(sense).ok_or_else(|| Error::Lookup {
                key: sense.clone(),
                context: "sense map".into(),
            })?;
            hit.extend(targets.iter().copied());
        }
        for i in hit {
            counts[i] += 1.0;
        }
    }
    let total: f64 = counts.iter().sum();
    counts.iter_mut().for_each(|c| *c /= total);
    SupersenseDistribution::new(counts)
}
