//! In-memory datasets of predicate-argument instances.

use std::collections::BTreeSet;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::catalog::PropertyCatalog;
use super::propbank::{map_propbank, propbank_index, FrameMap, PROPBANK_LABELS};
use super::rating::{Label, LabelMode};
use super::record::{read_jsonl, save_jsonl, LabelValue, Record};
use super::supersense::{supersense_distribution, SenseMap, SupersenseDistribution};
use crate::error::{Error, Result};

/// One predicate-argument pair in its sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub sentence_id: String,
    pub tokens: Vec<String>,
    pub pred_head: usize,
    pub arg_head: usize,
    /// One entry per catalog property; `None` masks a property out of the loss.
    pub labels: Vec<Option<Label>>,
    pub supersense: Option<SupersenseDistribution>,
    pub propbank_role: Option<usize>,
}

impl Instance {
    pub fn id(&self) -> String {
        format!("{}:{}:{}", self.sentence_id, self.pred_head, self.arg_head)
    }

    pub fn label(&self, property: usize) -> Option<Label> {
        self.labels.get(property).copied().flatten()
    }

    fn validate(&self) -> Result<()> {
        let n = self.tokens.len();
        if n == 0 {
            return Err(Error::data("empty token sequence"));
        }
        for (what, i) in [("pred_head", self.pred_head), ("arg_head", self.arg_head)] {
            if i >= n {
                return Err(Error::data(format!("{what} {i} out of range for {n} tokens")));
            }
        }
        for l in self.labels.iter().flatten() {
            if let Label::Scalar(x) = l {
                if !(1.0..=5.0).contains(x) {
                    return Err(Error::data(format!("scalar label {x} outside [1, 5]")));
                }
            }
        }
        Ok(())
    }
}

/// Optional lookups used to resolve raw auxiliary annotations.
#[derive(Default)]
pub struct Resolvers<'a> {
    pub senses: Option<&'a SenseMap>,
    pub frames: Option<&'a FrameMap>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub mode: LabelMode,
    pub catalog: PropertyCatalog,
    pub instances: Vec<Instance>,
}

impl Dataset {
    /// Converts file records to instances.
    ///
    /// When `catalog` is `None` it is taken from the sorted label keys, which
    /// must then agree across records. Every catalog property must be labeled
    /// on every record. Problems are collected per record.
    pub fn from_records(
        records: &[Record],
        mode: LabelMode,
        catalog: Option<&PropertyCatalog>,
        resolvers: &Resolvers<'_>,
    ) -> Result<Self> {
        let catalog = match catalog {
            Some(c) => c.clone(),
            None => {
                let keys: Vec<String> = records
                    .first()
                    .map(|r| r.labels.keys().cloned().collect())
                    .unwrap_or_default();
                PropertyCatalog::new(keys)?
            }
        };
        let mut instances = Vec::with_capacity(records.len());
        let mut diagnostics = Vec::new();
        for (i, r) in records.iter().enumerate() {
            match instance_from_record(r, mode, &catalog, resolvers) {
                Ok(inst) => instances.push(inst),
                Err(e) => diagnostics.push(format!(
                    "record {} ({}): {}",
                    i + 1,
                    r.sentence_id,
                    flatten_message(&e)
                )),
            }
        }
        if !diagnostics.is_empty() {
            return Err(Error::Data(diagnostics));
        }
        Ok(Dataset {
            mode,
            catalog,
            instances,
        })
    }

    pub fn load(
        path: &Path,
        mode: LabelMode,
        catalog: Option<&PropertyCatalog>,
        resolvers: &Resolvers<'_>,
    ) -> Result<Self> {
        let records: Vec<Record> = read_jsonl(path)?;
        if records.is_empty() {
            return Err(Error::data(format!("{}: no records", path.display())));
        }
        Self::from_records(&records, mode, catalog, resolvers).map_err(|e| match e {
            Error::Data(d) => Error::Data(
                d.into_iter()
                    .map(|m| format!("{}: {m}", path.display()))
                    .collect(),
            ),
            other => other,
        })
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Prepared records: labels as booleans or reals, supersenses as
    /// probabilities, PropBank roles abstract.
    pub fn to_records(&self) -> Vec<Record> {
        self.instances
            .iter()
            .map(|inst| Record {
                sentence_id: inst.sentence_id.clone(),
                tokens: inst.tokens.clone(),
                pred_head: inst.pred_head,
                arg_head: inst.arg_head,
                labels: self
                    .catalog
                    .names()
                    .iter()
                    .zip(&inst.labels)
                    .filter_map(|(name, l)| l.map(|l| (name.clone(), LabelValue::from_label(l))))
                    .collect(),
                supersense: inst.supersense.as_ref().map(|d| d.to_weights()),
                wsd: None,
                propbank_role: inst.propbank_role.map(|r| PROPBANK_LABELS[r].to_string()),
                propbank_sense: None,
            })
            .collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_jsonl(&self.to_records(), path)
    }

    /// Distinct tokens, lowercased.
    pub fn vocabulary(&self) -> BTreeSet<String> {
        self.instances
            .iter()
            .flat_map(|i| i.tokens.iter().map(|t| t.to_lowercase()))
            .collect()
    }
}

fn flatten_message(e: &Error) -> String {
    match e {
        Error::Data(d) => d.join("; "),
        other => other.to_string(),
    }
}

fn instance_from_record(
    r: &Record,
    mode: LabelMode,
    catalog: &PropertyCatalog,
    resolvers: &Resolvers<'_>,
) -> Result<Instance> {
    let mut labels = Vec::with_capacity(catalog.len());
    let mut missing = Vec::new();
    for name in catalog.names() {
        match r.labels.get(name) {
            Some(v) => labels.push(Some(v.to_label(mode)?)),
            None => {
                missing.push(name.as_str());
                labels.push(None);
            }
        }
    }
    if !missing.is_empty() {
        return Err(Error::data(format!("missing labels for {missing:?}")));
    }
    if let Some(extra) = r.labels.keys().find(|k| catalog.index_of(k).is_none()) {
        return Err(Error::data(format!("property {extra:?} is not in the catalog")));
    }

    let supersense = match (&r.supersense, &r.wsd) {
        (Some(w), _) => Some(SupersenseDistribution::from_weights(w)?),
        (None, Some(sel)) => {
            let map = resolvers
                .senses
                .ok_or_else(|| Error::Config("word-sense selections need a sense map".into()))?;
            Some(supersense_distribution(sel, map)?)
        }
        (None, None) => None,
    };

    let propbank_role = match (&r.propbank_role, &r.propbank_sense) {
        (None, _) => None,
        (Some(role), None) => Some(
            propbank_index(role)
                .ok_or_else(|| Error::data(format!("unknown abstract role {role:?}")))?,
        ),
        (Some(role), Some(sense)) => {
            let frames = resolvers
                .frames
                .ok_or_else(|| Error::Config("sense-specific roles need a frame map".into()))?;
            Some(map_propbank(role, sense, frames)?)
        }
    };

    let inst = Instance {
        sentence_id: r.sentence_id.clone(),
        tokens: r.tokens.clone(),
        pred_head: r.pred_head,
        arg_head: r.arg_head,
        labels,
        supersense,
        propbank_role,
    };
    inst.validate()?;
    Ok(inst)
}

/// A source/target sentence pair for translation pretraining.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SentencePair {
    pub source: Vec<String>,
    pub target: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParallelCorpus {
    pub pairs: Vec<SentencePair>,
}

impl ParallelCorpus {
    pub fn load(path: &Path) -> Result<Self> {
        let pairs: Vec<SentencePair> = read_jsonl(path)?;
        let corpus = ParallelCorpus { pairs };
        corpus.validate(&path.display().to_string())?;
        Ok(corpus)
    }

    pub fn validate(&self, source_name: &str) -> Result<()> {
        if self.pairs.is_empty() {
            return Err(Error::data(format!("{source_name}: no sentence pairs")));
        }
        let diagnostics: Vec<String> = self
            .pairs
            .iter()
            .enumerate()
            .filter(|(_, p)| p.source.is_empty() || p.target.is_empty())
            .map(|(i, _)| format!("{source_name}: pair {} has an empty side", i + 1))
            .collect();
        if diagnostics.is_empty() {
            Ok(())
        } else {
            Err(Error::Data(diagnostics))
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        save_jsonl(&self.pairs, path)
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn source_vocabulary(&self) -> BTreeSet<String> {
        self.pairs
            .iter()
            .flat_map(|p| p.source.iter().map(|t| t.to_lowercase()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::rating::Rating;

    fn record(labels: &[(&str, LabelValue)]) -> Record {
        Record {
            sentence_id: "s1".into(),
            tokens: vec!["He".into(), "sits".into()],
            pred_head: 1,
            arg_head: 0,
            labels: labels.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            supersense: None,
            wsd: None,
            propbank_role: None,
            propbank_sense: None,
        }
    }

    #[test]
    fn catalog_inferred_from_sorted_keys() {
        let r = record(&[
            ("volition", LabelValue::Rating(Rating::Likert(5))),
            ("awareness", LabelValue::Rating(Rating::Likert(2))),
        ]);
        let ds = Dataset::from_records(&[r], LabelMode::Binary, None, &Resolvers::default()).unwrap();
        assert_eq!(ds.catalog.names(), ["awareness", "volition"]);
        assert_eq!(
            ds.instances[0].labels,
            vec![Some(Label::Binary(false)), Some(Label::Binary(true))]
        );
        assert_eq!(ds.instances[0].id(), "s1:1:0");
    }

    #[test]
    fn missing_label_and_bad_head_are_diagnosed() {
        let a = record(&[("x", LabelValue::Rating(Rating::Likert(5)))]);
        let b = record(&[]);
        let mut c = record(&[("x", LabelValue::Rating(Rating::Likert(5)))]);
        c.arg_head = 9;
        let cat = PropertyCatalog::new(vec!["x".into()]).unwrap();
        match Dataset::from_records(&[a, b, c], LabelMode::Binary, Some(&cat), &Resolvers::default())
        {
            Err(Error::Data(d)) => {
                assert_eq!(d.len(), 2);
                assert!(d[0].starts_with("record 2"));
                assert!(d[1].contains("arg_head 9"));
            }
            other => panic!("expected data error, got {other:?}"),
        }
    }
}
