//! Per-property and aggregate metric reports for SPR predictions.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::metrics::{aggregate, f1, pearson, BinaryCounts, Correlation};
use crate::data::{binarize_scalar, Instance, Label, LabelMode, PropertyCatalog};
use crate::decoders::binary_prob;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyMetrics {
    pub property: String,
    pub n: usize,
    pub counts: BinaryCounts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Scalar mode only.
    pub pearson: Option<f64>,
    /// False when the correlation was undefined and reported as 0.
    pub pearson_defined: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub split: String,
    pub epoch: Option<usize>,
    pub mode: LabelMode,
    pub properties: Vec<PropertyMetrics>,
    pub micro_f1: f64,
    pub macro_f1: f64,
    /// Scalar mode only; undefined correlations count as 0.
    pub macro_pearson: Option<f64>,
}

/// One row of the long-format metrics table.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub split: String,
    pub epoch: String,
    pub property: String,
    pub metric: String,
    pub value: f64,
}

/// Score for one property of one instance as written to a predictions file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionRow {
    pub instance_id: String,
    pub property: String,
    pub score: f64,
    pub probability: Option<f64>,
    /// `true`/`false` in binary mode; the raw score in scalar mode.
    pub prediction: String,
    pub gold: String,
}

/// Per-property predicted and gold values, unlabeled pairs dropped.
struct Columns {
    scores: Vec<Vec<f64>>,
    golds: Vec<Vec<Label>>,
}

fn columns(catalog: &PropertyCatalog, instances: &[Instance], scores: &[Vec<f64>]) -> Result<Columns> {
    if instances.len() != scores.len() {
        return Err(Error::Contract(format!(
            "{} score vectors for {} instances",
            scores.len(),
            instances.len()
        )));
    }
    let p = catalog.len();
    let mut out = Columns {
        scores: vec![Vec::new(); p],
        golds: vec![Vec::new(); p],
    };
    for (inst, s) in instances.iter().zip(scores) {
        if s.len() != p || inst.labels.len() != p {
            return Err(Error::Contract(format!(
                "instance {} has {} scores and {} labels for {p} properties",
                inst.id(),
                s.len(),
                inst.labels.len()
            )));
        }
        for k in 0..p {
            if let Some(l) = inst.labels[k] {
                out.scores[k].push(s[k]);
                out.golds[k].push(l);
            }
        }
    }
    Ok(out)
}

fn build(
    catalog: &PropertyCatalog,
    mode: LabelMode,
    cols: Columns,
    split: &str,
    epoch: Option<usize>,
) -> Result<MetricsReport> {
    let mut properties = Vec::with_capacity(catalog.len());
    let mut all_counts = Vec::with_capacity(catalog.len());
    for (k, name) in catalog.names().iter().enumerate() {
        let scores = &cols.scores[k];
        let golds = &cols.golds[k];
        let mut counts = BinaryCounts::default();
        let mut correlation = None;
        match mode {
            LabelMode::Binary => {
                for (s, g) in scores.iter().zip(golds) {
                    let g = g.as_bool().ok_or_else(|| {
                        Error::Contract(format!("scalar gold label for {name:?} in binary mode"))
                    })?;
                    counts.record(*s > 0.0, g);
                }
            }
            LabelMode::Scalar => {
                let gs: Vec<f64> = golds
                    .iter()
                    .map(|g| {
                        g.as_scalar().ok_or_else(|| {
                            Error::Contract(format!("binary gold label for {name:?} in scalar mode"))
                        })
                    })
                    .collect::<Result<_>>()?;
                for (s, g) in scores.iter().zip(&gs) {
                    counts.record(binarize_scalar(*s), binarize_scalar(*g));
                }
                correlation = Some(pearson(scores, &gs)?);
            }
        }
        let prf = f1(&counts);
        all_counts.push(counts);
        properties.push(PropertyMetrics {
            property: name.clone(),
            n: scores.len(),
            counts,
            precision: prf.precision,
            recall: prf.recall,
            f1: prf.f1,
            pearson: correlation.map(Correlation::value),
            pearson_defined: correlation.map(Correlation::is_defined),
        });
    }
    let agg = aggregate(&all_counts);
    let macro_pearson = match mode {
        LabelMode::Binary => None,
        LabelMode::Scalar => Some(if properties.is_empty() {
            0.0
        } else {
            properties.iter().map(|p| p.pearson.unwrap_or(0.0)).sum::<f64>() / properties.len() as f64
        }),
    };
    Ok(MetricsReport {
        split: split.to_string(),
        epoch,
        mode,
        properties,
        micro_f1: agg.micro_f1,
        macro_f1: agg.macro_f1,
        macro_pearson,
    })
}

/// Binary mode predicts True iff the score is positive; scalar mode reports
/// Pearson per property plus F1 at the `> 3` cut-point on both sides.
pub fn spr_report(
    catalog: &PropertyCatalog,
    mode: LabelMode,
    instances: &[Instance],
    scores: &[Vec<f64>],
    split: &str,
    epoch: Option<usize>,
) -> Result<MetricsReport> {
    let cols = columns(catalog, instances, scores)?;
    build(catalog, mode, cols, split, epoch)
}

pub fn prediction_rows(
    catalog: &PropertyCatalog,
    mode: LabelMode,
    instances: &[Instance],
    scores: &[Vec<f64>],
) -> Result<Vec<PredictionRow>> {
    columns(catalog, instances, scores)?;
    let mut rows = Vec::new();
    for (inst, s) in instances.iter().zip(scores) {
        let id = inst.id();
        for (k, name) in catalog.names().iter().enumerate() {
            let Some(gold) = inst.labels[k] else {
                continue;
            };
            let (probability, prediction, gold) = match (mode, gold) {
                (LabelMode::Binary, Label::Binary(g)) => (
                    Some(binary_prob(s[k])),
                    (s[k] > 0.0).to_string(),
                    g.to_string(),
                ),
                (LabelMode::Scalar, Label::Scalar(g)) => (None, s[k].to_string(), g.to_string()),
                _ => {
                    return Err(Error::Contract(format!(
                        "label of {name:?} on {id} does not match mode {mode}"
                    )))
                }
            };
            rows.push(PredictionRow {
                instance_id: id.clone(),
                property: name.clone(),
                score: s[k],
                probability,
                prediction,
                gold,
            });
        }
    }
    Ok(rows)
}

/// Recomputes a report from a predictions file's rows.
pub fn report_from_predictions(
    catalog: &PropertyCatalog,
    mode: LabelMode,
    rows: &[PredictionRow],
    split: &str,
    epoch: Option<usize>,
) -> Result<MetricsReport> {
    let p = catalog.len();
    let mut cols = Columns {
        scores: vec![Vec::new(); p],
        golds: vec![Vec::new(); p],
    };
    for r in rows {
        let k = catalog.index_of(&r.property).ok_or_else(|| {
            Error::Contract(format!("property {:?} is not in the catalog", r.property))
        })?;
        let gold = match mode {
            LabelMode::Binary => Label::Binary(r.gold.parse().map_err(|_| {
                Error::data(format!("bad gold value {:?} for {}", r.gold, r.instance_id))
            })?),
            LabelMode::Scalar => Label::Scalar(r.gold.parse().map_err(|_| {
                Error::data(format!("bad gold value {:?} for {}", r.gold, r.instance_id))
            })?),
        };
        cols.scores[k].push(r.score);
        cols.golds[k].push(gold);
    }
    build(catalog, mode, cols, split, epoch)
}

impl MetricsReport {
    /// The metric used for model selection: micro-F1 in binary mode,
    /// macro-averaged Pearson in scalar mode.
    pub fn selection_value(&self) -> f64 {
        match self.mode {
            LabelMode::Binary => self.micro_f1,
            LabelMode::Scalar => self.macro_pearson.unwrap_or(0.0),
        }
    }

    pub fn property(&self, name: &str) -> Option<&PropertyMetrics> {
        self.properties.iter().find(|p| p.property == name)
    }

    /// Properties whose Pearson correlation was undefined.
    pub fn undefined_pearson(&self) -> Vec<&str> {
        self.properties
            .iter()
            .filter(|p| p.pearson_defined == Some(false))
            .map(|p| p.property.as_str())
            .collect()
    }

    pub fn rows(&self) -> Vec<MetricRow> {
        let epoch = self.epoch.map(|e| e.to_string()).unwrap_or_default();
        let row = |property: &str, metric: &str, value: f64| MetricRow {
            split: self.split.clone(),
            epoch: epoch.clone(),
            property: property.to_string(),
            metric: metric.to_string(),
            value,
        };
        let mut out = Vec::new();
        for p in &self.properties {
            out.push(row(&p.property, "n", p.n as f64));
            out.push(row(&p.property, "precision", p.precision));
            out.push(row(&p.property, "recall", p.recall));
            out.push(row(&p.property, "f1", p.f1));
            if let Some(r) = p.pearson {
                out.push(row(&p.property, "pearson", r));
            }
        }
        out.push(row("ALL", "micro_f1", self.micro_f1));
        out.push(row("ALL", "macro_f1", self.macro_f1));
        if let Some(r) = self.macro_pearson {
            out.push(row("ALL", "macro_pearson", r));
        }
        out
    }

    /// Human-readable table: F1 × 100 to one decimal, Pearson to three.
    pub fn display(&self) -> String {
        let mut s = String::new();
        let width = self
            .properties
            .iter()
            .map(|p| p.property.len())
            .max()
            .unwrap_or(0)
            .max(8);
        let _ = writeln!(s, "{:<width$}  {:>6}  {:>6}", "property", "F1", "r");
        for p in &self.properties {
            let r = p.pearson.map(|r| format!("{r:.3}")).unwrap_or_default();
            let _ = writeln!(s, "{:<width$}  {:>6.1}  {:>6}", p.property, p.f1 * 100.0, r);
        }
        let _ = writeln!(s, "{:<width$}  {:>6.1}", "micro", self.micro_f1 * 100.0);
        let _ = writeln!(s, "{:<width$}  {:>6.1}", "macro", self.macro_f1 * 100.0);
        if let Some(r) = self.macro_pearson {
            let _ = writeln!(s, "{:<width$}  {:>6}  {:>6.3}", "avg r", "", r);
        }
        s
    }
}
