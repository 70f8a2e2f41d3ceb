//! Comparing two systems' binary predictions: disagreement sampling and
//! error-type contingency deltas.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Instance id → predicted (or gold) truth value.
pub type Predictions = BTreeMap<String, bool>;

fn check_aligned(a: &Predictions, b: &Predictions, gold: &Predictions) -> Result<()> {
    if a.len() != b.len() || a.len() != gold.len() || !a.keys().eq(b.keys()) || !a.keys().eq(gold.keys()) {
        return Err(Error::Contract(
            "prediction and gold maps cover different instances".into(),
        ));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisagreementSample {
    pub gold_true: Vec<String>,
    pub gold_false: Vec<String>,
    /// How many fewer gold-True disagreements existed than requested.
    pub shortfall_true: usize,
    pub shortfall_false: usize,
}

impl DisagreementSample {
    pub fn is_short(&self) -> bool {
        self.shortfall_true > 0 || self.shortfall_false > 0
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.gold_true.iter().chain(&self.gold_false)
    }
}

/// Uniformly samples up to `n_true` gold-True and `n_false` gold-False
/// instances on which the two systems disagree. Returned ids are sorted.
pub fn disagreement_sample(
    preds_a: &Predictions,
    preds_b: &Predictions,
    gold: &Predictions,
    n_true: usize,
    n_false: usize,
    seed: u64,
) -> Result<DisagreementSample> {
    check_aligned(preds_a, preds_b, gold)?;
    let mut pool_true = Vec::new();
    let mut pool_false = Vec::new();
    for (id, a) in preds_a {
        if *a != preds_b[id] {
            if gold[id] {
                pool_true.push(id.clone());
            } else {
                pool_false.push(id.clone());
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut take = |mut pool: Vec<String>, n: usize| {
        let short = n.saturating_sub(pool.len());
        pool.shuffle(&mut rng);
        pool.truncate(n);
        pool.sort();
        (pool, short)
    };
    let (gold_true, shortfall_true) = take(pool_true, n_true);
    let (gold_false, shortfall_false) = take(pool_false, n_false);
    Ok(DisagreementSample {
        gold_true,
        gold_false,
        shortfall_true,
        shortfall_false,
    })
}

/// Who was right on instances where a baseline and a new system disagree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyCells {
    pub new_correct_true: u64,
    pub base_correct_true: u64,
    pub new_correct_false: u64,
    pub base_correct_false: u64,
}

/// Net change in error counts from the baseline to the new system.
/// Negative values are reductions.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyDelta {
    pub differ: u64,
    /// Change in false negatives (type II errors).
    pub delta_false_neg: i64,
    /// Change in false positives (type I errors).
    pub delta_false_pos: i64,
}

impl ContingencyCells {
    pub fn delta(&self) -> ContingencyDelta {
        let i = |v: u64| v as i64;
        ContingencyDelta {
            differ: self.new_correct_true
                + self.base_correct_true
                + self.new_correct_false
                + self.base_correct_false,
            delta_false_neg: -(i(self.new_correct_true) - i(self.base_correct_true)),
            delta_false_pos: -(i(self.new_correct_false) - i(self.base_correct_false)),
        }
    }
}

/// Cells over `subset` (or all instances). Unknown subset ids are an error.
pub fn contingency_cells(
    base: &Predictions,
    new: &Predictions,
    gold: &Predictions,
    subset: Option<&[String]>,
) -> Result<ContingencyCells> {
    check_aligned(base, new, gold)?;
    let ids: Vec<&String> = match subset {
        Some(s) => {
            if let Some(unknown) = s.iter().find(|id| !gold.contains_key(*id)) {
                return Err(Error::Contract(format!("unknown instance {unknown:?} in subset")));
            }
            s.iter().collect()
        }
        None => gold.keys().collect(),
    };
    let mut c = ContingencyCells::default();
    for id in ids {
        let (b, n, g) = (base[id], new[id], gold[id]);
        if b == n {
            continue;
        }
        match (g, n == g) {
            (true, true) => c.new_correct_true += 1,
            (true, false) => c.base_correct_true += 1,
            (false, true) => c.new_correct_false += 1,
            (false, false) => c.base_correct_false += 1,
        }
    }
    Ok(c)
}

pub fn contingency_delta(
    base: &Predictions,
    new: &Predictions,
    gold: &Predictions,
    subset: Option<&[String]>,
) -> Result<ContingencyDelta> {
    Ok(contingency_cells(base, new, gold, subset)?.delta())
}
