//! Generated datasets whose labels follow from token classes and head positions.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::data::{LabelValue, ParallelCorpus, PropertyCatalog, Record, SentencePair, SPR1_PROPERTIES};
use crate::error::Result;
use crate::seeds::derive;

pub const ANIMATE: [&str; 12] = [
    "man", "woman", "child", "dog", "cat", "teacher", "doctor", "farmer", "pilot", "singer", "boy", "girl",
];
pub const INANIMATE: [&str; 12] = [
    "rock", "table", "box", "car", "cup", "book", "door", "wall", "stone", "chair", "window", "bottle",
];
pub const CHANGE_VERBS: [&str; 6] = ["broke", "melted", "bent", "painted", "cracked", "burned"];
pub const CONTACT_VERBS: [&str; 6] = ["hit", "kicked", "touched", "pushed", "grabbed", "struck"];
pub const OTHER_VERBS: [&str; 6] = ["saw", "liked", "wanted", "heard", "knew", "noticed"];
pub const PREPOSITIONS: [&str; 5] = ["in", "on", "at", "near", "under"];
pub const FILLERS: [&str; 8] = ["the", "a", "quickly", "then", "very", "and", "today", "there"];

/// The six generated properties, each a fixed rule over the pair.
pub const SYNTHETIC_PROPERTIES: [&str; 6] = [
    "sentient",
    "instigation",
    "volition",
    "changed",
    "location",
    "physical contact",
];

pub fn synthetic_catalog() -> PropertyCatalog {
    PropertyCatalog::new(SYNTHETIC_PROPERTIES.iter().map(|s| s.to_string()).collect())
        .expect("distinct names")
}

/// Every token the generators can emit.
pub fn synthetic_vocabulary() -> Vec<&'static str> {
    let mut v: Vec<&str> = [
        &ANIMATE[..],
        &INANIMATE,
        &CHANGE_VERBS,
        &CONTACT_VERBS,
        &OTHER_VERBS,
        &PREPOSITIONS,
        &FILLERS,
    ]
    .concat();
    v.sort_unstable();
    v
}

/// Rule labels for a pair.
pub fn rule_labels(tokens: &[String], pred: usize, arg: usize) -> [bool; 6] {
    let arg_tok = tokens[arg].as_str();
    let verb = tokens[pred].as_str();
    let animate = ANIMATE.contains(&arg_tok);
    let before = arg < pred;
    [
        animate,
        before,
        before && animate,
        CHANGE_VERBS.contains(&verb) && arg > pred,
        arg > 0 && PREPOSITIONS.contains(&tokens[arg - 1].as_str()),
        CONTACT_VERBS.contains(&verb),
    ]
}

fn sentence<R: Rng>(rng: &mut R) -> (Vec<String>, usize, usize) {
    let len = rng.random_range(5..=12);
    let mut tokens: Vec<&str> = (0..len)
        .map(|_| {
            if rng.random_bool(0.25) {
                *[&ANIMATE[..], &INANIMATE].concat().choose(rng).unwrap()
            } else if rng.random_bool(0.1) {
                *PREPOSITIONS.choose(rng).unwrap()
            } else {
                *FILLERS.choose(rng).unwrap()
            }
        })
        .collect();
    let pred = rng.random_range(0..len);
    let mut arg = rng.random_range(0..len - 1);
    if arg >= pred {
        arg += 1;
    }
    let verbs = [&CHANGE_VERBS[..], &CONTACT_VERBS, &OTHER_VERBS];
    tokens[pred] = verbs.choose(rng).unwrap().choose(rng).unwrap();
    tokens[arg] = if rng.random_bool(0.5) {
        ANIMATE.choose(rng).unwrap()
    } else {
        INANIMATE.choose(rng).unwrap()
    };
    if arg > 0 && arg - 1 != pred {
        tokens[arg - 1] = if rng.random_bool(0.35) {
            PREPOSITIONS.choose(rng).unwrap()
        } else {
            FILLERS.choose(rng).unwrap()
        };
    }
    (tokens.into_iter().map(String::from).collect(), pred, arg)
}

/// `n` rule-labeled records.
pub fn generate_records(n: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "synthetic.spr"));
    (0..n)
        .map(|i| {
            let (tokens, pred, arg) = sentence(&mut rng);
            let labels = rule_labels(&tokens, pred, arg);
            Record {
                sentence_id: format!("syn{i:05}"),
                labels: SYNTHETIC_PROPERTIES
                    .iter()
                    .zip(labels)
                    .map(|(p, l)| (p.to_string(), LabelValue::Binary(l)))
                    .collect(),
                tokens,
                pred_head: pred,
                arg_head: arg,
                supersense: None,
                wsd: None,
                propbank_role: None,
                propbank_sense: None,
            }
        })
        .collect()
}

/// Train/dev/test split of `n` records in proportions 8:1:1.
pub fn synthetic_splits(n: usize, seed: u64) -> (Vec<Record>, Vec<Record>, Vec<Record>) {
    let mut all = generate_records(n, seed);
    let n_dev = n / 10;
    let test = all.split_off(n - n_dev);
    let dev = all.split_off(n - 2 * n_dev);
    (all, dev, test)
}

/// Records over the SPR1 properties with independent coin-flip labels.
pub fn random_label_records(n: usize, seed: u64) -> Vec<Record> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "synthetic.random"));
    (0..n)
        .map(|i| {
            let (tokens, pred, arg) = sentence(&mut rng);
            Record {
                sentence_id: format!("rnd{i:05}"),
                labels: SPR1_PROPERTIES
                    .iter()
                    .map(|p| (p.to_string(), LabelValue::Binary(rng.random_bool(0.5))))
                    .collect::<BTreeMap<_, _>>(),
                tokens,
                pred_head: pred,
                arg_head: arg,
                supersense: None,
                wsd: None,
                propbank_role: None,
                propbank_sense: None,
            }
        })
        .collect()
}

/// Translation pairs whose target copies the source.
pub fn copy_corpus(n: usize, seed: u64) -> ParallelCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "synthetic.copy"));
    ParallelCorpus {
        pairs: (0..n)
            .map(|_| {
                let (tokens, _, _) = sentence(&mut rng);
                SentencePair {
                    source: tokens.clone(),
                    target: tokens,
                }
            })
            .collect(),
    }
}

/// Gaussian vectors for the generator vocabulary.
pub fn synthetic_embeddings(dim: usize, seed: u64) -> Vec<(String, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(derive(seed, "synthetic.embeddings"));
    let normal = Normal::new(0.0, 1.0 / (dim as f64).sqrt()).expect("valid deviation");
    synthetic_vocabulary()
        .into_iter()
        .map(|w| (w.to_string(), (0..dim).map(|_| normal.sample(&mut rng)).collect()))
        .collect()
}

/// Writes vectors as whitespace-separated text, one word per line.
pub fn write_embeddings(path: &Path, vectors: &[(String, Vec<f64>)]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for (word, v) in vectors {
        write!(w, "{word}")?;
        for x in v {
            write!(w, " {x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split(' ').map(String::from).collect()
    }

    #[test]
    fn rules() {
        let t = toks("the dog kicked the rock");
        assert_eq!(rule_labels(&t, 2, 1), [true, true, true, false, false, true]);
        assert_eq!(rule_labels(&t, 2, 4), [false, false, false, false, false, true]);
        let t = toks("he broke in box");
        assert_eq!(rule_labels(&t, 1, 3), [false, false, false, true, true, false]);
    }

    #[test]
    fn generated_labels_follow_rules() {
        for r in generate_records(200, 3) {
            let l = rule_labels(&r.tokens, r.pred_head, r.arg_head);
            for (p, v) in SYNTHETIC_PROPERTIES.iter().zip(l) {
                assert_eq!(r.labels[*p], LabelValue::Binary(v));
            }
        }
        assert_eq!(generate_records(50, 3), generate_records(50, 3));
    }

    #[test]
    fn splits() {
        let (a, b, c) = synthetic_splits(100, 1);
        assert_eq!((a.len(), b.len(), c.len()), (80, 10, 10));
    }
}
