//! Frozen word-embedding table loaded from whitespace-separated text.

use std::borrow::Cow;
use std::collections::{BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Half-width of the uniform range used for out-of-vocabulary vectors.
pub const OOV_RANGE: f64 = 0.01;

pub const DEFAULT_DIM: usize = 300;

/// Seeded vector for a token missing from the embedding file.
///
/// Depends only on `(seed, token, dim)`, so a token gets the same vector
/// whatever else is in the vocabulary.
pub fn oov_vector(token: &str, dim: usize, seed: u64) -> Vec<f64> {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(token.as_bytes());
    let digest: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(digest);
    (0..dim)
        .map(|_| rng.random_range(-OOV_RANGE..=OOV_RANGE))
        .collect()
}

#[derive(Clone, Debug)]
pub struct EmbeddingTable {
    dim: usize,
    rows: HashMap<String, usize>,
    matrix: Vec<f64>,
    oov_seed: u64,
    from_file: usize,
}

impl EmbeddingTable {
    /// Every token drawn with the out-of-vocabulary rule (no pretrained file).
    pub fn random(vocabulary: &BTreeSet<String>, dim: usize, oov_seed: u64) -> Self {
        let mut table = EmbeddingTable {
            dim,
            rows: HashMap::new(),
            matrix: Vec::with_capacity(vocabulary.len() * dim),
            oov_seed,
            from_file: 0,
        };
        for tok in vocabulary {
            table.push_oov(&tok.to_lowercase());
        }
        table
    }

    fn push_oov(&mut self, token: &str) {
        if self.rows.contains_key(token) {
            return;
        }
        let v = oov_vector(token, self.dim, self.oov_seed);
        self.rows.insert(token.to_string(), self.rows.len());
        self.matrix.extend(v);
    }

    /// Reads vectors for `vocabulary` from `path`; missing tokens get OOV vectors.
    pub fn load(path: &Path, vocabulary: &BTreeSet<String>, dim: usize, oov_seed: u64) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::from_reader(
            std::io::BufReader::new(file),
            &path.display().to_string(),
            vocabulary,
            dim,
            oov_seed,
        )
    }

    pub fn from_reader<R: BufRead>(
        reader: R,
        source_name: &str,
        vocabulary: &BTreeSet<String>,
        dim: usize,
        oov_seed: u64,
    ) -> Result<Self> {
        let wanted: BTreeSet<String> = vocabulary.iter().map(|t| t.to_lowercase()).collect();
        let mut found: HashMap<String, Vec<f64>> = HashMap::new();
        for (n, line) in reader.lines().enumerate() {
            let line = line?;
            let mut fields = line.split_whitespace();
            let Some(token) = fields.next() else {
                continue;
            };
            let values: Vec<&str> = fields.collect();
            // word2vec-style "count dim" header
            if n == 0 && values.len() == 1 && token.parse::<u64>().is_ok() {
                continue;
            }
            if values.len() != dim {
                return Err(Error::Config(format!(
                    "{source_name}:{}: expected {dim} values, found {}",
                    n + 1,
                    values.len()
                )));
            }
            let token = token.to_lowercase();
            if !wanted.contains(&token) || found.contains_key(&token) {
                continue;
            }
            let parsed: std::result::Result<Vec<f64>, _> =
                values.iter().map(|v| v.parse::<f64>()).collect();
            let vector = parsed.map_err(|e| Error::Parse {
                source_name: source_name.to_string(),
                line: n + 1,
                message: e.to_string(),
            })?;
            if vector.iter().any(|v| !v.is_finite()) {
                return Err(Error::Parse {
                    source_name: source_name.to_string(),
                    line: n + 1,
                    message: "non-finite value".into(),
                });
            }
            found.insert(token, vector);
        }
        let mut table = EmbeddingTable {
            dim,
            rows: HashMap::new(),
            matrix: Vec::with_capacity(wanted.len() * dim),
            oov_seed,
            from_file: found.len(),
        };
        for tok in &wanted {
            match found.remove(tok) {
                Some(v) => {
                    table.rows.insert(tok.clone(), table.rows.len());
                    table.matrix.extend(v);
                }
                None => table.push_oov(tok),
            }
        }
        Ok(table)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn oov_seed(&self) -> u64 {
        self.oov_seed
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of vocabulary tokens that were found in the file.
    pub fn found_in_file(&self) -> usize {
        self.from_file
    }

    pub fn contains(&self, token: &str) -> bool {
        self.rows.contains_key(&token.to_lowercase())
    }

    /// Vector for `token` (lowercased). Tokens outside the table get their
    /// OOV vector computed on the fly; the table itself never changes.
    pub fn vector(&self, token: &str) -> Cow<'_, [f64]> {
        let key = token.to_lowercase();
        match self.rows.get(&key) {
            Some(&r) => Cow::Borrowed(&self.matrix[r * self.dim..(r + 1) * self.dim]),
            None => Cow::Owned(oov_vector(&key, self.dim, self.oov_seed)),
        }
    }
}
