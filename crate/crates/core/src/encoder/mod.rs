//! Embedding backends behind one `encode` interface, plus the triplet loss.
//!
//! Two backends exist: a [`PrecomputedStore`] of vectors produced by any
//! external sentence encoder, and a trainable [`LinearEncoder`] over hashed
//! n-gram features.

mod features;
pub mod format;
mod linear;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

pub use features::{featurize, tokenize, FeatureSpec, SparseFeatures};
pub use linear::{fit, train, LinearEncoder, TrainConfig, TrainOutcome, TrainingSet};

use crate::corpus::{BeliefKey, Corpus};
use crate::error::{Error, Result};
use crate::linalg::euclidean;

pub type Embedding = Vec<f64>;

/// `max(|a - p| - |a - n| + margin, 0)` with Euclidean norms.
pub fn triplet_loss(
    anchor: &[f64],
    positive: &[f64],
    negative: &[f64],
    margin: f64,
) -> Result<f64> {
    check_dim(anchor.len(), positive.len())?;
    check_dim(anchor.len(), negative.len())?;
    let v = euclidean(anchor, positive) - euclidean(anchor, negative) + margin;
    Ok(if v > 0.0 { v } else { 0.0 })
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Vectors for statements encoded elsewhere, keyed by exact statement text.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecomputedStore {
    dim: usize,
    vectors: BTreeMap<String, Embedding>,
}

impl PrecomputedStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vectors: BTreeMap::new(),
        }
    }

    pub fn insert(&mut self, text: String, vector: Embedding) -> Result<()> {
        check_dim(self.dim, vector.len())?;
        if vector.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(alloc::format!(
                "non-finite entry in vector for {text:?}"
            )));
        }
        self.vectors.insert(text, vector);
        Ok(())
    }

    pub fn from_pairs(
        dim: usize,
        pairs: impl IntoIterator<Item = (String, Embedding)>,
    ) -> Result<Self> {
        let mut store = Self::new(dim);
        for (t, v) in pairs {
            store.insert(t, v)?;
        }
        Ok(store)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, text: &str) -> Option<&Embedding> {
        self.vectors.get(text)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Embedding)> {
        self.vectors.iter()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum EncoderModel {
    Precomputed(PrecomputedStore),
    Trained(LinearEncoder),
}

impl EncoderModel {
    pub fn dim(&self) -> usize {
        match self {
            EncoderModel::Precomputed(s) => s.dim(),
            EncoderModel::Trained(m) => m.dim(),
        }
    }

    pub fn encode(&self, text: &str) -> Result<Embedding> {
        match self {
            EncoderModel::Precomputed(s) => s
                .get(text)
                .cloned()
                .ok_or_else(|| Error::MissingStatement(text.into())),
            EncoderModel::Trained(m) => m.encode(text),
        }
    }

    pub fn encode_batch<S: AsRef<str>>(&self, texts: &[S]) -> Result<Vec<Embedding>> {
        texts.iter().map(|t| self.encode(t.as_ref())).collect()
    }

    pub fn backend_name(&self) -> &'static str {
        match self {
            EncoderModel::Precomputed(_) => "precomputed",
            EncoderModel::Trained(_) => "trained",
        }
    }
}

/// Lazily filled table of statement vectors for one corpus, indexed by key id.
#[derive(Debug, Clone)]
pub struct StatementVectors<'a> {
    model: &'a EncoderModel,
    corpus: &'a Corpus,
    cache: Vec<Option<Embedding>>,
}

impl<'a> StatementVectors<'a> {
    pub fn new(model: &'a EncoderModel, corpus: &'a Corpus) -> Self {
        Self {
            model,
            corpus,
            cache: alloc::vec![None; corpus.n_debates() * 2],
        }
    }

    pub fn model(&self) -> &EncoderModel {
        self.model
    }

    pub fn get(&mut self, key: BeliefKey) -> Result<&Embedding> {
        let id = key.id();
        if self.cache[id].is_none() {
            self.cache[id] = Some(self.model.encode(&self.corpus.statement(key))?);
        }
        Ok(self.cache[id].as_ref().unwrap_or_else(|| unreachable!()))
    }
}
