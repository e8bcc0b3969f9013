//! Trainable linear encoder: `encode(text) = Wᵀ featurize(text)`, fitted with
//! mini-batch subgradient descent on the mean triplet loss.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use super::features::{featurize, FeatureSpec, SparseFeatures};
use super::Embedding;
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::hash;
use crate::triplets::Triplet;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TrainConfig {
    pub dim: usize,
    /// Triplet margin ε.
    pub margin: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub buckets: u32,
    pub hash_seed: u64,
    /// Standard deviation of the initial weights.
    pub init_scale: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            dim: 64,
            margin: 5.0,
            learning_rate: 0.05,
            epochs: 10,
            batch_size: 64,
            seed: 0,
            buckets: FeatureSpec::DEFAULT_BUCKETS,
            hash_seed: FeatureSpec::DEFAULT_HASH_SEED,
            init_scale: 0.125,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.into()));
        if !(self.margin > 0.0 && self.margin.is_finite()) {
            return bad("margin must be positive");
        }
        if self.dim < 2 {
            return bad("dimension must be at least 2");
        }
        if (self.buckets as usize) < self.dim {
            return bad("feature buckets must be at least the dimension");
        }
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad("learning rate must be finite and non-negative");
        }
        if self.batch_size == 0 {
            return bad("batch size must be positive");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init scale must be finite and non-negative");
        }
        Ok(())
    }

    pub fn feature_spec(&self) -> FeatureSpec {
        FeatureSpec::new(self.buckets, self.hash_seed)
    }
}

/// Weight matrix `W` (`buckets x dim`, row-major) plus its feature spec.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearEncoder {
    spec: FeatureSpec,
    dim: usize,
    weights: Vec<f64>,
}

impl LinearEncoder {
    pub fn zeros(spec: FeatureSpec, dim: usize) -> Self {
        Self {
            spec,
            dim,
            weights: vec![0.0; spec.buckets as usize * dim],
        }
    }

    /// Gaussian weights with standard deviation `scale`, from the `init` substream of `seed`.
    pub fn random(spec: FeatureSpec, dim: usize, scale: f64, seed: u64) -> Self {
        let mut rng = hash::stream(seed, "encoder-init");
        let n = spec.buckets as usize * dim;
        let mut weights = Vec::with_capacity(n);
        while weights.len() < n {
            // Box-Muller, both outputs used.
            let u1: f64 = 1.0 - rng.gen::<f64>();
            let u2: f64 = rng.gen::<f64>();
            let r = libm::sqrt(-2.0 * libm::log(u1));
            let theta = 2.0 * core::f64::consts::PI * u2;
            weights.push(scale * r * libm::cos(theta));
            if weights.len() < n {
                weights.push(scale * r * libm::sin(theta));
            }
        }
        Self { spec, dim, weights }
    }

    pub fn from_parts(spec: FeatureSpec, dim: usize, weights: Vec<f64>) -> Result<Self> {
        super::check_dim(spec.buckets as usize * dim, weights.len())?;
        Ok(Self { spec, dim, weights })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.spec
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn row(&self, bucket: u32) -> &[f64] {
        let start = bucket as usize * self.dim;
        &self.weights[start..start + self.dim]
    }

    pub fn encode(&self, text: &str) -> Result<Embedding> {
        Ok(self.encode_features(&featurize(text, &self.spec)?))
    }

    pub fn encode_features(&self, features: &SparseFeatures) -> Embedding {
        let mut out = vec![0.0; self.dim];
        for &(i, v) in &features.entries {
            for (o, w) in out.iter_mut().zip(self.row(i)) {
                *o += v * w;
            }
        }
        out
    }
}

/// Featurized triplets: each distinct statement featurized once.
#[derive(Debug, Clone)]
pub struct TrainingSet {
    pub features: Vec<SparseFeatures>,
    /// Indices into `features`: anchor, positive, negative.
    pub triplets: Vec<[usize; 3]>,
}

/// Sparse gradient: bucket row -> d-vector.
pub type RowGradient = BTreeMap<u32, Vec<f64>>;

impl TrainingSet {
    pub fn from_triplets(
        triplets: &[Triplet],
        corpus: &Corpus,
        spec: &FeatureSpec,
    ) -> Result<Self> {
        let mut slot: BTreeMap<usize, usize> = BTreeMap::new();
        let mut features = Vec::new();
        let mut out = Vec::with_capacity(triplets.len());
        for t in triplets {
            let mut idx = [0usize; 3];
            for (k, key) in [t.anchor, t.positive, t.negative].into_iter().enumerate() {
                idx[k] = match slot.get(&key.id()) {
                    Some(&i) => i,
                    None => {
                        features.push(featurize(&corpus.statement(key), spec)?);
                        slot.insert(key.id(), features.len() - 1);
                        features.len() - 1
                    }
                };
            }
            out.push(idx);
        }
        Ok(Self {
            features,
            triplets: out,
        })
    }

    pub fn len(&self) -> usize {
        self.triplets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triplets.is_empty()
    }

    pub fn mean_loss(&self, model: &LinearEncoder, margin: f64) -> f64 {
        let all: Vec<usize> = (0..self.len()).collect();
        self.loss_and_gradient(model, margin, &all, false).0
    }

    /// Mean loss over `batch` and, if requested, its (sub)gradient w.r.t. `W`.
    ///
    /// At the hinge kink and at zero anchor distances the subgradient 0 is used.
    pub fn loss_and_gradient(
        &self,
        model: &LinearEncoder,
        margin: f64,
        batch: &[usize],
        with_gradient: bool,
    ) -> (f64, RowGradient) {
        let d = model.dim();
        let mut grad = RowGradient::new();
        let mut total = 0.0;
        let scale = 1.0 / batch.len().max(1) as f64;
        for &t in batch {
            let [ia, ip, in_] = self.triplets[t];
            let (fa, fp, fneg) = (&self.features[ia], &self.features[ip], &self.features[in_]);
            let sa = model.encode_features(fa);
            let sp = model.encode_features(fp);
            let sn = model.encode_features(fneg);
            let ap: Vec<f64> = sa.iter().zip(&sp).map(|(a, b)| a - b).collect();
            let an: Vec<f64> = sa.iter().zip(&sn).map(|(a, b)| a - b).collect();
            let dap = libm::sqrt(ap.iter().map(|x| x * x).sum());
            let dan = libm::sqrt(an.iter().map(|x| x * x).sum());
            let arg = dap - dan + margin;
            if arg <= 0.0 {
                continue;
            }
            total += arg;
            if !with_gradient {
                continue;
            }
            // dL/ds_a = u_ap - u_an, dL/ds_p = -u_ap, dL/ds_n = u_an
            let u_ap: Vec<f64> = if dap > 0.0 {
                ap.iter().map(|x| x / dap).collect()
            } else {
                vec![0.0; d]
            };
            let u_an: Vec<f64> = if dan > 0.0 {
                an.iter().map(|x| x / dan).collect()
            } else {
                vec![0.0; d]
            };
            let g_a: Vec<f64> = u_ap.iter().zip(&u_an).map(|(x, y)| x - y).collect();
            let g_p: Vec<f64> = u_ap.iter().map(|x| -x).collect();
            for (f, g) in [(fa, &g_a), (fp, &g_p), (fneg, &u_an)] {
                for &(i, v) in &f.entries {
                    let row = grad.entry(i).or_insert_with(|| vec![0.0; d]);
                    for (r, gk) in row.iter_mut().zip(g.iter()) {
                        *r += scale * v * gk;
                    }
                }
            }
        }
        (total * scale, grad)
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: LinearEncoder,
    /// Entry 0: mean loss before training; entry `e`: after epoch `e`.
    pub loss_trace: Vec<f64>,
}

/// Featurize `triplets` and fit a fresh encoder.
pub fn train(triplets: &[Triplet], corpus: &Corpus, config: &TrainConfig) -> Result<TrainOutcome> {
    config.validate()?;
    if triplets.is_empty() {
        return Err(Error::InvalidArgument("no triplets to train on".into()));
    }
    let set = TrainingSet::from_triplets(triplets, corpus, &config.feature_spec())?;
    let init = LinearEncoder::random(
        config.feature_spec(),
        config.dim,
        config.init_scale,
        config.seed,
    );
    fit(&set, init, config)
}

/// Run `config.epochs` epochs of mini-batch SGD starting from `model`.
///
/// Batch order for epoch `e` comes from the `train-batches` substream indexed
/// by `e`, so the trace and weights are a pure function of the inputs.
pub fn fit(
    set: &TrainingSet,
    mut model: LinearEncoder,
    config: &TrainConfig,
) -> Result<TrainOutcome> {
    config.validate()?;
    if set.is_empty() {
        return Err(Error::InvalidArgument("no triplets to train on".into()));
    }
    if model.dim() != config.dim || *model.spec() != config.feature_spec() {
        return Err(Error::InvalidArgument(format!(
            "model (d={}, m={}) does not match config (d={}, m={})",
            model.dim(),
            model.spec().buckets,
            config.dim,
            config.buckets
        )));
    }
    let d = config.dim;
    let mut trace = Vec::with_capacity(config.epochs + 1);
    let initial = set.mean_loss(&model, config.margin);
    if !initial.is_finite() {
        return Err(Error::NonFinite {
            what: "loss",
            epoch: 0,
            batch: 0,
        });
    }
    trace.push(initial);
    let mut order: Vec<usize> = (0..set.len()).collect();
    for epoch in 1..=config.epochs {
        order.sort_unstable();
        order.shuffle(&mut hash::indexed_stream(
            config.seed,
            "train-batches",
            epoch as u64,
        ));
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let (loss, grad) = set.loss_and_gradient(&model, config.margin, batch, true);
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "loss",
                    epoch,
                    batch: b,
                });
            }
            if config.learning_rate == 0.0 {
                continue;
            }
            for (row, g) in grad {
                let start = row as usize * d;
                for (w, gk) in model.weights[start..start + d].iter_mut().zip(&g) {
                    *w -= config.learning_rate * gk;
                    if !w.is_finite() {
                        return Err(Error::NonFinite {
                            what: "weight",
                            epoch,
                            batch: b,
                        });
                    }
                }
            }
        }
        let loss = set.mean_loss(&model, config.margin);
        if !loss.is_finite() {
            return Err(Error::NonFinite {
                what: "loss",
                epoch,
                batch: 0,
            });
        }
        trace.push(loss);
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}
