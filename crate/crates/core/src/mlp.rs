//! Feed-forward network that picks a color space from an image's feature
//! vector.
//!
//! Architecture: 9 normalized inputs, one `tanh` hidden layer, 3 linear
//! outputs followed by softmax. Output `k` is the probability that color
//! space `k` (RGB, HSV, YCbCr) segments the image best.
//!
//! Training is full-batch gradient descent on mean cross-entropy, so a run
//! is fully determined by its data, config and seed.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::colorspace::FeatureVector;
use crate::skinfilter::ColorSpaceId;

pub const INPUTS: usize = FeatureVector::LEN;
pub const OUTPUTS: usize = 3;
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("hidden_count must be at least 1")]
    NoHiddenUnits,
    #[error("{field}: expected {expected} values, found {found}")]
    Dimension {
        field: String,
        expected: usize,
        found: usize,
    },
    #[error("{field} contains a non-finite value")]
    NonFinite { field: String },
    #[error("normalization scale {index} is {value}; scales must be positive")]
    BadScale { index: usize, value: f64 },
    #[error("unsupported format_version {0}")]
    Version(u32),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: malformed model document: {source}")]
    Malformed {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
    #[error("{path}: {source}")]
    Invalid {
        path: PathBuf,
        #[source]
        source: Box<ModelError>,
    },
}

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("training set is empty")]
    Empty,
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("loss became non-finite at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
}

/// Per-feature affine map `(x - shift) / scale` applied before the network.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub shift: [f64; INPUTS],
    pub scale: [f64; INPUTS],
}

impl Default for Normalization {
    fn default() -> Self {
        Self::identity()
    }
}

impl Normalization {
    pub fn identity() -> Self {
        Self {
            shift: [0.0; INPUTS],
            scale: [1.0; INPUTS],
        }
    }

    /// Z-score statistics of `features`. Constant features get scale 1.
    pub fn fit(features: &[FeatureVector]) -> Self {
        if features.is_empty() {
            return Self::identity();
        }
        let n = features.len() as f64;
        let mut shift = [0.0; INPUTS];
        for f in features {
            for (s, x) in shift.iter_mut().zip(f.to_array()) {
                *s += x;
            }
        }
        shift.iter_mut().for_each(|s| *s /= n);
        let mut var = [0.0; INPUTS];
        for f in features {
            for ((v, x), m) in var.iter_mut().zip(f.to_array()).zip(shift) {
                *v += (x - m) * (x - m);
            }
        }
        let scale = var.map(|v| {
            let sd = (v / n).sqrt();
            if sd > 1e-12 && sd.is_finite() {
                sd
            } else {
                1.0
            }
        });
        Self { shift, scale }
    }

    pub fn apply(&self, f: &FeatureVector) -> [f64; INPUTS] {
        let mut x = f.to_array();
        for ((x, s), c) in x.iter_mut().zip(self.shift).zip(self.scale) {
            *x = (*x - s) / c;
        }
        x
    }

    fn validate(&self) -> Result<(), ModelError> {
        if self.shift.iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                field: "normalization.shift".into(),
            });
        }
        for (index, &value) in self.scale.iter().enumerate() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(ModelError::BadScale { index, value });
            }
        }
        Ok(())
    }
}

/// Network weights plus the input normalization they were trained with.
///
/// `w1[j]` holds the 9 input weights of hidden unit `j`; `w2[j]` holds the
/// 3 weights leaving hidden unit `j` toward the outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    w1: Vec<[f64; INPUTS]>,
    b1: Vec<f64>,
    w2: Vec<[f64; OUTPUTS]>,
    b2: [f64; OUTPUTS],
    normalization: Normalization,
}

impl MlpModel {
    pub fn new(
        w1: Vec<[f64; INPUTS]>,
        b1: Vec<f64>,
        w2: Vec<[f64; OUTPUTS]>,
        b2: [f64; OUTPUTS],
        normalization: Normalization,
    ) -> Result<Self, ModelError> {
        let hidden = w1.len();
        if hidden == 0 {
            return Err(ModelError::NoHiddenUnits);
        }
        for (field, found) in [("b1", b1.len()), ("w2", w2.len())] {
            if found != hidden {
                return Err(ModelError::Dimension {
                    field: field.into(),
                    expected: hidden,
                    found,
                });
            }
        }
        let model = Self {
            w1,
            b1,
            w2,
            b2,
            normalization,
        };
        if model.params().iter().any(|v| !v.is_finite()) {
            return Err(ModelError::NonFinite {
                field: "weights".into(),
            });
        }
        model.normalization.validate()?;
        Ok(model)
    }

    /// All weights and biases zero: every input maps to a uniform output.
    pub fn zeros(hidden: usize) -> Result<Self, ModelError> {
        Self::new(
            vec![[0.0; INPUTS]; hidden],
            vec![0.0; hidden],
            vec![[0.0; OUTPUTS]; hidden],
            [0.0; OUTPUTS],
            Normalization::identity(),
        )
    }

    /// A model that ignores its input and outputs `softmax(b2)`.
    pub fn bias_only(b2: [f64; OUTPUTS]) -> Result<Self, ModelError> {
        let mut m = Self::zeros(1)?;
        m.b2 = b2;
        Ok(m)
    }

    /// Every parameter drawn uniformly from `[-0.5, 0.5]`.
    pub fn random(hidden: usize, seed: u64) -> Result<Self, ModelError> {
        let mut m = Self::zeros(hidden)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params: Vec<f64> = (0..m.param_count())
            .map(|_| rng.gen_range(-0.5..=0.5))
            .collect();
        m.set_params(&params);
        Ok(m)
    }

    pub fn hidden_count(&self) -> usize {
        self.w1.len()
    }

    pub fn w1(&self) -> &[[f64; INPUTS]] {
        &self.w1
    }

    pub fn b1(&self) -> &[f64] {
        &self.b1
    }

    pub fn w2(&self) -> &[[f64; OUTPUTS]] {
        &self.w2
    }

    pub fn b2(&self) -> [f64; OUTPUTS] {
        self.b2
    }

    pub fn normalization(&self) -> &Normalization {
        &self.normalization
    }

    pub fn with_normalization(mut self, normalization: Normalization) -> Result<Self, ModelError> {
        normalization.validate()?;
        self.normalization = normalization;
        Ok(self)
    }

    pub fn param_count(&self) -> usize {
        self.hidden_count() * (INPUTS + 1 + OUTPUTS) + OUTPUTS
    }

    /// Flattened parameters: `w1` row by row, `b1`, `w2` row by row, `b2`.
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        self.w1.iter().for_each(|r| out.extend_from_slice(r));
        out.extend_from_slice(&self.b1);
        self.w2.iter().for_each(|r| out.extend_from_slice(r));
        out.extend_from_slice(&self.b2);
        out
    }

    /// Inverse of [`params`](Self::params).
    ///
    /// # Panics
    ///
    /// Panics if `params.len() != self.param_count()`.
    pub fn set_params(&mut self, params: &[f64]) {
        assert_eq!(params.len(), self.param_count(), "parameter count");
        let mut it = params.iter().copied();
        for row in &mut self.w1 {
            row.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.b1.iter_mut().for_each(|b| *b = it.next().unwrap());
        for row in &mut self.w2 {
            row.iter_mut().for_each(|w| *w = it.next().unwrap());
        }
        self.b2.iter_mut().for_each(|b| *b = it.next().unwrap());
    }

    /// Hidden activations and output pre-activations for an already
    /// normalized input.
    fn layers(&self, x: &[f64; INPUTS]) -> (Vec<f64>, [f64; OUTPUTS]) {
        let hidden: Vec<f64> = self
            .w1
            .iter()
            .zip(&self.b1)
            .map(|(w, b)| {
                let a: f64 = w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + b;
                a.tanh()
            })
            .collect();
        let mut q = self.b2;
        for (h, w) in hidden.iter().zip(&self.w2) {
            for (q, w) in q.iter_mut().zip(w) {
                *q += w * h;
            }
        }
        (hidden, q)
    }
}

/// Softmax with the maximum subtracted first, so large inputs cannot overflow.
pub fn softmax(q: [f64; OUTPUTS]) -> [f64; OUTPUTS] {
    let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = q.map(|v| (v - max).exp());
    let sum: f64 = e.iter().sum();
    e.map(|v| v / sum)
}

/// Index of the largest entry; the lowest index wins ties.
pub fn argmax(p: &[f64; OUTPUTS]) -> usize {
    let mut best = 0;
    for i in 1..OUTPUTS {
        if p[i] > p[best] {
            best = i;
        }
    }
    best
}

/// Class probabilities for `x`, in [`ColorSpaceId`] index order.
pub fn forward(model: &MlpModel, x: &FeatureVector) -> [f64; OUTPUTS] {
    let (_, q) = model.layers(&model.normalization.apply(x));
    softmax(q)
}

/// The most probable color space for `x`, ties going to RGB, then HSV.
pub fn predict_space(model: &MlpModel, x: &FeatureVector) -> ColorSpaceId {
    ColorSpaceId::from_index(argmax(&forward(model, x))).expect("three outputs")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSet {
    examples: Vec<(FeatureVector, ColorSpaceId)>,
}

impl TrainingSet {
    pub fn new(examples: Vec<(FeatureVector, ColorSpaceId)>) -> Result<Self, TrainError> {
        if examples.is_empty() {
            return Err(TrainError::Empty);
        }
        Ok(Self { examples })
    }

    pub fn examples(&self) -> &[(FeatureVector, ColorSpaceId)] {
        &self.examples
    }

    pub fn features(&self) -> Vec<FeatureVector> {
        self.examples.iter().map(|(f, _)| *f).collect()
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }
}

/// Mean cross-entropy of `model` over `data` and its gradient, laid out like
/// [`MlpModel::params`].
pub fn loss_and_gradient(model: &MlpModel, data: &TrainingSet) -> (f64, Vec<f64>) {
    let hidden = model.hidden_count();
    let n = data.len() as f64;
    let mut loss = 0.0;
    let mut gw1 = vec![[0.0; INPUTS]; hidden];
    let mut gb1 = vec![0.0; hidden];
    let mut gw2 = vec![[0.0; OUTPUTS]; hidden];
    let mut gb2 = [0.0; OUTPUTS];

    for (features, target) in data.examples() {
        let x = model.normalization.apply(features);
        let (h, q) = model.layers(&x);
        let t = target.index();
        let max = q.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = max + q.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        loss += log_sum - q[t];

        let p = softmax(q);
        let mut dq = p;
        dq[t] -= 1.0;
        dq.iter_mut().for_each(|d| *d /= n);

        for (g, d) in gb2.iter_mut().zip(dq) {
            *g += d;
        }
        for j in 0..hidden {
            let mut dh = 0.0;
            for k in 0..OUTPUTS {
                gw2[j][k] += h[j] * dq[k];
                dh += model.w2[j][k] * dq[k];
            }
            let da = dh * (1.0 - h[j] * h[j]);
            gb1[j] += da;
            for (g, xi) in gw1[j].iter_mut().zip(x) {
                *g += da * xi;
            }
        }
    }

    let mut grad = Vec::with_capacity(model.param_count());
    gw1.iter().for_each(|r| grad.extend_from_slice(r));
    grad.extend_from_slice(&gb1);
    gw2.iter().for_each(|r| grad.extend_from_slice(r));
    grad.extend_from_slice(&gb2);
    (loss / n, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub hidden_count: usize,
    pub normalization: Normalization,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            epochs: 500,
            seed: 0,
            hidden_count: 15,
            normalization: Normalization::identity(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: MlpModel,
    /// Mean loss before the first update, then after each epoch
    /// (`epochs + 1` entries).
    pub loss_trace: Vec<f64>,
}

pub fn train(data: &TrainingSet, cfg: &TrainConfig) -> Result<TrainOutcome, TrainError> {
    if !(cfg.learning_rate > 0.0 && cfg.learning_rate.is_finite()) {
        return Err(TrainError::Config(format!(
            "learning rate must be positive, got {}",
            cfg.learning_rate
        )));
    }
    if cfg.epochs == 0 {
        return Err(TrainError::Config("epochs must be at least 1".into()));
    }
    if cfg.hidden_count == 0 {
        return Err(TrainError::Config("hidden_count must be at least 1".into()));
    }
    let mut model = MlpModel::random(cfg.hidden_count, cfg.seed)
        .and_then(|m| m.with_normalization(cfg.normalization.clone()))
        .map_err(|e| TrainError::Config(e.to_string()))?;

    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut params = model.params();
    for epoch in 0..=cfg.epochs {
        let (loss, grad) = loss_and_gradient(&model, data);
        if !loss.is_finite() {
            return Err(TrainError::NonFiniteLoss { epoch });
        }
        trace.push(loss);
        if epoch == cfg.epochs {
            break;
        }
        for (p, g) in params.iter_mut().zip(&grad) {
            *p -= cfg.learning_rate * g;
        }
        model.set_params(&params);
    }
    Ok(TrainOutcome {
        model,
        loss_trace: trace,
    })
}

/// Fraction of `data` whose target `model` predicts.
pub fn accuracy(model: &MlpModel, data: &TrainingSet) -> f64 {
    let hits = data
        .examples()
        .iter()
        .filter(|(f, t)| predict_space(model, f) == *t)
        .count();
    hits as f64 / data.len() as f64
}

#[derive(Serialize, Deserialize)]
struct NormalizationDoc {
    shift: Vec<f64>,
    scale: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    format_version: u32,
    hidden_count: usize,
    w1: Vec<Vec<f64>>,
    b1: Vec<f64>,
    w2: Vec<Vec<f64>>,
    b2: Vec<f64>,
    normalization: NormalizationDoc,
}

fn fixed<const N: usize>(field: &str, v: &[f64]) -> Result<[f64; N], ModelError> {
    v.try_into().map_err(|_| ModelError::Dimension {
        field: field.into(),
        expected: N,
        found: v.len(),
    })
}

impl ModelDoc {
    fn from_model(m: &MlpModel) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            hidden_count: m.hidden_count(),
            w1: m.w1.iter().map(|r| r.to_vec()).collect(),
            b1: m.b1.clone(),
            w2: m.w2.iter().map(|r| r.to_vec()).collect(),
            b2: m.b2.to_vec(),
            normalization: NormalizationDoc {
                shift: m.normalization.shift.to_vec(),
                scale: m.normalization.scale.to_vec(),
            },
        }
    }

    fn into_model(self) -> Result<MlpModel, ModelError> {
        if self.format_version != FORMAT_VERSION {
            return Err(ModelError::Version(self.format_version));
        }
        if self.hidden_count == 0 {
            return Err(ModelError::NoHiddenUnits);
        }
        for (field, found) in [
            ("w1", self.w1.len()),
            ("b1", self.b1.len()),
            ("w2", self.w2.len()),
        ] {
            if found != self.hidden_count {
                return Err(ModelError::Dimension {
                    field: field.into(),
                    expected: self.hidden_count,
                    found,
                });
            }
        }
        let w1 = self
            .w1
            .iter()
            .enumerate()
            .map(|(j, r)| fixed::<INPUTS>(&format!("w1[{j}]"), r))
            .collect::<Result<_, _>>()?;
        let w2 = self
            .w2
            .iter()
            .enumerate()
            .map(|(j, r)| fixed::<OUTPUTS>(&format!("w2[{j}]"), r))
            .collect::<Result<_, _>>()?;
        let normalization = Normalization {
            shift: fixed("normalization.shift", &self.normalization.shift)?,
            scale: fixed("normalization.scale", &self.normalization.scale)?,
        };
        MlpModel::new(w1, self.b1, w2, fixed("b2", &self.b2)?, normalization)
    }
}

/// Serializes a model to its JSON document form.
pub fn model_to_json(model: &MlpModel) -> String {
    let mut s = serde_json::to_string_pretty(&ModelDoc::from_model(model)).expect("plain data");
    s.push('\n');
    s
}

/// Parses a model document; `path` is only used in error messages.
pub fn model_from_json(text: &str, path: &Path) -> Result<MlpModel, ModelError> {
    let doc: ModelDoc = serde_json::from_str(text).map_err(|source| ModelError::Malformed {
        path: path.to_path_buf(),
        source,
    })?;
    doc.into_model().map_err(|e| ModelError::Invalid {
        path: path.to_path_buf(),
        source: Box::new(e),
    })
}

pub fn save_model(model: &MlpModel, path: impl AsRef<Path>) -> Result<(), ModelError> {
    let path = path.as_ref();
    fs::write(path, model_to_json(model)).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_model(path: impl AsRef<Path>) -> Result<MlpModel, ModelError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    model_from_json(&text, path)
}
