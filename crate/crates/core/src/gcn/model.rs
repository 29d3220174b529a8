//! The edge-scoring network: stacked graph convolutions plus a pairwise head.

use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::data::Example;
use super::GcnError;

const CHECKPOINT_VERSION: u32 = 1;

/// Architecture knobs. `layers` counts graph convolutions (all but the last
/// apply ReLU); `hidden` is the embedding width; `head_hidden` is the width
/// of the pairwise scoring head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GcnConfig {
    pub layers: usize,
    pub hidden: usize,
    pub head_hidden: usize,
}

impl Default for GcnConfig {
    fn default() -> Self {
        Self {
            layers: 3,
            hidden: 32,
            head_hidden: 32,
        }
    }
}

/// Everything one forward pass produces.
#[derive(Debug, Clone)]
pub struct Forward {
    /// Node states `H_0..H_K`; the last entry is the final embedding.
    pub hidden_states: Vec<Array2<f64>>,
    /// Symmetrized pairwise scores with a zero diagonal.
    pub logits: Array2<f64>,
    /// `sigmoid(logits)` off the diagonal, zero on it: the edge heatmap.
    pub probabilities: Array2<f64>,
}

/// Stacked graph convolutions `H_k = ReLU(Â·H_{k-1}·W_k)` (final layer
/// linear) followed by an edge head scoring each ordered node pair from the
/// two embeddings and the normalized pair cost:
/// `raw_ij = v·ReLU(W_e·[h_i; h_j; c_ij] + b_e) + b`, then symmetrized.
#[derive(Debug, Clone, PartialEq)]
pub struct GcnModel {
    pub(crate) layer_weights: Vec<Array2<f64>>,
    pub(crate) edge_weight: Array2<f64>,
    pub(crate) edge_bias: Array1<f64>,
    pub(crate) out_weight: Array1<f64>,
    pub(crate) out_bias: f64,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Vec<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    (0..rows * cols)
        .map(|_| rng.random_range(-limit..limit))
        .collect()
}

fn relu(x: f64) -> f64 {
    x.max(0.0)
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl GcnModel {
    /// Fresh model with uniform `±sqrt(6/(fan_in+fan_out))` weights drawn
    /// from a seeded generator and zero biases.
    pub fn new(feature_dim: usize, config: &GcnConfig, seed: u64) -> Result<Self, GcnError> {
        if feature_dim == 0 || config.layers == 0 || config.hidden == 0 || config.head_hidden == 0 {
            return Err(GcnError::BadConfig(format!(
                "feature_dim {feature_dim}, layers {}, hidden {}, head_hidden {} must all be positive",
                config.layers, config.hidden, config.head_hidden
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = config.hidden;
        let m = config.head_hidden;
        let mut layer_weights = Vec::with_capacity(config.layers);
        let mut fan_in = feature_dim;
        for _ in 0..config.layers {
            let flat = glorot(&mut rng, fan_in, h, fan_in, h);
            layer_weights.push(Array2::from_shape_vec((fan_in, h), flat).expect("sized above"));
            fan_in = h;
        }
        let pair_dim = 2 * h + 1;
        let edge_weight = Array2::from_shape_vec(
            (m, pair_dim),
            glorot(&mut rng, m, pair_dim, pair_dim, m),
        )
        .expect("sized above");
        let out_weight = Array1::from_vec(glorot(&mut rng, 1, m, m, 1));
        Ok(Self {
            layer_weights,
            edge_weight,
            edge_bias: Array1::zeros(m),
            out_weight,
            out_bias: 0.0,
        })
    }

    pub fn feature_dim(&self) -> usize {
        self.layer_weights[0].nrows()
    }

    pub fn layers(&self) -> usize {
        self.layer_weights.len()
    }

    pub fn hidden(&self) -> usize {
        self.layer_weights[0].ncols()
    }

    pub fn head_hidden(&self) -> usize {
        self.edge_weight.nrows()
    }

    pub fn config(&self) -> GcnConfig {
        GcnConfig {
            layers: self.layers(),
            hidden: self.hidden(),
            head_hidden: self.head_hidden(),
        }
    }

    /// Pre-activation of the head for one ordered pair.
    pub(crate) fn head_pre_activation(
        &self,
        embeddings: &Array2<f64>,
        costs: &Array2<f64>,
        i: usize,
        j: usize,
    ) -> (Array1<f64>, Array1<f64>) {
        let h = self.hidden();
        let mut pair = Array1::zeros(2 * h + 1);
        pair.slice_mut(ndarray::s![0..h]).assign(&embeddings.row(i));
        pair.slice_mut(ndarray::s![h..2 * h])
            .assign(&embeddings.row(j));
        pair[2 * h] = costs[[i, j]];
        let pre = self.edge_weight.dot(&pair) + &self.edge_bias;
        (pair, pre)
    }

    pub fn forward(
        &self,
        features: &Array2<f64>,
        adjacency: &Array2<f64>,
        edge_costs: &Array2<f64>,
    ) -> Result<Forward, GcnError> {
        let n = features.nrows();
        if features.ncols() != self.feature_dim() {
            return Err(GcnError::Shape {
                layer: "input features".into(),
                details: format!(
                    "expected {} columns, found {}",
                    self.feature_dim(),
                    features.ncols()
                ),
            });
        }
        if adjacency.dim() != (n, n) {
            return Err(GcnError::Shape {
                layer: "adjacency".into(),
                details: format!("expected {n}×{n}, found {:?}", adjacency.dim()),
            });
        }
        if edge_costs.dim() != (n, n) {
            return Err(GcnError::Shape {
                layer: "edge costs".into(),
                details: format!("expected {n}×{n}, found {:?}", edge_costs.dim()),
            });
        }

        let mut hidden_states = Vec::with_capacity(self.layers() + 1);
        hidden_states.push(features.to_owned());
        for (k, w) in self.layer_weights.iter().enumerate() {
            let mut z = adjacency.dot(hidden_states.last().expect("seeded")).dot(w);
            if k + 1 < self.layers() {
                z.mapv_inplace(relu);
            }
            hidden_states.push(z);
        }
        let embeddings = hidden_states.last().expect("at least one layer");

        let mut raw = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let (_, pre) = self.head_pre_activation(embeddings, edge_costs, i, j);
                raw[[i, j]] = self.out_weight.dot(&pre.mapv(relu)) + self.out_bias;
            }
        }
        let mut logits = Array2::zeros((n, n));
        let mut probabilities = Array2::zeros((n, n));
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let l = (raw[[i, j]] + raw[[j, i]]) / 2.0;
                logits[[i, j]] = l;
                probabilities[[i, j]] = sigmoid(l);
            }
        }
        Ok(Forward {
            hidden_states,
            logits,
            probabilities,
        })
    }

    pub fn forward_example(&self, example: &Example) -> Result<Forward, GcnError> {
        self.forward(&example.features, &example.adjacency, &example.edge_costs)
    }

    pub fn parameter_count(&self) -> usize {
        self.layer_weights.iter().map(|w| w.len()).sum::<usize>()
            + self.edge_weight.len()
            + self.edge_bias.len()
            + self.out_weight.len()
            + 1
    }

    /// All parameters flattened in a fixed order (layer weights row-major,
    /// then edge head weights, biases, output weights, output bias).
    pub fn parameter_vector(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.parameter_count());
        for w in &self.layer_weights {
            out.extend(w.iter());
        }
        out.extend(self.edge_weight.iter());
        out.extend(self.edge_bias.iter());
        out.extend(self.out_weight.iter());
        out.push(self.out_bias);
        out
    }

    /// Inverse of [`parameter_vector`](Self::parameter_vector).
    pub fn set_parameter_vector(&mut self, params: &[f64]) -> Result<(), GcnError> {
        if params.len() != self.parameter_count() {
            return Err(GcnError::BadConfig(format!(
                "parameter vector has {} entries, model needs {}",
                params.len(),
                self.parameter_count()
            )));
        }
        let mut at = 0;
        let mut take = |len: usize| {
            let slice = &params[at..at + len];
            at += len;
            slice
        };
        for w in &mut self.layer_weights {
            let flat = take(w.len());
            for (dst, src) in w.iter_mut().zip(flat) {
                *dst = *src;
            }
        }
        let len = self.edge_weight.len();
        for (dst, src) in self.edge_weight.iter_mut().zip(take(len)) {
            *dst = *src;
        }
        let len = self.edge_bias.len();
        for (dst, src) in self.edge_bias.iter_mut().zip(take(len)) {
            *dst = *src;
        }
        let len = self.out_weight.len();
        for (dst, src) in self.out_weight.iter_mut().zip(take(len)) {
            *dst = *src;
        }
        self.out_bias = take(1)[0];
        Ok(())
    }

    pub fn parameter_norm(&self) -> f64 {
        self.parameter_vector()
            .iter()
            .map(|p| p * p)
            .sum::<f64>()
            .sqrt()
    }

    pub fn to_checkpoint_string(&self) -> Result<String, GcnError> {
        let file = CheckpointFile {
            version: CHECKPOINT_VERSION,
            layers: self.layers(),
            hidden: self.hidden(),
            head_hidden: self.head_hidden(),
            feature_dim: self.feature_dim(),
            layer_weights: self
                .layer_weights
                .iter()
                .map(|w| w.iter().copied().collect())
                .collect(),
            edge_weight: self.edge_weight.iter().copied().collect(),
            edge_bias: self.edge_bias.to_vec(),
            out_weight: self.out_weight.to_vec(),
            out_bias: self.out_bias,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_checkpoint_string(text: &str) -> Result<Self, GcnError> {
        let file: CheckpointFile = serde_json::from_str(text)?;
        if file.version != CHECKPOINT_VERSION {
            return Err(GcnError::UnsupportedVersion {
                found: file.version,
                expected: CHECKPOINT_VERSION,
            });
        }
        let config = GcnConfig {
            layers: file.layers,
            hidden: file.hidden,
            head_hidden: file.head_hidden,
        };
        let mut model = GcnModel::new(file.feature_dim, &config, 0)?;
        if file.layer_weights.len() != file.layers {
            return Err(GcnError::Corrupt(format!(
                "expected {} layer weight blocks, found {}",
                file.layers,
                file.layer_weights.len()
            )));
        }
        let mut params = Vec::with_capacity(model.parameter_count());
        for block in &file.layer_weights {
            params.extend(block.iter());
        }
        params.extend(file.edge_weight.iter());
        params.extend(file.edge_bias.iter());
        params.extend(file.out_weight.iter());
        params.push(file.out_bias);
        if params.len() != model.parameter_count() {
            return Err(GcnError::Corrupt(format!(
                "checkpoint carries {} parameters, architecture needs {}",
                params.len(),
                model.parameter_count()
            )));
        }
        if let Some(bad) = params.iter().find(|p| !p.is_finite()) {
            return Err(GcnError::Corrupt(format!("non-finite parameter {bad}")));
        }
        model.set_parameter_vector(&params)?;
        Ok(model)
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<(), GcnError> {
        let text = self.to_checkpoint_string()?;
        std::fs::write(path, text).map_err(|source| GcnError::Io {
            action: "write",
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self, GcnError> {
        let text = std::fs::read_to_string(path).map_err(|source| GcnError::Io {
            action: "read",
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_checkpoint_string(&text)
    }
}

/// Per-parameter gradients, shaped exactly like the model.
#[derive(Debug, Clone)]
pub struct GcnGradients {
    pub layer_weights: Vec<Array2<f64>>,
    pub edge_weight: Array2<f64>,
    pub edge_bias: Array1<f64>,
    pub out_weight: Array1<f64>,
    pub out_bias: f64,
}

impl GcnGradients {
    pub fn zeros_like(model: &GcnModel) -> Self {
        Self {
            layer_weights: model
                .layer_weights
                .iter()
                .map(|w| Array2::zeros(w.dim()))
                .collect(),
            edge_weight: Array2::zeros(model.edge_weight.dim()),
            edge_bias: Array1::zeros(model.edge_bias.len()),
            out_weight: Array1::zeros(model.out_weight.len()),
            out_bias: 0.0,
        }
    }

    pub fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.layer_weights.iter_mut().zip(&other.layer_weights) {
            *dst += src;
        }
        self.edge_weight += &other.edge_weight;
        self.edge_bias += &other.edge_bias;
        self.out_weight += &other.out_weight;
        self.out_bias += other.out_bias;
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.layer_weights {
            *w *= factor;
        }
        self.edge_weight *= factor;
        self.edge_bias *= factor;
        self.out_weight *= factor;
        self.out_bias *= factor;
    }

    /// Same flattening order as [`GcnModel::parameter_vector`].
    pub fn to_vector(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for w in &self.layer_weights {
            out.extend(w.iter());
        }
        out.extend(self.edge_weight.iter());
        out.extend(self.edge_bias.iter());
        out.extend(self.out_weight.iter());
        out.push(self.out_bias);
        out
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointFile {
    version: u32,
    layers: usize,
    hidden: usize,
    head_hidden: usize,
    feature_dim: usize,
    layer_weights: Vec<Vec<f64>>,
    edge_weight: Vec<f64>,
    edge_bias: Vec<f64>,
    out_weight: Vec<f64>,
    out_bias: f64,
}
