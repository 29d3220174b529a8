//! Supervised training with adaptive-moment gradient steps, plus a
//! finite-difference verifier for the analytic gradients.

use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::data::Example;
use super::loss::{class_weight, edge_loss};
use super::model::{GcnGradients, GcnModel};
use super::GcnError;

/// Training knobs. `batch_size: None` runs full-batch steps; otherwise
/// examples are reshuffled each epoch with the seeded generator.
/// `pos_weight: None` balances classes per example.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub pos_weight: Option<f64>,
    pub verbose: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 1e-3,
            batch_size: None,
            seed: 0,
            pos_weight: None,
            verbose: false,
        }
    }
}

/// Mean per-example loss after each epoch.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub loss_trace: Vec<f64>,
}

/// Loss of one example under the current parameters.
pub fn example_loss(
    model: &GcnModel,
    example: &Example,
    pos_weight: Option<f64>,
) -> Result<f64, GcnError> {
    let forward = model.forward_example(example)?;
    let w = pos_weight.unwrap_or_else(|| class_weight(&example.target));
    Ok(edge_loss(&forward.probabilities, &example.target, w).0)
}

/// Mean loss over a dataset under the current parameters.
pub fn dataset_loss(
    model: &GcnModel,
    data: &[Example],
    pos_weight: Option<f64>,
) -> Result<f64, GcnError> {
    if data.is_empty() {
        return Err(GcnError::BadConfig("dataset is empty".into()));
    }
    let mut total = 0.0;
    for example in data {
        total += example_loss(model, example, pos_weight)?;
    }
    Ok(total / data.len() as f64)
}

/// Loss and analytic parameter gradients for one example, by reverse-mode
/// differentiation through the edge head and every graph convolution.
pub fn backward(
    model: &GcnModel,
    example: &Example,
    pos_weight: Option<f64>,
) -> Result<(f64, GcnGradients), GcnError> {
    let forward = model.forward_example(example)?;
    let w = pos_weight.unwrap_or_else(|| class_weight(&example.target));
    let (loss, d_logits) = edge_loss(&forward.probabilities, &example.target, w);

    let mut grads = GcnGradients::zeros_like(model);
    let n = example.features.nrows();
    let embeddings = forward.hidden_states.last().expect("at least one layer");
    let h = model.hidden();

    // The symmetrized logit (i<j) feeds both ordered raw scores at weight 1/2.
    let mut d_embed = Array2::zeros(embeddings.dim());
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let symmetrized = if i < j {
                d_logits[[i, j]]
            } else {
                d_logits[[j, i]]
            };
            let upstream = symmetrized / 2.0;
            if upstream == 0.0 {
                continue;
            }
            let (pair, pre) = model.head_pre_activation(embeddings, &example.edge_costs, i, j);
            let activated = pre.mapv(|v| v.max(0.0));
            grads.out_bias += upstream;
            grads.out_weight.scaled_add(upstream, &activated);
            let mut d_pre = model.out_weight.clone();
            for (slot, value) in d_pre.iter_mut().enumerate() {
                *value *= upstream * f64::from(pre[slot] > 0.0);
            }
            for (row, &dp) in d_pre.iter().enumerate() {
                if dp == 0.0 {
                    continue;
                }
                for (col, &z) in pair.iter().enumerate() {
                    grads.edge_weight[[row, col]] += dp * z;
                }
            }
            grads.edge_bias += &d_pre;
            let d_pair = model.edge_weight.t().dot(&d_pre);
            for k in 0..h {
                d_embed[[i, k]] += d_pair[k];
                d_embed[[j, k]] += d_pair[h + k];
            }
        }
    }

    // Graph convolutions, last (linear) to first (ReLU).
    let mut d_h = d_embed;
    for k in (0..model.layers()).rev() {
        let d_z = if k + 1 < model.layers() {
            let mask = forward.hidden_states[k + 1].mapv(|v| f64::from(v > 0.0));
            &d_h * &mask
        } else {
            d_h.clone()
        };
        let propagated = example.adjacency.dot(&forward.hidden_states[k]);
        grads.layer_weights[k] = propagated.t().dot(&d_z);
        d_h = example
            .adjacency
            .t()
            .dot(&d_z)
            .dot(&model.layer_weights[k].t());
    }

    Ok((loss, grads))
}

struct Adam {
    learning_rate: f64,
    beta1: f64,
    beta2: f64,
    epsilon: f64,
    step_count: u64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
}

impl Adam {
    fn new(dim: usize, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step_count: 0,
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.step_count += 1;
        let correction1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let correction2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for i in 0..params.len() {
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * grad[i];
            self.second_moment[i] =
                self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.first_moment[i] / correction1;
            let v_hat = self.second_moment[i] / correction2;
            params[i] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
        }
    }
}

/// Gradient descent with Adam-style moments (β₁ = 0.9, β₂ = 0.999,
/// ε = 1e-8). Deterministic for a fixed config and dataset; aborts if the
/// mean loss ever turns non-finite.
pub fn train(
    model: &mut GcnModel,
    data: &[Example],
    config: &TrainConfig,
) -> Result<TrainReport, GcnError> {
    if data.is_empty() {
        return Err(GcnError::BadConfig("training set is empty".into()));
    }
    if !config.learning_rate.is_finite() || config.learning_rate < 0.0 {
        return Err(GcnError::BadConfig(format!(
            "learning rate must be finite and non-negative, got {}",
            config.learning_rate
        )));
    }
    if config.batch_size == Some(0) {
        return Err(GcnError::BadConfig("batch size must be positive".into()));
    }

    let mut params = model.parameter_vector();
    let mut adam = Adam::new(params.len(), config.learning_rate);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let batch = config.batch_size.unwrap_or(data.len()).min(data.len());
    let mut loss_trace = Vec::with_capacity(config.epochs);

    for epoch in 0..config.epochs {
        if config.batch_size.is_some() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            let mut grad_sum = GcnGradients::zeros_like(model);
            for &index in chunk {
                let (loss, grads) = backward(model, &data[index], config.pos_weight)?;
                epoch_loss += loss;
                grad_sum.add_assign(&grads);
            }
            grad_sum.scale(1.0 / chunk.len() as f64);
            adam.step(&mut params, &grad_sum.to_vector());
            model.set_parameter_vector(&params)?;
        }
        let mean = epoch_loss / data.len() as f64;
        if !mean.is_finite() {
            return Err(GcnError::NonFiniteLoss {
                epoch,
                parameter_norm: model.parameter_norm(),
            });
        }
        if config.verbose {
            eprintln!("[train] epoch {epoch} loss {mean:.6}");
        }
        loss_trace.push(mean);
    }
    Ok(TrainReport { loss_trace })
}

/// A gradient check passes when [`gradient_check`] stays below this bound.
pub const GRADIENT_CHECK_TOL: f64 = 1e-4;

/// Worst relative disagreement between the analytic gradient and central
/// finite differences (step 1e-5) across every parameter:
/// `|analytic - numeric| / max(|analytic| + |numeric|, 1e-8)`.
pub fn gradient_check(
    model: &GcnModel,
    example: &Example,
    pos_weight: Option<f64>,
) -> Result<f64, GcnError> {
    const STEP: f64 = 1e-5;
    let w = Some(pos_weight.unwrap_or_else(|| class_weight(&example.target)));
    let (_, grads) = backward(model, example, w)?;
    let analytic = grads.to_vector();
    let base = model.parameter_vector();
    let mut probe = model.clone();
    let mut worst = 0.0_f64;
    for slot in 0..base.len() {
        let mut loss_at = |value: f64| -> Result<f64, GcnError> {
            let mut perturbed = base.clone();
            perturbed[slot] = value;
            probe.set_parameter_vector(&perturbed)?;
            example_loss(&probe, example, w)
        };
        let numeric = (loss_at(base[slot] + STEP)? - loss_at(base[slot] - STEP)?) / (2.0 * STEP);
        let scale = (analytic[slot].abs() + numeric.abs()).max(1e-8);
        worst = worst.max((analytic[slot] - numeric).abs() / scale);
    }
    Ok(worst)
}
