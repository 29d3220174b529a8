//! Class-weighted binary cross-entropy over undirected edges.

use ndarray::Array2;

/// Probabilities are clamped to `[PROB_CLIP, 1 - PROB_CLIP]` inside the
/// logarithms only; the gradient uses the raw values.
pub const PROB_CLIP: f64 = 1e-7;

/// Default positive-class weight for one example: negatives per positive
/// over the upper triangle (1 when there are no positives).
pub fn class_weight(target: &Array2<f64>) -> f64 {
    let n = target.nrows();
    let mut pos = 0u64;
    let mut neg = 0u64;
    for i in 0..n {
        for j in (i + 1)..n {
            if target[[i, j]] > 0.5 {
                pos += 1;
            } else {
                neg += 1;
            }
        }
    }
    if pos == 0 {
        1.0
    } else {
        neg as f64 / pos as f64
    }
}

/// Weighted binary cross-entropy averaged over the `N(N-1)/2` upper-triangle
/// edges, with the analytic gradient with respect to the symmetrized logits
/// (nonzero only above the diagonal): `w·(p - t) / M`.
pub fn edge_loss(
    probabilities: &Array2<f64>,
    target: &Array2<f64>,
    pos_weight: f64,
) -> (f64, Array2<f64>) {
    let n = target.nrows();
    debug_assert_eq!(probabilities.dim(), target.dim());
    let mut grad = Array2::zeros((n, n));
    if n < 2 {
        return (0.0, grad);
    }
    let m = (n * (n - 1) / 2) as f64;
    let mut loss = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            let p = probabilities[[i, j]];
            let t = target[[i, j]];
            let w = if t > 0.5 { pos_weight } else { 1.0 };
            let clipped = p.clamp(PROB_CLIP, 1.0 - PROB_CLIP);
            loss += w * (-t * clipped.ln() - (1.0 - t) * (1.0 - clipped).ln());
            grad[[i, j]] = w * (p - t) / m;
        }
    }
    (loss / m, grad)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand::SeedableRng;

    fn sigmoid(x: f64) -> f64 {
        1.0 / (1.0 + (-x).exp())
    }

    #[test]
    fn class_weight_counts_upper_triangle_imbalance() {
        let mut target = Array2::zeros((5, 5));
        target[[0, 1]] = 1.0;
        target[[1, 0]] = 1.0;
        target[[2, 4]] = 1.0;
        target[[4, 2]] = 1.0;
        target[[1, 3]] = 1.0;
        target[[3, 1]] = 1.0;
        // 10 upper entries, 3 positive
        assert_abs_diff_eq!(class_weight(&target), 7.0 / 3.0, epsilon = 1e-15);
        assert_eq!(class_weight(&Array2::zeros((4, 4))), 1.0);
    }

    #[test]
    fn perfect_prediction_has_near_zero_loss() {
        let mut target = Array2::zeros((4, 4));
        target[[0, 1]] = 1.0;
        target[[1, 0]] = 1.0;
        target[[2, 3]] = 1.0;
        target[[3, 2]] = 1.0;
        let (loss, grad) = edge_loss(&target.clone(), &target, 2.0);
        assert!(loss < 1e-5);
        for g in grad.iter() {
            assert_eq!(*g, 0.0);
        }
    }

    #[test]
    fn uniform_half_probabilities_cost_a_weighted_ln_two() {
        let n = 5;
        let mut target = Array2::zeros((n, n));
        target[[0, 1]] = 1.0;
        target[[1, 0]] = 1.0;
        target[[0, 4]] = 1.0;
        target[[4, 0]] = 1.0;
        let probabilities = Array2::from_shape_fn((n, n), |(i, j)| {
            if i == j {
                0.0
            } else {
                0.5
            }
        });
        let w = 4.0;
        let (loss, _) = edge_loss(&probabilities, &target, w);
        let m = 10.0;
        let expected = (w * 2.0 + 8.0) * std::f64::consts::LN_2 / m;
        assert_abs_diff_eq!(loss, expected, epsilon = 1e-12);
    }

    #[test]
    fn gradient_matches_finite_differences_through_the_logistic() {
        let n = 5;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut logits = Array2::zeros((n, n));
        let mut target = Array2::zeros((n, n));
        for i in 0..n {
            for j in (i + 1)..n {
                let l = rng.random_range(-2.0..2.0);
                logits[[i, j]] = l;
                logits[[j, i]] = l;
                if rng.random_range(0.0..1.0) < 0.4 {
                    target[[i, j]] = 1.0;
                    target[[j, i]] = 1.0;
                }
            }
        }
        let probabilities = logits.mapv(sigmoid);
        let pos_weight = class_weight(&target);
        let (_, grad) = edge_loss(&probabilities, &target, pos_weight);

        let step = 1e-6;
        for i in 0..n {
            for j in 0..n {
                if j <= i {
                    assert_eq!(grad[[i, j]], 0.0, "gradient must live above the diagonal");
                    continue;
                }
                let bump = |delta: f64| {
                    let mut perturbed = probabilities.clone();
                    perturbed[[i, j]] = sigmoid(logits[[i, j]] + delta);
                    edge_loss(&perturbed, &target, pos_weight).0
                };
                let numeric = (bump(step) - bump(-step)) / (2.0 * step);
                assert_abs_diff_eq!(grad[[i, j]], numeric, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn single_node_has_no_edges_to_score() {
        let zeros = Array2::<f64>::zeros((1, 1));
        let (loss, grad) = edge_loss(&zeros, &zeros, 3.0);
        assert_eq!(loss, 0.0);
        assert_eq!(grad, zeros);
    }
}
