//! Independent oracles used by the acceptance suite. Nothing here calls the
//! solver or estimator implementations it checks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use textbudget::classifier::ClassifierModel;
use textbudget::corpus::{blank_out, Document, EmbeddingTable, SelectionMask};
use textbudget::selector::bow::logistic_l1_objective;
use textbudget::selector::we::{regularizer_phi, WeSelector};

/// Best objective value found by plain subgradient descent on the
/// L1-regularized logistic objective, with the step size halved whenever the
/// best value stalls. Independent of the proximal-gradient solver under
/// test.
pub fn subgradient_descent_oracle(
    features: &[Vec<u32>],
    labels: &[f64],
    vocab_size: usize,
    budget: f64,
    iterations: usize,
) -> f64 {
    let inv_b = 1.0 / budget;
    let mut theta = vec![0.0; vocab_size];
    let mut bias = 0.0;
    let mut best = logistic_l1_objective(features, labels, &theta, bias, inv_b);
    let mut step = 0.5;
    let mut stall = 0usize;
    for _ in 0..iterations {
        let mut grad = vec![0.0; vocab_size];
        let mut grad_bias = 0.0;
        for (feat, &y) in features.iter().zip(labels) {
            let mut margin = bias;
            for &id in feat {
                margin += theta[id as usize];
            }
            let coeff = -y / (1.0 + (y * margin).exp());
            grad_bias += coeff;
            for &id in feat {
                grad[id as usize] += coeff;
            }
        }
        for (g, &w) in grad.iter_mut().zip(theta.iter()) {
            *g += inv_b * w.signum();
        }
        for (w, g) in theta.iter_mut().zip(&grad) {
            *w -= step * g;
        }
        bias -= step * grad_bias;
        let f = logistic_l1_objective(features, labels, &theta, bias, inv_b);
        if f < best - 1e-14 {
            best = f;
            stall = 0;
        } else {
            stall += 1;
            if stall >= 300 {
                step *= 0.5;
                stall = 0;
            }
        }
    }
    best
}

/// The joint objective `J(z) = loss(C(I(x, z)), y) + phi(z)` for one mask.
pub fn joint_objective(
    model: &ClassifierModel,
    doc: &Document,
    mask: &SelectionMask,
    lambda1: f64,
    lambda2: f64,
) -> f64 {
    let fragment = blank_out(doc, mask).unwrap();
    let out = model.forward(&fragment.tokens).unwrap();
    let loss = model.loss(&out, doc.label).unwrap();
    loss + regularizer_phi(mask, lambda1, lambda2)
}

/// Exact `grad_theta E_z[J(z)]` by enumerating every mask of an n-token
/// document: `sum_z P(z) J(z) grad log P(z)`.
pub fn enumerate_exact_gradient(
    model: &ClassifierModel,
    selector: &WeSelector,
    doc: &Document,
    table: &EmbeddingTable,
    lambda1: f64,
    lambda2: f64,
) -> Vec<f64> {
    let n = doc.tokens.len();
    assert!(n <= 16, "enumeration is exponential in the document length");
    let probs = selector.gate_probs(doc, table).unwrap();
    let dim = selector.theta.len();
    let mut exact = vec![0.0; dim];
    for bits in 0u32..(1 << n) {
        let mask = SelectionMask::from_bits((0..n).map(|k| bits >> k & 1 == 1).collect());
        let mut prob = 1.0;
        for (k, &p) in probs.iter().enumerate() {
            prob *= if mask.get(k) { p } else { 1.0 - p };
        }
        let objective = joint_objective(model, doc, &mask, lambda1, lambda2);
        let score = selector.logp_gradient(doc, &mask, table).unwrap();
        for (e, s) in exact.iter_mut().zip(&score) {
            *e += prob * objective * s;
        }
    }
    exact
}

/// Monte-Carlo mean and standard error of the score-function estimator
/// `J(z) * grad log P(z)`, sampled with the given seed.
#[allow(clippy::too_many_arguments)]
pub fn sampled_gradient_statistics(
    model: &ClassifierModel,
    selector: &WeSelector,
    doc: &Document,
    table: &EmbeddingTable,
    lambda1: f64,
    lambda2: f64,
    samples: usize,
    seed: u64,
) -> (Vec<f64>, Vec<f64>) {
    let probs = selector.gate_probs(doc, table).unwrap();
    let dim = selector.theta.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum = vec![0.0; dim];
    let mut sum_sq = vec![0.0; dim];
    for _ in 0..samples {
        let mask =
            SelectionMask::from_bits(probs.iter().map(|&p| rng.random::<f64>() < p).collect());
        let objective = joint_objective(model, doc, &mask, lambda1, lambda2);
        let score = selector.logp_gradient(doc, &mask, table).unwrap();
        for ((s, q), g) in sum.iter_mut().zip(sum_sq.iter_mut()).zip(&score) {
            let v = objective * g;
            *s += v;
            *q += v * v;
        }
    }
    let n = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / n).collect();
    let se: Vec<f64> = sum_sq
        .iter()
        .zip(&mean)
        .map(|(&q, &m)| ((q / n - m * m).max(0.0) / n).sqrt())
        .collect();
    (mean, se)
}

/// Uniformly random embedding table for test fixtures.
pub fn random_table(vocab: usize, dim: usize, seed: u64) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EmbeddingTable::new(
        (0..vocab)
            .map(|_| (0..dim).map(|_| rng.random_range(-0.5..=0.5)).collect())
            .collect(),
        dim,
    )
    .unwrap()
}
