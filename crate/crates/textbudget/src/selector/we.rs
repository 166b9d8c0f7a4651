//! Word-embedding gate selector.
//!
//! Each word `w_k` is kept with probability `sigma(theta_S^T w_vec_k)`,
//! independently of its neighbors, so the whole-document selection
//! probability factorizes over tokens. Training samples masks, scores them
//! with the downstream classifier plus the sparsity/continuity regularizer
//!
//! ```text
//!   phi(z) = lambda1 ||z||_1 + lambda2 sum_{k=2..N} |z_k - z_{k-1}|
//! ```
//!
//! and follows the doubly stochastic recipe: pathwise gradients for the
//! classifier, score-function gradients `(J - baseline) * grad log P(z|x)`
//! for the gate, with an exponential-moving-average baseline.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::classifier::ClassifierModel;
use crate::corpus::{blank_out, Document, EmbeddingTable, LabeledCorpus, SelectionMask};
use crate::error::{Error, Result};

/// Dense gate parameters over the embedding space.
#[derive(Debug, Clone, PartialEq)]
pub struct WeSelector {
    pub theta: Vec<f64>,
    pub lambda1: f64,
    pub lambda2: f64,
    /// Deterministic inference keeps tokens with `p >= threshold`.
    pub threshold: f64,
}

impl WeSelector {
    /// Zero-initialized gate: every token starts at probability 0.5.
    pub fn new(dim: usize, lambda1: f64, lambda2: f64) -> Self {
        WeSelector {
            theta: vec![0.0; dim],
            lambda1,
            lambda2,
            threshold: 0.5,
        }
    }

    /// Per-token keep probabilities `sigma(theta^T w_vec_k)`.
    pub fn gate_probs(&self, doc: &Document, table: &EmbeddingTable) -> Result<Vec<f64>> {
        if table.dim() != self.theta.len() {
            return Err(Error::Contract(format!(
                "embedding dimension {} does not match selector dimension {}",
                table.dim(),
                self.theta.len()
            )));
        }
        doc.tokens
            .iter()
            .map(|&t| {
                if t as usize >= table.vocab_size() {
                    return Err(Error::Contract(format!(
                        "token id {} out of range for embedding table of {} rows",
                        t,
                        table.vocab_size()
                    )));
                }
                let dot: f64 = self
                    .theta
                    .iter()
                    .zip(table.row(t))
                    .map(|(a, b)| a * b)
                    .sum();
                Ok(sigmoid(dot))
            })
            .collect()
    }

    /// Score-function factor `grad_theta log P(z|x) = sum_k (z_k - p_k) w_vec_k`.
    pub fn logp_gradient(
        &self,
        doc: &Document,
        mask: &SelectionMask,
        table: &EmbeddingTable,
    ) -> Result<Vec<f64>> {
        if mask.len() != doc.tokens.len() {
            return Err(Error::Contract(
                "mask does not align with the document".into(),
            ));
        }
        let probs = self.gate_probs(doc, table)?;
        let mut grad = vec![0.0; self.theta.len()];
        for (k, &t) in doc.tokens.iter().enumerate() {
            let z = if mask.get(k) { 1.0 } else { 0.0 };
            let coeff = z - probs[k];
            for (g, &w) in grad.iter_mut().zip(table.row(t)) {
                *g += coeff * w;
            }
        }
        Ok(grad)
    }

    pub fn to_json(&self) -> Result<String> {
        let file = WeSelectorFile {
            theta_s: self.theta.clone(),
            lambda1: self.lambda1,
            lambda2: self.lambda2,
            threshold: self.threshold,
            embedding_dim: self.theta.len(),
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(content: &str) -> Result<WeSelector> {
        let file: WeSelectorFile = serde_json::from_str(content)?;
        if file.theta_s.len() != file.embedding_dim {
            return Err(Error::Format(
                "theta_S length does not match embedding_dim".into(),
            ));
        }
        if !(file.threshold > 0.0 && file.threshold < 1.0) {
            return Err(Error::Format("threshold must be in (0, 1)".into()));
        }
        Ok(WeSelector {
            theta: file.theta_s,
            lambda1: file.lambda1,
            lambda2: file.lambda2,
            threshold: file.threshold,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct WeSelectorFile {
    #[serde(rename = "theta_S")]
    theta_s: Vec<f64>,
    lambda1: f64,
    lambda2: f64,
    threshold: f64,
    embedding_dim: usize,
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Independent Bernoulli draw per token probability.
pub fn sample_mask<R: Rng>(probs: &[f64], rng: &mut R) -> SelectionMask {
    SelectionMask::from_bits(probs.iter().map(|&p| rng.random::<f64>() < p).collect())
}

/// Deterministic mask: bit set iff `p_k >= threshold`.
pub fn threshold_mask(probs: &[f64], threshold: f64) -> SelectionMask {
    SelectionMask::from_bits(probs.iter().map(|&p| p >= threshold).collect())
}

/// Sparsity/continuity penalty
/// `lambda1 * popcount(z) + lambda2 * sum_{k=2..N} |z_k - z_{k-1}|`.
/// Empty and singleton masks have zero continuity term.
pub fn regularizer_phi(mask: &SelectionMask, lambda1: f64, lambda2: f64) -> f64 {
    let sparsity = lambda1 * mask.count_selected() as f64;
    let mut transitions = 0usize;
    for w in mask.bits().windows(2) {
        if w[0] != w[1] {
            transitions += 1;
        }
    }
    sparsity + lambda2 * transitions as f64
}

/// Settings for [`joint_train`].
#[derive(Debug, Clone)]
pub struct JointConfig {
    pub lambda1: f64,
    pub lambda2: f64,
    pub lr_classifier: f64,
    pub lr_selector: f64,
    pub epochs: usize,
    pub samples_per_doc: usize,
    pub seed: u64,
}

impl JointConfig {
    fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.samples_per_doc == 0 {
            return Err(Error::Config(
                "epochs and samples_per_doc must be >= 1".into(),
            ));
        }
        if self.lambda1 < 0.0 || self.lambda2 < 0.0 {
            return Err(Error::Config("lambda weights must be non-negative".into()));
        }
        Ok(())
    }
}

/// Per-epoch trace of the joint objective and the sampled selection rate.
#[derive(Debug, Clone, Copy)]
pub struct JointEpochStats {
    pub mean_objective: f64,
    pub mean_selection_rate: f64,
}

/// Train the gate and the classifier end to end.
///
/// For each example a mask is sampled from the gate; the classifier takes a
/// pathwise SGD step on the fragment loss, and the gate takes a
/// score-function step `(J - baseline) * grad log P(z|x)` where
/// `J = loss + phi(z)` and the baseline is an EMA of `J` (decay 0.9).
pub fn joint_train(
    mut model: ClassifierModel,
    mut selector: WeSelector,
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
    cfg: &JointConfig,
) -> Result<(ClassifierModel, WeSelector, Vec<JointEpochStats>)> {
    cfg.validate()?;
    if corpus.is_empty() {
        return Err(Error::Contract("training corpus is empty".into()));
    }
    selector.lambda1 = cfg.lambda1;
    selector.lambda2 = cfg.lambda2;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut baseline = 0.0;
    let mut baseline_primed = false;
    let mut trace = Vec::with_capacity(cfg.epochs);

    for _epoch in 0..cfg.epochs {
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }

        let mut objective_sum = 0.0;
        let mut rate_sum = 0.0;
        let mut samples = 0usize;

        for &doc_idx in &order {
            let doc = &corpus.documents[doc_idx];
            for _ in 0..cfg.samples_per_doc {
                let probs = selector.gate_probs(doc, table)?;
                let mask = sample_mask(&probs, &mut rng);
                let fragment = blank_out(doc, &mask)?;

                let (loss, grads) = model.param_gradients(&fragment.tokens, doc.label)?;
                let objective = loss + regularizer_phi(&mask, cfg.lambda1, cfg.lambda2);
                if !objective.is_finite() {
                    return Err(Error::Training {
                        batch: doc_idx,
                        message: format!("non-finite joint objective {}", objective),
                    });
                }

                model.apply_gradients(&grads, cfg.lr_classifier);

                if cfg.lr_selector != 0.0 {
                    let advantage = if baseline_primed {
                        objective - baseline
                    } else {
                        objective
                    };
                    let score = selector.logp_gradient(doc, &mask, table)?;
                    for (t, g) in selector.theta.iter_mut().zip(score) {
                        *t -= cfg.lr_selector * advantage * g;
                    }
                }

                baseline = if baseline_primed {
                    0.9 * baseline + 0.1 * objective
                } else {
                    objective
                };
                baseline_primed = true;

                objective_sum += objective;
                rate_sum += mask.selection_fraction();
                samples += 1;
            }
        }

        trace.push(JointEpochStats {
            mean_objective: objective_sum / samples as f64,
            mean_selection_rate: rate_sum / samples as f64,
        });
    }

    Ok((model, selector, trace))
}

/// Result of [`tune_we_budget`].
#[derive(Debug, Clone)]
pub struct WeTuneOutcome {
    pub lambda1: f64,
    pub lambda2: f64,
    pub achieved_rate: f64,
    pub selector: WeSelector,
    pub classifier: ClassifierModel,
}

/// Train one gate per `(lambda1, lambda2)` grid point and keep the one whose
/// deterministic selection rate over `corpus` lands nearest `target_rate`.
/// Earlier grid points win ties.
pub fn tune_we_budget(
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
    classifier_template: &ClassifierModel,
    target_rate: f64,
    grid: &[(f64, f64)],
    base_cfg: &JointConfig,
) -> Result<WeTuneOutcome> {
    if grid.is_empty() {
        return Err(Error::Config("candidate grid is empty".into()));
    }
    let mut best: Option<WeTuneOutcome> = None;
    for (idx, &(lambda1, lambda2)) in grid.iter().enumerate() {
        let cfg = JointConfig {
            lambda1,
            lambda2,
            seed: base_cfg.seed.wrapping_add(idx as u64),
            ..base_cfg.clone()
        };
        let selector = WeSelector::new(table.dim(), lambda1, lambda2);
        let (model, selector, _) =
            joint_train(classifier_template.clone(), selector, corpus, table, &cfg)?;
        let achieved = deterministic_rate(&selector, corpus, table)?;
        let distance = (achieved - target_rate).abs();
        let better = best
            .as_ref()
            .map(|b| distance < (b.achieved_rate - target_rate).abs())
            .unwrap_or(true);
        if better {
            best = Some(WeTuneOutcome {
                lambda1,
                lambda2,
                achieved_rate: achieved,
                selector,
                classifier: model,
            });
        }
    }
    Ok(best.expect("grid is non-empty"))
}

/// Token-weighted selection rate of the thresholded gate over a corpus.
pub fn deterministic_rate(
    selector: &WeSelector,
    corpus: &LabeledCorpus,
    table: &EmbeddingTable,
) -> Result<f64> {
    let total = corpus.total_tokens();
    if total == 0 {
        return Err(Error::Contract(
            "selection rate over an empty corpus".into(),
        ));
    }
    let mut selected = 0usize;
    for doc in &corpus.documents {
        let probs = selector.gate_probs(doc, table)?;
        selected += threshold_mask(&probs, selector.threshold).count_selected();
    }
    Ok(selected as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::Arch;
    use crate::corpus::{gen_synthetic, Label, SyntheticSpec};
    use proptest::prelude::*;

    fn table_from_rows(rows: Vec<Vec<f64>>) -> EmbeddingTable {
        let dim = rows[0].len();
        EmbeddingTable::new(rows, dim).unwrap()
    }

    fn random_table(vocab: usize, dim: usize, seed: u64) -> EmbeddingTable {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        table_from_rows(
            (0..vocab)
                .map(|_| (0..dim).map(|_| rng.random_range(-1.0..=1.0)).collect())
                .collect(),
        )
    }

    #[test]
    fn zero_gate_gives_half_probabilities() {
        let table = random_table(5, 3, 1);
        let sel = WeSelector::new(3, 0.0, 0.0);
        let doc = Document::new(vec![0, 2, 4], Label::Class(0));
        let probs = sel.gate_probs(&doc, &table).unwrap();
        assert!(probs.iter().all(|&p| (p - 0.5).abs() < 1e-15));
    }

    #[test]
    fn sigmoid_analytic_values() {
        // theta^T w = 1 and -1
        let table = table_from_rows(vec![vec![1.0], vec![-1.0]]);
        let sel = WeSelector {
            theta: vec![1.0],
            lambda1: 0.0,
            lambda2: 0.0,
            threshold: 0.5,
        };
        let doc = Document::new(vec![0, 1], Label::Class(0));
        let probs = sel.gate_probs(&doc, &table).unwrap();
        assert!((probs[0] - 0.731_058_6).abs() < 1e-6);
        assert!((probs[1] - 0.268_941_4).abs() < 1e-6);
        assert!((probs[0] + probs[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identical_tokens_share_probabilities() {
        let table = random_table(6, 4, 2);
        let sel = WeSelector {
            theta: vec![0.3, -0.7, 0.2, 0.9],
            lambda1: 0.0,
            lambda2: 0.0,
            threshold: 0.5,
        };
        let doc = Document::new(vec![3, 1, 3, 3], Label::Class(0));
        let probs = sel.gate_probs(&doc, &table).unwrap();
        assert_eq!(probs[0], probs[2]);
        assert_eq!(probs[0], probs[3]);
    }

    #[test]
    fn dimension_mismatch_is_contract_violation() {
        let table = random_table(4, 3, 3);
        let sel = WeSelector::new(5, 0.0, 0.0);
        let doc = Document::new(vec![0], Label::Class(0));
        assert!(matches!(
            sel.gate_probs(&doc, &table),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn sampling_is_seeded_and_unbiased_at_half() {
        let probs = vec![0.5; 100_000];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mask = sample_mask(&probs, &mut rng);
        let mean = mask.selection_fraction();
        // CLT: sd = 0.5/sqrt(1e5) ~ 0.00158; allow 3 sigma
        assert!((mean - 0.5).abs() < 0.005, "sample mean {}", mean);

        let mut rng_a = ChaCha8Rng::seed_from_u64(10);
        let mut rng_b = ChaCha8Rng::seed_from_u64(10);
        assert_eq!(
            sample_mask(&probs, &mut rng_a),
            sample_mask(&probs, &mut rng_b)
        );

        // near-certain gates keep almost everything
        let eps = 0.01;
        let high = vec![1.0 - eps; 1000];
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let kept = sample_mask(&high, &mut rng).count_selected() as f64;
        // binomial sd = sqrt(1000 * eps * (1 - eps)) ~ 3.1; allow 4 sigma
        assert!((kept - 990.0).abs() < 13.0, "kept {}", kept);
    }

    #[test]
    fn threshold_mask_edges() {
        let probs = vec![0.6, 0.4, 0.5];
        assert_eq!(threshold_mask(&probs, 0.5).bits(), &[true, false, true]);
        assert_eq!(threshold_mask(&probs, 0.61).count_selected(), 0);
        assert_eq!(threshold_mask(&probs, 1e-9).count_selected(), 3);
    }

    #[test]
    fn phi_hand_arithmetic() {
        let mask = SelectionMask::from_bits(vec![true, true, false, true]);
        // sparsity 1*3, transitions |1-1| + |0-1| + |1-0| = 2 -> 1*3 + 2*2 = 7
        assert_eq!(regularizer_phi(&mask, 1.0, 2.0), 7.0);
        assert_eq!(regularizer_phi(&SelectionMask::zeros(4), 1.0, 2.0), 0.0);
        let ones = SelectionMask::ones(5);
        assert_eq!(regularizer_phi(&ones, 0.7, 123.0), 0.7 * 5.0);
        assert_eq!(regularizer_phi(&SelectionMask::zeros(0), 1.0, 1.0), 0.0);
        assert_eq!(regularizer_phi(&SelectionMask::ones(1), 1.0, 5.0), 1.0);
    }

    #[test]
    fn logp_gradient_closed_form_at_zero_theta() {
        let e1 = vec![1.0, 0.0];
        let e2 = vec![0.0, 1.0];
        let table = table_from_rows(vec![e1.clone(), e2.clone()]);
        let sel = WeSelector::new(2, 0.0, 0.0);
        let doc = Document::new(vec![0, 1], Label::Class(0));
        let mask = SelectionMask::from_bits(vec![true, false]);
        let grad = sel.logp_gradient(&doc, &mask, &table).unwrap();
        // (1 - 0.5) e1 + (0 - 0.5) e2
        assert!((grad[0] - 0.5).abs() < 1e-15);
        assert!((grad[1] + 0.5).abs() < 1e-15);
    }

    #[test]
    fn logp_gradient_vanishes_at_saturated_gates() {
        let table = table_from_rows(vec![vec![1.0], vec![-1.0]]);
        let sel = WeSelector {
            theta: vec![60.0], // p ~ 1 and ~ 0
            lambda1: 0.0,
            lambda2: 0.0,
            threshold: 0.5,
        };
        let doc = Document::new(vec![0, 1], Label::Class(0));
        let mask = SelectionMask::from_bits(vec![true, false]); // z = round(p)
        let grad = sel.logp_gradient(&doc, &mask, &table).unwrap();
        assert!(grad[0].abs() < 1e-12, "grad {:?}", grad);
    }

    #[test]
    fn logp_gradient_matches_finite_differences() {
        let table = random_table(8, 4, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let theta: Vec<f64> = (0..4).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let sel = WeSelector {
            theta: theta.clone(),
            lambda1: 0.0,
            lambda2: 0.0,
            threshold: 0.5,
        };
        let doc = Document::new(vec![1, 3, 5, 7, 2], Label::Class(0));
        let mask = SelectionMask::from_bits(vec![true, false, true, true, false]);
        let analytic = sel.logp_gradient(&doc, &mask, &table).unwrap();

        // oracle: central differences of sum_k log P(z_k | theta)
        let log_likelihood = |theta: &[f64]| -> f64 {
            doc.tokens
                .iter()
                .enumerate()
                .map(|(k, &t)| {
                    let dot: f64 = theta.iter().zip(table.row(t)).map(|(a, b)| a * b).sum();
                    let p = 1.0 / (1.0 + (-dot).exp());
                    if mask.get(k) {
                        p.ln()
                    } else {
                        (1.0 - p).ln()
                    }
                })
                .sum()
        };
        let eps = 1e-5;
        for i in 0..theta.len() {
            let mut up = theta.clone();
            up[i] += eps;
            let mut down = theta.clone();
            down[i] -= eps;
            let numeric = (log_likelihood(&up) - log_likelihood(&down)) / (2.0 * eps);
            let rel =
                (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
            assert!(rel < 1e-4, "coordinate {}: rel err {}", i, rel);
        }
    }

    fn small_setup(seed: u64) -> (LabeledCorpus, EmbeddingTable, ClassifierModel) {
        let spec = SyntheticSpec {
            num_docs: 60,
            vocab_size: 24,
            doc_len: 10,
            num_classes: 2,
            keyword_rate: 0.25,
            noise_rate: 0.0,
            keywords_per_class: 3,
        };
        let (corpus, _) = gen_synthetic(&spec, seed).unwrap();
        let table = random_table(24, 5, seed + 1);
        let model = ClassifierModel::new(Arch::BagOfEmbeddings, &table, 6, 2, seed + 2).unwrap();
        (corpus, table, model)
    }

    #[test]
    fn heavy_sparsity_pressure_drives_rate_down() {
        let (corpus, table, model) = small_setup(40);
        let cfg = JointConfig {
            lambda1: 5.0,
            lambda2: 0.0,
            lr_classifier: 0.1,
            lr_selector: 0.05,
            epochs: 8,
            samples_per_doc: 1,
            seed: 41,
        };
        let sel = WeSelector::new(5, cfg.lambda1, cfg.lambda2);
        let (_, _, trace) = joint_train(model, sel, &corpus, &table, &cfg).unwrap();
        let first = trace.first().unwrap().mean_selection_rate;
        let last = trace.last().unwrap().mean_selection_rate;
        assert!(
            last < first - 0.05,
            "selection rate should fall: first {} last {}",
            first,
            last
        );
        // non-increasing trend with slack
        for w in trace.windows(2) {
            assert!(
                w[1].mean_selection_rate <= w[0].mean_selection_rate + 0.05,
                "trace not monotone within slack: {:?}",
                trace
            );
        }
    }

    #[test]
    fn unpressured_gate_lets_classifier_learn() {
        let (corpus, table, model) = small_setup(50);
        let cfg = JointConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            lr_classifier: 0.3,
            lr_selector: 0.02,
            epochs: 25,
            samples_per_doc: 1,
            seed: 51,
        };
        let sel = WeSelector::new(5, 0.0, 0.0);
        let (model, _, _) = joint_train(model, sel, &corpus, &table, &cfg).unwrap();
        let acc = crate::classifier::accuracy(&model, &corpus).unwrap();
        assert!(acc >= 0.95, "accuracy {}", acc);
    }

    #[test]
    fn zero_selector_rate_leaves_theta_untouched() {
        let (corpus, table, model) = small_setup(60);
        let cfg = JointConfig {
            lambda1: 0.5,
            lambda2: 0.5,
            lr_classifier: 0.1,
            lr_selector: 0.0,
            epochs: 2,
            samples_per_doc: 1,
            seed: 61,
        };
        let sel = WeSelector {
            theta: vec![0.25, -0.5, 0.125, 1.0, -0.75],
            lambda1: 0.5,
            lambda2: 0.5,
            threshold: 0.5,
        };
        let before: Vec<u64> = sel.theta.iter().map(|v| v.to_bits()).collect();
        let (_, sel, _) = joint_train(model, sel, &corpus, &table, &cfg).unwrap();
        let after: Vec<u64> = sel.theta.iter().map(|v| v.to_bits()).collect();
        assert_eq!(before, after);
    }

    #[test]
    fn joint_train_is_deterministic() {
        let (corpus, table, model) = small_setup(70);
        let cfg = JointConfig {
            lambda1: 0.2,
            lambda2: 0.1,
            lr_classifier: 0.1,
            lr_selector: 0.02,
            epochs: 3,
            samples_per_doc: 2,
            seed: 71,
        };
        let run = || {
            let sel = WeSelector::new(5, cfg.lambda1, cfg.lambda2);
            joint_train(model.clone(), sel, &corpus, &table, &cfg).unwrap()
        };
        let (m1, s1, _) = run();
        let (m2, s2, _) = run();
        assert_eq!(s1.theta, s2.theta);
        let bits = |m: &ClassifierModel| {
            m.flat_params()
                .iter()
                .map(|v| v.to_bits())
                .collect::<Vec<_>>()
        };
        assert_eq!(bits(&m1), bits(&m2));
    }

    #[test]
    fn single_point_grid_is_returned() {
        let (corpus, table, model) = small_setup(80);
        let cfg = JointConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            lr_classifier: 0.1,
            lr_selector: 0.02,
            epochs: 2,
            samples_per_doc: 1,
            seed: 81,
        };
        let out = tune_we_budget(&corpus, &table, &model, 0.5, &[(0.3, 0.7)], &cfg).unwrap();
        assert_eq!((out.lambda1, out.lambda2), (0.3, 0.7));
    }

    #[test]
    fn stronger_sparsity_weight_never_selects_more() {
        let (corpus, table, model) = small_setup(85);
        let run = |lambda1: f64| {
            let cfg = JointConfig {
                lambda1,
                lambda2: 0.1,
                lr_classifier: 0.1,
                lr_selector: 0.05,
                epochs: 6,
                samples_per_doc: 1,
                seed: 86,
            };
            let sel = WeSelector::new(5, lambda1, 0.1);
            let (_, sel, _) = joint_train(model.clone(), sel, &corpus, &table, &cfg).unwrap();
            deterministic_rate(&sel, &corpus, &table).unwrap()
        };
        let light = run(0.2);
        let heavy = run(5.0);
        assert!(
            heavy <= light + 0.05,
            "rate rose with sparsity weight: {} -> {}",
            light,
            heavy
        );
    }

    #[test]
    fn unregularized_grid_point_wins_a_dense_target() {
        let (corpus, table, model) = small_setup(95);
        let cfg = JointConfig {
            lambda1: 0.0,
            lambda2: 0.0,
            lr_classifier: 0.1,
            lr_selector: 0.05,
            epochs: 6,
            samples_per_doc: 1,
            seed: 96,
        };
        let out = tune_we_budget(
            &corpus,
            &table,
            &model,
            1.0,
            &[(0.0, 0.0), (4.0, 1.0)],
            &cfg,
        )
        .unwrap();
        assert_eq!(
            (out.lambda1, out.lambda2),
            (0.0, 0.0),
            "achieved {}",
            out.achieved_rate
        );
    }

    #[test]
    fn we_selector_json_round_trip() {
        let sel = WeSelector {
            theta: vec![0.5, -1.25, 3.0],
            lambda1: 1e-4,
            lambda2: 2.0,
            threshold: 0.5,
        };
        let json = sel.to_json().unwrap();
        assert!(json.contains("theta_S"));
        let loaded = WeSelector::from_json(&json).unwrap();
        assert_eq!(sel, loaded);
    }

    proptest! {
        #[test]
        fn sigma_symmetry(theta in proptest::collection::vec(-2.0f64..2.0, 3), seed in 0u64..100) {
            let table = random_table(6, 3, seed);
            let doc = Document::new(vec![0, 1, 2, 3, 4, 5], Label::Class(0));
            let pos = WeSelector { theta: theta.clone(), lambda1: 0.0, lambda2: 0.0, threshold: 0.5 };
            let neg = WeSelector {
                theta: theta.iter().map(|t| -t).collect(),
                lambda1: 0.0,
                lambda2: 0.0,
                threshold: 0.5,
            };
            let p = pos.gate_probs(&doc, &table).unwrap();
            let q = neg.gate_probs(&doc, &table).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a + b - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn phi_is_reversal_invariant_and_nonnegative(
            bits in proptest::collection::vec(any::<bool>(), 0..30),
            l1 in 0.0f64..3.0,
            l2 in 0.0f64..3.0,
        ) {
            let mask = SelectionMask::from_bits(bits.clone());
            let reversed = SelectionMask::from_bits(bits.iter().rev().copied().collect());
            let a = regularizer_phi(&mask, l1, l2);
            let b = regularizer_phi(&reversed, l1, l2);
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!(a >= 0.0);
        }
    }
}
