//! Bag-of-words selector: L1-regularized logistic regression whose nonzero
//! support defines the kept words.
//!
//! For a binary task with labels y in {-1, +1} and presence features
//! x in {0,1}^|V|, fitting minimizes
//!
//! ```text
//!   sum_t log(1 + exp(-y_t (theta^T x_t + beta))) + (1/b) ||theta||_1
//! ```
//!
//! by ISTA (proximal gradient with backtracking line search). The bias beta
//! is unregularized, so the zero-budget limit degrades to a calibrated
//! constant predictor. Multi-class tasks fit one-vs-rest columns sharing the
//! budget b; a word is selected if any column weight is nonzero.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{Document, LabeledCorpus, SelectionMask, Task, Vocabulary};
use crate::error::{Error, Result};

/// Sparse per-word weights with an L1 budget.
#[derive(Debug, Clone)]
pub struct BowSelector {
    /// token id -> per-column weights; absent means exactly zero.
    pub weights: BTreeMap<u32, Vec<f64>>,
    /// Unregularized intercepts, one per column.
    pub bias: Vec<f64>,
    /// The budget `b`; the penalty weight is `1/b`.
    pub budget: f64,
    /// Selection rate measured on the training corpus at fit time.
    pub trained_selection_rate: Option<f64>,
}

/// ISTA settings.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub max_iters: usize,
    /// Relative objective-decrease tolerance.
    pub tol: f64,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iters: 2000,
            tol: 1e-8,
            seed: 0,
        }
    }
}

/// Binary `{0,1}^|V|` presence indicator, stored as the sorted list of ids
/// that occur in the document.
pub fn featurize(doc: &Document, vocab_size: usize) -> Vec<u32> {
    let mut ids: Vec<u32> = doc
        .tokens
        .iter()
        .copied()
        .filter(|&t| (t as usize) < vocab_size)
        .collect();
    ids.sort_unstable();
    ids.dedup();
    ids
}

/// Soft-thresholding operator: `sign(u) * max(|u| - t, 0)`.
#[inline]
pub fn soft_threshold(u: f64, t: f64) -> f64 {
    if u > t {
        u - t
    } else if u < -t {
        u + t
    } else {
        0.0
    }
}

/// Value of the L1-regularized logistic objective at `(theta, bias)`.
pub fn logistic_l1_objective(
    features: &[Vec<u32>],
    labels: &[f64],
    theta: &[f64],
    bias: f64,
    inv_budget: f64,
) -> f64 {
    let mut data_term = 0.0;
    for (feat, &y) in features.iter().zip(labels) {
        let mut margin = bias;
        for &id in feat {
            margin += theta[id as usize];
        }
        data_term += log1p_exp(-y * margin);
    }
    data_term + inv_budget * theta.iter().map(|w| w.abs()).sum::<f64>()
}

/// Numerically stable `log(1 + exp(x))`.
#[inline]
fn log1p_exp(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Logistic sigmoid.
#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Gradient of the smooth data term at `(theta, bias)`; writes into
/// `grad_theta` (dense) and returns the bias gradient.
fn data_gradient(
    features: &[Vec<u32>],
    labels: &[f64],
    theta: &[f64],
    bias: f64,
    grad_theta: &mut [f64],
) -> f64 {
    grad_theta.iter_mut().for_each(|g| *g = 0.0);
    let mut grad_bias = 0.0;
    for (feat, &y) in features.iter().zip(labels) {
        let mut margin = bias;
        for &id in feat {
            margin += theta[id as usize];
        }
        // d/dm log(1+exp(-y m)) = -y * sigma(-y m)
        let coeff = -y * sigmoid(-y * margin);
        grad_bias += coeff;
        for &id in feat {
            grad_theta[id as usize] += coeff;
        }
    }
    grad_bias
}

fn smooth_term(features: &[Vec<u32>], labels: &[f64], theta: &[f64], bias: f64) -> f64 {
    let mut total = 0.0;
    for (feat, &y) in features.iter().zip(labels) {
        let mut margin = bias;
        for &id in feat {
            margin += theta[id as usize];
        }
        total += log1p_exp(-y * margin);
    }
    total
}

/// Fit one binary column by ISTA with backtracking. Returns the dense weight
/// vector, the bias, and the final objective value.
pub fn fit_binary(
    features: &[Vec<u32>],
    labels: &[f64],
    vocab_size: usize,
    budget: f64,
    cfg: &SolverConfig,
) -> Result<(Vec<f64>, f64, f64)> {
    if budget <= 0.0 || !budget.is_finite() {
        return Err(Error::Config("budget must be a positive real".into()));
    }
    if features.len() != labels.len() || features.is_empty() {
        return Err(Error::Contract(
            "features and labels must align and be non-empty".into(),
        ));
    }
    let inv_budget = 1.0 / budget;
    let mut theta = vec![0.0; vocab_size];
    let mut bias = 0.0;
    let mut grad = vec![0.0; vocab_size];
    let mut objective = logistic_l1_objective(features, labels, &theta, bias, inv_budget);

    let mut step = 1.0;
    for _ in 0..cfg.max_iters {
        let smooth_old = smooth_term(features, labels, &theta, bias);
        let grad_bias = data_gradient(features, labels, &theta, bias, &mut grad);

        // Backtracking: shrink the step until the quadratic upper bound at
        // the proximal point holds.
        let mut candidate_theta;
        let mut candidate_bias;
        loop {
            candidate_theta = theta
                .iter()
                .zip(&grad)
                .map(|(&w, &g)| soft_threshold(w - step * g, step * inv_budget))
                .collect::<Vec<f64>>();
            candidate_bias = bias - step * grad_bias;

            let mut dot = (candidate_bias - bias) * grad_bias;
            let mut dist_sq = (candidate_bias - bias) * (candidate_bias - bias);
            for ((&cw, &w), &g) in candidate_theta.iter().zip(&theta).zip(&grad) {
                let delta = cw - w;
                dot += delta * g;
                dist_sq += delta * delta;
            }
            let smooth_new = smooth_term(features, labels, &candidate_theta, candidate_bias);
            if smooth_new <= smooth_old + dot + dist_sq / (2.0 * step) + 1e-12 {
                break;
            }
            step *= 0.5;
            if step < 1e-16 {
                break;
            }
        }

        theta = candidate_theta;
        bias = candidate_bias;
        let new_objective = logistic_l1_objective(features, labels, &theta, bias, inv_budget);
        let decrease = objective - new_objective;
        objective = new_objective;
        if decrease.abs() < cfg.tol * (1.0 + objective.abs()) {
            break;
        }
        // Allow the step to grow back so a single hard iteration does not
        // pin later ones.
        step = (step * 2.0).min(1e6);
    }
    Ok((theta, bias, objective))
}

impl BowSelector {
    /// Fit on a classification corpus with budget `b`. Binary tasks solve a
    /// single column over labels {-1, +1}; K > 2 fits K one-vs-rest columns.
    pub fn fit(corpus: &LabeledCorpus, budget: f64, cfg: &SolverConfig) -> Result<BowSelector> {
        if corpus.task != Task::Classification {
            return Err(Error::Config(
                "the bag-of-words selector requires a classification corpus".into(),
            ));
        }
        if corpus.is_empty() {
            return Err(Error::Contract("training corpus is empty".into()));
        }
        let vocab_size = corpus
            .documents
            .iter()
            .flat_map(|d| d.tokens.iter())
            .max()
            .map_or(2, |&m| m as usize + 1);
        let features: Vec<Vec<u32>> = corpus
            .documents
            .iter()
            .map(|d| featurize(d, vocab_size))
            .collect();

        let columns: Vec<Vec<f64>> = if corpus.num_classes == 2 {
            vec![binary_labels(corpus, 1)?]
        } else {
            (0..corpus.num_classes)
                .map(|c| binary_labels(corpus, c))
                .collect::<Result<_>>()?
        };

        let mut dense_columns = Vec::with_capacity(columns.len());
        let mut bias = Vec::with_capacity(columns.len());
        for labels in &columns {
            let (theta, b0, _) = fit_binary(&features, labels, vocab_size, budget, cfg)?;
            dense_columns.push(theta);
            bias.push(b0);
        }

        let mut weights: BTreeMap<u32, Vec<f64>> = BTreeMap::new();
        for id in 0..vocab_size {
            let column: Vec<f64> = dense_columns.iter().map(|c| c[id]).collect();
            if column.iter().any(|&w| w != 0.0) {
                weights.insert(id as u32, column);
            }
        }

        let mut selector = BowSelector {
            weights,
            bias,
            budget,
            trained_selection_rate: None,
        };
        selector.trained_selection_rate = Some(selector.selection_rate(corpus)?);
        Ok(selector)
    }

    /// Mask with bit 1 exactly on tokens holding any nonzero column weight.
    pub fn select(&self, doc: &Document) -> SelectionMask {
        SelectionMask::from_bits(
            doc.tokens
                .iter()
                .map(|t| self.weights.contains_key(t))
                .collect(),
        )
    }

    /// Fraction of tokens selected over the whole corpus.
    pub fn selection_rate(&self, corpus: &LabeledCorpus) -> Result<f64> {
        let total = corpus.total_tokens();
        if corpus.is_empty() || total == 0 {
            return Err(Error::Contract(
                "selection rate over an empty corpus".into(),
            ));
        }
        let selected: usize = corpus
            .documents
            .iter()
            .map(|d| self.select(d).count_selected())
            .sum();
        Ok(selected as f64 / total as f64)
    }

    pub fn to_json(&self, vocab: &Vocabulary) -> Result<String> {
        let weights: BTreeMap<String, Vec<f64>> = self
            .weights
            .iter()
            .map(|(&id, col)| (vocab.token(id).to_string(), col.clone()))
            .collect();
        let file = BowSelectorFile {
            budget: self.budget,
            bias: self.bias.clone(),
            weights,
        };
        Ok(serde_json::to_string_pretty(&file)?)
    }

    pub fn from_json(content: &str, vocab: &Vocabulary) -> Result<BowSelector> {
        let file: BowSelectorFile = serde_json::from_str(content)?;
        if file.budget <= 0.0 {
            return Err(Error::Format("selector budget must be positive".into()));
        }
        let mut weights = BTreeMap::new();
        for (token, column) in file.weights {
            if vocab.contains(&token) {
                weights.insert(vocab.id(&token), column);
            }
        }
        Ok(BowSelector {
            weights,
            bias: file.bias,
            budget: file.budget,
            trained_selection_rate: None,
        })
    }

    pub fn save(&self, path: &Path, vocab: &Vocabulary) -> Result<()> {
        std::fs::write(path, self.to_json(vocab)?)?;
        Ok(())
    }
}

fn binary_labels(corpus: &LabeledCorpus, positive_class: usize) -> Result<Vec<f64>> {
    corpus
        .documents
        .iter()
        .map(|d| match d.label {
            crate::corpus::Label::Class(c) => Ok(if c == positive_class { 1.0 } else { -1.0 }),
            other => Err(Error::Contract(format!(
                "non-class label {:?} in classification corpus",
                other
            ))),
        })
        .collect()
}

/// Result of [`tune_budget`].
#[derive(Debug, Clone)]
pub struct TuneOutcome {
    pub budget: f64,
    pub achieved_rate: f64,
    pub selector: BowSelector,
    /// False when no probe landed within the tolerance.
    pub reached_target: bool,
    /// Rate inversions observed among probes ordered by budget.
    pub monotonicity_violations: usize,
}

/// Bisection over `log b`, refitting at each probe, until the achieved
/// selection rate is within `tol` of `target_rate` or 30 probes are spent.
/// Returns the best probe; a target unreachable inside `b_range` comes back
/// with `reached_target = false`.
pub fn tune_budget(
    corpus: &LabeledCorpus,
    target_rate: f64,
    tol: f64,
    b_range: (f64, f64),
    cfg: &SolverConfig,
) -> Result<TuneOutcome> {
    let (lo, hi) = b_range;
    if !(target_rate > 0.0 && target_rate <= 1.0) {
        return Err(Error::Config("target_rate must be in (0, 1]".into()));
    }
    if !(lo > 0.0 && lo < hi) {
        return Err(Error::Config(
            "budget range must satisfy 0 < lo < hi".into(),
        ));
    }

    const MAX_PROBES: usize = 30;
    let mut probes: Vec<(f64, f64)> = Vec::new(); // (budget, rate)
    let mut best: Option<TuneOutcome> = None;

    let mut log_lo = lo.ln();
    let mut log_hi = hi.ln();
    // Probe the endpoints first so unreachable targets are detected, then
    // bisect the bracket.
    let mut schedule: Vec<f64> = vec![log_lo, log_hi];
    let mut used = 0usize;
    while used < MAX_PROBES {
        let log_b = match schedule.pop() {
            Some(l) => l,
            None => 0.5 * (log_lo + log_hi),
        };
        let budget = log_b.exp();
        let selector = BowSelector::fit(corpus, budget, cfg)?;
        let rate = selector
            .trained_selection_rate
            .expect("fit records the training selection rate");
        used += 1;
        probes.push((budget, rate));

        let better = best
            .as_ref()
            .map(|b| (rate - target_rate).abs() < (b.achieved_rate - target_rate).abs())
            .unwrap_or(true);
        if better {
            best = Some(TuneOutcome {
                budget,
                achieved_rate: rate,
                selector,
                reached_target: (rate - target_rate).abs() <= tol,
                monotonicity_violations: 0,
            });
        }
        if best.as_ref().map(|b| b.reached_target).unwrap_or(false) {
            break;
        }
        if schedule.is_empty() {
            // Standard bisection on the monotone trend rate(b).
            if rate < target_rate {
                log_lo = log_b;
            } else {
                log_hi = log_b;
            }
            if (log_hi - log_lo).abs() < 1e-12 {
                break;
            }
        }
    }

    let mut outcome = best.expect("at least one probe ran");
    probes.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    outcome.monotonicity_violations = probes
        .windows(2)
        .filter(|w| w[1].1 < w[0].1 - 1e-12)
        .count();
    Ok(outcome)
}


#[derive(Serialize, Deserialize)]
struct BowSelectorFile {
    budget: f64,
    bias: Vec<f64>,
    weights: BTreeMap<String, Vec<f64>>,
}
