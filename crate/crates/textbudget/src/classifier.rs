//! A small neural text classifier with hand-derived gradients, its losses,
//! a finite-difference gradient checker, and mini-batch SGD training.
//!
//! Two architectures share one parameter layout:
//!
//! * `BagOfEmbeddings` - representation = tanh(W * mean(embeddings) + b)
//! * `SimpleRecurrent` - tanh Elman cell over the token sequence, zero
//!   initial state; representation = final hidden state
//!
//! Scores are an affine map of the representation; classification applies
//! softmax and cross-entropy, regression (K = 1) squared error on the raw
//! score.

use std::collections::BTreeMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{EmbeddingTable, Label, LabeledCorpus, Task, Vocabulary};
use crate::error::{Error, Result};

/// Classifier architecture tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Arch {
    BagOfEmbeddings,
    SimpleRecurrent,
}

impl std::str::FromStr for Arch {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "boe" => Ok(Arch::BagOfEmbeddings),
            "rnn" => Ok(Arch::SimpleRecurrent),
            other => Err(Error::Config(format!(
                "unknown architecture {:?} (expected boe or rnn)",
                other
            ))),
        }
    }
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    fn uniform(rows: usize, cols: usize, bound: f64, rng: &mut ChaCha8Rng) -> Self {
        Mat {
            rows,
            cols,
            data: (0..rows * cols)
                .map(|_| rng.random_range(-bound..=bound))
                .collect(),
        }
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn at_mut(&mut self, r: usize, c: usize) -> &mut f64 {
        &mut self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }
}

/// Trainable parameters of the classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierModel {
    pub arch: Arch,
    /// `|V| x d` token embeddings, fine-tuned during training.
    pub embed: Mat,
    /// `h x d` (BagOfEmbeddings) or `h x (d+h)` (SimpleRecurrent).
    pub w_hidden: Mat,
    pub b_hidden: Vec<f64>,
    /// `K x h` output weights.
    pub w_out: Mat,
    pub b_out: Vec<f64>,
}

/// Everything the forward pass produces for one document.
#[derive(Debug, Clone)]
pub struct ForwardPass {
    /// Pre-output-layer feature vector (h entries).
    pub representation: Vec<f64>,
    pub scores: Vec<f64>,
    /// Softmax of the scores; `[1.0]` for regression models.
    pub probs: Vec<f64>,
}

/// Prediction for one document.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prediction {
    Class(usize),
    Value(f64),
}

/// Gradients mirroring [`ClassifierModel`]; embedding rows are stored
/// sparsely (absent row = zero gradient).
#[derive(Debug, Clone, Default)]
pub struct Gradients {
    pub embed: BTreeMap<u32, Vec<f64>>,
    pub w_hidden: Vec<f64>,
    pub b_hidden: Vec<f64>,
    pub w_out: Vec<f64>,
    pub b_out: Vec<f64>,
}

/// Mini-batch SGD settings.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    /// Optional global-norm clip applied to each batch gradient.
    pub gradient_clip: Option<f64>,
}

impl TrainConfig {
    pub fn new(learning_rate: f64, epochs: usize, batch_size: usize, seed: u64) -> Self {
        TrainConfig {
            learning_rate,
            epochs,
            batch_size,
            seed,
            gradient_clip: None,
        }
    }

    fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate < 0.0 {
            return Err(Error::Config(
                "learning_rate must be finite and >= 0".into(),
            ));
        }
        if self.epochs == 0 || self.batch_size == 0 {
            return Err(Error::Config("epochs and batch_size must be >= 1".into()));
        }
        Ok(())
    }
}

fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

impl ClassifierModel {
    /// Initialize with embeddings copied from `table` and every other
    /// parameter uniform in `[-0.1, 0.1]` from the seeded generator.
    pub fn new(
        arch: Arch,
        table: &EmbeddingTable,
        hidden_dim: usize,
        num_classes: usize,
        seed: u64,
    ) -> Result<Self> {
        if hidden_dim == 0 || num_classes == 0 {
            return Err(Error::Config(
                "hidden_dim and num_classes must be >= 1".into(),
            ));
        }
        let d = table.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let in_dim = match arch {
            Arch::BagOfEmbeddings => d,
            Arch::SimpleRecurrent => d + hidden_dim,
        };
        let mut embed = Mat::zeros(table.vocab_size(), d);
        for (i, row) in table.rows().iter().enumerate() {
            embed.data[i * d..(i + 1) * d].copy_from_slice(row);
        }
        Ok(ClassifierModel {
            arch,
            embed,
            w_hidden: Mat::uniform(hidden_dim, in_dim, 0.1, &mut rng),
            b_hidden: (0..hidden_dim)
                .map(|_| rng.random_range(-0.1..=0.1))
                .collect(),
            w_out: Mat::uniform(num_classes, hidden_dim, 0.1, &mut rng),
            b_out: (0..num_classes)
                .map(|_| rng.random_range(-0.1..=0.1))
                .collect(),
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.embed.rows
    }

    pub fn embed_dim(&self) -> usize {
        self.embed.cols
    }

    pub fn hidden_dim(&self) -> usize {
        self.w_hidden.rows
    }

    pub fn num_classes(&self) -> usize {
        self.w_out.rows
    }

    pub fn task(&self) -> Task {
        if self.num_classes() == 1 {
            Task::Regression
        } else {
            Task::Classification
        }
    }

    fn check_tokens(&self, tokens: &[u32]) -> Result<()> {
        if tokens.is_empty() {
            return Err(Error::Contract(
                "forward pass requires a non-empty token sequence".into(),
            ));
        }
        if let Some(&t) = tokens.iter().find(|&&t| (t as usize) >= self.vocab_size()) {
            return Err(Error::Contract(format!(
                "token id {} out of range for vocabulary of size {}",
                t,
                self.vocab_size()
            )));
        }
        Ok(())
    }

    /// All hidden states of the recurrence (SimpleRecurrent) or the single
    /// representation (BagOfEmbeddings), plus the mean embedding for the
    /// latter.
    fn hidden_states(&self, tokens: &[u32]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let d = self.embed_dim();
        let h = self.hidden_dim();
        match self.arch {
            Arch::BagOfEmbeddings => {
                let mut mean = vec![0.0; d];
                for &t in tokens {
                    let row = self.embed.row(t as usize);
                    for (m, &v) in mean.iter_mut().zip(row) {
                        *m += v;
                    }
                }
                let inv = 1.0 / tokens.len() as f64;
                for m in mean.iter_mut() {
                    *m *= inv;
                }
                let rep: Vec<f64> = (0..h)
                    .map(|j| {
                        let mut a = self.b_hidden[j];
                        for (w, &x) in self.w_hidden.row(j).iter().zip(&mean) {
                            a += w * x;
                        }
                        a.tanh()
                    })
                    .collect();
                (vec![rep], mean)
            }
            Arch::SimpleRecurrent => {
                let mut states: Vec<Vec<f64>> = Vec::with_capacity(tokens.len());
                let mut prev = vec![0.0; h];
                for &t in tokens {
                    let x = self.embed.row(t as usize);
                    let state: Vec<f64> = (0..h)
                        .map(|j| {
                            let wrow = self.w_hidden.row(j);
                            let mut a = self.b_hidden[j];
                            for (w, &xv) in wrow[..d].iter().zip(x) {
                                a += w * xv;
                            }
                            for (w, &sv) in wrow[d..].iter().zip(&prev) {
                                a += w * sv;
                            }
                            a.tanh()
                        })
                        .collect();
                    states.push(state.clone());
                    prev = state;
                }
                (states, Vec::new())
            }
        }
    }

    /// Run the network on a token sequence.
    pub fn forward(&self, tokens: &[u32]) -> Result<ForwardPass> {
        self.check_tokens(tokens)?;
        let (states, _) = self.hidden_states(tokens);
        let rep = states.last().unwrap().clone();
        let k = self.num_classes();
        let mut scores = vec![0.0; k];
        for (c, score) in scores.iter_mut().enumerate() {
            let mut s = self.b_out[c];
            for (w, &r) in self.w_out.row(c).iter().zip(&rep) {
                s += w * r;
            }
            *score = s;
        }
        let probs = if k == 1 { vec![1.0] } else { softmax(&scores) };
        Ok(ForwardPass {
            representation: rep,
            scores,
            probs,
        })
    }

    /// Pre-output-layer feature vector.
    pub fn representation(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        Ok(self.forward(tokens)?.representation)
    }

    /// Argmax class (ties to the lowest index) or raw score for regression.
    pub fn predict(&self, tokens: &[u32]) -> Result<Prediction> {
        let out = self.forward(tokens)?;
        if self.num_classes() == 1 {
            return Ok(Prediction::Value(out.scores[0]));
        }
        let mut best = 0;
        for (c, &p) in out.probs.iter().enumerate() {
            if p > out.probs[best] {
                best = c;
            }
        }
        Ok(Prediction::Class(best))
    }

    /// Task loss of a forward pass against a label.
    pub fn loss(&self, output: &ForwardPass, label: Label) -> Result<f64> {
        match (self.task(), label) {
            (Task::Classification, Label::Class(c)) => {
                if c >= self.num_classes() {
                    return Err(Error::Contract(format!(
                        "label {} out of range for {} classes",
                        c,
                        self.num_classes()
                    )));
                }
                // ln(0) = -inf and NaN both propagate, so divergence is
                // visible to the trainer's finiteness check.
                Ok(-output.probs[c].ln())
            }
            (Task::Regression, label) => {
                let diff = output.scores[0] - label.value();
                Ok(diff * diff)
            }
            (Task::Classification, Label::Value(_)) => Err(Error::Contract(
                "real-valued label fed to a classification model".into(),
            )),
        }
    }

    /// Loss and exact analytic gradients of loss∘forward for one example.
    pub fn param_gradients(&self, tokens: &[u32], label: Label) -> Result<(f64, Gradients)> {
        self.check_tokens(tokens)?;
        let d = self.embed_dim();
        let h = self.hidden_dim();
        let k = self.num_classes();

        let (states, mean) = self.hidden_states(tokens);
        let rep = states.last().unwrap();

        let mut scores = vec![0.0; k];
        for (c, score) in scores.iter_mut().enumerate() {
            let mut s = self.b_out[c];
            for (w, &r) in self.w_out.row(c).iter().zip(rep) {
                s += w * r;
            }
            *score = s;
        }

        // dL/dscores
        let (loss, dscores) = match self.task() {
            Task::Classification => {
                let probs = softmax(&scores);
                let c = match label {
                    Label::Class(c) if c < k => c,
                    _ => {
                        return Err(Error::Contract(format!(
                            "label {:?} invalid for {} classes",
                            label, k
                        )))
                    }
                };
                let loss = -probs[c].ln();
                let mut ds = probs;
                ds[c] -= 1.0;
                (loss, ds)
            }
            Task::Regression => {
                let diff = scores[0] - label.value();
                (diff * diff, vec![2.0 * diff])
            }
        };

        let mut grads = Gradients {
            embed: BTreeMap::new(),
            w_hidden: vec![0.0; self.w_hidden.data.len()],
            b_hidden: vec![0.0; h],
            w_out: vec![0.0; self.w_out.data.len()],
            b_out: vec![0.0; k],
        };

        // Output layer: dL/dU = ds ⊗ rep, dL/dc = ds, dL/drep = U^T ds.
        let mut drep = vec![0.0; h];
        for (c, &ds) in dscores.iter().enumerate() {
            grads.b_out[c] = ds;
            for j in 0..h {
                grads.w_out[c * h + j] = ds * rep[j];
                drep[j] += self.w_out.at(c, j) * ds;
            }
        }

        match self.arch {
            Arch::BagOfEmbeddings => {
                // rep = tanh(W mean + b)
                let mut dmean = vec![0.0; d];
                for j in 0..h {
                    let da = drep[j] * (1.0 - rep[j] * rep[j]);
                    grads.b_hidden[j] = da;
                    let wrow = self.w_hidden.row(j);
                    for i in 0..d {
                        grads.w_hidden[j * d + i] = da * mean[i];
                        dmean[i] += wrow[i] * da;
                    }
                }
                let inv = 1.0 / tokens.len() as f64;
                for &t in tokens {
                    let row = grads.embed.entry(t).or_insert_with(|| vec![0.0; d]);
                    for (g, &dm) in row.iter_mut().zip(&dmean) {
                        *g += dm * inv;
                    }
                }
            }
            Arch::SimpleRecurrent => {
                // Backprop through time over s_t = tanh(Wx x_t + Wh s_{t-1} + b).
                let mut dstate = drep;
                for (t_idx, &tok) in tokens.iter().enumerate().rev() {
                    let state = &states[t_idx];
                    let x = self.embed.row(tok as usize);
                    let prev: Option<&Vec<f64>> = if t_idx > 0 {
                        Some(&states[t_idx - 1])
                    } else {
                        None
                    };
                    let mut dprev = vec![0.0; h];
                    let mut dx = vec![0.0; d];
                    for j in 0..h {
                        let da = dstate[j] * (1.0 - state[j] * state[j]);
                        grads.b_hidden[j] += da;
                        let off = j * (d + h);
                        for i in 0..d {
                            grads.w_hidden[off + i] += da * x[i];
                            dx[i] += self.w_hidden.data[off + i] * da;
                        }
                        for i in 0..h {
                            let prev_v = prev.map_or(0.0, |p| p[i]);
                            grads.w_hidden[off + d + i] += da * prev_v;
                            dprev[i] += self.w_hidden.data[off + d + i] * da;
                        }
                    }
                    let row = grads.embed.entry(tok).or_insert_with(|| vec![0.0; d]);
                    for (g, &v) in row.iter_mut().zip(&dx) {
                        *g += v;
                    }
                    dstate = dprev;
                }
            }
        }

        Ok((loss, grads))
    }

    /// Apply `params -= lr * grads` (embedding rows touched by the gradient
    /// only).
    pub fn apply_gradients(&mut self, grads: &Gradients, lr: f64) {
        if lr == 0.0 {
            return;
        }
        let d = self.embed_dim();
        for (&tok, row) in &grads.embed {
            let off = tok as usize * d;
            for (i, &g) in row.iter().enumerate() {
                self.embed.data[off + i] -= lr * g;
            }
        }
        for (p, &g) in self.w_hidden.data.iter_mut().zip(&grads.w_hidden) {
            *p -= lr * g;
        }
        for (p, &g) in self.b_hidden.iter_mut().zip(&grads.b_hidden) {
            *p -= lr * g;
        }
        for (p, &g) in self.w_out.data.iter_mut().zip(&grads.w_out) {
            *p -= lr * g;
        }
        for (p, &g) in self.b_out.iter_mut().zip(&grads.b_out) {
            *p -= lr * g;
        }
    }

    /// Central-difference gradients over every parameter coordinate.
    pub fn fd_gradients(&self, tokens: &[u32], label: Label, epsilon: f64) -> Result<Gradients> {
        let mut grads = Gradients {
            embed: BTreeMap::new(),
            w_hidden: vec![0.0; self.w_hidden.data.len()],
            b_hidden: vec![0.0; self.b_hidden.len()],
            w_out: vec![0.0; self.w_out.data.len()],
            b_out: vec![0.0; self.b_out.len()],
        };
        let mut probe = self.clone();
        let diff = |probe: &mut ClassifierModel,
                    write: &mut dyn FnMut(&mut ClassifierModel, f64)|
         -> Result<f64> {
            write(probe, epsilon);
            let up = probe.loss(&probe.forward(tokens)?, label)?;
            write(probe, -2.0 * epsilon);
            let down = probe.loss(&probe.forward(tokens)?, label)?;
            write(probe, epsilon);
            Ok((up - down) / (2.0 * epsilon))
        };

        let d = self.embed_dim();
        for tok in tokens
            .iter()
            .copied()
            .collect::<std::collections::BTreeSet<u32>>()
        {
            let mut row = vec![0.0; d];
            for (i, slot) in row.iter_mut().enumerate() {
                let off = tok as usize * d + i;
                *slot = diff(&mut probe, &mut |m, eps| m.embed.data[off] += eps)?;
            }
            grads.embed.insert(tok, row);
        }
        for i in 0..self.w_hidden.data.len() {
            grads.w_hidden[i] = diff(&mut probe, &mut |m, eps| m.w_hidden.data[i] += eps)?;
        }
        for i in 0..self.b_hidden.len() {
            grads.b_hidden[i] = diff(&mut probe, &mut |m, eps| m.b_hidden[i] += eps)?;
        }
        for i in 0..self.w_out.data.len() {
            grads.w_out[i] = diff(&mut probe, &mut |m, eps| m.w_out.data[i] += eps)?;
        }
        for i in 0..self.b_out.len() {
            grads.b_out[i] = diff(&mut probe, &mut |m, eps| m.b_out[i] += eps)?;
        }
        Ok(grads)
    }

    /// Max relative error between analytic and central-difference gradients,
    /// `|a-n| / max(|a|, |n|, 1e-8)` over every parameter coordinate.
    pub fn grad_check(&self, tokens: &[u32], label: Label, epsilon: f64) -> Result<f64> {
        if epsilon <= 0.0 {
            return Err(Error::Config("epsilon must be positive".into()));
        }
        let (_, analytic) = self.param_gradients(tokens, label)?;
        let numeric = self.fd_gradients(tokens, label, epsilon)?;
        Ok(max_relative_error(&analytic, &numeric))
    }

    /// One seeded-shuffle pass of mini-batch SGD. Returns the mean loss over
    /// the epoch (computed at the pre-update parameters of each batch).
    pub fn train_epoch(
        &mut self,
        corpus: &LabeledCorpus,
        config: &TrainConfig,
        epoch_index: usize,
    ) -> Result<f64> {
        config.validate()?;
        if corpus.is_empty() {
            return Err(Error::Contract("training corpus is empty".into()));
        }
        let mut order: Vec<usize> = (0..corpus.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(
            config
                .seed
                .wrapping_add((epoch_index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
        );
        // Fisher-Yates
        for i in (1..order.len()).rev() {
            let j = rng.random_range(0..=i);
            order.swap(i, j);
        }

        let d = self.embed_dim();
        let mut total_loss = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            let mut acc = Gradients {
                embed: BTreeMap::new(),
                w_hidden: vec![0.0; self.w_hidden.data.len()],
                b_hidden: vec![0.0; self.b_hidden.len()],
                w_out: vec![0.0; self.w_out.data.len()],
                b_out: vec![0.0; self.b_out.len()],
            };
            let mut batch_loss = 0.0;
            for &doc_idx in batch {
                let doc = &corpus.documents[doc_idx];
                let (loss, grads) = self.param_gradients(&doc.tokens, doc.label)?;
                batch_loss += loss;
                for (tok, row) in grads.embed {
                    let slot = acc.embed.entry(tok).or_insert_with(|| vec![0.0; d]);
                    for (s, g) in slot.iter_mut().zip(row) {
                        *s += g;
                    }
                }
                for (s, g) in acc.w_hidden.iter_mut().zip(grads.w_hidden) {
                    *s += g;
                }
                for (s, g) in acc.b_hidden.iter_mut().zip(grads.b_hidden) {
                    *s += g;
                }
                for (s, g) in acc.w_out.iter_mut().zip(grads.w_out) {
                    *s += g;
                }
                for (s, g) in acc.b_out.iter_mut().zip(grads.b_out) {
                    *s += g;
                }
            }
            if !batch_loss.is_finite() {
                return Err(Error::Training {
                    batch: batch_idx,
                    message: format!("non-finite batch loss {}", batch_loss),
                });
            }
            total_loss += batch_loss;
            let scale = 1.0 / batch.len() as f64;
            scale_gradients(&mut acc, scale);
            if let Some(max_norm) = config.gradient_clip {
                let norm = gradient_norm(&acc);
                if norm > max_norm && norm > 0.0 {
                    scale_gradients(&mut acc, max_norm / norm);
                }
            }
            self.apply_gradients(&acc, config.learning_rate);
        }
        Ok(total_loss / corpus.len() as f64)
    }

    /// Run `config.epochs` passes of [`Self::train_epoch`]; returns the mean
    /// loss per epoch.
    pub fn train(&mut self, corpus: &LabeledCorpus, config: &TrainConfig) -> Result<Vec<f64>> {
        let mut losses = Vec::with_capacity(config.epochs);
        for epoch in 0..config.epochs {
            losses.push(self.train_epoch(corpus, config, epoch)?);
        }
        Ok(losses)
    }

    /// Flat view of every parameter, for exact model comparisons.
    pub fn flat_params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        out.extend_from_slice(&self.embed.data);
        out.extend_from_slice(&self.w_hidden.data);
        out.extend_from_slice(&self.b_hidden);
        out.extend_from_slice(&self.w_out.data);
        out.extend_from_slice(&self.b_out);
        out
    }
}

fn scale_gradients(grads: &mut Gradients, scale: f64) {
    for row in grads.embed.values_mut() {
        for g in row.iter_mut() {
            *g *= scale;
        }
    }
    for g in grads
        .w_hidden
        .iter_mut()
        .chain(&mut grads.b_hidden)
        .chain(&mut grads.w_out)
        .chain(&mut grads.b_out)
    {
        *g *= scale;
    }
}

fn gradient_norm(grads: &Gradients) -> f64 {
    let mut sq = 0.0;
    for row in grads.embed.values() {
        for g in row {
            sq += g * g;
        }
    }
    for g in grads
        .w_hidden
        .iter()
        .chain(&grads.b_hidden)
        .chain(&grads.w_out)
        .chain(&grads.b_out)
    {
        sq += g * g;
    }
    sq.sqrt()
}

/// `|a-n| / max(|a|, |n|, 1e-8)` maximized over every coordinate of the two
/// gradient structures. Embedding rows missing on one side count as zeros.
pub fn max_relative_error(a: &Gradients, b: &Gradients) -> f64 {
    fn rel(x: f64, y: f64) -> f64 {
        (x - y).abs() / x.abs().max(y.abs()).max(1e-8)
    }
    let mut worst: f64 = 0.0;
    let keys: std::collections::BTreeSet<u32> =
        a.embed.keys().chain(b.embed.keys()).copied().collect();
    for key in keys {
        let dim = a
            .embed
            .get(&key)
            .or_else(|| b.embed.get(&key))
            .map_or(0, Vec::len);
        let zero = vec![0.0; dim];
        let ra = a.embed.get(&key).unwrap_or(&zero);
        let rb = b.embed.get(&key).unwrap_or(&zero);
        for (&x, &y) in ra.iter().zip(rb) {
            worst = worst.max(rel(x, y));
        }
    }
    for (x, y) in a
        .w_hidden
        .iter()
        .zip(&b.w_hidden)
        .chain(a.b_hidden.iter().zip(&b.b_hidden))
        .chain(a.w_out.iter().zip(&b.w_out))
        .chain(a.b_out.iter().zip(&b.b_out))
    {
        worst = worst.max(rel(*x, *y));
    }
    worst
}

/// Fraction of documents whose predicted class equals the label. Regression
/// corpora are scored with [`mean_squared_error`] instead.
pub fn accuracy(model: &ClassifierModel, corpus: &LabeledCorpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Contract("empty corpus".into()));
    }
    let mut hits = 0usize;
    for doc in &corpus.documents {
        if let (Prediction::Class(pred), Label::Class(truth)) =
            (model.predict(&doc.tokens)?, doc.label)
        {
            if pred == truth {
                hits += 1;
            }
        }
    }
    Ok(hits as f64 / corpus.len() as f64)
}

pub fn mean_squared_error(model: &ClassifierModel, corpus: &LabeledCorpus) -> Result<f64> {
    if corpus.is_empty() {
        return Err(Error::Contract("empty corpus".into()));
    }
    let mut total = 0.0;
    for doc in &corpus.documents {
        if let Prediction::Value(v) = model.predict(&doc.tokens)? {
            let diff = v - doc.label.value();
            total += diff * diff;
        }
    }
    Ok(total / corpus.len() as f64)
}

// ---------------------------------------------------------------------------
// Model files
// ---------------------------------------------------------------------------

/// On-disk model format. Parameters are stored as IEEE-754 bit patterns so
/// the JSON form round-trips bit-exactly.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    version: u32,
    arch: String,
    vocab: Vec<String>,
    embed_dim: usize,
    hidden_dim: usize,
    num_classes: usize,
    embed: Vec<u64>,
    w_hidden: Vec<u64>,
    b_hidden: Vec<u64>,
    w_out: Vec<u64>,
    b_out: Vec<u64>,
}

const MODEL_VERSION: u32 = 1;

fn to_bits(values: &[f64]) -> Vec<u64> {
    values.iter().map(|v| v.to_bits()).collect()
}

fn from_bits(bits: &[u64]) -> Vec<f64> {
    bits.iter().map(|&b| f64::from_bits(b)).collect()
}

/// Serialize a model (with the vocabulary its token ids refer to).
pub fn save_model(path: &Path, model: &ClassifierModel, vocab: &Vocabulary) -> Result<()> {
    if vocab.len() != model.vocab_size() {
        return Err(Error::Contract(format!(
            "vocabulary size {} does not match model embedding rows {}",
            vocab.len(),
            model.vocab_size()
        )));
    }
    let file = ModelFile {
        version: MODEL_VERSION,
        arch: match model.arch {
            Arch::BagOfEmbeddings => "boe".into(),
            Arch::SimpleRecurrent => "rnn".into(),
        },
        vocab: vocab.id_list().to_vec(),
        embed_dim: model.embed_dim(),
        hidden_dim: model.hidden_dim(),
        num_classes: model.num_classes(),
        embed: to_bits(&model.embed.data),
        w_hidden: to_bits(&model.w_hidden.data),
        b_hidden: to_bits(&model.b_hidden),
        w_out: to_bits(&model.w_out.data),
        b_out: to_bits(&model.b_out),
    };
    std::fs::write(path, serde_json::to_string(&file)?)?;
    Ok(())
}

/// Load a model file written by [`save_model`].
pub fn load_model(path: &Path) -> Result<(ClassifierModel, Vocabulary)> {
    let content = std::fs::read_to_string(path)?;
    let file: ModelFile = serde_json::from_str(&content)?;
    if file.version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {}",
            file.version
        )));
    }
    let arch: Arch = file.arch.parse()?;
    let vocab = Vocabulary::from_id_list(file.vocab)?;
    let (v, d, h, k) = (
        vocab.len(),
        file.embed_dim,
        file.hidden_dim,
        file.num_classes,
    );
    let in_dim = match arch {
        Arch::BagOfEmbeddings => d,
        Arch::SimpleRecurrent => d + h,
    };
    let expect = |name: &str, got: usize, want: usize| -> Result<()> {
        if got != want {
            return Err(Error::Format(format!(
                "{}: expected {} values, found {}",
                name, want, got
            )));
        }
        Ok(())
    };
    expect("embed", file.embed.len(), v * d)?;
    expect("w_hidden", file.w_hidden.len(), h * in_dim)?;
    expect("b_hidden", file.b_hidden.len(), h)?;
    expect("w_out", file.w_out.len(), k * h)?;
    expect("b_out", file.b_out.len(), k)?;
    let model = ClassifierModel {
        arch,
        embed: Mat {
            rows: v,
            cols: d,
            data: from_bits(&file.embed),
        },
        w_hidden: Mat {
            rows: h,
            cols: in_dim,
            data: from_bits(&file.w_hidden),
        },
        b_hidden: from_bits(&file.b_hidden),
        w_out: Mat {
            rows: k,
            cols: h,
            data: from_bits(&file.w_out),
        },
        b_out: from_bits(&file.b_out),
    };
    Ok((model, vocab))
}
