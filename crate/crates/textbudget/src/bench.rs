//! Accuracy/latency benchmark harness.
//!
//! Timing protocol: corpora are tokenized before any timer starts, the
//! prediction loop runs single-threaded on a monotonic clock, one untimed
//! warm pass precedes measurement, and the reported figure is the median of
//! the repeated runs. Selector and classifier stages are timed separately;
//! speedup is baseline time divided by pipeline time, so a faster pipeline
//! reports a speedup above 1.

use std::collections::HashSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassifierModel, Prediction};
use crate::corpus::{
    blank_out, stopword_mask, Document, EmbeddingTable, Label, LabeledCorpus, SelectionMask, Task,
};
use crate::error::{Error, Result};
use crate::selector::AnySelector;

/// One row of the accuracy/time tradeoff.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BudgetReport {
    pub budget_tag: String,
    pub selection_rate: f64,
    /// Mean accuracy for classification, mean squared error for regression.
    pub accuracy: f64,
    pub selector_time_s: f64,
    pub classifier_time_s: f64,
    pub total_time_s: f64,
    /// Baseline time divided by this row's total time; 1.0 when the row is
    /// its own baseline.
    pub speedup: f64,
}

/// Reports ordered by ascending total time (ties broken by budget tag).
#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffCurve {
    pub reports: Vec<BudgetReport>,
}

/// What filters documents before they reach the classifier.
#[derive(Clone, Copy)]
pub enum Filter<'a> {
    /// Baseline: full documents, selection rate 1.
    None,
    Selector(&'a AnySelector),
    /// Fixed stoplist filter (the cautionary baseline).
    Stopwords(&'a HashSet<u32>),
}

impl<'a> Filter<'a> {
    fn mask(&self, doc: &Document, embeddings: Option<&EmbeddingTable>) -> Result<SelectionMask> {
        match self {
            Filter::None => Ok(SelectionMask::ones(doc.len())),
            Filter::Selector(s) => s.mask(doc, embeddings),
            Filter::Stopwords(stop) => Ok(stopword_mask(doc, stop)),
        }
    }
}

/// Median wall time in seconds of running `model_fn` over every document,
/// after one untimed warm pass.
pub fn time_inference<F>(mut model_fn: F, corpus: &LabeledCorpus, repeats: usize) -> f64
where
    F: FnMut(&Document),
{
    assert!(repeats >= 1, "repeats must be >= 1");
    for doc in &corpus.documents {
        model_fn(doc);
    }
    let mut times = Vec::with_capacity(repeats);
    for _ in 0..repeats {
        let start = Instant::now();
        for doc in &corpus.documents {
            model_fn(doc);
        }
        times.push(start.elapsed().as_secs_f64());
    }
    median(&mut times)
}

fn median(times: &mut [f64]) -> f64 {
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = times.len();
    if n % 2 == 1 {
        times[n / 2]
    } else {
        0.5 * (times[n / 2 - 1] + times[n / 2])
    }
}

/// `baseline_time_s / model_time_s`.
pub fn speedup(baseline_time_s: f64, model_time_s: f64) -> Result<f64> {
    if baseline_time_s <= 0.0 || model_time_s <= 0.0 {
        return Err(Error::Contract(
            "speedup requires positive times on both sides".into(),
        ));
    }
    Ok(baseline_time_s / model_time_s)
}

/// Evaluate one pipeline configuration: apply the filter per document
/// (timed), feed the fragments to the classifier (timed), and score the
/// predictions. `baseline_total_time_s` fixes the speedup denominator; the
/// row is its own baseline when absent.
pub fn evaluate(
    model: &ClassifierModel,
    filter: Filter<'_>,
    corpus: &LabeledCorpus,
    embeddings: Option<&EmbeddingTable>,
    tag: &str,
    repeats: usize,
    baseline_total_time_s: Option<f64>,
) -> Result<BudgetReport> {
    if corpus.is_empty() {
        return Err(Error::Contract("cannot evaluate on an empty corpus".into()));
    }

    // Selector stage. The fragments from the final run feed the classifier
    // stage so both stages see identical work.
    let mut fragments: Vec<Document> = Vec::with_capacity(corpus.len());
    let run_selector = || -> Result<Vec<Document>> {
        let mut frags = Vec::with_capacity(corpus.len());
        for doc in &corpus.documents {
            let mask = filter.mask(doc, embeddings)?;
            frags.push(blank_out(doc, &mask)?);
        }
        Ok(frags)
    };
    run_selector()?; // warm
    let mut selector_times = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        fragments = run_selector()?;
        selector_times.push(start.elapsed().as_secs_f64());
    }
    let selector_time_s = match filter {
        Filter::None => 0.0, // baseline has no selector stage
        _ => median(&mut selector_times),
    };

    // Classifier stage.
    let mut predictions: Vec<Prediction> = Vec::with_capacity(fragments.len());
    let run_classifier = |preds: &mut Vec<Prediction>| -> Result<()> {
        preds.clear();
        for frag in &fragments {
            preds.push(model.predict(&frag.tokens)?);
        }
        Ok(())
    };
    run_classifier(&mut predictions)?; // warm
    let mut classifier_times = Vec::with_capacity(repeats.max(1));
    for _ in 0..repeats.max(1) {
        let start = Instant::now();
        run_classifier(&mut predictions)?;
        classifier_times.push(start.elapsed().as_secs_f64());
    }
    let classifier_time_s = median(&mut classifier_times);

    // Scores.
    let accuracy = match corpus.task {
        Task::Classification => {
            let hits = predictions
                .iter()
                .zip(&corpus.documents)
                .filter(|(p, d)| matches!((p, d.label), (Prediction::Class(c), Label::Class(t)) if *c == t))
                .count();
            hits as f64 / corpus.len() as f64
        }
        Task::Regression => {
            let mut total = 0.0;
            for (p, d) in predictions.iter().zip(&corpus.documents) {
                if let Prediction::Value(v) = p {
                    let diff = v - d.label.value();
                    total += diff * diff;
                }
            }
            total / corpus.len() as f64
        }
    };

    let selection_rate = match filter {
        Filter::None => 1.0,
        _ => {
            let selected: usize = corpus
                .documents
                .iter()
                .map(|doc| {
                    filter
                        .mask(doc, embeddings)
                        .map(|m| m.count_selected())
                        .unwrap_or(0)
                })
                .sum();
            selected as f64 / corpus.total_tokens().max(1) as f64
        }
    };

    let total_time_s = selector_time_s + classifier_time_s;
    let speedup = match baseline_total_time_s {
        Some(baseline) if baseline > 0.0 && total_time_s > 0.0 => baseline / total_time_s,
        _ => 1.0,
    };

    Ok(BudgetReport {
        budget_tag: tag.to_string(),
        selection_rate,
        accuracy,
        selector_time_s,
        classifier_time_s,
        total_time_s,
        speedup,
    })
}

/// Evaluate every suite entry plus the given baseline row and order the
/// result by ascending total time.
pub fn tradeoff_curve(
    model: &ClassifierModel,
    suite: &crate::aggregation::SelectorSuite,
    corpus: &LabeledCorpus,
    embeddings: Option<&EmbeddingTable>,
    baseline_report: BudgetReport,
    repeats: usize,
) -> Result<TradeoffCurve> {
    if suite.is_empty() {
        return Err(Error::Config("selector suite must be non-empty".into()));
    }
    let mut reports = vec![baseline_report.clone()];
    for entry in &suite.entries {
        reports.push(evaluate(
            model,
            Filter::Selector(&entry.selector),
            corpus,
            embeddings,
            &entry.tag,
            repeats,
            Some(baseline_report.total_time_s),
        )?);
    }
    reports.sort_by(|a, b| {
        a.total_time_s
            .partial_cmp(&b.total_time_s)
            .unwrap()
            .then_with(|| a.budget_tag.cmp(&b.budget_tag))
    });
    Ok(TradeoffCurve { reports })
}

pub const CSV_HEADER: &str =
    "budget,selection_rate,accuracy,selector_time_s,classifier_time_s,total_time_s,speedup";

/// Format to `n` significant figures (plain decimal notation).
fn format_sig(x: f64, n: i32) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{}", x);
    }
    let exponent = x.abs().log10().floor() as i32;
    let decimals = (n - 1 - exponent).max(0) as usize;
    format!("{:.*}", decimals, x)
}

impl TradeoffCurve {
    /// CSV emission: rates/accuracy/speedup at 4 significant figures, times
    /// at 3.
    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for report in &self.reports {
            if report.budget_tag.contains(',') || report.budget_tag.contains('\n') {
                return Err(Error::Format(format!(
                    "budget tag {:?} cannot appear in CSV",
                    report.budget_tag
                )));
            }
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                report.budget_tag,
                format_sig(report.selection_rate, 4),
                format_sig(report.accuracy, 4),
                format_sig(report.selector_time_s, 3),
                format_sig(report.classifier_time_s, 3),
                format_sig(report.total_time_s, 3),
                format_sig(report.speedup, 4),
            ));
        }
        Ok(out)
    }

    pub fn from_csv(content: &str) -> Result<TradeoffCurve> {
        let mut lines = content.lines();
        match lines.next() {
            Some(header) if header == CSV_HEADER => {}
            other => {
                return Err(Error::Format(format!(
                    "bad CSV header {:?}",
                    other.unwrap_or("")
                )))
            }
        }
        let mut reports = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Format(format!(
                    "line {}: expected 7 fields, found {}",
                    lineno + 2,
                    fields.len()
                )));
            }
            let num = |s: &str| -> Result<f64> {
                s.parse()
                    .map_err(|_| Error::Format(format!("line {}: bad number {:?}", lineno + 2, s)))
            };
            reports.push(BudgetReport {
                budget_tag: fields[0].to_string(),
                selection_rate: num(fields[1])?,
                accuracy: num(fields[2])?,
                selector_time_s: num(fields[3])?,
                classifier_time_s: num(fields[4])?,
                total_time_s: num(fields[5])?,
                speedup: num(fields[6])?,
            });
        }
        Ok(TradeoffCurve { reports })
    }
}

/// Representation-shift diagnostic result.
#[derive(Debug, Clone, Copy)]
pub struct ShiftReport {
    /// Mean of `1 - cos(representation(full), representation(fragment))`.
    pub mean_distance: f64,
    /// Documents skipped because one representation had zero norm.
    pub excluded: usize,
}

fn cosine_distance(a: &[f64], b: &[f64]) -> Option<f64> {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        None
    } else {
        // clamp away rounding jitter so the distance stays in [0, 2]
        Some((1.0 - dot / (na * nb)).clamp(0.0, 2.0))
    }
}

/// Mean cosine distance between each document's full-text representation and
/// its fragment representation under the filter.
pub fn representation_shift(
    model: &ClassifierModel,
    corpus: &LabeledCorpus,
    filter: Filter<'_>,
    embeddings: Option<&EmbeddingTable>,
) -> Result<ShiftReport> {
    if corpus.is_empty() {
        return Err(Error::Contract("empty corpus".into()));
    }
    let mut total = 0.0;
    let mut counted = 0usize;
    let mut excluded = 0usize;
    for doc in &corpus.documents {
        let full = model.representation(&doc.tokens)?;
        let mask = filter.mask(doc, embeddings)?;
        let fragment = blank_out(doc, &mask)?;
        let reduced = model.representation(&fragment.tokens)?;
        match cosine_distance(&full, &reduced) {
            Some(d) => {
                total += d;
                counted += 1;
            }
            None => excluded += 1,
        }
    }
    if counted == 0 {
        return Err(Error::Contract("every representation had zero norm".into()));
    }
    Ok(ShiftReport {
        mean_distance: total / counted as f64,
        excluded,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::aggregation::{Level, SelectorSuite, SuiteEntry};
    use crate::classifier::Arch;
    use crate::corpus::{gen_synthetic, EmbeddingTable, SyntheticSpec};
    use crate::selector::bow::BowSelector;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    #[test]
    fn speedup_reproduces_reported_quotients() {
        // 1546 s baseline vs 1297 s pipeline -> 1.2x after rounding
        let s = speedup(1546.0, 1297.0).unwrap();
        assert!((s - 1.19198).abs() < 1e-3);
        assert_eq!(format!("{:.1}", s), "1.2");
        // 9 s baseline vs 4.6 s pipeline -> 2x
        let s = speedup(9.0, 4.6).unwrap();
        assert_eq!(format!("{:.1}", s), "2.0");
        assert_eq!(speedup(3.0, 3.0).unwrap(), 1.0);
        assert!(speedup(0.0, 1.0).is_err());
        assert!(speedup(1.0, -2.0).is_err());
    }

    #[test]
    fn median_of_repeats() {
        let mut times = vec![5.0, 1.0, 3.0, 2.0, 4.0];
        assert_eq!(median(&mut times), 3.0);
        let mut even = vec![4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&mut even), 2.5);
    }

    #[test]
    fn noop_model_fn_floor_is_tiny() {
        let docs = (0..1000)
            .map(|_| Document::new(vec![2, 3], Label::Class(0)))
            .collect();
        let corpus = LabeledCorpus::classification(docs, 2).unwrap();
        let t = time_inference(|_| {}, &corpus, 3);
        assert!(t < 1e-3, "harness floor {} s per 1k docs", t);
    }

    #[test]
    fn format_sig_examples() {
        assert_eq!(format_sig(0.856333, 4), "0.8563");
        assert_eq!(format_sig(1.19198, 4), "1.192");
        assert_eq!(format_sig(0.004637, 3), "0.00464");
        assert_eq!(format_sig(0.0, 3), "0");
        assert_eq!(format_sig(12.0, 3), "12.0");
    }

    fn fixture() -> (
        LabeledCorpus,
        EmbeddingTable,
        ClassifierModel,
        BTreeMap<usize, Vec<u32>>,
    ) {
        let spec = SyntheticSpec {
            num_docs: 80,
            vocab_size: 30,
            doc_len: 10,
            num_classes: 2,
            keyword_rate: 0.3,
            noise_rate: 0.0,
            keywords_per_class: 3,
        };
        let (corpus, map) = gen_synthetic(&spec, 90).unwrap();
        let mut rng_rows = Vec::new();
        for i in 0..30 {
            rng_rows.push(vec![(i as f64 * 0.7).sin(), (i as f64 * 1.3).cos(), 0.1]);
        }
        let table = EmbeddingTable::new(rng_rows, 3).unwrap();
        let mut model = ClassifierModel::new(Arch::BagOfEmbeddings, &table, 6, 2, 91).unwrap();
        let cfg = crate::classifier::TrainConfig::new(0.5, 15, 8, 92);
        model.train(&corpus, &cfg).unwrap();
        (corpus, table, model, map)
    }

    #[test]
    fn evaluate_baseline_row() {
        let (corpus, _, model, _) = fixture();
        let report = evaluate(&model, Filter::None, &corpus, None, "baseline", 3, None).unwrap();
        assert_eq!(report.selection_rate, 1.0);
        assert_eq!(report.speedup, 1.0);
        assert_eq!(report.selector_time_s, 0.0);
        assert!(report.accuracy >= 0.99, "accuracy {}", report.accuracy);
        assert!(report.total_time_s > 0.0);
        // timing jitters; accuracy of a frozen model does not
        let again = evaluate(&model, Filter::None, &corpus, None, "baseline", 3, None).unwrap();
        assert_eq!(report.accuracy, again.accuracy);
        assert_eq!(report.selection_rate, again.selection_rate);
    }

    #[test]
    fn evaluate_zero_selector_hits_constant_response() {
        let (corpus, _, model, _) = fixture();
        let zero = AnySelector::Bow(BowSelector {
            weights: BTreeMap::new(),
            bias: vec![0.0],
            budget: 1.0,
            trained_selection_rate: None,
        });
        let report = evaluate(
            &model,
            Filter::Selector(&zero),
            &corpus,
            None,
            "0%",
            3,
            None,
        )
        .unwrap();
        assert_eq!(report.selection_rate, 0.0);
        // every fragment is [EMPTY]: accuracy equals the rate of the class
        // the trained model assigns to the EMPTY token
        let empty_pred = model.predict(&[crate::corpus::EMPTY_ID]).unwrap();
        let expected = corpus
            .documents
            .iter()
            .filter(|d| matches!((empty_pred, d.label), (Prediction::Class(c), Label::Class(t)) if c == t))
            .count() as f64
            / corpus.len() as f64;
        assert!((report.accuracy - expected).abs() < 1e-12);
    }

    #[test]
    fn adversarial_stoplist_hurts_accuracy() {
        let (corpus, _, model, map) = fixture();
        // stoplist containing every planted keyword
        let stop: HashSet<u32> = map.values().flatten().copied().collect();
        let baseline = evaluate(&model, Filter::None, &corpus, None, "baseline", 1, None).unwrap();
        let filtered = evaluate(
            &model,
            Filter::Stopwords(&stop),
            &corpus,
            None,
            "stopwords",
            1,
            None,
        )
        .unwrap();
        assert!(
            filtered.accuracy < baseline.accuracy,
            "stoplist {} vs baseline {}",
            filtered.accuracy,
            baseline.accuracy
        );
        assert!(filtered.selection_rate < 1.0);
    }

    #[test]
    fn curve_contains_baseline_and_all_budgets() {
        let (corpus, _, model, map) = fixture();
        let keyword_ids: Vec<u32> = map.values().flatten().copied().collect();
        let mut all = BTreeMap::new();
        for id in 0..30u32 {
            all.insert(id, vec![1.0]);
        }
        let mut kw_only = BTreeMap::new();
        for &id in &keyword_ids {
            kw_only.insert(id, vec![1.0]);
        }
        let suite = SelectorSuite::new(
            vec![
                SuiteEntry {
                    selector: AnySelector::Bow(BowSelector {
                        weights: all,
                        bias: vec![0.0],
                        budget: 2.0,
                        trained_selection_rate: None,
                    }),
                    tag: "100%".into(),
                },
                SuiteEntry {
                    selector: AnySelector::Bow(BowSelector {
                        weights: kw_only,
                        bias: vec![0.0],
                        budget: 0.5,
                        trained_selection_rate: None,
                    }),
                    tag: "keywords".into(),
                },
            ],
            Level::Word,
        )
        .unwrap();
        let baseline = evaluate(&model, Filter::None, &corpus, None, "baseline", 3, None).unwrap();
        let curve = tradeoff_curve(&model, &suite, &corpus, None, baseline, 3).unwrap();
        assert_eq!(curve.reports.len(), 3);
        assert!(curve
            .reports
            .iter()
            .any(|r| r.budget_tag == "baseline" && r.selection_rate == 1.0));
        // sorted ascending by time
        for w in curve.reports.windows(2) {
            assert!(w[0].total_time_s <= w[1].total_time_s);
        }
    }

    #[test]
    fn six_budget_suite_yields_seven_rows() {
        let (corpus, _, model, _) = fixture();
        let entries = (0..6)
            .map(|i| {
                // nested supports approximating 50%..100% budgets
                let mut weights = BTreeMap::new();
                for id in 0..(15 + 3 * i as u32) {
                    weights.insert(id, vec![1.0]);
                }
                SuiteEntry {
                    selector: AnySelector::Bow(BowSelector {
                        weights,
                        bias: vec![0.0],
                        budget: 1.0 + i as f64,
                        trained_selection_rate: None,
                    }),
                    tag: format!("{}%", 50 + 10 * i),
                }
            })
            .collect();
        let suite = SelectorSuite::new(entries, Level::Word).unwrap();
        let baseline = evaluate(&model, Filter::None, &corpus, None, "baseline", 1, None).unwrap();
        let curve = tradeoff_curve(&model, &suite, &corpus, None, baseline, 1).unwrap();
        assert_eq!(curve.reports.len(), 7); // 6 budgets + the baseline row
        let csv = curve.to_csv().unwrap();
        assert_eq!(csv.lines().count(), 8);
    }

    #[test]
    fn csv_round_trips_at_emitted_precision() {
        let curve = TradeoffCurve {
            reports: vec![
                BudgetReport {
                    budget_tag: "baseline".into(),
                    selection_rate: 1.0,
                    accuracy: 0.912345,
                    selector_time_s: 0.0,
                    classifier_time_s: 0.012345,
                    total_time_s: 0.012345,
                    speedup: 1.0,
                },
                BudgetReport {
                    budget_tag: "50%".into(),
                    selection_rate: 0.498765,
                    accuracy: 0.876543,
                    selector_time_s: 0.001234,
                    classifier_time_s: 0.005678,
                    total_time_s: 0.006912,
                    speedup: 1.78595,
                },
            ],
        };
        let csv = curve.to_csv().unwrap();
        assert!(csv.starts_with(CSV_HEADER));
        let parsed = TradeoffCurve::from_csv(&csv).unwrap();
        // parse∘emit is the identity on the emitted representation
        assert_eq!(parsed.to_csv().unwrap(), csv);
        assert_eq!(parsed.reports.len(), 2);
        assert!((parsed.reports[1].accuracy - 0.8765).abs() < 1e-9);
    }

    #[test]
    fn csv_rejects_bad_header() {
        assert!(TradeoffCurve::from_csv("nope\n1,2,3,4,5,6,7\n").is_err());
    }

    #[test]
    fn identity_filter_has_zero_shift() {
        let (corpus, _, model, _) = fixture();
        let shift = representation_shift(&model, &corpus, Filter::None, None).unwrap();
        assert!(shift.mean_distance.abs() < 1e-12, "{}", shift.mean_distance);
        assert_eq!(shift.excluded, 0);
    }

    #[test]
    fn orthogonal_representations_have_unit_distance() {
        assert_eq!(cosine_distance(&[1.0, 0.0], &[0.0, 2.0]), Some(1.0));
        assert_eq!(cosine_distance(&[1.0, 0.0], &[3.0, 0.0]), Some(0.0));
        assert_eq!(cosine_distance(&[0.0, 0.0], &[1.0, 0.0]), None);
    }

    proptest! {
        #[test]
        fn speedup_is_antisymmetric(a in 0.001f64..1000.0, b in 0.001f64..1000.0) {
            let ab = speedup(a, b).unwrap();
            let ba = speedup(b, a).unwrap();
            prop_assert!((ab * ba - 1.0).abs() < 1e-12);
        }
    }
}
