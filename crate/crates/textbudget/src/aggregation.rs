//! Data-aggregated training: union the original corpus with every
//! selector's blank-out corpus and train one classifier on the multiset, so
//! a single model stays accurate on fragments from any budget.
//!
//! Masks can be expanded to phrase or sentence granularity before blank-out:
//! a span (or sentence) is kept as a whole iff any of its tokens was
//! selected, which stops a selector from splitting units like "los angeles".

use std::path::Path;

use crate::classifier::{ClassifierModel, TrainConfig};
use crate::corpus::{
    blank_out, validate_phrase_spans, validate_sentence_bounds, write_dataset, Document,
    EmbeddingTable, LabeledCorpus, SelectionMask, Vocabulary,
};
use crate::error::{Error, Result};
use crate::selector::AnySelector;

/// Mask granularity used when generating blank-out corpora.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Word,
    Phrase,
    Sentence,
}

impl std::str::FromStr for Level {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "word" => Ok(Level::Word),
            "phrase" => Ok(Level::Phrase),
            "sentence" => Ok(Level::Sentence),
            other => Err(Error::Config(format!(
                "unknown level {:?} (expected word, phrase, or sentence)",
                other
            ))),
        }
    }
}

/// One selector with its reporting tag.
#[derive(Debug, Clone)]
pub struct SuiteEntry {
    pub selector: AnySelector,
    pub tag: String,
}

/// A set of selectors at different budget levels, applied at one granularity.
#[derive(Debug, Clone)]
pub struct SelectorSuite {
    pub entries: Vec<SuiteEntry>,
    pub level: Level,
}

impl SelectorSuite {
    pub fn new(entries: Vec<SuiteEntry>, level: Level) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::Config("selector suite must be non-empty".into()));
        }
        for i in 0..entries.len() {
            for j in i + 1..entries.len() {
                if entries[i].tag == entries[j].tag {
                    return Err(Error::Config(format!(
                        "duplicate budget tag {:?} in suite",
                        entries[i].tag
                    )));
                }
            }
        }
        Ok(SelectorSuite { entries, level })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Promote a word mask to sentence granularity: every sentence becomes
/// all-ones iff any of its bits was set.
pub fn expand_sentence(mask: &SelectionMask, sentence_bounds: &[usize]) -> Result<SelectionMask> {
    validate_sentence_bounds(sentence_bounds, mask.len())?;
    let mut bits = vec![false; mask.len()];
    let mut start = 0;
    for &end in sentence_bounds {
        let any = (start..end).any(|k| mask.get(k));
        for bit in &mut bits[start..end] {
            *bit = any;
        }
        start = end;
    }
    Ok(SelectionMask::from_bits(bits))
}

/// Promote a word mask to phrase granularity: inside each span the bits
/// become all-ones iff any was set; bits outside spans are untouched.
pub fn expand_phrase(
    mask: &SelectionMask,
    phrase_spans: &[(usize, usize)],
) -> Result<SelectionMask> {
    validate_phrase_spans(phrase_spans, mask.len())?;
    let mut bits: Vec<bool> = mask.bits().to_vec();
    for &(start, end) in phrase_spans {
        if (start..end).any(|k| mask.get(k)) {
            for bit in &mut bits[start..end] {
                *bit = true;
            }
        }
    }
    Ok(SelectionMask::from_bits(bits))
}

/// The selection mask a suite entry produces for one document at the given
/// granularity.
pub fn level_mask(
    selector: &AnySelector,
    doc: &Document,
    level: Level,
    embeddings: Option<&EmbeddingTable>,
) -> Result<SelectionMask> {
    let mask = selector.mask(doc, embeddings)?;
    match level {
        Level::Word => Ok(mask),
        Level::Phrase => {
            let spans = doc.phrase_spans.as_ref().ok_or_else(|| {
                Error::Config("phrase-level aggregation needs phrase spans on documents".into())
            })?;
            expand_phrase(&mask, spans)
        }
        Level::Sentence => {
            let bounds = doc.sentence_bounds.as_ref().ok_or_else(|| {
                Error::Config(
                    "sentence-level aggregation needs sentence bounds on documents".into(),
                )
            })?;
            expand_sentence(&mask, bounds)
        }
    }
}

/// Apply one selector to every document, preserving labels and order.
pub fn generate_blankout(
    corpus: &LabeledCorpus,
    selector: &AnySelector,
    level: Level,
    embeddings: Option<&EmbeddingTable>,
) -> Result<Vec<Document>> {
    corpus
        .documents
        .iter()
        .map(|doc| {
            let mask = level_mask(selector, doc, level, embeddings)?;
            blank_out(doc, &mask)
        })
        .collect()
}

/// Where an aggregated instance came from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Original,
    Budget(String),
}

impl Origin {
    pub fn as_str(&self) -> &str {
        match self {
            Origin::Original => "original",
            Origin::Budget(tag) => tag,
        }
    }
}

/// One instance of the aggregated multiset.
#[derive(Debug, Clone)]
pub struct AggregatedInstance {
    pub document: Document,
    pub origin: Origin,
}

/// The aggregated corpus: originals first, then each selector's fragments in
/// suite order. Duplicates are kept; the size is exactly
/// `(suite.len() + 1) * corpus.len()`.
#[derive(Debug, Clone)]
pub struct AggregatedCorpus {
    pub instances: Vec<AggregatedInstance>,
    pub num_classes: usize,
    pub task: crate::corpus::Task,
}

impl AggregatedCorpus {
    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Flatten into a trainable corpus (labels ride on the documents).
    pub fn to_labeled(&self) -> LabeledCorpus {
        LabeledCorpus {
            documents: self.instances.iter().map(|i| i.document.clone()).collect(),
            num_classes: self.num_classes,
            task: self.task,
        }
    }
}

/// Build the aggregated corpus for a selector suite.
pub fn aggregate(
    corpus: &LabeledCorpus,
    suite: &SelectorSuite,
    embeddings: Option<&EmbeddingTable>,
) -> Result<AggregatedCorpus> {
    if suite.is_empty() {
        return Err(Error::Config("selector suite must be non-empty".into()));
    }
    if corpus.is_empty() {
        return Err(Error::Contract("cannot aggregate an empty corpus".into()));
    }
    let mut instances = Vec::with_capacity((suite.len() + 1) * corpus.len());
    for doc in &corpus.documents {
        instances.push(AggregatedInstance {
            document: doc.clone(),
            origin: Origin::Original,
        });
    }
    for entry in &suite.entries {
        let fragments = generate_blankout(corpus, &entry.selector, suite.level, embeddings)?;
        for fragment in fragments {
            instances.push(AggregatedInstance {
                document: fragment,
                origin: Origin::Budget(entry.tag.clone()),
            });
        }
    }
    debug_assert_eq!(instances.len(), (suite.len() + 1) * corpus.len());
    Ok(AggregatedCorpus {
        instances,
        num_classes: corpus.num_classes,
        task: corpus.task,
    })
}

/// Train a classifier on the aggregated multiset with fragment-level
/// shuffling across the whole corpus each epoch.
pub fn train_dag(
    mut model: ClassifierModel,
    aggregated: &AggregatedCorpus,
    config: &TrainConfig,
) -> Result<ClassifierModel> {
    if aggregated.is_empty() {
        return Err(Error::Contract("aggregated corpus is empty".into()));
    }
    let corpus = aggregated.to_labeled();
    model.train(&corpus, config)?;
    Ok(model)
}

/// Serialize to JSON-lines with an `origin` field per record.
pub fn write_aggregated(
    path: &Path,
    aggregated: &AggregatedCorpus,
    vocab: &Vocabulary,
) -> Result<()> {
    let documents: Vec<Document> = aggregated
        .instances
        .iter()
        .map(|i| i.document.clone())
        .collect();
    let origins: Vec<String> = aggregated
        .instances
        .iter()
        .map(|i| i.origin.as_str().to_string())
        .collect();
    write_dataset(path, &documents, vocab, Some(&origins))
}
