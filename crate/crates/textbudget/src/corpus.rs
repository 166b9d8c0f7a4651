//! Documents, vocabularies, embeddings, selection masks, blank-out, and
//! synthetic corpus generation.
//!
//! A document `x = {w_1 ... w_N}` is a token-id sequence with a label. A
//! selection mask `z` is a per-token keep/drop bit vector; [`blank_out`]
//! computes the surviving fragment `I(x, z)`. A fully dropped document
//! becomes the single [`EMPTY_ID`] token so downstream models always see
//! at least one token.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved id for out-of-vocabulary tokens.
pub const UNK_ID: u32 = 0;
/// Reserved id standing in for a fully filtered document.
pub const EMPTY_ID: u32 = 1;

pub const UNK_TOKEN: &str = "<unk>";
pub const EMPTY_TOKEN: &str = "<empty>";

/// A document label: class index for classification, real value for
/// regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Label {
    Class(usize),
    Value(f64),
}

impl Label {
    pub fn class(&self) -> Option<usize> {
        match self {
            Label::Class(c) => Some(*c),
            Label::Value(_) => None,
        }
    }

    pub fn value(&self) -> f64 {
        match self {
            Label::Class(c) => *c as f64,
            Label::Value(v) => *v,
        }
    }
}

/// A tokenized, labeled document with optional sentence/phrase structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub tokens: Vec<u32>,
    pub label: Label,
    /// Sorted end-exclusive token indices; the last entry equals the token
    /// count, so the bounds partition `[0, N)`.
    pub sentence_bounds: Option<Vec<usize>>,
    /// Non-overlapping `(start, end)` token ranges.
    pub phrase_spans: Option<Vec<(usize, usize)>>,
}

impl Document {
    pub fn new(tokens: Vec<u32>, label: Label) -> Self {
        Document {
            tokens,
            label,
            sentence_bounds: None,
            phrase_spans: None,
        }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Check the structural invariants against a vocabulary size.
    pub fn validate(&self, vocab_size: usize) -> Result<()> {
        if let Some(&t) = self.tokens.iter().find(|&&t| t as usize >= vocab_size) {
            return Err(Error::Contract(format!(
                "token id {} out of range for vocabulary of size {}",
                t, vocab_size
            )));
        }
        if let Some(bounds) = &self.sentence_bounds {
            validate_sentence_bounds(bounds, self.tokens.len())?;
        }
        if let Some(spans) = &self.phrase_spans {
            validate_phrase_spans(spans, self.tokens.len())?;
        }
        Ok(())
    }
}

pub(crate) fn validate_sentence_bounds(bounds: &[usize], len: usize) -> Result<()> {
    if bounds.is_empty() || *bounds.last().unwrap() != len {
        return Err(Error::Contract(format!(
            "sentence bounds {:?} do not partition a document of length {}",
            bounds, len
        )));
    }
    let mut prev = 0;
    for &b in bounds {
        if b <= prev && !(b == 0 && prev == 0 && len == 0) {
            return Err(Error::Contract(format!(
                "sentence bounds {:?} are not strictly increasing",
                bounds
            )));
        }
        prev = b;
    }
    Ok(())
}

pub(crate) fn validate_phrase_spans(spans: &[(usize, usize)], len: usize) -> Result<()> {
    let mut sorted: Vec<_> = spans.to_vec();
    sorted.sort_unstable();
    let mut prev_end = 0;
    for &(s, e) in &sorted {
        if s >= e || e > len {
            return Err(Error::Contract(format!(
                "phrase span ({}, {}) out of range for length {}",
                s, e, len
            )));
        }
        if s < prev_end {
            return Err(Error::Contract(format!("phrase spans {:?} overlap", spans)));
        }
        prev_end = e;
    }
    Ok(())
}

/// Token/id bijection with two reserved ids: [`UNK_ID`] and [`EMPTY_ID`].
#[derive(Debug, Clone)]
pub struct Vocabulary {
    token_to_id: HashMap<String, u32>,
    id_to_token: Vec<String>,
}

impl Vocabulary {
    /// A vocabulary holding only the reserved tokens.
    pub fn new() -> Self {
        let mut v = Vocabulary {
            token_to_id: HashMap::new(),
            id_to_token: Vec::new(),
        };
        v.push(UNK_TOKEN.to_string());
        v.push(EMPTY_TOKEN.to_string());
        v
    }

    fn push(&mut self, token: String) -> u32 {
        let id = self.id_to_token.len() as u32;
        self.token_to_id.insert(token.clone(), id);
        self.id_to_token.push(token);
        id
    }

    /// Rebuild a vocabulary from an id-ordered token list (model files).
    pub fn from_id_list(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != UNK_TOKEN || tokens[1] != EMPTY_TOKEN {
            return Err(Error::Format(
                "vocabulary list must start with the reserved tokens".into(),
            ));
        }
        let mut token_to_id = HashMap::with_capacity(tokens.len());
        for (id, tok) in tokens.iter().enumerate() {
            if token_to_id.insert(tok.clone(), id as u32).is_some() {
                return Err(Error::Format(format!("duplicate token {:?}", tok)));
            }
        }
        Ok(Vocabulary {
            token_to_id,
            id_to_token: tokens,
        })
    }

    pub fn len(&self) -> usize {
        self.id_to_token.len()
    }

    pub fn is_empty(&self) -> bool {
        false // reserved ids are always present
    }

    /// Id for a token, falling back to [`UNK_ID`].
    pub fn id(&self, token: &str) -> u32 {
        self.token_to_id.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.token_to_id.contains_key(token)
    }

    pub fn token(&self, id: u32) -> &str {
        &self.id_to_token[id as usize]
    }

    /// Tokens in id order.
    pub fn id_list(&self) -> &[String] {
        &self.id_to_token
    }

    pub fn encode(&self, tokens: &[String]) -> Vec<u32> {
        tokens.iter().map(|t| self.id(t)).collect()
    }

    pub fn decode(&self, ids: &[u32]) -> Vec<String> {
        ids.iter().map(|&i| self.token(i).to_string()).collect()
    }

    /// Map a set of token strings to the ids present in this vocabulary.
    pub fn id_set(&self, tokens: &HashSet<String>) -> HashSet<u32> {
        tokens
            .iter()
            .filter_map(|t| self.token_to_id.get(t).copied())
            .collect()
    }
}

impl Default for Vocabulary {
    fn default() -> Self {
        Vocabulary::new()
    }
}

/// Dense `|V| x d` embedding matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    rows: Vec<Vec<f64>>,
    dim: usize,
}

impl EmbeddingTable {
    pub fn new(rows: Vec<Vec<f64>>, dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Format("embedding dimension must be positive".into()));
        }
        for row in &rows {
            if row.len() != dim {
                return Err(Error::Format("inconsistent embedding row length".into()));
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Format("non-finite embedding entry".into()));
            }
        }
        Ok(EmbeddingTable { rows, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vocab_size(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, id: u32) -> &[f64] {
        &self.rows[id as usize]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }
}

/// Binary keep/drop bits aligned to a document's tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionMask {
    bits: Vec<bool>,
}

impl SelectionMask {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        SelectionMask { bits }
    }

    pub fn ones(len: usize) -> Self {
        SelectionMask {
            bits: vec![true; len],
        }
    }

    pub fn zeros(len: usize) -> Self {
        SelectionMask {
            bits: vec![false; len],
        }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, k: usize) -> bool {
        self.bits[k]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of selected tokens.
    pub fn count_selected(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Fraction of selected tokens; 0 for an empty mask.
    pub fn selection_fraction(&self) -> f64 {
        if self.bits.is_empty() {
            0.0
        } else {
            self.count_selected() as f64 / self.bits.len() as f64
        }
    }
}

/// Task kind for a labeled corpus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Task {
    Classification,
    Regression,
}

/// A list of documents with shared task metadata.
#[derive(Debug, Clone)]
pub struct LabeledCorpus {
    pub documents: Vec<Document>,
    pub num_classes: usize,
    pub task: Task,
}

impl LabeledCorpus {
    pub fn classification(documents: Vec<Document>, num_classes: usize) -> Result<Self> {
        for doc in &documents {
            match doc.label {
                Label::Class(c) if c < num_classes => {}
                _ => {
                    return Err(Error::Contract(format!(
                        "classification label {:?} out of range for {} classes",
                        doc.label, num_classes
                    )))
                }
            }
        }
        Ok(LabeledCorpus {
            documents,
            num_classes,
            task: Task::Classification,
        })
    }

    pub fn regression(documents: Vec<Document>) -> Self {
        LabeledCorpus {
            documents,
            num_classes: 1,
            task: Task::Regression,
        }
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(|d| d.len()).sum()
    }
}

/// Lowercase, split on whitespace, and peel leading/trailing ASCII
/// punctuation into separate tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for piece in text.split_whitespace() {
        let lowered = piece.to_lowercase();
        let chars: Vec<char> = lowered.chars().collect();
        let mut start = 0;
        let mut end = chars.len();
        while start < end && chars[start].is_ascii_punctuation() {
            start += 1;
        }
        while end > start && chars[end - 1].is_ascii_punctuation() {
            end -= 1;
        }
        for &c in &chars[..start] {
            out.push(c.to_string());
        }
        if start < end {
            out.push(chars[start..end].iter().collect());
        }
        for &c in &chars[end..] {
            out.push(c.to_string());
        }
    }
    out
}

/// Build a vocabulary from tokenized documents. Tokens with frequency below
/// `min_freq` are excluded and map to [`UNK_ID`] at encode time. Ids are
/// assigned by descending frequency, ties broken lexicographically.
pub fn build_vocab(token_docs: &[Vec<String>], min_freq: usize) -> Result<Vocabulary> {
    if min_freq < 1 {
        return Err(Error::Config("min_freq must be at least 1".into()));
    }
    let mut freq: HashMap<&str, usize> = HashMap::new();
    for doc in token_docs {
        for tok in doc {
            *freq.entry(tok.as_str()).or_insert(0) += 1;
        }
    }
    let mut pairs: Vec<(&str, usize)> = freq.into_iter().filter(|&(_, c)| c >= min_freq).collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let mut vocab = Vocabulary::new();
    for (tok, _) in pairs {
        vocab.push(tok.to_string());
    }
    Ok(vocab)
}

/// Load pretrained word vectors in whitespace text format (`token v1 .. vd`).
///
/// Rows for tokens found in the file are copied verbatim; every other row
/// (including the reserved ids) is initialized uniformly in
/// `[-0.5/d, 0.5/d]` from a generator seeded with `seed`.
pub fn load_embeddings(path: &Path, vocab: &Vocabulary, seed: u64) -> Result<EmbeddingTable> {
    let file = std::fs::File::open(path)?;
    parse_embeddings(BufReader::new(file), vocab, seed)
}

/// Reader-based form of [`load_embeddings`].
pub fn parse_embeddings<R: BufRead>(
    reader: R,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<EmbeddingTable> {
    let mut dim: Option<usize> = None;
    let mut loaded: HashMap<u32, Vec<f64>> = HashMap::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let token = parts
            .next()
            .ok_or_else(|| Error::Format(format!("line {}: missing token", lineno + 1)))?;
        let values: Vec<f64> = parts
            .map(|p| {
                p.parse::<f64>()
                    .map_err(|_| Error::Format(format!("line {}: bad number {:?}", lineno + 1, p)))
            })
            .collect::<Result<_>>()?;
        if values.is_empty() {
            return Err(Error::Format(format!(
                "line {}: embedding dimension must be positive",
                lineno + 1
            )));
        }
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(Error::Format(format!(
                    "line {}: dimension {} does not match earlier dimension {}",
                    lineno + 1,
                    values.len(),
                    d
                )))
            }
            _ => {}
        }
        if vocab.contains(token) {
            let id = vocab.id(token);
            if id != UNK_ID && id != EMPTY_ID {
                loaded.insert(id, values);
            }
        }
    }
    let dim = dim.ok_or_else(|| Error::Format("embedding file is empty".into()))?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bound = 0.5 / dim as f64;
    let mut rows = Vec::with_capacity(vocab.len());
    for id in 0..vocab.len() as u32 {
        match loaded.remove(&id) {
            Some(row) => rows.push(row),
            None => rows.push((0..dim).map(|_| rng.random_range(-bound..=bound)).collect()),
        }
    }
    EmbeddingTable::new(rows, dim)
}

/// Keep the tokens whose mask bit is set, preserving order and label and
/// recomputing structure over the survivors. An all-zero mask yields the
/// single [`EMPTY_ID`] token.
pub fn blank_out(doc: &Document, mask: &SelectionMask) -> Result<Document> {
    if mask.len() != doc.tokens.len() {
        return Err(Error::Contract(format!(
            "mask length {} does not match document length {}",
            mask.len(),
            doc.tokens.len()
        )));
    }
    if mask.count_selected() == 0 {
        return Ok(Document {
            tokens: vec![EMPTY_ID],
            label: doc.label,
            sentence_bounds: doc.sentence_bounds.as_ref().map(|_| vec![1]),
            phrase_spans: doc.phrase_spans.as_ref().map(|_| Vec::new()),
        });
    }

    // survivors_before[i] = number of kept tokens strictly before position i
    let mut survivors_before = Vec::with_capacity(doc.tokens.len() + 1);
    let mut count = 0usize;
    for k in 0..doc.tokens.len() {
        survivors_before.push(count);
        if mask.get(k) {
            count += 1;
        }
    }
    survivors_before.push(count);

    let tokens: Vec<u32> = doc
        .tokens
        .iter()
        .zip(mask.bits())
        .filter_map(|(&t, &keep)| keep.then_some(t))
        .collect();

    let sentence_bounds = doc.sentence_bounds.as_ref().map(|bounds| {
        let mut out = Vec::new();
        for &b in bounds {
            let nb = survivors_before[b];
            if out.last() != Some(&nb) && nb > 0 {
                out.push(nb);
            }
        }
        out
    });

    let phrase_spans = doc.phrase_spans.as_ref().map(|spans| {
        spans
            .iter()
            .filter_map(|&(s, e)| {
                let (ns, ne) = (survivors_before[s], survivors_before[e]);
                (ns < ne).then_some((ns, ne))
            })
            .collect()
    });

    Ok(Document {
        tokens,
        label: doc.label,
        sentence_bounds,
        phrase_spans,
    })
}

/// Mask with bit 0 exactly on stoplist members.
pub fn stopword_mask(doc: &Document, stop_ids: &HashSet<u32>) -> SelectionMask {
    SelectionMask::from_bits(doc.tokens.iter().map(|t| !stop_ids.contains(t)).collect())
}

/// Filter out stoplist tokens; equivalent to [`blank_out`] under
/// [`stopword_mask`].
pub fn remove_stopwords(doc: &Document, stop_ids: &HashSet<u32>) -> Document {
    blank_out(doc, &stopword_mask(doc, stop_ids)).expect("stopword mask is always aligned")
}

/// Parameters for [`gen_synthetic`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_docs: usize,
    pub vocab_size: usize,
    pub doc_len: usize,
    pub num_classes: usize,
    /// Probability that a token position carries a class keyword.
    pub keyword_rate: f64,
    /// Probability that a document's label is replaced by a uniformly random
    /// class.
    pub noise_rate: f64,
    /// Keywords owned by each class.
    #[serde(default = "default_keywords_per_class")]
    pub keywords_per_class: usize,
}

fn default_keywords_per_class() -> usize {
    3
}

impl SyntheticSpec {
    fn validate(&self) -> Result<()> {
        if self.vocab_size <= self.num_classes {
            return Err(Error::Config("vocab_size must exceed num_classes".into()));
        }
        if !(self.keyword_rate > 0.0 && self.keyword_rate <= 1.0) {
            return Err(Error::Config("keyword_rate must be in (0, 1]".into()));
        }
        if !(0.0..=1.0).contains(&self.noise_rate) {
            return Err(Error::Config("noise_rate must be in [0, 1]".into()));
        }
        if self.num_classes < 2 || self.doc_len == 0 || self.keywords_per_class == 0 {
            return Err(Error::Config("degenerate synthetic spec".into()));
        }
        let reserved = 2 + self.num_classes * self.keywords_per_class;
        if reserved >= self.vocab_size {
            return Err(Error::Config(format!(
                "keyword sets need {} ids but vocab_size is {}",
                reserved, self.vocab_size
            )));
        }
        Ok(())
    }
}

/// Generate a keyword-planted classification corpus.
///
/// Each class owns a disjoint keyword set; documents are filled with
/// label-independent filler tokens, with each position carrying one of its
/// class's keywords with probability `keyword_rate` (at least one keyword is
/// always planted). With `noise_rate = 0` the corpus is perfectly separable
/// by keyword presence. Returns the per-class keyword map alongside the
/// corpus.
pub fn gen_synthetic(
    spec: &SyntheticSpec,
    seed: u64,
) -> Result<(LabeledCorpus, BTreeMap<usize, Vec<u32>>)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut keyword_map: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    let mut next_id = 2u32; // skip UNK/EMPTY
    for class in 0..spec.num_classes {
        let ids: Vec<u32> = (0..spec.keywords_per_class)
            .map(|_| {
                let id = next_id;
                next_id += 1;
                id
            })
            .collect();
        keyword_map.insert(class, ids);
    }
    let filler_start = next_id;
    let filler_count = spec.vocab_size as u32 - filler_start;

    let mut documents = Vec::with_capacity(spec.num_docs);
    for _ in 0..spec.num_docs {
        let class = rng.random_range(0..spec.num_classes);
        let keywords = &keyword_map[&class];
        let mut tokens = Vec::with_capacity(spec.doc_len);
        let mut planted = 0usize;
        for _ in 0..spec.doc_len {
            if rng.random::<f64>() < spec.keyword_rate {
                tokens.push(keywords[rng.random_range(0..keywords.len())]);
                planted += 1;
            } else {
                tokens.push(filler_start + rng.random_range(0..filler_count));
            }
        }
        if planted == 0 {
            let pos = rng.random_range(0..spec.doc_len);
            tokens[pos] = keywords[rng.random_range(0..keywords.len())];
        }
        let label = if spec.noise_rate > 0.0 && rng.random::<f64>() < spec.noise_rate {
            rng.random_range(0..spec.num_classes)
        } else {
            class
        };
        documents.push(Document::new(tokens, Label::Class(label)));
    }

    let corpus = LabeledCorpus::classification(documents, spec.num_classes)?;
    Ok((corpus, keyword_map))
}

/// Vocabulary whose token strings are `w<id>`, matching the ids produced by
/// [`gen_synthetic`]; used when a synthetic corpus is written to disk.
pub fn synthetic_vocab(vocab_size: usize) -> Vocabulary {
    let mut vocab = Vocabulary::new();
    for id in 2..vocab_size {
        vocab.push(format!("w{}", id));
    }
    vocab
}

// ---------------------------------------------------------------------------
// Dataset files
// ---------------------------------------------------------------------------

/// One not-yet-encoded dataset record.
#[derive(Debug, Clone)]
pub struct RawDocument {
    pub label: f64,
    pub label_is_integer: bool,
    pub text: Option<String>,
    pub sentences: Option<Vec<String>>,
    pub phrases: Option<Vec<(usize, usize)>>,
}

#[derive(Deserialize)]
struct JsonRecord {
    label: f64,
    #[serde(default)]
    text: Option<String>,
    #[serde(default)]
    sentences: Option<Vec<String>>,
    #[serde(default)]
    phrases: Option<Vec<(usize, usize)>>,
}

#[derive(Serialize)]
struct JsonRecordOut<'a> {
    label: f64,
    text: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    sentences: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    phrases: Option<&'a Vec<(usize, usize)>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    origin: Option<&'a str>,
}

/// Read a dataset file: tab-separated `label<TAB>text` lines or JSON-lines
/// records with `label`, `text`, and optional `sentences`/`phrases` fields.
/// The format is detected from the first non-empty line.
pub fn read_dataset(path: &Path) -> Result<Vec<RawDocument>> {
    let content = std::fs::read_to_string(path)?;
    let first = content.lines().find(|l| !l.trim().is_empty());
    let Some(first) = first else {
        return Ok(Vec::new());
    };
    if first.trim_start().starts_with('{') {
        read_jsonl(&content)
    } else {
        read_tsv(&content)
    }
}

fn parse_label(raw: &str) -> Result<(f64, bool)> {
    let value: f64 = raw
        .trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad label {:?}", raw)))?;
    let is_integer = !raw.contains('.') && value >= 0.0 && value.fract() == 0.0;
    Ok((value, is_integer))
}

fn read_tsv(content: &str) -> Result<Vec<RawDocument>> {
    let mut out = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let (label_raw, text) = line.split_once('\t').ok_or_else(|| {
            Error::Format(format!("line {}: expected label<TAB>text", lineno + 1))
        })?;
        let (label, label_is_integer) = parse_label(label_raw)?;
        out.push(RawDocument {
            label,
            label_is_integer,
            text: Some(text.to_string()),
            sentences: None,
            phrases: None,
        });
    }
    Ok(out)
}

fn read_jsonl(content: &str) -> Result<Vec<RawDocument>> {
    let mut out = Vec::new();
    for (lineno, line) in content.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord = serde_json::from_str(line)
            .map_err(|e| Error::Format(format!("line {}: {}", lineno + 1, e)))?;
        if rec.text.is_none() && rec.sentences.is_none() {
            return Err(Error::Format(format!(
                "line {}: record has neither text nor sentences",
                lineno + 1
            )));
        }
        out.push(RawDocument {
            label: rec.label,
            label_is_integer: rec.label >= 0.0 && rec.label.fract() == 0.0,
            text: rec.text,
            sentences: rec.sentences,
            phrases: rec.phrases,
        });
    }
    Ok(out)
}

/// Tokenize one raw record, producing the flat token list plus sentence
/// bounds when the record carries per-sentence text.
pub fn tokenize_raw(raw: &RawDocument) -> (Vec<String>, Option<Vec<usize>>) {
    if let Some(sentences) = &raw.sentences {
        let mut tokens = Vec::new();
        let mut bounds = Vec::new();
        for sentence in sentences {
            let mut toks = tokenize(sentence);
            if toks.is_empty() {
                continue;
            }
            tokens.append(&mut toks);
            bounds.push(tokens.len());
        }
        (tokens, Some(bounds))
    } else {
        (tokenize(raw.text.as_deref().unwrap_or("")), None)
    }
}

/// Encode raw records against a vocabulary. The task is classification when
/// every label is a non-negative integer, regression otherwise.
pub fn encode_corpus(raw: &[RawDocument], vocab: &Vocabulary) -> Result<LabeledCorpus> {
    let classification = !raw.is_empty() && raw.iter().all(|r| r.label_is_integer);
    let mut documents = Vec::with_capacity(raw.len());
    for rec in raw {
        let (tokens, bounds) = tokenize_raw(rec);
        let ids = vocab.encode(&tokens);
        let label = if classification {
            Label::Class(rec.label as usize)
        } else {
            Label::Value(rec.label)
        };
        let doc = Document {
            tokens: ids,
            label,
            sentence_bounds: bounds.filter(|b| !b.is_empty()),
            phrase_spans: rec.phrases.clone(),
        };
        doc.validate(vocab.len())?;
        documents.push(doc);
    }
    if classification {
        let num_classes = raw
            .iter()
            .map(|r| r.label as usize + 1)
            .max()
            .unwrap_or(0)
            .max(2);
        LabeledCorpus::classification(documents, num_classes)
    } else {
        Ok(LabeledCorpus::regression(documents))
    }
}

/// Write documents as JSON-lines, detokenizing through the vocabulary.
/// `origins`, when given, must align with the documents and adds an `origin`
/// field per record.
pub fn write_dataset(
    path: &Path,
    documents: &[Document],
    vocab: &Vocabulary,
    origins: Option<&[String]>,
) -> Result<()> {
    if let Some(origins) = origins {
        if origins.len() != documents.len() {
            return Err(Error::Contract("origins must align with documents".into()));
        }
    }
    let mut file = std::fs::File::create(path)?;
    for (idx, doc) in documents.iter().enumerate() {
        let words = vocab.decode(&doc.tokens);
        let sentences = doc.sentence_bounds.as_ref().map(|bounds| {
            let mut out = Vec::new();
            let mut start = 0;
            for &end in bounds {
                out.push(words[start..end].join(" "));
                start = end;
            }
            out
        });
        let rec = JsonRecordOut {
            label: doc.label.value(),
            text: words.join(" "),
            sentences,
            phrases: doc.phrase_spans.as_ref(),
            origin: origins.map(|o| o[idx].as_str()),
        };
        writeln!(file, "{}", serde_json::to_string(&rec)?)?;
    }
    Ok(())
}
