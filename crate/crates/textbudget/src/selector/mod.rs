//! Word selectors: cheap models that emit a keep/drop bit per token.
//!
//! Two families are provided. [`bow::BowSelector`] keeps the words with
//! nonzero weight in an L1-regularized logistic regression;
//! [`we::WeSelector`] gates each word through a sigmoid over its pretrained
//! embedding and is trained jointly with the classifier by score-function
//! gradients.

pub mod bow;
pub mod we;

use std::path::Path;

use crate::corpus::{Document, EmbeddingTable, SelectionMask, Vocabulary};
use crate::error::{Error, Result};

pub use bow::BowSelector;
pub use we::WeSelector;

/// A selector of either family, as stored in a suite.
#[derive(Debug, Clone)]
pub enum AnySelector {
    Bow(BowSelector),
    We(WeSelector),
}

impl AnySelector {
    /// Deterministic selection mask for one document. WE selectors need the
    /// pretrained embedding table and use their inference threshold.
    pub fn mask(
        &self,
        doc: &Document,
        embeddings: Option<&EmbeddingTable>,
    ) -> Result<SelectionMask> {
        match self {
            AnySelector::Bow(s) => Ok(s.select(doc)),
            AnySelector::We(s) => {
                let table = embeddings.ok_or_else(|| {
                    Error::Config("a word-embedding selector requires an embedding table".into())
                })?;
                let probs = s.gate_probs(doc, table)?;
                Ok(we::threshold_mask(&probs, s.threshold))
            }
        }
    }

    /// Load a selector file, detecting the family from its fields.
    pub fn load(path: &Path, vocab: &Vocabulary) -> Result<AnySelector> {
        let content = std::fs::read_to_string(path)?;
        let value: serde_json::Value = serde_json::from_str(&content)?;
        if value.get("theta_S").is_some() {
            Ok(AnySelector::We(we::WeSelector::from_json(&content)?))
        } else if value.get("weights").is_some() {
            Ok(AnySelector::Bow(bow::BowSelector::from_json(
                &content, vocab,
            )?))
        } else {
            Err(Error::Format(
                "selector file has neither theta_S nor weights".into(),
            ))
        }
    }
}
