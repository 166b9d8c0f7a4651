//! Budgeted text classification: cheap word selectors that filter documents
//! under a selection budget, a data-aggregation schema that trains one
//! classifier to stay accurate on the resulting fragments at any budget,
//! and a benchmark harness for the accuracy/inference-time tradeoff.
//!
//! The pipeline has three stages:
//!
//! 1. **Select.** A low-complexity selector emits a keep/drop bit per token.
//!    [`selector::bow::BowSelector`] reads the nonzero support of an
//!    L1-regularized logistic regression; [`selector::we::WeSelector`] gates
//!    each word through a sigmoid over its pretrained embedding.
//! 2. **Aggregate.** [`aggregation::aggregate`] unions the original corpus
//!    with every selector's blank-out corpus, and [`aggregation::train_dag`]
//!    fits a single classifier on that multiset so it tolerates fragments
//!    from any budget.
//! 3. **Measure.** [`bench`] times selector and classifier stages separately
//!    on a monotonic clock and emits accuracy/time tradeoff curves.
//!
//! The guide in `book/` walks through each stage; its code listings compile
//! and run as doctests of this crate.

pub mod aggregation;
pub mod bench;
pub mod classifier;
pub mod cli;
pub mod corpus;
pub mod error;
pub mod selector;

mod book;

pub use error::{Error, Result};
