// The guide lives in book/ at the repository root; including the chapters
// here makes rustdoc compile and run their code listings as doctests, so the
// book cannot drift from the library.

#[doc = include_str!("../../../book/src/introduction.md")]
pub mod introduction {}

#[doc = include_str!("../../../book/src/data-model.md")]
pub mod data_model {}

#[doc = include_str!("../../../book/src/bow-selector.md")]
pub mod bow_selector {}

#[doc = include_str!("../../../book/src/we-selector.md")]
pub mod we_selector {}

#[doc = include_str!("../../../book/src/aggregation.md")]
pub mod aggregation_guide {}

#[doc = include_str!("../../../book/src/benchmarking.md")]
pub mod benchmarking {}

#[doc = include_str!("../../../book/src/cli.md")]
pub mod cli_reference {}
