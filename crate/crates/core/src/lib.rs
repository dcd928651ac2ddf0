//! Count question answering over retrieved text segments.
//!
//! The engine infers a consolidated count from per-segment answer spans,
//! places the count-modified noun phrases it saw into synonyms, subgroups
//! and incomparables, and ranks instance entities that explain the count.

pub mod context;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod explain;
pub mod inference;
pub mod model;
pub mod pipeline;
pub mod providers;
pub mod quantity;

pub use error::{Error, Result};
pub use pipeline::{answer_query, ConfigOverrides, PipelineOutput, ProviderSet, RunConfig};
