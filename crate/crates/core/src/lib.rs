//! Requirement-driven model selection for tabular classification.
//!
//! The crate turns a declarative specification — legal requirements, the
//! technical measures that can operationalize them, and compatibility rules —
//! into an executable evaluation: it enumerates every admissible combination
//! of measures, trains one model per combination on synthetic transaction
//! data, scores each candidate on predictive and requirement-level
//! dimensions, and maps the resulting trade-offs so a selection policy can
//! pick (and justify) a model.

pub mod domain;
pub mod fixtures;
pub mod metrics;
pub mod models;
pub mod pipeline;
pub mod seeding;
pub mod setform;
pub mod synthgen;
pub mod trademap;
pub mod transforms;
