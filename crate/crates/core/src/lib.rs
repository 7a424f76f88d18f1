//! Data curation and evaluation toolkit for GUI grounding models.
//!
//! [`harvest`] turns rendered web pages and mobile caption data into
//! grounding samples and assembles a mixed corpus. [`runner`] drives
//! benchmark evaluations against a model endpoint and scores them with
//! [`metrics`]. The coordinate and action text formats live in [`geometry`]
//! and [`action`].
//!
//! Runnable walkthroughs live under `examples/`.

pub mod action;
pub mod cli;
pub mod dataprep;
pub mod geometry;
pub mod harvest;
pub mod metrics;
pub mod prompt;
pub mod rng;
pub mod runner;
pub mod sample;
