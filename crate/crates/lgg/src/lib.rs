//! File formats, command line and HTTP service for [`lgg_core`].
//!
//! The core crate does the grammar work; this crate reads grammar and
//! lexicon directories, composition configs and compiled transducers from
//! disk, writes datasets as JSON Lines or NLU YAML, and exposes everything
//! through the `lgg` and `lgg-serve` binaries.

pub mod app;
pub mod cache;
pub mod cli;
pub mod config;
pub mod export;
pub mod fixtures;
pub mod load;
pub mod service;

pub use lgg_core as core;
