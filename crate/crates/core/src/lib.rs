//! Toolkit for paired-and-interleaved (PIN) multimodal document datasets.
//!
//! A PIN dataset is a set of JSONL files, one record per document or page,
//! each pairing a markdown body that embeds its content images inline with
//! one or more rendered "overall" images of the whole page. This crate covers
//! the record model and markdown parsing ([`model`]), JSONL I/O, validation,
//! partitioning and page-sequence assembly ([`io`]), quality signals
//! ([`signals`]), heuristic pagination ([`pagination`]), source converters
//! ([`convert`]), overall-image rendering through an external command
//! ([`render`]) and dataset statistics ([`stats`]).

pub mod convert;
pub mod io;
pub mod model;
pub mod pagination;
pub mod render;
pub mod signals;
pub mod stats;

pub use model::{DocId, Meta, ModalSequence, OiSource, OverallImage, PinEntry};
pub use signals::{QualitySignals, Tokenizer};
