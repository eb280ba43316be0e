//! Per-entry quality signals.

mod filter;
mod tokenizer;

use serde::{Deserialize, Serialize};

use crate::model::{compute_markup_stats, parse_modal_sequence, ModalSequence, PinEntry};

pub use filter::{signal_filter, SignalFilter};
pub use tokenizer::{Tokenizer, TokenizerError, VocabTokenizer, WhitespaceTokenizer};

/// The `quality_signals` object of an entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualitySignals {
    /// Number of adjacent modality changes (raw count, not normalized).
    pub image_text_interleaving_count: u64,
    pub text_block_count: u64,
    pub total_token_count: u64,
    /// Unicode scalar values in `md`.
    pub doc_length: u64,
    pub avg_tokens_per_text_block: f64,
    pub avg_text_block_length: f64,
    pub bold_char_count: u64,
    pub italic_char_count: u64,
    pub title_count: u64,
}

/// Number of positions where a unit's modality differs from the next one's.
pub fn itif_count(seq: &ModalSequence) -> u64 {
    seq.units
        .windows(2)
        .filter(|w| w[0].kind() != w[1].kind())
        .count() as u64
}

/// Modality changes per adjacent pair: `itif_count / (N - 1)`, or 0 for
/// fewer than two units.
pub fn itif_normalized(seq: &ModalSequence) -> f64 {
    let n = seq.len();
    if n < 2 {
        return 0.0;
    }
    itif_count(seq) as f64 / (n - 1) as f64
}

pub fn text_block_count(seq: &ModalSequence) -> u64 {
    seq.text_blocks().count() as u64
}

pub fn tokenize<'a>(tok: &dyn Tokenizer, text: &'a str) -> Vec<&'a str> {
    tok.tokenize(text)
}

/// Compute signals for a markdown body.
pub fn compute_signals_for_md(md: &str, tok: &dyn Tokenizer) -> QualitySignals {
    let seq = parse_modal_sequence(md);
    let blocks = text_block_count(&seq);
    let (block_tokens, block_chars) = seq.text_blocks().fold((0u64, 0u64), |(t, c), b| {
        (
            t + tok.count(&b.content) as u64,
            c + b.content.chars().count() as u64,
        )
    });
    let avg = |sum: u64| if blocks == 0 { 0.0 } else { sum as f64 / blocks as f64 };
    let markup = compute_markup_stats(md);
    QualitySignals {
        image_text_interleaving_count: itif_count(&seq),
        text_block_count: blocks,
        total_token_count: tok.count(md) as u64,
        doc_length: md.chars().count() as u64,
        avg_tokens_per_text_block: avg(block_tokens),
        avg_text_block_length: avg(block_chars),
        bold_char_count: markup.bold_char_count,
        italic_char_count: markup.italic_char_count,
        title_count: markup.title_count,
    }
}

pub fn compute_signals(entry: &PinEntry, tok: &dyn Tokenizer) -> QualitySignals {
    compute_signals_for_md(&entry.md, tok)
}
