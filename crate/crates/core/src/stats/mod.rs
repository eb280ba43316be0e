//! Subset and dataset statistics: per-subset aggregates of the quality
//! signals, dataset totals, the image/token joint distribution and report
//! emitters.

mod fsum;
mod joint;
mod report;

use std::borrow::Borrow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{parse_modal_sequence, PinEntry};
use crate::signals::itif_normalized;

pub use fsum::ExactSum;
pub use joint::{joint_distribution, BinSpec, JointDistribution, Reservoir, DEFAULT_SAMPLE, DEFAULT_SEED};
pub use report::{emit_report, ReportFormat, StatsReport, CSV_HEADER};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StatsError {
    #[error("entry {0} has no quality signals")]
    MissingSignals(u64),
    #[error("no subsets to aggregate")]
    NoSubsets,
    #[error("invalid bin specification: {0}")]
    InvalidBins(String),
}

/// Which interleaving value is averaged into `avg_itif`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ItifVariant {
    /// Raw count of modality changes.
    #[default]
    Count,
    /// Count divided by `units - 1`.
    Normalized,
    /// A total over subsets that used different variants.
    Mixed,
}

impl ItifVariant {
    pub fn as_str(self) -> &'static str {
        match self {
            ItifVariant::Count => "count",
            ItifVariant::Normalized => "normalized",
            ItifVariant::Mixed => "mixed",
        }
    }
}

/// How the total row averages subset averages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TotalWeighting {
    /// Plain mean of the subset averages, each subset counting once.
    #[default]
    Unweighted,
    /// Subset averages weighted by document count.
    DocWeighted,
}

/// One row of the statistics table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetStats {
    pub subset: String,
    pub total_docs: u64,
    pub total_images: u64,
    pub avg_images: f64,
    pub avg_itif: f64,
    pub total_tokens: u64,
    pub total_length: u64,
    pub avg_tokens_per_text_block: f64,
    pub avg_bold_chars: f64,
    pub avg_italic_chars: f64,
    pub avg_heading_count: f64,
    pub itif_variant: ItifVariant,
}

impl SubsetStats {
    pub fn empty(subset: impl Into<String>, itif_variant: ItifVariant) -> Self {
        Self {
            subset: subset.into(),
            total_docs: 0,
            total_images: 0,
            avg_images: 0.0,
            avg_itif: 0.0,
            total_tokens: 0,
            total_length: 0,
            avg_tokens_per_text_block: 0.0,
            avg_bold_chars: 0.0,
            avg_italic_chars: 0.0,
            avg_heading_count: 0.0,
            itif_variant,
        }
    }

    fn averages(&self) -> [f64; 6] {
        [
            self.avg_images,
            self.avg_itif,
            self.avg_tokens_per_text_block,
            self.avg_bold_chars,
            self.avg_italic_chars,
            self.avg_heading_count,
        ]
    }

    fn set_averages(&mut self, v: [f64; 6]) {
        [
            self.avg_images,
            self.avg_itif,
            self.avg_tokens_per_text_block,
            self.avg_bold_chars,
            self.avg_italic_chars,
            self.avg_heading_count,
        ] = v;
    }
}

/// Streaming accumulator for one subset. Sums are exact, so accumulators
/// filled in any order or split across threads and merged give identical
/// results.
#[derive(Debug, Clone, Default)]
pub struct SubsetAccumulator {
    variant: ItifVariant,
    docs: u64,
    images: u64,
    tokens: u64,
    length: u64,
    itif: ExactSum,
    tokens_per_block: ExactSum,
    bold: u64,
    italic: u64,
    headings: u64,
}

impl SubsetAccumulator {
    pub fn new(variant: ItifVariant) -> Self {
        Self { variant, ..Self::default() }
    }

    pub fn add(&mut self, entry: &PinEntry) -> Result<(), StatsError> {
        let s = entry.quality_signals.as_ref().ok_or(StatsError::MissingSignals(entry.id))?;
        self.docs += 1;
        self.images += entry.content_image.len() as u64;
        self.tokens += s.total_token_count;
        self.length += s.doc_length;
        self.itif.add(match self.variant {
            ItifVariant::Normalized => itif_normalized(&parse_modal_sequence(&entry.md)),
            _ => s.image_text_interleaving_count as f64,
        });
        self.tokens_per_block.add(s.avg_tokens_per_text_block);
        self.bold += s.bold_char_count;
        self.italic += s.italic_char_count;
        self.headings += s.title_count;
        Ok(())
    }

    pub fn merge(&mut self, other: &SubsetAccumulator) {
        self.docs += other.docs;
        self.images += other.images;
        self.tokens += other.tokens;
        self.length += other.length;
        self.itif.merge(&other.itif);
        self.tokens_per_block.merge(&other.tokens_per_block);
        self.bold += other.bold;
        self.italic += other.italic;
        self.headings += other.headings;
    }

    pub fn finish(&self, subset: impl Into<String>) -> SubsetStats {
        let mut out = SubsetStats::empty(subset, self.variant);
        if self.docs == 0 {
            return out;
        }
        let n = self.docs as f64;
        out.total_docs = self.docs;
        out.total_images = self.images;
        out.total_tokens = self.tokens;
        out.total_length = self.length;
        out.avg_images = self.images as f64 / n;
        out.avg_itif = self.itif.value() / n;
        out.avg_tokens_per_text_block = self.tokens_per_block.value() / n;
        out.avg_bold_chars = self.bold as f64 / n;
        out.avg_italic_chars = self.italic as f64 / n;
        out.avg_heading_count = self.headings as f64 / n;
        out
    }
}

/// Aggregate one subset in a single pass. Averages are per-document means.
pub fn aggregate_subset<I>(subset: &str, entries: I, variant: ItifVariant) -> Result<SubsetStats, StatsError>
where
    I: IntoIterator,
    I::Item: Borrow<PinEntry>,
{
    let mut acc = SubsetAccumulator::new(variant);
    for e in entries {
        acc.add(e.borrow())?;
    }
    Ok(acc.finish(subset))
}

/// Mean of `values`, computed as `min + exact_sum(v - min) / n` so that equal
/// inputs give back exactly that value and the result ignores input order.
fn mean(values: &[f64]) -> f64 {
    let base = values.iter().copied().fold(f64::INFINITY, f64::min);
    let spread: ExactSum = values.iter().map(|v| v - base).collect();
    base + spread.value() / values.len() as f64
}

/// Combine subset rows into a total row: totals are summed, averages are
/// averaged according to `weighting`.
pub fn aggregate_total(
    subsets: &[SubsetStats],
    weighting: TotalWeighting,
) -> Result<SubsetStats, StatsError> {
    let first = subsets.first().ok_or(StatsError::NoSubsets)?;
    let variant = if subsets.iter().all(|s| s.itif_variant == first.itif_variant) {
        first.itif_variant
    } else {
        ItifVariant::Mixed
    };
    let mut out = SubsetStats::empty("total", variant);
    for s in subsets {
        out.total_docs += s.total_docs;
        out.total_images += s.total_images;
        out.total_tokens += s.total_tokens;
        out.total_length += s.total_length;
    }
    let columns: Vec<[f64; 6]> = subsets.iter().map(SubsetStats::averages).collect();
    let mut avgs = [0.0; 6];
    for (k, avg) in avgs.iter_mut().enumerate() {
        *avg = match weighting {
            TotalWeighting::Unweighted => mean(&columns.iter().map(|c| c[k]).collect::<Vec<_>>()),
            TotalWeighting::DocWeighted if out.total_docs == 0 => 0.0,
            TotalWeighting::DocWeighted => {
                let weighted: ExactSum =
                    subsets.iter().zip(&columns).map(|(s, c)| c[k] * s.total_docs as f64).collect();
                weighted.value() / out.total_docs as f64
            }
        };
    }
    out.set_averages(avgs);
    Ok(out)
}
