//! Heuristic pagination of long markdown documents.
//!
//! The document is cut into atomic blocks (blank-line separated paragraphs,
//! tables, fenced code blocks and image units never split internally). Each
//! block is charged an estimated number of rendered lines and blocks are
//! packed onto pages greedily in document order. Blank separator lines cost
//! nothing.
//!
//! Pages break only at blank-line separators. The final line feed of the
//! separator is dropped at the break, so joining the page bodies with `"\n"`
//! reproduces the input exactly.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::blocks::scan_blocks;
use crate::model::{
    is_content_image_path, parse_modal_sequence, ModalUnit, OiSource, OverallImage, PinEntry,
};

/// Separator that rejoins page bodies into the original document.
pub const PAGE_JOIN: &str = "\n";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PageParams {
    /// Maximum estimated lines per page.
    pub n_line: u32,
    /// Characters per rendered line.
    pub n_text: u32,
    /// Lines an image is estimated to occupy.
    pub n_image: u32,
}

impl Default for PageParams {
    fn default() -> Self {
        Self { n_line: 40, n_text: 80, n_image: 15 }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PaginationError {
    #[error("page parameters must be positive (n_line={n_line}, n_text={n_text}, n_image={n_image})")]
    NonPositive { n_line: u32, n_text: u32, n_image: u32 },
    #[error("an image ({n_image} lines) does not fit on a page of {n_line} lines")]
    ImageTooTall { n_line: u32, n_image: u32 },
    #[error("entry {id} is already paginated (page_id {page_id})")]
    AlreadyPaginated { id: u64, page_id: i64 },
}

impl PageParams {
    pub fn validate(&self) -> Result<(), PaginationError> {
        let PageParams { n_line, n_text, n_image } = *self;
        if n_line == 0 || n_text == 0 || n_image == 0 {
            return Err(PaginationError::NonPositive { n_line, n_text, n_image });
        }
        if n_image > n_line {
            return Err(PaginationError::ImageTooTall { n_line, n_image });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PageSegment {
    pub md: String,
    pub estimated_lines: u64,
    pub page_index: usize,
    /// A single block taller than `n_line`.
    pub oversized: bool,
}

fn text_lines(text: &str, n_text: u32) -> u64 {
    text.lines()
        .map(|line| (line.chars().count() as u64).div_ceil(n_text as u64).max(1))
        .sum()
}

/// Estimated rendered height of one modal unit.
pub fn estimate_lines(unit: &ModalUnit, params: &PageParams) -> u64 {
    match unit {
        ModalUnit::Image(_) => params.n_image as u64,
        ModalUnit::Text(t) => text_lines(&t.content, params.n_text),
    }
}

fn estimate_block(text: &str, params: &PageParams) -> u64 {
    parse_modal_sequence(text)
        .units
        .iter()
        .map(|u| estimate_lines(u, params))
        .sum()
}

/// Split `input` into page-sized segments.
pub fn f_page(input: &str, params: &PageParams) -> Result<Vec<PageSegment>, PaginationError> {
    params.validate()?;
    let budget = params.n_line as u64;
    let blocks = scan_blocks(input);

    // (start byte of first block on the page, estimated lines, oversized)
    let mut pages: Vec<(usize, u64, bool)> = Vec::new();
    let mut used = 0u64;
    for (n, block) in blocks.iter().enumerate() {
        let cost = estimate_block(&input[block.span.clone()], params);
        if n == 0 {
            pages.push((0, cost, cost > budget));
            used = cost;
            continue;
        }
        let current_full = pages.last().is_some_and(|p| p.2);
        if !current_full && used + cost <= budget {
            used += cost;
            pages.last_mut().unwrap().1 = used;
        } else {
            pages.push((block.span.start, cost, cost > budget));
            used = cost;
        }
    }
    if pages.is_empty() {
        pages.push((0, 0, false));
    }

    let mut segments = Vec::with_capacity(pages.len());
    for (i, &(start, lines, oversized)) in pages.iter().enumerate() {
        // the next page starts right after a line feed, which is dropped here
        let end = pages.get(i + 1).map_or(input.len(), |next| next.0 - PAGE_JOIN.len());
        segments.push(PageSegment {
            md: input[start..end].to_owned(),
            estimated_lines: lines,
            page_index: i,
            oversized,
        });
    }
    Ok(segments)
}

/// Rejoin page bodies produced by [`f_page`].
pub fn join_pages(pages: &[PageSegment]) -> String {
    pages
        .iter()
        .map(|p| p.md.as_str())
        .collect::<Vec<_>>()
        .join(PAGE_JOIN)
}

/// Split an unpaginated entry into one entry per page.
///
/// Page entries share the source `doc_id`, take `page_id` from the page index
/// and keep the source `id`; callers renumber ids when writing a dataset.
/// Overall images are cleared until pages are rendered.
pub fn paginate_entry(entry: &PinEntry, params: &PageParams) -> Result<Vec<PinEntry>, PaginationError> {
    if let Some(page_id) = entry.meta.page_id {
        return Err(PaginationError::AlreadyPaginated { id: entry.id, page_id });
    }
    let pages = f_page(&entry.md, params)?;
    let mut remaining = entry.content_image.iter();
    Ok(pages
        .into_iter()
        .map(|page| {
            let on_page = parse_modal_sequence(&page.md)
                .images()
                .filter(|img| is_content_image_path(&img.path))
                .count();
            let mut out = entry.clone();
            out.content_image = remaining.by_ref().take(on_page).cloned().collect();
            out.md = page.md;
            out.meta.page_id = Some(page.page_index as i64);
            out.meta.oi_exist = false;
            out.meta.oi_source = OiSource::Compiling;
            out.overall_image = OverallImage::default();
            out.quality_signals = None;
            out
        })
        .collect())
}
