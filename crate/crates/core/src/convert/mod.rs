//! Converters from source formats into PIN entries.
//!
//! Converters produce a [`Draft`]: an entry whose image paths already follow
//! the `content_image/<stem>-<ordinal>.png` naming scheme, plus the list of
//! original locations those files still have to be fetched from. Passing the
//! draft through [`localize_images`] downloads or copies the files and fixes
//! the extensions.

mod interleaved;
mod layout;
mod localize;

use std::time::{SystemTime, UNIX_EPOCH};

use thiserror::Error;

use crate::model::{
    html_img_tag, is_content_image_path, rewrite_image_paths, DocId, Meta, OiSource,
    OverallImage, PinEntry, CONTENT_IMAGE_DIR,
};
use crate::pagination::{paginate_entry, PageParams, PaginationError};

pub use interleaved::{from_interleaved_list, InterleavedItem, InterleavedListDoc};
pub use layout::{
    from_layout_annotations, reading_order, LayoutAnnotatedPage, LayoutCategory, LayoutElement,
    LayoutOptions,
};
pub use localize::{
    localize_images, sniff_extension, AutoFetcher, FailurePolicy, FetchError, Fetcher,
    HttpFetcher, LocalFetcher, LocalizeError, LocalizeOptions,
};

#[derive(Debug, Error, PartialEq)]
pub enum ConvertError {
    #[error("the source document is empty")]
    EmptyDocument,
    #[error("template has no {0} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("image-text pair has an empty {0}")]
    EmptyPair(&'static str),
    #[error("element {index} has an invalid bounding box {bbox:?}")]
    InvalidBbox { index: usize, bbox: [f64; 4] },
    #[error("invalid source document: {0}")]
    InvalidSource(String),
    #[error(transparent)]
    Pagination(#[from] PaginationError),
}

/// Fields every converter stamps onto the entries it creates.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvertOptions {
    pub id: u64,
    pub doc_id: DocId,
    pub source_dataset: String,
    pub language: String,
    pub license: String,
    /// `YYYY-MM-DD`; defaults to today (UTC).
    pub date_download: String,
}

impl ConvertOptions {
    pub fn new(id: u64, doc_id: DocId) -> Self {
        Self {
            id,
            doc_id,
            source_dataset: "source".to_owned(),
            language: "en".to_owned(),
            license: String::new(),
            date_download: today(),
        }
    }

    fn base_entry(&self, md: String) -> PinEntry {
        PinEntry {
            id: self.id,
            meta: Meta {
                language: self.language.clone(),
                oi_exist: false,
                oi_source: OiSource::Compiling,
                source_dataset: self.source_dataset.clone(),
                ori_meta: None,
                doc_id: self.doc_id.clone(),
                page_id: None,
                date_download: self.date_download.clone(),
                extra: Vec::new(),
            },
            license: self.license.clone(),
            quality_signals: None,
            md,
            content_image: Vec::new(),
            overall_image: OverallImage::default(),
            extra: Vec::new(),
        }
    }
}

fn today() -> String {
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
    chrono::DateTime::from_timestamp(secs as i64, 0)
        .unwrap_or_default()
        .format("%Y-%m-%d")
        .to_string()
}

/// An image still to be fetched into the entry's `content_image/` directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PendingImage {
    /// Path the entry already refers to, relative to the dataset root.
    pub local: String,
    /// Where the bytes come from: a URL or a local path.
    pub origin: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Draft {
    pub entry: PinEntry,
    pub pending: Vec<PendingImage>,
    /// Source items skipped during conversion.
    pub warnings: Vec<String>,
}

/// Hands out `content_image/<stem>-<k>.png` names in order.
struct ImageNamer {
    stem: String,
    next: usize,
    taken: Vec<String>,
    pending: Vec<PendingImage>,
}

impl ImageNamer {
    fn new(stem: String, taken: Vec<String>) -> Self {
        Self { stem, next: 0, taken, pending: Vec::new() }
    }

    fn assign(&mut self, origin: &str) -> String {
        loop {
            let local = format!("{CONTENT_IMAGE_DIR}/{}-{}.png", self.stem, self.next);
            self.next += 1;
            if !self.taken.contains(&local) {
                self.pending.push(PendingImage { local: local.clone(), origin: origin.to_owned() });
                return local;
            }
        }
    }
}

impl Draft {
    /// Schedule every image in `entry.md` that does not already point into
    /// `content_image/` for localization.
    pub fn from_entry(mut entry: PinEntry) -> Self {
        let mut namer = ImageNamer::new(entry.image_stem(), entry.content_image.clone());
        let md = rewrite_image_paths(&entry.md, |_, path| {
            (!is_content_image_path(path)).then(|| namer.assign(path))
        });
        if !namer.pending.is_empty() {
            entry.md = md;
            entry.content_image = crate::model::extract_image_refs(&entry.md)
                .into_iter()
                .filter(|p| is_content_image_path(p) || entry.content_image.contains(p))
                .collect();
        }
        Draft { entry, pending: namer.pending, warnings: Vec::new() }
    }
}

/// Normalize line endings and split a plain text document into page entries.
pub fn from_text_document(
    text: &str,
    opts: &ConvertOptions,
    params: &PageParams,
) -> Result<Vec<PinEntry>, ConvertError> {
    if text.trim().is_empty() {
        return Err(ConvertError::EmptyDocument);
    }
    let md = text.replace("\r\n", "\n");
    let entry = opts.base_entry(md);
    let mut pages = paginate_entry(&entry, params)?;
    for (i, page) in pages.iter_mut().enumerate() {
        page.id = opts.id + i as u64;
    }
    Ok(pages)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageTextPair {
    pub image_path: String,
    pub text: String,
}

pub const IMAGE_PLACEHOLDER: &str = "{image}";
pub const TEXT_PLACEHOLDER: &str = "{text}";

/// Fill `template` with an image tag and the caption text.
pub fn from_image_text_pair(
    pair: &ImageTextPair,
    template: &str,
    opts: &ConvertOptions,
) -> Result<Draft, ConvertError> {
    if pair.image_path.is_empty() {
        return Err(ConvertError::EmptyPair("image path"));
    }
    if pair.text.is_empty() {
        return Err(ConvertError::EmptyPair("text"));
    }
    for p in [IMAGE_PLACEHOLDER, TEXT_PLACEHOLDER] {
        if !template.contains(p) {
            return Err(ConvertError::MissingPlaceholder(p));
        }
    }
    let mut entry = opts.base_entry(String::new());
    let mut namer = ImageNamer::new(entry.image_stem(), Vec::new());
    let mut md = String::with_capacity(template.len() + pair.text.len() + 64);
    let mut rest = template;
    while !rest.is_empty() {
        if let Some(after) = rest.strip_prefix(IMAGE_PLACEHOLDER) {
            let local = namer.assign(&pair.image_path);
            md.push_str(&html_img_tag(&local));
            entry.content_image.push(local);
            rest = after;
        } else if let Some(after) = rest.strip_prefix(TEXT_PLACEHOLDER) {
            md.push_str(&pair.text);
            rest = after;
        } else {
            let c = rest.chars().next().expect("non-empty");
            md.push(c);
            rest = &rest[c.len_utf8()..];
        }
    }
    entry.md = md;
    Ok(Draft { entry, pending: namer.pending, warnings: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::io::{validate_entry, ValidationOptions};
    use crate::model::{parse_modal_sequence, ModalKind};
    use crate::pagination::join_pages;

    fn opts() -> ConvertOptions {
        ConvertOptions { date_download: "2024-03-01".into(), ..ConvertOptions::new(10, DocId::Int(7)) }
    }

    #[test]
    fn today_is_a_date() {
        assert!(chrono::NaiveDate::parse_from_str(&today(), "%Y-%m-%d").is_ok());
    }

    #[test]
    fn pair_with_template() {
        let pair = ImageTextPair { image_path: "http://x/p.jpg".into(), text: "cap".into() };
        let d = from_image_text_pair(&pair, "{image}\n\n{text}", &opts()).unwrap();
        assert_eq!(d.entry.md, "<img src='content_image/7-0.png'>\n\ncap");
        assert_eq!(d.entry.content_image, vec!["content_image/7-0.png"]);
        assert_eq!(d.pending, vec![PendingImage { local: "content_image/7-0.png".into(), origin: "http://x/p.jpg".into() }]);
        assert_eq!(parse_modal_sequence(&d.entry.md).kinds(), vec![ModalKind::Image, ModalKind::Text]);
        assert!(!d.entry.meta.oi_exist);
        assert!(validate_entry(&d.entry, &ValidationOptions::default()).accepted());
    }

    #[test]
    fn pair_placeholders_are_required() {
        let pair = ImageTextPair { image_path: "p".into(), text: "cap".into() };
        assert_eq!(from_image_text_pair(&pair, "{text}", &opts()), Err(ConvertError::MissingPlaceholder("{image}")));
        assert_eq!(from_image_text_pair(&pair, "{image}", &opts()), Err(ConvertError::MissingPlaceholder("{text}")));
        let empty = ImageTextPair { image_path: "p".into(), text: String::new() };
        assert!(matches!(from_image_text_pair(&empty, "{image}{text}", &opts()), Err(ConvertError::EmptyPair(_))));
    }

    #[test]
    fn caption_text_is_not_rescanned_for_placeholders() {
        let pair = ImageTextPair { image_path: "p".into(), text: "{image}".into() };
        let d = from_image_text_pair(&pair, "{text} {image}", &opts()).unwrap();
        assert_eq!(d.entry.md, "{image} <img src='content_image/7-0.png'>");
        assert_eq!(d.pending.len(), 1);
    }

    #[test]
    fn text_document_pages() {
        let short = from_text_document("hello\r\nworld", &opts(), &PageParams::default()).unwrap();
        assert_eq!(short.len(), 1);
        assert_eq!(short[0].md, "hello\nworld");
        assert_eq!(short[0].meta.page_id, Some(0));

        let text = (0..200).map(|i| format!("line {i}")).collect::<Vec<_>>().join("\n\n");
        let pages = from_text_document(&text, &opts(), &PageParams::default()).unwrap();
        assert_eq!(pages.len(), 5);
        assert_eq!(pages.iter().map(|p| p.id).collect::<Vec<_>>(), vec![10, 11, 12, 13, 14]);
        assert!(pages.iter().all(|p| p.meta.doc_id == DocId::Int(7)));
        let segs: Vec<_> = pages
            .iter()
            .map(|p| crate::pagination::PageSegment { md: p.md.clone(), estimated_lines: 0, page_index: 0, oversized: false })
            .collect();
        assert_eq!(join_pages(&segs), text);
        for p in &pages {
            assert!(validate_entry(p, &ValidationOptions::default()).accepted());
        }
        assert_eq!(from_text_document(" \n", &opts(), &PageParams::default()), Err(ConvertError::EmptyDocument));
    }

    #[test]
    fn draft_from_entry_schedules_external_images() {
        let mut e = opts().base_entry(
            "<img src='content_image/7-0.png'>\n\n![x](https://a/b.jpg)\n\n<img src=\"./pics/c.gif\">".into(),
        );
        e.content_image = vec!["content_image/7-0.png".into()];
        let d = Draft::from_entry(e);
        assert_eq!(
            d.entry.md,
            "<img src='content_image/7-0.png'>\n\n![x](content_image/7-1.png)\n\n<img src=\"content_image/7-2.png\">"
        );
        assert_eq!(d.entry.content_image, vec!["content_image/7-0.png", "content_image/7-1.png", "content_image/7-2.png"]);
        let origins: Vec<&str> = d.pending.iter().map(|p| p.origin.as_str()).collect();
        assert_eq!(origins, vec!["https://a/b.jpg", "./pics/c.gif"]);

        let plain = opts().base_entry("no images".into());
        let d = Draft::from_entry(plain.clone());
        assert_eq!(d.entry, plain);
        assert!(d.pending.is_empty());
    }
}
