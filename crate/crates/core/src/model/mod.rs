//! In-memory representation of PIN entries and their markdown bodies.

pub mod blocks;
pub mod entry;
pub mod markdown;
pub mod markup;

pub use entry::{
    DocId, Meta, OiSource, OverallImage, OverallImageForm, PinEntry, RawJson, CONTENT_IMAGE_DIR,
    OVERALL_IMAGE_DIR,
};
pub use markdown::{
    extract_image_refs, html_img_tag, is_content_image_path, parse_modal_sequence,
    parse_modal_sequence_with_warnings, rewrite_image_paths, serialize_modal_sequence, ImageRef, ModalKind,
    ModalSequence, ModalUnit, ParseWarning, ParseWarningKind, Segmentation, TextBlock,
};
pub use markup::{compute_markup_stats, MarkupStats};
