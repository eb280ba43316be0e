//! Modal-sequence parsing: splitting a markdown body into text blocks and
//! image references.
//!
//! Two image tag forms are recognised: HTML `<img ... src=...>` (single,
//! double or unquoted attribute values) and markdown `![alt](path "title")`.
//! Whitespace touching an image tag belongs to the image unit, so two tags
//! separated only by blank lines are adjacent images rather than image, text,
//! image. Every byte of the input lands in exactly one unit, which makes
//! serialization an exact inverse of parsing.

use std::ops::Range;

use super::blocks;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModalKind {
    Text,
    Image,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TextBlock {
    pub content: String,
}

/// An inline image reference.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageRef {
    /// The `src` attribute or link destination, undecoded.
    pub path: String,
    /// Source text of the unit: the tag plus any surrounding whitespace.
    pub markup: String,
    /// Byte range of `path` inside `markup`.
    path_span: Range<usize>,
}

impl ImageRef {
    /// A new reference rendered as `<img src='path'>`.
    pub fn new(path: impl Into<String>) -> Self {
        let path = path.into();
        let markup = html_img_tag(&path);
        let start = "<img src='".len();
        let path_span = start..start + path.len();
        Self { path, markup, path_span }
    }

    /// The same tag and surrounding whitespace pointing at a different path.
    pub fn with_path(&self, path: &str) -> Self {
        let mut markup = String::with_capacity(self.markup.len() + path.len());
        markup.push_str(&self.markup[..self.path_span.start]);
        markup.push_str(path);
        markup.push_str(&self.markup[self.path_span.end..]);
        Self {
            path: path.to_owned(),
            markup,
            path_span: self.path_span.start..self.path_span.start + path.len(),
        }
    }
}

/// `<img src='path'>`
pub fn html_img_tag(path: &str) -> String {
    format!("<img src='{path}'>")
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModalUnit {
    Text(TextBlock),
    Image(ImageRef),
}

impl ModalUnit {
    pub fn kind(&self) -> ModalKind {
        match self {
            ModalUnit::Text(_) => ModalKind::Text,
            ModalUnit::Image(_) => ModalKind::Image,
        }
    }

    /// The unit's source text.
    pub fn source(&self) -> &str {
        match self {
            ModalUnit::Text(t) => &t.content,
            ModalUnit::Image(i) => &i.markup,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct ModalSequence {
    pub units: Vec<ModalUnit>,
}

impl ModalSequence {
    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn kinds(&self) -> Vec<ModalKind> {
        self.units.iter().map(ModalUnit::kind).collect()
    }

    pub fn text_blocks(&self) -> impl Iterator<Item = &TextBlock> {
        self.units.iter().filter_map(|u| match u {
            ModalUnit::Text(t) => Some(t),
            ModalUnit::Image(_) => None,
        })
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageRef> {
        self.units.iter().filter_map(|u| match u {
            ModalUnit::Image(i) => Some(i),
            ModalUnit::Text(_) => None,
        })
    }
}

/// How text between images is divided into blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Segmentation {
    /// Text blocks are delimited only by images.
    #[default]
    ImageDelimited,
    /// Additionally split text at blank lines (outside fenced code), giving
    /// paragraph-level blocks.
    Paragraph,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseWarningKind {
    UnclosedQuote,
    UnclosedTag,
    MissingSrc,
}

/// A tag-like construct that was kept as text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParseWarning {
    /// Byte offset of the `<` that opened the tag.
    pub offset: usize,
    pub kind: ParseWarningKind,
}

/// A located image tag: byte range of the whole tag and of its path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct TagMatch {
    pub span: Range<usize>,
    pub path: Range<usize>,
}

enum TagScan {
    Found(TagMatch),
    NotATag,
    Malformed(ParseWarningKind),
}

fn scan_html_img(bytes: &[u8], start: usize) -> TagScan {
    // caller guarantees bytes[start] == b'<'
    let name_end = start + 4;
    if name_end > bytes.len() || !bytes[start + 1..name_end].eq_ignore_ascii_case(b"img") {
        return TagScan::NotATag;
    }
    match bytes.get(name_end) {
        Some(b) if b.is_ascii_whitespace() || *b == b'/' || *b == b'>' => {}
        _ => return TagScan::NotATag,
    }
    let mut i = name_end;
    let mut src: Option<Range<usize>> = None;
    loop {
        while i < bytes.len() && (bytes[i].is_ascii_whitespace() || bytes[i] == b'/') {
            i += 1;
        }
        if i >= bytes.len() {
            return TagScan::Malformed(ParseWarningKind::UnclosedTag);
        }
        if bytes[i] == b'>' {
            i += 1;
            break;
        }
        let name_start = i;
        while i < bytes.len()
            && !bytes[i].is_ascii_whitespace()
            && !matches!(bytes[i], b'=' | b'>' | b'/')
        {
            i += 1;
        }
        let name = &bytes[name_start..i];
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if bytes.get(i) != Some(&b'=') {
            continue;
        }
        i += 1;
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let value = match bytes.get(i) {
            Some(&q) if q == b'\'' || q == b'"' => {
                let value_start = i + 1;
                match bytes[value_start..].iter().position(|&b| b == q) {
                    Some(len) => {
                        i = value_start + len + 1;
                        value_start..value_start + len
                    }
                    None => return TagScan::Malformed(ParseWarningKind::UnclosedQuote),
                }
            }
            Some(_) => {
                let value_start = i;
                while i < bytes.len() && !bytes[i].is_ascii_whitespace() && bytes[i] != b'>' {
                    i += 1;
                }
                value_start..i
            }
            None => return TagScan::Malformed(ParseWarningKind::UnclosedTag),
        };
        if name.eq_ignore_ascii_case(b"src") && src.is_none() {
            src = Some(value);
        }
    }
    match src {
        Some(path) => TagScan::Found(TagMatch { span: start..i, path }),
        None => TagScan::Malformed(ParseWarningKind::MissingSrc),
    }
}

fn scan_markdown_image(bytes: &[u8], start: usize) -> Option<TagMatch> {
    // caller guarantees bytes[start..] starts with "!["
    let mut i = start + 2;
    let mut depth = 0usize;
    loop {
        match bytes.get(i)? {
            b'\\' => i += 2,
            b'[' => {
                depth += 1;
                i += 1;
            }
            b']' if depth == 0 => break,
            b']' => {
                depth -= 1;
                i += 1;
            }
            _ => i += 1,
        }
    }
    i += 1;
    if bytes.get(i) != Some(&b'(') {
        return None;
    }
    i += 1;
    while matches!(bytes.get(i), Some(b' ' | b'\t')) {
        i += 1;
    }
    let path = if bytes.get(i) == Some(&b'<') {
        let path_start = i + 1;
        let len = bytes[path_start..]
            .iter()
            .position(|&b| b == b'>' || b == b'\n')?;
        if bytes[path_start + len] != b'>' {
            return None;
        }
        i = path_start + len + 1;
        path_start..path_start + len
    } else {
        let path_start = i;
        let mut parens = 0usize;
        while let Some(&b) = bytes.get(i) {
            match b {
                b'\\' => i += 1,
                b'(' => parens += 1,
                b')' if parens == 0 => break,
                b')' => parens -= 1,
                _ if b.is_ascii_whitespace() => break,
                _ => {}
            }
            i += 1;
        }
        path_start..i.min(bytes.len())
    };
    if path.is_empty() {
        return None;
    }
    while matches!(bytes.get(i), Some(b' ' | b'\t' | b'\n')) {
        i += 1;
    }
    if let Some(&q) = bytes.get(i) {
        let close = match q {
            b'"' => Some(b'"'),
            b'\'' => Some(b'\''),
            b'(' => Some(b')'),
            _ => None,
        };
        if let Some(close) = close {
            let len = bytes[i + 1..].iter().position(|&b| b == close)?;
            i += len + 2;
            while matches!(bytes.get(i), Some(b' ' | b'\t' | b'\n')) {
                i += 1;
            }
        }
    }
    if bytes.get(i) != Some(&b')') {
        return None;
    }
    Some(TagMatch { span: start..i + 1, path })
}

/// Locate every image tag in document order.
pub(crate) fn find_image_tags(md: &str, warnings: &mut Vec<ParseWarning>) -> Vec<TagMatch> {
    let bytes = md.as_bytes();
    let mut tags = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let Some(off) = bytes[i..].iter().position(|&b| b == b'<' || b == b'!') else {
            break;
        };
        i += off;
        if bytes[i] == b'<' {
            match scan_html_img(bytes, i) {
                TagScan::Found(m) => {
                    i = m.span.end;
                    tags.push(m);
                    continue;
                }
                TagScan::Malformed(kind) => warnings.push(ParseWarning { offset: i, kind }),
                TagScan::NotATag => {}
            }
        } else if bytes.get(i + 1) == Some(&b'[') {
            if let Some(m) = scan_markdown_image(bytes, i) {
                i = m.span.end;
                tags.push(m);
                continue;
            }
        }
        i += 1;
    }
    tags
}

fn leading_ws_len(s: &str) -> usize {
    s.len() - s.trim_start().len()
}

fn trailing_ws_len(s: &str) -> usize {
    s.len() - s.trim_end().len()
}

/// Parse `md` into a modal sequence, reporting tag-like constructs that were
/// kept as text.
pub fn parse_modal_sequence_with_warnings(
    md: &str,
    segmentation: Segmentation,
) -> (ModalSequence, Vec<ParseWarning>) {
    let mut warnings = Vec::new();
    let tags = find_image_tags(md, &mut warnings);
    let mut units = Vec::with_capacity(tags.len() * 2 + 1);
    let mut cursor = 0;
    for (n, tag) in tags.iter().enumerate() {
        let gap = &md[cursor..tag.span.start];
        let unit_start = if gap.trim().is_empty() {
            cursor
        } else {
            let text_end = tag.span.start - trailing_ws_len(gap);
            push_text(&mut units, &md[cursor..text_end], segmentation);
            text_end
        };
        let next_start = tags.get(n + 1).map_or(md.len(), |t| t.span.start);
        let unit_end = tag.span.end + leading_ws_len(&md[tag.span.end..next_start]);
        units.push(ModalUnit::Image(ImageRef {
            path: md[tag.path.clone()].to_owned(),
            markup: md[unit_start..unit_end].to_owned(),
            path_span: tag.path.start - unit_start..tag.path.end - unit_start,
        }));
        cursor = unit_end;
    }
    if cursor < md.len() {
        push_text(&mut units, &md[cursor..], segmentation);
    }
    (ModalSequence { units }, warnings)
}

fn push_text(units: &mut Vec<ModalUnit>, text: &str, segmentation: Segmentation) {
    match segmentation {
        Segmentation::ImageDelimited => units.push(ModalUnit::Text(TextBlock {
            content: text.to_owned(),
        })),
        Segmentation::Paragraph => {
            let blocks = blocks::scan_blocks(text);
            if blocks.is_empty() {
                units.push(ModalUnit::Text(TextBlock {
                    content: text.to_owned(),
                }));
                return;
            }
            // Separator whitespace is attached to the block before it; any
            // leading whitespace goes with the first block.
            for (n, block) in blocks.iter().enumerate() {
                let start = if n == 0 { 0 } else { block.span.start };
                let end = blocks.get(n + 1).map_or(text.len(), |b| b.span.start);
                units.push(ModalUnit::Text(TextBlock {
                    content: text[start..end].to_owned(),
                }));
            }
        }
    }
}

/// Parse `md` into image-delimited text blocks and image references.
pub fn parse_modal_sequence(md: &str) -> ModalSequence {
    parse_modal_sequence_with_warnings(md, Segmentation::ImageDelimited).0
}

/// Concatenate the units' source text.
pub fn serialize_modal_sequence(seq: &ModalSequence) -> String {
    let mut out = String::with_capacity(seq.units.iter().map(|u| u.source().len()).sum());
    for unit in &seq.units {
        out.push_str(unit.source());
    }
    out
}

/// Image paths in document order.
pub fn extract_image_refs(md: &str) -> Vec<String> {
    let mut warnings = Vec::new();
    find_image_tags(md, &mut warnings)
        .into_iter()
        .map(|t| md[t.path].to_owned())
        .collect()
}

/// True when `path` points into a `content_image/` directory.
pub fn is_content_image_path(path: &str) -> bool {
    let path = path.strip_prefix("./").unwrap_or(path);
    path.starts_with("content_image/") || path.contains("/content_image/")
}

/// Rewrite image paths in `md` with `f`, leaving everything else untouched.
/// `f` returns `None` to keep a path as is.
pub fn rewrite_image_paths(md: &str, mut f: impl FnMut(usize, &str) -> Option<String>) -> String {
    let seq = parse_modal_sequence(md);
    let mut out = String::with_capacity(md.len());
    let mut ordinal = 0;
    for unit in &seq.units {
        match unit {
            ModalUnit::Image(img) => {
                match f(ordinal, &img.path) {
                    Some(new) => out.push_str(&img.with_path(&new).markup),
                    None => out.push_str(&img.markup),
                }
                ordinal += 1;
            }
            ModalUnit::Text(t) => out.push_str(&t.content),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::FIG5_MD;

    fn kinds(md: &str) -> Vec<ModalKind> {
        parse_modal_sequence(md).kinds()
    }

    use ModalKind::{Image as I, Text as T};

    #[test]
    fn plain_text_is_one_block() {
        assert_eq!(kinds("hello"), vec![T]);
        assert_eq!(parse_modal_sequence("hello").units[0].source(), "hello");
    }

    #[test]
    fn empty_document_has_no_units() {
        assert!(parse_modal_sequence("").is_empty());
        assert_eq!(serialize_modal_sequence(&ModalSequence::default()), "");
    }

    #[test]
    fn figure_five_body() {
        let md = "<img src='content_image/1997-0.png'>\n\ntext\n\n<img src='content_image/1997-1.png'>\n\ntext";
        assert_eq!(kinds(md), vec![I, T, I, T]);
        let seq = parse_modal_sequence(FIG5_MD);
        assert_eq!(seq.kinds(), vec![I, T, I, T]);
        let blocks: Vec<_> = seq.text_blocks().map(|t| t.content.as_str()).collect();
        assert_eq!(
            blocks,
            vec![
                "This is a fake sample data line, just for show.\n\nThis is a fake sample data line, just for show.",
                "This is a fake sample data line, just for show.",
            ]
        );
        assert_eq!(serialize_modal_sequence(&seq), FIG5_MD);
    }

    #[test]
    fn figure_five_refs() {
        assert_eq!(
            extract_image_refs(FIG5_MD),
            vec!["content_image/1997-0.png", "content_image/1997-1.png"]
        );
        assert!(extract_image_refs("no images here").is_empty());
    }

    #[test]
    fn whitespace_between_images_does_not_make_a_block() {
        let md = "a\n\n<img src=\"x.png\">\n\n  \n<IMG SRC=y.png />\n\nb";
        assert_eq!(kinds(md), vec![T, I, I, T]);
        assert_eq!(serialize_modal_sequence(&parse_modal_sequence(md)), md);
    }

    #[test]
    fn leading_whitespace_before_first_image_is_absorbed() {
        let md = "\n\n<img src='a'>";
        let seq = parse_modal_sequence(md);
        assert_eq!(seq.kinds(), vec![I]);
        assert_eq!(seq.units[0].source(), md);
    }

    #[test]
    fn markdown_image_syntax() {
        let md = "intro ![a [nested] alt](images/p(1).png \"title\") outro ![](<sp ace.png>)";
        assert_eq!(extract_image_refs(md), vec!["images/p(1).png", "sp ace.png"]);
        assert_eq!(kinds(md), vec![T, I, T, I]);
        assert!(extract_image_refs("![alt] (x.png) and ![x]() and ![y](unclosed").is_empty());
    }

    #[test]
    fn non_image_tags_and_bangs_are_text() {
        assert_eq!(kinds("<image src='x'> <imgx src='y'> wow! [link](z)"), vec![T]);
    }

    #[test]
    fn unclosed_quote_is_text_with_warning() {
        let md = "a <img src='broken.png> b\n\n<img src=\"ok.png\">";
        let (seq, warnings) = parse_modal_sequence_with_warnings(md, Segmentation::ImageDelimited);
        assert_eq!(
            warnings,
            vec![ParseWarning { offset: 2, kind: ParseWarningKind::UnclosedQuote }]
        );
        assert_eq!(seq.kinds(), vec![T, I]);
        assert_eq!(serialize_modal_sequence(&seq), md);
    }

    #[test]
    fn img_without_src_is_text() {
        let (seq, warnings) =
            parse_modal_sequence_with_warnings("<img alt='x'>", Segmentation::ImageDelimited);
        assert_eq!(seq.kinds(), vec![T]);
        assert_eq!(warnings[0].kind, ParseWarningKind::MissingSrc);
    }

    #[test]
    fn paragraph_mode_splits_at_blank_lines() {
        let (seq, _) = parse_modal_sequence_with_warnings(FIG5_MD, Segmentation::Paragraph);
        assert_eq!(seq.kinds(), vec![I, T, T, I, T]);
        assert_eq!(serialize_modal_sequence(&seq), FIG5_MD);

        let md = "# H\n\n```\ncode\n\nmore\n```\n\n- item";
        let (seq, _) = parse_modal_sequence_with_warnings(md, Segmentation::Paragraph);
        assert_eq!(seq.kinds(), vec![T, T, T]);
        assert_eq!(serialize_modal_sequence(&seq), md);
    }

    #[test]
    fn with_path_keeps_surrounding_markup() {
        let seq = parse_modal_sequence("x\n\n<img alt=\"a\" src=\"http://h/p.jpg\" width=3>\n\ny");
        let img = seq.images().next().unwrap();
        let moved = img.with_path("content_image/7-0.jpg");
        assert_eq!(moved.markup, "\n\n<img alt=\"a\" src=\"content_image/7-0.jpg\" width=3>\n\n");
        assert_eq!(moved.with_path("z").path, "z");
    }

    #[test]
    fn rewrite_touches_only_paths() {
        let md = "![a](u1) text <img src='u2'>";
        let out = rewrite_image_paths(md, |n, _| Some(format!("content_image/d-{n}.png")));
        assert_eq!(out, "![a](content_image/d-0.png) text <img src='content_image/d-1.png'>");
    }

    #[test]
    fn content_image_path_detection() {
        assert!(is_content_image_path("content_image/1997-0.png"));
        assert!(is_content_image_path("./content_image/a.png"));
        assert!(is_content_image_path("part00/content_image/a.png"));
        assert!(!is_content_image_path("https://x/y.png"));
        assert!(!is_content_image_path("overall_image/1997.png"));
    }
}
