use std::cmp::Ordering;

use serde::{Deserialize, Deserializer};

use super::{ConvertError, ConvertOptions, Draft, ImageNamer};
use crate::model::{html_img_tag, OiSource, OverallImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutCategory {
    Text,
    Title,
    Figure,
    Table,
    ListItem,
    Code,
    Other,
}

impl LayoutCategory {
    pub fn parse(s: &str) -> Self {
        match s.to_ascii_lowercase().replace(['_', ' '], "-").as_str() {
            "text" | "paragraph" => Self::Text,
            "title" | "section-header" | "heading" => Self::Title,
            "figure" | "picture" | "image" => Self::Figure,
            "table" => Self::Table,
            "list-item" | "list" => Self::ListItem,
            "code" | "formula" => Self::Code,
            _ => Self::Other,
        }
    }
}

impl<'de> Deserialize<'de> for LayoutCategory {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        Ok(Self::parse(&String::deserialize(d)?))
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LayoutElement {
    /// `[x0, y0, x1, y1]`, y growing downwards.
    pub bbox: [f64; 4],
    pub category: LayoutCategory,
    #[serde(default)]
    pub content: Option<String>,
    #[serde(default)]
    pub image_path: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct LayoutAnnotatedPage {
    pub elements: Vec<LayoutElement>,
    pub page_image_path: String,
    #[serde(default)]
    pub page_id: Option<i64>,
    /// Page width in bbox units; the widest element edge when absent.
    #[serde(default)]
    pub width: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutOptions {
    /// Minimum gutter width between columns, as a fraction of page width.
    pub gutter_fraction: f64,
}

impl Default for LayoutOptions {
    fn default() -> Self {
        Self { gutter_fraction: 0.05 }
    }
}

type Rect = [f64; 4];

/// Gaps wider than `min_gap` between the merged projections of `rects` on
/// one axis (`axis` 0 for x, 1 for y), as `(start, end)` pairs.
fn gaps(rects: &[(usize, Rect)], axis: usize, min_gap: f64) -> Vec<(f64, f64)> {
    let mut spans: Vec<(f64, f64)> = rects.iter().map(|(_, r)| (r[axis], r[axis + 2])).collect();
    spans.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = Vec::new();
    let mut reach = spans[0].1;
    for &(lo, hi) in &spans[1..] {
        if lo - reach > min_gap || (min_gap == 0.0 && lo >= reach) {
            out.push((reach, lo));
        }
        reach = reach.max(hi);
    }
    out
}

/// Split `rects` at the given gaps along `axis`, in increasing coordinate order.
fn split_at(rects: Vec<(usize, Rect)>, axis: usize, cuts: &[(f64, f64)]) -> Vec<Vec<(usize, Rect)>> {
    let mut groups = vec![Vec::new(); cuts.len() + 1];
    for item in rects {
        let slot = cuts.iter().take_while(|(_, end)| item.1[axis] >= *end).count();
        groups[slot].push(item);
    }
    groups
}

fn intersect(a: &[(f64, f64)], b: &[(f64, f64)], min_width: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    for &(a0, a1) in a {
        for &(b0, b1) in b {
            let (lo, hi) = (a0.max(b0), a1.min(b1));
            if hi - lo > min_width {
                out.push((lo, hi));
            }
        }
    }
    out
}

fn leaf_order(mut rects: Vec<(usize, Rect)>, key: &dyn Fn(usize, usize) -> Ordering) -> Vec<usize> {
    rects.sort_by(|a, b| {
        a.1[1]
            .total_cmp(&b.1[1])
            .then(a.1[0].total_cmp(&b.1[0]))
            .then(a.1[3].total_cmp(&b.1[3]))
            .then(a.1[2].total_cmp(&b.1[2]))
            .then_with(|| key(a.0, b.0))
    });
    rects.into_iter().map(|(i, _)| i).collect()
}

fn xy_cut(rects: Vec<(usize, Rect)>, gutter: f64, key: &dyn Fn(usize, usize) -> Ordering) -> Vec<usize> {
    if rects.len() <= 1 {
        return rects.into_iter().map(|(i, _)| i).collect();
    }
    let columns = gaps(&rects, 0, gutter);
    if !columns.is_empty() {
        return split_at(rects, 0, &columns)
            .into_iter()
            .flat_map(|g| xy_cut(g, gutter, key))
            .collect();
    }
    let rows = gaps(&rects, 1, 0.0);
    if rows.is_empty() {
        return leaf_order(rects, key);
    }
    // Consecutive bands that share a column gutter belong to the same
    // multi-column region and are ordered column by column.
    let bands = split_at(rects, 1, &rows);
    let mut out = Vec::new();
    let mut group: Vec<(usize, Rect)> = Vec::new();
    let mut shared: Vec<(f64, f64)> = Vec::new();
    for band in bands {
        let band_gutters = if band.len() > 1 { gaps(&band, 0, gutter) } else { Vec::new() };
        let common = intersect(&shared, &band_gutters, gutter);
        if !group.is_empty() && !common.is_empty() {
            group.extend(band);
            shared = common;
        } else {
            out.extend(xy_cut(std::mem::take(&mut group), gutter, key));
            group = band;
            shared = band_gutters;
        }
    }
    out.extend(xy_cut(group, gutter, key));
    out
}

/// Reading order of the page's elements as indices into `page.elements`.
///
/// Columns are found by recursive XY-cut: a vertical gutter wider than the
/// threshold separates columns (read left to right), otherwise the region is
/// cut into horizontal bands (read top to bottom). Elements that cannot be
/// separated are sorted by top edge, then left edge. Ties between identical
/// boxes are broken by content and then input position.
pub fn reading_order(page: &LayoutAnnotatedPage, opts: &LayoutOptions) -> Result<Vec<usize>, ConvertError> {
    for (index, e) in page.elements.iter().enumerate() {
        let [x0, y0, x1, y1] = e.bbox;
        let valid = e.bbox.iter().all(|v| v.is_finite()) && x0 >= 0.0 && y0 >= 0.0 && x0 < x1 && y0 < y1;
        if !valid {
            return Err(ConvertError::InvalidBbox { index, bbox: e.bbox });
        }
    }
    if page.elements.is_empty() {
        return Ok(Vec::new());
    }
    let width = page
        .width
        .unwrap_or_else(|| page.elements.iter().map(|e| e.bbox[2]).fold(0.0, f64::max));
    let key = |a: usize, b: usize| {
        let (ea, eb) = (&page.elements[a], &page.elements[b]);
        ea.content
            .cmp(&eb.content)
            .then_with(|| ea.image_path.cmp(&eb.image_path))
            .then(a.cmp(&b))
    };
    let rects = page.elements.iter().map(|e| e.bbox).enumerate().collect();
    Ok(xy_cut(rects, width * opts.gutter_fraction, &key))
}

fn fence_for(code: &str) -> String {
    let mut longest = 0;
    let mut run = 0;
    for c in code.chars() {
        run = if c == '`' { run + 1 } else { 0 };
        longest = longest.max(run);
    }
    "`".repeat((longest + 1).max(3))
}

/// Convert one annotated page into a page entry whose overall image is the
/// original page scan.
pub fn from_layout_annotations(
    page: &LayoutAnnotatedPage,
    opts: &ConvertOptions,
    layout: &LayoutOptions,
) -> Result<Draft, ConvertError> {
    if page.elements.is_empty() {
        return Err(ConvertError::EmptyDocument);
    }
    let order = reading_order(page, layout)?;
    let mut warnings = Vec::new();
    for (i, a) in page.elements.iter().enumerate() {
        if let Some(j) = page.elements[..i].iter().position(|b| b.bbox == a.bbox) {
            warnings.push(format!("elements {j} and {i} have identical boxes {:?}", a.bbox));
        }
    }

    let mut entry = opts.base_entry(String::new());
    entry.meta.page_id = page.page_id;
    entry.meta.oi_exist = true;
    entry.meta.oi_source = OiSource::Ori;
    entry.overall_image = OverallImage::single(page.page_image_path.clone());
    let mut namer = ImageNamer::new(entry.image_stem(), Vec::new());

    let mut blocks = Vec::with_capacity(order.len());
    for i in order {
        let e = &page.elements[i];
        let text = e.content.as_deref().map(str::trim).filter(|t| !t.is_empty());
        let mut image = |origin: &str, blocks: &mut Vec<String>| {
            let local = namer.assign(origin);
            blocks.push(html_img_tag(&local));
            entry.content_image.push(local);
        };
        match (e.category, text, e.image_path.as_deref()) {
            (LayoutCategory::Title, Some(t), _) => {
                blocks.push(format!("# {}", t.split_whitespace().collect::<Vec<_>>().join(" ")))
            }
            (LayoutCategory::Code, Some(_), _) => {
                let code = e.content.as_deref().unwrap_or_default().trim_matches('\n');
                let fence = fence_for(code);
                blocks.push(format!("{fence}\n{code}\n{fence}"));
            }
            (LayoutCategory::Figure, _, Some(path)) => image(path, &mut blocks),
            (LayoutCategory::Table, Some(t), _) => blocks.push(t.to_owned()),
            (LayoutCategory::Table, None, Some(path)) => image(path, &mut blocks),
            (LayoutCategory::Figure, Some(t), None) => blocks.push(t.to_owned()),
            (_, Some(t), _) => blocks.push(t.to_owned()),
            (category, None, _) => warnings.push(format!("element {i} ({category:?}) has no content; skipped")),
        }
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    entry.md = blocks.join("\n\n");
    Ok(Draft { entry, pending: namer.pending, warnings })
}
