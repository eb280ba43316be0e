#![allow(dead_code)]

use pin_forge::signals::{compute_signals, WhitespaceTokenizer};
use pin_forge::PinEntry;
use rand::seq::SliceRandom;
use rand::Rng;
use serde_json::json;

const WORDS: &[&str] = &[
    "the", "model", "reads", "**bold**", "*slanted*", "page", "image", "token", "layout", "über", "数据", "corpus",
    "interleaved", "figure", "table", "`code`", "and", "of", "with", "markdown",
];

pub fn paragraph(rng: &mut impl Rng, words: usize) -> String {
    (0..words.max(1)).map(|_| *WORDS.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
}

/// A random markdown document with `images` inline image tags, plus the
/// matching `content_image` list.
pub fn random_md(rng: &mut impl Rng, doc: u64, images: usize, blocks: usize) -> (String, Vec<String>) {
    let mut parts = Vec::new();
    let mut paths = Vec::new();
    let mut left = images;
    for b in 0..blocks.max(images) {
        if left > 0 && (rng.gen_bool(0.4) || blocks.max(images) - b <= left) {
            let p = format!("content_image/{doc}-{}.png", paths.len());
            parts.push(format!("<img src='{p}'>"));
            paths.push(p);
            left -= 1;
        } else if rng.gen_bool(0.15) {
            parts.push(format!("{} {}", "#".repeat(rng.gen_range(1..4)), paragraph(rng, 4)));
        } else {
            let n = rng.gen_range(1..120);
            parts.push(paragraph(rng, n));
        }
    }
    (parts.join("\n\n"), paths)
}

pub fn entry_with(id: u64, doc_id: u64, page_id: Option<i64>, md: String, content_image: Vec<String>) -> PinEntry {
    let mut meta = json!({
        "language": "en",
        "oi_exist": false,
        "oi_source": "compiling",
        "source_dataset": "synthetic",
        "ori_meta": null,
        "doc_id": doc_id,
        "date_download": "2024-03-01",
    });
    meta["page_id"] = page_id.map_or(serde_json::Value::Null, |p| json!(p));
    let v = json!({
        "id": id,
        "meta": meta,
        "license": "CC-BY-4.0",
        "md": md,
        "content_image": content_image,
        "overall_image": "",
    });
    PinEntry::from_json(&v.to_string()).unwrap()
}

/// A random entry with computed quality signals.
pub fn random_entry(rng: &mut impl Rng, id: u64) -> PinEntry {
    let images = rng.gen_range(0..6);
    let blocks = rng.gen_range(1..10);
    let (md, paths) = random_md(rng, id, images, blocks);
    let mut e = entry_with(id, id, None, md, paths);
    e.quality_signals = Some(compute_signals(&e, &WhitespaceTokenizer));
    e
}
