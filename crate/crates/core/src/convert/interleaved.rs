use serde_json::{Map, Value};

use super::{ConvertError, ConvertOptions, Draft, ImageNamer};
use crate::model::{html_img_tag, RawJson};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum InterleavedItem {
    Text(String),
    /// Path or URL; `None` when the source item carried neither.
    Image(Option<String>),
}

/// A document given as an ordered list of text and image items.
#[derive(Debug, Clone, PartialEq)]
pub struct InterleavedListDoc {
    pub items: Vec<InterleavedItem>,
    /// Source metadata, stored as `ori_meta`.
    pub metadata: Value,
}

fn non_empty_str(v: Option<&Value>) -> Option<String> {
    v.and_then(Value::as_str).filter(|s| !s.is_empty()).map(str::to_owned)
}

impl InterleavedListDoc {
    /// Accepts either parallel `texts`/`images` arrays (at each index one of
    /// the two is non-null) or an `items` array of objects with `kind`
    /// (`text`|`image`) plus `text` or `image_path_or_url`. Source metadata is
    /// taken from `metadata` when present, else from the remaining keys.
    pub fn from_json(value: &Value) -> Result<Self, ConvertError> {
        let obj = value
            .as_object()
            .ok_or_else(|| ConvertError::InvalidSource("expected a JSON object".into()))?;
        let items = if let Some(items) = obj.get("items") {
            let arr = items
                .as_array()
                .ok_or_else(|| ConvertError::InvalidSource("`items` must be an array".into()))?;
            arr.iter()
                .enumerate()
                .map(|(i, item)| {
                    let kind = item.get("kind").or_else(|| item.get("type")).and_then(Value::as_str);
                    match kind {
                        Some("text") => Ok(InterleavedItem::Text(
                            item.get("text").and_then(Value::as_str).unwrap_or_default().to_owned(),
                        )),
                        Some("image") => Ok(InterleavedItem::Image(
                            non_empty_str(item.get("image_path_or_url"))
                                .or_else(|| non_empty_str(item.get("url")))
                                .or_else(|| non_empty_str(item.get("path"))),
                        )),
                        _ => Err(ConvertError::InvalidSource(format!("item {i} has no valid `kind`"))),
                    }
                })
                .collect::<Result<Vec<_>, _>>()?
        } else {
            let texts = obj.get("texts").and_then(Value::as_array);
            let images = obj.get("images").and_then(Value::as_array);
            let (Some(texts), Some(images)) = (texts, images) else {
                return Err(ConvertError::InvalidSource(
                    "expected `items` or parallel `texts` and `images` arrays".into(),
                ));
            };
            if texts.len() != images.len() {
                return Err(ConvertError::InvalidSource(format!(
                    "`texts` has {} elements but `images` has {}",
                    texts.len(),
                    images.len()
                )));
            }
            texts
                .iter()
                .zip(images)
                .map(|(t, i)| match (t, i) {
                    (Value::String(t), Value::Null) => InterleavedItem::Text(t.clone()),
                    (_, i) => InterleavedItem::Image(non_empty_str(Some(i))),
                })
                .collect()
        };
        let metadata = match obj.get("metadata") {
            Some(m) => m.clone(),
            None => Value::Object(
                obj.iter()
                    .filter(|(k, _)| !matches!(k.as_str(), "items" | "texts" | "images"))
                    .map(|(k, v)| (k.clone(), v.clone()))
                    .collect::<Map<_, _>>(),
            ),
        };
        Ok(Self { items, metadata })
    }
}

/// Join text items verbatim and image items as `<img>` tags with blank lines.
pub fn from_interleaved_list(doc: &InterleavedListDoc, opts: &ConvertOptions) -> Result<Draft, ConvertError> {
    if doc.items.is_empty() {
        return Err(ConvertError::EmptyDocument);
    }
    let mut entry = opts.base_entry(String::new());
    entry.meta.ori_meta = Some(RawJson::from_value(&doc.metadata));
    let mut namer = ImageNamer::new(entry.image_stem(), Vec::new());
    let mut warnings = Vec::new();
    let mut parts = Vec::with_capacity(doc.items.len());
    for (i, item) in doc.items.iter().enumerate() {
        match item {
            InterleavedItem::Text(t) => parts.push(t.clone()),
            InterleavedItem::Image(Some(origin)) => {
                let local = namer.assign(origin);
                parts.push(html_img_tag(&local));
                entry.content_image.push(local);
            }
            InterleavedItem::Image(None) => {
                let msg = format!("item {i}: image without path or URL skipped");
                log::warn!("{msg}");
                warnings.push(msg);
            }
        }
    }
    entry.md = parts.join("\n\n");
    Ok(Draft { entry, pending: namer.pending, warnings })
}
