//! The JSONL record type and its (de)serialization.
//!
//! Decoding is hand-written so that unknown keys and `ori_meta` can be kept as
//! raw JSON text and re-emitted byte-for-byte, and so that output key order is
//! canonical regardless of input order.

use std::fmt;

use serde::de::{self, Deserializer, MapAccess, Visitor};
use serde::ser::{SerializeMap, Serializer};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::signals::QualitySignals;

/// Directory (relative to a part) holding inline images.
pub const CONTENT_IMAGE_DIR: &str = "content_image";
/// Directory (relative to a part) holding page- or document-level renders.
pub const OVERALL_IMAGE_DIR: &str = "overall_image";

/// Top-level keys in canonical output order.
pub const ENTRY_KEYS: [&str; 7] = [
    "id",
    "meta",
    "license",
    "quality_signals",
    "content_image",
    "md",
    "overall_image",
];

/// Keys of the `meta` object in canonical output order.
pub const META_KEYS: [&str; 8] = [
    "language",
    "oi_exist",
    "oi_source",
    "source_dataset",
    "ori_meta",
    "doc_id",
    "page_id",
    "date_download",
];

/// A JSON value kept as its original source text.
#[derive(Clone)]
pub struct RawJson(Box<RawValue>);

impl RawJson {
    pub fn from_value(value: &serde_json::Value) -> Self {
        let text = serde_json::to_string(value).expect("Value always serializes");
        Self(RawValue::from_string(text).expect("serializer output is valid JSON"))
    }

    pub fn get(&self) -> &str {
        self.0.get()
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::from_str(self.0.get()).expect("RawJson holds valid JSON")
    }

    fn is_null(&self) -> bool {
        self.0.get().trim() == "null"
    }
}

impl PartialEq for RawJson {
    fn eq(&self, other: &Self) -> bool {
        self.get() == other.get()
    }
}

impl fmt::Debug for RawJson {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.get())
    }
}

impl Serialize for RawJson {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for RawJson {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Box::<RawValue>::deserialize(deserializer).map(RawJson)
    }
}

/// Document identifier: the source may use either numbers or strings.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DocId {
    Int(i64),
    Str(String),
}

impl fmt::Display for DocId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DocId::Int(n) => write!(f, "{n}"),
            DocId::Str(s) => f.write_str(s),
        }
    }
}

impl From<i64> for DocId {
    fn from(n: i64) -> Self {
        DocId::Int(n)
    }
}

impl From<&str> for DocId {
    fn from(s: &str) -> Self {
        DocId::Str(s.to_owned())
    }
}

impl Serialize for DocId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            DocId::Int(n) => serializer.serialize_i64(*n),
            DocId::Str(s) => serializer.serialize_str(s),
        }
    }
}

impl<'de> Deserialize<'de> for DocId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct DocIdVisitor;
        impl Visitor<'_> for DocIdVisitor {
            type Value = DocId;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("an integer or a string")
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<DocId, E> {
                Ok(DocId::Int(v))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<DocId, E> {
                i64::try_from(v)
                    .map(DocId::Int)
                    .map_err(|_| E::custom("doc_id out of range"))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<DocId, E> {
                Ok(DocId::Str(v.to_owned()))
            }
        }
        deserializer.deserialize_any(DocIdVisitor)
    }
}

/// Provenance of the overall image.
///
/// Values other than `ori` and `compiling` decode into [`OiSource::Other`] so
/// the validator can report them instead of the whole line failing to parse.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OiSource {
    Ori,
    Compiling,
    Other(String),
}

impl OiSource {
    pub fn as_str(&self) -> &str {
        match self {
            OiSource::Ori => "ori",
            OiSource::Compiling => "compiling",
            OiSource::Other(s) => s,
        }
    }
}

impl Serialize for OiSource {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for OiSource {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(match s.as_str() {
            "ori" => OiSource::Ori,
            "compiling" => OiSource::Compiling,
            _ => OiSource::Other(s),
        })
    }
}

/// How `overall_image` appeared on input, so it can be re-emitted the same way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverallImageForm {
    #[default]
    Absent,
    Single,
    List,
}

/// Overall image path(s). Always a list internally.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OverallImage {
    pub paths: Vec<String>,
    pub form: OverallImageForm,
}

impl OverallImage {
    pub fn single(path: impl Into<String>) -> Self {
        Self {
            paths: vec![path.into()],
            form: OverallImageForm::Single,
        }
    }

    pub fn list(paths: Vec<String>) -> Self {
        Self {
            paths,
            form: OverallImageForm::List,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    fn is_absent(&self) -> bool {
        self.form == OverallImageForm::Absent && self.paths.is_empty()
    }
}

impl Serialize for OverallImage {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match (self.form, self.paths.as_slice()) {
            (OverallImageForm::Single, []) => serializer.serialize_str(""),
            (OverallImageForm::Single, [one]) => serializer.serialize_str(one),
            _ => self.paths.serialize(serializer),
        }
    }
}

impl<'de> Deserialize<'de> for OverallImage {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct OverallVisitor;
        impl<'de> Visitor<'de> for OverallVisitor {
            type Value = OverallImage;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a path string or a list of path strings")
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<OverallImage, E> {
                let paths = if v.is_empty() { vec![] } else { vec![v.to_owned()] };
                Ok(OverallImage {
                    paths,
                    form: OverallImageForm::Single,
                })
            }
            fn visit_unit<E: de::Error>(self) -> Result<OverallImage, E> {
                Ok(OverallImage::default())
            }
            fn visit_seq<A: de::SeqAccess<'de>>(self, mut seq: A) -> Result<OverallImage, A::Error> {
                let mut paths = Vec::new();
                while let Some(p) = seq.next_element::<String>()? {
                    paths.push(p);
                }
                Ok(OverallImage::list(paths))
            }
        }
        deserializer.deserialize_any(OverallVisitor)
    }
}

/// Document-level metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct Meta {
    pub language: String,
    pub oi_exist: bool,
    pub oi_source: OiSource,
    /// Original dataset name, or `"source"` for natively collected entries.
    pub source_dataset: String,
    /// Opaque snapshot of the source's own metadata, kept verbatim.
    pub ori_meta: Option<RawJson>,
    pub doc_id: DocId,
    pub page_id: Option<i64>,
    /// `YYYY-MM-DD`.
    pub date_download: String,
    /// Keys not in the schema, in input order.
    pub extra: Vec<(String, RawJson)>,
}

impl Meta {
    pub fn ori_meta_value(&self) -> Option<serde_json::Value> {
        self.ori_meta.as_ref().map(RawJson::to_value)
    }
}

/// One record of a PIN dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PinEntry {
    pub id: u64,
    pub meta: Meta,
    pub license: String,
    pub quality_signals: Option<QualitySignals>,
    pub md: String,
    pub content_image: Vec<String>,
    pub overall_image: OverallImage,
    /// Top-level keys not in the schema, in input order.
    pub extra: Vec<(String, RawJson)>,
}

impl PinEntry {
    /// Parse one JSONL line.
    pub fn from_json(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("PinEntry always serializes")
    }

    /// Names of keys outside the schema, with `meta.` prefix for nested ones.
    pub fn unknown_keys(&self) -> Vec<String> {
        self.extra
            .iter()
            .map(|(k, _)| k.clone())
            .chain(self.meta.extra.iter().map(|(k, _)| format!("meta.{k}")))
            .collect()
    }

    /// Base file stem used for this entry's generated images: `<doc_id>` or
    /// `<doc_id>-<page_id>`.
    pub fn image_stem(&self) -> String {
        match self.meta.page_id {
            Some(p) => format!("{}-{}", self.meta.doc_id, p),
            None => self.meta.doc_id.to_string(),
        }
    }
}

impl Serialize for Meta {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(8 + self.extra.len()))?;
        map.serialize_entry("language", &self.language)?;
        map.serialize_entry("oi_exist", &self.oi_exist)?;
        map.serialize_entry("oi_source", &self.oi_source)?;
        map.serialize_entry("source_dataset", &self.source_dataset)?;
        map.serialize_entry("ori_meta", &self.ori_meta)?;
        map.serialize_entry("doc_id", &self.doc_id)?;
        map.serialize_entry("page_id", &self.page_id)?;
        map.serialize_entry("date_download", &self.date_download)?;
        for (k, v) in &self.extra {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

impl Serialize for PinEntry {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(None)?;
        map.serialize_entry("id", &self.id)?;
        map.serialize_entry("meta", &self.meta)?;
        map.serialize_entry("license", &self.license)?;
        if let Some(qs) = &self.quality_signals {
            map.serialize_entry("quality_signals", qs)?;
        }
        map.serialize_entry("content_image", &self.content_image)?;
        map.serialize_entry("md", &self.md)?;
        if !self.overall_image.is_absent() {
            map.serialize_entry("overall_image", &self.overall_image)?;
        }
        for (k, v) in &self.extra {
            map.serialize_entry(k, v)?;
        }
        map.end()
    }
}

fn set_once<T, E: de::Error>(slot: &mut Option<T>, value: T, key: &'static str) -> Result<(), E> {
    if slot.is_some() {
        return Err(E::duplicate_field(key));
    }
    *slot = Some(value);
    Ok(())
}

impl<'de> Deserialize<'de> for Meta {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct MetaVisitor;
        impl<'de> Visitor<'de> for MetaVisitor {
            type Value = Meta;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a meta object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<Meta, A::Error> {
                let mut language = None;
                let mut oi_exist = None;
                let mut oi_source = None;
                let mut source_dataset = None;
                let mut ori_meta: Option<Option<RawJson>> = None;
                let mut doc_id = None;
                let mut page_id: Option<Option<i64>> = None;
                let mut date_download = None;
                let mut extra = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "language" => set_once(&mut language, map.next_value()?, "language")?,
                        "oi_exist" => set_once(&mut oi_exist, map.next_value()?, "oi_exist")?,
                        "oi_source" => set_once(&mut oi_source, map.next_value()?, "oi_source")?,
                        "source_dataset" => {
                            set_once(&mut source_dataset, map.next_value()?, "source_dataset")?
                        }
                        "ori_meta" => {
                            let raw: RawJson = map.next_value()?;
                            let raw = if raw.is_null() { None } else { Some(raw) };
                            set_once(&mut ori_meta, raw, "ori_meta")?
                        }
                        "doc_id" => set_once(&mut doc_id, map.next_value()?, "doc_id")?,
                        "page_id" => set_once(&mut page_id, map.next_value()?, "page_id")?,
                        "date_download" => {
                            set_once(&mut date_download, map.next_value()?, "date_download")?
                        }
                        _ => {
                            if extra.iter().any(|(k, _)| *k == key) {
                                return Err(de::Error::custom(format!("duplicate field `{key}`")));
                            }
                            let value: RawJson = map.next_value()?;
                            extra.push((key, value));
                        }
                    }
                }
                Ok(Meta {
                    language: language.ok_or_else(|| de::Error::missing_field("language"))?,
                    oi_exist: oi_exist.ok_or_else(|| de::Error::missing_field("oi_exist"))?,
                    oi_source: oi_source.ok_or_else(|| de::Error::missing_field("oi_source"))?,
                    source_dataset: source_dataset
                        .ok_or_else(|| de::Error::missing_field("source_dataset"))?,
                    ori_meta: ori_meta.ok_or_else(|| de::Error::missing_field("ori_meta"))?,
                    doc_id: doc_id.ok_or_else(|| de::Error::missing_field("doc_id"))?,
                    page_id: page_id.ok_or_else(|| de::Error::missing_field("page_id"))?,
                    date_download: date_download
                        .ok_or_else(|| de::Error::missing_field("date_download"))?,
                    extra,
                })
            }
        }
        deserializer.deserialize_map(MetaVisitor)
    }
}

impl<'de> Deserialize<'de> for PinEntry {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct EntryVisitor;
        impl<'de> Visitor<'de> for EntryVisitor {
            type Value = PinEntry;
            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a PIN entry object")
            }
            fn visit_map<A: MapAccess<'de>>(self, mut map: A) -> Result<PinEntry, A::Error> {
                let mut id = None;
                let mut meta = None;
                let mut license = None;
                let mut quality_signals: Option<Option<QualitySignals>> = None;
                let mut md = None;
                let mut content_image = None;
                let mut overall_image = None;
                let mut extra = Vec::new();
                while let Some(key) = map.next_key::<String>()? {
                    match key.as_str() {
                        "id" => set_once(&mut id, map.next_value()?, "id")?,
                        "meta" => set_once(&mut meta, map.next_value()?, "meta")?,
                        "license" => set_once(&mut license, map.next_value()?, "license")?,
                        "quality_signals" => {
                            set_once(&mut quality_signals, map.next_value()?, "quality_signals")?
                        }
                        "md" => set_once(&mut md, map.next_value()?, "md")?,
                        "content_image" => {
                            set_once(&mut content_image, map.next_value()?, "content_image")?
                        }
                        "overall_image" => {
                            set_once(&mut overall_image, map.next_value()?, "overall_image")?
                        }
                        _ => {
                            if extra.iter().any(|(k, _)| *k == key) {
                                return Err(de::Error::custom(format!("duplicate field `{key}`")));
                            }
                            let value: RawJson = map.next_value()?;
                            extra.push((key, value));
                        }
                    }
                }
                Ok(PinEntry {
                    id: id.ok_or_else(|| de::Error::missing_field("id"))?,
                    meta: meta.ok_or_else(|| de::Error::missing_field("meta"))?,
                    license: license.ok_or_else(|| de::Error::missing_field("license"))?,
                    quality_signals: quality_signals.flatten(),
                    md: md.ok_or_else(|| de::Error::missing_field("md"))?,
                    content_image: content_image
                        .ok_or_else(|| de::Error::missing_field("content_image"))?,
                    overall_image: overall_image.unwrap_or_default(),
                    extra,
                })
            }
        }
        deserializer.deserialize_map(EntryVisitor)
    }
}
