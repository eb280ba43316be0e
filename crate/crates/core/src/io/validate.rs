use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::PathBuf;

use chrono::NaiveDate;
use serde::Serialize;
use serde_json::Value;

use crate::model::entry::{ENTRY_KEYS, META_KEYS};
use crate::model::{
    extract_image_refs, is_content_image_path, parse_modal_sequence_with_warnings, DocId,
    OiSource, ParseWarningKind, PinEntry, Segmentation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ViolationCode {
    MalformedJson,
    MissingKey,
    WrongType,
    UnknownKey,
    OiInconsistent,
    OiSourceInvalid,
    ContentImageCount,
    ContentImageOrder,
    DateInvalid,
    PageIdNegative,
    PageIdNullMultipage,
    DuplicateId,
    DuplicatePage,
    FileMissing,
    MalformedImageTag,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::MalformedJson => "MALFORMED_JSON",
            ViolationCode::MissingKey => "MISSING_KEY",
            ViolationCode::WrongType => "WRONG_TYPE",
            ViolationCode::UnknownKey => "UNKNOWN_KEY",
            ViolationCode::OiInconsistent => "OI_INCONSISTENT",
            ViolationCode::OiSourceInvalid => "OI_SOURCE_INVALID",
            ViolationCode::ContentImageCount => "CONTENT_IMAGE_COUNT",
            ViolationCode::ContentImageOrder => "CONTENT_IMAGE_ORDER",
            ViolationCode::DateInvalid => "DATE_INVALID",
            ViolationCode::PageIdNegative => "PAGE_ID_NEGATIVE",
            ViolationCode::PageIdNullMultipage => "PAGE_ID_NULL_MULTIPAGE",
            ViolationCode::DuplicateId => "DUPLICATE_ID",
            ViolationCode::DuplicatePage => "DUPLICATE_PAGE",
            ViolationCode::FileMissing => "FILE_MISSING",
            ViolationCode::MalformedImageTag => "MALFORMED_IMAGE_TAG",
        }
    }

    pub fn severity(self) -> Severity {
        match self {
            ViolationCode::MalformedImageTag => Severity::Warning,
            _ => Severity::Error,
        }
    }
}

impl fmt::Display for ViolationCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Violation {
    pub code: ViolationCode,
    /// Dotted path of the offending field, e.g. `meta.page_id`.
    pub field: String,
    pub message: String,
    pub severity: Severity,
}

impl Violation {
    pub fn new(code: ViolationCode, field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            code,
            field: field.into(),
            message: message.into(),
            severity: code.severity(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    /// 0-based position of the entry in its stream.
    pub ordinal: usize,
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn with_ordinal(mut self, ordinal: usize) -> Self {
        self.ordinal = ordinal;
        self
    }

    /// An entry is accepted when it has no error-severity violations.
    pub fn accepted(&self) -> bool {
        self.errors().next().is_none()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Violation> {
        self.violations.iter().filter(|v| v.severity == Severity::Error)
    }

    pub fn codes(&self) -> Vec<ViolationCode> {
        self.violations.iter().map(|v| v.code).collect()
    }
}

#[derive(Debug, Clone, Default)]
pub struct ValidationOptions {
    /// Flag unknown keys and duplicate ids.
    pub strict: bool,
    /// Require referenced image files to exist under `root`.
    pub check_files: bool,
    pub root: PathBuf,
}

fn date_ok(s: &str) -> bool {
    s.len() == 10 && NaiveDate::parse_from_str(s, "%Y-%m-%d").is_ok()
}

/// Check one decoded entry against the schema rules that a successful decode
/// does not already guarantee.
pub fn validate_entry(entry: &PinEntry, options: &ValidationOptions) -> ValidationReport {
    use ViolationCode as C;
    let mut out = Vec::new();

    if options.strict {
        for key in entry.unknown_keys() {
            out.push(Violation::new(C::UnknownKey, key.clone(), format!("unknown key `{key}`")));
        }
    }

    let meta = &entry.meta;
    if meta.oi_exist == entry.overall_image.is_empty() {
        out.push(Violation::new(
            C::OiInconsistent,
            "meta.oi_exist",
            format!(
                "oi_exist is {} but overall_image has {} path(s)",
                meta.oi_exist,
                entry.overall_image.paths.len()
            ),
        ));
    }
    if let OiSource::Other(s) = &meta.oi_source {
        out.push(Violation::new(
            C::OiSourceInvalid,
            "meta.oi_source",
            format!("`{s}` is neither `ori` nor `compiling`"),
        ));
    }

    let md_refs: Vec<String> = extract_image_refs(&entry.md)
        .into_iter()
        .filter(|p| is_content_image_path(p) || entry.content_image.contains(p))
        .collect();
    if md_refs.len() != entry.content_image.len() {
        out.push(Violation::new(
            C::ContentImageCount,
            "content_image",
            format!(
                "content_image lists {} image(s) but md references {}",
                entry.content_image.len(),
                md_refs.len()
            ),
        ));
    } else if md_refs != entry.content_image {
        let at = md_refs.iter().zip(&entry.content_image).position(|(a, b)| a != b).unwrap_or(0);
        out.push(Violation::new(
            C::ContentImageOrder,
            format!("content_image[{at}]"),
            format!("md references `{}` here, content_image has `{}`", md_refs[at], entry.content_image[at]),
        ));
    }

    if !date_ok(&meta.date_download) {
        out.push(Violation::new(
            C::DateInvalid,
            "meta.date_download",
            format!("`{}` is not a YYYY-MM-DD date", meta.date_download),
        ));
    }
    if let Some(p) = meta.page_id.filter(|p| *p < 0) {
        out.push(Violation::new(C::PageIdNegative, "meta.page_id", format!("page_id {p} is negative")));
    }

    let (_, warnings) = parse_modal_sequence_with_warnings(&entry.md, Segmentation::ImageDelimited);
    for w in warnings {
        let what = match w.kind {
            ParseWarningKind::UnclosedQuote => "unclosed quote",
            ParseWarningKind::UnclosedTag => "unclosed tag",
            ParseWarningKind::MissingSrc => "missing src",
        };
        out.push(Violation::new(
            C::MalformedImageTag,
            "md",
            format!("image tag at byte {}: {what}; kept as text", w.offset),
        ));
    }

    if options.check_files {
        let paths = entry
            .content_image
            .iter()
            .map(|p| ("content_image", p))
            .chain(entry.overall_image.paths.iter().map(|p| ("overall_image", p)));
        for (field, path) in paths {
            if !options.root.join(path).is_file() {
                out.push(Violation::new(C::FileMissing, field, format!("`{path}` not found")));
            }
        }
    }

    ValidationReport { ordinal: 0, violations: out }
}

fn type_name(v: &Value) -> &'static str {
    match v {
        Value::Null => "null",
        Value::Bool(_) => "boolean",
        Value::Number(_) => "number",
        Value::String(_) => "string",
        Value::Array(_) => "array",
        Value::Object(_) => "object",
    }
}

fn is_str_list(v: &Value) -> bool {
    v.as_array().is_some_and(|a| a.iter().all(Value::is_string))
}

type TypeCheck = fn(&Value) -> bool;

/// Expected type of each schema field, as a predicate plus description.
fn field_type(key: &str) -> Option<(TypeCheck, &'static str)> {
    Some(match key {
        "id" => (|v| v.as_u64().is_some(), "non-negative integer"),
        "meta" => (Value::is_object, "object"),
        "license" | "md" => (Value::is_string, "string"),
        "quality_signals" => (|v| v.is_object() || v.is_null(), "object or null"),
        "content_image" => (is_str_list, "list of strings"),
        "overall_image" => (|v| v.is_string() || v.is_null() || is_str_list(v), "string or list of strings"),
        "language" | "oi_source" | "source_dataset" | "date_download" => (Value::is_string, "string"),
        "oi_exist" => (Value::is_boolean, "boolean"),
        "ori_meta" => (|_| true, "any"),
        "doc_id" => (|v| v.is_string() || v.as_i64().is_some(), "integer or string"),
        "page_id" => (|v| v.is_null() || v.as_i64().is_some(), "integer or null"),
        _ => return None,
    })
}

const OPTIONAL_KEYS: [&str; 2] = ["quality_signals", "overall_image"];

fn check_object(
    obj: &serde_json::Map<String, Value>,
    keys: &[&str],
    prefix: &str,
    strict: bool,
    out: &mut Vec<Violation>,
) {
    use ViolationCode as C;
    for key in keys {
        let field = format!("{prefix}{key}");
        match obj.get(*key) {
            None if OPTIONAL_KEYS.contains(key) && prefix.is_empty() => {}
            None => out.push(Violation::new(C::MissingKey, field.clone(), format!("`{field}` is required"))),
            Some(v) => {
                let (ok, expected) = field_type(key).expect("schema key");
                if !ok(v) {
                    out.push(Violation::new(
                        C::WrongType,
                        field.clone(),
                        format!("`{field}` should be {expected}, found {}", type_name(v)),
                    ));
                }
            }
        }
    }
    if strict {
        for key in obj.keys().filter(|k| !keys.contains(&k.as_str())) {
            let field = format!("{prefix}{key}");
            out.push(Violation::new(C::UnknownKey, field.clone(), format!("unknown key `{field}`")));
        }
    }
}

/// Validate one raw JSONL line. Lines that decode are checked with
/// [`validate_entry`]; lines that do not are diagnosed structurally.
pub fn validate_line(line: &str, options: &ValidationOptions) -> (Option<PinEntry>, ValidationReport) {
    use ViolationCode as C;
    match PinEntry::from_json(line) {
        Ok(entry) => {
            let report = validate_entry(&entry, options);
            (Some(entry), report)
        }
        Err(decode_err) => {
            let mut out = Vec::new();
            match serde_json::from_str::<Value>(line) {
                Err(e) => out.push(Violation::new(C::MalformedJson, "", e.to_string())),
                Ok(Value::Object(obj)) => {
                    check_object(&obj, &ENTRY_KEYS, "", options.strict, &mut out);
                    if let Some(Value::Object(meta)) = obj.get("meta") {
                        check_object(meta, &META_KEYS, "meta.", options.strict, &mut out);
                    }
                }
                Ok(other) => out.push(Violation::new(
                    C::WrongType,
                    "",
                    format!("entry should be an object, found {}", type_name(&other)),
                )),
            }
            if !out.iter().any(|v| v.severity == Severity::Error) {
                // structurally fine but still undecodable (duplicate keys,
                // malformed quality_signals, ...)
                out.push(Violation::new(C::MalformedJson, "", decode_err.to_string()));
            }
            (None, ValidationReport { ordinal: 0, violations: out })
        }
    }
}

/// Cross-entry checks over a whole dataset: duplicate ids (strict mode),
/// duplicate `(doc_id, page_id)` pairs and null page ids in multi-page
/// documents. Every entry involved in a conflict is reported, so the result
/// does not depend on entry order.
#[derive(Debug, Default)]
pub struct DatasetValidator {
    options: ValidationOptions,
    ids: HashMap<u64, Vec<usize>>,
    pages: HashMap<(DocId, Option<i64>), Vec<usize>>,
    docs: HashMap<DocId, usize>,
}

impl DatasetValidator {
    pub fn new(options: ValidationOptions) -> Self {
        Self { options, ..Self::default() }
    }

    /// Per-entry validation plus recording for the cross-entry checks.
    pub fn check(&mut self, ordinal: usize, entry: &PinEntry) -> ValidationReport {
        self.record(ordinal, entry);
        validate_entry(entry, &self.options).with_ordinal(ordinal)
    }

    /// Record an entry validated elsewhere (e.g. on another thread).
    pub fn record(&mut self, ordinal: usize, entry: &PinEntry) {
        self.ids.entry(entry.id).or_default().push(ordinal);
        let doc = entry.meta.doc_id.clone();
        self.pages.entry((doc.clone(), entry.meta.page_id)).or_default().push(ordinal);
        *self.docs.entry(doc).or_default() += 1;
    }

    /// Cross-entry violations, one report per affected entry, by ordinal.
    pub fn finish(self) -> Vec<ValidationReport> {
        use ViolationCode as C;
        let mut by_ordinal: BTreeMap<usize, Vec<Violation>> = BTreeMap::new();
        if self.options.strict {
            for (id, ords) in self.ids.iter().filter(|(_, o)| o.len() > 1) {
                for &o in ords {
                    by_ordinal.entry(o).or_default().push(Violation::new(
                        C::DuplicateId,
                        "id",
                        format!("id {id} appears {} times", ords.len()),
                    ));
                }
            }
        }
        for ((doc, page), ords) in &self.pages {
            match page {
                Some(p) if ords.len() > 1 => {
                    for &o in ords {
                        by_ordinal.entry(o).or_default().push(Violation::new(
                            C::DuplicatePage,
                            "meta.page_id",
                            format!("doc {doc} has {} entries with page_id {p}", ords.len()),
                        ));
                    }
                }
                None if self.docs[doc] > 1 => {
                    for &o in ords {
                        by_ordinal.entry(o).or_default().push(Violation::new(
                            C::PageIdNullMultipage,
                            "meta.page_id",
                            format!("doc {doc} has {} entries but this one has a null page_id", self.docs[doc]),
                        ));
                    }
                }
                _ => {}
            }
        }
        by_ordinal
            .into_iter()
            .map(|(ordinal, mut violations)| {
                violations.sort();
                ValidationReport { ordinal, violations }
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::OverallImage;
    use crate::test_support::{fig5_entry, FIG5_LINE};

    fn opts() -> ValidationOptions {
        ValidationOptions::default()
    }

    #[test]
    fn example_entry_is_clean() {
        let report = validate_entry(&fig5_entry(), &opts());
        assert!(report.violations.is_empty(), "{report:?}");
        assert!(report.accepted());
    }

    #[test]
    fn oi_exist_without_overall_image() {
        let mut e = fig5_entry();
        e.overall_image = OverallImage::default();
        assert_eq!(validate_entry(&e, &opts()).codes(), vec![ViolationCode::OiInconsistent]);
        e.meta.oi_exist = false;
        assert!(validate_entry(&e, &opts()).violations.is_empty());
    }

    #[test]
    fn dates() {
        for good in ["2024-03-01", "2000-02-29"] {
            assert!(date_ok(good), "{good}");
        }
        for bad in ["2024-3-01", "2024-02-30", "2024/03/01", "24-03-01", "2024-03-01T00:00", ""] {
            assert!(!date_ok(bad), "{bad}");
        }
    }

    #[test]
    fn content_image_mismatch_codes() {
        let mut e = fig5_entry();
        e.content_image.reverse();
        let r = validate_entry(&e, &opts());
        assert_eq!(r.codes(), vec![ViolationCode::ContentImageOrder]);
        assert_eq!(r.violations[0].field, "content_image[0]");
        e.content_image.pop();
        assert_eq!(validate_entry(&e, &opts()).codes(), vec![ViolationCode::ContentImageCount]);
    }

    #[test]
    fn external_image_urls_are_not_content_images() {
        let mut e = fig5_entry();
        e.md.push_str("\n\n<img src='https://example.com/x.png'>");
        assert!(validate_entry(&e, &opts()).violations.is_empty());
    }

    #[test]
    fn malformed_tag_is_a_warning() {
        let mut e = fig5_entry();
        e.md.push_str("\n\n<img alt='x'>");
        let r = validate_entry(&e, &opts());
        assert_eq!(r.codes(), vec![ViolationCode::MalformedImageTag]);
        assert!(r.accepted());
    }

    #[test]
    fn missing_files() {
        let dir = tempfile::tempdir().unwrap();
        let o = ValidationOptions { check_files: true, root: dir.path().to_owned(), ..opts() };
        let r = validate_entry(&fig5_entry(), &o);
        assert_eq!(r.codes(), vec![ViolationCode::FileMissing; 3]);
        std::fs::create_dir_all(dir.path().join("content_image")).unwrap();
        std::fs::create_dir_all(dir.path().join("overall_image")).unwrap();
        for p in ["content_image/1997-0.png", "content_image/1997-1.png", "overall_image/1997.png"] {
            std::fs::write(dir.path().join(p), b"x").unwrap();
        }
        assert!(validate_entry(&fig5_entry(), &o).violations.is_empty());
    }

    #[test]
    fn structural_diagnosis_of_undecodable_lines() {
        let (entry, r) = validate_line("{not json", &opts());
        assert!(entry.is_none());
        assert_eq!(r.codes(), vec![ViolationCode::MalformedJson]);

        let (_, r) = validate_line("[1]", &opts());
        assert_eq!(r.codes(), vec![ViolationCode::WrongType]);

        let line = FIG5_LINE.replace(r#""license":"CC-BY-4.0","#, "");
        let (_, r) = validate_line(&line, &opts());
        assert_eq!(r.codes(), vec![ViolationCode::MissingKey]);
        assert_eq!(r.violations[0].field, "license");

        let line = FIG5_LINE.replace(r#""oi_exist":true"#, r#""oi_exist":"yes""#);
        let (_, r) = validate_line(&line, &opts());
        assert_eq!(r.codes(), vec![ViolationCode::WrongType]);
        assert_eq!(r.violations[0].field, "meta.oi_exist");

        let line = FIG5_LINE.replace(r#""id":1919,"#, r#""id":1919,"id":1920,"#);
        let (_, r) = validate_line(&line, &opts());
        assert_eq!(r.codes(), vec![ViolationCode::MalformedJson]);
    }

    #[test]
    fn dataset_checks_flag_every_member_of_a_conflict() {
        let mut a = fig5_entry();
        let mut b = fig5_entry();
        b.meta.page_id = Some(1);
        let mut c = fig5_entry();
        c.id = 7;
        c.meta.page_id = Some(1);
        let mut d = fig5_entry();
        d.id = 8;
        d.meta.page_id = None;
        a.id = 1;
        b.id = 1;

        let run = |entries: &[&PinEntry], strict: bool| {
            let mut v = DatasetValidator::new(ValidationOptions { strict, ..opts() });
            for (i, e) in entries.iter().enumerate() {
                assert!(v.check(i, e).violations.is_empty());
            }
            v.finish()
        };
        let reports = run(&[&a, &b, &c, &d], true);
        let summary: Vec<(usize, Vec<ViolationCode>)> =
            reports.iter().map(|r| (r.ordinal, r.codes())).collect();
        use ViolationCode as C;
        assert_eq!(
            summary,
            vec![
                (0, vec![C::DuplicateId]),
                (1, vec![C::DuplicateId, C::DuplicatePage]),
                (2, vec![C::DuplicatePage]),
                (3, vec![C::PageIdNullMultipage]),
            ]
        );
        let lenient = run(&[&a, &b, &c, &d], false);
        assert!(lenient.iter().all(|r| !r.codes().contains(&C::DuplicateId)));

        // reversing the input reports the same violations
        let reversed = run(&[&d, &c, &b, &a], true);
        let mut flipped: Vec<(usize, Vec<ViolationCode>)> =
            reversed.iter().map(|r| (3 - r.ordinal, r.codes())).collect();
        flipped.sort();
        assert_eq!(flipped, summary);

        assert!(run(&[&fig5_entry()], true).is_empty());
    }
}
