//! Overall-image rendering through an external rasterizer command.
//!
//! The entry's markdown is written as a standalone HTML file next to the
//! dataset root (so relative image paths resolve), the configured command is
//! run with `{input}` and `{output}` substituted, and a valid PNG output is
//! moved to `overall_image/<stem>.png`.

mod html;

use std::fmt;
use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::{Command, Stdio};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::thread;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{DocId, OiSource, OverallImage, PinEntry, OVERALL_IMAGE_DIR};

pub use html::{markdown_to_html, Theme};

pub const PNG_SIGNATURE: [u8; 8] = [0x89, b'P', b'N', b'G', 0x0D, 0x0A, 0x1A, 0x0A];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Png,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RendererConfig {
    /// Command line with `{input}` (HTML file) and `{output}` (image file)
    /// placeholders, split with POSIX shell quoting rules.
    pub command: String,
    #[serde(default)]
    pub format: OutputFormat,
    #[serde(default = "default_timeout", with = "secs")]
    pub timeout: Duration,
    #[serde(default)]
    pub theme: Theme,
    /// Re-render entries that already have an overall image.
    #[serde(default)]
    pub force: bool,
}

fn default_timeout() -> Duration {
    Duration::from_secs(60)
}

mod secs {
    use std::time::Duration;

    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(d: &Duration, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_f64(d.as_secs_f64())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Duration, D::Error> {
        let v = f64::deserialize(d)?;
        Duration::try_from_secs_f64(v).map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ConfigError {
    #[error("renderer command is missing the {0} placeholder")]
    MissingPlaceholder(&'static str),
    #[error("renderer command has unbalanced quotes")]
    BadQuoting,
    #[error("renderer command is empty")]
    Empty,
}

impl RendererConfig {
    pub fn new(command: impl Into<String>) -> Self {
        Self {
            command: command.into(),
            format: OutputFormat::Png,
            timeout: default_timeout(),
            theme: Theme::GfmLight,
            force: false,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        for p in ["{input}", "{output}"] {
            if !self.command.contains(p) {
                return Err(ConfigError::MissingPlaceholder(p));
            }
        }
        match shlex::split(&self.command) {
            None => Err(ConfigError::BadQuoting),
            Some(argv) if argv.is_empty() => Err(ConfigError::Empty),
            Some(_) => Ok(()),
        }
    }

    fn argv(&self, input: &Path, output: &Path) -> Result<Vec<String>, ConfigError> {
        self.validate()?;
        let (input, output) = (input.to_string_lossy(), output.to_string_lossy());
        Ok(shlex::split(&self.command)
            .expect("validated")
            .into_iter()
            .map(|arg| arg.replace("{input}", &input).replace("{output}", &output))
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum RenderErrorKind {
    InvalidConfig,
    EmptyMarkdown,
    Spawn,
    NonzeroExit,
    Timeout,
    MissingOutput,
    EmptyOutput,
    InvalidOutput,
    Io,
}

impl fmt::Display for RenderErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().expect("string"))
    }
}

/// Why one entry could not be rendered, with the command's captured output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RenderFailure {
    pub id: u64,
    pub doc_id: DocId,
    pub page_id: Option<i64>,
    pub kind: RenderErrorKind,
    pub message: String,
    pub exit_code: Option<i32>,
    pub stdout: String,
    pub stderr: String,
}

impl fmt::Display for RenderFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "entry {}: {}: {}", self.id, self.kind, self.message)
    }
}

#[derive(Debug)]
struct Failure {
    kind: RenderErrorKind,
    message: String,
    exit_code: Option<i32>,
    stdout: String,
    stderr: String,
}

impl Failure {
    fn new(kind: RenderErrorKind, message: impl Into<String>) -> Self {
        Self { kind, message: message.into(), exit_code: None, stdout: String::new(), stderr: String::new() }
    }

    fn io(e: io::Error, what: &str) -> Self {
        Self::new(RenderErrorKind::Io, format!("{what}: {e}"))
    }
}

/// True when the entry should be rendered: it has no overall image yet, or
/// `force` is set.
pub fn needs_render(entry: &PinEntry, force: bool) -> bool {
    force || !entry.meta.oi_exist || entry.overall_image.is_empty()
}

type Captured = Arc<Mutex<Vec<u8>>>;

fn drain<R: Read + Send + 'static>(pipe: Option<R>) -> (Captured, thread::JoinHandle<()>) {
    let buf: Captured = Arc::default();
    let sink = Arc::clone(&buf);
    let handle = thread::spawn(move || {
        let Some(mut p) = pipe else { return };
        let mut chunk = [0u8; 8192];
        while let Ok(n @ 1..) = p.read(&mut chunk) {
            sink.lock().expect("capture buffer").extend_from_slice(&chunk[..n]);
        }
    });
    (buf, handle)
}

/// Collect captured output, waiting briefly for the readers to hit EOF. A
/// process left behind by the renderer may hold the pipes open, so the
/// readers are not joined unconditionally.
fn collect(streams: [(Captured, thread::JoinHandle<()>); 2]) -> (String, String) {
    let deadline = Instant::now() + Duration::from_millis(500);
    while streams.iter().any(|(_, h)| !h.is_finished()) && Instant::now() < deadline {
        thread::sleep(Duration::from_millis(2));
    }
    let [out, err] = streams.map(|(buf, _)| String::from_utf8_lossy(&buf.lock().expect("capture buffer")).into_owned());
    (out, err)
}

fn run_command(argv: &[String], timeout: Duration) -> Result<(String, String), Failure> {
    let mut child = Command::new(&argv[0])
        .args(&argv[1..])
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Failure::new(RenderErrorKind::Spawn, format!("cannot run `{}`: {e}", argv[0])))?;
    let streams = [drain(child.stdout.take()), drain(child.stderr.take())];
    let start = Instant::now();
    let status = loop {
        match child.try_wait() {
            Ok(Some(status)) => break Some(status),
            Ok(None) if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                break None;
            }
            Ok(None) => thread::sleep(Duration::from_millis(5)),
            Err(e) => return Err(Failure::io(e, "waiting for renderer")),
        }
    };
    let (stdout, stderr) = collect(streams);
    let fail = |kind, message: String, exit_code| Failure { kind, message, exit_code, stdout: stdout.clone(), stderr: stderr.clone() };
    match status {
        None => Err(fail(RenderErrorKind::Timeout, format!("no result after {:.1}s", timeout.as_secs_f64()), None)),
        Some(s) if !s.success() => Err(fail(RenderErrorKind::NonzeroExit, format!("renderer exited with {s}"), s.code())),
        Some(_) => Ok((stdout, stderr)),
    }
}

fn render_one(entry: &PinEntry, cfg: &RendererConfig, root: &Path) -> Result<String, Failure> {
    if entry.md.trim().is_empty() {
        return Err(Failure::new(RenderErrorKind::EmptyMarkdown, "entry has no markdown"));
    }
    let html = markdown_to_html(&entry.md, cfg.theme);
    fs::create_dir_all(root).map_err(|e| Failure::io(e, "creating dataset root"))?;
    let mut page = tempfile::Builder::new()
        .prefix(".render-")
        .suffix(".html")
        .tempfile_in(root)
        .map_err(|e| Failure::io(e, "creating HTML file"))?;
    io::Write::write_all(&mut page, html.as_bytes()).map_err(|e| Failure::io(e, "writing HTML file"))?;
    let scratch = tempfile::Builder::new()
        .prefix(".render-")
        .tempdir_in(root)
        .map_err(|e| Failure::io(e, "creating output directory"))?;
    let produced = scratch.path().join("out.png");
    let argv = cfg
        .argv(page.path(), &produced)
        .map_err(|e| Failure::new(RenderErrorKind::InvalidConfig, e.to_string()))?;
    let (stdout, stderr) = run_command(&argv, cfg.timeout)?;
    let fail = |kind, message: &str| Failure {
        kind,
        message: message.to_owned(),
        exit_code: Some(0),
        stdout: stdout.clone(),
        stderr: stderr.clone(),
    };

    let mut head = Vec::with_capacity(8);
    match fs::File::open(&produced) {
        Err(_) => return Err(fail(RenderErrorKind::MissingOutput, "renderer produced no output file")),
        Ok(f) => f.take(8).read_to_end(&mut head).map_err(|e| Failure::io(e, "reading output"))?,
    };
    if head.len() < PNG_SIGNATURE.len() {
        return Err(fail(RenderErrorKind::EmptyOutput, "output is too short to be an image"));
    }
    if head != PNG_SIGNATURE {
        return Err(fail(RenderErrorKind::InvalidOutput, "output is not a PNG file"));
    }

    let rel = format!("{OVERALL_IMAGE_DIR}/{}.png", entry.image_stem());
    let dest = root.join(&rel);
    if let Some(dir) = dest.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::io(e, "creating overall_image directory"))?;
    }
    if fs::rename(&produced, &dest).is_err() {
        fs::copy(&produced, &dest).map_err(|e| Failure::io(e, "moving output"))?;
    }
    Ok(rel)
}

/// Result of rendering one entry. On failure `entry` is the input unchanged.
#[derive(Debug, Clone)]
pub struct RenderOutcome {
    pub entry: PinEntry,
    pub failure: Option<RenderFailure>,
}

/// Render one entry's overall image into `root/overall_image/`.
///
/// On success the entry points at the new image with `oi_exist` true and
/// `oi_source` `compiling`; `md` and `content_image` are never touched.
pub fn render_overall_image(entry: PinEntry, cfg: &RendererConfig, root: &Path) -> RenderOutcome {
    match render_one(&entry, cfg, root) {
        Ok(rel) => {
            let mut entry = entry;
            entry.overall_image = OverallImage::single(rel);
            entry.meta.oi_exist = true;
            entry.meta.oi_source = OiSource::Compiling;
            RenderOutcome { entry, failure: None }
        }
        Err(f) => {
            let failure = RenderFailure {
                id: entry.id,
                doc_id: entry.meta.doc_id.clone(),
                page_id: entry.meta.page_id,
                kind: f.kind,
                message: f.message,
                exit_code: f.exit_code,
                stdout: f.stdout,
                stderr: f.stderr,
            };
            log::warn!("{failure}");
            RenderOutcome { entry, failure: Some(failure) }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct BatchReport {
    /// Entries in input order, rendered or not.
    pub entries: Vec<PinEntry>,
    pub failures: Vec<RenderFailure>,
    pub rendered: usize,
    /// Entries that already had an overall image.
    pub skipped: usize,
}

/// Render every entry that needs it with at most `jobs` concurrent commands.
/// A failed entry never stops the batch.
pub fn render_batch(entries: Vec<PinEntry>, cfg: &RendererConfig, root: &Path, jobs: usize) -> BatchReport {
    let total = entries.len();
    let slots: Vec<Mutex<Option<PinEntry>>> = entries.into_iter().map(|e| Mutex::new(Some(e))).collect();
    let failures = Mutex::new(Vec::new());
    let rendered = AtomicUsize::new(0);
    let skipped = AtomicUsize::new(0);
    let next = AtomicUsize::new(0);
    thread::scope(|s| {
        for _ in 0..jobs.clamp(1, total.max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(slot) = slots.get(i) else { break };
                let entry = slot.lock().expect("slot").take().expect("each slot taken once");
                let entry = if needs_render(&entry, cfg.force) {
                    let out = render_overall_image(entry, cfg, root);
                    match out.failure {
                        Some(f) => failures.lock().expect("failures").push(f),
                        None => {
                            rendered.fetch_add(1, Ordering::Relaxed);
                        }
                    }
                    out.entry
                } else {
                    skipped.fetch_add(1, Ordering::Relaxed);
                    entry
                };
                *slot.lock().expect("slot") = Some(entry);
            });
        }
    });
    let mut failures = failures.into_inner().expect("failures");
    failures.sort_by_key(|f| f.id);
    BatchReport {
        entries: slots.into_iter().map(|s| s.into_inner().expect("slot").expect("filled")).collect(),
        failures,
        rendered: rendered.into_inner(),
        skipped: skipped.into_inner(),
    }
}

/// Location of the output for an entry rendered under `root`.
pub fn overall_image_path(root: &Path, entry: &PinEntry) -> PathBuf {
    root.join(OVERALL_IMAGE_DIR).join(format!("{}.png", entry.image_stem()))
}

#[cfg(all(test, unix))]
mod tests {
    use super::*;
    use crate::test_support::fig5_entry;

    fn unrendered(id: u64) -> PinEntry {
        let mut e = fig5_entry();
        e.id = id;
        e.meta.doc_id = DocId::Int(id as i64);
        e.meta.oi_exist = false;
        e.overall_image = OverallImage::default();
        e
    }

    fn sh(script: &str) -> RendererConfig {
        RendererConfig::new(format!("sh -c {} sh {{input}} {{output}}", shlex::try_quote(script).unwrap()))
    }

    const WRITE_PNG: &str = r#"printf '\211PNG\r\n\032\n....' > "$2""#;

    #[test]
    fn config_validation() {
        assert_eq!(RendererConfig::new("r {input}").validate(), Err(ConfigError::MissingPlaceholder("{output}")));
        assert_eq!(RendererConfig::new("r {output}").validate(), Err(ConfigError::MissingPlaceholder("{input}")));
        assert_eq!(RendererConfig::new("r '{input} {output}").validate(), Err(ConfigError::BadQuoting));
        assert!(RendererConfig::new("r --in={input} -o {output}").validate().is_ok());
        let argv = RendererConfig::new("r --in={input} '{output}'")
            .argv(Path::new("/a b/x.html"), Path::new("/o.png"))
            .unwrap();
        assert_eq!(argv, vec!["r", "--in=/a b/x.html", "/o.png"]);
    }

    #[test]
    fn valid_png_attaches_overall_image() {
        let dir = tempfile::tempdir().unwrap();
        let e = unrendered(1997);
        let out = render_overall_image(e.clone(), &sh(WRITE_PNG), dir.path());
        assert!(out.failure.is_none(), "{:?}", out.failure);
        assert!(out.entry.meta.oi_exist);
        assert_eq!(out.entry.meta.oi_source, OiSource::Compiling);
        assert_eq!(out.entry.overall_image.paths, vec!["overall_image/1997-0.png"]);
        assert_eq!(out.entry.md, e.md);
        assert_eq!(out.entry.content_image, e.content_image);
        assert!(overall_image_path(dir.path(), &out.entry).is_file());
        // only the image remains; scratch files are gone
        let names: Vec<_> = fs::read_dir(dir.path()).unwrap().map(|d| d.unwrap().file_name()).collect();
        assert_eq!(names, vec!["overall_image"]);
    }

    #[test]
    fn html_input_is_the_rendered_markdown() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = sh(r#"cp "$1" "$1.seen"; printf '\211PNG\r\n\032\n' > "$2""#);
        let e = unrendered(5);
        render_overall_image(e.clone(), &cfg, dir.path());
        let seen = fs::read_dir(dir.path())
            .unwrap()
            .map(|d| d.unwrap().path())
            .find(|p| p.to_string_lossy().ends_with(".seen"))
            .unwrap();
        assert_eq!(fs::read_to_string(seen).unwrap(), markdown_to_html(&e.md, Theme::GfmLight));
    }

    #[test]
    fn failure_kinds() {
        let dir = tempfile::tempdir().unwrap();
        let cases = [
            (sh(r#"printf x > "$2""#), RenderErrorKind::EmptyOutput),
            (sh(r#"printf 'GIF89a-not-png' > "$2""#), RenderErrorKind::InvalidOutput),
            (sh("true"), RenderErrorKind::MissingOutput),
            (sh("echo boom >&2; exit 3"), RenderErrorKind::NonzeroExit),
            (RendererConfig::new("/nonexistent/renderer {input} {output}"), RenderErrorKind::Spawn),
            (RendererConfig { timeout: Duration::from_millis(200), ..sh("sleep 5") }, RenderErrorKind::Timeout),
        ];
        for (cfg, kind) in cases {
            let e = unrendered(1);
            let out = render_overall_image(e.clone(), &cfg, dir.path());
            let f = out.failure.expect("failure");
            assert_eq!(f.kind, kind);
            assert_eq!(out.entry, e);
            assert!(!out.entry.meta.oi_exist);
            if kind == RenderErrorKind::NonzeroExit {
                assert_eq!(f.exit_code, Some(3));
                assert_eq!(f.stderr, "boom\n");
            }
        }
        let mut empty = unrendered(2);
        empty.md = "  ".into();
        let out = render_overall_image(empty, &sh(WRITE_PNG), dir.path());
        assert_eq!(out.failure.unwrap().kind, RenderErrorKind::EmptyMarkdown);
    }

    #[test]
    fn batch_isolates_failures_and_skips_existing_images() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = sh(r#"if grep -q FAIL "$1"; then exit 1; fi; printf '\211PNG\r\n\032\n' > "$2""#);
        let mut entries: Vec<PinEntry> = (0..20).map(unrendered).collect();
        for e in entries.iter_mut().step_by(5) {
            e.md.push_str("\n\nFAIL");
        }
        let mut original = fig5_entry();
        original.id = 99;
        original.meta.oi_source = OiSource::Ori;
        entries.push(original.clone());

        let report = render_batch(entries.clone(), &cfg, dir.path(), 4);
        assert_eq!(report.rendered, 16);
        assert_eq!(report.failures.len(), 4);
        assert_eq!(report.skipped, 1);
        assert_eq!(report.failures.iter().map(|f| f.id).collect::<Vec<_>>(), vec![0, 5, 10, 15]);
        assert_eq!(report.entries.iter().map(|e| e.id).collect::<Vec<_>>(), entries.iter().map(|e| e.id).collect::<Vec<_>>());
        assert_eq!(report.entries[20], original);

        let forced = render_batch(vec![original], &RendererConfig { force: true, ..cfg }, dir.path(), 1);
        assert_eq!(forced.rendered, 1);
        assert_eq!(forced.entries[0].meta.oi_source, OiSource::Compiling);
    }
}
