use std::collections::HashMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;
use std::time::Duration;

use thiserror::Error;

use super::Draft;
use crate::model::{parse_modal_sequence, ModalUnit, PinEntry};

#[derive(Debug, Error)]
pub enum FetchError {
    #[error("{origin}: {source}")]
    Io {
        origin: String,
        #[source]
        source: io::Error,
    },
    #[error("{origin}: {message}")]
    Http { origin: String, message: String },
    #[error("{0}: no fetcher handles this location")]
    Unsupported(String),
}

/// Resolves an image location to its bytes.
pub trait Fetcher: Send + Sync {
    fn fetch(&self, origin: &str) -> Result<Vec<u8>, FetchError>;
}

/// Reads local files; relative paths and `file://` URLs resolve against `root`.
#[derive(Debug, Clone)]
pub struct LocalFetcher {
    pub root: PathBuf,
}

impl LocalFetcher {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }
}

impl Fetcher for LocalFetcher {
    fn fetch(&self, origin: &str) -> Result<Vec<u8>, FetchError> {
        if origin.contains("://") && !origin.starts_with("file://") {
            return Err(FetchError::Unsupported(origin.to_owned()));
        }
        let path = Path::new(origin.strip_prefix("file://").unwrap_or(origin));
        fs::read(self.root.join(path)).map_err(|source| FetchError::Io { origin: origin.to_owned(), source })
    }
}

/// Downloads over HTTP(S) with a per-request timeout and bounded retries.
#[derive(Debug, Clone)]
pub struct HttpFetcher {
    agent: ureq::Agent,
    retries: u32,
    backoff: Duration,
    max_bytes: u64,
}

impl HttpFetcher {
    pub fn new(timeout: Duration, retries: u32) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .http_status_as_error(true)
            .build()
            .into();
        Self { agent, retries, backoff: Duration::from_millis(250), max_bytes: 64 << 20 }
    }

    fn attempt(&self, url: &str) -> Result<Vec<u8>, (bool, String)> {
        match self.agent.get(url).call() {
            Ok(mut resp) => resp
                .body_mut()
                .with_config()
                .limit(self.max_bytes)
                .read_to_vec()
                .map_err(|e| (true, e.to_string())),
            // client errors will not improve on retry
            Err(ureq::Error::StatusCode(code)) => Err(((500..600).contains(&code) || code == 429, format!("HTTP {code}"))),
            Err(e) => Err((true, e.to_string())),
        }
    }
}

impl Fetcher for HttpFetcher {
    fn fetch(&self, origin: &str) -> Result<Vec<u8>, FetchError> {
        if !(origin.starts_with("http://") || origin.starts_with("https://")) {
            return Err(FetchError::Unsupported(origin.to_owned()));
        }
        let mut attempt = 0;
        loop {
            match self.attempt(origin) {
                Ok(bytes) => return Ok(bytes),
                Err((retry, message)) => {
                    if !retry || attempt >= self.retries {
                        return Err(FetchError::Http { origin: origin.to_owned(), message });
                    }
                    thread::sleep(self.backoff * 2u32.pow(attempt));
                    attempt += 1;
                }
            }
        }
    }
}

/// HTTP(S) URLs go to the HTTP fetcher, everything else to the local one.
#[derive(Debug, Clone)]
pub struct AutoFetcher {
    pub local: LocalFetcher,
    pub http: HttpFetcher,
}

impl Fetcher for AutoFetcher {
    fn fetch(&self, origin: &str) -> Result<Vec<u8>, FetchError> {
        if origin.starts_with("http://") || origin.starts_with("https://") {
            self.http.fetch(origin)
        } else {
            self.local.fetch(origin)
        }
    }
}

/// What to do with an image that could not be fetched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FailurePolicy {
    /// Remove the image tag.
    #[default]
    Drop,
    /// Replace the tag with its original location as plain text.
    KeepAsText,
    /// Fail the whole entry.
    Fail,
}

#[derive(Debug, Clone, Copy)]
pub struct LocalizeOptions {
    pub policy: FailurePolicy,
    /// Maximum concurrent fetches.
    pub concurrency: usize,
}

impl Default for LocalizeOptions {
    fn default() -> Self {
        Self { policy: FailurePolicy::Drop, concurrency: 8 }
    }
}

#[derive(Debug, Error)]
pub enum LocalizeError {
    #[error("fetch failed: {0}")]
    Fetch(#[from] FetchError),
    #[error("cannot write {path}: {source}")]
    Write {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

/// File extension for image bytes, from their signature; `png` when unknown.
pub fn sniff_extension(bytes: &[u8]) -> &'static str {
    let head = &bytes[..bytes.len().min(512)];
    let text = String::from_utf8_lossy(head);
    match bytes {
        [0x89, b'P', b'N', b'G', ..] => "png",
        [0xFF, 0xD8, 0xFF, ..] => "jpg",
        [b'G', b'I', b'F', b'8', ..] => "gif",
        [b'R', b'I', b'F', b'F', _, _, _, _, b'W', b'E', b'B', b'P', ..] => "webp",
        [b'B', b'M', ..] => "bmp",
        [b'I', b'I', 0x2A, 0x00, ..] | [b'M', b'M', 0x00, 0x2A, ..] => "tiff",
        _ if text.trim_start().starts_with("<svg") || (text.trim_start().starts_with("<?xml") && text.contains("<svg")) => {
            "svg"
        }
        _ => "png",
    }
}

type Fetched = Result<Vec<u8>, FetchError>;

fn fetch_all(fetcher: &dyn Fetcher, origins: &[&str], concurrency: usize) -> Vec<Fetched> {
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Fetched>>> =
        Mutex::new((0..origins.len()).map(|_| None).collect());
    let workers = concurrency.clamp(1, origins.len().max(1));
    thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(origin) = origins.get(i) else { break };
                let r = fetcher.fetch(origin);
                results.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    results
        .into_inner()
        .expect("workers finished")
        .into_iter()
        .map(|r| r.expect("every index fetched"))
        .collect()
}

/// Fetch a draft's pending images into `root/content_image/`, fixing file
/// extensions from the fetched bytes, and return the finished entry.
///
/// Output names depend only on image order, never on fetch completion order.
pub fn localize_images(
    draft: Draft,
    fetcher: &dyn Fetcher,
    root: &Path,
    options: &LocalizeOptions,
) -> Result<PinEntry, LocalizeError> {
    let Draft { mut entry, pending, .. } = draft;
    if pending.is_empty() {
        return Ok(entry);
    }
    let origins: Vec<&str> = pending.iter().map(|p| p.origin.as_str()).collect();
    let fetched = fetch_all(fetcher, &origins, options.concurrency);

    // local path -> final path (None when the fetch failed)
    let mut outcome: HashMap<&str, Option<String>> = HashMap::new();
    for (p, result) in pending.iter().zip(fetched) {
        match result {
            Ok(bytes) => {
                let ext = sniff_extension(&bytes);
                let fixed = match p.local.rsplit_once('.') {
                    Some((base, _)) => format!("{base}.{ext}"),
                    None => format!("{}.{ext}", p.local),
                };
                let dest = root.join(&fixed);
                if let Some(dir) = dest.parent() {
                    fs::create_dir_all(dir).map_err(|source| LocalizeError::Write { path: dir.to_owned(), source })?;
                }
                fs::write(&dest, &bytes).map_err(|source| LocalizeError::Write { path: dest.clone(), source })?;
                outcome.insert(&p.local, Some(fixed));
            }
            Err(e) if options.policy == FailurePolicy::Fail => return Err(e.into()),
            Err(e) => {
                log::warn!("entry {}: {e}", entry.id);
                outcome.insert(&p.local, None);
            }
        }
    }

    let origin_of: HashMap<&str, &str> = pending.iter().map(|p| (p.local.as_str(), p.origin.as_str())).collect();
    let mut md = String::with_capacity(entry.md.len());
    for unit in parse_modal_sequence(&entry.md).units {
        match unit {
            ModalUnit::Image(img) => match outcome.get(img.path.as_str()) {
                Some(Some(fixed)) => md.push_str(&img.with_path(fixed).markup),
                Some(None) => {
                    let lead = img.markup.len() - img.markup.trim_start().len();
                    md.push_str(&img.markup[..lead]);
                    if options.policy == FailurePolicy::KeepAsText {
                        md.push_str(origin_of[img.path.as_str()]);
                        md.push_str(&img.markup[img.markup.trim_end().len()..]);
                    }
                }
                None => md.push_str(&img.markup),
            },
            ModalUnit::Text(t) => md.push_str(&t.content),
        }
    }
    entry.md = md;
    entry.content_image = entry
        .content_image
        .iter()
        .filter_map(|p| match outcome.get(p.as_str()) {
            Some(fixed) => fixed.clone(),
            None => Some(p.clone()),
        })
        .collect();
    Ok(entry)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::convert::{from_interleaved_list, ConvertOptions, InterleavedItem, InterleavedListDoc};
    use crate::io::{validate_entry, ValidationOptions};
    use crate::model::{extract_image_refs, DocId};

    const PNG: &[u8] = b"\x89PNG\r\n\x1a\n0000";
    const JPG: &[u8] = b"\xFF\xD8\xFF\xE0rest";

    /// Serves fixed bytes per origin; other origins fail.
    struct MapFetcher(HashMap<&'static str, &'static [u8]>);

    impl Fetcher for MapFetcher {
        fn fetch(&self, origin: &str) -> Result<Vec<u8>, FetchError> {
            self.0
                .get(origin)
                .map(|b| b.to_vec())
                .ok_or_else(|| FetchError::Http { origin: origin.into(), message: "404".into() })
        }
    }

    fn draft(urls: &[&str]) -> Draft {
        let mut items = vec![InterleavedItem::Text("a".into())];
        for u in urls {
            items.push(InterleavedItem::Image(Some((*u).into())));
            items.push(InterleavedItem::Text("b".into()));
        }
        let opts = ConvertOptions { date_download: "2024-03-01".into(), ..ConvertOptions::new(1, DocId::Int(1997)) };
        from_interleaved_list(&InterleavedListDoc { items, metadata: serde_json::json!({}) }, &opts).unwrap()
    }

    fn fetcher() -> MapFetcher {
        MapFetcher(HashMap::from([("http://h/a", PNG), ("http://h/b", JPG)]))
    }

    #[test]
    fn sniffing() {
        assert_eq!(sniff_extension(PNG), "png");
        assert_eq!(sniff_extension(JPG), "jpg");
        assert_eq!(sniff_extension(b"GIF89a..."), "gif");
        assert_eq!(sniff_extension(b"RIFF\0\0\0\0WEBPVP8 "), "webp");
        assert_eq!(sniff_extension(b"  <svg xmlns='x'/>"), "svg");
        assert_eq!(sniff_extension(b"???"), "png");
        assert_eq!(sniff_extension(b""), "png");
    }

    #[test]
    fn no_pending_images_is_identity() {
        let d = draft(&[]);
        let before = d.entry.clone();
        let dir = tempfile::tempdir().unwrap();
        assert_eq!(localize_images(d, &fetcher(), dir.path(), &LocalizeOptions::default()).unwrap(), before);
    }

    #[test]
    fn two_images_named_by_ordinal() {
        let dir = tempfile::tempdir().unwrap();
        let e = localize_images(draft(&["http://h/a", "http://h/b"]), &fetcher(), dir.path(), &LocalizeOptions::default())
            .unwrap();
        assert_eq!(e.content_image, vec!["content_image/1997-0.png", "content_image/1997-1.jpg"]);
        assert_eq!(extract_image_refs(&e.md), e.content_image);
        assert_eq!(fs::read(dir.path().join("content_image/1997-1.jpg")).unwrap(), JPG);
        let o = ValidationOptions { check_files: true, root: dir.path().to_owned(), ..Default::default() };
        assert!(validate_entry(&e, &o).accepted());
    }

    #[test]
    fn failure_policies() {
        let dir = tempfile::tempdir().unwrap();
        let run = |policy| {
            let opts = LocalizeOptions { policy, concurrency: 2 };
            localize_images(draft(&["http://h/a", "http://h/missing"]), &fetcher(), dir.path(), &opts)
        };
        let dropped = run(FailurePolicy::Drop).unwrap();
        assert_eq!(dropped.md, "a\n\n<img src='content_image/1997-0.png'>\n\nb\n\nb");
        assert_eq!(dropped.content_image, vec!["content_image/1997-0.png"]);

        let kept = run(FailurePolicy::KeepAsText).unwrap();
        assert_eq!(kept.md, "a\n\n<img src='content_image/1997-0.png'>\n\nb\n\nhttp://h/missing\n\nb");
        assert_eq!(kept.content_image, vec!["content_image/1997-0.png"]);
        for e in [&dropped, &kept] {
            assert!(validate_entry(e, &ValidationOptions::default()).accepted());
        }

        assert!(matches!(run(FailurePolicy::Fail), Err(LocalizeError::Fetch(_))));
    }

    #[test]
    fn naming_is_independent_of_concurrency() {
        let urls: Vec<String> = (0..40).map(|i| format!("http://h/{}", if i % 3 == 0 { "b" } else { "a" })).collect();
        let refs: Vec<&str> = urls.iter().map(String::as_str).collect();
        let one = tempfile::tempdir().unwrap();
        let many = tempfile::tempdir().unwrap();
        let serial = localize_images(draft(&refs), &fetcher(), one.path(), &LocalizeOptions { concurrency: 1, ..Default::default() }).unwrap();
        let parallel = localize_images(draft(&refs), &fetcher(), many.path(), &LocalizeOptions { concurrency: 16, ..Default::default() }).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn local_fetcher() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("x.png"), PNG).unwrap();
        let f = LocalFetcher::new(dir.path());
        assert_eq!(f.fetch("x.png").unwrap(), PNG);
        assert_eq!(f.fetch("file://x.png").unwrap(), PNG);
        assert!(matches!(f.fetch("missing.png"), Err(FetchError::Io { .. })));
        assert!(matches!(f.fetch("https://h/x"), Err(FetchError::Unsupported(_))));
    }

    #[test]
    fn http_fetcher_rejects_other_schemes_and_unreachable_hosts() {
        let f = HttpFetcher::new(Duration::from_millis(500), 0);
        assert!(matches!(f.fetch("ftp://h/x"), Err(FetchError::Unsupported(_))));
        // port 9 on localhost is closed in the test environment
        assert!(matches!(f.fetch("http://127.0.0.1:9/x.png"), Err(FetchError::Http { .. })));
    }
}
