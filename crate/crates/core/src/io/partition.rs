use std::collections::HashMap;
use std::fs::{self, File};
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::jsonl::{read_entries, write_entries, DecodeError};
use crate::model::{rewrite_image_paths, PinEntry, CONTENT_IMAGE_DIR, OVERALL_IMAGE_DIR};

/// Name of the manifest written at the dataset root.
pub const MANIFEST_FILE: &str = "manifest.json";

/// One part of a partitioned dataset. Paths are relative to the dataset root.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartInfo {
    pub name: String,
    pub jsonl_path: String,
    pub content_image_dir: String,
    pub overall_image_dir: String,
    pub entry_count: usize,
    /// False when writing the part was interrupted.
    pub complete: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionManifest {
    pub parts: Vec<PartInfo>,
    pub total_entries: usize,
}

#[derive(Debug, Clone, Default)]
pub struct PartitionOptions {
    /// Directory that the input image paths are relative to. When set, every
    /// referenced image is copied into its part; when unset, image files are
    /// assumed to be placed separately and paths are only normalized.
    pub source_root: Option<PathBuf>,
}

#[derive(Debug, Error)]
pub enum PartitionError {
    #[error("max_per_part must be at least 1")]
    ZeroPartSize,
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
        /// State of the dataset when writing stopped.
        manifest: Box<PartitionManifest>,
    },
    #[error("cannot read manifest {path}: {message}")]
    Manifest { path: PathBuf, message: String },
}

fn part_name(index: usize, count: usize) -> String {
    let width = count.saturating_sub(1).to_string().len().max(2);
    format!("part{index:0width$}")
}

/// Maps source image paths to unique file names inside one part directory.
#[derive(Default)]
struct NameTable {
    by_source: HashMap<String, String>,
    taken: HashMap<String, usize>,
}

impl NameTable {
    fn assign(&mut self, dir: &str, source: &str) -> String {
        if let Some(done) = self.by_source.get(source) {
            return done.clone();
        }
        let file = Path::new(source)
            .file_name()
            .map(|f| f.to_string_lossy().into_owned())
            .unwrap_or_else(|| "image".to_owned());
        let n = self.taken.entry(file.clone()).or_insert(0);
        let unique = if *n == 0 {
            file
        } else {
            let p = Path::new(&file);
            let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
            match p.extension() {
                Some(ext) => format!("{stem}-{n}.{}", ext.to_string_lossy()),
                None => format!("{stem}-{n}"),
            }
        };
        *n += 1;
        let rel = format!("{dir}/{unique}");
        self.by_source.insert(source.to_owned(), rel.clone());
        rel
    }
}

fn is_remote(path: &str) -> bool {
    path.contains("://") || path.starts_with("data:")
}

/// Rewrite an entry's local image paths to part-relative ones and return the
/// (source, destination) copies needed.
fn relocate(entry: &mut PinEntry, content: &mut NameTable, overall: &mut NameTable) -> Vec<(String, String)> {
    let mut copies = Vec::new();
    let mut mapping = HashMap::new();
    for src in &entry.content_image {
        if is_remote(src) {
            continue;
        }
        let dst = content.assign(CONTENT_IMAGE_DIR, src);
        copies.push((src.clone(), dst.clone()));
        mapping.insert(src.clone(), dst);
    }
    entry.md = rewrite_image_paths(&entry.md, |_, p| mapping.get(p).cloned());
    for p in entry.content_image.iter_mut() {
        if let Some(new) = mapping.get(p) {
            *p = new.clone();
        }
    }
    for p in entry.overall_image.paths.iter_mut() {
        if is_remote(p) {
            continue;
        }
        let dst = overall.assign(OVERALL_IMAGE_DIR, p);
        copies.push((p.clone(), dst.clone()));
        *p = dst;
    }
    copies
}

fn write_manifest(root: &Path, manifest: &PartitionManifest) -> io::Result<()> {
    let file = File::create(root.join(MANIFEST_FILE))?;
    serde_json::to_writer_pretty(BufWriter::new(file), manifest).map_err(io::Error::other)
}

/// Split `entries` in order into parts of at most `max_per_part` entries
/// under `root`, each with its own JSONL file and image directories, and
/// write `manifest.json`.
///
/// On a filesystem failure the manifest is still written, with the part in
/// progress marked incomplete, and returned inside the error.
pub fn partition_dataset<I>(
    entries: I,
    max_per_part: usize,
    root: &Path,
    options: &PartitionOptions,
) -> Result<PartitionManifest, PartitionError>
where
    I: IntoIterator<Item = PinEntry>,
{
    if max_per_part == 0 {
        return Err(PartitionError::ZeroPartSize);
    }
    let entries: Vec<PinEntry> = entries.into_iter().collect();
    let part_count = entries.len().div_ceil(max_per_part);
    let mut manifest = PartitionManifest { parts: Vec::new(), total_entries: 0 };

    let fail = |manifest: &PartitionManifest, path: PathBuf, source: io::Error| {
        let _ = write_manifest(root, manifest);
        PartitionError::Io { path, source, manifest: Box::new(manifest.clone()) }
    };

    fs::create_dir_all(root).map_err(|e| fail(&manifest, root.to_owned(), e))?;
    for (index, chunk) in entries.chunks(max_per_part).enumerate() {
        let name = part_name(index, part_count);
        let part = PartInfo {
            jsonl_path: format!("{name}/{name}.jsonl"),
            content_image_dir: format!("{name}/{CONTENT_IMAGE_DIR}"),
            overall_image_dir: format!("{name}/{OVERALL_IMAGE_DIR}"),
            name,
            entry_count: 0,
            complete: false,
        };
        manifest.parts.push(part.clone());
        for dir in [&part.content_image_dir, &part.overall_image_dir] {
            let path = root.join(dir);
            fs::create_dir_all(&path).map_err(|e| fail(&manifest, path, e))?;
        }

        let mut content_names = NameTable::default();
        let mut overall_names = NameTable::default();
        let mut out = Vec::with_capacity(chunk.len());
        for entry in chunk {
            let mut entry = entry.clone();
            let copies = relocate(&mut entry, &mut content_names, &mut overall_names);
            if let Some(src_root) = &options.source_root {
                for (src, dst) in copies {
                    let from = src_root.join(&src);
                    fs::copy(&from, root.join(&part.name).join(&dst)).map_err(|e| fail(&manifest, from, e))?;
                }
            }
            out.push(entry);
        }

        let jsonl = root.join(&part.jsonl_path);
        let file = File::create(&jsonl).map_err(|e| fail(&manifest, jsonl.clone(), e))?;
        let written = write_entries(&out, BufWriter::new(file));
        let last = manifest.parts.last_mut().expect("pushed above");
        match written {
            Ok(n) => {
                last.entry_count = n;
                last.complete = true;
                manifest.total_entries += n;
            }
            Err(e) => {
                last.entry_count = e.written;
                manifest.total_entries += e.written;
                return Err(fail(&manifest, jsonl, e.source));
            }
        }
    }
    write_manifest(root, &manifest).map_err(|e| fail(&manifest, root.join(MANIFEST_FILE), e))?;
    Ok(manifest)
}

pub fn load_manifest(root: &Path) -> Result<PartitionManifest, PartitionError> {
    let path = root.join(MANIFEST_FILE);
    let err = |message: String| PartitionError::Manifest { path: path.clone(), message };
    let file = File::open(&path).map_err(|e| err(e.to_string()))?;
    serde_json::from_reader(BufReader::new(file)).map_err(|e| err(e.to_string()))
}

/// Read every part of a partitioned dataset in manifest order.
pub fn read_partitioned(
    root: &Path,
) -> Result<impl Iterator<Item = Result<PinEntry, DecodeError>>, PartitionError> {
    let manifest = load_manifest(root)?;
    let mut readers = Vec::with_capacity(manifest.parts.len());
    for part in &manifest.parts {
        let path = root.join(&part.jsonl_path);
        let file = File::open(&path).map_err(|source| PartitionError::Io {
            path,
            source,
            manifest: Box::new(manifest.clone()),
        })?;
        readers.push(read_entries(BufReader::new(file)));
    }
    Ok(readers.into_iter().flatten())
}
