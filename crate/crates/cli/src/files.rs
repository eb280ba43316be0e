use std::fs::File;
use std::io::{self, BufRead, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use pin_forge::io::{read_entries, DecodeError, EntryReader};
use pin_forge::PinEntry;

use crate::error::CliError;

pub fn is_stdio(path: &Path) -> bool {
    path.as_os_str() == "-"
}

pub fn open_input(path: &Path) -> Result<Box<dyn BufRead + Send>, CliError> {
    if is_stdio(path) {
        return Ok(Box::new(BufReader::new(io::stdin())));
    }
    let file = File::open(path).map_err(|e| CliError::io(format!("cannot open {}: {e}", path.display())))?;
    Ok(Box::new(BufReader::with_capacity(1 << 20, file)))
}

pub fn read_input(path: &Path) -> Result<String, CliError> {
    let mut text = String::new();
    open_input(path)?
        .read_to_string(&mut text)
        .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
    Ok(text)
}

pub fn entries(path: &Path, strict: bool) -> Result<EntryReader<Box<dyn BufRead + Send>>, CliError> {
    Ok(read_entries(open_input(path)?).strict(strict))
}

/// Output destination; a sink that discards everything in dry-run mode.
pub fn create_output(path: &Path, dry_run: bool) -> Result<Box<dyn Write>, CliError> {
    if dry_run {
        return Ok(Box::new(io::sink()));
    }
    if is_stdio(path) {
        return Ok(Box::new(BufWriter::new(io::stdout())));
    }
    let file = File::create(path).map_err(|e| CliError::io(format!("cannot create {}: {e}", path.display())))?;
    Ok(Box::new(BufWriter::with_capacity(1 << 20, file)))
}

/// Directory that relative paths in `path`'s records resolve against.
pub fn parent_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() && !is_stdio(path) => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

/// Iterator adapter that stops at the first decode error and keeps it.
pub struct UntilError<I> {
    inner: I,
    pub error: Option<DecodeError>,
}

impl<I> UntilError<I> {
    pub fn new(inner: I) -> Self {
        Self { inner, error: None }
    }

    pub fn finish(self) -> Result<(), CliError> {
        self.error.map_or(Ok(()), |e| Err(e.into()))
    }
}

impl<I: Iterator<Item = Result<PinEntry, DecodeError>>> Iterator for UntilError<&mut I> {
    type Item = PinEntry;

    fn next(&mut self) -> Option<PinEntry> {
        if self.error.is_some() {
            return None;
        }
        match self.inner.next()? {
            Ok(e) => Some(e),
            Err(e) => {
                self.error = Some(e);
                None
            }
        }
    }
}
