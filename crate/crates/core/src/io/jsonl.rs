use std::borrow::Borrow;
use std::io::{self, BufRead, Write};

use thiserror::Error;

use crate::model::PinEntry;

#[derive(Debug, Error)]
pub enum DecodeErrorKind {
    #[error("read failed: {0}")]
    Io(#[from] io::Error),
    #[error("line is not valid UTF-8")]
    Utf8,
    #[error("{0}")]
    Json(#[from] serde_json::Error),
    #[error("unknown keys: {}", .0.join(", "))]
    UnknownKeys(Vec<String>),
}

/// A line that did not decode. `line` is 1-based.
#[derive(Debug, Error)]
#[error("line {line}: {kind}")]
pub struct DecodeError {
    pub line: usize,
    pub kind: DecodeErrorKind,
}

/// Decode one JSONL line. In strict mode keys outside the schema are an error.
pub fn decode_line(line_no: usize, line: &str, strict: bool) -> Result<PinEntry, DecodeError> {
    let err = |kind| DecodeError { line: line_no, kind };
    let entry = PinEntry::from_json(line).map_err(|e| err(e.into()))?;
    if strict {
        let unknown = entry.unknown_keys();
        if !unknown.is_empty() {
            return Err(err(DecodeErrorKind::UnknownKeys(unknown)));
        }
    }
    Ok(entry)
}

/// Lazy iterator over the entries of a JSONL stream.
///
/// Blank lines are skipped and a trailing CR is tolerated. A line that fails
/// to decode yields an error item and reading continues with the next line.
pub struct EntryReader<R> {
    source: R,
    strict: bool,
    line_no: usize,
    buf: Vec<u8>,
    done: bool,
}

pub fn read_entries<R: BufRead>(source: R) -> EntryReader<R> {
    EntryReader {
        source,
        strict: false,
        line_no: 0,
        buf: Vec::new(),
        done: false,
    }
}

impl<R> EntryReader<R> {
    /// Report unknown keys as decode errors instead of preserving them.
    pub fn strict(mut self, strict: bool) -> Self {
        self.strict = strict;
        self
    }

    /// Number of lines consumed so far.
    pub fn lines_read(&self) -> usize {
        self.line_no
    }
}

impl<R: BufRead> Iterator for EntryReader<R> {
    type Item = Result<PinEntry, DecodeError>;

    fn next(&mut self) -> Option<Self::Item> {
        while !self.done {
            self.buf.clear();
            match self.source.read_until(b'\n', &mut self.buf) {
                Ok(0) => self.done = true,
                Ok(_) => {
                    self.line_no += 1;
                    let mut bytes = self.buf.as_slice();
                    bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
                    bytes = bytes.strip_suffix(b"\r").unwrap_or(bytes);
                    if self.line_no == 1 {
                        bytes = bytes.strip_prefix("\u{feff}".as_bytes()).unwrap_or(bytes);
                    }
                    if bytes.iter().all(u8::is_ascii_whitespace) {
                        continue;
                    }
                    let line_no = self.line_no;
                    return Some(match std::str::from_utf8(bytes) {
                        Ok(text) => decode_line(line_no, text, self.strict),
                        Err(_) => Err(DecodeError { line: line_no, kind: DecodeErrorKind::Utf8 }),
                    });
                }
                Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
                Err(e) => {
                    self.done = true;
                    return Some(Err(DecodeError { line: self.line_no + 1, kind: e.into() }));
                }
            }
        }
        None
    }
}

/// Writing stopped; `written` lines reached the sink before the failure.
#[derive(Debug, Error)]
#[error("write failed after {written} lines: {source}")]
pub struct WriteError {
    pub written: usize,
    #[source]
    pub source: io::Error,
}

const FLUSH_BYTES: usize = 1 << 16;

/// Write entries as JSONL in canonical key order and return the line count.
///
/// Lines are buffered and handed to the sink in batches; on failure the
/// error carries the number of lines the sink accepted and flushed.
pub fn write_entries<I, W>(entries: I, mut sink: W) -> Result<usize, WriteError>
where
    I: IntoIterator,
    I::Item: Borrow<PinEntry>,
    W: Write,
{
    let mut buf = Vec::with_capacity(FLUSH_BYTES * 2);
    let mut pending = 0usize;
    let mut written = 0usize;
    let mut flush = |buf: &mut Vec<u8>, pending: &mut usize, written: &mut usize| {
        sink.write_all(buf)
            .and_then(|_| sink.flush())
            .map_err(|source| WriteError { written: *written, source })?;
        *written += *pending;
        *pending = 0;
        buf.clear();
        Ok(())
    };
    for entry in entries {
        serde_json::to_writer(&mut buf, entry.borrow()).expect("PinEntry always serializes");
        buf.push(b'\n');
        pending += 1;
        if buf.len() >= FLUSH_BYTES {
            flush(&mut buf, &mut pending, &mut written)?;
        }
    }
    flush(&mut buf, &mut pending, &mut written)?;
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_support::{fig5_entry, FIG5_LINE};

    #[test]
    fn reads_the_example_line() {
        let entries: Vec<_> = read_entries(FIG5_LINE.as_bytes()).collect();
        assert_eq!(entries.len(), 1);
        let e = entries[0].as_ref().unwrap();
        assert_eq!(e.id, 1919);
        assert_eq!(e.meta.doc_id.to_string(), "1997");
        assert_eq!(e.content_image.len(), 2);
    }

    #[test]
    fn empty_input_is_empty() {
        assert_eq!(read_entries(&b""[..]).count(), 0);
        assert_eq!(read_entries(&b"\n\n  \n"[..]).count(), 0);
    }

    #[test]
    fn errors_carry_line_numbers_and_do_not_stop_the_stream() {
        let text = format!("{FIG5_LINE}\n{{bad json\n\n{FIG5_LINE}\r\n\u{0}\n{FIG5_LINE}");
        let items: Vec<_> = read_entries(text.as_bytes()).collect();
        assert_eq!(items.len(), 5);
        let bad: Vec<usize> = items.iter().filter_map(|r| r.as_ref().err().map(|e| e.line)).collect();
        assert_eq!(bad, vec![2, 5]);
        assert_eq!(items.iter().filter(|r| r.is_ok()).count(), 3);
    }

    #[test]
    fn invalid_utf8_is_a_line_error() {
        let mut bytes = FIG5_LINE.as_bytes().to_vec();
        bytes.extend_from_slice(b"\n\xff\xfe\n");
        bytes.extend_from_slice(FIG5_LINE.as_bytes());
        let items: Vec<_> = read_entries(bytes.as_slice()).collect();
        assert!(matches!(items[1], Err(DecodeError { line: 2, kind: DecodeErrorKind::Utf8 })));
        assert!(items[2].is_ok());
    }

    #[test]
    fn strict_mode_flags_unknown_keys() {
        let line = FIG5_LINE.replacen(r#""license""#, r#""extra_key":[1, 2],"license""#, 1);
        let lenient: Vec<_> = read_entries(line.as_bytes()).collect();
        assert_eq!(lenient[0].as_ref().unwrap().unknown_keys(), vec!["extra_key"]);
        let strict: Vec<_> = read_entries(line.as_bytes()).strict(true).collect();
        match &strict[0] {
            Err(DecodeError { kind: DecodeErrorKind::UnknownKeys(k), .. }) => assert_eq!(k, &["extra_key"]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn write_then_read_round_trips() {
        let mut out = Vec::new();
        assert_eq!(write_entries([fig5_entry()], &mut out).unwrap(), 1);
        assert_eq!(String::from_utf8(out.clone()).unwrap(), format!("{FIG5_LINE}\n"));
        let back: Vec<_> = read_entries(out.as_slice()).map(Result::unwrap).collect();
        assert_eq!(back, vec![fig5_entry()]);

        let mut none = Vec::new();
        assert_eq!(write_entries(Vec::<PinEntry>::new(), &mut none).unwrap(), 0);
        assert!(none.is_empty());
    }

    /// Accepts `limit` bytes, then fails.
    struct Failing {
        limit: usize,
        taken: usize,
    }

    impl Write for Failing {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            if self.taken + buf.len() > self.limit {
                return Err(io::Error::other("disk full"));
            }
            self.taken += buf.len();
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    #[test]
    fn failing_sink_reports_lines_written() {
        let line_len = FIG5_LINE.len() + 1;
        let per_batch = FLUSH_BYTES.div_ceil(line_len);
        let entries = vec![fig5_entry(); per_batch * 3];
        let sink = Failing { limit: per_batch * line_len * 2 + 10, taken: 0 };
        let err = write_entries(&entries, sink).unwrap_err();
        assert_eq!(err.written, per_batch * 2);
    }
}
