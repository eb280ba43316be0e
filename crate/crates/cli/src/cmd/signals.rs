use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;
use std::time::Instant;

use clap::Args;
use pin_forge::io::{decode_line, DecodeError, DecodeErrorKind};
use pin_forge::signals::{compute_signals, Tokenizer};
use rayon::prelude::*;
use serde_json::json;

use crate::config::TokenizerSpec;
use crate::error::CliError;
use crate::files::{create_output, open_input};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct SignalsArgs {
    /// Input JSONL file ("-" for stdin)
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output JSONL file ("-" for stdout)
    #[arg(short, long)]
    pub output: PathBuf,
    /// Tokenizer: `whitespace` or `vocab:<path>` [default: whitespace]
    #[arg(long, value_name = "SPEC")]
    pub tokenizer: Option<TokenizerSpec>,
    /// Reject entries with keys outside the schema
    #[arg(long)]
    pub strict: bool,
    /// Lines handed to the workers at a time
    #[arg(long, default_value_t = 2048, value_name = "N")]
    pub batch: usize,
}

type Batch = Vec<(usize, String)>;

/// Read non-blank lines in batches on a separate thread.
fn spawn_reader(mut input: Box<dyn BufRead + Send>, batch: usize) -> mpsc::Receiver<Result<Batch, DecodeError>> {
    let (tx, rx) = mpsc::sync_channel(4);
    thread::spawn(move || {
        let mut line_no = 0;
        let mut buf = Vec::new();
        let mut lines = Vec::with_capacity(batch);
        loop {
            buf.clear();
            let n = match input.read_until(b'\n', &mut buf) {
                Ok(n) => n,
                Err(e) => {
                    let _ = tx.send(Err(DecodeError { line: line_no + 1, kind: DecodeErrorKind::Io(e) }));
                    return;
                }
            };
            if n == 0 {
                break;
            }
            line_no += 1;
            let mut bytes = buf.as_slice();
            if line_no == 1 {
                bytes = bytes.strip_prefix(b"\xEF\xBB\xBF").unwrap_or(bytes);
            }
            let bytes = bytes.strip_suffix(b"\n").unwrap_or(bytes);
            let bytes = bytes.strip_suffix(b"\r").unwrap_or(bytes);
            if bytes.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            match std::str::from_utf8(bytes) {
                Ok(s) => lines.push((line_no, s.to_owned())),
                Err(_) => {
                    let _ = tx.send(Err(DecodeError { line: line_no, kind: DecodeErrorKind::Utf8 }));
                    return;
                }
            }
            if lines.len() == batch && tx.send(Ok(std::mem::take(&mut lines))).is_err() {
                return;
            }
        }
        if !lines.is_empty() {
            let _ = tx.send(Ok(lines));
        }
    });
    rx
}

fn process(line_no: usize, line: &str, strict: bool, tok: &dyn Tokenizer) -> Result<Vec<u8>, DecodeError> {
    let mut entry = decode_line(line_no, line, strict)?;
    entry.quality_signals = Some(compute_signals(&entry, tok));
    let mut out = serde_json::to_vec(&entry).expect("PinEntry always serializes");
    out.push(b'\n');
    Ok(out)
}

pub fn run(ctx: &Ctx, args: SignalsArgs) -> Result<Outcome, CliError> {
    let started = Instant::now();
    let strict = ctx.config.strict(args.strict);
    let tok = ctx.config.tokenizer(args.tokenizer.as_ref()).load()?;
    let tok: &dyn Tokenizer = tok.as_ref();
    let jobs = ctx.jobs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| CliError::io(format!("cannot start workers: {e}")))?;
    let input = open_input(&args.input)?;
    let mut out = create_output(&args.output, ctx.global.dry_run)?;
    let batches = spawn_reader(input, args.batch.max(1));

    let mut processed = 0usize;
    let write_err = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", args.output.display()));
    for batch in batches {
        let batch = batch?;
        let results: Vec<Result<Vec<u8>, DecodeError>> = if jobs == 1 {
            batch.iter().map(|(n, l)| process(*n, l, strict, tok)).collect()
        } else {
            pool.install(|| batch.par_iter().map(|(n, l)| process(*n, l, strict, tok)).collect())
        };
        for r in results {
            out.write_all(&r?).map_err(write_err)?;
            processed += 1;
        }
        log::debug!("{processed} entries processed");
    }
    out.flush().map_err(write_err)?;
    let seconds = started.elapsed().as_secs_f64();
    Ok(Outcome::ok(
        json!({
            "ok": true,
            "processed": processed,
            "tokenizer": tok.identity(),
            "jobs": jobs,
            "seconds": seconds,
            "dry_run": ctx.global.dry_run,
        }),
        format!("{processed} entries processed in {seconds:.2}s"),
    ))
}
