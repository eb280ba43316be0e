use std::io::BufRead;
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, ValueEnum};
use pin_forge::convert::{
    from_image_text_pair, from_interleaved_list, from_layout_annotations, from_text_document, localize_images,
    AutoFetcher, ConvertOptions, Draft, FailurePolicy, HttpFetcher, ImageTextPair, InterleavedListDoc,
    LayoutAnnotatedPage, LayoutOptions, LocalFetcher, LocalizeError, LocalizeOptions,
};
use pin_forge::io::write_entries;
use pin_forge::model::DocId;
use pin_forge::PinEntry;
use serde::Deserialize;
use serde_json::json;

use crate::config::PageOverrides;
use crate::error::CliError;
use crate::files::{create_output, open_input, parent_dir, read_input};
use crate::{Ctx, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SourceKind {
    /// JSONL, one document per line with `texts`/`images` arrays or an `items` list
    InterleavedList,
    /// JSONL, one layout-annotated page per line
    Layout,
    /// One plain text document, paginated
    Text,
    /// JSONL of `{"image_path", "text"}` pairs
    Pair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OnFetchError {
    Drop,
    KeepAsText,
    Fail,
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Source format
    #[arg(long, value_enum)]
    pub from: SourceKind,
    /// Input file ("-" for stdin)
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output JSONL file ("-" for stdout)
    #[arg(short, long)]
    pub output: PathBuf,
    /// Dataset root that receives content_image/ [default: the output file's directory]
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Id of the first produced entry; later entries count up from it
    #[arg(long, default_value_t = 0)]
    pub id: u64,
    /// Document id for text and layout sources [default: the first id]
    #[arg(long)]
    pub doc_id: Option<String>,
    #[arg(long, default_value = "source")]
    pub source_dataset: String,
    #[arg(long, default_value = "en")]
    pub language: String,
    #[arg(long, default_value = "")]
    pub license: String,
    /// Download date, YYYY-MM-DD [default: today]
    #[arg(long)]
    pub date: Option<String>,
    /// Markdown template for pairs, with {image} and {text} placeholders
    #[arg(long, default_value = "{image}\n\n{text}")]
    pub template: String,
    /// What to do with an image that cannot be fetched
    #[arg(long, value_enum, default_value = "drop")]
    pub on_fetch_error: OnFetchError,
    /// Per-request timeout for remote images, in seconds
    #[arg(long, default_value_t = 30.0)]
    pub fetch_timeout: f64,
    /// Retries for remote images after a failed request
    #[arg(long, default_value_t = 2)]
    pub retries: u32,
    /// Minimum column gutter for layout sources, as a fraction of page width
    #[arg(long, default_value_t = 0.05)]
    pub gutter_fraction: f64,
    /// Maximum estimated lines per page for text sources [default: 40]
    #[arg(long)]
    pub n_line: Option<u32>,
    /// Characters per rendered line for text sources [default: 80]
    #[arg(long)]
    pub n_text: Option<u32>,
    /// Lines an image occupies [default: 15]
    #[arg(long)]
    pub n_image: Option<u32>,
}

#[derive(Deserialize)]
struct PairRecord {
    image_path: String,
    text: String,
}

fn parse_doc_id(s: &str) -> DocId {
    s.parse::<i64>().map_or_else(|_| DocId::Str(s.to_owned()), DocId::Int)
}

/// Non-blank lines with their 1-based numbers.
fn records(args: &ConvertArgs) -> Result<Vec<(usize, String)>, CliError> {
    let mut out = Vec::new();
    for (i, line) in open_input(&args.input)?.lines().enumerate() {
        let line = line.map_err(|e| CliError::data(format!("line {}: {e}", i + 1)))?;
        if !line.trim().is_empty() {
            out.push((i + 1, line));
        }
    }
    Ok(out)
}

pub fn run(ctx: &Ctx, args: ConvertArgs) -> Result<Outcome, CliError> {
    let input_dir = parent_dir(&args.input);
    let root = args.root.clone().unwrap_or_else(|| parent_dir(&args.output));
    let base = |id: u64, doc_id: DocId| {
        let mut o = ConvertOptions::new(id, doc_id);
        o.source_dataset = args.source_dataset.clone();
        o.language = args.language.clone();
        o.license = args.license.clone();
        if let Some(d) = &args.date {
            o.date_download = d.clone();
        }
        o
    };
    let fixed_doc = args.doc_id.as_deref().map_or(DocId::Int(args.id as i64), parse_doc_id);
    let bad_line = |n: usize, e: &dyn std::fmt::Display| CliError::data(format!("line {n}: {e}"));

    let mut drafts: Vec<Draft> = Vec::new();
    let mut next = args.id;
    match args.from {
        SourceKind::Text => {
            let params = ctx.config.page_params(PageOverrides {
                n_line: args.n_line,
                n_text: args.n_text,
                n_image: args.n_image,
            });
            params.validate().map_err(CliError::usage)?;
            let text = read_input(&args.input)?;
            let pages = from_text_document(&text, &base(next, fixed_doc.clone()), &params).map_err(CliError::data)?;
            drafts.extend(pages.into_iter().map(Draft::from_entry));
        }
        SourceKind::InterleavedList => {
            for (n, line) in records(&args)? {
                let value: serde_json::Value = serde_json::from_str(&line).map_err(|e| bad_line(n, &e))?;
                let doc = InterleavedListDoc::from_json(&value).map_err(|e| bad_line(n, &e))?;
                let draft = from_interleaved_list(&doc, &base(next, DocId::Int(next as i64))).map_err(|e| bad_line(n, &e))?;
                drafts.push(draft);
                next += 1;
            }
        }
        SourceKind::Pair => {
            for (n, line) in records(&args)? {
                let rec: PairRecord = serde_json::from_str(&line).map_err(|e| bad_line(n, &e))?;
                let pair = ImageTextPair { image_path: rec.image_path, text: rec.text };
                let draft = from_image_text_pair(&pair, &args.template, &base(next, DocId::Int(next as i64)))
                    .map_err(|e| bad_line(n, &e))?;
                drafts.push(draft);
                next += 1;
            }
        }
        SourceKind::Layout => {
            let layout = LayoutOptions { gutter_fraction: args.gutter_fraction };
            for (k, (n, line)) in records(&args)?.into_iter().enumerate() {
                let mut page: LayoutAnnotatedPage = serde_json::from_str(&line).map_err(|e| bad_line(n, &e))?;
                page.page_id.get_or_insert(k as i64);
                let draft =
                    from_layout_annotations(&page, &base(next, fixed_doc.clone()), &layout).map_err(|e| bad_line(n, &e))?;
                drafts.push(draft);
                next += 1;
            }
        }
    }

    let policy = match args.on_fetch_error {
        OnFetchError::Drop => FailurePolicy::Drop,
        OnFetchError::KeepAsText => FailurePolicy::KeepAsText,
        OnFetchError::Fail => FailurePolicy::Fail,
    };
    let timeout = Duration::try_from_secs_f64(args.fetch_timeout).map_err(CliError::usage)?;
    let fetcher = AutoFetcher { local: LocalFetcher::new(input_dir), http: HttpFetcher::new(timeout, args.retries) };
    let localize = LocalizeOptions { policy, concurrency: ctx.jobs().max(4) };

    let mut entries: Vec<PinEntry> = Vec::with_capacity(drafts.len());
    let (mut images, mut warnings) = (0usize, 0usize);
    for draft in drafts {
        for w in &draft.warnings {
            log::warn!("entry {}: {w}", draft.entry.id);
        }
        warnings += draft.warnings.len();
        let id = draft.entry.id;
        let entry = if ctx.global.dry_run {
            draft.entry
        } else {
            localize_images(draft, &fetcher, &root, &localize).map_err(|e| match e {
                LocalizeError::Write { .. } => CliError::io(e).context(format!("entry {id}")),
                LocalizeError::Fetch(_) => CliError::data(e).context(format!("entry {id}")),
            })?
        };
        images += entry.content_image.len();
        entries.push(entry);
    }
    let written = write_entries(&entries, create_output(&args.output, ctx.global.dry_run)?)?;
    Ok(Outcome::ok(
        json!({
            "ok": true,
            "entries": written,
            "content_images": images,
            "warnings": warnings,
            "dry_run": ctx.global.dry_run,
        }),
        format!("{written} entries written with {images} content images"),
    ))
}
