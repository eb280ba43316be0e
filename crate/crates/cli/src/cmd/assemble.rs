use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use pin_forge::io::{assemble_document_sequence, group_documents};
use pin_forge::PinEntry;
use serde_json::json;

use crate::error::CliError;
use crate::files::{create_output, entries};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct AssembleArgs {
    /// Input JSONL file of page entries ("-" for stdin)
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output JSONL file, one `{"doc_id", "pages", "text"}` record per document ("-" for stdout)
    #[arg(short, long)]
    pub output: PathBuf,
}

pub fn run(ctx: &Ctx, args: AssembleArgs) -> Result<Outcome, CliError> {
    let pages: Vec<PinEntry> = entries(&args.input, ctx.config.strict(false))?.collect::<Result<_, _>>()?;
    let total_pages = pages.len();
    let docs = group_documents(pages);
    let mut out = create_output(&args.output, ctx.global.dry_run)?;
    let err = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", args.output.display()));
    for doc in &docs {
        let text = assemble_document_sequence(doc).map_err(CliError::data)?;
        let record = json!({ "doc_id": doc[0].meta.doc_id.to_string(), "pages": doc.len(), "text": text });
        writeln!(out, "{record}").map_err(err)?;
    }
    out.flush().map_err(err)?;
    Ok(Outcome::ok(
        json!({ "ok": true, "documents": docs.len(), "pages": total_pages, "dry_run": ctx.global.dry_run }),
        format!("{} documents assembled from {total_pages} pages", docs.len()),
    ))
}
