use std::path::PathBuf;

use clap::Args;
use pin_forge::io::write_entries;
use pin_forge::pagination::paginate_entry;
use serde_json::json;

use crate::config::PageOverrides;
use crate::error::CliError;
use crate::files::{create_output, entries};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct PaginateArgs {
    /// Input JSONL file of unpaginated entries ("-" for stdin)
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output JSONL file of page entries ("-" for stdout)
    #[arg(short, long)]
    pub output: PathBuf,
    /// Maximum estimated lines per page [default: 40]
    #[arg(long, value_name = "N")]
    pub n_line: Option<u32>,
    /// Characters per rendered line [default: 80]
    #[arg(long, value_name = "N")]
    pub n_text: Option<u32>,
    /// Lines an image occupies [default: 15]
    #[arg(long, value_name = "N")]
    pub n_image: Option<u32>,
    /// Give page entries consecutive ids starting here instead of the source entry's id
    #[arg(long, value_name = "ID")]
    pub renumber_from: Option<u64>,
}

pub fn run(ctx: &Ctx, args: PaginateArgs) -> Result<Outcome, CliError> {
    let params = ctx.config.page_params(PageOverrides {
        n_line: args.n_line,
        n_text: args.n_text,
        n_image: args.n_image,
    });
    params.validate().map_err(CliError::usage)?;
    let mut reader = entries(&args.input, ctx.config.strict(false))?;
    let mut out = create_output(&args.output, ctx.global.dry_run)?;
    let mut next_id = args.renumber_from;
    let (mut docs, mut pages) = (0usize, 0usize);
    let mut batch = Vec::new();
    for entry in &mut reader {
        let entry = entry?;
        let mut split = paginate_entry(&entry, &params).map_err(CliError::data)?;
        if let Some(id) = next_id.as_mut() {
            for page in &mut split {
                page.id = *id;
                *id += 1;
            }
        }
        docs += 1;
        pages += split.len();
        batch.extend(split);
        if batch.len() >= 1024 {
            write_entries(batch.drain(..), &mut out)?;
        }
    }
    write_entries(batch, &mut out)?;
    Ok(Outcome::ok(
        json!({
            "ok": true,
            "documents": docs,
            "pages": pages,
            "params": params,
            "dry_run": ctx.global.dry_run,
        }),
        format!("{docs} documents split into {pages} pages"),
    ))
}
