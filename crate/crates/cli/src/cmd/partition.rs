use std::path::PathBuf;

use clap::Args;
use pin_forge::io::{partition_dataset, PartitionError, PartitionOptions};
use serde_json::json;

use crate::error::CliError;
use crate::files::{entries, UntilError};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct PartitionArgs {
    /// Input JSONL file ("-" for stdin)
    #[arg(short, long)]
    pub input: PathBuf,
    /// Directory that receives the parts and manifest.json
    #[arg(short, long)]
    pub output: PathBuf,
    /// Maximum entries per part [default: 10000]
    #[arg(long, value_name = "N")]
    pub size: Option<usize>,
    /// Directory the input image paths are relative to; images are copied into their parts
    #[arg(long)]
    pub source_root: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: PartitionArgs) -> Result<Outcome, CliError> {
    let size = ctx.config.partition_size(args.size);
    if size == 0 {
        return Err(CliError::usage("--size must be at least 1"));
    }
    let mut reader = entries(&args.input, ctx.config.strict(false))?;
    if ctx.global.dry_run {
        let mut count = 0usize;
        for e in &mut reader {
            e?;
            count += 1;
        }
        let parts = count.div_ceil(size);
        return Ok(Outcome::ok(
            json!({ "ok": true, "entries": count, "parts": parts, "dry_run": true }),
            format!("{count} entries would be split into {parts} parts"),
        ));
    }
    let opts = PartitionOptions { source_root: args.source_root.clone() };
    let mut stream = UntilError::new(&mut reader);
    let result = partition_dataset(&mut stream, size, &args.output, &opts);
    stream.finish()?;
    let manifest = result.map_err(|e| match e {
        PartitionError::ZeroPartSize => CliError::usage(e),
        _ => CliError::io(e),
    })?;
    Ok(Outcome::ok(
        json!({
            "ok": true,
            "entries": manifest.total_entries,
            "parts": manifest.parts.len(),
            "manifest": manifest,
        }),
        format!("{} entries written to {} parts", manifest.total_entries, manifest.parts.len()),
    ))
}
