use std::io::Write;
use std::path::PathBuf;

use clap::Args;
use pin_forge::io::write_entries;
use pin_forge::render::{needs_render, render_batch};
use pin_forge::PinEntry;
use serde_json::json;

use crate::error::{CliError, Exit};
use crate::files::{create_output, entries, parent_dir};
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct RenderArgs {
    /// Input JSONL file ("-" for stdin)
    #[arg(short, long)]
    pub input: PathBuf,
    /// Output JSONL file with updated entries ("-" for stdout)
    #[arg(short, long)]
    pub output: PathBuf,
    /// Dataset root holding content_image/ and receiving overall_image/ [default: the input file's directory]
    #[arg(long)]
    pub root: Option<PathBuf>,
    /// Renderer command line with {input} and {output} placeholders
    #[arg(long)]
    pub command: Option<String>,
    /// Seconds before a render is killed [default: 60]
    #[arg(long)]
    pub timeout: Option<f64>,
    /// Re-render entries that already have an overall image
    #[arg(long)]
    pub force: bool,
    /// Write one JSON failure record per line here
    #[arg(long, value_name = "FILE")]
    pub failures: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: RenderArgs) -> Result<Outcome, CliError> {
    let cfg = ctx.config.renderer(args.command.as_deref(), args.timeout, args.force)?;
    let root = args.root.clone().unwrap_or_else(|| parent_dir(&args.input));
    let input: Vec<PinEntry> = entries(&args.input, ctx.config.strict(false))?.collect::<Result<_, _>>()?;

    if ctx.global.dry_run {
        let pending = input.iter().filter(|e| needs_render(e, cfg.force)).count();
        return Ok(Outcome::ok(
            json!({ "ok": true, "entries": input.len(), "to_render": pending, "dry_run": true }),
            format!("{pending} of {} entries would be rendered", input.len()),
        ));
    }

    let total = input.len();
    let report = render_batch(input, &cfg, &root, ctx.jobs());
    write_entries(&report.entries, create_output(&args.output, false)?)?;
    if let Some(path) = &args.failures {
        let mut out = create_output(path, false)?;
        let err = |e: std::io::Error| CliError::io(format!("cannot write {}: {e}", path.display()));
        for f in &report.failures {
            serde_json::to_writer(&mut out, f).map_err(|e| CliError::io(e.to_string()))?;
            out.write_all(b"\n").map_err(err)?;
        }
        out.flush().map_err(err)?;
    }
    for f in &report.failures {
        log::warn!("{f}");
    }
    let failed = report.failures.len();
    Ok(Outcome {
        summary: json!({
            "ok": failed == 0,
            "entries": total,
            "rendered": report.rendered,
            "skipped": report.skipped,
            "failed": failed,
            "failures": report.failures,
            "dry_run": false,
        }),
        human: format!("{} rendered, {} skipped, {failed} failed", report.rendered, report.skipped),
        exit: if failed == 0 { Exit::Ok } else { Exit::Data },
    })
}
