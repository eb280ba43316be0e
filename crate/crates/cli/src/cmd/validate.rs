use std::collections::BTreeMap;
use std::fs;
use std::io::BufRead;
use std::path::{Path, PathBuf};

use clap::Args;
use pin_forge::io::{
    load_manifest, validate_line, DatasetValidator, Severity, ValidationOptions, Violation, ViolationCode,
    MANIFEST_FILE,
};
use serde_json::json;

use crate::error::{CliError, Exit};
use crate::files::open_input;
use crate::{Ctx, Outcome};

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Dataset root: a partitioned directory, a directory of JSONL files or a single JSONL file
    pub root: PathBuf,
    /// Also flag unknown keys and duplicate ids
    #[arg(long)]
    pub strict: bool,
    /// Require every referenced image file to exist
    #[arg(long)]
    pub check_files: bool,
    /// Number of individual violations to list
    #[arg(long, default_value_t = 20, value_name = "N")]
    pub max_listed: usize,
}

/// A JSONL file and the directory its image paths are relative to.
struct Source {
    jsonl: PathBuf,
    root: PathBuf,
}

fn sources(root: &Path) -> Result<Vec<Source>, CliError> {
    let meta = fs::metadata(root).map_err(|e| CliError::io(format!("cannot access {}: {e}", root.display())))?;
    if meta.is_file() {
        return Ok(vec![Source { jsonl: root.to_path_buf(), root: crate::files::parent_dir(root) }]);
    }
    if root.join(MANIFEST_FILE).is_file() {
        let manifest = load_manifest(root).map_err(CliError::io)?;
        return Ok(manifest
            .parts
            .iter()
            .map(|p| {
                let jsonl = root.join(&p.jsonl_path);
                let part_root = jsonl.parent().map_or_else(|| root.to_path_buf(), Path::to_path_buf);
                Source { jsonl, root: part_root }
            })
            .collect());
    }
    let mut files: Vec<PathBuf> = fs::read_dir(root)
        .map_err(|e| CliError::io(format!("cannot list {}: {e}", root.display())))?
        .filter_map(|d| d.ok().map(|d| d.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "jsonl") && p.is_file())
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(CliError::io(format!("{} contains no manifest and no .jsonl files", root.display())));
    }
    Ok(files.into_iter().map(|jsonl| Source { jsonl, root: root.to_path_buf() }).collect())
}

#[derive(Default)]
struct Tally {
    entries: usize,
    rejected: Vec<bool>,
    warned: Vec<bool>,
    errors: usize,
    codes: BTreeMap<&'static str, usize>,
    listed: Vec<serde_json::Value>,
}

impl Tally {
    fn add(&mut self, ordinal: usize, at: &(usize, usize), sources: &[Source], violations: &[Violation], max: usize) {
        for v in violations {
            *self.codes.entry(v.code.as_str()).or_default() += 1;
            match v.severity {
                Severity::Error => {
                    self.errors += 1;
                    self.rejected[ordinal] = true;
                }
                Severity::Warning => self.warned[ordinal] = true,
            }
            if self.listed.len() < max {
                self.listed.push(json!({
                    "file": sources[at.0].jsonl.display().to_string(),
                    "line": at.1,
                    "code": v.code,
                    "severity": v.severity,
                    "field": v.field,
                    "message": v.message,
                }));
            }
        }
    }
}

pub fn run(ctx: &Ctx, args: ValidateArgs) -> Result<Outcome, CliError> {
    let strict = ctx.config.strict(args.strict);
    let sources = sources(&args.root)?;
    let mut validator = DatasetValidator::new(ValidationOptions { strict, ..Default::default() });
    let mut tally = Tally::default();
    // (source index, 1-based line) of every entry, by ordinal
    let mut positions: Vec<(usize, usize)> = Vec::new();

    for (si, source) in sources.iter().enumerate() {
        let opts = ValidationOptions { strict, check_files: args.check_files, root: source.root.clone() };
        let mut reader = open_input(&source.jsonl)?;
        let mut buf = Vec::new();
        let mut line_no = 0;
        loop {
            buf.clear();
            let n = reader
                .read_until(b'\n', &mut buf)
                .map_err(|e| CliError::io(format!("cannot read {}: {e}", source.jsonl.display())))?;
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
            let ordinal = tally.entries;
            tally.entries += 1;
            tally.rejected.push(false);
            tally.warned.push(false);
            positions.push((si, line_no));
            let violations = match std::str::from_utf8(bytes) {
                Ok(line) => {
                    let (entry, report) = validate_line(line, &opts);
                    if let Some(entry) = entry {
                        validator.record(ordinal, &entry);
                    }
                    report.violations
                }
                Err(_) => vec![Violation::new(ViolationCode::MalformedJson, "", "line is not valid UTF-8")],
            };
            tally.add(ordinal, &positions[ordinal], &sources, &violations, args.max_listed);
        }
    }
    for report in validator.finish() {
        let at = positions[report.ordinal];
        tally.add(report.ordinal, &at, &sources, &report.violations, args.max_listed);
    }

    let rejected = tally.rejected.iter().filter(|&&r| r).count();
    let warned = tally.warned.iter().filter(|&&w| w).count();
    let errors = tally.errors;
    let exit = if errors > 0 { Exit::Data } else { Exit::Ok };
    let summary = json!({
        "ok": errors == 0,
        "files": sources.len(),
        "entries": tally.entries,
        "accepted": tally.entries - rejected,
        "rejected": rejected,
        "with_warnings": warned,
        "codes": tally.codes,
        "violations": tally.listed,
    });
    if !ctx.global.json {
        print_table(&tally, sources.len(), rejected, warned);
    }
    Ok(Outcome { summary, human: String::new(), exit })
}

fn print_table(tally: &Tally, files: usize, rejected: usize, warned: usize) {
    println!(
        "checked {} entries in {} file(s): {} accepted, {} rejected, {} with warnings",
        tally.entries,
        files,
        tally.entries - rejected,
        rejected,
        warned
    );
    if tally.codes.is_empty() {
        return;
    }
    let width = tally.codes.keys().map(|c| c.len()).max().unwrap_or(0);
    for (code, n) in &tally.codes {
        println!("  {code:<width$}  {n}");
    }
    for v in &tally.listed {
        println!(
            "{}:{}: {} {}: {}",
            v["file"].as_str().unwrap_or_default(),
            v["line"],
            v["code"].as_str().unwrap_or_default(),
            v["field"].as_str().unwrap_or_default(),
            v["message"].as_str().unwrap_or_default()
        );
    }
}
