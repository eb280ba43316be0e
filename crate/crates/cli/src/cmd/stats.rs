use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use pin_forge::io::{read_partitioned, DecodeError};
use pin_forge::signals::{compute_signals, Tokenizer};
use pin_forge::stats::{
    aggregate_total, emit_report, BinSpec, ItifVariant, JointDistribution, ReportFormat, Reservoir, StatsReport,
    SubsetAccumulator, SubsetStats, TotalWeighting,
};
use pin_forge::PinEntry;
use rayon::prelude::*;
use serde_json::json;

use crate::config::TokenizerSpec;
use crate::error::CliError;
use crate::files::{create_output, entries, is_stdio};
use crate::{Ctx, Outcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    SvgScatter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weighting {
    /// Each subset's average counts once
    Unweighted,
    /// Subset averages weighted by document count
    DocWeighted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Itif {
    /// Raw count of modality changes
    Count,
    /// Count divided by the number of adjacent unit pairs
    Normalized,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Subsets, each a JSONL file or partitioned dataset directory, optionally as NAME=PATH
    #[arg(required = true, value_name = "SUBSET")]
    pub inputs: Vec<String>,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    /// Report file [default: stdout]
    #[arg(short, long)]
    pub output: Option<PathBuf>,
    /// Documents sampled per subset for the joint distribution [default: 10000]
    #[arg(long, value_name = "N")]
    pub sample: Option<usize>,
    /// Sampling seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// How the total row averages subset averages
    #[arg(long, value_enum, default_value = "unweighted")]
    pub weighting: Weighting,
    /// Interleaving value averaged into avg_itif
    #[arg(long, value_enum, default_value = "count")]
    pub itif: Itif,
    /// Leave out the total row
    #[arg(long)]
    pub no_total: bool,
    /// Tokenizer for entries without stored signals: `whitespace` or `vocab:<path>`
    #[arg(long, value_name = "SPEC")]
    pub tokenizer: Option<TokenizerSpec>,
    #[arg(long, default_value_t = 21)]
    pub image_bins: usize,
    #[arg(long, default_value_t = 20)]
    pub image_max: u64,
    #[arg(long, default_value_t = 50)]
    pub token_bins: usize,
    #[arg(long, default_value_t = 9_999)]
    pub token_max: u64,
}

struct Subset {
    name: String,
    path: PathBuf,
}

fn parse_subset(s: &str) -> Subset {
    if let Some((name, path)) = s.split_once('=') {
        if !name.is_empty() && !Path::new(s).exists() {
            return Subset { name: name.to_owned(), path: path.into() };
        }
    }
    let path = PathBuf::from(s);
    let name = path.file_stem().map_or_else(|| s.to_owned(), |n| n.to_string_lossy().into_owned());
    Subset { name, path }
}

struct SubsetResult {
    stats: SubsetStats,
    points: Vec<(u64, u64)>,
    population: u64,
}

fn scan(
    subset: &Subset,
    variant: ItifVariant,
    sample: usize,
    seed: u64,
    tok: &dyn Tokenizer,
) -> Result<SubsetResult, CliError> {
    let items: Box<dyn Iterator<Item = Result<PinEntry, DecodeError>>> = if subset.path.is_dir() {
        Box::new(read_partitioned(&subset.path).map_err(CliError::io)?)
    } else {
        Box::new(entries(&subset.path, false)?)
    };
    let mut acc = SubsetAccumulator::new(variant);
    let mut reservoir = Reservoir::new(sample, seed);
    for entry in items {
        let mut entry = entry.map_err(|e| CliError::from(e).context(&subset.name))?;
        if entry.quality_signals.is_none() {
            entry.quality_signals = Some(compute_signals(&entry, tok));
        }
        acc.add(&entry).map_err(CliError::data)?;
        let tokens = entry.quality_signals.as_ref().map_or(0, |s| s.total_token_count);
        reservoir.offer((entry.content_image.len() as u64, tokens));
    }
    let stats = acc.finish(subset.name.clone());
    let population = reservoir.seen();
    Ok(SubsetResult { stats, points: reservoir.into_sample(), population })
}

pub fn run(ctx: &Ctx, args: StatsArgs) -> Result<Outcome, CliError> {
    let to_stdout = args.output.as_deref().is_none_or(is_stdio);
    if ctx.global.json && to_stdout && !ctx.global.dry_run {
        return Err(CliError::usage("--json prints the run summary on stdout; pass --output for the report"));
    }
    let spec = BinSpec {
        image_bins: args.image_bins,
        image_max: args.image_max,
        token_bins: args.token_bins,
        token_max: args.token_max,
    };
    spec.validate().map_err(CliError::usage)?;
    let sample = ctx.config.sample(args.sample);
    let seed = ctx.config.seed(args.seed);
    let variant = match args.itif {
        Itif::Count => ItifVariant::Count,
        Itif::Normalized => ItifVariant::Normalized,
    };
    let tok = ctx.config.tokenizer(args.tokenizer.as_ref()).load()?;
    let tok: &dyn Tokenizer = tok.as_ref();
    let subsets: Vec<Subset> = args.inputs.iter().map(|s| parse_subset(s)).collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(ctx.jobs())
        .build()
        .map_err(|e| CliError::io(format!("cannot start workers: {e}")))?;
    let results: Vec<SubsetResult> = pool.install(|| {
        subsets
            .par_iter()
            .map(|s| scan(s, variant, sample, seed, tok))
            .collect::<Result<_, _>>()
    })?;

    // only subsets that contain content images take part in the joint distribution
    let mut points = Vec::new();
    let mut population = 0;
    for r in results.iter().filter(|r| r.stats.total_images > 0) {
        points.extend_from_slice(&r.points);
        population += r.population;
    }
    let joint = if population > 0 {
        Some(JointDistribution::from_points(points, population, spec).map_err(CliError::usage)?)
    } else {
        None
    };
    let subset_stats: Vec<SubsetStats> = results.into_iter().map(|r| r.stats).collect();
    let total = if args.no_total {
        None
    } else {
        let weighting = match args.weighting {
            Weighting::Unweighted => TotalWeighting::Unweighted,
            Weighting::DocWeighted => TotalWeighting::DocWeighted,
        };
        Some(aggregate_total(&subset_stats, weighting).map_err(CliError::data)?)
    };
    let docs: u64 = subset_stats.iter().map(|s| s.total_docs).sum();
    let report = StatsReport { subsets: subset_stats, total, joint };
    let format = match args.format {
        Format::Csv => ReportFormat::Csv,
        Format::Json => ReportFormat::Json,
        Format::SvgScatter => ReportFormat::SvgScatter,
    };
    let bytes = emit_report(&report, format);
    let dest = args.output.clone().unwrap_or_else(|| PathBuf::from("-"));
    let mut out = create_output(&dest, ctx.global.dry_run)?;
    out.write_all(&bytes)
        .and_then(|_| out.flush())
        .map_err(|e| CliError::io(format!("cannot write {}: {e}", dest.display())))?;
    Ok(Outcome::ok(
        json!({
            "ok": true,
            "subsets": report.subsets.len(),
            "documents": docs,
            "sampled": report.joint.as_ref().map_or(0, |j| j.sample_size),
            "seed": seed,
            "bytes": bytes.len(),
            "dry_run": ctx.global.dry_run,
        }),
        if to_stdout { String::new() } else { format!("{} subsets, {docs} documents", report.subsets.len()) },
    ))
}
