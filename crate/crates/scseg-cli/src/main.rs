//! `scseg`: segment screen-content images, generate synthetic pages, and
//! score masks against ground truth.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use scseg::baselines::{djvu_segment, spec_segment, SpecBaselineConfig};
use scseg::eval::{evaluate_corpus, CorpusItem};
use scseg::io::{load_image, load_mask, write_mask, write_ycbcr_png};
use scseg::pipeline::segment_image_threads;
use scseg::synth::{generate, SynthSpec};
use scseg::{Error, SegConfig};

/// Exit codes: 2 bad arguments, 3 i/o, 4 format/codec, 5 dimension mismatch.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::RegionOutOfBounds { .. } => 2,
        Error::Io { .. } => 3,
        Error::UnsupportedFormat(_) | Error::Codec { .. } => 4,
        Error::DimensionMismatch { .. } => 5,
    }
}

#[derive(Parser)]
#[command(
    name = "scseg",
    version,
    about = "Foreground/background segmentation for screen-content images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Segment a PNG into a foreground mask
    Segment(SegmentArgs),
    /// Score predicted masks against ground-truth masks
    Eval(EvalArgs),
    /// Generate synthetic pages with exact ground truth
    Synth(SynthArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    /// Robust smooth-model fitting (the main algorithm)
    Lad,
    /// Hierarchical 2-means clustering baseline
    Djvu,
    /// Color-counting block classifier baseline
    Spec,
}

#[derive(Args)]
struct SegmentArgs {
    /// Input PNG (8-bit gray or RGB)
    #[arg(long)]
    input: PathBuf,
    /// Output mask PNG (foreground = 255)
    #[arg(long)]
    output: PathBuf,
    #[arg(long, value_enum, default_value_t = Algorithm::Lad)]
    algorithm: Algorithm,
    /// Top-level block size (power of two)
    #[arg(long, default_value_t = 64)]
    block_size: usize,
    /// Number of cosine basis functions
    #[arg(long, default_value_t = 10)]
    bases: usize,
    /// Per-pixel residual threshold after the robust fit
    #[arg(long, default_value_t = 10.0)]
    eps1: f64,
    /// Flat-block color matching threshold
    #[arg(long, default_value_t = 10.0)]
    eps2: f64,
    /// Whole-block least-squares acceptance threshold
    #[arg(long, default_value_t = 3.0)]
    eps3: f64,
    /// Background fraction needed to accept a robust classification
    #[arg(long, default_value_t = 0.5)]
    eps4: f64,
    /// ADMM augmented-Lagrangian parameter
    #[arg(long, default_value_t = 1.0)]
    rho: f64,
    /// ADMM iteration count
    #[arg(long, default_value_t = 200)]
    iters: usize,
    /// Skip the chroma refinement pass
    #[arg(long)]
    no_chroma: bool,
    /// Worker threads (output is identical for any value)
    #[arg(long, default_value_t = 1)]
    threads: usize,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory of predicted mask PNGs
    #[arg(long)]
    pred: PathBuf,
    /// Directory of ground-truth mask PNGs (NAME_gt.png or NAME.png)
    #[arg(long)]
    gt: PathBuf,
    /// Where to write the JSON report
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// Output directory for NAME.png / NAME_gt.png pairs
    #[arg(long)]
    out: PathBuf,
    /// Number of pages
    #[arg(long)]
    count: usize,
    /// Base seed; page i uses seed + i
    #[arg(long)]
    seed: u64,
    /// Target foreground coverage fraction
    #[arg(long, default_value_t = 0.1)]
    coverage: f64,
    /// Foreground luma offset
    #[arg(long, default_value_t = 60)]
    offset: u8,
}

fn segment_config(args: &SegmentArgs) -> SegConfig {
    SegConfig {
        block_size_max: args.block_size,
        num_bases: args.bases,
        eps1: args.eps1,
        eps2: args.eps2,
        eps3: args.eps3,
        eps4: args.eps4,
        rho: args.rho,
        admm_iterations: args.iters,
        enable_chroma_refine: !args.no_chroma,
        ..SegConfig::default()
    }
}

fn ensure_parent_dir(path: &Path) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|source| Error::Io { path: parent.into(), source })?;
        }
    }
    Ok(())
}

fn run_segment(args: &SegmentArgs) -> Result<(), Error> {
    let cfg = segment_config(args);
    cfg.validate()?;
    let loaded = load_image(&args.input)?;
    let mask = match args.algorithm {
        Algorithm::Lad => segment_image_threads(&loaded.ycbcr, &cfg, args.threads)?,
        Algorithm::Djvu => djvu_segment(&loaded.ycbcr, &cfg),
        Algorithm::Spec => spec_segment(&loaded.rgb, &SpecBaselineConfig::default()),
    };
    ensure_parent_dir(&args.output)?;
    write_mask(&mask, &args.output)?;
    Ok(())
}

/// Pairs every `<name>.png` under `pred` with `<name>_gt.png` (preferred) or
/// `<name>.png` under `gt`.
fn collect_pairs(pred_dir: &Path, gt_dir: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>, Error> {
    let entries = std::fs::read_dir(pred_dir)
        .map_err(|source| Error::Io { path: pred_dir.into(), source })?;
    let mut stems: BTreeMap<String, PathBuf> = BTreeMap::new();
    for entry in entries {
        let entry = entry.map_err(|source| Error::Io { path: pred_dir.into(), source })?;
        let path = entry.path();
        let is_png = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if !is_png {
            continue;
        }
        let stem = match path.file_stem().and_then(|s| s.to_str()) {
            Some(s) if !s.ends_with("_gt") => s.to_string(),
            _ => continue,
        };
        stems.insert(stem, path);
    }
    if stems.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no prediction PNGs found in {}",
            pred_dir.display()
        )));
    }
    let mut pairs = Vec::with_capacity(stems.len());
    for (stem, pred_path) in stems {
        let gt_candidates =
            [gt_dir.join(format!("{stem}_gt.png")), gt_dir.join(format!("{stem}.png"))];
        let gt_path = gt_candidates.iter().find(|p| p.exists()).cloned().ok_or_else(|| {
            Error::InvalidArgument(format!("no ground truth for '{stem}' in {}", gt_dir.display()))
        })?;
        pairs.push((stem, pred_path, gt_path));
    }
    Ok(pairs)
}

fn run_eval(args: &EvalArgs) -> Result<(), Error> {
    let mut items = Vec::new();
    for (name, pred_path, gt_path) in collect_pairs(&args.pred, &args.gt)? {
        items.push(CorpusItem { name, pred: load_mask(&pred_path)?, gt: load_mask(&gt_path)? });
    }
    let report = evaluate_corpus(&items)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| Error::InvalidArgument(format!("report serialization: {e}")))?;
    ensure_parent_dir(&args.report)?;
    std::fs::write(&args.report, json)
        .map_err(|source| Error::Io { path: args.report.clone(), source })?;
    let fmt = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
    println!(
        "{} pairs: micro precision {}, micro recall {}",
        report.per_image.len(),
        fmt(report.micro.precision),
        fmt(report.micro.recall),
    );
    Ok(())
}

fn run_synth(args: &SynthArgs) -> Result<(), Error> {
    if args.count == 0 {
        return Err(Error::InvalidArgument("--count must be at least 1".into()));
    }
    std::fs::create_dir_all(&args.out)
        .map_err(|source| Error::Io { path: args.out.clone(), source })?;
    for i in 0..args.count {
        let spec = SynthSpec {
            fg_coverage: args.coverage,
            fg_luma_offset: args.offset,
            seed: args.seed.wrapping_add(i as u64),
            ..SynthSpec::default()
        };
        let (image, gt) = generate(&spec)?;
        let name = format!("page_{i:03}");
        write_ycbcr_png(&image, args.out.join(format!("{name}.png")))?;
        write_mask(&gt, args.out.join(format!("{name}_gt.png")))?;
    }
    println!("wrote {} page(s) to {}", args.count, args.out.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Segment(args) => run_segment(args),
        Command::Eval(args) => run_eval(args),
        Command::Synth(args) => run_synth(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
