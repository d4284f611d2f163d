use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use slomorph::pipeline::{
    compare_results, comparison_csv, parse_config, render_file, run_batch, run_files, BatchReport, RunConfig,
};

/// Retinal vessel morphometry for SLO images.
#[derive(Parser)]
#[command(name = "slomorph", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Measure a batch (--config) or a single image.
    Analyze(AnalyzeArgs),
    /// Agreement between two collated results files.
    Compare(CompareArgs),
    /// Render the segmentation overlay of one image.
    Render(RenderArgs),
}

#[derive(Args)]
#[command(group = clap::ArgGroup::new("source").required(true).args(["config", "image"]))]
struct AnalyzeArgs {
    /// Batch configuration file (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Single image to measure.
    image: Option<PathBuf>,
    /// Mask directory for a single image (defaults to the image's folder).
    #[arg(long, conflicts_with = "config")]
    masks: Option<PathBuf>,
    /// Output directory for a single image.
    #[arg(long, default_value = "slomorph_output", conflicts_with = "config")]
    output: PathBuf,
    /// Sidecar metadata CSV for a single image.
    #[arg(long, conflicts_with = "config")]
    metadata: Option<PathBuf>,
    /// Segment with the vesselness filter when no vessel masks exist.
    #[arg(long, conflicts_with = "config")]
    fallback: bool,
}

#[derive(Args)]
struct CompareArgs {
    results_a: PathBuf,
    results_b: PathBuf,
    /// Column identifying the same image in both files.
    #[arg(long)]
    pair_on: String,
    /// Write the table here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct RenderArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    masks: Option<PathBuf>,
    /// Defaults to `<stem>_overlay.png` next to the input.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long)]
    fallback: bool,
}

fn parent_dir(p: &Path) -> PathBuf {
    match p.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn summarize(report: &BatchReport) -> u8 {
    eprintln!("{} file(s) processed; results in {}", report.rows.len(), report.collated.display());
    if report.failed.is_empty() {
        0
    } else {
        eprintln!("{} file(s) skipped: {}", report.failed.len(), report.failed.join(", "));
        2
    }
}

fn analyze(a: AnalyzeArgs) -> Result<u8> {
    if let Some(path) = a.config {
        let (cfg, warnings) = parse_config(&path).with_context(|| format!("reading config {}", path.display()))?;
        for w in warnings {
            eprintln!("warning: {w}");
        }
        return Ok(summarize(&run_batch(&cfg)?));
    }
    let image = a.image.expect("clap requires config or image");
    if !image.is_file() {
        bail!("{} is not a file", image.display());
    }
    let mut cfg = RunConfig::new(parent_dir(&image), a.output);
    cfg.mask_dir = a.masks;
    cfg.metadata_file = a.metadata;
    cfg.use_fallback_segmentation = a.fallback;
    Ok(summarize(&run_files(&[image], &cfg)?))
}

fn compare(a: CompareArgs) -> Result<u8> {
    let rows = compare_results(&a.results_a, &a.results_b, &a.pair_on)?;
    let table = comparison_csv(&rows);
    match a.output {
        Some(p) => std::fs::write(&p, table).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{table}"),
    }
    Ok(0)
}

fn render(a: RenderArgs) -> Result<u8> {
    let dir = parent_dir(&a.input);
    let mut cfg = RunConfig::new(&dir, &dir);
    cfg.mask_dir = a.masks;
    cfg.use_fallback_segmentation = a.fallback;
    let output = a.output.unwrap_or_else(|| {
        let stem = a.input.file_stem().and_then(|s| s.to_str()).unwrap_or("image");
        dir.join(format!("{stem}_overlay.png"))
    });
    let log = render_file(&a.input, &cfg, &output)?;
    eprint!("{log}");
    eprintln!("overlay written to {}", output.display());
    Ok(0)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are fatal config errors; help and version are not
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Compare(a) => compare(a),
        Command::Render(a) => render(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
