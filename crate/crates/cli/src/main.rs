//! `tabscan` command line: `extract`, `eval` and `synth`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use tabscan::pipeline::{
    collect_inputs, run_eval, run_extract, run_synth, EvalMode, EvalReport, RegionRecord, SynthOverrides,
};
use tabscan::{Error, PipelineConfig};

/// Locates tables in page images and writes their cells as CSV.
#[derive(Parser)]
#[command(name = "tabscan", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Extract tables from images or directories of images.
    Extract(ExtractArgs),
    /// Score predictions against ground-truth XML.
    Eval(EvalArgs),
    /// Write a seeded synthetic corpus with ground truth.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Any config key, as `key=value`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    working_width: Option<u32>,
    #[arg(long)]
    pad: Option<u32>,
    #[arg(long)]
    threshold_start: Option<f64>,
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    seg_frac: Option<f64>,
    #[arg(long)]
    proximity: Option<usize>,
    #[arg(long)]
    min_cell: Option<u32>,
    #[arg(long)]
    merge_threshold: Option<f64>,
    #[arg(long)]
    empty_eps: Option<f64>,
    /// `ink` or `cmd:<command>` printing three scores for a PNG on stdin.
    #[arg(long)]
    classifier: Option<String>,
    /// OCR command template (`{input}` is the cell image path), or `stub:`
    /// / `stub:DIR` to read `<stem>.words.json` word boxes.
    #[arg(long)]
    ocr_cmd: Option<String>,
    #[arg(long, short = 'j')]
    parallelism: Option<usize>,
    #[arg(long, short = 'o')]
    out_dir: Option<PathBuf>,
    #[arg(long)]
    debug_images: bool,
    /// Fold continuation rows of multi-line cells into the row above.
    #[arg(long)]
    merge_multiline: bool,
    #[arg(long, value_enum)]
    arrows: Option<Arrows>,
    /// Record per-stage timings in the sidecar.
    #[arg(long)]
    timings: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Arrows {
    Ascii,
    Unicode,
}

#[derive(Args)]
struct ExtractArgs {
    /// Image files or directories.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// JSON list of extra region proposals `{x_min, y_min, x_max, y_max, page}`.
    #[arg(long)]
    regions: Option<PathBuf>,
    /// Write every region found as JSON to this file.
    #[arg(long)]
    emit_regions: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Area,
    Icdar,
}

#[derive(Args)]
struct EvalArgs {
    /// Directory with sidecars and CSV files from `extract`.
    pred_dir: PathBuf,
    /// Directory with `<stem>.xml` ground truth.
    truth_dir: PathBuf,
    #[arg(long, value_enum, default_value = "icdar")]
    mode: Mode,
    /// Compare cell text exactly instead of normalised.
    #[arg(long)]
    strict_text: bool,
    /// Also report micro-averaged scores.
    #[arg(long)]
    micro: bool,
    /// Where to write the JSON report; defaults to stdout only.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    count: usize,
    #[arg(long, short = 'o', default_value = "synth")]
    out_dir: PathBuf,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    ruled: Option<bool>,
    #[arg(long)]
    thickness: Option<u32>,
    #[arg(long)]
    density: Option<f64>,
    #[arg(long)]
    span: Option<bool>,
    #[arg(long)]
    sparse_column: Option<bool>,
}

enum Failure {
    Usage(String),
    Run(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InputFormat(_) => Failure::Usage(e.to_string()),
            other => Failure::Run(other.to_string()),
        }
    }
}

fn build_config(a: &ConfigArgs) -> Result<PipelineConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    let mut pairs = Vec::new();
    for s in &a.set {
        let (k, v) = s
            .split_once('=')
            .ok_or_else(|| Failure::Usage(format!("--set expects KEY=VALUE, got {s:?}")))?;
        pairs.push((k.trim().to_owned(), v.trim().to_owned()));
    }
    let mut put = |k: &str, v: Option<String>| {
        if let Some(v) = v {
            pairs.push((k.to_owned(), v));
        }
    };
    put("working_width", a.working_width.map(|v| v.to_string()));
    put("pad", a.pad.map(|v| v.to_string()));
    put("threshold_start", a.threshold_start.map(|v| v.to_string()));
    put("delta", a.delta.map(|v| v.to_string()));
    put("seg_frac", a.seg_frac.map(|v| v.to_string()));
    put("proximity", a.proximity.map(|v| v.to_string()));
    put("min_cell", a.min_cell.map(|v| v.to_string()));
    put("merge_threshold", a.merge_threshold.map(|v| v.to_string()));
    put("empty_eps", a.empty_eps.map(|v| v.to_string()));
    put("classifier", a.classifier.clone());
    put("ocr_cmd", a.ocr_cmd.clone());
    put("parallelism", a.parallelism.map(|v| v.to_string()));
    put("out_dir", a.out_dir.as_ref().map(|p| p.display().to_string()));
    put(
        "arrows",
        a.arrows.map(|v| match v {
            Arrows::Ascii => "ascii".to_owned(),
            Arrows::Unicode => "unicode".to_owned(),
        }),
    );
    for (flag, key) in [
        (a.debug_images, "debug_images"),
        (a.merge_multiline, "merge_multiline"),
        (a.timings, "timings"),
    ] {
        if flag {
            pairs.push((key.to_owned(), "true".to_owned()));
        }
    }
    cfg.apply_pairs(pairs)?;
    Ok(cfg)
}

fn read_regions(path: &Path) -> Result<Vec<RegionRecord>, Failure> {
    let bytes = std::fs::read(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let records: Vec<RegionRecord> =
        serde_json::from_slice(&bytes).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    for r in &records {
        r.region()?;
    }
    Ok(records)
}

fn extract(a: ExtractArgs) -> Result<ExitCode, Failure> {
    let cfg = build_config(&a.config)?;
    let proposals = match &a.regions {
        Some(p) => read_regions(p)?,
        None => Vec::new(),
    };
    let inputs = collect_inputs(&a.inputs)?;
    let summary = run_extract(&inputs, &proposals, &cfg)?;
    if let Some(path) = &a.emit_regions {
        let json = serde_json::to_vec_pretty(&summary.regions).map_err(|e| Failure::Run(e.to_string()))?;
        std::fs::write(path, json).map_err(|e| Failure::Run(format!("{}: {e}", path.display())))?;
    }
    let mut failed = 0;
    for o in &summary.outcomes {
        match &o.result {
            Ok(n) => println!("{}: {n} table(s)", o.input.display()),
            Err(e) => {
                failed += 1;
                eprintln!("FAILED {}: {e}", o.input.display());
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} of {} input(s) failed", summary.outcomes.len());
        Ok(ExitCode::from(1))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}

fn print_summary(r: &EvalReport) {
    println!("{:<28} {:>9} {:>9} {:>9}", "document", "precision", "recall", "f1");
    for d in &r.metrics.per_document {
        println!(
            "{:<28} {:>9.4} {:>9.4} {:>9.4}",
            d.id, d.scores.precision, d.scores.recall, d.scores.f1
        );
    }
    let a = &r.metrics.average;
    println!("{:<28} {:>9.4} {:>9.4} {:>9.4}", "average", a.precision, a.recall, a.f1);
    if let Some(m) = &r.metrics.micro {
        println!("{:<28} {:>9.4} {:>9.4} {:>9.4}", "micro", m.precision, m.recall, m.f1);
    }
    for stem in &r.missing {
        eprintln!("no prediction for {stem}");
    }
    for id in &r.metrics.unmatched {
        eprintln!("unmatched: {id}");
    }
}

fn eval(a: EvalArgs) -> Result<ExitCode, Failure> {
    for d in [&a.pred_dir, &a.truth_dir] {
        if !d.is_dir() {
            return Err(Failure::Usage(format!("{} is not a directory", d.display())));
        }
    }
    let mode = match a.mode {
        Mode::Area => EvalMode::Area,
        Mode::Icdar => EvalMode::Icdar,
    };
    let report = run_eval(&a.pred_dir, &a.truth_dir, mode, a.strict_text, a.micro)?;
    print_summary(&report);
    let json = serde_json::to_string_pretty(&report).map_err(|e| Failure::Run(e.to_string()))?;
    match &a.report {
        Some(p) => std::fs::write(p, json + "\n").map_err(|e| Failure::Run(format!("{}: {e}", p.display())))?,
        None => println!("{json}"),
    }
    Ok(ExitCode::SUCCESS)
}

fn synth(a: SynthArgs) -> Result<ExitCode, Failure> {
    let overrides = SynthOverrides {
        rows: a.rows,
        cols: a.cols,
        ruled: a.ruled,
        thickness: a.thickness,
        density: a.density,
        span: a.span,
        sparse_column: a.sparse_column,
    };
    let written = run_synth(a.seed, a.count, &overrides, &a.out_dir)?;
    println!("wrote {} table(s) to {}", written.len(), a.out_dir.display());
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Extract(a) => extract(a),
        Command::Eval(a) => eval(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Run(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}
