//! Command-line front end: `run` streams events through the tissue,
//! `synth` generates labeled evaluation streams, `inspect` summarizes a
//! snapshot. Exit codes: 0 success, 2 configuration error, 3 input/output
//! error.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use tissue::pipeline::{detect_format, read_events, write_antigen, InputFormat, Snapshot};
use tissue::{Error, Pipeline, PipelineConfig, Result};

#[derive(Parser)]
#[command(name = "tissue", version, about = "Streaming tissue pre-processor: SOM clustering, receptor amplification and novelty gating over event streams")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Stream events through the tissue and write emitted antigens.
    Run(RunArgs),
    /// Generate a labeled synthetic event stream from the config's synth section.
    Synth(SynthArgs),
    /// Print a JSON summary of a saved snapshot.
    Inspect(InspectArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Input events: a .jsonl/.csv path, or '-' for stdin (JSON Lines).
    #[arg(long)]
    input: Option<String>,
    /// Antigen output: a path, or '-' for stdout.
    #[arg(long)]
    out: Option<String>,
    /// Write the final metrics document here.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// Export the final grid as CSV.
    #[arg(long)]
    grid_dump: Option<PathBuf>,
    /// Export the final inflammation field as CSV.
    #[arg(long)]
    field_dump: Option<PathBuf>,
    /// Save the final state as a snapshot.
    #[arg(long)]
    snapshot_out: Option<PathBuf>,
    /// Resume from a snapshot instead of a fresh map.
    #[arg(long)]
    snapshot_in: Option<PathBuf>,
    /// Override the config's seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SynthArgs {
    /// Pipeline configuration (JSON) with a "synth" section.
    #[arg(long)]
    config: PathBuf,
    /// Number of events to generate.
    #[arg(long)]
    n: usize,
    /// Stream seed.
    #[arg(long)]
    seed: u64,
    /// Output path, or '-' for stdout.
    #[arg(long)]
    out: String,
}

#[derive(Args)]
struct InspectArgs {
    /// Snapshot to summarize.
    #[arg(long)]
    snapshot: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(args) => run(args),
        Command::Synth(args) => synth(args),
        Command::Inspect(args) => inspect(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tissue: {e}");
            match e {
                Error::Config(_) => ExitCode::from(2),
                _ => ExitCode::from(3),
            }
        }
    }
}

fn open_input(spec: &str) -> Result<(Box<dyn BufRead>, InputFormat)> {
    if spec == "-" {
        return Ok((Box::new(BufReader::new(std::io::stdin())), InputFormat::Jsonl));
    }
    let file = File::open(spec)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot open input {spec}: {e}"))))?;
    Ok((Box::new(BufReader::new(file)), detect_format(spec)))
}

fn open_output(spec: &str) -> Result<Box<dyn Write>> {
    if spec == "-" {
        return Ok(Box::new(BufWriter::new(std::io::stdout())));
    }
    let file = File::create(spec)
        .map_err(|e| Error::Io(std::io::Error::new(e.kind(), format!("cannot create output {spec}: {e}"))))?;
    Ok(Box::new(BufWriter::new(file)))
}

fn write_file(path: &Path, body: &[u8]) -> Result<()> {
    std::fs::write(path, body).map_err(|e| {
        Error::Io(std::io::Error::new(e.kind(), format!("cannot write {}: {e}", path.display())))
    })
}

fn run(args: RunArgs) -> Result<()> {
    let mut cfg = PipelineConfig::from_path(&args.config)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }

    let snapshot_in = args.snapshot_in.or_else(|| cfg.io.snapshot_in.clone());
    let mut pipeline = match snapshot_in {
        Some(path) => Pipeline::from_snapshot(&cfg, Snapshot::load(&path)?)?,
        None => Pipeline::new(&cfg)?,
    };

    let input_spec = args
        .input
        .or_else(|| cfg.io.input.clone())
        .ok_or_else(|| Error::config("no input given (--input or io.input)"))?;
    let out_spec = args
        .out
        .or_else(|| cfg.io.out.clone())
        .ok_or_else(|| Error::config("no output given (--out or io.out)"))?;

    let (reader, format) = open_input(&input_spec)?;
    let mut out = open_output(&out_spec)?;

    for item in read_events(reader, format) {
        match item {
            Ok(event) => match pipeline.process_event(&event) {
                Ok(Some(antigen)) => write_antigen(&mut out, &antigen)?,
                Ok(None) => {}
                // Malformed records are already counted; keep streaming.
                Err(Error::Input(_)) => {}
                Err(e) => return Err(e),
            },
            Err(Error::Input(_)) => pipeline.note_malformed(),
            Err(e) => return Err(e),
        }
    }
    out.flush()?;

    let metrics_path = args.metrics.or_else(|| cfg.io.metrics.clone());
    if let Some(path) = metrics_path {
        let body = serde_json::to_string_pretty(&pipeline.metrics())
            .expect("metrics serialize") + "\n";
        write_file(&path, body.as_bytes())?;
    }
    if let Some(path) = args.grid_dump.or_else(|| cfg.io.grid_dump.clone()) {
        let mut buf = Vec::new();
        pipeline.map().write_csv(&mut buf)?;
        write_file(&path, &buf)?;
    }
    if let Some(path) = args.field_dump.or_else(|| cfg.io.field_dump.clone()) {
        let mut buf = Vec::new();
        pipeline.field().write_csv(&mut buf)?;
        write_file(&path, &buf)?;
    }
    if let Some(path) = args.snapshot_out.or_else(|| cfg.io.snapshot_out.clone()) {
        pipeline.snapshot().save(&path)?;
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let cfg = PipelineConfig::from_path(&args.config)?;
    let synth_cfg = cfg
        .synth
        .as_ref()
        .ok_or_else(|| Error::config(format!("config {} has no synth section", args.config.display())))?;
    let events = tissue::pipeline::synth::generate(synth_cfg, args.n, args.seed)?;
    let mut out = open_output(&args.out)?;
    for event in &events {
        serde_json::to_writer(&mut out, event).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

fn inspect(args: InspectArgs) -> Result<()> {
    let snapshot = Snapshot::load(&args.snapshot)?;
    let map = &snapshot.map;
    let total_hits: u64 = map.cells().iter().map(|c| c.hit_count).sum();
    let attention = snapshot.field.attention(5, 0.0);
    let ranges: Vec<serde_json::Value> = (0..snapshot.norm.dim())
        .map(|i| match snapshot.norm.range(i) {
            Some((lo, hi)) => serde_json::json!({"min": lo, "max": hi}),
            None => serde_json::json!(null),
        })
        .collect();
    let summary = serde_json::json!({
        "version": snapshot.version,
        "map": {
            "width": map.width(),
            "height": map.height(),
            "dim": map.dim(),
            "step": map.step(),
            "total_hits": total_hits,
        },
        "norm": {
            "count": snapshot.norm.count(),
            "ranges": ranges,
        },
        "field": {
            "total_mass": snapshot.field.total_mass(),
            "hotspots": attention.hotspots,
            "priority_share": attention.priority_share,
        },
        "counters": snapshot.counters,
    });
    let mut stdout = std::io::stdout().lock();
    writeln!(stdout, "{}", serde_json::to_string_pretty(&summary).expect("summary serialize"))?;
    Ok(())
}
