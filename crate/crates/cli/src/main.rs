//! `mapbench`: simulate a campus drive, evaluate degraded maps and replay
//! localization in them, then condense everything into tables and a plot.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mapbench::benchreport::BasisRequest;
use mapbench::Pose2D;

use commands::{Ctx, MapEvalArgs, ReplayArgs, ReportArgs};
use config::BenchConfig;
use error::Result;

#[derive(Parser)]
#[command(
    name = "mapbench",
    version,
    about = "Benchmark 2D maps by geometry, localization and effort"
)]
struct Cli {
    /// Seed for every random stream (overrides the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory; nothing is written outside it.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Bench configuration (JSON).
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Suppress progress messages.
    #[arg(long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate the world, ground-truth and degraded maps, sensor log and references.
    Simulate,
    /// Compare a candidate map with a reference map.
    MapEval(MapEvalCmd),
    /// Replay a sensor log against a map with Monte Carlo localization.
    Replay(ReplayCmd),
    /// Run simulate, map-eval and replay for every approach, then report.
    Bench,
    /// Rebuild tables and the scatter plot from a bench report.
    Report(ReportCmd),
}

#[derive(Args)]
struct MapEvalCmd {
    /// Candidate map metadata (or its .pgm).
    #[arg(long)]
    candidate: PathBuf,
    /// Reference map metadata (or its .pgm).
    #[arg(long)]
    reference: PathBuf,
    /// Reference measurements CSV.
    #[arg(long)]
    refs: Option<PathBuf>,
    /// Name used in the CSV row; defaults to the candidate file stem.
    #[arg(long)]
    name: Option<String>,
}

#[derive(Args)]
struct ReplayCmd {
    /// Map metadata (or its .pgm).
    #[arg(long)]
    map: PathBuf,
    /// Sensor log (JSONL).
    #[arg(long)]
    log: PathBuf,
    /// Checkpoint CSV; defaults to the checkpoints recorded in the log.
    #[arg(long)]
    checkpoints: Option<PathBuf>,
    /// Ground-truth trajectory CSV, needed for divergence detection.
    #[arg(long)]
    ground_truth: Option<PathBuf>,
    /// Start pose as x,y,theta.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    initial_pose: Option<Pose2D>,
    /// Exclude checkpoints at or after the detected divergence.
    #[arg(long)]
    until_divergence: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Basis {
    Gross,
    Net,
    Both,
}

#[derive(Args)]
struct ReportCmd {
    /// bench_report.json produced by `bench`.
    #[arg(long)]
    input: PathBuf,
    /// Effort basis for the scatter plot.
    #[arg(long, value_enum)]
    basis: Option<Basis>,
}

fn parse_pose(s: &str) -> std::result::Result<Pose2D, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    match v[..] {
        [x, y, theta] if v.iter().all(|c| c.is_finite()) => Ok(Pose2D::new(x, y, theta)),
        _ => Err("expected x,y,theta".into()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => BenchConfig::load(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let out = cli
        .out
        .clone()
        .or_else(|| cfg.out.clone())
        .unwrap_or_else(|| PathBuf::from("mapbench-out"));
    let ctx = Ctx { quiet: cli.quiet };
    match cli.command {
        Command::Simulate => commands::cmd_simulate(&cfg, &out, &ctx),
        Command::MapEval(a) => {
            let args = MapEvalArgs {
                candidate: a.candidate,
                reference: a.reference,
                refs: a.refs,
                name: a.name,
            };
            commands::cmd_map_eval(&cfg, &args, &out, &ctx).map(|_| ())
        }
        Command::Replay(a) => {
            let args = ReplayArgs {
                map: a.map,
                log: a.log,
                checkpoints: a.checkpoints,
                ground_truth: a.ground_truth,
                initial_pose: a.initial_pose,
                until_divergence: a.until_divergence,
            };
            commands::cmd_replay(&cfg, &args, &out, &ctx)
        }
        Command::Bench => commands::cmd_bench(&cfg, &out, &ctx).map(|_| ()),
        Command::Report(a) => {
            let basis = a.basis.map(|b| match b {
                Basis::Gross => BasisRequest::Gross,
                Basis::Net => BasisRequest::Net,
                Basis::Both => BasisRequest::Both,
            });
            commands::cmd_report(&cfg, &ReportArgs { input: a.input, basis }, &out, &ctx)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("mapbench: {e}");
            ExitCode::from(e.code() as u8)
        }
    }
}
