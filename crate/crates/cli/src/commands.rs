use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use mapbench::benchreport::{
    emit_tables, quality_effort_points, render_scatter, ApproachResult, BasisRequest, BenchReport,
};
use mapbench::gridmap::{load_map_yaml, save_map};
use mapbench::mapmetrics::{
    map_quality_report, read_references, write_references, MapQualityReport, Metric, ReferenceMeasurement,
    REPORT_SCHEMA_VERSION,
};
use mapbench::mcl::{
    checkpoint_deviation, detect_divergence, run_replay, Checkpoint, MclConfig, ReplayAnnotation, SensorLog, TimedPose,
    TrajectoryEstimate,
};
use mapbench::simharness::{
    build_map, checkpoints_to_csv, poses_to_csv, rasterize, read_checkpoints_csv, read_poses_csv, simulate_drive,
    GroundTruthLog, ScenarioConfig,
};
use mapbench::{DeviationStats, OccupancyGrid, Pose2D};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ApproachConfig, BenchConfig};
use crate::error::{CliError, Result};
use crate::manifest::OutDir;

pub const LOCALIZATION_SCHEMA_VERSION: u32 = 1;

pub struct Ctx {
    pub quiet: bool,
}

impl Ctx {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            eprintln!("{}", msg.as_ref());
        }
    }
}

fn secs(t: Instant) -> f64 {
    t.elapsed().as_secs_f64()
}

/// Loads a map given its metadata file, or the image next to one.
pub fn load_map(path: &Path) -> Result<OccupancyGrid> {
    let meta = if path.extension().is_some_and(|e| e == "pgm") {
        path.with_extension("yaml")
    } else {
        path.to_path_buf()
    };
    if !meta.exists() {
        return Err(CliError::io(&meta, "map metadata not found"));
    }
    Ok(load_map_yaml(&meta)?)
}

fn save_grid(out: &mut OutDir, stem: &str, grid: &OccupancyGrid) -> Result<()> {
    let (img, meta) = (format!("{stem}.pgm"), format!("{stem}.yaml"));
    save_map(grid, &out.path(&img)?, &out.path(&meta)?)?;
    out.record(&img);
    out.record(&meta);
    Ok(())
}

fn references_csv(refs: &[ReferenceMeasurement]) -> Vec<u8> {
    let mut buf = Vec::new();
    write_references(&mut buf, refs).expect("in-memory write");
    buf
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v}"))
}

fn quality_csv(name: &str, q: &MapQualityReport) -> String {
    let geo = q.geometric.value();
    let cells = [
        fmt_opt(geo.map(|s| s.average)),
        fmt_opt(geo.map(|s| s.median)),
        fmt_opt(geo.map(|s| s.max)),
        fmt_opt(geo.map(|s| s.min)),
        fmt_opt(q.adnn.value().copied()),
        fmt_opt(q.hausdorff.value().copied()),
        fmt_opt(q.icp.value().map(|i| i.residuals.rmse)),
        fmt_opt(q.ssim.value().copied()),
        fmt_opt(q.corner_match_ratio.value().copied()),
    ];
    format!(
        "approach,geometric_average_m,geometric_median_m,geometric_max_m,geometric_min_m,adnn_m,hausdorff_m,icp_rmse_m,ssim,corner_match_ratio\n{},{}\n",
        csv_field(name),
        cells.join(",")
    )
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn skipped_report(reason: &str) -> MapQualityReport {
    MapQualityReport {
        schema_version: REPORT_SCHEMA_VERSION,
        geometric: Metric::not_computed(reason),
        adnn: Metric::not_computed(reason),
        hausdorff: Metric::not_computed(reason),
        icp: Metric::not_computed(reason),
        ssim: Metric::not_computed(reason),
        corner_match_ratio: Metric::not_computed(reason),
    }
}

fn write_quality(out: &mut OutDir, dir: &str, name: &str, q: &MapQualityReport) -> Result<()> {
    out.write(
        &format!("{dir}map_quality.json"),
        serde_json::to_string_pretty(q).expect("serializes") + "\n",
    )?;
    out.write(&format!("{dir}map_quality.csv"), quality_csv(name, q))?;
    Ok(())
}

#[derive(Serialize)]
struct LocalizationReport<'a> {
    schema_version: u32,
    approach: &'a str,
    /// Checkpoints at or after this time were excluded, seconds.
    checkpoint_cutoff: Option<f64>,
    checkpoints_used: usize,
    checkpoint_deviation: &'a Metric<DeviationStats>,
    divergence: Option<f64>,
    annotations: &'a [ReplayAnnotation],
}

struct Localization {
    stats: Metric<DeviationStats>,
    cutoff: Option<f64>,
    used: usize,
}

fn localize(traj: &TrajectoryEstimate, checkpoints: &[Checkpoint], cutoff: Option<f64>) -> Localization {
    let cps: Vec<Checkpoint> = checkpoints
        .iter()
        .filter(|c| cutoff.is_none_or(|t| c.timestamp < t))
        .cloned()
        .collect();
    let stats = if cps.is_empty() {
        Metric::not_computed("no checkpoints before the cutoff")
    } else {
        Metric::from_result(checkpoint_deviation(traj, &cps))
    };
    Localization {
        stats,
        cutoff,
        used: cps.len(),
    }
}

fn write_localization(
    out: &mut OutDir,
    dir: &str,
    name: &str,
    traj: &TrajectoryEstimate,
    loc: &Localization,
    divergence: Option<f64>,
) -> Result<()> {
    out.write(&format!("{dir}trajectory.csv"), traj.to_csv())?;
    let rep = LocalizationReport {
        schema_version: LOCALIZATION_SCHEMA_VERSION,
        approach: name,
        checkpoint_cutoff: loc.cutoff,
        checkpoints_used: loc.used,
        checkpoint_deviation: &loc.stats,
        divergence,
        annotations: &traj.annotations,
    };
    out.write(
        &format!("{dir}localization.json"),
        serde_json::to_string_pretty(&rep).expect("serializes") + "\n",
    )?;
    Ok(())
}

struct Simulated {
    truth: OccupancyGrid,
    maps: Vec<OccupancyGrid>,
    log: SensorLog,
    gt: GroundTruthLog,
}

fn simulate_into(
    cfg: &BenchConfig,
    out: &mut OutDir,
    ctx: &Ctx,
    timings: &mut BTreeMap<String, f64>,
) -> Result<Simulated> {
    let world = cfg.world()?;
    world.validate().map_err(|e| CliError::Usage(format!("world: {e}")))?;
    let scenario: ScenarioConfig = cfg.scenario()?;
    scenario
        .validate(&world)
        .map_err(|e| CliError::Usage(format!("scenario: {e}")))?;

    let t = Instant::now();
    ctx.say("simulating drive");
    let (log, gt) = simulate_drive(&world, &scenario)?;
    let truth = rasterize(&world, scenario.resolution, &world.bounds)?;
    timings.insert("simulate".into(), secs(t));

    let maps = cfg
        .approaches
        .iter()
        .map(|a| {
            let t = Instant::now();
            ctx.say(format!("building {} map", a.name));
            let m = build_map(&a.profile, &world, &truth, &gt.poses, cfg.seed)?;
            timings.insert(format!("{}/map", a.name), secs(t));
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;

    out.write("world.json", world.to_json() + "\n")?;
    out.write(
        "scenario.json",
        serde_json::to_string_pretty(&scenario).expect("serializes") + "\n",
    )?;
    out.write(
        "config.json",
        serde_json::to_string_pretty(&cfg.snapshot()).expect("serializes") + "\n",
    )?;
    save_grid(out, "maps/truth", &truth)?;
    for (a, m) in cfg.approaches.iter().zip(&maps) {
        save_grid(out, &format!("maps/{}", a.name), m)?;
    }
    let p = out.path("log/sensor.jsonl")?;
    log.save(&p)?;
    out.record("log/sensor.jsonl");
    out.write("ground_truth/poses.csv", poses_to_csv(&gt.poses))?;
    out.write("ground_truth/checkpoints.csv", checkpoints_to_csv(&gt.checkpoints))?;
    out.write("ground_truth/references.csv", references_csv(&gt.references))?;

    Ok(Simulated { truth, maps, log, gt })
}

pub fn cmd_simulate(cfg: &BenchConfig, out_dir: &Path, ctx: &Ctx) -> Result<()> {
    let mut out = OutDir::create(out_dir)?;
    let mut timings = BTreeMap::new();
    let sim = simulate_into(cfg, &mut out, ctx, &mut timings)?;
    ctx.say(format!(
        "wrote {} maps, {} log frames, {} checkpoints, {} references",
        sim.maps.len() + 1,
        sim.log.frames.len(),
        sim.gt.checkpoints.len(),
        sim.gt.references.len()
    ));
    out.finish("simulate", cfg)?;
    Ok(())
}

pub struct MapEvalArgs {
    pub candidate: PathBuf,
    pub reference: PathBuf,
    pub refs: Option<PathBuf>,
    pub name: Option<String>,
}

pub fn cmd_map_eval(cfg: &BenchConfig, args: &MapEvalArgs, out_dir: &Path, ctx: &Ctx) -> Result<MapQualityReport> {
    let candidate = load_map(&args.candidate)?;
    let reference = load_map(&args.reference)?;
    let refs: std::result::Result<Vec<ReferenceMeasurement>, String> = match &args.refs {
        None => Err("no reference measurements supplied".into()),
        Some(p) => match std::fs::File::open(p) {
            Err(e) => Err(format!("{}: {e}", p.display())),
            Ok(f) => read_references(f).map_err(|e| format!("{}: {e}", p.display())),
        },
    };
    let refs = match refs {
        Ok(r) => Some(r),
        Err(reason) => {
            ctx.say(format!("geometric verification skipped: {reason}"));
            None
        }
    };
    let mut q = map_quality_report(&candidate, &reference, refs.as_deref(), &cfg.report);
    if refs.is_none() {
        if let Some(p) = &args.refs {
            q.geometric = Metric::not_computed(format!("reference file {} unreadable", p.display()));
        }
    }
    let name = args.name.clone().unwrap_or_else(|| {
        args.candidate
            .file_stem()
            .map_or_else(|| "candidate".into(), |s| s.to_string_lossy().into_owned())
    });
    let mut out = OutDir::create(out_dir)?;
    write_quality(&mut out, "", &name, &q)?;
    out.finish("map-eval", cfg)?;
    Ok(q)
}

pub struct ReplayArgs {
    pub map: PathBuf,
    pub log: PathBuf,
    pub checkpoints: Option<PathBuf>,
    pub ground_truth: Option<PathBuf>,
    pub initial_pose: Option<Pose2D>,
    pub until_divergence: bool,
}

fn replay_grid(grid: &OccupancyGrid, log: &SensorLog, mcl: &MclConfig, start: Pose2D) -> Result<TrajectoryEstimate> {
    Ok(run_replay(grid, log, mcl, start)?)
}

pub fn cmd_replay(cfg: &BenchConfig, args: &ReplayArgs, out_dir: &Path, ctx: &Ctx) -> Result<()> {
    let grid = load_map(&args.map)?;
    let log = SensorLog::load(&args.log).map_err(|e| CliError::io(&args.log, e))?;
    let checkpoints = match &args.checkpoints {
        Some(p) => read_checkpoints_csv(p).map_err(|e| CliError::io(p, e))?,
        None => log.checkpoints.clone(),
    };
    let gt: Option<Vec<TimedPose>> = match &args.ground_truth {
        Some(p) => Some(read_poses_csv(p).map_err(|e| CliError::io(p, e))?),
        None => None,
    };
    if args.until_divergence && gt.is_none() {
        return Err(CliError::Usage("--until-divergence needs --ground-truth".into()));
    }
    let start = args
        .initial_pose
        .or_else(|| gt.as_ref().and_then(|g| g.first().map(|p| p.pose)))
        .or_else(|| checkpoints.first().map(|c| c.ground_truth_pose))
        .ok_or_else(|| CliError::Usage("no initial pose: pass --initial-pose, --ground-truth or checkpoints".into()))?;
    let mut mcl = cfg.mcl;
    mcl.seed = cfg.seed;
    ctx.say("replaying log");
    let traj = replay_grid(&grid, &log, &mcl, start)?;
    let divergence = match &gt {
        Some(g) => detect_divergence(&traj.timed_poses(), g, cfg.divergence.threshold, cfg.divergence.hold)?,
        None => None,
    };
    let cutoff = if args.until_divergence { divergence } else { None };
    let loc = localize(&traj, &checkpoints, cutoff);
    let name = args
        .map
        .file_stem()
        .map_or_else(String::new, |s| s.to_string_lossy().into_owned());
    let mut out = OutDir::create(out_dir)?;
    write_localization(&mut out, "", &name, &traj, &loc, divergence)?;
    out.finish("replay", cfg)?;
    if let Some(d) = divergence {
        ctx.say(format!("localization diverged at t = {d:.2} s"));
    }
    match &loc.stats {
        Metric::Computed { value } => {
            ctx.say(format!(
                "checkpoint average {:.4} m over {} checkpoints",
                value.average, loc.used
            ));
            Ok(())
        }
        Metric::NotComputed { reason } => Err(CliError::Eval(reason.clone())),
    }
}

struct Leg {
    quality: MapQualityReport,
    traj: Option<std::result::Result<TrajectoryEstimate, String>>,
    divergence: Option<f64>,
    seconds: f64,
}

fn write_report(
    out: &mut OutDir,
    dir: &str,
    report: &BenchReport,
    basis: BasisRequest,
    ctx: &Ctx,
) -> Result<Vec<String>> {
    let mut problems = Vec::new();
    out.write(&format!("{dir}bench_report.json"), report.to_json())?;
    for t in emit_tables(&report.results) {
        out.write(&format!("{dir}{}.csv", t.name), t.to_csv())?;
        out.write(&format!("{dir}{}.json", t.name), t.to_json())?;
    }
    match quality_effort_points(&report.results, basis).and_then(|p| render_scatter(&p)) {
        Ok(svg) => {
            out.write(&format!("{dir}scatter.svg"), svg)?;
        }
        Err(e) => {
            ctx.say(format!("scatter skipped: {e}"));
            problems.push(format!("scatter: {e}"));
        }
    }
    Ok(problems)
}

pub fn cmd_bench(cfg: &BenchConfig, out_dir: &Path, ctx: &Ctx) -> Result<BenchReport> {
    let t_all = Instant::now();
    let mut out = OutDir::create(out_dir)?;
    let mut timings = BTreeMap::new();
    let sim = simulate_into(cfg, &mut out, ctx, &mut timings)?;
    let mut mcl = cfg.mcl;
    mcl.seed = cfg.seed;
    let start = sim.gt.poses.first().map(|p| p.pose).unwrap_or_default();

    let legs: Vec<Leg> = cfg
        .approaches
        .par_iter()
        .zip(&sim.maps)
        .map(|(_, map): (&ApproachConfig, &OccupancyGrid)| {
            let t = Instant::now();
            let quality = if cfg.legs.map_eval {
                map_quality_report(map, &sim.truth, Some(&sim.gt.references), &cfg.report)
            } else {
                skipped_report("map-eval leg disabled")
            };
            let (traj, divergence) = if cfg.legs.replay {
                let r = run_replay(map, &sim.log, &mcl, start).map_err(|e| e.to_string());
                let d = r.as_ref().ok().and_then(|tr| {
                    detect_divergence(
                        &tr.timed_poses(),
                        &sim.gt.poses,
                        cfg.divergence.threshold,
                        cfg.divergence.hold,
                    )
                    .ok()
                    .flatten()
                });
                (Some(r), d)
            } else {
                (None, None)
            };
            Leg {
                quality,
                traj,
                divergence,
                seconds: secs(t),
            }
        })
        .collect();

    let cutoff = if cfg.until_divergence {
        legs.iter().filter_map(|l| l.divergence).min_by(f64::total_cmp)
    } else {
        None
    };
    let mut failures = Vec::new();
    let mut results = Vec::with_capacity(legs.len());
    for (a, leg) in cfg.approaches.iter().zip(&legs) {
        let dir = format!("approaches/{}/", a.name);
        write_quality(&mut out, &dir, &a.name, &leg.quality)?;
        if let Some(Metric::NotComputed { reason }) = cfg.legs.map_eval.then_some(&leg.quality.geometric) {
            failures.push(format!("{}: geometric verification: {reason}", a.name));
        }
        let localization = match &leg.traj {
            None => Metric::not_computed("replay leg disabled"),
            Some(Err(e)) => {
                failures.push(format!("{}: replay: {e}", a.name));
                Metric::not_computed(e.clone())
            }
            Some(Ok(traj)) => {
                let loc = localize(traj, &sim.gt.checkpoints, cutoff);
                write_localization(&mut out, &dir, &a.name, traj, &loc, leg.divergence)?;
                if let Metric::NotComputed { reason } = &loc.stats {
                    failures.push(format!("{}: localization: {reason}", a.name));
                }
                loc.stats
            }
        };
        timings.insert(format!("{}/evaluate", a.name), leg.seconds);
        let map_s = timings.get(&format!("{}/map", a.name)).copied().unwrap_or(0.0);
        let effort = cfg
            .ledger(a, Some((map_s + leg.seconds) / 3600.0))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        ctx.say(format!(
            "{}: geometric avg {} m, checkpoint avg {} m, divergence {}",
            a.name,
            fmt_opt(leg.quality.geometric.value().map(|s| s.average)),
            fmt_opt(localization.value().map(|s| s.average)),
            leg.divergence.map_or_else(|| "none".into(), |d| format!("{d:.2} s"))
        ));
        results.push(ApproachResult {
            approach: a.name.clone(),
            map_quality: leg.quality.clone(),
            localization,
            divergence: leg.divergence,
            effort,
        });
    }

    let report = BenchReport::new(cfg.seed, results);
    let t = Instant::now();
    failures.extend(write_report(&mut out, "report/", &report, cfg.scatter_basis, ctx)?);
    timings.insert("report".into(), secs(t));
    timings.insert("total".into(), secs(t_all));
    let timing_doc = serde_json::json!({ "seconds": timings, "note": "wall-clock, not reproducible" });
    out.write_untracked(
        "timings.json",
        serde_json::to_string_pretty(&timing_doc).expect("serializes") + "\n",
    )?;
    out.finish("bench", cfg)?;
    if failures.is_empty() {
        Ok(report)
    } else {
        Err(CliError::Eval(failures.join("; ")))
    }
}

pub struct ReportArgs {
    pub input: PathBuf,
    pub basis: Option<BasisRequest>,
}

pub fn cmd_report(cfg: &BenchConfig, args: &ReportArgs, out_dir: &Path, ctx: &Ctx) -> Result<()> {
    if !args.input.exists() {
        return Err(CliError::io(&args.input, "report input not found"));
    }
    let report = BenchReport::load(&args.input).map_err(|e| match e {
        mapbench::EvalError::Map(m) => m.into(),
        other => CliError::Usage(other.to_string()),
    })?;
    let mut out = OutDir::create(out_dir)?;
    let problems = write_report(&mut out, "", &report, args.basis.unwrap_or(cfg.scatter_basis), ctx)?;
    out.finish("report", cfg)?;
    if problems.is_empty() {
        Ok(())
    } else {
        Err(CliError::Eval(problems.join("; ")))
    }
}
