use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use mapbench::mapmetrics::{MapQualityReport, Metric};
use serde_json::Value;
use tempfile::TempDir;

fn mapbench(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mapbench"))
        .current_dir(cwd)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn files_under(root: &Path) -> Vec<String> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(root).unwrap().to_string_lossy().replace('\\', "/"));
            }
        }
    }
    out.sort();
    out
}

fn simulate(dir: &TempDir, sub: &str) -> PathBuf {
    let out = dir.path().join(sub);
    let o = mapbench(dir.path(), &["simulate", "--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out
}

#[test]
fn usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    assert_eq!(code(&mapbench(dir.path(), &[])), 1);
    assert_eq!(code(&mapbench(dir.path(), &["frobnicate"])), 1);
    assert_eq!(code(&mapbench(dir.path(), &["simulate", "--seed", "x"])), 1);
    assert_eq!(code(&mapbench(dir.path(), &["--help"])), 0);

    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, "{ \"mcl\": { \"n_min\": 0 } }").unwrap();
    let o = mapbench(
        dir.path(),
        &["simulate", "--config", cfg.to_str().unwrap(), "--out", "o"],
    );
    assert_eq!(code(&o), 1, "{}", stderr(&o));
    std::fs::write(&cfg, "not json").unwrap();
    assert_eq!(
        code(&mapbench(
            dir.path(),
            &["simulate", "--config", cfg.to_str().unwrap(), "--out", "o"]
        )),
        1
    );
}

#[test]
fn missing_world_file_names_the_path() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, "{ \"world\": \"nowhere/world.json\" }").unwrap();
    let o = mapbench(
        dir.path(),
        &["simulate", "--quiet", "--config", cfg.to_str().unwrap(), "--out", "o"],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("nowhere/world.json"), "{}", stderr(&o));
}

#[test]
fn simulate_manifest_lists_maps_and_log_and_is_reproducible() {
    let dir = TempDir::new().unwrap();
    let a = simulate(&dir, "a");
    let m = read_json(&a.join("manifest.json"));
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seed"], 0);
    let paths: Vec<&str> = m["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x["path"].as_str().unwrap())
        .collect();
    let maps: Vec<&&str> = paths
        .iter()
        .filter(|p| p.starts_with("maps/") && p.ends_with(".pgm"))
        .collect();
    assert_eq!(maps.len(), 4, "{paths:?}");
    assert!(paths.contains(&"maps/truth.pgm"));
    assert_eq!(paths.iter().filter(|p| p.starts_with("log/")).count(), 1);

    // every file on disk is either the manifest or listed in it
    let mut listed: Vec<String> = paths.iter().map(|p| p.to_string()).collect();
    listed.push("manifest.json".into());
    listed.sort();
    assert_eq!(files_under(&a), listed);

    let b = simulate(&dir, "b");
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );

    let c = dir.path().join("c");
    let o = mapbench(
        dir.path(),
        &["simulate", "--quiet", "--seed", "3", "--out", c.to_str().unwrap()],
    );
    assert_eq!(code(&o), 0);
    assert_eq!(read_json(&c.join("manifest.json"))["seed"], 3);
    assert_ne!(
        std::fs::read(a.join("log/sensor.jsonl")).unwrap(),
        std::fs::read(c.join("log/sensor.jsonl")).unwrap()
    );
}

#[test]
fn nothing_is_written_outside_the_output_directory() {
    let dir = TempDir::new().unwrap();
    let cwd = dir.path().join("cwd");
    std::fs::create_dir(&cwd).unwrap();
    let out = dir.path().join("out");
    let o = mapbench(&cwd, &["simulate", "--quiet", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(files_under(&cwd).is_empty());
    let mut top: Vec<String> = std::fs::read_dir(dir.path())
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    top.sort();
    assert_eq!(top, ["cwd", "out"]);
}

#[test]
fn map_eval_identity_and_missing_refs() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, "sim");
    let truth = sim.join("maps/truth.yaml");
    let refs = sim.join("ground_truth/references.csv");
    let out = dir.path().join("eval");
    let o = mapbench(
        dir.path(),
        &[
            "map-eval",
            "--quiet",
            "--candidate",
            truth.to_str().unwrap(),
            "--reference",
            truth.to_str().unwrap(),
            "--refs",
            refs.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let q: MapQualityReport =
        serde_json::from_str(&std::fs::read_to_string(out.join("map_quality.json")).unwrap()).unwrap();
    let geo = q.geometric.value().expect("geometric computed");
    assert!(geo.average <= 0.05, "{}", geo.average);
    assert_eq!(q.adnn.value(), Some(&0.0));
    assert_eq!(q.hausdorff.value(), Some(&0.0));
    let icp = q.icp.value().unwrap();
    assert!(icp.residuals.rmse < 1e-9);
    assert!(icp.transform.theta.abs() < 1e-9 && icp.transform.translation().norm() < 1e-9);
    assert!((q.ssim.value().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(q.corner_match_ratio.value(), Some(&1.0));
    let csv = std::fs::read_to_string(out.join("map_quality.csv")).unwrap();
    assert!(csv.lines().nth(1).unwrap().starts_with("truth,"));

    let tls = sim.join("maps/TLS-like.pgm");
    let out2 = dir.path().join("eval2");
    let o = mapbench(
        dir.path(),
        &[
            "map-eval",
            "--quiet",
            "--candidate",
            tls.to_str().unwrap(),
            "--reference",
            truth.to_str().unwrap(),
            "--refs",
            "missing.csv",
            "--out",
            out2.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let q: MapQualityReport =
        serde_json::from_str(&std::fs::read_to_string(out2.join("map_quality.json")).unwrap()).unwrap();
    assert!(matches!(q.geometric, Metric::NotComputed { .. }));
    assert!(q.adnn.value().is_some() && q.hausdorff.value().is_some() && q.ssim.value().is_some());
    assert!(q.icp.value().is_some() && q.corner_match_ratio.value().is_some());
    let row = std::fs::read_to_string(out2.join("map_quality.csv")).unwrap();
    assert!(row.lines().nth(1).unwrap().starts_with("TLS-like,n/a,n/a,n/a,n/a,"));
}

#[test]
fn map_eval_missing_map_is_io_error() {
    let dir = TempDir::new().unwrap();
    let o = mapbench(
        dir.path(),
        &[
            "map-eval",
            "--candidate",
            "a.yaml",
            "--reference",
            "b.yaml",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("a.yaml"));
}

#[test]
fn replay_is_reproducible_and_until_divergence_drops_late_checkpoints() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, "sim");
    let s = |p: &str| sim.join(p).to_str().unwrap().to_string();
    let (map, log, gt) = (
        s("maps/PABC-like.yaml"),
        s("log/sensor.jsonl"),
        s("ground_truth/poses.csv"),
    );
    let replay = |out: &str, extra: &[&str]| {
        let out = dir.path().join(out);
        let mut args = vec!["replay", "--quiet", "--map", &map, "--log", &log, "--ground-truth", &gt];
        args.extend_from_slice(extra);
        let o_s = out.to_str().unwrap().to_string();
        args.extend_from_slice(&["--out", &o_s]);
        let o = mapbench(dir.path(), &args);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let a = replay("r1", &[]);
    let b = replay("r2", &[]);
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(b.join("trajectory.csv")).unwrap()
    );
    assert_eq!(
        std::fs::read(a.join("manifest.json")).unwrap(),
        std::fs::read(b.join("manifest.json")).unwrap()
    );

    let full = read_json(&a.join("localization.json"));
    let div = full["divergence"]
        .as_f64()
        .expect("the corridor makes the replay diverge");
    assert!(full["checkpoint_cutoff"].is_null());
    assert_eq!(full["checkpoints_used"], 12);

    let c = replay("r3", &["--until-divergence"]);
    assert_eq!(
        std::fs::read(a.join("trajectory.csv")).unwrap(),
        std::fs::read(c.join("trajectory.csv")).unwrap()
    );
    let cut = read_json(&c.join("localization.json"));
    assert_eq!(cut["checkpoint_cutoff"].as_f64(), Some(div));
    let checkpoints = std::fs::read_to_string(sim.join("ground_truth/checkpoints.csv")).unwrap();
    let before = checkpoints
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() < div)
        .count();
    assert!(before < 12);
    assert_eq!(cut["checkpoints_used"].as_u64(), Some(before as u64));
    assert_eq!(
        cut["checkpoint_deviation"]["value"]["count"].as_u64(),
        Some(before as u64)
    );
}

#[test]
fn replay_argument_errors() {
    let dir = TempDir::new().unwrap();
    let sim = simulate(&dir, "sim");
    let s = |p: &str| sim.join(p).to_str().unwrap().to_string();
    let o = mapbench(
        dir.path(),
        &[
            "replay",
            "--map",
            "none.yaml",
            "--log",
            &s("log/sensor.jsonl"),
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("none.yaml"));
    let o = mapbench(
        dir.path(),
        &[
            "replay",
            "--map",
            &s("maps/truth.yaml"),
            "--log",
            &s("log/sensor.jsonl"),
            "--until-divergence",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 1);
    let o = mapbench(
        dir.path(),
        &[
            "replay",
            "--map",
            &s("maps/truth.yaml"),
            "--log",
            &s("log/sensor.jsonl"),
            "--initial-pose",
            "1,2",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 1);
    let o = mapbench(
        dir.path(),
        &[
            "replay",
            "--map",
            &s("maps/truth.yaml"),
            "--log",
            &s("log/sensor.jsonl"),
            "--initial-pose",
            "-900,0,0",
            "--out",
            "o",
        ],
    );
    assert_eq!(code(&o), 3);
}

#[test]
fn report_rebuilds_tables_and_plot() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("bench_report.json");
    let golden = Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/golden");
    std::fs::copy(golden.join("bench_report.json"), &input).unwrap();
    let out = dir.path().join("rep");
    let o = mapbench(
        dir.path(),
        &[
            "report",
            "--quiet",
            "--input",
            input.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    for t in ["table1_geometric", "table2_localization", "table3_effort"] {
        assert_eq!(
            std::fs::read_to_string(out.join(format!("{t}.csv"))).unwrap(),
            std::fs::read_to_string(golden.join(format!("{t}.csv"))).unwrap()
        );
    }
    let svg = std::fs::read_to_string(out.join("scatter.svg")).unwrap();
    assert!(svg.contains("SLAM (net)") && svg.contains("SLAM (gross)"));
    roxmltree::Document::parse(&svg).expect("well-formed SVG");

    let out_net = dir.path().join("net");
    let o = mapbench(
        dir.path(),
        &[
            "report",
            "--quiet",
            "--input",
            input.to_str().unwrap(),
            "--basis",
            "net",
            "--out",
            out_net.to_str().unwrap(),
        ],
    );
    assert_eq!(code(&o), 0);
    assert!(!std::fs::read_to_string(out_net.join("scatter.svg"))
        .unwrap()
        .contains("(gross)"));

    assert_eq!(
        code(&mapbench(
            dir.path(),
            &["report", "--input", "absent.json", "--out", "x"]
        )),
        2
    );
    std::fs::write(dir.path().join("junk.json"), "{}").unwrap();
    assert_eq!(
        code(&mapbench(dir.path(), &["report", "--input", "junk.json", "--out", "x"])),
        1
    );
}
