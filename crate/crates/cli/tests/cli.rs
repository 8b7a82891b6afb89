use std::collections::HashSet;
use std::path::Path;
use std::process::Command;

use suspension_cli::commands::{optimize, report, simulate};
use suspension_cli::config::{parse_config, RunConfig, Suspension};
use suspension_cli::output::RunSummary;
use suspension_core::control::PidGains;
use suspension_core::tuning::Objective;
use suspension_core::vehicle::ModelKind;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_suspension"))
}

fn config_in(dir: &Path) -> RunConfig {
    RunConfig {
        output_dir: Some(dir.to_path_buf()),
        ..RunConfig::default()
    }
}

fn active_qc(dir: &Path) -> RunConfig {
    let mut c = config_in(dir);
    c.pid.gains = Some(vec![PidGains::new(12_225.0, 22_241.0, 841.7)]);
    c
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_path(path).unwrap();
    let headers = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (headers, rows)
}

fn column<'a>(table: &'a (Vec<String>, Vec<Vec<String>>), name: &str) -> Vec<&'a str> {
    let i = table.0.iter().position(|h| h == name).unwrap_or_else(|| panic!("no column {name}"));
    table.1.iter().map(|r| r[i].as_str()).collect()
}

#[test]
fn passive_quarter_car_writes_six_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let s = simulate(&config_in(dir.path())).unwrap();
    let mut artifacts: Vec<_> = s.files.iter().filter(|f| f.ends_with(".csv") || f.ends_with(".svg")).collect();
    artifacts.sort();
    assert_eq!(
        artifacts,
        [
            "road_profile.csv",
            "road_profile.svg",
            "sprung_displacement.svg",
            "suspension_travel.svg",
            "trajectory_passive.csv",
            "unsprung_displacement.svg"
        ]
    );
    for f in &s.files {
        assert!(dir.path().join(f).is_file(), "{f} listed but not written");
    }
    let t = read_csv(&dir.path().join("trajectory_passive.csv"));
    assert_eq!(t.0[0], "time");
    for col in ["Zs", "Zu", "travel"] {
        assert!(column(&t, col).iter().any(|v| v.parse::<f64>().unwrap() != 0.0), "{col} is all zero");
    }
    assert_eq!(s.variants.len(), 1);
    assert!(s.variants[0].metrics.peak_sprung_disp > 0.0);
}

#[test]
fn fixed_gain_run_overlays_passive_and_reduces_peak_travel() {
    let dir = tempfile::tempdir().unwrap();
    let s = simulate(&active_qc(dir.path())).unwrap();
    let kinds: Vec<_> = s.variants.iter().map(|v| v.suspension).collect();
    assert_eq!(kinds, [Suspension::Passive, Suspension::Active]);
    let travel = |i: usize| s.variants[i].metrics.peak_travel[0];
    assert!(travel(1) < travel(0), "active {} vs passive {}", travel(1), travel(0));
    let svg = std::fs::read_to_string(dir.path().join("suspension_travel.svg")).unwrap();
    assert!(svg.contains(r#"data-source="trajectory_passive.csv""#));
    assert!(svg.contains(r#"data-source="trajectory_active.csv""#));
}

#[test]
fn empty_scenario_gives_flat_zero_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config_in(dir.path());
    c.scenario = Some(suspension_core::road::RoadScenario::flat(ModelKind::Qc, 10.0, 5.0));
    let s = simulate(&c).unwrap();
    let m = &s.variants[0].metrics;
    assert_eq!(m.peak_sprung_disp, 0.0);
    assert_eq!(m.rms_sprung_accel, 0.0);
    assert_eq!(m.peak_travel, vec![0.0]);
}

#[test]
fn every_svg_number_is_a_csv_cell() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = active_qc(dir.path());
    c.model = ModelKind::Fc;
    c.pid.gains = Some(vec![PidGains::new(12_225.0, 22_241.0, 841.7); 4]);
    let s = simulate(&c).unwrap();
    let svgs: Vec<_> = s.files.iter().filter(|f| f.ends_with(".svg")).collect();
    assert_eq!(svgs.len(), 6);
    for f in svgs {
        let svg = std::fs::read_to_string(dir.path().join(f)).unwrap();
        for poly in svg.split("<polyline").skip(1) {
            let attr = |name: &str| {
                let start = poly.find(&format!("{name}=\"")).unwrap() + name.len() + 2;
                &poly[start..start + poly[start..].find('"').unwrap()]
            };
            let table = read_csv(&dir.path().join(attr("data-source")));
            let xs: HashSet<&str> = column(&table, "time").into_iter().collect();
            let ys: HashSet<&str> = column(&table, attr("data-column")).into_iter().collect();
            let points = attr("points");
            assert!(!points.is_empty(), "{f}");
            for p in points.split(' ') {
                let (x, y) = p.split_once(',').unwrap();
                assert!(xs.contains(x) && ys.contains(y), "{f}: point {p} not in CSV");
            }
        }
    }
}

#[test]
fn reruns_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let sa = simulate(&active_qc(a.path())).unwrap();
    simulate(&active_qc(b.path())).unwrap();
    for f in &sa.files {
        let (x, y) = (std::fs::read(a.path().join(f)).unwrap(), std::fs::read(b.path().join(f)).unwrap());
        assert!(x == y, "{f} differs between reruns");
    }
}

#[test]
fn summary_config_echo_reparses_to_input() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = active_qc(dir.path());
    c.settling_band = 0.003;
    c.pid.integral_limit = Some(0.5);
    simulate(&c).unwrap();
    let text = std::fs::read_to_string(dir.path().join("summary.json")).unwrap();
    let echoed: serde_json::Value = serde_json::from_str(&text).unwrap();
    let reparsed = parse_config(&echoed["config"].to_string()).unwrap();
    assert_eq!(reparsed, c);
    assert_eq!(RunSummary::load(&dir.path().join("summary.json")).unwrap().config, c);
}

#[test]
fn binary_reports_bad_key_on_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{"qc": {"sprung_mas": 300}}"#).unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&cfg).arg("--out").arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.trim_end().lines().count(), 1, "{err}");
    assert!(err.starts_with("error:") && err.contains("qc.sprung_mas"), "{err}");

    std::fs::write(&cfg, r#"{"sim": {"dt": -0.001}}"#).unwrap();
    let out = bin().args(["simulate", "--config"]).arg(&cfg).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("`sim`"));

    let out = bin().args(["optimize", "--objective", "cb", "--out"]).arg(dir.path()).output().unwrap();
    assert!(!out.status.success());
    assert!(String::from_utf8(out.stderr).unwrap().contains("seed"));
}

#[test]
fn binary_flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["simulate", "--model", "fc", "--threads", "1", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let s = RunSummary::load(&dir.path().join("summary.json")).unwrap();
    assert_eq!(s.config.model, ModelKind::Fc);
    assert!(dir.path().join("roll_angle.svg").is_file());
}

fn report_row<'a>(r: &'a suspension_cli::commands::Report, row: usize, col: &str) -> &'a str {
    let i = r.headers.iter().position(|h| h == col).unwrap();
    &r.rows[row][i]
}

#[test]
fn report_pairs_separate_passive_and_active_runs() {
    let root = tempfile::tempdir().unwrap();
    simulate(&config_in(&root.path().join("pss"))).unwrap();
    let mut ass = active_qc(&root.path().join("ass"));
    ass.compare_passive = false;
    simulate(&ass).unwrap();
    let r = report(root.path()).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(report_row(&r, 0, "run"), "ass");
    assert_eq!(report_row(&r, 0, "baseline"), "pss");
    let pct: f64 = report_row(&r, 0, "reduction_pct_peak_travel").parse().unwrap();
    assert!(pct > 0.0);
}

#[test]
fn report_identical_and_passive_only() {
    let root = tempfile::tempdir().unwrap();
    simulate(&active_qc(&root.path().join("a"))).unwrap();
    simulate(&config_in(&root.path().join("p"))).unwrap();
    let mut same = active_qc(&root.path().join("z"));
    same.pid.gains = Some(vec![PidGains::new(0.0, 0.0, 0.0)]);
    simulate(&same).unwrap();
    let r = report(root.path()).unwrap();
    assert_eq!(r.rows.len(), 3);
    // Zero gains reproduce the passive response exactly.
    for m in ["settling_time", "peak_sprung_disp", "peak_travel", "rms_sprung_accel"] {
        assert_eq!(report_row(&r, 2, &format!("reduction_pct_{m}")), "0.00", "{m}");
    }
    assert_eq!(report_row(&r, 1, "run"), "p");
    assert_eq!(report_row(&r, 1, "ass_rms_sprung_accel"), "n/a");
    assert_eq!(report_row(&r, 1, "reduction_pct_peak_travel"), "n/a");
    assert_ne!(report_row(&r, 1, "pss_rms_sprung_accel"), "n/a");

    let empty = tempfile::tempdir().unwrap();
    assert!(report(empty.path()).is_err());
}

#[test]
fn small_optimize_run_writes_history_and_comparison() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config_in(dir.path());
    c.objective = Some(Objective::Lqr);
    c.seed = Some(3);
    c.ga.population_size = 12;
    c.ga.generations = 4;
    c.ga.elite_count = 2;
    let s = optimize(&c).unwrap();
    let ga = s.ga.as_ref().unwrap();
    let names: Vec<_> = ga.best.iter().map(|g| g.name.as_str()).collect();
    assert_eq!(names, ["kp", "ki", "kd"]);
    assert_eq!(ga.generations, 4);

    let h = read_csv(&dir.path().join("ga_history.csv"));
    assert_eq!(h.0, ["generation", "best_cost", "mean_cost", "feasible_count"]);
    let best: Vec<f64> = column(&h, "best_cost").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(best.len(), 4);
    assert!(best.windows(2).all(|w| w[1] <= w[0]), "{best:?}");
    assert_eq!(ga.best_cost, Some(*best.last().unwrap()));

    let optimized = s.optimized.as_ref().unwrap();
    assert_eq!(optimized.gains.len(), 1);
    assert_eq!(s.variants.len(), 2);
    assert!(dir.path().join("trajectory_active.csv").is_file());

    // The summary reproduces the run.
    let dir2 = tempfile::tempdir().unwrap();
    let mut again = c.clone();
    again.output_dir = Some(dir2.path().to_path_buf());
    let s2 = optimize(&again).unwrap();
    assert_eq!(s2.ga, s.ga);
    for f in ["ga_history.csv", "trajectory_active.csv"] {
        assert_eq!(std::fs::read(dir.path().join(f)).unwrap(), std::fs::read(dir2.path().join(f)).unwrap());
    }
}
