//! The three subcommands. Each returns its summary (or table) so tests can
//! inspect results without re-reading files.

use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};

use suspension_core::metrics::MetricsReport;
use suspension_core::road::RoadScenario;
use suspension_core::sim::Trajectory;
use suspension_core::tuning::{constraint_report, simulate_vehicle_active, simulate_vehicle_passive, VehicleParams};

use crate::config::{RunConfig, Suspension};
use crate::output::{
    road_table, trajectory_table, write_charts, write_history, GaSummary, RunSummary, Variant, VariantSummary,
};
use crate::svg::fmt_num;

const ROAD_FILE: &str = "road_profile.csv";
const HISTORY_FILE: &str = "ga_history.csv";

fn trajectory_file(s: Suspension) -> &'static str {
    match s {
        Suspension::Passive => "trajectory_passive.csv",
        Suspension::Active => "trajectory_active.csv",
    }
}

struct Simulated {
    suspension: Suspension,
    traj: Trajectory,
    vehicle: VehicleParams,
}

/// Writes trajectories, road profile and charts; returns the variant
/// summaries and every file name written.
fn emit(
    dir: &Path,
    config: &RunConfig,
    scenario: &RoadScenario,
    runs: &[Simulated],
) -> Result<(Vec<VariantSummary>, Vec<String>)> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut files = Vec::new();
    let tables: Vec<_> = runs.iter().map(|r| trajectory_table(&r.traj)).collect();
    let mut summaries = Vec::new();
    for (run, table) in runs.iter().zip(&tables) {
        let file = trajectory_file(run.suspension);
        table.write(&dir.join(file))?;
        files.push(file.to_string());
        let constraints = constraint_report(&run.vehicle, &run.traj)?;
        let max_margin = constraints.iter().map(|m| m.margin).fold(f64::NEG_INFINITY, f64::max);
        summaries.push(VariantSummary {
            suspension: run.suspension,
            file: file.into(),
            metrics: MetricsReport::from_trajectory(&run.traj, scenario, config.settling_band),
            constraints,
            max_margin,
        });
    }
    let road = road_table(scenario, &runs[0].traj.times)?;
    road.write(&dir.join(ROAD_FILE))?;
    files.push(ROAD_FILE.into());
    let variants: Vec<_> = runs
        .iter()
        .zip(&tables)
        .map(|(r, t)| Variant {
            suspension: r.suspension,
            file: trajectory_file(r.suspension).into(),
            table: t,
        })
        .collect();
    files.extend(write_charts(dir, config.model, &road, ROAD_FILE, &variants)?);
    Ok((summaries, files))
}

pub fn output_dir(config: &RunConfig) -> PathBuf {
    config.output_dir.clone().unwrap_or_else(|| PathBuf::from("out"))
}

pub fn simulate(config: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    config.validate_simulate()?;
    let scenario = config.scenario()?;
    let vehicle = config.vehicle();
    let mut runs = Vec::new();
    let active = config.suspension() == Suspension::Active;
    if !active || config.compare_passive {
        runs.push(Simulated {
            suspension: Suspension::Passive,
            traj: simulate_vehicle_passive(&vehicle, &scenario, &config.sim)?,
            vehicle,
        });
    }
    if active {
        let gains = config.pid.gains.as_deref().unwrap_or_default();
        runs.push(Simulated {
            suspension: Suspension::Active,
            traj: simulate_vehicle_active(&vehicle, gains, config.pid.integral_limit, &scenario, &config.sim)?,
            vehicle,
        });
    }
    let dir = output_dir(config);
    let (variants, files) = emit(&dir, config, &scenario, &runs)?;
    let summary = RunSummary {
        command: "simulate".into(),
        config: config.clone(),
        variants,
        ga: None,
        optimized: None,
        files,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    summary.write(&dir)?;
    Ok(summary)
}

pub fn optimize(config: &RunConfig) -> Result<RunSummary> {
    let start = Instant::now();
    config.validate_optimize()?;
    let seed = config.seed.context("config key `seed`: missing")?;
    let setup = config.tuning_setup()?;
    let mut ga = config.ga.clone();
    ga.seed = seed;
    let result = setup.optimize(&ga)?;

    let dir = output_dir(config);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    write_history(&result.history, &dir.join(HISTORY_FILE))?;

    let best = setup.decode(&result.best)?;
    let scenario = &setup.scenario;
    let baseline = config.vehicle();
    let runs = [
        Simulated {
            suspension: Suspension::Passive,
            traj: simulate_vehicle_passive(&baseline, scenario, &config.sim)?,
            vehicle: baseline,
        },
        Simulated {
            suspension: Suspension::Active,
            traj: simulate_vehicle_active(&best.vehicle, &best.gains, config.pid.integral_limit, scenario, &config.sim)?,
            vehicle: best.vehicle,
        },
    ];
    let (variants, mut files) = emit(&dir, config, scenario, &runs)?;
    files.insert(0, HISTORY_FILE.into());
    let summary = RunSummary {
        command: "optimize".into(),
        config: config.clone(),
        variants,
        ga: Some(GaSummary::new(seed, HISTORY_FILE, &setup.gene_names(), &result)),
        optimized: Some(best),
        files,
        wall_clock_s: start.elapsed().as_secs_f64(),
    };
    summary.write(&dir)?;
    Ok(summary)
}

fn find_summaries(dir: &Path, out: &mut Vec<PathBuf>) -> Result<()> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .collect::<std::io::Result<_>>()?;
    entries.sort_by_key(|e| e.file_name());
    for e in entries {
        let path = e.path();
        if path.is_dir() {
            find_summaries(&path, out)?;
        } else if e.file_name() == "summary.json" {
            out.push(path);
        }
    }
    Ok(())
}

const METRICS: [&str; 4] = ["settling_time", "peak_sprung_disp", "peak_travel", "rms_sprung_accel"];

fn metric(m: &MetricsReport, name: &str) -> Option<f64> {
    match name {
        "settling_time" => m.settling_time,
        "peak_sprung_disp" => Some(m.peak_sprung_disp),
        "peak_travel" => m.peak_travel.iter().copied().reduce(f64::max),
        "rms_sprung_accel" => Some(m.rms_sprung_accel),
        _ => None,
    }
}

fn cell(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), fmt_num)
}

/// Percentage by which the active value improves on the passive one.
pub fn reduction_pct(passive: f64, active: f64) -> Option<f64> {
    (passive != 0.0).then(|| 100.0 * (passive - active) / passive)
}

/// Consolidated comparison of every run below `run_dir`.
pub struct Report {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Report {
    pub fn to_text(&self) -> String {
        let widths: Vec<usize> = (0..self.headers.len())
            .map(|i| self.rows.iter().map(|r| r[i].len()).chain([self.headers[i].len()]).max().unwrap_or(0))
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&self.headers);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

fn find(s: &RunSummary, which: Suspension) -> Option<&VariantSummary> {
    s.variants.iter().find(|v| v.suspension == which)
}

fn same_setup(a: &RunConfig, b: &RunConfig) -> bool {
    a.model == b.model && a.vehicle() == b.vehicle() && a.sim == b.sim && a.scenario().ok() == b.scenario().ok()
}

pub fn report(run_dir: &Path) -> Result<Report> {
    let mut paths = Vec::new();
    find_summaries(run_dir, &mut paths)?;
    if paths.is_empty() {
        bail!("no summary.json found under {}", run_dir.display());
    }
    let summaries: Vec<(String, RunSummary)> = paths
        .iter()
        .map(|p| {
            let rel = p.parent().and_then(|d| d.strip_prefix(run_dir).ok()).map_or_else(
                || ".".into(),
                |d| if d.as_os_str().is_empty() { ".".into() } else { d.display().to_string() },
            );
            RunSummary::load(p).map(|s| (rel, s))
        })
        .collect::<Result<_>>()?;

    let mut used_as_baseline = vec![false; summaries.len()];
    let mut pairs = Vec::new();
    for (i, (_, s)) in summaries.iter().enumerate() {
        let Some(active) = find(s, Suspension::Active) else { continue };
        let passive = find(s, Suspension::Passive).map(|p| (p, None)).or_else(|| {
            summaries.iter().enumerate().find_map(|(j, (name, other))| {
                let p = find(other, Suspension::Passive)?;
                (j != i && other.variants.len() == 1 && same_setup(&s.config, &other.config)).then(|| {
                    used_as_baseline[j] = true;
                    (p, Some(name.clone()))
                })
            })
        });
        pairs.push((i, passive, Some(active)));
    }
    for (i, (_, s)) in summaries.iter().enumerate() {
        if find(s, Suspension::Active).is_none() && !used_as_baseline[i] {
            pairs.push((i, find(s, Suspension::Passive).map(|p| (p, None)), None));
        }
    }
    pairs.sort_by_key(|p| p.0);

    let mut headers = vec!["run".to_string(), "model".into(), "baseline".into()];
    for m in METRICS {
        headers.extend([format!("pss_{m}"), format!("ass_{m}"), format!("reduction_pct_{m}")]);
    }
    let rows = pairs
        .into_iter()
        .map(|(i, passive, active)| {
            let (name, s) = &summaries[i];
            let baseline = match &passive {
                Some((_, Some(other))) => other.clone(),
                Some((_, None)) => name.clone(),
                None => "n/a".into(),
            };
            let mut row = vec![name.clone(), s.config.model.to_string(), baseline];
            for m in METRICS {
                let p = passive.as_ref().and_then(|(v, _)| metric(&v.metrics, m));
                let a = active.and_then(|v| metric(&v.metrics, m));
                let delta = p.zip(a).and_then(|(p, a)| reduction_pct(p, a));
                row.extend([cell(p), cell(a), delta.map_or_else(|| "n/a".into(), |d| format!("{d:.2}"))]);
            }
            row
        })
        .collect();
    Ok(Report { headers, rows })
}

/// Writes `report.csv` into `run_dir` and returns the table.
pub fn report_to_dir(run_dir: &Path) -> Result<Report> {
    let r = report(run_dir)?;
    let path = run_dir.join("report.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(&r.headers)?;
    for row in &r.rows {
        w.write_record(row)?;
    }
    w.flush()?;
    Ok(r)
}
