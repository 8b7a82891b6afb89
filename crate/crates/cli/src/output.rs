//! Artifact writers: trajectory and road CSVs, GA history, charts, summary.

use std::path::Path;

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use suspension_core::ga::{GaResult, GenerationStats};
use suspension_core::metrics::MetricsReport;
use suspension_core::objectives::ConstraintMargin;
use suspension_core::road::RoadScenario;
use suspension_core::sim::Trajectory;
use suspension_core::tuning::Candidate;
use suspension_core::vehicle::ModelKind;

use crate::config::{RunConfig, Suspension};
use crate::svg::{fmt_num, LineChart, Series};

/// A column table destined for one CSV file.
#[derive(Debug, Clone, Default)]
pub struct Table {
    pub headers: Vec<String>,
    pub columns: Vec<Vec<f64>>,
}

impl Table {
    fn push(&mut self, name: impl Into<String>, values: Vec<f64>) {
        self.headers.push(name.into());
        self.columns.push(values);
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        let i = self.headers.iter().position(|h| h == name)?;
        Some(&self.columns[i])
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
        w.write_record(&self.headers)?;
        let rows = self.columns.first().map_or(0, Vec::len);
        let mut record = Vec::with_capacity(self.columns.len());
        for k in 0..rows {
            record.clear();
            record.extend(self.columns.iter().map(|c| fmt_num(c[k])));
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

fn travel_labels(traj: &Trajectory) -> Vec<String> {
    match traj.model {
        ModelKind::Qc => vec!["travel".into()],
        ModelKind::Fc => traj
            .output_labels
            .iter()
            .filter(|l| l.starts_with("travel_"))
            .cloned()
            .collect(),
    }
}

/// Time, every state, outputs that are not states, road inputs, forces,
/// acceleration, jerk and travel.
pub fn trajectory_table(traj: &Trajectory) -> Table {
    let mut t = Table::default();
    t.push("time", traj.times.clone());
    for (i, l) in traj.state_labels.iter().enumerate() {
        t.push(l.clone(), traj.state_series(i));
    }
    for (i, l) in traj.output_labels.iter().enumerate() {
        if !traj.state_labels.contains(l) && !l.starts_with("travel") {
            t.push(l.clone(), traj.output_series(i));
        }
    }
    for (j, l) in traj.road_labels.iter().enumerate() {
        let n = traj.n_road();
        t.push(l.clone(), traj.road_inputs.iter().skip(j).step_by(n).copied().collect());
    }
    for (j, l) in traj.force_labels.iter().enumerate() {
        t.push(l.clone(), traj.force_series(j));
    }
    t.push("sprung_accel", traj.sprung_accel.clone());
    t.push("jerk", traj.jerk.clone());
    for (l, series) in travel_labels(traj).into_iter().zip(&traj.travel) {
        t.push(l, series.clone());
    }
    t
}

/// Road displacement under each wheel on the trajectory's time grid.
pub fn road_table(scenario: &RoadScenario, times: &[f64]) -> Result<Table> {
    let mut t = Table::default();
    t.push("time", times.to_vec());
    for &w in &scenario.wheels {
        let profile = scenario.profile(w)?;
        let name = if scenario.wheels.len() == 1 {
            "Zr".to_string()
        } else {
            format!("Zr_{w}")
        };
        t.push(name, times.iter().map(|&x| profile.eval(x).0).collect());
    }
    Ok(t)
}

pub fn write_history(history: &[GenerationStats], path: &Path) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(["generation", "best_cost", "mean_cost", "feasible_count"])?;
    for h in history {
        w.write_record([
            h.generation.to_string(),
            fmt_num(h.best_cost),
            fmt_num(h.mean_cost),
            h.feasible_count.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// A simulated variant and the CSV it was written to.
pub struct Variant<'a> {
    pub suspension: Suspension,
    pub file: String,
    pub table: &'a Table,
}

struct ChartSpec {
    stem: &'static str,
    title: &'static str,
    y_label: &'static str,
    columns: Vec<String>,
}

fn chart_specs(model: ModelKind) -> Vec<ChartSpec> {
    let corners = ["fl", "fr", "rl", "rr"];
    let per_corner = |prefix: &str| corners.iter().map(|c| format!("{prefix}_{c}")).collect::<Vec<_>>();
    match model {
        ModelKind::Qc => vec![
            ChartSpec {
                stem: "suspension_travel",
                title: "Suspension travel",
                y_label: "travel (m)",
                columns: vec!["travel".into()],
            },
            ChartSpec {
                stem: "sprung_displacement",
                title: "Sprung mass displacement",
                y_label: "displacement (m)",
                columns: vec!["Zs".into()],
            },
            ChartSpec {
                stem: "unsprung_displacement",
                title: "Unsprung mass displacement",
                y_label: "displacement (m)",
                columns: vec!["Zu".into()],
            },
        ],
        ModelKind::Fc => vec![
            ChartSpec {
                stem: "suspension_travel",
                title: "Suspension travel",
                y_label: "travel (m)",
                columns: per_corner("travel"),
            },
            ChartSpec {
                stem: "sprung_displacement",
                title: "Sprung mass heave",
                y_label: "displacement (m)",
                columns: vec!["Z".into()],
            },
            ChartSpec {
                stem: "unsprung_displacement",
                title: "Unsprung mass displacement",
                y_label: "displacement (m)",
                columns: per_corner("Zu"),
            },
            ChartSpec {
                stem: "pitch_angle",
                title: "Pitch angle",
                y_label: "angle (rad)",
                columns: vec!["theta".into()],
            },
            ChartSpec {
                stem: "roll_angle",
                title: "Roll angle",
                y_label: "angle (rad)",
                columns: vec!["phi".into()],
            },
        ],
    }
}

/// Writes every chart for the given variants; returns the file names.
pub fn write_charts(
    dir: &Path,
    model: ModelKind,
    road: &Table,
    road_file: &str,
    variants: &[Variant],
) -> Result<Vec<String>> {
    let mut written = Vec::new();
    let road_chart = LineChart {
        title: "Road profile".into(),
        x_label: "time (s)".into(),
        y_label: "road height (m)".into(),
        series: road.headers[1..]
            .iter()
            .map(|h| Series {
                name: h.clone(),
                source: road_file.into(),
                column: h.clone(),
                dashed: false,
                xs: road.columns[0].clone(),
                ys: road.column(h).unwrap_or_default().to_vec(),
            })
            .collect(),
    };
    let name = "road_profile.svg".to_string();
    write_text(&dir.join(&name), &road_chart.render())?;
    written.push(name);

    for spec in chart_specs(model) {
        let mut series = Vec::new();
        for v in variants {
            let tag = match v.suspension {
                Suspension::Passive => "PSS",
                Suspension::Active => "ASS",
            };
            let times = v.table.column("time").context("trajectory table has no time column")?;
            for col in &spec.columns {
                let ys = v
                    .table
                    .column(col)
                    .with_context(|| format!("trajectory table has no `{col}` column"))?;
                let name = if spec.columns.len() == 1 {
                    tag.to_string()
                } else {
                    format!("{tag} {col}")
                };
                series.push(Series {
                    name,
                    source: v.file.clone(),
                    column: col.clone(),
                    dashed: v.suspension == Suspension::Passive && variants.len() > 1,
                    xs: times.to_vec(),
                    ys: ys.to_vec(),
                });
            }
        }
        let chart = LineChart {
            title: spec.title.into(),
            x_label: "time (s)".into(),
            y_label: spec.y_label.into(),
            series,
        };
        let name = format!("{}.svg", spec.stem);
        write_text(&dir.join(&name), &chart.render())?;
        written.push(name);
    }
    Ok(written)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariantSummary {
    pub suspension: Suspension,
    pub file: String,
    pub metrics: MetricsReport,
    pub constraints: Vec<ConstraintMargin>,
    pub max_margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gene {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaSummary {
    pub seed: u64,
    pub history_file: String,
    pub best: Vec<Gene>,
    /// `None` when no candidate produced a finite cost.
    pub best_cost: Option<f64>,
    pub best_margin: Option<f64>,
    pub feasible: bool,
    pub generations: usize,
}

impl GaSummary {
    pub fn new(seed: u64, history_file: &str, names: &[String], result: &GaResult) -> Self {
        Self {
            seed,
            history_file: history_file.into(),
            best: names
                .iter()
                .zip(&result.best)
                .map(|(n, &v)| Gene {
                    name: n.clone(),
                    value: v,
                })
                .collect(),
            best_cost: result.best_cost.is_finite().then_some(result.best_cost),
            best_margin: result.best_margin.is_finite().then_some(result.best_margin),
            feasible: result.feasible,
            generations: result.history.len(),
        }
    }
}

/// One document per run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub command: String,
    pub config: RunConfig,
    pub variants: Vec<VariantSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ga: Option<GaSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimized: Option<Candidate>,
    /// Files written next to the summary.
    pub files: Vec<String>,
    pub wall_clock_s: f64,
}

impl RunSummary {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        write_text(&dir.join("summary.json"), &(text + "\n"))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }
}
