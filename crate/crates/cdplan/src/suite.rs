//! Experiment suites: run one base scenario across a grid of planner
//! configurations (cost mode, overlap weight, horizon, ...) and tabulate the
//! outcomes.
//!
//! Cells run sequentially in declaration order. A failing cell records its
//! error in the row and does not abort the rest of the suite. Wall-clock
//! timings are collected but kept out of the JSON serialization so suite
//! outputs stay reproducible; the CSV includes an `elapsed_ms` column which
//! is explicitly excluded from any determinism comparison.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::pipeline::{run_pipeline, RunReport};
use crate::scenario::{ModeDoc, Scenario, ScenarioDoc};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub name: String,
    /// Path of the base scenario, relative to the suite file. Ignored when
    /// the caller supplies the base document directly.
    #[serde(default)]
    pub scenario: String,
    pub cells: Vec<CellConfig>,
}

/// Planner overrides applied on top of the base scenario for one cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CellConfig {
    pub label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<ModeDoc>,
    /// Overlap weight override.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mi: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_steps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal_tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteRow {
    pub label: String,
    pub mode: String,
    pub mi: f64,
    pub horizon: usize,
    pub status: String,
    pub reached_goal: bool,
    pub steps: usize,
    pub path_length: f64,
    pub overlapped_count: usize,
    pub displaced_count: usize,
    pub total_displacement: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub name: String,
    pub rows: Vec<SuiteRow>,
}

/// A finished suite: the serializable report plus per-cell wall times and
/// the full run reports (None for failed cells).
#[derive(Debug)]
pub struct SuiteRun {
    pub report: SuiteReport,
    pub elapsed_ms: Vec<f64>,
    pub reports: Vec<Option<RunReport>>,
}

pub fn apply_cell(base: &ScenarioDoc, cell: &CellConfig) -> ScenarioDoc {
    let mut doc = base.clone();
    if let Some(m) = cell.mode {
        doc.planner.mode = m;
    }
    if let Some(mi) = cell.mi {
        doc.planner.weights.mi = mi;
    }
    if let Some(h) = cell.horizon {
        doc.planner.horizon = h;
    }
    if let Some(s) = cell.max_steps {
        doc.planner.max_steps = s;
    }
    if let Some(t) = cell.goal_tolerance {
        doc.planner.goal_tolerance = t;
    }
    if let Some(e) = cell.eta {
        doc.planner.eta = e;
    }
    if let Some(e) = cell.epsilon {
        doc.planner.epsilon = e;
    }
    doc
}

fn mode_name(mode: ModeDoc) -> &'static str {
    match mode {
        ModeDoc::Mcd => "mcd",
        ModeDoc::Mcr => "mcr",
        ModeDoc::Shortest => "shortest",
    }
}

pub fn run_suite(config: &SuiteConfig, base: &ScenarioDoc) -> SuiteRun {
    let mut rows = Vec::with_capacity(config.cells.len());
    let mut elapsed_ms = Vec::with_capacity(config.cells.len());
    let mut reports = Vec::with_capacity(config.cells.len());
    for cell in &config.cells {
        let doc = apply_cell(base, cell);
        let started = Instant::now();
        let outcome = Scenario::from_doc(doc.clone())
            .map_err(|e| e.to_string())
            .and_then(|s| run_pipeline(&s).map_err(|e| e.to_string()));
        let ms = started.elapsed().as_secs_f64() * 1e3;
        let row = match &outcome {
            Ok(report) => SuiteRow {
                label: cell.label.clone(),
                mode: mode_name(doc.planner.mode).to_string(),
                mi: doc.planner.weights.mi,
                horizon: doc.planner.horizon,
                status: format!("{:?}", report.status).to_lowercase(),
                reached_goal: report.plan.reached_goal,
                steps: report.plan.steps,
                path_length: report.metrics.path_length,
                overlapped_count: report.metrics.overlapped_count,
                displaced_count: report.metrics.displaced_count,
                total_displacement: report.metrics.total_displacement,
                error: None,
            },
            Err(msg) => SuiteRow {
                label: cell.label.clone(),
                mode: mode_name(doc.planner.mode).to_string(),
                mi: doc.planner.weights.mi,
                horizon: doc.planner.horizon,
                status: "error".to_string(),
                reached_goal: false,
                steps: 0,
                path_length: 0.0,
                overlapped_count: 0,
                displaced_count: 0,
                total_displacement: 0.0,
                error: Some(msg.clone()),
            },
        };
        rows.push(row);
        elapsed_ms.push(ms);
        reports.push(outcome.ok());
    }
    SuiteRun {
        report: SuiteReport { name: config.name.clone(), rows },
        elapsed_ms,
        reports,
    }
}

/// Deterministic JSON serialization of the suite results (no timings).
pub fn suite_json(run: &SuiteRun) -> String {
    let mut s = serde_json::to_string_pretty(&run.report).expect("suite reports serialize");
    s.push('\n');
    s
}

/// CSV rendering including the non-deterministic `elapsed_ms` column.
pub fn suite_csv(run: &SuiteRun) -> String {
    let mut out = String::new();
    out.push_str(
        "label,mode,mi,horizon,status,reached_goal,steps,path_length,\
         overlapped,displaced,total_displacement,elapsed_ms\n",
    );
    for (row, ms) in run.report.rows.iter().zip(&run.elapsed_ms) {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{},{},{:.6},{:.1}\n",
            csv_field(&row.label),
            row.mode,
            row.mi,
            row.horizon,
            row.status,
            row.reached_goal,
            row.steps,
            row.path_length,
            row.overlapped_count,
            row.displaced_count,
            row.total_displacement,
            ms,
        ));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_doc() -> ScenarioDoc {
        serde_json::from_value(serde_json::json!({
            "name": "suite-base",
            "robot": {
                "model": "planar_velocity",
                "control_lower": [-2.5, -2.5, -2.5],
                "control_upper": [2.5, 2.5, 2.5],
                "circles": [{"cx": 0.0, "cy": 0.0, "r": 0.3}],
                "start": [0.0, 0.0, 0.0],
                "goal": [4.0, 0.0, 0.0]
            },
            "obstacles": [
                {"id": "mid", "circle": {"cx": 2.0, "cy": 0.15, "r": 0.4}}
            ],
            "planner": {
                "mode": "mcd", "horizon": 8, "max_steps": 120,
                "weights": {"mi": 0.5, "mu": 0.1, "mg": 10.0}
            }
        }))
        .unwrap()
    }

    fn config() -> SuiteConfig {
        serde_json::from_value(serde_json::json!({
            "name": "demo",
            "cells": [
                {"label": "shortest", "mode": "shortest"},
                {"label": "light", "mode": "mcd", "mi": 0.01},
                {"label": "heavy", "mode": "mcd", "mi": 50.0}
            ]
        }))
        .unwrap()
    }

    #[test]
    fn suite_runs_all_cells() {
        let run = run_suite(&config(), &base_doc());
        assert_eq!(run.report.rows.len(), 3);
        for row in &run.report.rows {
            assert!(row.error.is_none(), "cell {} failed: {:?}", row.label, row.error);
            assert!(row.reached_goal, "cell {} did not reach the goal", row.label);
        }
        // a light overlap weight crosses the obstacle; a heavy one at most
        // grazes it, so it needs a much smaller displacement
        let by_label = |l: &str| run.report.rows.iter().find(|r| r.label == l).unwrap();
        assert_eq!(by_label("light").overlapped_count, 1);
        assert_eq!(by_label("shortest").overlapped_count, 1);
        assert!(by_label("light").total_displacement > 0.0);
        assert!(
            by_label("heavy").total_displacement
                < 0.5 * by_label("light").total_displacement,
            "heavy {} vs light {}",
            by_label("heavy").total_displacement,
            by_label("light").total_displacement
        );
    }

    #[test]
    fn overrides_change_only_the_planner() {
        let base = base_doc();
        let cell: CellConfig = serde_json::from_value(serde_json::json!({
            "label": "x", "mode": "mcr", "mi": 2.0, "horizon": 12,
            "max_steps": 33, "eta": 5.0, "epsilon": 0.01
        }))
        .unwrap();
        let doc = apply_cell(&base, &cell);
        assert_eq!(doc.planner.mode, ModeDoc::Mcr);
        assert_eq!(doc.planner.weights.mi, 2.0);
        assert_eq!(doc.planner.horizon, 12);
        assert_eq!(doc.planner.max_steps, 33);
        assert_eq!(doc.planner.eta, 5.0);
        assert_eq!(doc.planner.epsilon, 0.01);
        assert_eq!(doc.robot, base.robot);
        assert_eq!(doc.obstacles, base.obstacles);
        assert_eq!(doc.planner.weights.mu, base.planner.weights.mu);
    }

    #[test]
    fn failing_cell_is_recorded_without_aborting() {
        let mut cfg = config();
        cfg.cells.insert(
            1,
            serde_json::from_value(serde_json::json!({
                "label": "broken", "horizon": 0
            }))
            .unwrap(),
        );
        let run = run_suite(&cfg, &base_doc());
        assert_eq!(run.report.rows.len(), 4);
        let broken = &run.report.rows[1];
        assert_eq!(broken.status, "error");
        assert!(broken.error.as_deref().unwrap_or("").contains("planner.horizon"));
        assert!(run.reports[1].is_none());
        // the remaining cells still produced results
        assert!(run.report.rows[2].error.is_none());
        assert!(run.report.rows[3].error.is_none());
    }

    #[test]
    fn csv_and_json_outputs_are_well_formed() {
        let run = run_suite(&config(), &base_doc());
        let csv = suite_csv(&run);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("label,mode,mi,"));
        assert!(lines[0].ends_with("elapsed_ms"));
        let json = suite_json(&run);
        assert!(!json.contains("elapsed"), "timings must stay out of the JSON");
        let parsed: SuiteReport = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, run.report);
        // label quoting
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("plain"), "plain");
    }
}
