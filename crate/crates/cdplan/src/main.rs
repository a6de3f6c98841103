//! Command-line front end for the constraint-displacement planner.
//!
//! Exit codes: 0 success, 2 invalid input, 3 solver failure (goal not
//! reached or an obstacle could not be displaced; a partial report is still
//! written), 4 certificate violation.

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use cdplan::displacement::ResolveSettings;
use cdplan::pipeline::{
    recheck, report_json, resolve_report, run_pipeline_with, PipelineStatus, RunReport,
};
use cdplan::render::render_svg;
use cdplan::scenario::{ModeDoc, Scenario, ScenarioDoc};
use cdplan::suite::{apply_cell, run_suite, suite_csv, suite_json, CellConfig, SuiteConfig};

const EXIT_INVALID_INPUT: u8 = 2;
const EXIT_SOLVER_FAILURE: u8 = 3;
const EXIT_CERTIFICATE_VIOLATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "cdplan",
    version,
    about = "Plan through movable obstacles, then displace them clear of the swept path"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline and write report.json + scene.svg
    Plan {
        /// Scenario JSON file
        #[arg(long)]
        scenario: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the planner cost mode (mcd, mcr, shortest)
        #[arg(long)]
        mode: Option<String>,
        /// Override the overlap weight
        #[arg(long)]
        mi: Option<f64>,
        /// Override the horizon length
        #[arg(long)]
        horizon: Option<usize>,
        /// Override the executed-step limit
        #[arg(long)]
        max_steps: Option<usize>,
        /// Candidate starting poses tried per displacement program
        #[arg(long)]
        seed_starts: Option<usize>,
    },
    /// Re-run the displacement stage of a saved report on its recorded trajectory
    Resolve {
        /// Report JSON file produced by `plan`
        #[arg(long)]
        report: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Candidate starting poses tried per displacement program
        #[arg(long)]
        seed_starts: Option<usize>,
    },
    /// Re-run the exact clearance certificate of a saved report
    Check {
        /// Report JSON file produced by `plan` or `resolve`
        #[arg(long)]
        report: PathBuf,
    },
    /// Re-render the SVG scene of a saved report
    Render {
        /// Report JSON file
        #[arg(long)]
        report: PathBuf,
        /// Output SVG file
        #[arg(long, default_value = "scene.svg")]
        svg: PathBuf,
    },
    /// Run an experiment suite and write result tables (CSV + JSON)
    Bench {
        /// Suite JSON file
        #[arg(long)]
        suite: PathBuf,
        /// Output directory
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Plan { scenario, out, mode, mi, horizon, max_steps, seed_starts } => {
            cmd_plan(&scenario, &out, mode.as_deref(), mi, horizon, max_steps, seed_starts)
        }
        Command::Resolve { report, out, seed_starts } => cmd_resolve(&report, &out, seed_starts),
        Command::Check { report } => cmd_check(&report),
        Command::Render { report, svg } => cmd_render(&report, &svg),
        Command::Bench { suite, out } => cmd_bench(&suite, &out),
    }
    .unwrap_or_else(|code| code)
}

type CmdResult = Result<ExitCode, ExitCode>;

fn fail(code: u8, message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn read_to_string(path: &Path) -> Result<String, ExitCode> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_INVALID_INPUT, format!("cannot read {}: {e}", path.display())))
}

fn load_report(path: &Path) -> Result<RunReport, ExitCode> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| fail(EXIT_INVALID_INPUT, format!("invalid report {}: {e}", path.display())))
}

fn write_file(path: &Path, content: &str) -> Result<(), ExitCode> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| {
                fail(EXIT_INVALID_INPUT, format!("cannot create {}: {e}", parent.display()))
            })?;
        }
    }
    std::fs::write(path, content)
        .map_err(|e| fail(EXIT_INVALID_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn parse_mode(s: &str) -> Result<ModeDoc, ExitCode> {
    match s {
        "mcd" => Ok(ModeDoc::Mcd),
        "mcr" => Ok(ModeDoc::Mcr),
        "shortest" => Ok(ModeDoc::Shortest),
        other => Err(fail(
            EXIT_INVALID_INPUT,
            format!("unknown mode `{other}` (expected mcd, mcr, or shortest)"),
        )),
    }
}

fn status_exit(status: PipelineStatus) -> ExitCode {
    match status {
        PipelineStatus::Success => ExitCode::SUCCESS,
        PipelineStatus::PlanIncomplete | PipelineStatus::DisplacementIncomplete => {
            ExitCode::from(EXIT_SOLVER_FAILURE)
        }
        PipelineStatus::CertificateViolated => ExitCode::from(EXIT_CERTIFICATE_VIOLATION),
    }
}

fn write_report_and_scene(report: &RunReport, out: &Path) -> Result<(), ExitCode> {
    write_file(&out.join("report.json"), &report_json(report))?;
    let svg = render_svg(report)
        .map_err(|e| fail(EXIT_INVALID_INPUT, format!("cannot render scene: {e}")))?;
    write_file(&out.join("scene.svg"), &svg)
}

fn print_summary(report: &RunReport) {
    println!(
        "status: {}",
        serde_json::to_value(report.status)
            .ok()
            .and_then(|v| v.as_str().map(str::to_string))
            .unwrap_or_default()
    );
    println!(
        "plan: reached_goal={} steps={} path_length={:.3}",
        report.plan.reached_goal, report.plan.steps, report.metrics.path_length
    );
    println!(
        "displacement: overlapped={} displaced={} total_magnitude={:.3}",
        report.metrics.overlapped_count,
        report.metrics.displaced_count,
        report.metrics.total_displacement
    );
    println!(
        "certificate: checked_poses={} violations={} min_clearance={:.6}",
        report.certificate.checked_poses,
        report.certificate.violations,
        report.certificate.min_clearance
    );
    for d in &report.displacement {
        match &d.error {
            Some(err) => println!("  obstacle {}: FAILED ({err})", d.id),
            None => println!(
                "  obstacle {}: shift={:.3} rotation={:.3} witnesses={}",
                d.id, d.centroid_shift, d.rotation, d.witness_shapes
            ),
        }
    }
}

fn resolve_settings(seed_starts: Option<usize>) -> ResolveSettings {
    let mut settings = ResolveSettings::default();
    if let Some(k) = seed_starts {
        settings.max_starts = k.max(1);
    }
    settings
}

fn cmd_plan(
    scenario_path: &Path,
    out: &Path,
    mode: Option<&str>,
    mi: Option<f64>,
    horizon: Option<usize>,
    max_steps: Option<usize>,
    seed_starts: Option<usize>,
) -> CmdResult {
    let text = read_to_string(scenario_path)?;
    let mut doc: ScenarioDoc = serde_json::from_str(&text).map_err(|e| {
        fail(EXIT_INVALID_INPUT, format!("invalid scenario {}: {e}", scenario_path.display()))
    })?;
    let mode = mode.map(parse_mode).transpose()?;
    doc = apply_cell(
        &doc,
        &CellConfig {
            label: String::new(),
            mode,
            mi,
            horizon,
            max_steps,
            goal_tolerance: None,
            eta: None,
            epsilon: None,
        },
    );
    let scenario = Scenario::from_doc(doc).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;

    let started = Instant::now();
    let report = run_pipeline_with(&scenario, &resolve_settings(seed_starts))
        .map_err(|e| fail(EXIT_SOLVER_FAILURE, e))?;
    eprintln!(
        "planned `{}` in {:.1} ms",
        scenario.name,
        started.elapsed().as_secs_f64() * 1e3
    );
    write_report_and_scene(&report, out)?;
    print_summary(&report);
    Ok(status_exit(report.status))
}

fn cmd_resolve(report_path: &Path, out: &Path, seed_starts: Option<usize>) -> CmdResult {
    let report = load_report(report_path)?;
    let started = Instant::now();
    let resolved = resolve_report(&report, &resolve_settings(seed_starts))
        .map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    eprintln!("resolved in {:.1} ms", started.elapsed().as_secs_f64() * 1e3);
    write_report_and_scene(&resolved, out)?;
    print_summary(&resolved);
    Ok(status_exit(resolved.status))
}

fn cmd_check(report_path: &Path) -> CmdResult {
    let report = load_report(report_path)?;
    let cert = recheck(&report).map_err(|e| fail(EXIT_INVALID_INPUT, e))?;
    println!(
        "certificate: checked_poses={} violations={} min_clearance={:.6}",
        cert.checked_poses, cert.violations, cert.min_clearance
    );
    if cert != report.certificate {
        eprintln!("warning: recomputed certificate differs from the one stored in the report");
    }
    if cert.passed {
        Ok(ExitCode::SUCCESS)
    } else {
        Ok(ExitCode::from(EXIT_CERTIFICATE_VIOLATION))
    }
}

fn cmd_render(report_path: &Path, out: &Path) -> CmdResult {
    let report = load_report(report_path)?;
    let svg = render_svg(&report)
        .map_err(|e| fail(EXIT_INVALID_INPUT, format!("cannot render scene: {e}")))?;
    write_file(out, &svg)?;
    println!("wrote {}", out.display());
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(suite_path: &Path, out: &Path) -> CmdResult {
    let text = read_to_string(suite_path)?;
    let config: SuiteConfig = serde_json::from_str(&text).map_err(|e| {
        fail(EXIT_INVALID_INPUT, format!("invalid suite {}: {e}", suite_path.display()))
    })?;
    if config.scenario.is_empty() {
        return Err(fail(EXIT_INVALID_INPUT, "suite file does not name a base scenario"));
    }
    let base_path = {
        let p = PathBuf::from(&config.scenario);
        if p.is_absolute() {
            p
        } else {
            suite_path.parent().unwrap_or(Path::new(".")).join(p)
        }
    };
    let base_text = read_to_string(&base_path)?;
    let base: ScenarioDoc = serde_json::from_str(&base_text).map_err(|e| {
        fail(EXIT_INVALID_INPUT, format!("invalid scenario {}: {e}", base_path.display()))
    })?;

    let run = run_suite(&config, &base);
    for (row, ms) in run.report.rows.iter().zip(&run.elapsed_ms) {
        eprintln!(
            "cell {:<24} {:>8.1} ms  status={}",
            row.label, ms, row.status
        );
    }
    write_file(&out.join(format!("{}.csv", config.name)), &suite_csv(&run))?;
    write_file(&out.join(format!("{}.json", config.name)), &suite_json(&run))?;
    let failed = run.report.rows.iter().filter(|r| r.error.is_some()).count();
    if failed > 0 {
        eprintln!("{failed} cell(s) failed");
        Ok(ExitCode::from(EXIT_SOLVER_FAILURE))
    } else {
        Ok(ExitCode::SUCCESS)
    }
}
