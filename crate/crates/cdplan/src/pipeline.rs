//! End-to-end runs: plan through the obstacle field, displace every
//! overlapped obstacle clear of the swept path, then certify the final world
//! with an exact-geometry sweep over a finely interpolated trajectory.
//!
//! The run report is fully serializable and deliberately contains no timing
//! or host-dependent fields, so running the same scenario twice produces
//! byte-identical JSON. Wall-clock numbers belong on stderr and in the
//! benchmark CSVs, not in reports.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::displacement::{
    resolve_all, resolve_metrics, ObstacleResolution, ResolveSettings, CERTIFICATE_SLACK,
};
use crate::dynamics::{RobotBody, RobotState};
use crate::geometry::{shape_clearance, Shape};
use crate::overlap::{plan, PlanError, PlanResult};
use crate::scenario::{Scenario, ScenarioDoc, ScenarioError, ShapeDoc};

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("planner failed: {0}")]
    Plan(PlanError),
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
}

/// Overall outcome, ordered by severity for exit-code mapping. A failed plan
/// outranks displacement problems (the trajectory itself is incomplete), and
/// a certificate violation is only reported when both stages claimed success
/// but the exact sweep disagrees.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PipelineStatus {
    Success,
    PlanIncomplete,
    DisplacementIncomplete,
    CertificateViolated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub status: PipelineStatus,
    /// The scenario exactly as executed.
    pub scenario: ScenarioDoc,
    pub plan: PlanRecord,
    pub displacement: Vec<DisplacementRecord>,
    pub certificate: CertificateRecord,
    pub metrics: MetricsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRecord {
    pub reached_goal: bool,
    pub steps: usize,
    /// Distance from the final state to the goal position.
    pub final_distance: f64,
    pub states: Vec<[f64; 3]>,
    pub controls: Vec<[f64; 3]>,
    pub obstacles: Vec<OverlapRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OverlapRecord {
    pub id: String,
    pub max_overlap: f64,
    pub overlapped: bool,
    pub eta_final: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DisplacementRecord {
    pub id: String,
    pub witness_poses: usize,
    pub witness_shapes: usize,
    pub witness_inflation: f64,
    pub moved: bool,
    pub centroid_shift: f64,
    pub rotation: f64,
    /// Absent when the displacement program failed (JSON has no NaN).
    pub objective_value: Option<f64>,
    pub before: ShapeDoc,
    pub after: ShapeDoc,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    /// Interpolation resolution of the sweep, as a fraction of one step.
    pub resolution: f64,
    pub checked_poses: usize,
    /// Poses where some final obstacle intersects the robot beyond the slack.
    pub violations: usize,
    pub min_clearance: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub steps: usize,
    pub path_length: f64,
    pub overlapped_count: usize,
    pub displaced_count: usize,
    /// Sum of centroid shifts over displaced obstacles.
    pub total_displacement: f64,
}

pub fn run_pipeline(scenario: &Scenario) -> Result<RunReport, PipelineError> {
    run_pipeline_with(scenario, &ResolveSettings::default())
}

pub fn run_pipeline_with(
    scenario: &Scenario,
    resolve: &ResolveSettings,
) -> Result<RunReport, PipelineError> {
    let planned = scenario.planned_obstacles();
    let plan_result = match plan(
        &scenario.model,
        &scenario.body,
        &planned,
        scenario.start,
        scenario.goal,
        &scenario.planner,
    ) {
        Ok(r) => r,
        Err(PlanError::GoalNotReached { partial, .. }) => *partial,
        Err(e) => return Err(PipelineError::Plan(e)),
    };

    let movable = scenario.movable_obstacles();
    let resolutions =
        resolve_all(&plan_result.trajectory.states, &scenario.body, &movable, resolve);

    let final_shapes = final_obstacle_shapes(scenario, &resolutions);
    let certificate = certificate_sweep(
        &plan_result.trajectory.states,
        &scenario.body,
        &final_shapes,
        resolve.interpolation_resolution,
    );

    let status = if !plan_result.reached_goal {
        PipelineStatus::PlanIncomplete
    } else if resolutions.iter().any(|r| r.error.is_some()) {
        PipelineStatus::DisplacementIncomplete
    } else if !certificate.passed {
        PipelineStatus::CertificateViolated
    } else {
        PipelineStatus::Success
    };

    let rm = resolve_metrics(&resolutions);
    let metrics = MetricsRecord {
        steps: plan_result.steps,
        path_length: path_length(&plan_result.trajectory.states),
        overlapped_count: plan_result.summaries.iter().filter(|s| s.overlapped).count(),
        displaced_count: rm.displaced_count,
        total_displacement: rm.total_magnitude,
    };

    Ok(RunReport {
        status,
        scenario: scenario.doc.clone(),
        plan: plan_record(&plan_result, scenario),
        displacement: displacement_records(scenario, &resolutions),
        certificate,
        metrics,
    })
}

/// Serialize a report deterministically (pretty JSON, trailing newline).
pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("reports always serialize");
    s.push('\n');
    s
}

/// Re-run the displacement stage and certificate of a saved report against
/// its recorded trajectory, producing a fresh report. The plan record is
/// kept as-is.
pub fn resolve_report(
    report: &RunReport,
    resolve: &ResolveSettings,
) -> Result<RunReport, PipelineError> {
    let scenario = Scenario::from_doc(report.scenario.clone())?;
    let states: Vec<RobotState> =
        report.plan.states.iter().map(|s| RobotState::new(s[0], s[1], s[2])).collect();
    let movable = scenario.movable_obstacles();
    let resolutions = resolve_all(&states, &scenario.body, &movable, resolve);
    let final_shapes = final_obstacle_shapes(&scenario, &resolutions);
    let certificate = certificate_sweep(
        &states,
        &scenario.body,
        &final_shapes,
        resolve.interpolation_resolution,
    );
    let status = if !report.plan.reached_goal {
        PipelineStatus::PlanIncomplete
    } else if resolutions.iter().any(|r| r.error.is_some()) {
        PipelineStatus::DisplacementIncomplete
    } else if !certificate.passed {
        PipelineStatus::CertificateViolated
    } else {
        PipelineStatus::Success
    };
    let rm = resolve_metrics(&resolutions);
    let metrics = MetricsRecord {
        steps: report.plan.steps,
        path_length: path_length(&states),
        overlapped_count: report.plan.obstacles.iter().filter(|o| o.overlapped).count(),
        displaced_count: rm.displaced_count,
        total_displacement: rm.total_magnitude,
    };
    Ok(RunReport {
        status,
        scenario: report.scenario.clone(),
        plan: report.plan.clone(),
        displacement: displacement_records(&scenario, &resolutions),
        certificate,
        metrics,
    })
}

/// Re-run the certificate sweep of a saved report from its own scenario echo,
/// trajectory, and displaced shapes. Used by the `check` subcommand.
pub fn recheck(report: &RunReport) -> Result<CertificateRecord, PipelineError> {
    let scenario = Scenario::from_doc(report.scenario.clone())?;
    let states: Vec<RobotState> =
        report.plan.states.iter().map(|s| RobotState::new(s[0], s[1], s[2])).collect();
    let mut shapes = Vec::with_capacity(scenario.obstacles.len());
    for ob in &scenario.obstacles {
        let displaced = report.displacement.iter().find(|d| d.id == ob.id);
        shapes.push(match displaced {
            Some(d) => d.after.to_shape()?,
            None => ob.shape.clone(),
        });
    }
    Ok(certificate_sweep(
        &states,
        &scenario.body,
        &shapes,
        report.certificate.resolution,
    ))
}

/// Exact-geometry clearance sweep of a trajectory against a set of obstacle
/// shapes. A pose counts as a violation when its minimum clearance over all
/// obstacles drops below `-CERTIFICATE_SLACK`.
pub fn certificate_sweep(
    states: &[RobotState],
    body: &RobotBody,
    obstacles: &[Shape],
    resolution: f64,
) -> CertificateRecord {
    let poses = crate::displacement::interpolate_states(states, resolution);
    let mut min_clearance = f64::INFINITY;
    let mut violations = 0usize;
    for pose in &poses {
        let robot = body.world_shapes(pose);
        let mut pose_min = f64::INFINITY;
        for ob in obstacles {
            for r in &robot {
                pose_min = pose_min.min(shape_clearance(r, ob));
            }
        }
        min_clearance = min_clearance.min(pose_min);
        if pose_min < -CERTIFICATE_SLACK {
            violations += 1;
        }
    }
    if obstacles.is_empty() || poses.is_empty() {
        min_clearance = f64::INFINITY;
    }
    CertificateRecord {
        resolution,
        checked_poses: poses.len(),
        violations,
        min_clearance,
        passed: violations == 0,
    }
}

/// Final world: each obstacle's displaced shape when the displacement stage
/// produced one, its original shape otherwise.
pub fn final_obstacle_shapes(
    scenario: &Scenario,
    resolutions: &[ObstacleResolution],
) -> Vec<Shape> {
    scenario
        .obstacles
        .iter()
        .map(|ob| {
            resolutions
                .iter()
                .find(|r| r.id == ob.id)
                .and_then(|r| r.solution.as_ref())
                .map(|s| s.new_shape.clone())
                .unwrap_or_else(|| ob.shape.clone())
        })
        .collect()
}

fn path_length(states: &[RobotState]) -> f64 {
    states
        .windows(2)
        .map(|w| w[0].position().distance(w[1].position()))
        .sum()
}

fn plan_record(result: &PlanResult, scenario: &Scenario) -> PlanRecord {
    let last = result.trajectory.states.last().copied().unwrap_or(scenario.start);
    PlanRecord {
        reached_goal: result.reached_goal,
        steps: result.steps,
        final_distance: last.position().distance(scenario.goal.position()),
        states: result.trajectory.states.iter().map(|s| [s.x, s.y, s.theta]).collect(),
        controls: result.trajectory.controls.iter().map(|c| c.0).collect(),
        obstacles: result
            .summaries
            .iter()
            .map(|s| OverlapRecord {
                id: s.id.clone(),
                max_overlap: s.max_overlap,
                overlapped: s.overlapped,
                eta_final: s.eta_final,
            })
            .collect(),
    }
}

fn displacement_records(
    scenario: &Scenario,
    resolutions: &[ObstacleResolution],
) -> Vec<DisplacementRecord> {
    // untouched obstacles resolve to identity solutions; only report the
    // obstacles the trajectory actually hit
    resolutions
        .iter()
        .filter(|r| r.witness_poses > 0)
        .map(|r| {
            let before = scenario
                .obstacles
                .iter()
                .find(|o| o.id == r.id)
                .map(|o| ShapeDoc::from(&o.shape))
                .expect("resolution ids come from the scenario");
            let (after, shift, rotation, objective, moved) = match &r.solution {
                Some(s) => (
                    ShapeDoc::from(&s.new_shape),
                    s.centroid_shift,
                    s.rotation,
                    Some(s.objective_value),
                    s.centroid_shift > 0.0 || s.rotation.abs() > 0.0,
                ),
                None => (before.clone(), 0.0, 0.0, None, false),
            };
            DisplacementRecord {
                id: r.id.clone(),
                witness_poses: r.witness_poses,
                witness_shapes: r.witness_shapes,
                witness_inflation: r.witness_inflation,
                moved,
                centroid_shift: shift,
                rotation,
                objective_value: objective,
                before,
                after,
                error: r.error.clone(),
            }
        })
        .collect()
}
