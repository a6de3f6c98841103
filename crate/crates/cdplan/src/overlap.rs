//! Receding-horizon trajectory planning *through* obstacles.
//!
//! Instead of forbidding collisions, the planner prices them: each obstacle
//! contributes a penalty built from its circle-cover overlap with the robot's
//! circle cover, and the optimizer trades that penalty against control effort
//! and goal progress. The result is a trajectory that deliberately passes
//! through the obstacles that are cheapest to push aside later; the
//! displacement stage then moves exactly those obstacles out of the way.
//!
//! Three cost modes:
//!
//! * [`OverlapCostMode::Mcd`] — quadratic in the overlap measure, so the
//!   planned path minimises (a surrogate of) the total *displacement
//!   magnitude* the obstacles will need.
//! * [`OverlapCostMode::Mcr`] — a saturating penalty `eta L / (L + epsilon)`
//!   that prices *whether* an obstacle is touched much more than *how
//!   deeply*; once the robot has overlapped an obstacle its `eta` is zeroed
//!   for the rest of the run, so the planner minimises (a surrogate of) the
//!   *count* of displaced obstacles.
//! * [`OverlapCostMode::Shortest`] — obstacle terms omitted entirely; the
//!   planned controls are bitwise independent of the obstacle set.
//!
//! Each step solves a fixed-horizon program over the flattened control
//! sequence (single shooting) with the control box as inequality
//! constraints, executes the first control, and warm-starts the next solve
//! with the remaining sequence. The rollout objective has an analytic
//! adjoint gradient (reverse sweep over the step Jacobians), which is what
//! makes dense receding-horizon solving affordable.
//!
//! Workspace walls are priced like obstacles: each robot cover circle pays a
//! heavily weighted quadratic penalty on how far it pokes out of the domain
//! box, in every mode (walls are never displaceable).

use thiserror::Error;

use crate::dynamics::{
    self, rollout, step_jacobians, step_unchecked, wrap_angle, Control, DynamicsError,
    DynamicsModel, RobotBody, RobotState,
};
use crate::geometry::{overlap_measure_cover, CircleCover, Domain};
use crate::nlp::{self, NlpError, NlpProblem, NlpSettings, NlpStatus};

/// Weight on the wall-penetration penalty. Deliberately far above any
/// obstacle weight: leaving the workspace must never be the cheap option.
pub const WALL_WEIGHT: f64 = 1e4;

/// Cost-term weights of the horizon objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Weights {
    /// Squared distance to an optional reference pose, every step.
    pub mx: f64,
    /// Base weight of the per-obstacle overlap penalty.
    pub mi: f64,
    /// Squared control magnitude, every step.
    pub mu: f64,
    /// Squared distance to the goal pose at the horizon end.
    pub mg: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Weights { mx: 0.0, mi: 0.5, mu: 0.1, mg: 10.0 }
    }
}

/// How overlap with an obstacle is priced (see module docs).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OverlapCostMode {
    Mcd,
    Mcr { eta0: f64, epsilon: f64 },
    Shortest,
}

impl OverlapCostMode {
    /// The saturating mode with its stock parameters.
    pub fn mcr_default() -> Self {
        OverlapCostMode::Mcr { eta0: 100.0, epsilon: 1e-3 }
    }
}

/// An obstacle as the planner sees it: a circle cover plus a difficulty
/// weight that scales its overlap penalty (heavier obstacles are more
/// expensive to plan through).
#[derive(Debug, Clone)]
pub struct PlannedObstacle {
    pub id: String,
    pub cover: CircleCover,
    pub weight: f64,
}

/// Planner configuration; `reference` adds an `mx`-weighted pull toward a
/// fixed pose at every step (off by default).
#[derive(Debug, Clone)]
pub struct PlannerConfig {
    pub horizon: usize,
    pub max_steps: usize,
    /// Goal reached when the executed position is within this distance.
    pub goal_tolerance: f64,
    pub weights: Weights,
    pub mode: OverlapCostMode,
    pub reference: Option<RobotState>,
    pub domain: Option<Domain>,
    pub nlp: NlpSettings,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            horizon: 20,
            max_steps: 300,
            goal_tolerance: 0.1,
            weights: Weights::default(),
            mode: OverlapCostMode::Mcd,
            reference: None,
            domain: None,
            nlp: planner_nlp_settings(),
        }
    }
}

/// NLP settings tuned for horizon solves: modest iteration budgets (the
/// receding horizon re-solves every step from a warm start, so each solve
/// only needs to be good, not perfect). The constraint tolerance is loose
/// because the only constraints are control bounds and every control is
/// clamped to those bounds before execution; demanding tight box feasibility
/// from the multiplier loop would waste outer iterations, and when the goal
/// sits beyond horizon reach (bounds active) it can reject an essentially
/// optimal iterate for a violation that clamping removes anyway. The outer
/// budget must still cover the bounds-saturated case: when the goal is far,
/// the optimum pushes every control component onto the box, the first
/// unconstrained minimizer overshoots it by O(1), and the multiplier loop
/// shrinks that violation by only a constant factor per round — too few
/// rounds would end above tolerance and fall back to the (useless, frozen)
/// feasible start.
pub fn planner_nlp_settings() -> NlpSettings {
    NlpSettings {
        max_outer_iterations: 12,
        max_inner_iterations: 60,
        constraint_tolerance: 1e-3,
        gradient_tolerance: 1e-4,
        finite_difference_step: 1e-6,
        penalty_growth: 10.0,
    }
}

/// Executed states and the controls that produced them
/// (`states.len() == controls.len() + 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub states: Vec<RobotState>,
    pub controls: Vec<Control>,
}

/// Per-obstacle outcome of a plan: the largest executed overlap measure,
/// whether the robot ever overlapped it, and the final saturating-penalty
/// gain (`eta0` untouched, `0` once overlapped; meaningful in MCR mode).
#[derive(Debug, Clone, PartialEq)]
pub struct ObstacleOverlapSummary {
    pub id: String,
    pub max_overlap: f64,
    pub overlapped: bool,
    pub eta_final: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub trajectory: Trajectory,
    pub summaries: Vec<ObstacleOverlapSummary>,
    pub reached_goal: bool,
    /// Executed steps (== `trajectory.controls.len()`).
    pub steps: usize,
}

impl PlanResult {
    /// Ids of obstacles the executed trajectory overlapped, in input order.
    pub fn overlapped_ids(&self) -> Vec<&str> {
        self.summaries
            .iter()
            .filter(|s| s.overlapped)
            .map(|s| s.id.as_str())
            .collect()
    }
}

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("horizon objective {0}")]
    Solver(#[from] NlpError),
    #[error("{0}")]
    Dynamics(#[from] DynamicsError),
    #[error("goal not reached after {steps} steps (final distance {distance:.3})")]
    GoalNotReached {
        steps: usize,
        distance: f64,
        /// Everything executed so far, for reporting and diagnosis.
        partial: Box<PlanResult>,
    },
}

/// One fixed-horizon solve: the optimized control sequence, its predicted
/// rollout, the objective value, and the solver status. A non-converged
/// status is not an error — the receding-horizon loop executes the best
/// found sequence regardless and repairs on later solves.
#[derive(Debug, Clone, PartialEq)]
pub struct HorizonPlan {
    pub controls: Vec<Control>,
    pub predicted: Vec<RobotState>,
    pub objective: f64,
    pub status: NlpStatus,
}

// ---------------------------------------------------------------------------
// Cost model
// ---------------------------------------------------------------------------

/// Everything needed to evaluate (and differentiate) the horizon objective.
/// `eta` is the per-obstacle saturating gain, aligned with `obstacles`;
/// ignored outside MCR mode.
pub struct CostModel<'a> {
    pub model: &'a DynamicsModel,
    pub body: &'a RobotBody,
    pub obstacles: &'a [PlannedObstacle],
    pub eta: &'a [f64],
    pub weights: Weights,
    pub mode: OverlapCostMode,
    pub goal: RobotState,
    pub reference: Option<RobotState>,
    pub domain: Option<Domain>,
}

impl CostModel<'_> {
    /// Overlap penalty of one obstacle at overlap measure `L`, and its
    /// derivative with respect to `L`.
    fn overlap_cost_slope(&self, index: usize, overlap: f64) -> (f64, f64) {
        let mi = self.weights.mi * self.obstacles[index].weight;
        match self.mode {
            OverlapCostMode::Shortest => (0.0, 0.0),
            OverlapCostMode::Mcd => (mi * overlap * overlap, 2.0 * mi * overlap),
            OverlapCostMode::Mcr { epsilon, .. } => {
                let eta = self.eta[index];
                let h = eta * overlap / (overlap + epsilon);
                let dh = eta * epsilon / ((overlap + epsilon) * (overlap + epsilon));
                (mi * h * h, 2.0 * mi * h * dh)
            }
        }
    }

    /// Per-state cost: reference tracking, overlap penalties, wall penalty.
    pub fn state_cost(&self, x: &RobotState) -> f64 {
        let mut cost = 0.0;
        if let Some(r) = self.reference {
            if self.weights.mx != 0.0 {
                let dth = wrap_angle(x.theta - r.theta);
                cost += self.weights.mx
                    * ((x.x - r.x) * (x.x - r.x) + (x.y - r.y) * (x.y - r.y) + dth * dth);
            }
        }
        let needs_cover = !matches!(self.mode, OverlapCostMode::Shortest)
            && !self.obstacles.is_empty()
            || self.domain.is_some();
        if !needs_cover {
            return cost;
        }
        let cover = self.body.world_cover(x);
        if !matches!(self.mode, OverlapCostMode::Shortest) {
            for (i, ob) in self.obstacles.iter().enumerate() {
                let overlap = overlap_measure_cover(&cover, &ob.cover);
                cost += self.overlap_cost_slope(i, overlap).0;
            }
        }
        if let Some(domain) = self.domain {
            for c in cover.circles() {
                for pen in wall_penetrations(c.center.x, c.center.y, c.radius, &domain) {
                    cost += WALL_WEIGHT * pen * pen;
                }
            }
        }
        cost
    }

    /// Gradient of [`CostModel::state_cost`] with respect to `(x, y, theta)`.
    pub fn state_cost_gradient(&self, x: &RobotState) -> [f64; 3] {
        let mut grad = [0.0; 3];
        if let Some(r) = self.reference {
            if self.weights.mx != 0.0 {
                grad[0] += 2.0 * self.weights.mx * (x.x - r.x);
                grad[1] += 2.0 * self.weights.mx * (x.y - r.y);
                grad[2] += 2.0 * self.weights.mx * wrap_angle(x.theta - r.theta);
            }
        }
        let price_obstacles =
            !matches!(self.mode, OverlapCostMode::Shortest) && !self.obstacles.is_empty();
        if !price_obstacles && self.domain.is_none() {
            return grad;
        }
        let base = self.body.cover.circles();
        let cover = self.body.world_cover(x);
        let world = cover.circles();
        // d(world center j)/d(theta) = base center rotated by theta + pi/2.
        let dcenters: Vec<crate::geometry::Point2> = base
            .iter()
            .map(|c| c.center.rotated(x.theta + std::f64::consts::FRAC_PI_2))
            .collect();
        if price_obstacles {
            for (i, ob) in self.obstacles.iter().enumerate() {
                let overlap = overlap_measure_cover(&cover, &ob.cover);
                let (_, slope) = self.overlap_cost_slope(i, overlap);
                if slope == 0.0 {
                    continue;
                }
                for (j, rc) in world.iter().enumerate() {
                    for oc in ob.cover.circles() {
                        let d = rc.center - oc.center;
                        let dist = d.norm();
                        if dist >= rc.radius + oc.radius || dist <= 1e-12 {
                            continue;
                        }
                        // d(overlap pair)/d(world center) = -d / dist
                        let g = d * (-slope / dist);
                        grad[0] += g.x;
                        grad[1] += g.y;
                        grad[2] += g.dot(dcenters[j]);
                    }
                }
            }
        }
        if let Some(domain) = self.domain {
            for (j, rc) in world.iter().enumerate() {
                let pens = wall_penetrations(rc.center.x, rc.center.y, rc.radius, &domain);
                // Walls in order: left (-x), right (+x), bottom (-y), top (+y).
                let signs = [(-1.0, 0.0), (1.0, 0.0), (0.0, -1.0), (0.0, 1.0)];
                for (pen, (sx, sy)) in pens.into_iter().zip(signs) {
                    if pen <= 0.0 {
                        continue;
                    }
                    let scale = 2.0 * WALL_WEIGHT * pen;
                    grad[0] += scale * sx;
                    grad[1] += scale * sy;
                    grad[2] += scale * (sx * dcenters[j].x + sy * dcenters[j].y);
                }
            }
        }
        grad
    }

    /// Terminal cost: squared pose distance to the goal, heading wrapped.
    pub fn terminal_cost(&self, x: &RobotState) -> f64 {
        let dth = wrap_angle(x.theta - self.goal.theta);
        self.weights.mg
            * ((x.x - self.goal.x) * (x.x - self.goal.x)
                + (x.y - self.goal.y) * (x.y - self.goal.y)
                + dth * dth)
    }

    fn terminal_gradient(&self, x: &RobotState) -> [f64; 3] {
        [
            2.0 * self.weights.mg * (x.x - self.goal.x),
            2.0 * self.weights.mg * (x.y - self.goal.y),
            2.0 * self.weights.mg * wrap_angle(x.theta - self.goal.theta),
        ]
    }

    /// Full horizon objective for a flattened control sequence.
    pub fn trajectory_cost(&self, x0: &RobotState, z: &[f64]) -> f64 {
        let mut cost = 0.0;
        let mut x = *x0;
        for u in z.chunks_exact(3) {
            let control = Control([u[0], u[1], u[2]]);
            cost += self.weights.mu * (u[0] * u[0] + u[1] * u[1] + u[2] * u[2]);
            x = step_unchecked(self.model, &x, &control);
            cost += self.state_cost(&x);
        }
        cost + self.terminal_cost(&x)
    }

    /// Analytic gradient of [`CostModel::trajectory_cost`]: one forward
    /// rollout, one reverse (adjoint) sweep through the step Jacobians.
    pub fn trajectory_gradient(&self, x0: &RobotState, z: &[f64]) -> Vec<f64> {
        let steps = z.len() / 3;
        let mut states = Vec::with_capacity(steps + 1);
        states.push(*x0);
        let mut controls = Vec::with_capacity(steps);
        for u in z.chunks_exact(3) {
            let control = Control([u[0], u[1], u[2]]);
            let next = step_unchecked(self.model, states.last().unwrap(), &control);
            states.push(next);
            controls.push(control);
        }
        let mut grad = vec![0.0; z.len()];
        // lambda = d(total cost)/d(state k+1), built from the back.
        let last = states.last().unwrap();
        let mut lambda = add3(self.terminal_gradient(last), self.state_cost_gradient(last));
        for k in (0..steps).rev() {
            let (a, b) = step_jacobians(self.model, &states[k], &controls[k]);
            for c in 0..3 {
                grad[3 * k + c] = b[0][c] * lambda[0]
                    + b[1][c] * lambda[1]
                    + b[2][c] * lambda[2]
                    + 2.0 * self.weights.mu * controls[k].0[c];
            }
            if k > 0 {
                let pulled = [
                    a[0][0] * lambda[0] + a[1][0] * lambda[1] + a[2][0] * lambda[2],
                    a[0][1] * lambda[0] + a[1][1] * lambda[1] + a[2][1] * lambda[2],
                    a[0][2] * lambda[0] + a[1][2] * lambda[1] + a[2][2] * lambda[2],
                ];
                lambda = add3(pulled, self.state_cost_gradient(&states[k]));
            }
        }
        grad
    }
}

fn add3(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

/// How far a circle pokes out past each wall of the domain, in order left,
/// right, bottom, top; zero when inside.
fn wall_penetrations(cx: f64, cy: f64, r: f64, domain: &Domain) -> [f64; 4] {
    [
        (r - (cx - domain.min.x)).max(0.0),
        (r - (domain.max.x - cx)).max(0.0),
        (r - (cy - domain.min.y)).max(0.0),
        (r - (domain.max.y - cy)).max(0.0),
    ]
}

// ---------------------------------------------------------------------------
// Horizon solve and receding-horizon loop
// ---------------------------------------------------------------------------

/// Solve one fixed-horizon program from `x0`. `warm` seeds the decision
/// vector (shorter sequences are padded by repeating their last control);
/// `None` starts from zero controls.
pub fn plan_horizon(
    cost: &CostModel<'_>,
    x0: &RobotState,
    horizon: usize,
    warm: Option<&[Control]>,
    settings: &NlpSettings,
) -> Result<HorizonPlan, PlanError> {
    assert!(horizon >= 1, "horizon must be at least 1");
    let dim = 3 * horizon;
    let mut z0 = vec![0.0; dim];
    if let Some(seed) = warm {
        if !seed.is_empty() {
            for k in 0..horizon {
                let u = seed.get(k).unwrap_or_else(|| seed.last().unwrap());
                z0[3 * k..3 * k + 3].copy_from_slice(&u.0);
            }
        }
    }
    let mut inequality_constraints: Vec<nlp::ScalarFn<'_>> = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        let c = j % 3;
        let upper = cost.model.control_upper[c];
        let lower = cost.model.control_lower[c];
        inequality_constraints.push(Box::new(move |z: &[f64]| z[j] - upper));
        inequality_constraints.push(Box::new(move |z: &[f64]| lower - z[j]));
    }
    let x0 = *x0;
    let problem = NlpProblem {
        dimension: dim,
        objective: Box::new(move |z: &[f64]| cost.trajectory_cost(&x0, z)),
        objective_gradient: Some(Box::new(move |z: &[f64]| cost.trajectory_gradient(&x0, z))),
        inequality_constraints,
        equality_constraints: Vec::new(),
        initial_point: z0,
    };
    let result = nlp::solve(&problem, settings)?;
    let controls: Vec<Control> = result
        .point
        .chunks_exact(3)
        .map(|u| Control([u[0], u[1], u[2]]))
        .collect();
    let clamped: Vec<Control> = controls.iter().map(|u| cost.model.clamp(u)).collect();
    let predicted = rollout(cost.model, &x0, &clamped)?;
    Ok(HorizonPlan {
        controls,
        predicted,
        objective: result.objective_value,
        status: result.status,
    })
}

/// Receding-horizon planning from `start` toward `goal`.
///
/// Every iteration solves [`plan_horizon`], executes the first control
/// (clamped into the box exactly), and warm-starts the next solve with the
/// remaining sequence. In MCR mode an obstacle's `eta` drops to zero
/// permanently as soon as an executed state overlaps it — the penalty for
/// an already-disturbed obstacle is sunk cost.
pub fn plan(
    model: &DynamicsModel,
    body: &RobotBody,
    obstacles: &[PlannedObstacle],
    start: RobotState,
    goal: RobotState,
    config: &PlannerConfig,
) -> Result<PlanResult, PlanError> {
    let mut eta = match config.mode {
        OverlapCostMode::Mcr { eta0, .. } => vec![eta0; obstacles.len()],
        _ => vec![0.0; obstacles.len()],
    };
    let mut max_overlap = vec![0.0_f64; obstacles.len()];
    let mut states = vec![start];
    let mut controls: Vec<Control> = Vec::new();
    let mut warm: Option<Vec<Control>> = None;

    let observe = |x: &RobotState,
                   eta: &mut [f64],
                   max_overlap: &mut [f64]| {
        let cover = body.world_cover(x);
        for (i, ob) in obstacles.iter().enumerate() {
            let overlap = overlap_measure_cover(&cover, &ob.cover);
            if overlap > max_overlap[i] {
                max_overlap[i] = overlap;
            }
            if overlap > 0.0 {
                eta[i] = 0.0;
            }
        }
    };
    observe(&start, &mut eta, &mut max_overlap);

    let mut x = start;
    let mut reached = goal_reached(&x, &goal, config.goal_tolerance);
    while !reached && controls.len() < config.max_steps {
        let cost = CostModel {
            model,
            body,
            obstacles,
            eta: &eta,
            weights: config.weights,
            mode: config.mode,
            goal,
            reference: config.reference,
            domain: config.domain,
        };
        let horizon_plan =
            plan_horizon(&cost, &x, config.horizon, warm.as_deref(), &config.nlp)?;
        let executed = model.clamp(&horizon_plan.controls[0]);
        x = dynamics::step(model, &x, &executed)?;
        states.push(x);
        controls.push(executed);
        observe(&x, &mut eta, &mut max_overlap);
        let mut next = horizon_plan.controls[1..].to_vec();
        if let Some(last) = horizon_plan.controls.last() {
            next.push(*last);
        }
        warm = Some(next);
        reached = goal_reached(&x, &goal, config.goal_tolerance);
    }

    let summaries: Vec<ObstacleOverlapSummary> = obstacles
        .iter()
        .enumerate()
        .map(|(i, ob)| ObstacleOverlapSummary {
            id: ob.id.clone(),
            max_overlap: max_overlap[i],
            overlapped: max_overlap[i] > 0.0,
            eta_final: eta[i],
        })
        .collect();
    let steps = controls.len();
    let result = PlanResult {
        trajectory: Trajectory { states, controls },
        summaries,
        reached_goal: reached,
        steps,
    };
    if reached {
        Ok(result)
    } else {
        let distance = (x.position() - goal.position()).norm();
        Err(PlanError::GoalNotReached { steps, distance, partial: Box::new(result) })
    }
}

fn goal_reached(x: &RobotState, goal: &RobotState, tolerance: f64) -> bool {
    (x.position() - goal.position()).norm() <= tolerance
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Circle, Point2};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn disc_body(r: f64) -> RobotBody {
        RobotBody {
            polygons: Vec::new(),
            cover: CircleCover::new(vec![Circle::new(Point2::new(0.0, 0.0), r).unwrap()])
                .unwrap(),
        }
    }

    fn planar(bound: f64) -> DynamicsModel {
        DynamicsModel::new(
            dynamics::ModelKind::PlanarVelocity,
            0.1,
            [-bound; 3],
            [bound; 3],
        )
        .unwrap()
    }

    fn obstacle(id: &str, x: f64, y: f64, r: f64) -> PlannedObstacle {
        PlannedObstacle {
            id: id.to_string(),
            cover: CircleCover::new(vec![Circle::new(Point2::new(x, y), r).unwrap()]).unwrap(),
            weight: 1.0,
        }
    }

    fn cost_model<'a>(
        model: &'a DynamicsModel,
        body: &'a RobotBody,
        obstacles: &'a [PlannedObstacle],
        eta: &'a [f64],
        weights: Weights,
        mode: OverlapCostMode,
        goal: RobotState,
        domain: Option<Domain>,
    ) -> CostModel<'a> {
        CostModel { model, body, obstacles, eta, weights, mode, goal, reference: None, domain }
    }

    #[test]
    fn quadratic_overlap_cost_worked_example() {
        // robot disc r=0.5 at origin, obstacle disc r=0.5 at (0.3, 0):
        // overlap = 0.7, cost = mi * 0.7^2 = 0.5 * 0.49 = 0.245
        let model = planar(2.5);
        let body = disc_body(0.5);
        let obstacles = [obstacle("a", 0.3, 0.0, 0.5)];
        let eta = [0.0];
        let cm = cost_model(
            &model,
            &body,
            &obstacles,
            &eta,
            Weights { mx: 0.0, mi: 0.5, mu: 0.1, mg: 0.0 },
            OverlapCostMode::Mcd,
            RobotState::new(0.0, 0.0, 0.0),
            None,
        );
        assert_abs_diff_eq!(cm.state_cost(&RobotState::new(0.0, 0.0, 0.0)), 0.245, epsilon = 1e-12);
    }

    #[test]
    fn saturating_overlap_cost_worked_example() {
        // overlap = 1 (r 0.75 + 0.75, centers 0.5 apart), eta = 100,
        // epsilon = 1e-3, mi = 1: cost = (100 / 1.001)^2
        let model = planar(2.5);
        let body = disc_body(0.75);
        let obstacles = [obstacle("a", 0.5, 0.0, 0.75)];
        let eta = [100.0];
        let cm = cost_model(
            &model,
            &body,
            &obstacles,
            &eta,
            Weights { mx: 0.0, mi: 1.0, mu: 0.1, mg: 0.0 },
            OverlapCostMode::mcr_default(),
            RobotState::new(0.0, 0.0, 0.0),
            None,
        );
        assert_abs_diff_eq!(
            cm.state_cost(&RobotState::new(0.0, 0.0, 0.0)),
            9980.029960049944,
            epsilon = 1e-9
        );
    }

    #[test]
    fn zeroed_eta_removes_the_saturating_penalty() {
        let model = planar(2.5);
        let body = disc_body(0.75);
        let obstacles = [obstacle("a", 0.5, 0.0, 0.75)];
        let eta = [0.0];
        let cm = cost_model(
            &model,
            &body,
            &obstacles,
            &eta,
            Weights { mx: 0.0, mi: 1.0, mu: 0.1, mg: 0.0 },
            OverlapCostMode::mcr_default(),
            RobotState::new(0.0, 0.0, 0.0),
            None,
        );
        assert_eq!(cm.state_cost(&RobotState::new(0.0, 0.0, 0.0)), 0.0);
    }

    #[test]
    fn wall_penalty_worked_example() {
        // disc r=0.5 with center 0.3 from the left wall: penetration 0.2,
        // cost = 1e4 * 0.04 = 400.
        let model = planar(2.5);
        let body = disc_body(0.5);
        let obstacles: [PlannedObstacle; 0] = [];
        let eta: [f64; 0] = [];
        let domain =
            Domain::new(Point2::new(0.0, 0.0), Point2::new(10.0, 10.0)).unwrap();
        let cm = cost_model(
            &model,
            &body,
            &obstacles,
            &eta,
            Weights { mx: 0.0, mi: 0.5, mu: 0.1, mg: 0.0 },
            OverlapCostMode::Mcd,
            RobotState::new(0.0, 0.0, 0.0),
            Some(domain),
        );
        assert_abs_diff_eq!(
            cm.state_cost(&RobotState::new(0.3, 5.0, 0.0)),
            400.0,
            epsilon = 1e-9
        );
        // walls are priced in shortest mode too
        let cm_shortest = cost_model(
            &model,
            &body,
            &obstacles,
            &eta,
            Weights { mx: 0.0, mi: 0.5, mu: 0.1, mg: 0.0 },
            OverlapCostMode::Shortest,
            RobotState::new(0.0, 0.0, 0.0),
            Some(domain),
        );
        assert_abs_diff_eq!(
            cm_shortest.state_cost(&RobotState::new(0.3, 5.0, 0.0)),
            400.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn terminal_cost_wraps_heading() {
        let model = planar(2.5);
        let body = disc_body(0.5);
        let obstacles: [PlannedObstacle; 0] = [];
        let eta: [f64; 0] = [];
        let goal = RobotState::new(1.0, 2.0, std::f64::consts::PI - 0.05);
        let cm = cost_model(
            &model,
            &body,
            &obstacles,
            &eta,
            Weights { mx: 0.0, mi: 0.5, mu: 0.1, mg: 10.0 },
            OverlapCostMode::Mcd,
            goal,
            None,
        );
        let x = RobotState::new(1.0, 2.0, -std::f64::consts::PI + 0.05);
        // heading error is 0.1 across the seam, not ~2 pi
        assert_abs_diff_eq!(cm.terminal_cost(&x), 10.0 * 0.01, epsilon = 1e-9);
    }

    #[test]
    fn trajectory_gradient_matches_finite_differences() {
        let bodies = [disc_body(0.5)];
        let models = [
            planar(2.5),
            DynamicsModel::new(
                dynamics::ModelKind::DownCrossTurn,
                0.0,
                [-1.5, -1.5, -std::f64::consts::PI],
                [1.5, 1.5, std::f64::consts::PI],
            )
            .unwrap(),
        ];
        let obstacles = [obstacle("a", 0.8, 0.1, 0.6), obstacle("b", 1.6, -0.2, 0.7)];
        let eta = [100.0, 100.0];
        let domain = Domain::new(Point2::new(-5.0, -1.0), Point2::new(5.0, 1.05)).unwrap();
        let modes = [
            OverlapCostMode::Mcd,
            OverlapCostMode::mcr_default(),
            OverlapCostMode::Shortest,
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for model in &models {
            for mode in modes {
                let cm = cost_model(
                    model,
                    &bodies[0],
                    &obstacles,
                    &eta,
                    Weights { mx: 0.0, mi: 0.5, mu: 0.1, mg: 10.0 },
                    mode,
                    RobotState::new(2.0, 0.3, 0.5),
                    Some(domain),
                );
                let x0 = RobotState::new(0.0, 0.0, 0.1);
                for _ in 0..5 {
                    let z: Vec<f64> = (0..15).map(|_| rng.gen_range(-1.0..1.0)).collect();
                    let analytic = cm.trajectory_gradient(&x0, &z);
                    let fd = nlp::gradient(&|z: &[f64]| cm.trajectory_cost(&x0, z), &z, 1e-6)
                        .unwrap();
                    for (a, f) in analytic.iter().zip(&fd) {
                        let scale = 1.0_f64.max(f.abs());
                        assert!(
                            (a - f).abs() <= 1e-4 * scale,
                            "gradient mismatch: analytic {a}, fd {f}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn straight_corridor_reaches_goal() {
        let model = planar(2.5);
        let body = disc_body(0.5);
        let start = RobotState::new(0.0, 0.0, 0.0);
        let goal = RobotState::new(2.0, 0.0, 0.0);
        let config = PlannerConfig { horizon: 10, max_steps: 60, ..PlannerConfig::default() };
        let result = plan(&model, &body, &[], start, goal, &config).unwrap();
        assert!(result.reached_goal);
        // The quadratic terminal/effort trade-off gives a geometric approach
        // tail: roughly 9% of the remaining distance per step near the goal.
        assert!(result.steps <= 40, "took {} steps", result.steps);
        for s in &result.trajectory.states {
            assert!(s.y.abs() < 0.05, "drifted to y = {}", s.y);
        }
        // x progress is monotone
        for pair in result.trajectory.states.windows(2) {
            assert!(pair[1].x >= pair[0].x - 1e-9);
        }
    }

    #[test]
    fn shortest_mode_is_bitwise_independent_of_obstacles() {
        let model = planar(2.5);
        let body = disc_body(0.5);
        let start = RobotState::new(0.0, 0.0, 0.0);
        let goal = RobotState::new(2.0, 0.0, 0.0);
        let config = PlannerConfig {
            horizon: 8,
            max_steps: 60,
            mode: OverlapCostMode::Shortest,
            ..PlannerConfig::default()
        };
        let blocking = [obstacle("wall", 1.0, 0.0, 0.5)];
        let with_obstacles = plan(&model, &body, &blocking, start, goal, &config).unwrap();
        let without = plan(&model, &body, &[], start, goal, &config).unwrap();
        assert_eq!(with_obstacles.trajectory, without.trajectory);
        assert!(with_obstacles.summaries[0].overlapped);
    }

    #[test]
    fn zero_control_bounds_freeze_the_robot() {
        let model = planar(0.0);
        let body = disc_body(0.5);
        let start = RobotState::new(0.0, 0.0, 0.0);
        let goal = RobotState::new(2.0, 0.0, 0.0);
        let config = PlannerConfig { horizon: 5, max_steps: 10, ..PlannerConfig::default() };
        let err = plan(&model, &body, &[], start, goal, &config).unwrap_err();
        match err {
            PlanError::GoalNotReached { steps, distance, partial } => {
                assert_eq!(steps, 10);
                assert_abs_diff_eq!(distance, 2.0, epsilon = 1e-12);
                for u in &partial.trajectory.controls {
                    assert_eq!(u.0, [0.0; 3]);
                }
                for s in &partial.trajectory.states {
                    assert_eq!((s.x, s.y, s.theta), (0.0, 0.0, 0.0));
                }
            }
            other => panic!("expected GoalNotReached, got {other:?}"),
        }
    }

    #[test]
    fn heavier_obstacle_weight_reduces_overlap() {
        // A disc slightly off the straight line (a dead-centre placement is
        // a symmetry ridge with no lateral gradient); with a tiny overlap
        // weight the planner drives through, with a large one it swerves
        // and overlaps less.
        let model = planar(2.5);
        let body = disc_body(0.4);
        let start = RobotState::new(0.0, 0.0, 0.0);
        let goal = RobotState::new(3.0, 0.0, 0.0);
        let blocking = [obstacle("mid", 1.5, 0.15, 0.5)];
        let overlap_of = |mi: f64| {
            let config = PlannerConfig {
                horizon: 12,
                max_steps: 120,
                weights: Weights { mx: 0.0, mi, mu: 0.1, mg: 10.0 },
                mode: OverlapCostMode::Mcd,
                ..PlannerConfig::default()
            };
            let result = plan(&model, &body, &blocking, start, goal, &config).unwrap();
            assert!(result.reached_goal);
            result.summaries[0].max_overlap
        };
        let shallow = overlap_of(50.0);
        let deep = overlap_of(0.01);
        assert!(
            shallow < deep - 0.05,
            "expected high weight to cut overlap: {shallow} vs {deep}"
        );
    }

    #[test]
    fn saturating_mode_zeroes_eta_after_crossing() {
        // Goal straight behind a light obstacle: the planner pushes through
        // and the obstacle's eta drops to zero; a far-away obstacle keeps
        // its initial eta.
        let model = planar(2.5);
        let body = disc_body(0.4);
        let start = RobotState::new(0.0, 0.0, 0.0);
        let goal = RobotState::new(3.0, 0.0, 0.0);
        let obstacles = [obstacle("onpath", 1.5, 0.1, 0.45), obstacle("far", 0.0, 5.0, 0.5)];
        let config = PlannerConfig {
            horizon: 12,
            max_steps: 120,
            weights: Weights { mx: 0.0, mi: 0.002, mu: 0.1, mg: 10.0 },
            mode: OverlapCostMode::mcr_default(),
            ..PlannerConfig::default()
        };
        let result = plan(&model, &body, &obstacles, start, goal, &config).unwrap();
        assert!(result.reached_goal);
        let onpath = &result.summaries[0];
        assert!(onpath.overlapped, "expected the planner to push through");
        assert_eq!(onpath.eta_final, 0.0);
        let far = &result.summaries[1];
        assert!(!far.overlapped);
        assert_eq!(far.eta_final, 100.0);
        assert_eq!(result.overlapped_ids(), vec!["onpath"]);
    }

    #[test]
    fn warm_start_padding_handles_short_seeds() {
        let model = planar(2.5);
        let body = disc_body(0.5);
        let eta: [f64; 0] = [];
        let cm = cost_model(
            &model,
            &body,
            &[],
            &eta,
            Weights::default(),
            OverlapCostMode::Shortest,
            RobotState::new(1.0, 0.0, 0.0),
            None,
        );
        let x0 = RobotState::new(0.0, 0.0, 0.0);
        let seed = [Control([1.0, 0.0, 0.0])];
        let plan = plan_horizon(&cm, &x0, 4, Some(&seed), &planner_nlp_settings()).unwrap();
        assert_eq!(plan.controls.len(), 4);
        assert_eq!(plan.predicted.len(), 5);
    }
}
