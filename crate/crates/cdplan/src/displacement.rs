//! Obstacle displacement: move each overlapped obstacle rigidly so the
//! recorded robot trajectory no longer touches it, while keeping the move
//! as small as possible.
//!
//! The trajectory is sampled densely and every robot footprint that touches
//! an obstacle becomes a *witness* shape for that obstacle. The obstacle is
//! then re-posed by a constrained nonlinear program over its defining
//! coordinates (circle centre, or polygon vertices):
//!
//! * **Objective** — sum of squared vertex displacements (equivalently, a
//!   trade-off between translation and rotation of the rigid body), or
//!   optionally just the squared centroid shift.
//! * **Separation constraints** — for each obstacle edge and witness circle,
//!   the line through the edge must miss the circle (negative discriminant
//!   of the line/circle intersection quadratic). For each obstacle edge and
//!   witness polygon edge, the intersection parameters of the two support
//!   lines must fall outside the unit interval. Both tests are *conservative*
//!   (they constrain the supporting line, not only the segment), which keeps
//!   every constraint smooth.
//! * **Rigidity constraints** — pairwise distance equalities (edges plus a
//!   fan of diagonals) pin the polygon shape; variants freeze the centroid
//!   (rotate-only) or all relative coordinates (translate-only).
//!
//! The program is non-convex, so it is solved from a small deterministic
//! set of candidate starting poses and the best *certified* result wins.
//! Certification re-checks the displaced obstacle against every witness
//! with the exact geometric predicates and re-measures all pairwise
//! distances, so a reported solution never relies on the solver's own
//! feasibility accounting.

use std::fmt;

use thiserror::Error;

use crate::dynamics::{RobotBody, RobotState};
use crate::geometry::{
    self, Circle, ConvexPolygon, Point2, Segment, Shape, PARALLEL_DENOMINATOR_EPS,
    SEGMENT_PARAM_NUDGE,
};
use crate::nlp::{self, NlpProblem, NlpSettings, ScalarFn};

/// Default clearance margin folded into every separation constraint so that
/// solutions land strictly outside the witnesses instead of exactly on them.
pub const DEFAULT_CONSTRAINT_MARGIN: f64 = 1e-4;

/// Certification slack: a displaced obstacle passes if its exact clearance
/// to every witness is at least `-CERTIFICATE_SLACK` (touching counts as
/// overlap, but we tolerate this much penetration before rejecting).
pub const CERTIFICATE_SLACK: f64 = 1e-6;

/// Relative tolerance on pairwise vertex distances when certifying that a
/// displaced polygon is still the same rigid body.
pub const RIGIDITY_REL_TOL: f64 = 1e-6;

/// Tiny overshoot added to the closed-form circle/circle displacement so
/// the result clears the witness instead of exactly touching it.
const TANGENCY_NUDGE: f64 = 1e-9;

/// Default fraction of the base step used for the longer/shorter candidate
/// starting offsets.
pub const DEFAULT_DELTA_FRACTION: f64 = 0.25;

/// How a rigid obstacle is allowed to move.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionRestriction {
    /// Translate and rotate freely.
    Free,
    /// Translation only; orientation is pinned.
    TranslateOnly,
    /// Rotation about the original vertex centroid only.
    RotateOnly,
}

impl fmt::Display for MotionRestriction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MotionRestriction::Free => write!(f, "free"),
            MotionRestriction::TranslateOnly => write!(f, "translate-only"),
            MotionRestriction::RotateOnly => write!(f, "rotate-only"),
        }
    }
}

/// What the displacement program minimises.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DisplacementObjective {
    /// Sum of squared per-vertex displacements (default). Penalises both
    /// translation and rotation of the rigid body.
    VertexSum,
    /// Squared shift of the vertex centroid only; rotation is free.
    CentroidShift,
}

/// One obstacle-displacement problem: re-pose `obstacle` so it clears every
/// shape in `witnesses`.
pub struct DisplacementProblem {
    pub obstacle: Shape,
    pub witnesses: Vec<Shape>,
    pub restriction: MotionRestriction,
    pub objective: DisplacementObjective,
    /// Clearance margin folded into the inequality constraints.
    pub margin: f64,
    /// Candidate starting points (decision vectors). When empty, a
    /// deterministic default set is generated.
    pub initial_points: Vec<Vec<f64>>,
}

impl DisplacementProblem {
    pub fn new(obstacle: Shape, witnesses: Vec<Shape>, restriction: MotionRestriction) -> Self {
        Self {
            obstacle,
            witnesses,
            restriction,
            objective: DisplacementObjective::VertexSum,
            margin: DEFAULT_CONSTRAINT_MARGIN,
            initial_points: Vec::new(),
        }
    }
}

/// A certified displacement of one obstacle.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementSolution {
    /// The obstacle after displacement.
    pub new_shape: Shape,
    /// Euclidean distance the centroid moved.
    pub centroid_shift: f64,
    /// Net rotation of the rigid body (radians; 0 for circles).
    pub rotation: f64,
    /// Value of the displacement objective at the solution.
    pub objective_value: f64,
    /// Whether the solution was certified clear of every witness. `displace`
    /// only returns certified solutions; this exists so callers embedding
    /// the struct in reports can mark failures explicitly.
    pub feasible: bool,
}

#[derive(Debug, Error)]
pub enum DisplacementError {
    /// The closed-form circle routine was called with no overlapping witness.
    #[error("obstacle does not overlap any witness; nothing to displace")]
    NoOverlap,
    /// Every candidate start failed to produce a certified clear pose.
    #[error("no feasible displacement found from any starting pose")]
    NoFeasibleSolutionFound,
    /// The obstacle cannot clear the witnesses under its motion restriction.
    #[error("motion restriction {0} cannot separate this obstacle from the witnesses")]
    RestrictionInfeasible(MotionRestriction),
    #[error("solver error: {0}")]
    Solver(#[from] nlp::NlpError),
}

/// NLP settings tuned for displacement programs: the constraint tolerance is
/// tightened well below the certification slack so rigidity equalities hold
/// to about `RIGIDITY_REL_TOL` after solving.
pub fn displacement_nlp_settings() -> NlpSettings {
    NlpSettings {
        max_outer_iterations: 30,
        max_inner_iterations: 300,
        constraint_tolerance: 1e-8,
        gradient_tolerance: 1e-7,
        finite_difference_step: 1e-7,
        penalty_growth: 10.0,
    }
}

// ---------------------------------------------------------------------------
// Closed-form circle vs. circle
// ---------------------------------------------------------------------------

/// Minimal displacement of a circular obstacle away from circular witnesses.
///
/// With a single overlapping witness the optimum is closed-form: move the
/// centre directly away from the witness centre by the overlap measure
/// (plus a `TANGENCY_NUDGE` so the result is strictly clear). Coincident
/// centres use the `+x` direction. With several witnesses this falls back
/// to the general solver.
pub fn displace_circle_circle(
    obstacle: &Circle,
    witnesses: &[Circle],
) -> Result<DisplacementSolution, DisplacementError> {
    let overlapping: Vec<&Circle> = witnesses
        .iter()
        .filter(|w| geometry::overlap_measure(obstacle, w) > 0.0)
        .collect();
    if overlapping.is_empty() {
        return Err(DisplacementError::NoOverlap);
    }
    if overlapping.len() == 1 {
        let w = overlapping[0];
        let gap = geometry::overlap_measure(obstacle, w);
        let delta = obstacle.center - w.center;
        let dist = delta.norm();
        let dir = if dist <= 1e-12 {
            Point2::new(1.0, 0.0)
        } else {
            delta * (1.0 / dist)
        };
        let magnitude = gap + TANGENCY_NUDGE;
        let new_center = obstacle.center + dir * magnitude;
        return Ok(DisplacementSolution {
            new_shape: Shape::Circle(Circle::new(new_center, obstacle.radius).expect("radius unchanged")),
            centroid_shift: magnitude,
            rotation: 0.0,
            objective_value: magnitude * magnitude,
            feasible: true,
        });
    }
    let problem = DisplacementProblem::new(
        Shape::Circle(*obstacle),
        witnesses.iter().copied().map(Shape::Circle).collect(),
        MotionRestriction::Free,
    );
    displace(&problem, &displacement_nlp_settings())
}

// ---------------------------------------------------------------------------
// Constraint builders
// ---------------------------------------------------------------------------

/// Indices of one obstacle edge's endpoint coordinates inside the decision
/// vector: the edge runs from `(z[ax], z[ay])` to `(z[bx], z[by])`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SegmentVars {
    pub ax: usize,
    pub ay: usize,
    pub bx: usize,
    pub by: usize,
}

/// One constraint per edge: the supporting line of the (variable) edge must
/// miss the (fixed) witness circle, i.e. the intersection discriminant plus
/// the margin stays non-positive.
pub fn build_segment_circle_constraints(
    edges: &[SegmentVars],
    witness: &Circle,
    margin: f64,
) -> Vec<ScalarFn<'static>> {
    edges
        .iter()
        .map(|&e| {
            let w = *witness;
            let f: ScalarFn<'static> = Box::new(move |z: &[f64]| {
                let a = Point2::new(z[e.ax], z[e.ay]);
                let b = Point2::new(z[e.bx], z[e.by]);
                geometry::line_circle_discriminant(a, b, &w) + margin
            });
            f
        })
        .collect()
}

/// Same constraint with the roles swapped: the witness edge is fixed and the
/// circle centre is the variable, at indices `(cx, cy)` with fixed `radius`.
pub fn build_circle_segment_constraints(
    cx: usize,
    cy: usize,
    radius: f64,
    witness_edges: &[Segment],
    margin: f64,
) -> Vec<ScalarFn<'static>> {
    witness_edges
        .iter()
        .map(|edge| {
            let (a, b) = (edge.a, edge.b);
            let f: ScalarFn<'static> = Box::new(move |z: &[f64]| {
                let c = Circle::new(Point2::new(z[cx], z[cy]), radius).expect("fixed radius");
                geometry::line_circle_discriminant(a, b, &c) + margin
            });
            f
        })
        .collect()
}

/// Two constraints: the intersection point of the two supporting lines must
/// fall outside the unit interval on *both* lines' parameterisations, written
/// as `1/t - 1 <= -margin` (and likewise for `s`). The reciprocal keeps the
/// expression finite when the lines are parallel (the parameter denominator
/// appears in the numerator here); exactly parallel lines contribute no
/// constraint.
pub fn build_segment_segment_constraints(
    edge: SegmentVars,
    witness_edge: &Segment,
    margin: f64,
) -> Vec<ScalarFn<'static>> {
    let (wa, wb) = (witness_edge.a, witness_edge.b);
    let numerators = [true, false];
    numerators
        .iter()
        .map(|&use_t| {
            let f: ScalarFn<'static> = Box::new(move |z: &[f64]| {
                let a = Point2::new(z[edge.ax], z[edge.ay]);
                let b = Point2::new(z[edge.bx], z[edge.by]);
                segment_param_reciprocal_constraint(a, b, wa, wb, use_t, margin)
            });
            f
        })
        .collect()
}

fn segment_param_reciprocal_constraint(
    a: Point2,
    b: Point2,
    wa: Point2,
    wb: Point2,
    use_t: bool,
    margin: f64,
) -> f64 {
    let (den, t_num, s_num) = geometry::segment_param_parts(a, b, wa, wb);
    if den.abs() <= PARALLEL_DENOMINATOR_EPS {
        // Parallel support lines never cross: trivially satisfied.
        return -1.0;
    }
    let num = if use_t { t_num } else { s_num } + SEGMENT_PARAM_NUDGE;
    if num.abs() < 1e-300 {
        // The crossing sits exactly on a segment endpoint; treat as violated.
        return 1e6;
    }
    den / num - 1.0 + margin
}

/// Centre-distance constraint for a variable circle against a fixed witness
/// circle: `(r_o + r_w + margin)^2 - |c - w|^2 <= 0`.
pub fn build_circle_circle_constraint(
    cx: usize,
    cy: usize,
    radius: f64,
    witness: &Circle,
    margin: f64,
) -> ScalarFn<'static> {
    let w = *witness;
    Box::new(move |z: &[f64]| {
        let d = Point2::new(z[cx] - w.center.x, z[cy] - w.center.y);
        let keep = radius + w.radius + margin;
        keep * keep - d.norm_squared()
    })
}

/// Rigidity equalities for a polygon whose current vertices are `vertices`
/// and whose displaced vertices live flattened in the decision vector
/// (`z[2i], z[2i+1]`).
///
/// * `Free` — squared edge lengths plus a fan of diagonals from vertex 0
///   must match the original (each normalised by the original squared
///   length), `2n - 3` equalities in total.
/// * `RotateOnly` — the `Free` set plus two equalities pinning the vertex
///   centroid.
/// * `TranslateOnly` — consecutive coordinate differences must match the
///   original, which freezes shape *and* orientation.
pub fn build_rigidity_constraints(
    vertices: &[Point2],
    restriction: MotionRestriction,
) -> Vec<ScalarFn<'static>> {
    let n = vertices.len();
    let mut constraints: Vec<ScalarFn<'static>> = Vec::new();
    let pairs: Vec<(usize, usize)> = match restriction {
        MotionRestriction::Free | MotionRestriction::RotateOnly => {
            let mut p: Vec<(usize, usize)> = (0..n).map(|i| (i, (i + 1) % n)).collect();
            p.extend((2..n - 1).map(|j| (0, j)));
            p
        }
        MotionRestriction::TranslateOnly => Vec::new(),
    };
    for (i, j) in pairs {
        let target = (vertices[i] - vertices[j]).norm_squared();
        constraints.push(Box::new(move |z: &[f64]| {
            let dx = z[2 * i] - z[2 * j];
            let dy = z[2 * i + 1] - z[2 * j + 1];
            (dx * dx + dy * dy - target) / target
        }));
    }
    match restriction {
        MotionRestriction::Free => {}
        MotionRestriction::RotateOnly => {
            let c = vertex_centroid(vertices);
            let count = n as f64;
            constraints.push(Box::new(move |z: &[f64]| {
                let mean: f64 = z.iter().step_by(2).sum::<f64>() / count;
                mean - c.x
            }));
            constraints.push(Box::new(move |z: &[f64]| {
                let mean: f64 = z.iter().skip(1).step_by(2).sum::<f64>() / count;
                mean - c.y
            }));
        }
        MotionRestriction::TranslateOnly => {
            for i in 0..n - 1 {
                let dx = vertices[i + 1].x - vertices[i].x;
                let dy = vertices[i + 1].y - vertices[i].y;
                constraints.push(Box::new(move |z: &[f64]| z[2 * (i + 1)] - z[2 * i] - dx));
                constraints.push(Box::new(move |z: &[f64]| {
                    z[2 * (i + 1) + 1] - z[2 * i + 1] - dy
                }));
            }
        }
    }
    constraints
}

fn vertex_centroid(vertices: &[Point2]) -> Point2 {
    let mut sum = Point2::default();
    for v in vertices {
        sum = sum + *v;
    }
    sum * (1.0 / vertices.len() as f64)
}

// ---------------------------------------------------------------------------
// Starting points
// ---------------------------------------------------------------------------

/// Deterministic candidate starting poses for the displacement program:
/// rigid translations of the obstacle by `±Δ` along each axis, plus
/// `Δ(1 ± delta_fraction)` variants, where `Δ` is the largest witness
/// circumdiameter (big enough to fully clear any single witness). Candidates
/// already clear of every witness are ordered first.
pub fn initial_points(obstacle: &Shape, witnesses: &[Shape], delta_fraction: f64) -> Vec<Vec<f64>> {
    translation_starts(obstacle, witnesses, delta_fraction)
}

/// Restriction-aware starting poses: rotation-only obstacles get a fan of
/// rigid rotations about the centroid instead of translations (which would
/// violate the pinned-centroid equalities from the outset).
pub fn initial_points_for(
    obstacle: &Shape,
    witnesses: &[Shape],
    restriction: MotionRestriction,
    delta_fraction: f64,
) -> Vec<Vec<f64>> {
    match restriction {
        MotionRestriction::Free | MotionRestriction::TranslateOnly => {
            translation_starts(obstacle, witnesses, delta_fraction)
        }
        MotionRestriction::RotateOnly => rotation_starts(obstacle, witnesses),
    }
}

fn translation_starts(obstacle: &Shape, witnesses: &[Shape], delta_fraction: f64) -> Vec<Vec<f64>> {
    let base = witnesses
        .iter()
        .map(Shape::circumdiameter)
        .fold(0.0_f64, f64::max)
        .max(1e-6);
    let delta = delta_fraction * base;
    let mut offsets = Vec::with_capacity(12);
    for step in [base, base + delta, base - delta] {
        offsets.push(Point2::new(step, 0.0));
        offsets.push(Point2::new(-step, 0.0));
        offsets.push(Point2::new(0.0, step));
        offsets.push(Point2::new(0.0, -step));
    }
    order_feasible_first(
        offsets
            .into_iter()
            .map(|o| shape_to_vars(&obstacle.translated(o)))
            .collect(),
        obstacle,
        witnesses,
    )
}

fn rotation_starts(obstacle: &Shape, witnesses: &[Shape]) -> Vec<Vec<f64>> {
    use std::f64::consts::PI;
    let angles = [
        PI / 12.0,
        -PI / 12.0,
        PI / 6.0,
        -PI / 6.0,
        PI / 3.0,
        -PI / 3.0,
        PI / 2.0,
        -PI / 2.0,
        2.0 * PI / 3.0,
        -2.0 * PI / 3.0,
        5.0 * PI / 6.0,
        -5.0 * PI / 6.0,
    ];
    let candidates = angles
        .iter()
        .map(|&theta| shape_to_vars(&rotate_about_centroid(obstacle, theta)))
        .collect();
    order_feasible_first(candidates, obstacle, witnesses)
}

fn rotate_about_centroid(shape: &Shape, theta: f64) -> Shape {
    let c = shape.centroid();
    match shape {
        Shape::Circle(circle) => Shape::Circle(*circle),
        Shape::Polygon(p) => {
            Shape::Polygon(p.transformed(theta, c - c.rotated(theta)))
        }
    }
}

fn order_feasible_first(
    candidates: Vec<Vec<f64>>,
    obstacle: &Shape,
    witnesses: &[Shape],
) -> Vec<Vec<f64>> {
    let (clear, blocked): (Vec<Vec<f64>>, Vec<Vec<f64>>) =
        candidates.into_iter().partition(|z| {
            let shape = shape_from_vars(obstacle, z);
            witnesses.iter().all(|w| geometry::shape_clearance(&shape, w) > 0.0)
        });
    let mut ordered = clear;
    ordered.extend(blocked);
    ordered
}

fn shape_to_vars(shape: &Shape) -> Vec<f64> {
    match shape {
        Shape::Circle(c) => vec![c.center.x, c.center.y],
        Shape::Polygon(p) => p
            .vertices()
            .iter()
            .flat_map(|v| [v.x, v.y])
            .collect(),
    }
}

/// Rebuild a shape of the same kind as `template` from a decision vector.
/// Solver output may be slightly non-convex at floating-point level, so
/// polygon construction bypasses validation; certification then checks
/// rigidity against the original vertices explicitly.
fn shape_from_vars(template: &Shape, z: &[f64]) -> Shape {
    match template {
        Shape::Circle(c) => Shape::Circle(
            Circle::new(Point2::new(z[0], z[1]), c.radius).expect("fixed radius"),
        ),
        Shape::Polygon(_) => {
            let vertices: Vec<Point2> = z
                .chunks_exact(2)
                .map(|xy| Point2::new(xy[0], xy[1]))
                .collect();
            Shape::Polygon(ConvexPolygon::from_trusted(vertices))
        }
    }
}

// ---------------------------------------------------------------------------
// The general solver
// ---------------------------------------------------------------------------

/// Solve one displacement problem: build the NLP, run it from each candidate
/// start, certify every result (and every already-clear starting pose) with
/// exact geometry, and return the certified solution with the smallest
/// objective. An obstacle already clear of all witnesses returns the
/// identity displacement.
pub fn displace(
    problem: &DisplacementProblem,
    settings: &NlpSettings,
) -> Result<DisplacementSolution, DisplacementError> {
    let already_clear = problem.witnesses.iter().all(|w| {
        geometry::shape_clearance(&problem.obstacle, w) > CERTIFICATE_SLACK
    });
    if problem.witnesses.is_empty() || already_clear {
        return Ok(DisplacementSolution {
            new_shape: problem.obstacle.clone(),
            centroid_shift: 0.0,
            rotation: 0.0,
            objective_value: 0.0,
            feasible: true,
        });
    }
    if let (Shape::Circle(_), MotionRestriction::RotateOnly) =
        (&problem.obstacle, problem.restriction)
    {
        // Rotating a circle about its centre moves nothing.
        return Err(DisplacementError::RestrictionInfeasible(MotionRestriction::RotateOnly));
    }

    let starts = if problem.initial_points.is_empty() {
        initial_points_for(
            &problem.obstacle,
            &problem.witnesses,
            problem.restriction,
            DEFAULT_DELTA_FRACTION,
        )
    } else {
        problem.initial_points.clone()
    };

    let mut best: Option<DisplacementSolution> = None;
    let mut consider = |candidate: DisplacementSolution| {
        if best
            .as_ref()
            .map_or(true, |b| candidate.objective_value < b.objective_value)
        {
            best = Some(candidate);
        }
    };

    for start in &starts {
        // A starting pose that already clears every witness is itself a
        // valid (if crude) solution; keep it so the final answer is never
        // worse than the best certified start.
        if let Some(sol) = certify(problem, start) {
            consider(sol);
        }
        let nlp_problem = build_nlp(problem, start.clone());
        let result = nlp::solve(&nlp_problem, settings)?;
        if let Some(sol) = certify(problem, &result.point) {
            consider(sol);
        }
    }
    best.ok_or(DisplacementError::NoFeasibleSolutionFound)
}

fn build_nlp(problem: &DisplacementProblem, start: Vec<f64>) -> NlpProblem<'static> {
    let dimension = start.len();
    let margin = problem.margin;
    let mut inequality_constraints: Vec<ScalarFn<'static>> = Vec::new();
    let mut equality_constraints: Vec<ScalarFn<'static>> = Vec::new();

    match &problem.obstacle {
        Shape::Circle(c) => {
            let radius = c.radius;
            for w in &problem.witnesses {
                match w {
                    Shape::Circle(wc) => {
                        inequality_constraints
                            .push(build_circle_circle_constraint(0, 1, radius, wc, margin));
                    }
                    Shape::Polygon(wp) => {
                        let wedges: Vec<Segment> = wp.edges().collect();
                        inequality_constraints.extend(build_circle_segment_constraints(
                            0, 1, radius, &wedges, margin,
                        ));
                        // The discriminant test only rules out edge
                        // crossings; also keep the centre outside the
                        // witness so full containment is excluded.
                        let wp = wp.clone();
                        inequality_constraints.push(Box::new(move |z: &[f64]| {
                            let c = Point2::new(z[0], z[1]);
                            if geometry::point_in_convex_polygon(c, &wp) {
                                1.0
                            } else {
                                -1.0
                            }
                        }));
                    }
                }
            }
        }
        Shape::Polygon(p) => {
            let n = p.vertices().len();
            let edges: Vec<SegmentVars> = (0..n)
                .map(|i| {
                    let j = (i + 1) % n;
                    SegmentVars { ax: 2 * i, ay: 2 * i + 1, bx: 2 * j, by: 2 * j + 1 }
                })
                .collect();
            for w in &problem.witnesses {
                match w {
                    Shape::Circle(wc) => {
                        inequality_constraints
                            .extend(build_segment_circle_constraints(&edges, wc, margin));
                    }
                    Shape::Polygon(wp) => {
                        for &edge in &edges {
                            for wedge in wp.edges() {
                                inequality_constraints.extend(
                                    build_segment_segment_constraints(edge, &wedge, margin),
                                );
                            }
                        }
                    }
                }
            }
            equality_constraints.extend(build_rigidity_constraints(p.vertices(), problem.restriction));
        }
    }

    let objective = build_objective(problem);
    NlpProblem {
        dimension,
        objective,
        objective_gradient: Some(build_objective_gradient(problem)),
        inequality_constraints,
        equality_constraints,
        initial_point: start,
    }
}

fn build_objective(problem: &DisplacementProblem) -> ScalarFn<'static> {
    let original = shape_to_vars(&problem.obstacle);
    match problem.objective {
        DisplacementObjective::VertexSum => Box::new(move |z: &[f64]| {
            z.iter()
                .zip(&original)
                .map(|(zi, vi)| (zi - vi) * (zi - vi))
                .sum()
        }),
        DisplacementObjective::CentroidShift => Box::new(move |z: &[f64]| {
            let n = (original.len() / 2) as f64;
            let mx: f64 = z.iter().step_by(2).sum::<f64>() / n;
            let my: f64 = z.iter().skip(1).step_by(2).sum::<f64>() / n;
            let ox: f64 = original.iter().step_by(2).sum::<f64>() / n;
            let oy: f64 = original.iter().skip(1).step_by(2).sum::<f64>() / n;
            (mx - ox) * (mx - ox) + (my - oy) * (my - oy)
        }),
    }
}

fn build_objective_gradient(problem: &DisplacementProblem) -> nlp::GradientFn<'static> {
    let original = shape_to_vars(&problem.obstacle);
    match problem.objective {
        DisplacementObjective::VertexSum => Box::new(move |z: &[f64]| {
            z.iter().zip(&original).map(|(zi, vi)| 2.0 * (zi - vi)).collect()
        }),
        DisplacementObjective::CentroidShift => Box::new(move |z: &[f64]| {
            let n = (original.len() / 2) as f64;
            let mx: f64 = z.iter().step_by(2).sum::<f64>() / n;
            let my: f64 = z.iter().skip(1).step_by(2).sum::<f64>() / n;
            let ox: f64 = original.iter().step_by(2).sum::<f64>() / n;
            let oy: f64 = original.iter().skip(1).step_by(2).sum::<f64>() / n;
            let gx = 2.0 * (mx - ox) / n;
            let gy = 2.0 * (my - oy) / n;
            (0..z.len()).map(|i| if i % 2 == 0 { gx } else { gy }).collect()
        }),
    }
}

/// Certify a decision vector with exact geometry: every witness clearance at
/// least `-CERTIFICATE_SLACK`, and (for polygons) pairwise vertex distances
/// preserved to `RIGIDITY_REL_TOL` relative, plus restriction-specific
/// checks (pinned centroid / pinned orientation). Returns the solution with
/// its displacement metrics on success.
fn certify(problem: &DisplacementProblem, z: &[f64]) -> Option<DisplacementSolution> {
    let shape = shape_from_vars(&problem.obstacle, z);
    for w in &problem.witnesses {
        if geometry::shape_clearance(&shape, w) < -CERTIFICATE_SLACK {
            return None;
        }
    }
    let (rotation, centroid_shift);
    match (&problem.obstacle, &shape) {
        (Shape::Circle(b), Shape::Circle(a)) => {
            rotation = 0.0;
            centroid_shift = (a.center - b.center).norm();
        }
        (Shape::Polygon(before), Shape::Polygon(after)) => {
            let old = before.vertices();
            let new = after.vertices();
            for i in 0..old.len() {
                for j in (i + 1)..old.len() {
                    let d0 = (old[i] - old[j]).norm();
                    let d1 = (new[i] - new[j]).norm();
                    if (d1 - d0).abs() > RIGIDITY_REL_TOL * d0 {
                        return None;
                    }
                }
            }
            let c0 = vertex_centroid(old);
            let c1 = vertex_centroid(new);
            centroid_shift = (c1 - c0).norm();
            rotation = net_rotation(old, new, c0, c1);
            let scale = problem.obstacle.circumdiameter().max(1.0);
            match problem.restriction {
                MotionRestriction::Free => {}
                MotionRestriction::RotateOnly => {
                    if centroid_shift > RIGIDITY_REL_TOL * scale {
                        return None;
                    }
                }
                MotionRestriction::TranslateOnly => {
                    if rotation.abs() > RIGIDITY_REL_TOL {
                        return None;
                    }
                }
            }
        }
        _ => unreachable!("shape_from_vars preserves the shape kind"),
    }
    let objective_value = build_objective(problem)(z);
    Some(DisplacementSolution {
        new_shape: shape,
        centroid_shift,
        rotation,
        objective_value,
        feasible: true,
    })
}

/// Best-fit rigid rotation between two vertex sets with known centroids
/// (the 2-D orthogonal Procrustes angle).
fn net_rotation(old: &[Point2], new: &[Point2], c0: Point2, c1: Point2) -> f64 {
    let mut cross = 0.0;
    let mut dot = 0.0;
    for (o, n) in old.iter().zip(new) {
        let a = *o - c0;
        let b = *n - c1;
        cross += a.cross(b);
        dot += a.dot(b);
    }
    cross.atan2(dot)
}

// ---------------------------------------------------------------------------
// Whole-trajectory resolution
// ---------------------------------------------------------------------------

/// One obstacle along the trajectory, as seen by the displacement stage.
#[derive(Debug, Clone)]
pub struct MovableObstacle {
    pub id: String,
    pub shape: Shape,
    pub restriction: MotionRestriction,
    /// Immovable obstacles are never displaced; an overlap with one is
    /// reported as an error on its resolution entry.
    pub movable: bool,
}

/// Settings for [`resolve_all`].
#[derive(Debug, Clone)]
pub struct ResolveSettings {
    /// Trajectory interpolation resolution as a fraction of one step.
    pub interpolation_resolution: f64,
    /// Upper bound on witnesses handed to one displacement program; denser
    /// collision runs are thinned and the kept witnesses inflated to cover
    /// the dropped poses.
    pub max_witnesses_per_obstacle: usize,
    /// Clearance margin for the displacement constraints.
    pub margin: f64,
    pub objective: DisplacementObjective,
    pub nlp: NlpSettings,
    /// Re-displacement rounds when the certification sweep still finds
    /// contact (witness set is extended with the missed poses each round).
    pub max_retry_rounds: usize,
    /// At most this many candidate starting poses are tried per displacement
    /// program (they are ordered already-clear first, so truncation drops the
    /// least promising ones).
    pub max_starts: usize,
}

impl Default for ResolveSettings {
    fn default() -> Self {
        Self {
            interpolation_resolution: 0.01,
            max_witnesses_per_obstacle: 48,
            margin: DEFAULT_CONSTRAINT_MARGIN,
            objective: DisplacementObjective::VertexSum,
            nlp: displacement_nlp_settings(),
            max_retry_rounds: 3,
            max_starts: 12,
        }
    }
}

/// Outcome of displacing one obstacle.
#[derive(Debug)]
pub struct ObstacleResolution {
    pub id: String,
    /// Number of interpolated trajectory poses that touched the obstacle.
    pub witness_poses: usize,
    /// Number of witness shapes actually constrained (after thinning).
    pub witness_shapes: usize,
    /// Inflation applied to kept witnesses to cover dropped poses (metres).
    pub witness_inflation: f64,
    pub solution: Option<DisplacementSolution>,
    pub error: Option<String>,
}

/// Aggregate displacement metrics over all resolved obstacles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolveMetrics {
    /// Sum of centroid shifts over displaced obstacles.
    pub total_magnitude: f64,
    /// Obstacles that actually moved.
    pub displaced_count: usize,
}

pub fn resolve_metrics(resolutions: &[ObstacleResolution]) -> ResolveMetrics {
    let mut total = 0.0;
    let mut count = 0;
    for r in resolutions {
        if let Some(sol) = &r.solution {
            if sol.centroid_shift > 0.0 || sol.rotation.abs() > 0.0 {
                total += sol.centroid_shift;
                count += 1;
            }
        }
    }
    ResolveMetrics { total_magnitude: total, displaced_count: count }
}

/// Interpolated poses along a recorded trajectory at `resolution` of a step:
/// linear in position, shortest-path in heading. Always includes the exact
/// knot states.
pub fn interpolate_states(states: &[RobotState], resolution: f64) -> Vec<RobotState> {
    assert!(resolution > 0.0 && resolution <= 1.0, "resolution must be in (0, 1]");
    if states.len() < 2 {
        return states.to_vec();
    }
    let per_step = (1.0 / resolution).round() as usize;
    let mut out = Vec::with_capacity((states.len() - 1) * per_step + 1);
    for pair in states.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let dtheta = crate::dynamics::wrap_angle(b.theta - a.theta);
        for k in 0..per_step {
            let t = k as f64 / per_step as f64;
            out.push(RobotState {
                x: a.x + t * (b.x - a.x),
                y: a.y + t * (b.y - a.y),
                theta: crate::dynamics::wrap_angle(a.theta + t * dtheta),
            });
        }
    }
    out.push(*states.last().unwrap());
    out
}

/// Upper bound on how far any body point moves between two poses:
/// translation distance plus heading change times the body reach.
fn pose_distance_bound(a: &RobotState, b: &RobotState, reach: f64) -> f64 {
    let dp = (b.position() - a.position()).norm();
    let dtheta = crate::dynamics::wrap_angle(b.theta - a.theta).abs();
    dp + dtheta * reach
}

fn inflate_shape(shape: &Shape, amount: f64) -> Shape {
    if amount <= 0.0 {
        return shape.clone();
    }
    match shape {
        Shape::Circle(c) => Shape::Circle(
            Circle::new(c.center, c.radius + amount).expect("positive inflation"),
        ),
        Shape::Polygon(p) => Shape::Polygon(offset_polygon(p, amount)),
    }
}

/// Outward offset of a convex polygon: push every edge out along its normal
/// and intersect adjacent offset support lines. Slightly larger than the
/// true rounded offset at the corners, which is fine for a conservative
/// witness.
fn offset_polygon(p: &ConvexPolygon, amount: f64) -> ConvexPolygon {
    let vs = p.vertices();
    let n = vs.len();
    let mut lines = Vec::with_capacity(n);
    for i in 0..n {
        let a = vs[i];
        let b = vs[(i + 1) % n];
        let d = b - a;
        let len = d.norm();
        // CCW interior lies left of each edge, so the outward normal points
        // right: (dy, -dx).
        let normal = Point2::new(d.y / len, -d.x / len);
        lines.push((a + normal * amount, d));
    }
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let prev = (i + n - 1) % n;
        let (p1, d1) = lines[prev];
        let (p2, d2) = lines[i];
        let den = d1.cross(d2);
        // Strict convexity rules out parallel adjacent edges.
        let t = (p2 - p1).cross(d2) / den;
        out.push(p1 + d1 * t);
    }
    ConvexPolygon::from_trusted(out)
}

struct WitnessSet {
    shapes: Vec<Shape>,
    inflation: f64,
}

/// Collect, thin and inflate witness footprints for one obstacle.
///
/// `hits` are indices into `poses` whose footprint touches the obstacle.
/// When there are more than `max_keep`, an evenly strided subset (always
/// containing the first, last and deepest hit) is kept, and each kept
/// witness is inflated by the largest pose-distance bound from a dropped
/// hit to its nearest kept neighbour — so the thinned set still covers
/// every colliding pose. A base inflation of half the inter-sample motion
/// bound covers the continuum between interpolation samples.
fn build_witnesses(
    poses: &[RobotState],
    hits: &[usize],
    depths: &[f64],
    body: &RobotBody,
    max_keep: usize,
) -> WitnessSet {
    let reach = body.max_reach();
    let mut base_inflation = 0.0_f64;
    for &h in hits {
        if h + 1 < poses.len() {
            base_inflation = base_inflation
                .max(0.5 * pose_distance_bound(&poses[h], &poses[h + 1], reach));
        }
        if h > 0 {
            base_inflation =
                base_inflation.max(0.5 * pose_distance_bound(&poses[h - 1], &poses[h], reach));
        }
    }
    let kept: Vec<usize> = if hits.len() <= max_keep {
        hits.to_vec()
    } else {
        let deepest = hits
            .iter()
            .enumerate()
            .min_by(|a, b| depths[a.0].partial_cmp(&depths[b.0]).unwrap())
            .map(|(k, _)| k)
            .unwrap();
        let mut picks: Vec<usize> = (0..max_keep)
            .map(|k| k * (hits.len() - 1) / (max_keep - 1))
            .collect();
        picks.push(deepest);
        picks.sort_unstable();
        picks.dedup();
        picks.into_iter().map(|k| hits[k]).collect()
    };
    let mut thin_inflation = 0.0_f64;
    if kept.len() < hits.len() {
        for &h in hits {
            if kept.binary_search(&h).is_ok() {
                continue;
            }
            let nearest = kept
                .iter()
                .map(|&k| pose_distance_bound(&poses[h], &poses[k], reach))
                .fold(f64::INFINITY, f64::min);
            thin_inflation = thin_inflation.max(nearest);
        }
    }
    let inflation = base_inflation + thin_inflation;
    let mut shapes = Vec::new();
    for &k in &kept {
        for s in body.world_shapes(&poses[k]) {
            shapes.push(inflate_shape(&s, inflation));
        }
    }
    WitnessSet { shapes, inflation }
}

/// Displace every obstacle the recorded trajectory touches.
///
/// The trajectory is interpolated at `settings.interpolation_resolution`,
/// witnesses are extracted per obstacle, each overlapped movable obstacle is
/// displaced, and the result is re-checked against the *full* interpolated
/// sweep; any missed contact re-enters the witness set for another round.
pub fn resolve_all(
    states: &[RobotState],
    body: &RobotBody,
    obstacles: &[MovableObstacle],
    settings: &ResolveSettings,
) -> Vec<ObstacleResolution> {
    let poses = interpolate_states(states, settings.interpolation_resolution);
    let footprints: Vec<Vec<Shape>> = poses.iter().map(|p| body.world_shapes(p)).collect();

    obstacles
        .iter()
        .map(|ob| resolve_one(ob, &poses, &footprints, body, settings))
        .collect()
}

fn sweep_hits(shape: &Shape, footprints: &[Vec<Shape>]) -> (Vec<usize>, Vec<f64>) {
    let mut hits = Vec::new();
    let mut depths = Vec::new();
    for (i, shapes) in footprints.iter().enumerate() {
        let clearance = shapes
            .iter()
            .map(|s| geometry::shape_clearance(shape, s))
            .fold(f64::INFINITY, f64::min);
        if clearance <= 0.0 {
            hits.push(i);
            depths.push(clearance);
        }
    }
    (hits, depths)
}

fn resolve_one(
    ob: &MovableObstacle,
    poses: &[RobotState],
    footprints: &[Vec<Shape>],
    body: &RobotBody,
    settings: &ResolveSettings,
) -> ObstacleResolution {
    let (hits, depths) = sweep_hits(&ob.shape, footprints);
    if hits.is_empty() {
        return ObstacleResolution {
            id: ob.id.clone(),
            witness_poses: 0,
            witness_shapes: 0,
            witness_inflation: 0.0,
            solution: Some(DisplacementSolution {
                new_shape: ob.shape.clone(),
                centroid_shift: 0.0,
                rotation: 0.0,
                objective_value: 0.0,
                feasible: true,
            }),
            error: None,
        };
    }
    if !ob.movable {
        return ObstacleResolution {
            id: ob.id.clone(),
            witness_poses: hits.len(),
            witness_shapes: 0,
            witness_inflation: 0.0,
            solution: None,
            error: Some("trajectory overlaps an immovable obstacle".to_string()),
        };
    }

    let mut all_hits = hits;
    let mut all_depths = depths;
    let witness_poses = all_hits.len();
    let mut last_err: Option<String> = None;
    let mut witness_shapes = 0;
    let mut witness_inflation = 0.0;
    for _round in 0..=settings.max_retry_rounds {
        let witness_set = build_witnesses(
            poses,
            &all_hits,
            &all_depths,
            body,
            settings.max_witnesses_per_obstacle,
        );
        witness_shapes = witness_set.shapes.len();
        witness_inflation = witness_set.inflation;
        let mut problem =
            DisplacementProblem::new(ob.shape.clone(), witness_set.shapes, ob.restriction);
        problem.objective = settings.objective;
        problem.margin = settings.margin;
        let mut starts = initial_points_for(
            &problem.obstacle,
            &problem.witnesses,
            ob.restriction,
            DEFAULT_DELTA_FRACTION,
        );
        starts.truncate(settings.max_starts.max(1));
        problem.initial_points = starts;
        match displace(&problem, &settings.nlp) {
            Ok(solution) => {
                // Certify against the full sweep, not just the witnesses.
                let (missed, missed_depths) = sweep_hits(&solution.new_shape, footprints);
                if missed.is_empty() {
                    return ObstacleResolution {
                        id: ob.id.clone(),
                        witness_poses,
                        witness_shapes,
                        witness_inflation,
                        solution: Some(solution),
                        error: None,
                    };
                }
                last_err = Some(format!(
                    "displaced pose still touches {} trajectory sample(s)",
                    missed.len()
                ));
                for (h, d) in missed.iter().zip(&missed_depths) {
                    if let Err(at) = all_hits.binary_search(h) {
                        all_hits.insert(at, *h);
                        all_depths.insert(at, *d);
                    }
                }
            }
            Err(e) => {
                last_err = Some(e.to_string());
                break;
            }
        }
    }
    ObstacleResolution {
        id: ob.id.clone(),
        witness_poses,
        witness_shapes,
        witness_inflation,
        solution: None,
        error: last_err,
    }
}
