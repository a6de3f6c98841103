//! Scenario files: the JSON schema, validation, and conversion into the
//! planner- and displacement-stage types.
//!
//! A scenario bundles the workspace, the robot (model, control bounds, body
//! shapes, circle cover), the obstacle set, and the planner configuration.
//! Parsing is strict — unknown fields are rejected, and every validation
//! error names the offending field (and obstacle id where applicable).
//!
//! Circle covers may be hand-authored; when omitted they are derived
//! automatically with a principal-axis k-circle cover, with `k` picked from
//! the shape's aspect ratio (long thin shapes get more circles).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::displacement::{MotionRestriction, MovableObstacle};
use crate::dynamics::{DynamicsModel, ModelKind, RobotBody, RobotState};
use crate::geometry::{
    k_circle_cover, min_enclosing_circle, Circle, CircleCover, ConvexPolygon, Domain, Point2,
    Shape,
};
use crate::overlap::{OverlapCostMode, PlannedObstacle, PlannerConfig, Weights};

/// Largest automatic cover size.
const MAX_AUTO_COVER: usize = 8;

/// Planner weight multiplier for immovable obstacles. The overlap stage
/// prices obstacle contact by how hard the displacement stage will have to
/// work; an immovable obstacle can never be cleared, so its contact is
/// priced like a wall. (The `shortest` baseline still ignores every
/// obstacle, movable or not.)
pub const IMMOVABLE_WEIGHT_FACTOR: f64 = 1e3;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("invalid scenario JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("scenario field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: impl Into<String>, message: impl std::fmt::Display) -> ScenarioError {
    ScenarioError::Invalid { field: field.into(), message: message.to_string() }
}

// ---------------------------------------------------------------------------
// Document types (the JSON schema)
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(default)]
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<DomainDoc>,
    pub robot: RobotDoc,
    #[serde(default)]
    pub obstacles: Vec<ObstacleDoc>,
    #[serde(default)]
    pub planner: PlannerDoc,
}

fn default_version() -> u32 {
    1
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainDoc {
    pub xmin: f64,
    pub xmax: f64,
    pub ymin: f64,
    pub ymax: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircleDoc {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

impl From<&Circle> for CircleDoc {
    fn from(c: &Circle) -> Self {
        CircleDoc { cx: c.center.x, cy: c.center.y, r: c.radius }
    }
}

/// A shape inside a report or scenario: externally tagged as
/// `{"circle": ...}` or `{"polygon": ...}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShapeDoc {
    Circle(CircleDoc),
    Polygon(Vec<[f64; 2]>),
}

impl From<&Shape> for ShapeDoc {
    fn from(s: &Shape) -> Self {
        match s {
            Shape::Circle(c) => ShapeDoc::Circle(c.into()),
            Shape::Polygon(p) => {
                ShapeDoc::Polygon(p.vertices().iter().map(|v| [v.x, v.y]).collect())
            }
        }
    }
}

impl ShapeDoc {
    pub fn to_shape(&self) -> Result<Shape, ScenarioError> {
        match self {
            ShapeDoc::Circle(c) => {
                Ok(Shape::Circle(parse_circle(c).map_err(|e| invalid("shape.circle", e))?))
            }
            ShapeDoc::Polygon(vs) => {
                let (p, _) = parse_polygon(vs).map_err(|e| invalid("shape.polygon", e))?;
                Ok(Shape::Polygon(p))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RobotDoc {
    pub model: ModelDoc,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub control_lower: [f64; 3],
    pub control_upper: [f64; 3],
    /// Body-frame convex polygons (counter-clockwise; clockwise input is
    /// reversed automatically).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polygons: Vec<Vec<[f64; 2]>>,
    /// Body-frame circle cover. Optional when polygons are given (derived
    /// automatically); for a disc robot the circles *are* the body.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub circles: Vec<CircleDoc>,
    pub start: [f64; 3],
    pub goal: [f64; 3],
}

fn default_dt() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelDoc {
    PlanarVelocity,
    DownCrossTurn,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObstacleDoc {
    pub id: String,
    #[serde(default = "default_true")]
    pub movable: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub circle: Option<CircleDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub polygon: Vec<[f64; 2]>,
    /// Optional hand-authored circle cover; derived automatically otherwise.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub circles: Vec<CircleDoc>,
    #[serde(default)]
    pub motion: MotionDoc,
    /// Difficulty weight multiplying the planner's overlap penalty for this
    /// obstacle.
    #[serde(default = "default_weight")]
    pub weight: f64,
}

fn default_true() -> bool {
    true
}

fn default_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum MotionDoc {
    #[default]
    Free,
    TranslateOnly,
    RotateOnly,
}

impl From<MotionDoc> for MotionRestriction {
    fn from(m: MotionDoc) -> Self {
        match m {
            MotionDoc::Free => MotionRestriction::Free,
            MotionDoc::TranslateOnly => MotionRestriction::TranslateOnly,
            MotionDoc::RotateOnly => MotionRestriction::RotateOnly,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannerDoc {
    #[serde(default = "default_mode")]
    pub mode: ModeDoc,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_max_steps")]
    pub max_steps: usize,
    #[serde(default = "default_goal_tolerance")]
    pub goal_tolerance: f64,
    #[serde(default)]
    pub weights: WeightsDoc,
    /// Saturating-penalty gain (MCR mode).
    #[serde(default = "default_eta")]
    pub eta: f64,
    /// Saturating-penalty softening (MCR mode).
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
}

impl Default for PlannerDoc {
    fn default() -> Self {
        PlannerDoc {
            mode: default_mode(),
            horizon: default_horizon(),
            max_steps: default_max_steps(),
            goal_tolerance: default_goal_tolerance(),
            weights: WeightsDoc::default(),
            eta: default_eta(),
            epsilon: default_epsilon(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeDoc {
    Mcd,
    Mcr,
    Shortest,
}

fn default_mode() -> ModeDoc {
    ModeDoc::Mcd
}

fn default_horizon() -> usize {
    20
}

fn default_max_steps() -> usize {
    300
}

fn default_goal_tolerance() -> f64 {
    0.1
}

fn default_eta() -> f64 {
    100.0
}

fn default_epsilon() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsDoc {
    #[serde(default)]
    pub mx: f64,
    #[serde(default = "default_mi")]
    pub mi: f64,
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_mg")]
    pub mg: f64,
}

impl Default for WeightsDoc {
    fn default() -> Self {
        WeightsDoc { mx: 0.0, mi: default_mi(), mu: default_mu(), mg: default_mg() }
    }
}

fn default_mi() -> f64 {
    0.5
}

fn default_mu() -> f64 {
    0.1
}

fn default_mg() -> f64 {
    10.0
}

// ---------------------------------------------------------------------------
// Validated scenario
// ---------------------------------------------------------------------------

/// One obstacle, validated: exact shape for certificates, circle cover for
/// the planner, motion restriction and weight.
#[derive(Debug, Clone)]
pub struct ScenarioObstacle {
    pub id: String,
    pub shape: Shape,
    pub cover: CircleCover,
    pub restriction: MotionRestriction,
    pub movable: bool,
    pub weight: f64,
}

/// A fully validated scenario, ready to run. Keeps the normalized document
/// around so reports can echo exactly what was executed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub doc: ScenarioDoc,
    pub name: String,
    pub domain: Option<Domain>,
    pub model: DynamicsModel,
    pub body: RobotBody,
    pub start: RobotState,
    pub goal: RobotState,
    pub obstacles: Vec<ScenarioObstacle>,
    pub planner: PlannerConfig,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let doc: ScenarioDoc = serde_json::from_str(text)?;
        Self::from_doc(doc)
    }

    pub fn from_doc(doc: ScenarioDoc) -> Result<Self, ScenarioError> {
        let domain = doc
            .domain
            .as_ref()
            .map(|d| {
                Domain::new(Point2::new(d.xmin, d.ymin), Point2::new(d.xmax, d.ymax))
                    .map_err(|e| invalid("domain", e))
            })
            .transpose()?;

        let robot = &doc.robot;
        for i in 0..3 {
            if !(robot.control_lower[i] <= robot.control_upper[i]) {
                return Err(invalid(
                    "robot.control_lower",
                    format!("component {i} exceeds control_upper"),
                ));
            }
        }
        let kind = match robot.model {
            ModelDoc::PlanarVelocity => ModelKind::PlanarVelocity,
            ModelDoc::DownCrossTurn => ModelKind::DownCrossTurn,
        };
        let model = DynamicsModel::new(kind, robot.dt, robot.control_lower, robot.control_upper)
            .map_err(|e| invalid("robot.dt", e))?;

        let mut polygons = Vec::with_capacity(robot.polygons.len());
        for (i, loop_) in robot.polygons.iter().enumerate() {
            let (p, _) = parse_polygon(loop_).map_err(|e| invalid(format!("robot.polygons[{i}]"), e))?;
            polygons.push(p);
        }
        let mut circles = Vec::with_capacity(robot.circles.len());
        for (i, c) in robot.circles.iter().enumerate() {
            circles.push(parse_circle(c).map_err(|e| invalid(format!("robot.circles[{i}]"), e))?);
        }
        let cover = if !circles.is_empty() {
            CircleCover::new(circles).expect("non-empty by construction")
        } else if !polygons.is_empty() {
            auto_cover_polygons(&polygons)
        } else {
            return Err(invalid("robot", "needs at least one body polygon or circle"));
        };
        let body = RobotBody { polygons, cover };

        let start = RobotState::new(robot.start[0], robot.start[1], robot.start[2]);
        let goal = RobotState::new(robot.goal[0], robot.goal[1], robot.goal[2]);
        if let Some(d) = &domain {
            if !d.contains(start.position()) {
                return Err(invalid("robot.start", "outside the domain"));
            }
            if !d.contains(goal.position()) {
                return Err(invalid("robot.goal", "outside the domain"));
            }
        }

        let mut obstacles = Vec::with_capacity(doc.obstacles.len());
        let mut seen = std::collections::BTreeSet::new();
        for ob in &doc.obstacles {
            if ob.id.is_empty() {
                return Err(invalid("obstacles[].id", "must not be empty"));
            }
            if !seen.insert(ob.id.clone()) {
                return Err(invalid(format!("obstacles[{}].id", ob.id), "duplicate id"));
            }
            if !(ob.weight > 0.0) || !ob.weight.is_finite() {
                return Err(invalid(
                    format!("obstacles[{}].weight", ob.id),
                    "must be positive and finite",
                ));
            }
            let shape = match (&ob.circle, ob.polygon.is_empty()) {
                (Some(c), true) => Shape::Circle(
                    parse_circle(c).map_err(|e| invalid(format!("obstacles[{}].circle", ob.id), e))?,
                ),
                (None, false) => {
                    let (p, _) = parse_polygon(&ob.polygon)
                        .map_err(|e| invalid(format!("obstacles[{}].polygon", ob.id), e))?;
                    Shape::Polygon(p)
                }
                (Some(_), false) => {
                    return Err(invalid(
                        format!("obstacles[{}]", ob.id),
                        "give either `circle` or `polygon`, not both",
                    ))
                }
                (None, true) => {
                    return Err(invalid(
                        format!("obstacles[{}]", ob.id),
                        "needs a `circle` or a `polygon`",
                    ))
                }
            };
            let cover = if ob.circles.is_empty() {
                auto_cover_shape(&shape)
            } else {
                let mut cs = Vec::with_capacity(ob.circles.len());
                for (i, c) in ob.circles.iter().enumerate() {
                    cs.push(
                        parse_circle(c)
                            .map_err(|e| invalid(format!("obstacles[{}].circles[{i}]", ob.id), e))?,
                    );
                }
                CircleCover::new(cs).expect("non-empty by construction")
            };
            obstacles.push(ScenarioObstacle {
                id: ob.id.clone(),
                shape,
                cover,
                restriction: ob.motion.into(),
                movable: ob.movable,
                weight: ob.weight,
            });
        }

        let planner = planner_config(&doc.planner, domain)?;
        let name = if doc.name.is_empty() { "scenario".to_string() } else { doc.name.clone() };
        Ok(Scenario { name, domain, model, body, start, goal, obstacles, planner, doc })
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(&self.doc).expect("scenario documents always serialize")
    }

    /// The obstacle set as the overlap-stage planner sees it. Immovable
    /// obstacles cannot be displaced later, so their overlap weight is
    /// escalated: the planner should treat them like walls, not like clutter
    /// that stage two will clear.
    pub fn planned_obstacles(&self) -> Vec<PlannedObstacle> {
        self.obstacles
            .iter()
            .map(|o| PlannedObstacle {
                id: o.id.clone(),
                cover: o.cover.clone(),
                weight: if o.movable { o.weight } else { o.weight * IMMOVABLE_WEIGHT_FACTOR },
            })
            .collect()
    }

    /// The obstacle set as the displacement stage sees it.
    pub fn movable_obstacles(&self) -> Vec<MovableObstacle> {
        self.obstacles
            .iter()
            .map(|o| MovableObstacle {
                id: o.id.clone(),
                shape: o.shape.clone(),
                restriction: o.restriction,
                movable: o.movable,
            })
            .collect()
    }
}

fn planner_config(doc: &PlannerDoc, domain: Option<Domain>) -> Result<PlannerConfig, ScenarioError> {
    if doc.horizon == 0 {
        return Err(invalid("planner.horizon", "must be at least 1"));
    }
    if doc.max_steps == 0 {
        return Err(invalid("planner.max_steps", "must be at least 1"));
    }
    if !(doc.goal_tolerance > 0.0) {
        return Err(invalid("planner.goal_tolerance", "must be positive"));
    }
    for (name, v) in [
        ("mx", doc.weights.mx),
        ("mi", doc.weights.mi),
        ("mu", doc.weights.mu),
        ("mg", doc.weights.mg),
    ] {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(invalid(format!("planner.weights.{name}"), "must be non-negative"));
        }
    }
    if !(doc.eta > 0.0) {
        return Err(invalid("planner.eta", "must be positive"));
    }
    if !(doc.epsilon > 0.0) {
        return Err(invalid("planner.epsilon", "must be positive"));
    }
    let mode = match doc.mode {
        ModeDoc::Mcd => OverlapCostMode::Mcd,
        ModeDoc::Mcr => OverlapCostMode::Mcr { eta0: doc.eta, epsilon: doc.epsilon },
        ModeDoc::Shortest => OverlapCostMode::Shortest,
    };
    Ok(PlannerConfig {
        horizon: doc.horizon,
        max_steps: doc.max_steps,
        goal_tolerance: doc.goal_tolerance,
        weights: Weights {
            mx: doc.weights.mx,
            mi: doc.weights.mi,
            mu: doc.weights.mu,
            mg: doc.weights.mg,
        },
        mode,
        reference: None,
        domain,
        ..PlannerConfig::default()
    })
}

fn parse_circle(c: &CircleDoc) -> Result<Circle, crate::geometry::GeometryError> {
    Circle::new(Point2::new(c.cx, c.cy), c.r)
}

fn parse_polygon(
    loop_: &[[f64; 2]],
) -> Result<(ConvexPolygon, bool), crate::geometry::GeometryError> {
    ConvexPolygon::from_loop(loop_.iter().map(|v| Point2::new(v[0], v[1])).collect())
}

/// Cover size from the bounding-box aspect ratio: 1 for roughly round
/// shapes, more for long thin ones.
fn auto_cover_k(p: &ConvexPolygon) -> usize {
    let vs = p.vertices();
    let (mut min_x, mut max_x) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut min_y, mut max_y) = (f64::INFINITY, f64::NEG_INFINITY);
    for v in vs {
        min_x = min_x.min(v.x);
        max_x = max_x.max(v.x);
        min_y = min_y.min(v.y);
        max_y = max_y.max(v.y);
    }
    let (w, h) = (max_x - min_x, max_y - min_y);
    let aspect = if w > h { w / h.max(1e-12) } else { h / w.max(1e-12) };
    (aspect.round() as usize).clamp(1, MAX_AUTO_COVER)
}

fn auto_cover_shape(shape: &Shape) -> CircleCover {
    match shape {
        Shape::Circle(c) => CircleCover::new(vec![*c]).expect("single circle"),
        Shape::Polygon(p) => k_circle_cover(p, auto_cover_k(p)),
    }
}

fn auto_cover_polygons(polygons: &[ConvexPolygon]) -> CircleCover {
    let mut circles = Vec::new();
    for p in polygons {
        circles.extend(k_circle_cover(p, auto_cover_k(p)).circles().to_vec());
    }
    CircleCover::new(circles).expect("at least one polygon")
}

/// Convenience check used by scenario authors and the test-suite generator:
/// the minimum enclosing circle of a polygon, exposed through the scenario
/// module so callers don't need the geometry internals.
pub fn polygon_circumcircle(p: &ConvexPolygon) -> Circle {
    min_enclosing_circle(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn minimal_doc() -> serde_json::Value {
        serde_json::json!({
            "robot": {
                "model": "planar_velocity",
                "control_lower": [-2.5, -2.5, -2.5],
                "control_upper": [2.5, 2.5, 2.5],
                "circles": [{"cx": 0.0, "cy": 0.0, "r": 0.5}],
                "start": [0.0, 0.0, 0.0],
                "goal": [5.0, 0.0, 0.0]
            }
        })
    }

    #[test]
    fn minimal_scenario_applies_defaults() {
        let s = Scenario::from_json(&minimal_doc().to_string()).unwrap();
        assert_eq!(s.planner.horizon, 20);
        assert_eq!(s.planner.max_steps, 300);
        assert_abs_diff_eq!(s.planner.goal_tolerance, 0.1);
        assert!(matches!(s.planner.mode, OverlapCostMode::Mcd));
        assert_abs_diff_eq!(s.planner.weights.mi, 0.5);
        assert_abs_diff_eq!(s.planner.weights.mu, 0.1);
        assert_abs_diff_eq!(s.planner.weights.mg, 10.0);
        assert_eq!(s.model.dt, 0.1);
        assert!(s.obstacles.is_empty());
        assert_eq!(s.name, "scenario");
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let mut doc = minimal_doc();
        doc["typo_field"] = serde_json::json!(1);
        let err = Scenario::from_json(&doc.to_string()).unwrap_err();
        assert!(matches!(err, ScenarioError::Json(_)));
        assert!(err.to_string().contains("typo_field"));
    }

    #[test]
    fn obstacle_defaults_and_auto_cover() {
        let mut doc = minimal_doc();
        doc["obstacles"] = serde_json::json!([
            {"id": "c1", "circle": {"cx": 2.0, "cy": 0.0, "r": 0.4}},
            {"id": "bar", "polygon": [[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 1.0]]}
        ]);
        let s = Scenario::from_json(&doc.to_string()).unwrap();
        assert!(s.obstacles[0].movable);
        assert_eq!(s.obstacles[0].restriction, MotionRestriction::Free);
        assert_abs_diff_eq!(s.obstacles[0].weight, 1.0);
        // circle obstacle covers itself
        assert_eq!(s.obstacles[0].cover.circles().len(), 1);
        // 3:1 rectangle gets a 3-circle cover
        assert_eq!(s.obstacles[1].cover.circles().len(), 3);
        // cover actually covers: every vertex inside some circle
        match &s.obstacles[1].shape {
            Shape::Polygon(p) => {
                for v in p.vertices() {
                    assert!(
                        s.obstacles[1].cover.circles().iter().any(|c| c.contains(*v)),
                        "vertex {v} not covered"
                    );
                }
            }
            _ => panic!("expected polygon"),
        }
    }

    #[test]
    fn explicit_cover_takes_precedence() {
        let mut doc = minimal_doc();
        doc["obstacles"] = serde_json::json!([
            {"id": "bar", "polygon": [[0.0, 0.0], [3.0, 0.0], [3.0, 1.0], [0.0, 1.0]],
             "circles": [{"cx": 1.5, "cy": 0.5, "r": 2.0}]}
        ]);
        let s = Scenario::from_json(&doc.to_string()).unwrap();
        assert_eq!(s.obstacles[0].cover.circles().len(), 1);
        assert_abs_diff_eq!(s.obstacles[0].cover.circles()[0].radius, 2.0);
    }

    #[test]
    fn clockwise_polygon_is_reversed() {
        let mut doc = minimal_doc();
        doc["obstacles"] = serde_json::json!([
            {"id": "cw", "polygon": [[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]]}
        ]);
        let s = Scenario::from_json(&doc.to_string()).unwrap();
        match &s.obstacles[0].shape {
            Shape::Polygon(p) => {
                let vs = p.vertices();
                let mut area2 = 0.0;
                for i in 0..vs.len() {
                    area2 += vs[i].cross(vs[(i + 1) % vs.len()]);
                }
                assert!(area2 > 0.0, "should be counter-clockwise after normalization");
            }
            _ => panic!("expected polygon"),
        }
    }

    #[test]
    fn validation_errors_name_the_field() {
        let cases: Vec<(serde_json::Value, &str)> = vec![
            (
                {
                    let mut d = minimal_doc();
                    d["obstacles"] = serde_json::json!([{"id": "x"}]);
                    d
                },
                "obstacles[x]",
            ),
            (
                {
                    let mut d = minimal_doc();
                    d["obstacles"] = serde_json::json!([
                        {"id": "x", "circle": {"cx": 0.0, "cy": 0.0, "r": -1.0}}
                    ]);
                    d
                },
                "obstacles[x].circle",
            ),
            (
                {
                    let mut d = minimal_doc();
                    d["obstacles"] = serde_json::json!([
                        {"id": "a", "circle": {"cx": 0.0, "cy": 0.0, "r": 1.0}},
                        {"id": "a", "circle": {"cx": 1.0, "cy": 0.0, "r": 1.0}}
                    ]);
                    d
                },
                "obstacles[a].id",
            ),
            (
                {
                    let mut d = minimal_doc();
                    d["planner"] = serde_json::json!({"horizon": 0});
                    d
                },
                "planner.horizon",
            ),
            (
                {
                    let mut d = minimal_doc();
                    d["domain"] = serde_json::json!({"xmin": 0.0, "xmax": 1.0, "ymin": 0.0, "ymax": 1.0});
                    d
                },
                "robot.goal",
            ),
            (
                {
                    let mut d = minimal_doc();
                    d["robot"]["control_lower"] = serde_json::json!([3.0, -2.5, -2.5]);
                    d
                },
                "robot.control_lower",
            ),
        ];
        for (doc, expected_field) in cases {
            let err = Scenario::from_json(&doc.to_string()).unwrap_err();
            match err {
                ScenarioError::Invalid { field, .. } => {
                    assert_eq!(field, expected_field, "wrong field for {doc}");
                }
                other => panic!("expected Invalid error, got {other}"),
            }
        }
    }

    #[test]
    fn disc_robot_collides_with_its_circles() {
        let s = Scenario::from_json(&minimal_doc().to_string()).unwrap();
        assert!(s.body.polygons.is_empty());
        let shapes = s.body.world_shapes(&s.start);
        assert_eq!(shapes.len(), 1);
        assert!(matches!(shapes[0], Shape::Circle(_)));
    }

    #[test]
    fn polygon_robot_gets_auto_cover() {
        let mut doc = minimal_doc();
        doc["robot"]["circles"] = serde_json::json!([]);
        doc["robot"]["polygons"] = serde_json::json!([
            [[-0.45, -0.15], [0.45, -0.15], [0.45, 0.15], [-0.45, 0.15]]
        ]);
        let s = Scenario::from_json(&doc.to_string()).unwrap();
        assert_eq!(s.body.polygons.len(), 1);
        assert_eq!(s.body.cover.circles().len(), 3);
    }

    #[test]
    fn mcr_mode_picks_up_eta_and_epsilon() {
        let mut doc = minimal_doc();
        doc["planner"] = serde_json::json!({"mode": "mcr", "eta": 50.0, "epsilon": 0.01});
        let s = Scenario::from_json(&doc.to_string()).unwrap();
        match s.planner.mode {
            OverlapCostMode::Mcr { eta0, epsilon } => {
                assert_abs_diff_eq!(eta0, 50.0);
                assert_abs_diff_eq!(epsilon, 0.01);
            }
            other => panic!("expected MCR, got {other:?}"),
        }
    }

    #[test]
    fn doc_round_trips_through_json() {
        let mut doc = minimal_doc();
        doc["name"] = serde_json::json!("round-trip");
        doc["domain"] = serde_json::json!({"xmin": -1.0, "xmax": 10.0, "ymin": -1.0, "ymax": 10.0});
        doc["obstacles"] = serde_json::json!([
            {"id": "c1", "circle": {"cx": 2.0, "cy": 0.0, "r": 0.4},
             "motion": "translate_only", "weight": 2.0, "movable": false}
        ]);
        let s = Scenario::from_json(&doc.to_string()).unwrap();
        let echoed = s.to_json_pretty();
        let reparsed = Scenario::from_json(&echoed).unwrap();
        assert_eq!(s.doc, reparsed.doc);
        assert_eq!(reparsed.obstacles[0].restriction, MotionRestriction::TranslateOnly);
        assert!(!reparsed.obstacles[0].movable);
    }
}
