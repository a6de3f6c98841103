//! Robot state, controls, and the two discrete-time motion models.
//!
//! Both models share the planar state `(x, y, theta)` with `theta` kept in
//! `(-pi, pi]`:
//!
//! * [`ModelKind::PlanarVelocity`]: body-frame forward/lateral velocity and a
//!   turn rate, integrated with one explicit Euler step of length `dt`.
//! * [`ModelKind::DownCrossTurn`]: a discrete displacement map. The control is
//!   a body-frame "down" (forward) distance, a "cross" (lateral) distance, and
//!   a turn angle applied per step; the translation is taken at the half-turn
//!   heading so the step is symmetric in the turn.
//!
//! Control bounds live on the model and are enforced *exactly* (no tolerance):
//! a component on the bound is fine, one beyond it is an error.

use thiserror::Error;

use crate::geometry::{CircleCover, ConvexPolygon, Point2, Shape};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("control component {index} = {value} outside [{lower}, {upper}]")]
    ControlOutOfBounds { index: usize, value: f64, lower: f64, upper: f64 },
    #[error("time step must be positive, got {0}")]
    InvalidTimeStep(f64),
}

/// Wrap an angle to `(-pi, pi]`.
pub fn wrap_angle(theta: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let w = theta.rem_euclid(tau);
    if w > std::f64::consts::PI {
        w - tau
    } else {
        w
    }
}

/// Planar pose. `theta` is always wrapped to `(-pi, pi]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobotState {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl RobotState {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        RobotState { x, y, theta: wrap_angle(theta) }
    }

    pub fn position(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }
}

/// One control sample; the meaning of the three components depends on the
/// model (see module docs).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control(pub [f64; 3]);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    PlanarVelocity,
    DownCrossTurn,
}

/// A motion model plus its control box bounds.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicsModel {
    pub kind: ModelKind,
    /// Euler step length; used by [`ModelKind::PlanarVelocity`] only.
    pub dt: f64,
    pub control_lower: [f64; 3],
    pub control_upper: [f64; 3],
}

impl DynamicsModel {
    pub fn new(
        kind: ModelKind,
        dt: f64,
        control_lower: [f64; 3],
        control_upper: [f64; 3],
    ) -> Result<Self, DynamicsError> {
        if kind == ModelKind::PlanarVelocity && !(dt > 0.0 && dt.is_finite()) {
            return Err(DynamicsError::InvalidTimeStep(dt));
        }
        Ok(DynamicsModel { kind, dt, control_lower, control_upper })
    }

    pub fn check_bounds(&self, u: &Control) -> Result<(), DynamicsError> {
        for i in 0..3 {
            if u.0[i] < self.control_lower[i] || u.0[i] > self.control_upper[i] {
                return Err(DynamicsError::ControlOutOfBounds {
                    index: i,
                    value: u.0[i],
                    lower: self.control_lower[i],
                    upper: self.control_upper[i],
                });
            }
        }
        Ok(())
    }

    /// Clamp a control into the box, component-wise.
    pub fn clamp(&self, u: &Control) -> Control {
        let mut out = *u;
        for i in 0..3 {
            out.0[i] = out.0[i].clamp(self.control_lower[i], self.control_upper[i]);
        }
        out
    }
}

/// Advance one step. Errors if the control violates the model's bounds.
pub fn step(model: &DynamicsModel, x: &RobotState, u: &Control) -> Result<RobotState, DynamicsError> {
    model.check_bounds(u)?;
    Ok(step_unchecked(model, x, u))
}

/// [`step`] without the bounds check, for optimizer rollouts where bounds are
/// handled as constraints on the decision variables instead.
pub fn step_unchecked(model: &DynamicsModel, x: &RobotState, u: &Control) -> RobotState {
    match model.kind {
        ModelKind::PlanarVelocity => {
            let [vu, vv, omega] = u.0;
            let (s, c) = x.theta.sin_cos();
            RobotState::new(
                x.x + model.dt * (vu * c - vv * s),
                x.y + model.dt * (vu * s + vv * c),
                x.theta + model.dt * omega,
            )
        }
        ModelKind::DownCrossTurn => {
            let [down, cross, turn] = u.0;
            let half = x.theta + 0.5 * turn;
            let perp = half + std::f64::consts::FRAC_PI_2;
            RobotState::new(
                x.x + down * half.cos() + cross * perp.cos(),
                x.y + down * half.sin() + cross * perp.sin(),
                x.theta + turn,
            )
        }
    }
}

/// Jacobians `(A, B)` of [`step_unchecked`] with respect to the state and the
/// control, in row-major `[row][col]` layout over `(x, y, theta)` rows.
/// Heading wrap-around between steps has unit slope everywhere, so it does
/// not appear.
pub fn step_jacobians(
    model: &DynamicsModel,
    x: &RobotState,
    u: &Control,
) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    match model.kind {
        ModelKind::PlanarVelocity => {
            let [vu, vv, _] = u.0;
            let dt = model.dt;
            let (s, c) = x.theta.sin_cos();
            let a = [
                [1.0, 0.0, dt * (-vu * s - vv * c)],
                [0.0, 1.0, dt * (vu * c - vv * s)],
                [0.0, 0.0, 1.0],
            ];
            let b = [
                [dt * c, -dt * s, 0.0],
                [dt * s, dt * c, 0.0],
                [0.0, 0.0, dt],
            ];
            (a, b)
        }
        ModelKind::DownCrossTurn => {
            let [down, cross, _] = u.0;
            let half = x.theta + 0.5 * u.0[2];
            let (s, c) = half.sin_cos();
            // d(x')/d(half) and d(y')/d(half); theta enters with slope 1 and
            // the turn control with slope 1/2.
            let dxdh = -down * s - cross * c;
            let dydh = down * c - cross * s;
            let a = [[1.0, 0.0, dxdh], [0.0, 1.0, dydh], [0.0, 0.0, 1.0]];
            let b = [
                [c, -s, 0.5 * dxdh],
                [s, c, 0.5 * dydh],
                [0.0, 0.0, 1.0],
            ];
            (a, b)
        }
    }
}

/// Roll a control sequence out from `x0`. Returns `controls.len() + 1` states
/// starting with `x0` itself.
pub fn rollout(
    model: &DynamicsModel,
    x0: &RobotState,
    controls: &[Control],
) -> Result<Vec<RobotState>, DynamicsError> {
    let mut states = Vec::with_capacity(controls.len() + 1);
    states.push(*x0);
    for u in controls {
        let next = step(model, states.last().unwrap(), u)?;
        states.push(next);
    }
    Ok(states)
}

/// Place body-frame footprint shapes into the world at a pose: rotate by
/// `theta` about the body origin, then translate to `(x, y)`.
pub fn footprint_at(
    x: &RobotState,
    base_polygons: &[ConvexPolygon],
    base_cover: &CircleCover,
) -> (Vec<ConvexPolygon>, CircleCover) {
    let t = x.position();
    (
        base_polygons.iter().map(|p| p.transformed(x.theta, t)).collect(),
        base_cover.transformed(x.theta, t),
    )
}

/// Robot geometry in the body frame: the exact body shapes as convex
/// polygons (possibly empty for disc-shaped robots) plus the circle cover
/// used by the overlap objective. When `polygons` is empty the cover circles
/// *are* the body and collision checks use them directly.
#[derive(Debug, Clone)]
pub struct RobotBody {
    pub polygons: Vec<ConvexPolygon>,
    pub cover: CircleCover,
}

impl RobotBody {
    /// Exact collision shapes at a pose: the polygons when present,
    /// otherwise the cover discs.
    pub fn world_shapes(&self, x: &RobotState) -> Vec<Shape> {
        let t = x.position();
        if self.polygons.is_empty() {
            self.cover
                .transformed(x.theta, t)
                .circles()
                .iter()
                .map(|c| Shape::Circle(*c))
                .collect()
        } else {
            self.polygons
                .iter()
                .map(|p| Shape::Polygon(p.transformed(x.theta, t)))
                .collect()
        }
    }

    /// Circle cover placed at a pose.
    pub fn world_cover(&self, x: &RobotState) -> CircleCover {
        self.cover.transformed(x.theta, x.position())
    }

    /// Largest distance from the body origin to any point of the body,
    /// over both the polygons and the cover discs. Bounds how far a body
    /// point travels per radian of rotation.
    pub fn max_reach(&self) -> f64 {
        let mut reach: f64 = 0.0;
        for p in &self.polygons {
            for v in p.vertices() {
                reach = reach.max(v.norm());
            }
        }
        for c in self.cover.circles() {
            reach = reach.max(c.center.norm() + c.radius);
        }
        reach
    }
}
