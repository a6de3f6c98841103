//! Planar geometry: shapes, overlap measures, and exact predicates.
//!
//! Everything downstream leans on this module in two distinct ways, and the
//! distinction matters:
//!
//! * The *overlap measure* ([`overlap_measure`], [`overlap_measure_cover`]) is
//!   a smooth-enough scalar fed into trajectory optimization. For two circles
//!   it equals the distance one center must move for the overlap to vanish, so
//!   penalizing it penalizes exactly the displacement the world will need.
//! * The *predicates and clearances* ([`segments_intersect`],
//!   [`polygons_intersect`], [`shape_clearance`], ...) are used to certify
//!   results. They are evaluated in plain floating point with no tolerance
//!   fudging; touching shapes count as intersecting.
//!
//! Conventions:
//! * Polygons are strictly convex with vertices in counter-clockwise order.
//! * Angles are radians, lengths are meters.
//! * [`line_circle_no_intersection`] tests the *infinite line* through a
//!   segment, not the segment itself. That is deliberate conservatism: the
//!   displacement stage uses it as a sufficient no-overlap condition whose
//!   sign is a polynomial in the endpoints, cheap to differentiate.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Absolute tolerance on the 2x2 determinant below which two segment
/// directions are treated as parallel and intersection parameters are refused.
pub const PARALLEL_DENOMINATOR_EPS: f64 = 1e-12;

/// Nudge added to the numerators of the segment intersection parameters so the
/// reciprocals `1/t`, `1/s` used as no-crossing constraints stay finite when a
/// numerator passes through zero.
pub const SEGMENT_PARAM_NUDGE: f64 = 1e-8;

/// Multiplicative slack used when the enclosing-circle construction checks
/// containment of already-processed points.
const MEC_CONTAINS_EPS: f64 = 1e-12;

/// Relative tolerance for the strict-convexity cross-product test.
const CONVEXITY_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("circle radius must be positive and finite, got {0}")]
    InvalidRadius(f64),
    #[error("all coordinates must be finite")]
    NonFiniteCoordinate,
    #[error("polygon needs at least 3 vertices, got {0}")]
    TooFewVertices(usize),
    #[error("polygon repeats vertex {0}")]
    RepeatedVertex(usize),
    #[error("polygon is not strictly convex at vertex {0} (collinear or reflex corner)")]
    NotStrictlyConvex(usize),
    #[error("polygon vertices wind clockwise; expected counter-clockwise")]
    ClockwiseWinding,
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("segments are parallel; intersection parameters are undefined")]
    ParallelSegments,
    #[error("circle cover needs at least one circle")]
    EmptyCover,
    #[error("domain max must exceed min in both coordinates")]
    InvalidDomain,
}

// ---------------------------------------------------------------------------
// Core types
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, rhs: Point2) -> f64 {
        self.x * rhs.x + self.y * rhs.y
    }

    /// z-component of the 3D cross product; positive when `rhs` is
    /// counter-clockwise from `self`.
    pub fn cross(self, rhs: Point2) -> f64 {
        self.x * rhs.y - self.y * rhs.x
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm_squared().sqrt()
    }

    pub fn distance(self, rhs: Point2) -> f64 {
        (self - rhs).norm()
    }

    pub fn rotated(self, angle: f64) -> Point2 {
        let (s, c) = angle.sin_cos();
        Point2::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, rhs: Point2) -> Point2 {
        Point2::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, rhs: Point2) -> Point2 {
        Point2::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, rhs: f64) -> Point2 {
        Point2::new(self.x * rhs, self.y * rhs)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Circle {
    pub center: Point2,
    pub radius: f64,
}

impl Circle {
    /// Validated constructor: the radius must be positive and everything
    /// finite. Internal construction sites that transform an already-valid
    /// circle build the struct directly.
    pub fn new(center: Point2, radius: f64) -> Result<Self, GeometryError> {
        if !center.is_finite() {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(GeometryError::InvalidRadius(radius));
        }
        Ok(Circle { center, radius })
    }

    pub fn translated(&self, offset: Point2) -> Circle {
        Circle { center: self.center + offset, radius: self.radius }
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.center.distance(p) <= self.radius
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub a: Point2,
    pub b: Point2,
}

impl Segment {
    pub fn new(a: Point2, b: Point2) -> Result<Self, GeometryError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        if a == b {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment { a, b })
    }
}

/// Strictly convex polygon, vertices counter-clockwise, no repeats.
///
/// The vertex list is private so every value of this type satisfies the
/// invariant; rigid transforms preserve it and reuse the vertices directly.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    vertices: Vec<Point2>,
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0_f64, f64::max);
        let n = vertices.len();
        for i in 0..n {
            if vertices[i].distance(vertices[(i + 1) % n]) <= 1e-12 * scale {
                return Err(GeometryError::RepeatedVertex(i));
            }
        }
        let mut area2 = 0.0;
        for i in 0..n {
            area2 += vertices[i].cross(vertices[(i + 1) % n]);
        }
        if area2 < 0.0 {
            return Err(GeometryError::ClockwiseWinding);
        }
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if (b - a).cross(c - b) <= CONVEXITY_EPS * scale * scale {
                return Err(GeometryError::NotStrictlyConvex((i + 1) % n));
            }
        }
        Ok(ConvexPolygon { vertices })
    }

    /// Like [`ConvexPolygon::new`] but accepts clockwise input by reversing
    /// it. Returns whether the loop was reversed so callers can warn.
    pub fn from_loop(mut vertices: Vec<Point2>) -> Result<(Self, bool), GeometryError> {
        let mut area2 = 0.0;
        let n = vertices.len();
        for i in 0..n {
            area2 += vertices[i].cross(vertices[(i + 1) % n]);
        }
        let reversed = n >= 3 && area2 < 0.0;
        if reversed {
            vertices.reverse();
        }
        Ok((Self::new(vertices)?, reversed))
    }

    /// Construct without validation. Only for vertex lists obtained by rigid
    /// or near-rigid transformation of an already-valid polygon (e.g. solver
    /// output whose rigidity is certified separately).
    pub(crate) fn from_trusted(vertices: Vec<Point2>) -> Self {
        ConvexPolygon { vertices }
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    /// Vertex mean. Used as the fixed point for rotation-only displacement
    /// and as the reference point for displacement magnitudes; under rigid
    /// motion it moves exactly like the area centroid.
    pub fn centroid(&self) -> Point2 {
        let mut sum = Point2::default();
        for &v in &self.vertices {
            sum = sum + v;
        }
        sum * (1.0 / self.vertices.len() as f64)
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| Segment {
            a: self.vertices[i],
            b: self.vertices[(i + 1) % n],
        })
    }

    /// Rotate about the origin, then translate.
    pub fn transformed(&self, rotation: f64, translation: Point2) -> ConvexPolygon {
        ConvexPolygon::from_trusted(
            self.vertices
                .iter()
                .map(|v| v.rotated(rotation) + translation)
                .collect(),
        )
    }

    pub fn translated(&self, offset: Point2) -> ConvexPolygon {
        ConvexPolygon::from_trusted(self.vertices.iter().map(|&v| v + offset).collect())
    }

    pub fn contains(&self, p: Point2) -> bool {
        point_in_convex_polygon(p, self)
    }
}

/// Non-empty set of circles covering a shape for overlap evaluation.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleCover {
    circles: Vec<Circle>,
}

impl CircleCover {
    pub fn new(circles: Vec<Circle>) -> Result<Self, GeometryError> {
        if circles.is_empty() {
            return Err(GeometryError::EmptyCover);
        }
        Ok(CircleCover { circles })
    }

    pub fn circles(&self) -> &[Circle] {
        &self.circles
    }

    pub fn translated(&self, offset: Point2) -> CircleCover {
        CircleCover { circles: self.circles.iter().map(|c| c.translated(offset)).collect() }
    }

    /// Rotate every center about the origin, then translate. Radii are
    /// unchanged, so covering is preserved under the same transform of the
    /// covered shape.
    pub fn transformed(&self, rotation: f64, translation: Point2) -> CircleCover {
        CircleCover {
            circles: self
                .circles
                .iter()
                .map(|c| Circle { center: c.center.rotated(rotation) + translation, radius: c.radius })
                .collect(),
        }
    }
}

/// Axis-aligned rectangular workspace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Domain {
    pub min: Point2,
    pub max: Point2,
}

impl Domain {
    pub fn new(min: Point2, max: Point2) -> Result<Self, GeometryError> {
        if !min.is_finite() || !max.is_finite() {
            return Err(GeometryError::NonFiniteCoordinate);
        }
        if !(max.x > min.x && max.y > min.y) {
            return Err(GeometryError::InvalidDomain);
        }
        Ok(Domain { min, max })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }
}

/// A world-frame obstacle or robot-footprint shape.
#[derive(Debug, Clone, PartialEq)]
pub enum Shape {
    Circle(Circle),
    Polygon(ConvexPolygon),
}

impl Shape {
    pub fn centroid(&self) -> Point2 {
        match self {
            Shape::Circle(c) => c.center,
            Shape::Polygon(p) => p.centroid(),
        }
    }

    pub fn translated(&self, offset: Point2) -> Shape {
        match self {
            Shape::Circle(c) => Shape::Circle(c.translated(offset)),
            Shape::Polygon(p) => Shape::Polygon(p.translated(offset)),
        }
    }

    /// Diameter of the minimum enclosing circle.
    pub fn circumdiameter(&self) -> f64 {
        match self {
            Shape::Circle(c) => 2.0 * c.radius,
            Shape::Polygon(p) => 2.0 * min_enclosing_circle(p).radius,
        }
    }
}

// ---------------------------------------------------------------------------
// Overlap measure
// ---------------------------------------------------------------------------

/// Overlap between two circles: `max(0, r_a + r_b - |center_a - center_b|)`.
///
/// Zero exactly when the circles are disjoint or tangent. When positive it is
/// the minimal distance either center must be displaced for the circles to
/// become tangent, which is what makes it the right penalty for a planner
/// whose overlaps are later resolved by displacing obstacles.
pub fn overlap_measure(a: &Circle, b: &Circle) -> f64 {
    (a.radius + b.radius - a.center.distance(b.center)).max(0.0)
}

/// Sum of [`overlap_measure`] over all circle pairs of two covers.
pub fn overlap_measure_cover(a: &CircleCover, b: &CircleCover) -> f64 {
    let mut total = 0.0;
    for ca in a.circles() {
        for cb in b.circles() {
            total += overlap_measure(ca, cb);
        }
    }
    total
}

// ---------------------------------------------------------------------------
// Minimum enclosing circle and circle covers
// ---------------------------------------------------------------------------

/// Minimum enclosing circle of a polygon's vertices (which encloses the whole
/// polygon, by convexity).
pub fn min_enclosing_circle(polygon: &ConvexPolygon) -> Circle {
    min_enclosing_circle_of_points(polygon.vertices())
}

/// Minimum enclosing circle of a non-empty point set.
///
/// Incremental construction: grow the circle each time a point falls outside,
/// re-solving with that point pinned to the boundary. Deterministic (no
/// shuffling) — worst case is quadratic-ish in the point count, which is fine
/// for the vertex counts seen here.
pub fn min_enclosing_circle_of_points(points: &[Point2]) -> Circle {
    assert!(!points.is_empty(), "enclosing circle of an empty point set");
    let mut best = Circle { center: points[0], radius: 0.0 };
    for (i, &p) in points.iter().enumerate() {
        if !mec_contains(&best, p) {
            best = mec_with_one_boundary(&points[..=i], p);
        }
    }
    best
}

fn mec_contains(c: &Circle, p: Point2) -> bool {
    c.center.distance(p) <= c.radius * (1.0 + MEC_CONTAINS_EPS) + MEC_CONTAINS_EPS
}

fn mec_with_one_boundary(points: &[Point2], p: Point2) -> Circle {
    let mut c = Circle { center: p, radius: 0.0 };
    for (i, &q) in points.iter().enumerate() {
        if !mec_contains(&c, q) {
            c = if c.radius == 0.0 {
                circle_from_diameter(p, q)
            } else {
                mec_with_two_boundary(&points[..=i], p, q)
            };
        }
    }
    c
}

fn mec_with_two_boundary(points: &[Point2], p: Point2, q: Point2) -> Circle {
    let diam = circle_from_diameter(p, q);
    let pq = q - p;
    let mut left: Option<Circle> = None;
    let mut right: Option<Circle> = None;
    for &r in points {
        if mec_contains(&diam, r) {
            continue;
        }
        let side = pq.cross(r - p);
        let Some(c) = circumcircle(p, q, r) else { continue };
        let c_side = pq.cross(c.center - p);
        if side > 0.0 {
            if left.as_ref().map_or(true, |l| c_side > pq.cross(l.center - p)) {
                left = Some(c);
            }
        } else if side < 0.0 {
            if right.as_ref().map_or(true, |r0| c_side < pq.cross(r0.center - p)) {
                right = Some(c);
            }
        }
    }
    match (left, right) {
        (None, None) => diam,
        (Some(l), None) => l,
        (None, Some(r)) => r,
        (Some(l), Some(r)) => {
            if l.radius <= r.radius {
                l
            } else {
                r
            }
        }
    }
}

fn circle_from_diameter(a: Point2, b: Point2) -> Circle {
    let center = (a + b) * 0.5;
    // max guards against rounding making one endpoint fall just outside
    let radius = center.distance(a).max(center.distance(b));
    Circle { center, radius }
}

fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<Circle> {
    let d = 2.0 * ((b - a).cross(c - a));
    if d.abs() < 1e-30 {
        return None;
    }
    let a2 = a.norm_squared();
    let b2 = b.norm_squared();
    let c2 = c.norm_squared();
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let center = Point2::new(ux, uy);
    let radius = center
        .distance(a)
        .max(center.distance(b))
        .max(center.distance(c));
    Some(Circle { center, radius })
}

/// Cover a convex polygon with `k` circles.
///
/// The polygon is sliced into `k` equal-width slabs perpendicular to its
/// principal axis (largest-variance direction of the vertices) and each slab
/// gets the minimum enclosing circle of its clipped region. `k = 1` reduces
/// to the minimum enclosing circle. Circles are ordered by position along the
/// axis, so the result is deterministic.
pub fn k_circle_cover(polygon: &ConvexPolygon, k: usize) -> CircleCover {
    assert!(k >= 1, "cover needs at least one circle");
    if k == 1 {
        return CircleCover { circles: vec![min_enclosing_circle(polygon)] };
    }
    let vs = polygon.vertices();
    let n = vs.len() as f64;
    let mean = polygon.centroid();
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &v in vs {
        let d = v - mean;
        sxx += d.x * d.x;
        sxy += d.x * d.y;
        syy += d.y * d.y;
    }
    // Major-axis angle of the 2x2 covariance matrix. atan2(0, 0) = 0 keeps
    // isotropic vertex sets (squares) deterministic on the x axis.
    let angle = 0.5 * (2.0 * sxy / n).atan2((sxx - syy) / n);
    let axis = Point2::new(angle.cos(), angle.sin());

    let tmin = vs.iter().map(|v| v.dot(axis)).fold(f64::INFINITY, f64::min);
    let tmax = vs.iter().map(|v| v.dot(axis)).fold(f64::NEG_INFINITY, f64::max);
    let width = (tmax - tmin) / k as f64;
    let mut circles = Vec::with_capacity(k);
    for i in 0..k {
        let lo = tmin + width * i as f64;
        let hi = tmin + width * (i + 1) as f64;
        let mut pts: Vec<Point2> = vs.to_vec();
        pts = clip_halfplane(&pts, |p| lo - p.dot(axis));
        pts = clip_halfplane(&pts, |p| p.dot(axis) - hi);
        let circle = if pts.is_empty() {
            // Cannot happen for a full-dimensional polygon; keep the cover
            // well-formed regardless.
            min_enclosing_circle(polygon)
        } else {
            let mut c = min_enclosing_circle_of_points(&pts);
            c.radius = c.radius.max(1e-12);
            c
        };
        circles.push(circle);
    }
    CircleCover { circles }
}

/// Clip a convex loop against the halfplane `f(p) <= 0`.
fn clip_halfplane(pts: &[Point2], f: impl Fn(Point2) -> f64) -> Vec<Point2> {
    let mut out = Vec::with_capacity(pts.len() + 1);
    let n = pts.len();
    for i in 0..n {
        let a = pts[i];
        let b = pts[(i + 1) % n];
        let fa = f(a);
        let fb = f(b);
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            out.push(a + (b - a) * (fa / (fa - fb)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Line / segment predicates
// ---------------------------------------------------------------------------

/// Signed quadratic discriminant of the infinite line through `seg` against a
/// circle. Negative means the line misses the circle; zero means tangency.
///
/// With `d = a - b` and `e = b - center`, points of the line are
/// `b + t d` and the squared-distance condition gives the quadratic
/// `t^2 |d|^2 + 2 t (d.e) + |e|^2 - r^2 = 0` whose (quarter) discriminant this
/// returns: `(d.e)^2 - |d|^2 (|e|^2 - r^2)`.
pub fn line_circle_discriminant(a: Point2, b: Point2, circle: &Circle) -> f64 {
    let d = a - b;
    let e = b - circle.center;
    let de = d.dot(e);
    de * de - d.norm_squared() * (e.norm_squared() - circle.radius * circle.radius)
}

/// True when the infinite line through `seg` misses `circle` entirely.
///
/// Deliberately conservative as a segment test: a segment whose *line* crosses
/// the circle far beyond the endpoints is still reported as intersecting.
pub fn line_circle_no_intersection(seg: &Segment, circle: &Circle) -> bool {
    line_circle_discriminant(seg.a, seg.b, circle) < 0.0
}

/// Intersection parameters `(t, s)` of the lines through two segments.
///
/// The crossing point is `t * s1.a + (1 - t) * s1.b`, equivalently
/// `s * s2.a + (1 - s) * s2.b`; values in `[0, 1]` land on the respective
/// segment. A nudge of [`SEGMENT_PARAM_NUDGE`] is added to both numerators so
/// the reciprocals used as no-crossing constraints stay bounded; its effect on
/// the parameters is of the same `1e-8` order. Parallel segments (determinant
/// within [`PARALLEL_DENOMINATOR_EPS`] of zero) are an error.
pub fn segment_params(s1: &Segment, s2: &Segment) -> Result<(f64, f64), GeometryError> {
    segment_params_nudged(s1, s2, SEGMENT_PARAM_NUDGE)
}

/// [`segment_params`] with an explicit numerator nudge (pass 0 for the exact
/// parameters).
pub fn segment_params_nudged(
    s1: &Segment,
    s2: &Segment,
    nudge: f64,
) -> Result<(f64, f64), GeometryError> {
    let (den, t_num, s_num) = segment_param_parts(s1.a, s1.b, s2.a, s2.b);
    if den.abs() <= PARALLEL_DENOMINATOR_EPS {
        return Err(GeometryError::ParallelSegments);
    }
    Ok(((t_num + nudge) / den, (s_num + nudge) / den))
}

/// Raw pieces of the segment-parameter solve: the shared denominator and the
/// two numerators, so `t = t_num / den` and `s = s_num / den`. Exposed so
/// constraint formulations can rearrange the quotient (e.g. `den / t_num`)
/// without losing precision. A denominator near zero means the support lines
/// are parallel.
pub fn segment_param_parts(a1: Point2, b1: Point2, a2: Point2, b2: Point2) -> (f64, f64, f64) {
    let (x1, y1) = (a1.x, a1.y);
    let (x2, y2) = (b1.x, b1.y);
    let (x3, y3) = (a2.x, a2.y);
    let (x4, y4) = (b2.x, b2.y);
    let den = -(x1 - x2) * (y3 - y4) + (y1 - y2) * (x3 - x4);
    let t_num = -(y3 - y4) * (x4 - x2) + (x3 - x4) * (y4 - y2);
    let s_num = -(y1 - y2) * (x4 - x2) + (x1 - x2) * (y4 - y2);
    (den, t_num, s_num)
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

fn collinear_point_on_segment(a: Point2, b: Point2, p: Point2) -> bool {
    p.x >= a.x.min(b.x) && p.x <= a.x.max(b.x) && p.y >= a.y.min(b.y) && p.y <= a.y.max(b.y)
}

/// Exact segment intersection test, endpoints and collinear overlap included.
pub fn segments_intersect(s1: &Segment, s2: &Segment) -> bool {
    let d1 = orient(s2.a, s2.b, s1.a);
    let d2 = orient(s2.a, s2.b, s1.b);
    let d3 = orient(s1.a, s1.b, s2.a);
    let d4 = orient(s1.a, s1.b, s2.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    (d1 == 0.0 && collinear_point_on_segment(s2.a, s2.b, s1.a))
        || (d2 == 0.0 && collinear_point_on_segment(s2.a, s2.b, s1.b))
        || (d3 == 0.0 && collinear_point_on_segment(s1.a, s1.b, s2.a))
        || (d4 == 0.0 && collinear_point_on_segment(s1.a, s1.b, s2.b))
}

/// Distance from a point to the nearest point of a segment.
pub fn segment_point_distance(seg: &Segment, p: Point2) -> f64 {
    let d = seg.b - seg.a;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return seg.a.distance(p);
    }
    let t = ((p - seg.a).dot(d) / len2).clamp(0.0, 1.0);
    (seg.a + d * t).distance(p)
}

/// Boundary-inclusive point-in-convex-polygon test.
pub fn point_in_convex_polygon(p: Point2, polygon: &ConvexPolygon) -> bool {
    let vs = polygon.vertices();
    let n = vs.len();
    for i in 0..n {
        if (vs[(i + 1) % n] - vs[i]).cross(p - vs[i]) < 0.0 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Shape-shape predicates and clearances
// ---------------------------------------------------------------------------

/// Signed circle-circle clearance: center distance minus radius sum.
/// Negative means overlap, zero tangency.
pub fn circle_circle_clearance(a: &Circle, b: &Circle) -> f64 {
    a.center.distance(b.center) - a.radius - b.radius
}

/// Signed polygon-circle clearance: distance from the disc to the polygon,
/// negative when they overlap (center inside counts the full containment
/// depth).
pub fn polygon_circle_clearance(polygon: &ConvexPolygon, circle: &Circle) -> f64 {
    let boundary = polygon
        .edges()
        .map(|e| segment_point_distance(&e, circle.center))
        .fold(f64::INFINITY, f64::min);
    if point_in_convex_polygon(circle.center, polygon) {
        -(boundary + circle.radius)
    } else {
        boundary - circle.radius
    }
}

/// Signed separation between two convex polygons via the separating-axis
/// test over both polygons' edge normals.
///
/// The sign is exact: non-positive iff the polygons intersect (touching
/// included). Negative values are the exact penetration depth; positive
/// values are a lower bound on the true separation (the true distance can be
/// attained between vertices, off every face normal).
pub fn polygon_polygon_clearance(p: &ConvexPolygon, q: &ConvexPolygon) -> f64 {
    let mut best = f64::NEG_INFINITY;
    for polygon in [p, q] {
        for edge in polygon.edges() {
            let d = edge.b - edge.a;
            let len = d.norm();
            if len == 0.0 {
                continue;
            }
            let axis = Point2::new(-d.y / len, d.x / len);
            let (min_p, max_p) = project(p, axis);
            let (min_q, max_q) = project(q, axis);
            let gap = (min_q - max_p).max(min_p - max_q);
            best = best.max(gap);
        }
    }
    best
}

fn project(polygon: &ConvexPolygon, axis: Point2) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for &v in polygon.vertices() {
        let t = v.dot(axis);
        lo = lo.min(t);
        hi = hi.max(t);
    }
    (lo, hi)
}

/// Separating-axis intersection test for convex polygons; touching counts as
/// intersecting.
pub fn polygons_intersect(p: &ConvexPolygon, q: &ConvexPolygon) -> bool {
    polygon_polygon_clearance(p, q) <= 0.0
}

/// Polygon-circle intersection; tangency counts as intersecting.
pub fn polygon_circle_intersect(polygon: &ConvexPolygon, circle: &Circle) -> bool {
    polygon_circle_clearance(polygon, circle) <= 0.0
}

/// Signed clearance between two shapes; non-positive iff they intersect.
pub fn shape_clearance(a: &Shape, b: &Shape) -> f64 {
    match (a, b) {
        (Shape::Circle(ca), Shape::Circle(cb)) => circle_circle_clearance(ca, cb),
        (Shape::Circle(c), Shape::Polygon(p)) | (Shape::Polygon(p), Shape::Circle(c)) => {
            polygon_circle_clearance(p, c)
        }
        (Shape::Polygon(pa), Shape::Polygon(pb)) => polygon_polygon_clearance(pa, pb),
    }
}

/// Exact shape intersection test; touching counts as intersecting.
pub fn shapes_intersect(a: &Shape, b: &Shape) -> bool {
    shape_clearance(a, b) <= 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(x: f64, y: f64, r: f64) -> Circle {
        Circle::new(Point2::new(x, y), r).unwrap()
    }

    fn poly(pts: &[(f64, f64)]) -> ConvexPolygon {
        ConvexPolygon::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect()).unwrap()
    }

    fn seg(ax: f64, ay: f64, bx: f64, by: f64) -> Segment {
        Segment::new(Point2::new(ax, ay), Point2::new(bx, by)).unwrap()
    }

    // -- overlap measure ----------------------------------------------------

    #[test]
    fn overlap_of_unit_circles_one_apart() {
        assert_abs_diff_eq!(
            overlap_measure(&circle(0.0, 0.0, 1.0), &circle(0.0, 1.0, 1.0)),
            1.0
        );
    }

    #[test]
    fn overlap_zero_when_tangent_or_separated() {
        assert_eq!(overlap_measure(&circle(0.0, 0.0, 1.0), &circle(3.0, 0.0, 1.0)), 0.0);
        assert_eq!(overlap_measure(&circle(0.0, 0.0, 1.0), &circle(2.0, 0.0, 1.0)), 0.0);
    }

    #[test]
    fn overlap_of_coincident_circles_is_radius_sum() {
        assert_abs_diff_eq!(
            overlap_measure(&circle(0.0, 0.0, 2.0), &circle(0.0, 0.0, 1.0)),
            3.0
        );
    }

    #[test]
    fn overlap_is_symmetric_and_resolved_by_displacement() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..500 {
            let a = circle(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.1..3.0));
            let b = circle(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.1..3.0));
            let l = overlap_measure(&a, &b);
            assert_eq!(l, overlap_measure(&b, &a));
            assert!(l >= 0.0);
            if l > 0.0 {
                let d = b.center - a.center;
                let dir = if d.norm() > 1e-12 { d * (1.0 / d.norm()) } else { Point2::new(1.0, 0.0) };
                let moved = b.translated(dir * l);
                assert!(overlap_measure(&a, &moved) <= 1e-9);
            }
        }
    }

    #[test]
    fn cover_overlap_sums_pairs() {
        let a = CircleCover::new(vec![circle(0.0, 0.0, 1.0), circle(2.0, 0.0, 1.0)]).unwrap();
        let b = CircleCover::new(vec![circle(1.0, 0.0, 1.0)]).unwrap();
        // both cover circles overlap the single one by 1.0
        assert_abs_diff_eq!(overlap_measure_cover(&a, &b), 2.0);
    }

    // -- enclosing circles --------------------------------------------------

    /// Brute-force reference: smallest circle over all vertex pairs
    /// (diameter) and triples (circumcircle) that contains every point.
    fn mec_bruteforce(points: &[Point2]) -> Circle {
        let contains_all = |c: &Circle| points.iter().all(|&p| mec_contains(c, p));
        let mut best: Option<Circle> = None;
        let mut consider = |c: Circle| {
            if contains_all(&c) && best.as_ref().map_or(true, |b| c.radius < b.radius) {
                best = Some(c);
            }
        };
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                consider(circle_from_diameter(points[i], points[j]));
                for k in (j + 1)..points.len() {
                    if let Some(c) = circumcircle(points[i], points[j], points[k]) {
                        consider(c);
                    }
                }
            }
        }
        best.expect("at least two points")
    }

    #[test]
    fn enclosing_circle_of_rectangle_hits_diagonal() {
        let c = min_enclosing_circle(&poly(&[(-2.0, -1.0), (2.0, -1.0), (2.0, 1.0), (-2.0, 1.0)]));
        assert_abs_diff_eq!(c.radius, 5.0_f64.sqrt(), epsilon = 1e-12);
        assert_abs_diff_eq!(c.center.x, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c.center.y, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn enclosing_circle_of_equilateral_triangle_is_circumcircle() {
        let h = 3.0_f64.sqrt() / 2.0;
        let c = min_enclosing_circle(&poly(&[(0.0, 0.0), (1.0, 0.0), (0.5, h)]));
        assert_abs_diff_eq!(c.radius, 1.0 / 3.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn enclosing_circle_of_obtuse_triangle_uses_longest_side() {
        // circumcenter lies outside; the diameter circle of the long side wins
        let pts = [Point2::new(0.0, 0.0), Point2::new(4.0, 0.0), Point2::new(2.0, 0.3)];
        let c = min_enclosing_circle_of_points(&pts);
        let reference = mec_bruteforce(&pts);
        assert_abs_diff_eq!(c.radius, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c.radius, reference.radius, epsilon = 1e-9);
    }

    #[test]
    fn enclosing_circle_matches_bruteforce_on_random_sets() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let n = rng.gen_range(3..=9);
            let pts: Vec<Point2> = (0..n)
                .map(|_| Point2::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0)))
                .collect();
            let fast = min_enclosing_circle_of_points(&pts);
            let slow = mec_bruteforce(&pts);
            assert_abs_diff_eq!(fast.radius, slow.radius, epsilon = 1e-9);
            for &p in &pts {
                assert!(fast.center.distance(p) <= fast.radius + 1e-9);
            }
        }
    }

    // -- k-circle cover -----------------------------------------------------

    #[test]
    fn two_circle_cover_of_long_rectangle() {
        let cover = k_circle_cover(&poly(&[(-2.0, -1.0), (2.0, -1.0), (2.0, 1.0), (-2.0, 1.0)]), 2);
        let cs = cover.circles();
        assert_eq!(cs.len(), 2);
        assert_abs_diff_eq!(cs[0].center.x, -1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(cs[1].center.x, 1.0, epsilon = 1e-9);
        for c in cs {
            assert_abs_diff_eq!(c.center.y, 0.0, epsilon = 1e-9);
            assert_abs_diff_eq!(c.radius, 2.0_f64.sqrt(), epsilon = 1e-9);
        }
    }

    #[test]
    fn single_circle_cover_is_enclosing_circle() {
        let p = poly(&[(-2.0, -1.0), (2.0, -1.0), (2.0, 1.0), (-2.0, 1.0)]);
        let cover = k_circle_cover(&p, 1);
        assert_abs_diff_eq!(cover.circles()[0].radius, 5.0_f64.sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn cover_contains_sampled_interior_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..60 {
            // random strictly convex polygon: perturbed regular n-gon
            let n = rng.gen_range(3..=8);
            let base_r: f64 = rng.gen_range(0.5..3.0);
            let stretch: f64 = rng.gen_range(1.0..3.0);
            let pts: Vec<Point2> = (0..n)
                .map(|i| {
                    let a = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                    Point2::new(stretch * base_r * a.cos(), base_r * a.sin())
                })
                .collect();
            let p = ConvexPolygon::new(pts).unwrap();
            for k in 1..=4 {
                let cover = k_circle_cover(&p, k);
                // rejection-sample interior points and check membership
                for _ in 0..80 {
                    let q = Point2::new(
                        rng.gen_range(-stretch * base_r..stretch * base_r),
                        rng.gen_range(-base_r..base_r),
                    );
                    if p.contains(q) {
                        assert!(
                            cover.circles().iter().any(|c| c.center.distance(q) <= c.radius + 1e-9),
                            "interior point {q} escapes the {k}-circle cover"
                        );
                    }
                }
            }
        }
    }

    // -- line/segment predicates --------------------------------------------

    #[test]
    fn line_misses_circle_above_it() {
        assert!(line_circle_no_intersection(&seg(0.0, 0.0, 1.0, 0.0), &circle(0.5, 2.0, 1.0)));
    }

    #[test]
    fn line_through_circle_reports_intersection() {
        assert!(!line_circle_no_intersection(&seg(0.0, 0.0, 1.0, 0.0), &circle(0.5, 0.0, 0.3)));
    }

    #[test]
    fn line_test_is_conservative_beyond_endpoints() {
        // segment stops well short of the circle, but its line passes through
        assert!(!line_circle_no_intersection(&seg(0.0, 0.0, 0.2, 0.0), &circle(0.5, 0.0, 0.05)));
    }

    #[test]
    fn line_circle_agrees_with_projection_distance() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let mut checked = 0;
        while checked < 2000 {
            let s = seg(
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
                rng.gen_range(-5.0..5.0),
            );
            if s.a.distance(s.b) < 1e-3 {
                continue;
            }
            let c = circle(rng.gen_range(-5.0..5.0), rng.gen_range(-5.0..5.0), rng.gen_range(0.1..2.0));
            // independent route: perpendicular distance from center to line
            let d = s.b - s.a;
            let dist = (d.cross(c.center - s.a)).abs() / d.norm();
            if (dist - c.radius).abs() < 1e-9 {
                continue; // boundary cases can legitimately differ
            }
            assert_eq!(line_circle_no_intersection(&s, &c), dist > c.radius);
            checked += 1;
        }
    }

    #[test]
    fn segment_params_of_perpendicular_cross() {
        let (t, s) = segment_params(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, -1.0, 1.0, 1.0)).unwrap();
        assert_abs_diff_eq!(t, 0.5, epsilon = 1e-6);
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn segment_params_beyond_endpoints() {
        let (t, s) = segment_params(&seg(0.0, 0.0, 1.0, 0.0), &seg(3.0, -1.0, 3.0, 1.0)).unwrap();
        assert_abs_diff_eq!(t, -2.0, epsilon = 1e-6);
        assert_abs_diff_eq!(s, 0.5, epsilon = 1e-6);
    }

    #[test]
    fn segment_params_rejects_parallels() {
        assert_eq!(
            segment_params(&seg(0.0, 0.0, 1.0, 0.0), &seg(0.0, 1.0, 1.0, 1.0)),
            Err(GeometryError::ParallelSegments)
        );
        // collinear is parallel too
        assert_eq!(
            segment_params(&seg(0.0, 0.0, 1.0, 0.0), &seg(2.0, 0.0, 3.0, 0.0)),
            Err(GeometryError::ParallelSegments)
        );
    }

    #[test]
    fn segment_param_point_convention_holds() {
        let s1 = seg(-1.0, -2.0, 3.0, 1.0);
        let s2 = seg(0.5, -3.0, 0.25, 2.0);
        let (t, s) = segment_params_nudged(&s1, &s2, 0.0).unwrap();
        let p1 = s1.a * t + s1.b * (1.0 - t);
        let p2 = s2.a * s + s2.b * (1.0 - s);
        assert_abs_diff_eq!(p1.x, p2.x, epsilon = 1e-12);
        assert_abs_diff_eq!(p1.y, p2.y, epsilon = 1e-12);
    }

    #[test]
    fn segments_intersect_basic_cases() {
        assert!(segments_intersect(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, -1.0, 1.0, 1.0)));
        assert!(!segments_intersect(&seg(0.0, 0.0, 1.0, 0.0), &seg(3.0, -1.0, 3.0, 1.0)));
        // shared endpoint counts
        assert!(segments_intersect(&seg(0.0, 0.0, 1.0, 0.0), &seg(1.0, 0.0, 2.0, 1.0)));
        // T-touch counts
        assert!(segments_intersect(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 1.0, 1.0)));
        // collinear overlap counts, collinear disjoint does not
        assert!(segments_intersect(&seg(0.0, 0.0, 2.0, 0.0), &seg(1.0, 0.0, 3.0, 0.0)));
        assert!(!segments_intersect(&seg(0.0, 0.0, 1.0, 0.0), &seg(2.0, 0.0, 3.0, 0.0)));
    }

    #[test]
    fn params_in_unit_range_match_predicate() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let mut checked = 0;
        while checked < 5000 {
            let s1 = seg(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let s2 = seg(
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
                rng.gen_range(-3.0..3.0),
            );
            let Ok((t, s)) = segment_params_nudged(&s1, &s2, 0.0) else { continue };
            // skip knife-edge parameter values where the nudged variant and
            // the exact predicate may legitimately differ
            if [t, s].iter().any(|v| v.min(1.0 - v).abs() < 1e-6) {
                continue;
            }
            let on_both = (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&s);
            assert_eq!(on_both, segments_intersect(&s1, &s2), "t={t} s={s}");
            checked += 1;
        }
    }

    // -- polygon predicates -------------------------------------------------

    fn unit_square(cx: f64, cy: f64) -> ConvexPolygon {
        poly(&[
            (cx - 0.5, cy - 0.5),
            (cx + 0.5, cy - 0.5),
            (cx + 0.5, cy + 0.5),
            (cx - 0.5, cy + 0.5),
        ])
    }

    #[test]
    fn squares_overlap_and_separate() {
        assert!(polygons_intersect(&unit_square(0.0, 0.0), &unit_square(0.5, 0.5)));
        assert!(!polygons_intersect(&unit_square(0.0, 0.0), &unit_square(2.0, 0.0)));
    }

    #[test]
    fn squares_sharing_an_edge_intersect() {
        assert!(polygons_intersect(&unit_square(0.0, 0.0), &unit_square(1.0, 0.0)));
        assert_abs_diff_eq!(
            polygon_polygon_clearance(&unit_square(0.0, 0.0), &unit_square(1.0, 0.0)),
            0.0
        );
    }

    #[test]
    fn polygon_clearance_signs() {
        assert_abs_diff_eq!(
            polygon_polygon_clearance(&unit_square(0.0, 0.0), &unit_square(2.0, 0.0)),
            1.0
        );
        assert_abs_diff_eq!(
            polygon_polygon_clearance(&unit_square(0.0, 0.0), &unit_square(0.5, 0.0)),
            -0.5
        );
    }

    #[test]
    fn polygon_circle_cases() {
        let sq = unit_square(0.0, 0.0);
        assert!(polygon_circle_intersect(&sq, &circle(1.0, 0.0, 0.6)));
        assert!(!polygon_circle_intersect(&sq, &circle(2.0, 0.0, 0.6)));
        // tangent counts
        assert!(polygon_circle_intersect(&sq, &circle(1.5, 0.0, 1.0)));
        // circle swallowing the polygon
        assert!(polygon_circle_intersect(&sq, &circle(0.0, 0.0, 5.0)));
        assert_abs_diff_eq!(polygon_circle_clearance(&sq, &circle(2.0, 0.0, 0.5)), 1.0);
        assert_abs_diff_eq!(polygon_circle_clearance(&sq, &circle(0.0, 0.0, 0.5)), -1.0);
    }

    #[test]
    fn point_containment_includes_boundary() {
        let sq = unit_square(0.0, 0.0);
        assert!(point_in_convex_polygon(Point2::new(0.0, 0.0), &sq));
        assert!(point_in_convex_polygon(Point2::new(0.5, 0.0), &sq));
        assert!(point_in_convex_polygon(Point2::new(0.5, 0.5), &sq));
        assert!(!point_in_convex_polygon(Point2::new(0.50001, 0.0), &sq));
    }

    // -- constructors and invariants ----------------------------------------

    #[test]
    fn polygon_constructor_rejects_bad_input() {
        let p = |pts: &[(f64, f64)]| {
            ConvexPolygon::new(pts.iter().map(|&(x, y)| Point2::new(x, y)).collect())
        };
        assert!(matches!(p(&[(0.0, 0.0), (1.0, 0.0)]), Err(GeometryError::TooFewVertices(2))));
        assert!(matches!(
            p(&[(0.0, 0.0), (1.0, 0.0), (1.0, 0.0), (0.0, 1.0)]),
            Err(GeometryError::RepeatedVertex(1))
        ));
        // clockwise square
        assert!(matches!(
            p(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)]),
            Err(GeometryError::ClockwiseWinding)
        ));
        // collinear middle vertex
        assert!(matches!(
            p(&[(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (1.0, 1.0)]),
            Err(GeometryError::NotStrictlyConvex(_))
        ));
    }

    #[test]
    fn from_loop_reverses_clockwise_input() {
        let (p, reversed) = ConvexPolygon::from_loop(vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.0, 1.0),
            Point2::new(1.0, 1.0),
            Point2::new(1.0, 0.0),
        ])
        .unwrap();
        assert!(reversed);
        assert_eq!(p.vertices().len(), 4);
    }

    #[test]
    fn circle_constructor_rejects_bad_radius() {
        assert!(Circle::new(Point2::new(0.0, 0.0), 0.0).is_err());
        assert!(Circle::new(Point2::new(0.0, 0.0), -1.0).is_err());
        assert!(Circle::new(Point2::new(0.0, 0.0), f64::NAN).is_err());
        assert!(Circle::new(Point2::new(f64::INFINITY, 0.0), 1.0).is_err());
    }

    #[test]
    fn segment_constructor_rejects_degenerate() {
        assert_eq!(
            Segment::new(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)),
            Err(GeometryError::DegenerateSegment)
        );
    }

    #[test]
    fn empty_cover_rejected() {
        assert_eq!(CircleCover::new(vec![]).unwrap_err(), GeometryError::EmptyCover);
    }

    #[test]
    fn transforms_preserve_shape() {
        let p = unit_square(0.0, 0.0);
        let q = p.transformed(std::f64::consts::FRAC_PI_2, Point2::new(3.0, 1.0));
        assert_abs_diff_eq!(q.centroid().x, 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(q.centroid().y, 1.0, epsilon = 1e-12);
        // edge lengths preserved
        for (e1, e2) in p.edges().zip(q.edges()) {
            assert_abs_diff_eq!(
                e1.a.distance(e1.b),
                e2.a.distance(e2.b),
                epsilon = 1e-12
            );
        }
    }
}
