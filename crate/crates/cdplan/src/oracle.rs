//! Brute-force reference implementations.
//!
//! Nothing here is meant to be fast. These routines exist so the optimized
//! implementations have something independent to be checked against:
//!
//! * [`polygons_intersect_edge_crossing`] decides polygon intersection by
//!   edge crossings plus containment, a different route than the
//!   separating-axis test in [`crate::geometry`].
//! * [`oracle_grid_displacement`] finds the minimal feasible rigid
//!   displacement of an obstacle by exhaustive grid search, certifying each
//!   candidate with the exact predicates. It enumerates candidates in
//!   ascending objective order, so the first feasible candidate *is* the grid
//!   optimum and typical queries stop long before exhausting the window.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use thiserror::Error;

use crate::geometry::{
    point_in_convex_polygon, segments_intersect, shapes_intersect, ConvexPolygon, Point2, Shape,
};

/// Search window half-width as a multiple of the obstacle circumdiameter.
const WINDOW_DIAMETERS: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OracleError {
    #[error("no feasible displacement inside the search window")]
    NoFeasibleInWindow,
}

/// Polygon intersection via edge crossings and mutual containment.
///
/// Independent of the separating-axis route: two convex polygons intersect
/// iff some pair of edges intersects or one contains the other (in which case
/// any single vertex is inside). Touching counts as intersecting, matching
/// the convention of [`crate::geometry::polygons_intersect`].
pub fn polygons_intersect_edge_crossing(p: &ConvexPolygon, q: &ConvexPolygon) -> bool {
    for e1 in p.edges() {
        for e2 in q.edges() {
            if segments_intersect(&e1, &e2) {
                return true;
            }
        }
    }
    point_in_convex_polygon(p.vertices()[0], q) || point_in_convex_polygon(q.vertices()[0], p)
}

/// A grid-optimal rigid displacement.
#[derive(Debug, Clone, PartialEq)]
pub struct GridDisplacement {
    /// Translation applied to the obstacle centroid.
    pub offset: Point2,
    /// Rotation about the obstacle centroid (always 0 for circles).
    pub rotation: f64,
    /// Centroid shift distance, `offset.norm()`.
    pub magnitude: f64,
    /// Sum of squared vertex displacements (squared center shift for
    /// circles); the quantity the displacement stage minimizes.
    pub objective: f64,
    pub displaced: Shape,
}

/// Exhaustive displacement search over a translation/rotation grid with the
/// default window of [`WINDOW_DIAMETERS`] circumdiameters.
pub fn oracle_grid_displacement(
    obstacle: &Shape,
    witnesses: &[Shape],
    translation_resolution: f64,
    rotation_resolution: f64,
) -> Result<GridDisplacement, OracleError> {
    let window = WINDOW_DIAMETERS * obstacle.circumdiameter();
    oracle_grid_displacement_windowed(
        obstacle,
        witnesses,
        translation_resolution,
        rotation_resolution,
        window,
    )
}

/// [`oracle_grid_displacement`] with an explicit window half-width.
///
/// Candidates are rotations about the obstacle centroid followed by a
/// translation; a candidate is feasible when the displaced shape is strictly
/// disjoint from every witness (touching counts as intersecting). The
/// enumeration is ordered by (objective, rotation index, translation index),
/// making the result deterministic including ties.
pub fn oracle_grid_displacement_windowed(
    obstacle: &Shape,
    witnesses: &[Shape],
    translation_resolution: f64,
    rotation_resolution: f64,
    window: f64,
) -> Result<GridDisplacement, OracleError> {
    assert!(translation_resolution > 0.0 && rotation_resolution > 0.0 && window > 0.0);

    // translations sorted by squared norm, ascending
    let steps = (window / translation_resolution).floor() as i64;
    let mut translations: Vec<Point2> = Vec::with_capacity(((2 * steps + 1).pow(2)) as usize);
    for iy in -steps..=steps {
        for ix in -steps..=steps {
            translations.push(Point2::new(
                ix as f64 * translation_resolution,
                iy as f64 * translation_resolution,
            ));
        }
    }
    translations.sort_by(|a, b| {
        a.norm_squared()
            .partial_cmp(&b.norm_squared())
            .unwrap()
            .then(a.y.partial_cmp(&b.y).unwrap())
            .then(a.x.partial_cmp(&b.x).unwrap())
    });

    // rotations: 0, +-r, +-2r, ... within (-pi, pi]; circles never rotate
    let rotations: Vec<f64> = match obstacle {
        Shape::Circle(_) => vec![0.0],
        Shape::Polygon(_) => {
            let n = (std::f64::consts::PI / rotation_resolution).floor() as i64;
            let mut rs = vec![0.0];
            for j in 1..=n {
                rs.push(j as f64 * rotation_resolution);
                rs.push(-(j as f64) * rotation_resolution);
            }
            rs
        }
    };

    let centroid = obstacle.centroid();
    // vertex spread: sum of squared vertex distances from the centroid, which
    // turns a rotation by theta into an objective term (2 - 2 cos theta) * spread
    let (vertex_count, spread) = match obstacle {
        Shape::Circle(_) => (1.0, 0.0),
        Shape::Polygon(p) => (
            p.vertices().len() as f64,
            p.vertices().iter().map(|v| (*v - centroid).norm_squared()).sum(),
        ),
    };

    #[derive(PartialEq)]
    struct Entry {
        objective: f64,
        rotation_index: usize,
        translation_index: usize,
    }
    impl Eq for Entry {}
    impl PartialOrd for Entry {
        fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
            Some(self.cmp(other))
        }
    }
    impl Ord for Entry {
        fn cmp(&self, other: &Self) -> Ordering {
            // reversed: BinaryHeap is a max-heap, we want cheapest first
            other
                .objective
                .partial_cmp(&self.objective)
                .unwrap()
                .then(other.rotation_index.cmp(&self.rotation_index))
                .then(other.translation_index.cmp(&self.translation_index))
        }
    }

    let objective_of = |rotation_index: usize, translation_index: usize| -> f64 {
        let rot_cost = (2.0 - 2.0 * rotations[rotation_index].cos()) * spread;
        vertex_count * translations[translation_index].norm_squared() + rot_cost
    };

    let mut heap = BinaryHeap::with_capacity(rotations.len());
    for ri in 0..rotations.len() {
        heap.push(Entry { objective: objective_of(ri, 0), rotation_index: ri, translation_index: 0 });
    }

    while let Some(entry) = heap.pop() {
        let rotation = rotations[entry.rotation_index];
        let offset = translations[entry.translation_index];
        let displaced = displace_shape(obstacle, centroid, rotation, offset);
        if witnesses.iter().all(|w| !shapes_intersect(&displaced, w)) {
            return Ok(GridDisplacement {
                offset,
                rotation,
                magnitude: offset.norm(),
                objective: entry.objective,
                displaced,
            });
        }
        let next = entry.translation_index + 1;
        if next < translations.len() {
            heap.push(Entry {
                objective: objective_of(entry.rotation_index, next),
                rotation_index: entry.rotation_index,
                translation_index: next,
            });
        }
    }
    Err(OracleError::NoFeasibleInWindow)
}

/// Rotate about `centroid`, then shift the centroid by `offset`.
fn displace_shape(shape: &Shape, centroid: Point2, rotation: f64, offset: Point2) -> Shape {
    match shape {
        Shape::Circle(c) => Shape::Circle(c.translated(offset)),
        Shape::Polygon(p) => {
            let target = centroid + offset;
            Shape::Polygon(p.transformed(rotation, Point2::default()).translated(
                // transformed() rotates about the origin; restore the centroid
                target - centroid.rotated(rotation),
            ))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{polygons_intersect, Circle};
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn circle(x: f64, y: f64, r: f64) -> Shape {
        Shape::Circle(Circle::new(Point2::new(x, y), r).unwrap())
    }

    fn square(cx: f64, cy: f64, half: f64) -> ConvexPolygon {
        ConvexPolygon::new(vec![
            Point2::new(cx - half, cy - half),
            Point2::new(cx + half, cy - half),
            Point2::new(cx + half, cy + half),
            Point2::new(cx - half, cy + half),
        ])
        .unwrap()
    }

    #[test]
    fn edge_crossing_agrees_on_standard_cases() {
        let a = square(0.0, 0.0, 0.5);
        for (other, expect) in [
            (square(0.5, 0.5, 0.5), true),
            (square(2.0, 0.0, 0.5), false),
            (square(1.0, 0.0, 0.5), true),  // shared edge
            (square(0.0, 0.0, 0.2), true),  // nested
        ] {
            assert_eq!(polygons_intersect_edge_crossing(&a, &other), expect);
            assert_eq!(polygons_intersect(&a, &other), expect);
        }
    }

    #[test]
    fn rotation_objective_formula_matches_vertex_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = square(1.0, -2.0, 0.7);
        let centroid = p.centroid();
        let spread: f64 = p.vertices().iter().map(|v| (*v - centroid).norm_squared()).sum();
        for _ in 0..100 {
            let theta: f64 = rng.gen_range(-3.0..3.0);
            let offset = Point2::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
            let formula = 4.0 * offset.norm_squared() + (2.0 - 2.0 * theta.cos()) * spread;
            let Shape::Polygon(moved) =
                displace_shape(&Shape::Polygon(p.clone()), centroid, theta, offset)
            else {
                unreachable!()
            };
            let direct: f64 = p
                .vertices()
                .iter()
                .zip(moved.vertices())
                .map(|(a, b)| (*b - *a).norm_squared())
                .sum();
            assert_abs_diff_eq!(formula, direct, epsilon = 1e-9);
        }
    }

    #[test]
    fn grid_minimum_matches_circle_overlap() {
        // overlap of 0.6; at 0.01 resolution the optimum is within two cells
        let obstacle = circle(0.4, 0.0, 0.5);
        let witness = circle(0.0, 0.0, 0.5);
        let sol = oracle_grid_displacement(&obstacle, &[witness], 0.01, 0.1).unwrap();
        assert_abs_diff_eq!(sol.magnitude, 0.6, epsilon = 0.02);
        assert_eq!(sol.rotation, 0.0);
    }

    #[test]
    fn already_feasible_returns_zero() {
        let obstacle = circle(3.0, 0.0, 0.5);
        let sol = oracle_grid_displacement(&obstacle, &[circle(0.0, 0.0, 0.5)], 0.05, 0.1).unwrap();
        assert_eq!(sol.magnitude, 0.0);
        assert_eq!(sol.objective, 0.0);
    }

    #[test]
    fn finer_grids_never_increase_the_objective() {
        let obstacle = circle(0.3, 0.1, 0.5);
        let witnesses = [circle(0.0, 0.0, 0.6), circle(1.0, 0.0, 0.4)];
        let coarse = oracle_grid_displacement(&obstacle, &witnesses, 0.04, 0.1).unwrap();
        let fine = oracle_grid_displacement(&obstacle, &witnesses, 0.02, 0.1).unwrap();
        assert!(fine.objective <= coarse.objective + 1e-12);
    }

    #[test]
    fn fully_blocked_window_is_an_error() {
        let obstacle = circle(0.0, 0.0, 0.5);
        let wall = circle(0.0, 0.0, 20.0);
        assert_eq!(
            oracle_grid_displacement(&obstacle, &[wall], 0.1, 0.5),
            Err(OracleError::NoFeasibleInWindow)
        );
    }

    #[test]
    fn polygon_translation_case() {
        // square pushed straight out of a shallow circle overlap
        let obstacle = Shape::Polygon(square(0.0, 0.0, 0.5));
        let witness = circle(-0.7, 0.0, 0.3);
        let sol = oracle_grid_displacement(&obstacle, &[witness], 0.02, 0.2).unwrap();
        // needs the left face (x = -0.5) to clear x = -0.4: shift right ~0.1
        assert!(sol.offset.x > 0.05 && sol.offset.x < 0.2, "offset {:?}", sol.offset);
        assert_abs_diff_eq!(sol.rotation, 0.0);
        let Shape::Polygon(_) = sol.displaced else { panic!("shape kind changed") };
    }
}
