//! Constraint displacement planning in the plane.
//!
//! Some start/goal queries have no collision-free path: every route is blocked
//! by movable clutter. Instead of failing, this library answers "what is the
//! least the world has to change for a path to exist?" in two stages:
//!
//! 1. **Overlap stage** ([`overlap`]): a receding-horizon trajectory optimizer
//!    drives the robot from start to goal while *penalizing* (not forbidding)
//!    overlap with movable obstacles. The penalty is a circle-cover overlap
//!    measure that equals the displacement needed to resolve each overlap, so
//!    minimizing it minimizes the eventual world change.
//! 2. **Displacement stage** ([`displacement`]): every obstacle the swept robot
//!    footprint still touches is displaced rigidly — by a constrained
//!    minimization over its vertex coordinates — until the recorded footprints
//!    clear it, moving each obstacle as little as possible.
//!
//! Two objectives are supported end to end: minimum total displacement
//! (spread the change over many obstacles, each moved a little) and minimum
//! displaced-obstacle count (concentrate the change on few obstacles). A
//! shortest-path baseline that ignores movable obstacles entirely is included
//! for comparison.
//!
//! The supporting layers are deliberately self-contained: exact planar
//! predicates and overlap measures in [`geometry`], the two robot motion
//! models in [`dynamics`], and a dense augmented-Lagrangian solver in [`nlp`].
//! [`scenario`], [`pipeline`], [`render`], [`oracle`], and [`suite`] provide
//! the JSON scenario format, the end-to-end runner with its exact-geometry
//! certificates, SVG output, brute-force reference solvers, and the benchmark
//! table generator. All of it is deterministic: the same scenario bytes
//! produce the same report bytes.

pub mod dynamics;
pub mod displacement;
pub mod geometry;
pub mod nlp;
pub mod oracle;
pub mod overlap;
pub mod pipeline;
pub mod render;
pub mod scenario;
pub mod suite;
