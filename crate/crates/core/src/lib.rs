//! Guiding-vector-field path following for fixed-wing aircraft.
//!
//! The crate covers the whole loop: an expression language for user paths
//! with exact second derivatives, a library of built-in trajectories, the
//! implicit and parametric vector-field guidance laws, a kinematic vehicle
//! model with wind, multi-vehicle synchronization over a lossy bus, and a
//! scenario runner that ties them together and writes telemetry.

pub mod coord;
pub mod expr;
pub mod guidance;
pub mod gvf;
pub mod numeric;
pub mod paths;
pub mod pgvf;
pub mod sim;
pub mod scenario;

pub use nalgebra;
