//! Coverage path planning for redundant manipulators.
//!
//! A triangle-mesh surface is turned into one end-effector target per vertex
//! and then into a joint-space trajectory that visits every target exactly
//! once, minimizing arm reconfigurations first and joint movement second.
//! Three pipelines are provided (see [`planners`]):
//!
//! * **Cart-TSP-IKLink**: Cartesian TSP over the mesh, then a dynamic
//!   program over sampled IK solutions along the found path.
//! * **Joint-GTSP**: a generalized TSP over all sampled IK solutions.
//! * **H-Joint-GTSP**: a Cartesian guide path sparsifies the joint-space
//!   GTSP, which is then solved as a sequence of smaller problems and
//!   refined globally.

pub mod bench;
pub mod error;
pub mod graphs;
pub mod kinematics;
pub mod planners;
pub mod sampling;
pub mod solvers;
pub mod surface;

pub use error::{Error, Result};
