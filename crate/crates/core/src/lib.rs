//! Hydrodynamics of two spheres approaching head-on in Stokes flow, and the
//! approach dynamics of two opposed self-propelled swimmers under no-slip or
//! Navier-slip boundary conditions.
//!
//! All quantities are nondimensional: sphere radius 1, viscosity 1.

pub mod drag;
pub mod dynamics;
pub mod error;
pub mod geometry;
pub mod series;
pub mod stokeslet;
pub mod validation;

pub use drag::{BoundaryCondition, DragCoefficients, DragModel, Provenance};
pub use dynamics::{
    simulate, IntegratorOptions, Mode, SwimmerScenario, Termination, Trajectory, TrajectoryPoint,
};
pub use error::{Error, Result};
pub use geometry::{AxisymPoint, BipolarFrame, BipolarPoint};
pub use series::{SeriesSolution, SeriesTruncation};
pub use stokeslet::StokesletPair;
