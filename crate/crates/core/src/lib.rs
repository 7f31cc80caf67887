//! Kinetic stability of planar rarefaction waves: Euler wave construction,
//! discrete-velocity moments, non-cutoff Boltzmann collisions, a
//! Vlasov-Poisson field solver, a split time integrator and perturbation
//! energy diagnostics.
//!
//! Everything is generic over [`Real`]; the aliases below fix `T = f64`.

pub mod collision;
pub mod diagnostics;
pub mod error;
pub mod euler_waves;
pub mod field;
pub mod linalg;
pub mod mesh;
pub mod num;
pub mod solver;
pub mod velocity;

pub use error::{Error, Result};
pub use num::Real;

pub type EulerState = euler_waves::EulerState<f64>;
pub type EndStates = euler_waves::EndStates<f64>;
pub type SmoothedBurgers = euler_waves::SmoothedBurgers<f64>;
pub type WaveProfile = euler_waves::WaveProfile<f64>;
pub type VelocityGrid = velocity::VelocityGrid<f64>;
pub type MacroState = velocity::MacroState<f64>;
pub type ChiBasis = velocity::ChiBasis<f64>;
pub type KernelConfig = collision::KernelConfig<f64>;
pub type CollisionOperator = collision::CollisionOperator<f64>;
pub type LinearizedOperator<'a> = collision::LinearizedOperator<'a, f64>;
pub type BurnettSet = collision::BurnettSet<f64>;
pub type Mesh = mesh::Mesh<f64>;
pub type FieldState = field::FieldState<f64>;
pub type Scenario = solver::Scenario<f64>;
pub type Solver = solver::Solver<f64>;
pub type SolutionSnapshot = solver::SolutionSnapshot<f64>;
