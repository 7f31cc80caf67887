//! Non-cutoff Boltzmann collision machinery.

mod bgk;
mod burnett;
mod kernel;
mod linear;
mod operator;
mod table;

pub use bgk::{bgk_relax, discrete_maxwellian, lattice_maxwellian};
pub use burnett::{
    a_hat, b_hat, olg_direct, olg_source, transport_coefficients, BurnettSet, TransportCoefficients, PAIRS,
};
pub use kernel::{post_collision, KernelConfig, KernelUse, SigmaNode, SigmaQuadrature};
pub use linear::{Assembly, GlobalOperators, LinearizedOperator, DENSE_LIMIT};
pub use operator::{work_estimate, CollisionOperator};
