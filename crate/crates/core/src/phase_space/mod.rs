//! Operator-form classical mechanics on a finite phase-space grid.
//!
//! Classical observables and states are functions of the commuting
//! operators `q̂`, `p̂`. Their kernels are diagonal in the node basis
//! `|q_i⟩⊗|p_j⟩`, so a grid field carries the whole operator. Point states
//! are regularized as normalized Gaussians; the point limit is recovered by
//! shrinking the width.

mod advect;
mod density;
mod flow;
mod grid;
mod hamiltonian;

pub use advect::{liouville_evolve, liouville_step, transport_bound, AdvectionMap, MASS_CORRECTION_CAP};
pub(crate) use advect::transport_density;
pub use density::{
    check_resolved, gaussian_state, mean_observable, mean_observable_trace, ClassicalDensity, DiagonalKernel, EPS_NEG,
    NORM_TOL,
};
pub use flow::{flow_trajectory, step_count, symplectic_displacement, Trajectory};
pub use grid::{PhaseGrid, MIN_CELLS};
pub use hamiltonian::{ClassicalHamiltonian, Monomial, Polynomial, MAX_DEGREE};

/// Builds a [`PhaseGrid`]; see [`PhaseGrid::new`].
pub fn make_grid(q_min: f64, q_max: f64, p_min: f64, p_max: f64, n_q: usize, n_p: usize) -> crate::Result<PhaseGrid> {
    PhaseGrid::new(q_min, q_max, p_min, p_max, n_q, n_p)
}
