//! Hybrid quantum-classical states and their dynamics.

mod evolve;
mod integrator;
mod state;

pub use evolve::{
    diagnose, evolve, evolve_with, write_diagnostics_csv, CollapseEvent, Diagnostics, EvolveConfig, PositivityPolicy, Run,
    BOUNDARY_MARGIN_SIGMAS, BOUNDARY_MASS_FRACTION, DEFAULT_TOL_PSD,
};
pub use integrator::{aleksandrov_step, check_step, BlockIntegrator, PHASE_BOUND, STEP_TRACE_TOL};
pub use state::{
    classical_marginal, hybrid_purity, node_min_eigenvalue, pair_margins, pointwise_min_eigenvalue, product_state,
    purity_ratio, quantum_marginal, HybridState, PointwiseMin, HYBRID_TRACE_TOL,
};

/// Coupling factor `V_cm` of the product Hamiltonian.
pub type CouplingPotential = crate::phase_space::ClassicalHamiltonian;
