//! A correlated ansatz whose coherence sits between two separated pointer
//! packets is not positive. Dropping the coherences gives the collapsed
//! mixture.

use hybrid_dynamics::collapse::{
    ansatz_correlated, certify, collapse_project, collapsed_state, MeasurementScenario, PointTable,
};
use hybrid_dynamics::hybrid::{pointwise_min_eigenvalue, quantum_marginal};
use hybrid_dynamics::quantum::eig2;
use num_complex::Complex64;

fn main() -> hybrid_dynamics::Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = vec![Complex64::new(h, 0.0); 2];
    let s = MeasurementScenario::pointer(amps.clone(), vec![1.0, -1.0], 0.25, 1.0)?;

    // diagonal packets at ±1, coherence at the midpoint
    let table = PointTable::split(&[(1.0, 0.0), (-1.0, 0.0)], (0.0, 0.0));
    let state = ansatz_correlated(&amps, &table, s.sigma, &s.grid, s.hbar)?;
    let pm = pointwise_min_eigenvalue(&state);
    let k = pm.node;
    let (f11, f22, f12) = (state.block(0, 0)[k].re, state.block(1, 1)[k].re, state.block(0, 1)[k].norm());
    let max12 = state.block(0, 1).iter().map(|z| z.norm()).fold(0.0, f64::max);
    println!("min eigenvalue     {:.6e} at {:?}", pm.raw, pm.location);
    println!("closed form        {:.6e}", eig2(f11, f22, f12).0);
    println!("ratio to max|f12|  {:.4}", pm.raw / max12);
    println!("certificate fails  {}", certify(&state, 1e-6).is_some());

    let projected = collapse_project(&state)?;
    println!("projected min eig  {:.3e}", pointwise_min_eigenvalue(&projected).raw);

    let mixture = collapsed_state(&amps, &s.trajectories()?, 1.0, s.sigma, &s.grid, s.hbar)?;
    let m = quantum_marginal(&mixture);
    println!("collapsed marginal diag({:.6}, {:.6}), |rho_12| = {:.1e}", m.entry(0, 0).re, m.entry(1, 1).re, m.entry(0, 1).norm());
    Ok(())
}
