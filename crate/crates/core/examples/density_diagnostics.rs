//! Quantum-side diagnostics and the two ways of computing a classical mean.

use hybrid_dynamics::phase_space::{
    gaussian_state, mean_observable, mean_observable_trace, ClassicalHamiltonian, PhaseGrid,
};
use hybrid_dynamics::quantum::{eig2, pure_from_amplitudes, purity, von_neumann_entropy, QuantumDensity};
use num_complex::Complex64;

fn main() -> hybrid_dynamics::Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let pure = pure_from_amplitudes(&[Complex64::new(h, 0.0), Complex64::new(0.0, h)])?;
    let mixed = QuantumDensity::diagonal(&[0.5, 0.5])?;
    for (name, rho) in [("pure", &pure), ("mixed", &mixed)] {
        let r = rho.matrix();
        let (lo, hi) = eig2(r[(0, 0)].re, r[(1, 1)].re, r[(0, 1)].norm());
        println!(
            "{name:>5}: purity {:.6}  entropy {:.6}  eigenvalues ({lo:.3}, {hi:.3})",
            purity(rho),
            von_neumann_entropy(rho)?
        );
    }

    // <f> as a phase-space integral and as Tr(f rho) of diagonal kernels
    let grid = PhaseGrid::new(-4.0, 4.0, -4.0, 4.0, 128, 128)?;
    let rho = gaussian_state(&grid, 0.5, -0.25, 0.5, 0.7)?;
    for (name, f) in [
        ("q", ClassicalHamiltonian::linear_q(1.0)),
        ("p", ClassicalHamiltonian::linear_p(1.0)),
        ("H", ClassicalHamiltonian::harmonic()),
    ] {
        let a = mean_observable(&f, &rho)?;
        let b = mean_observable_trace(&f, &rho)?;
        println!("<{name}> = {a:.12}  trace path {b:.12}  diff {:.1e}", (a - b).abs());
    }
    Ok(())
}
