//! One full period of the harmonic oscillator on a 256x256 grid.
//!
//! The flow is a rigid rotation of phase space, so after `t = 2π` the
//! density should come back to where it started.

use std::f64::consts::PI;

use hybrid_dynamics::phase_space::{gaussian_state, liouville_evolve, ClassicalHamiltonian, PhaseGrid};

fn main() -> hybrid_dynamics::Result<()> {
    let grid = PhaseGrid::new(-6.0, 6.0, -6.0, 6.0, 256, 256)?;
    let rho0 = gaussian_state(&grid, 1.0, 0.0, 0.5, 0.5)?;
    let h = ClassicalHamiltonian::harmonic();
    let steps = 2000;
    let dt = 2.0 * PI / steps as f64;

    let rho = liouville_evolve(&rho0, &h, dt, steps)?;

    let (a, b) = (rho.values(), rho0.values());
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let norm: f64 = b.iter().map(|y| y * y).sum();
    println!("steps            {steps}");
    println!("relative L2 err  {:.3e}", (diff / norm).sqrt());
    println!("mass drift       {:.3e}", (rho.mass() - rho0.mass()).abs());
    Ok(())
}
