//! Semi-Lagrangian transport along Hamiltonian characteristics.
//!
//! Each node is traced back over one step with a single symplectic substep
//! and the field is read off at the departure point with tensor-product
//! cubic Lagrange interpolation on the periodic grid. The departure map
//! depends only on `(H, dt)`, so it is built once and reused.

use std::ops::{Add, Mul};

use rayon::prelude::*;

use super::density::clamp_noise;
use super::flow::symplectic_displacement;
use super::{ClassicalDensity, ClassicalHamiltonian, PhaseGrid};
use crate::error::{Error, Result};

/// Largest relative mass correction applied by post-step renormalization.
pub const MASS_CORRECTION_CAP: f64 = 1e-8;

#[derive(Debug, Clone, Copy)]
struct Stencil {
    q0: u32,
    p0: u32,
    wq: [f64; 4],
    wp: [f64; 4],
}

/// Cubic Lagrange weights for nodes `-1, 0, 1, 2` at offset `s ∈ [0, 1)`.
#[inline]
fn lagrange_weights(s: f64) -> [f64; 4] {
    let (sm1, sm2, sp1) = (s - 1.0, s - 2.0, s + 1.0);
    [
        -s * sm1 * sm2 / 6.0,
        sp1 * sm1 * sm2 / 2.0,
        -sp1 * s * sm2 / 2.0,
        sp1 * s * sm1 / 6.0,
    ]
}

/// Precomputed backward-characteristic interpolation for one `(H, dt)`.
#[derive(Debug, Clone)]
pub struct AdvectionMap {
    grid: PhaseGrid,
    stencils: Option<Vec<Stencil>>,
}

impl AdvectionMap {
    pub fn new(grid: &PhaseGrid, h: &ClassicalHamiltonian, dt: f64) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidTimeStep(dt));
        }
        if h.has_trivial_flow() {
            return Ok(Self {
                grid: *grid,
                stencils: None,
            });
        }
        let (dq, dp) = (grid.dq(), grid.dp());
        let (nq, np) = (grid.n_q() as i64, grid.n_p() as i64);
        let stencils = (0..grid.len())
            .into_par_iter()
            .map(|k| {
                let (i, j) = grid.coords(k);
                let (q, p) = (grid.q(i), grid.p(j));
                let (ddq, ddp) = symplectic_displacement(h, q, p, -dt)?;
                if !(ddq.is_finite() && ddp.is_finite()) {
                    return Err(Error::NonFinite(format!("velocity field at ({q}, {p})")));
                }
                let x = i as f64 + ddq / dq;
                let y = j as f64 + ddp / dp;
                let (xf, yf) = (x.floor(), y.floor());
                Ok(Stencil {
                    q0: (xf as i64 - 1).rem_euclid(nq) as u32,
                    p0: (yf as i64 - 1).rem_euclid(np) as u32,
                    wq: lagrange_weights(x - xf),
                    wp: lagrange_weights(y - yf),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            grid: *grid,
            stencils: Some(stencils),
        })
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn is_identity(&self) -> bool {
        self.stencils.is_none()
    }

    /// Interpolates `src` at every departure point. Works for real and
    /// complex fields; each output node is an independent fixed-order sum.
    pub fn apply<T>(&self, src: &[T]) -> Vec<T>
    where
        T: Copy + Send + Sync + Default + Add<Output = T> + Mul<f64, Output = T>,
    {
        let Some(stencils) = &self.stencils else {
            return src.to_vec();
        };
        let (nq, np) = (self.grid.n_q(), self.grid.n_p());
        stencils
            .par_iter()
            .map(|s| {
                let mut acc = T::default();
                for a in 0..4 {
                    let row = ((s.q0 as usize + a) % nq) * np;
                    let mut inner = T::default();
                    for b in 0..4 {
                        let col = (s.p0 as usize + b) % np;
                        inner = inner + src[row + col] * s.wp[b];
                    }
                    acc = acc + inner * s.wq[a];
                }
                acc
            })
            .collect()
    }
}

/// Transports a non-negative field and restores `target_mass`.
///
/// Shared by [`liouville_step`] and the diagonal blocks of the hybrid
/// integrator so both follow the same arithmetic.
pub(crate) fn transport_density(map: &AdvectionMap, values: &[f64], target_mass: f64) -> Result<Vec<f64>> {
    if map.is_identity() {
        return Ok(values.to_vec());
    }
    let mut out = map.apply(values);
    clamp_noise(&mut out)?;
    let mass = map.grid().quadrature(&out);
    if target_mass == 0.0 {
        return Ok(out);
    }
    let correction = target_mass / mass - 1.0;
    if !(correction.abs() <= MASS_CORRECTION_CAP) {
        return Err(Error::MassCorrection {
            correction,
            cap: MASS_CORRECTION_CAP,
        });
    }
    let scale = target_mass / mass;
    out.iter_mut().for_each(|v| *v *= scale);
    Ok(out)
}

/// One step of `∂ρ/∂t = ∂H/∂q ∂ρ/∂p − ∂ρ/∂q ∂H/∂p`.
pub fn liouville_step(rho: &ClassicalDensity, h: &ClassicalHamiltonian, dt: f64) -> Result<ClassicalDensity> {
    let map = AdvectionMap::new(rho.grid(), h, dt)?;
    let values = transport_density(&map, rho.values(), rho.mass())?;
    Ok(ClassicalDensity::from_parts_unchecked(*rho.grid(), values))
}

/// Repeated [`liouville_step`] with a cached departure map.
pub fn liouville_evolve(rho: &ClassicalDensity, h: &ClassicalHamiltonian, dt: f64, steps: usize) -> Result<ClassicalDensity> {
    let map = AdvectionMap::new(rho.grid(), h, dt)?;
    let mut values = rho.values().to_vec();
    for _ in 0..steps {
        let mass = rho.grid().quadrature(&values);
        values = transport_density(&map, &values, mass)?;
    }
    Ok(ClassicalDensity::from_parts_unchecked(*rho.grid(), values))
}

/// Transport stability bound `max|∂H/∂p| dt ≤ dq`, `max|∂H/∂q| dt ≤ dp`.
///
/// Returns the binding constraint name, its value and its limit when the
/// bound fails.
pub fn transport_bound(grid: &PhaseGrid, h: &ClassicalHamiltonian, dt: f64) -> Option<(&'static str, f64, f64)> {
    let (vq, vp) = h.max_velocities(grid);
    let cq = vq * dt / grid.dq();
    let cp = vp * dt / grid.dp();
    if cq > 1.0 || cp > 1.0 {
        Some(if cq >= cp {
            ("transport CFL in q: max|dH/dp| dt / dq", cq, 1.0)
        } else {
            ("transport CFL in p: max|dH/dq| dt / dp", cp, 1.0)
        })
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phase_space::gaussian_state;

    #[test]
    fn weights_partition_unity_and_hit_nodes() {
        for s in [0.0, 0.1, 0.5, 0.77, 0.999] {
            let w = lagrange_weights(s);
            assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        }
        assert_eq!(lagrange_weights(0.0), [0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn zero_generator_is_exact_identity() {
        let g = PhaseGrid::new(-5.0, 5.0, -5.0, 5.0, 64, 64).unwrap();
        let rho = gaussian_state(&g, 0.5, -0.2, 0.6, 0.6).unwrap();
        let out = liouville_step(&rho, &ClassicalHamiltonian::zero(), 0.1).unwrap();
        assert_eq!(out.values(), rho.values());
    }

    #[test]
    fn integer_shift_is_exact() {
        // v dt = dq: every departure point is a node
        let g = PhaseGrid::new(-4.0, 4.0, -4.0, 4.0, 64, 64).unwrap();
        let rho = gaussian_state(&g, 0.0, 0.0, 0.5, 0.5).unwrap();
        let out = liouville_step(&rho, &ClassicalHamiltonian::linear_p(1.0), g.dq()).unwrap();
        for i in 0..64 {
            for j in 0..64 {
                let src = rho.values()[g.index((i + 63) % 64, j)];
                assert!((out.values()[g.index(i, j)] - src).abs() <= 1e-15 * src.abs().max(1e-300) + 1e-300);
            }
        }
    }

    #[test]
    fn rejects_non_positive_step() {
        let g = PhaseGrid::new(-1.0, 1.0, -1.0, 1.0, 8, 8).unwrap();
        let rho = ClassicalDensity::normalized(g, vec![1.0; 64]).unwrap();
        assert!(matches!(
            liouville_step(&rho, &ClassicalHamiltonian::harmonic(), 0.0),
            Err(Error::InvalidTimeStep(_))
        ));
        assert!(liouville_step(&rho, &ClassicalHamiltonian::harmonic(), -0.1).is_err());
    }

    #[test]
    fn transport_bound_names_binding_axis() {
        let g = PhaseGrid::new(-1.0, 1.0, -1.0, 1.0, 16, 16).unwrap();
        assert!(transport_bound(&g, &ClassicalHamiltonian::linear_p(1.0), 0.1).is_none());
        let (name, value, _) = transport_bound(&g, &ClassicalHamiltonian::linear_p(1.0), 0.5).unwrap();
        assert!(name.contains("in q"));
        assert!((value - 4.0).abs() < 1e-12);
        let (name, ..) = transport_bound(&g, &ClassicalHamiltonian::linear_q(3.0), 0.5).unwrap();
        assert!(name.contains("in p"));
    }
}
