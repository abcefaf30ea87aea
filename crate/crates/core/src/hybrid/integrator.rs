//! Block-decomposed integrator for the combined Schrödinger-Liouville
//! equation with product Hamiltonian `V_qm ⊗ V_cm`.
//!
//! In the eigenbasis of `V_qm` each block obeys
//!
//! ```text
//! ∂f_ij/∂t = (v_i − v_j)/(iħ) · V_cm · f_ij + ((v_i + v_j)/2) · {V_cm, f_ij}
//! ```
//!
//! (`V_cm` and `f_ij` commute, so the operator order in the commutator term
//! is immaterial). One step is Strang-split: half a pointwise phase
//! rotation, a full semi-Lagrangian transport under `((v_i + v_j)/2) V_cm`,
//! and the second half rotation. Diagonal blocks carry no phase and share
//! the classical density transport, including its clamp and mass
//! restoration. Only the upper triangle is evolved; the lower is mirrored.

use std::sync::Arc;

use num_complex::Complex64;

use super::HybridState;
use crate::error::{Error, Result};
use crate::phase_space::{transport_bound, transport_density, AdvectionMap, ClassicalHamiltonian};
use crate::quantum::MeasuredObservable;

/// Largest allowed phase increment per step, `dt max|Δv| max|V_cm| / ħ`.
pub const PHASE_BOUND: f64 = 0.5;

/// Largest trace change tolerated in a single step.
pub const STEP_TRACE_TOL: f64 = 1e-8;

/// Checks both step-size constraints; returns the binding one on failure.
pub fn check_step(
    grid: &crate::phase_space::PhaseGrid,
    obs: &MeasuredObservable,
    coupling: &ClassicalHamiltonian,
    dt: f64,
    hbar: f64,
) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep(dt));
    }
    let d = obs.dim();
    let mut worst: Option<(&'static str, f64, f64)> = None;
    for i in 0..d {
        for j in i..d {
            let h = coupling.scaled(0.5 * (obs.v(i) + obs.v(j)));
            if let Some(b) = transport_bound(grid, &h, dt) {
                if worst.map_or(true, |w| b.1 / b.2 > w.1 / w.2) {
                    worst = Some(b);
                }
            }
        }
    }
    let phase = dt * obs.max_gap() * coupling.max_abs(grid) / hbar;
    if phase > PHASE_BOUND && worst.map_or(true, |w| phase / PHASE_BOUND > w.1 / w.2) {
        worst = Some(("phase resolution: dt max|dv| max|V_cm| / hbar", phase, PHASE_BOUND));
    }
    match worst {
        Some((constraint, value, limit)) => Err(Error::Stability { constraint, value, limit }),
        None => Ok(()),
    }
}

struct PairPhase {
    i: usize,
    j: usize,
    half: Vec<Complex64>,
}

/// Cached maps and phase factors for one `(obs, V_cm, dt, ħ, grid)`.
pub struct BlockIntegrator {
    dim: usize,
    dt: f64,
    // indexed by upper-triangle position
    maps: Vec<Arc<AdvectionMap>>,
    phases: Vec<PairPhase>,
}

impl BlockIntegrator {
    pub fn new(state: &HybridState, obs: &MeasuredObservable, coupling: &ClassicalHamiltonian, dt: f64) -> Result<Self> {
        let d = state.dim();
        if obs.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: obs.dim(),
            });
        }
        let grid = state.grid();
        check_step(grid, obs, coupling, dt, state.hbar())?;

        let mut maps = Vec::with_capacity(d * (d + 1) / 2);
        // blocks with the same mean eigenvalue share a departure map
        let mut cache: Vec<(f64, Arc<AdvectionMap>)> = Vec::new();
        for i in 0..d {
            for j in i..d {
                let mean = 0.5 * (obs.v(i) + obs.v(j));
                let map = match cache.iter().find(|(m, _)| *m == mean) {
                    Some((_, map)) => Arc::clone(map),
                    None => {
                        let map = Arc::new(AdvectionMap::new(grid, &coupling.scaled(mean), dt)?);
                        cache.push((mean, map.clone()));
                        map
                    }
                };
                maps.push(map);
            }
        }

        let coupling_values = grid.sample(|q, p| coupling.value(q, p));
        let mut phases = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                let gap = obs.v(i) - obs.v(j);
                if gap == 0.0 {
                    continue;
                }
                // exp(-i (v_i - v_j) V dt / 2ħ)
                let rate = -gap * 0.5 * dt / state.hbar();
                let half = coupling_values
                    .iter()
                    .map(|v| Complex64::from_polar(1.0, rate * v))
                    .collect();
                phases.push(PairPhase { i, j, half });
            }
        }
        Ok(Self { dim: d, dt, maps, phases })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    fn map(&self, i: usize, j: usize) -> &AdvectionMap {
        // row i of the upper triangle starts at i*d - i(i-1)/2
        let d = self.dim;
        &self.maps[i * d - (i * i.saturating_sub(1)) / 2 + (j - i)]
    }

    fn apply_phase(&self, state: &mut HybridState) {
        for ph in &self.phases {
            for (z, w) in state.block_mut(ph.i, ph.j).iter_mut().zip(&ph.half) {
                *z *= w;
            }
        }
    }

    /// Advances `state` in place by one step.
    pub fn step(&self, state: &mut HybridState) -> Result<()> {
        let d = self.dim;
        self.apply_phase(state);
        for i in 0..d {
            let map = self.map(i, i);
            let values = state.diagonal_values(i);
            let mass = state.grid().quadrature(&values);
            let moved = transport_density(map, &values, mass)?;
            *state.block_mut(i, i) = moved.into_iter().map(|v| Complex64::new(v, 0.0)).collect();
            for j in (i + 1)..d {
                let map = self.map(i, j);
                if !map.is_identity() {
                    let moved = map.apply(state.block(i, j));
                    *state.block_mut(i, j) = moved;
                }
            }
        }
        self.apply_phase(state);
        state.mirror_upper();
        Ok(())
    }
}

/// One step of the hybrid equation from `state`.
pub fn aleksandrov_step(
    state: &HybridState,
    obs: &MeasuredObservable,
    coupling: &ClassicalHamiltonian,
    dt: f64,
) -> Result<HybridState> {
    let integrator = BlockIntegrator::new(state, obs, coupling, dt)?;
    let mut out = state.clone();
    let before = state.trace();
    integrator.step(&mut out)?;
    let drift = (out.trace() - before).abs();
    if drift > STEP_TRACE_TOL {
        return Err(Error::TraceDrift {
            time: dt,
            drift,
            limit: STEP_TRACE_TOL,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hybrid::{product_state, quantum_marginal};
    use crate::phase_space::{gaussian_state, liouville_step, PhaseGrid};
    use crate::quantum::pure_from_amplitudes;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn upper_triangle_indexing() {
        let g = PhaseGrid::new(-4.0, 4.0, -2.0, 2.0, 32, 16).unwrap();
        let rho = gaussian_state(&g, 0.0, 0.0, 0.5, 0.5).unwrap();
        let amps = [c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0), c(0.5, 0.0)];
        let s = product_state(&pure_from_amplitudes(&amps).unwrap(), &rho, 1.0).unwrap();
        // distinct mean eigenvalue per block pair
        let obs = MeasuredObservable::new(vec![0.0, 0.1, 0.3, 0.7]).unwrap();
        let integ = BlockIntegrator::new(&s, &obs, &ClassicalHamiltonian::linear_p(1.0), 0.01).unwrap();
        let mut k = 0;
        for i in 0..4 {
            for j in i..4 {
                assert!(std::ptr::eq(integ.map(i, j), &*integ.maps[k]), "({i},{j})");
                k += 1;
            }
        }
    }

    #[test]
    fn single_level_reduces_to_liouville() {
        let g = PhaseGrid::new(-5.0, 5.0, -5.0, 5.0, 160, 160).unwrap();
        let rho = gaussian_state(&g, 0.5, 0.5, 0.5, 0.5).unwrap();
        let s = product_state(&pure_from_amplitudes(&[c(1.0, 0.0)]).unwrap(), &rho, 1.0).unwrap();
        let obs = MeasuredObservable::new(vec![0.7]).unwrap();
        let v = ClassicalHamiltonian::harmonic();
        let hybrid = aleksandrov_step(&s, &obs, &v, 0.015).unwrap();
        let classical = liouville_step(&rho, &v.scaled(0.7), 0.015).unwrap();
        assert_eq!(hybrid.diagonal_values(0), classical.values());
    }

    #[test]
    fn stability_errors_name_binding_constraint() {
        let g = PhaseGrid::new(-5.0, 5.0, -2.5, 2.5, 64, 32).unwrap();
        let rho = gaussian_state(&g, 0.0, 0.0, 0.5, 0.5).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let s = product_state(&pure_from_amplitudes(&[c(h, 0.0), c(h, 0.0)]).unwrap(), &rho, 1.0).unwrap();
        let obs = MeasuredObservable::new(vec![1.0, -1.0]).unwrap();
        let v = ClassicalHamiltonian::linear_p(1.0);
        // dq = 0.156: transport binds at dt = 0.3 (CFL 1.9, phase 1.5/0.5 = 3 -> phase binds)
        match aleksandrov_step(&s, &obs, &v, 0.3) {
            Err(Error::Stability { constraint, .. }) => assert!(constraint.starts_with("phase")),
            other => panic!("{other:?}"),
        }
        // small hbar leaves transport as the only failure
        let blocks = (0..4).map(|k| s.block(k / 2, k % 2).to_vec()).collect();
        let s2 = HybridState::from_blocks(*s.grid(), 2, 100.0, blocks).unwrap();
        match aleksandrov_step(&s2, &obs, &v, 0.3) {
            Err(Error::Stability { constraint, .. }) => assert!(constraint.starts_with("transport")),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            aleksandrov_step(&s, &obs, &v, -0.1),
            Err(Error::InvalidTimeStep(_))
        ));
    }

    #[test]
    fn degenerate_observable_keeps_marginal() {
        let g = PhaseGrid::new(-4.0, 4.0, -4.0, 4.0, 128, 32).unwrap();
        let rho = gaussian_state(&g, 0.0, 0.0, 0.5, 0.5).unwrap();
        let s = product_state(&pure_from_amplitudes(&[c(0.6, 0.0), c(0.0, 0.8)]).unwrap(), &rho, 1.0).unwrap();
        let obs = MeasuredObservable::new(vec![0.5, 0.5]).unwrap();
        let mut cur = s.clone();
        for _ in 0..10 {
            cur = aleksandrov_step(&cur, &obs, &ClassicalHamiltonian::linear_p(1.0), 0.1).unwrap();
        }
        let (m0, m1) = (quantum_marginal(&s), quantum_marginal(&cur));
        for i in 0..2 {
            for j in 0..2 {
                assert!((m0.entry(i, j) - m1.entry(i, j)).norm() < 1e-8);
            }
        }
        cur.validate().unwrap();
    }
}
