use num_complex::Complex64;

use super::MeasurementScenario;
use crate::error::{Error, Result};
use crate::hybrid::HybridState;
use crate::phase_space::{check_resolved, gaussian_state, PhaseGrid, Trajectory};
use crate::quantum::pure_from_amplitudes;

/// Packet centres `(q_ij, p_ij)` of a correlated state, row-major `d × d`.
#[derive(Debug, Clone, PartialEq)]
pub struct PointTable {
    dim: usize,
    points: Vec<(f64, f64)>,
}

impl PointTable {
    pub fn new(dim: usize, points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: points.len(),
            });
        }
        for i in 0..dim {
            for j in (i + 1)..dim {
                if points[i * dim + j] != points[j * dim + i] {
                    return Err(Error::AsymmetricPoints { i, j });
                }
            }
        }
        Ok(Self { dim, points })
    }

    /// Every entry at the same point.
    pub fn uniform(dim: usize, point: (f64, f64)) -> Self {
        Self {
            dim,
            points: vec![point; dim * dim],
        }
    }

    /// Diagonal entries from `diag`, every off-diagonal entry at `off`.
    pub fn split(diag: &[(f64, f64)], off: (f64, f64)) -> Self {
        let d = diag.len();
        let points = (0..d * d)
            .map(|k| if k / d == k % d { diag[k / d] } else { off })
            .collect();
        Self { dim: d, points }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> (f64, f64) {
        self.points[i * self.dim + j]
    }
}

/// Positions at time `t` of the block characteristics of `s`: block
/// `(i, j)` moves under `((v_i + v_j)/2) V_cm` from the start point.
pub fn catalog_points(s: &MeasurementScenario, t: f64) -> Result<PointTable> {
    let d = s.dim();
    let mut points = vec![(0.0, 0.0); d * d];
    let mut k = 0;
    let trajs = s.pair_trajectories()?;
    for i in 0..d {
        for j in i..d {
            let x = trajs[k].at(t)?;
            points[i * d + j] = x;
            points[j * d + i] = x;
            k += 1;
        }
    }
    PointTable::new(d, points)
}

/// Correlated state `Σ_ij c_i c_j* |ψ_i⟩⟨ψ_j| ⊗ G(q_ij, p_ij)` with `G`
/// the normalized Gaussian of widths `σ`.
pub fn ansatz_correlated(
    c: &[Complex64],
    points: &PointTable,
    sigma: (f64, f64),
    grid: &PhaseGrid,
    hbar: f64,
) -> Result<HybridState> {
    let d = c.len();
    if points.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: points.dim(),
        });
    }
    // re-check symmetry in case the table was built by hand upstream
    let points = PointTable::new(d, points.points.clone())?;
    let rho = pure_from_amplitudes(c)?;
    let mut blocks = vec![Vec::new(); d * d];
    for i in 0..d {
        for j in i..d {
            let (q, p) = points.get(i, j);
            let g = gaussian_state(grid, q, p, sigma.0, sigma.1)?;
            let w = if i == j {
                Complex64::new(rho.entry(i, i).re, 0.0)
            } else {
                rho.entry(i, j)
            };
            blocks[i * d + j] = g.values().iter().map(|&r| w * r).collect();
            if i != j {
                blocks[j * d + i] = g.values().iter().map(|&r| w.conj() * r).collect();
            }
        }
    }
    HybridState::new(*grid, d, hbar, blocks)
}

/// Mixture `Σ_i |c_i|² |ψ_i⟩⟨ψ_i| ⊗ G(q_i(t), p_i(t))` along the pointer
/// trajectories. No coherences survive.
pub fn collapsed_state(
    c: &[Complex64],
    trajectories: &[Trajectory],
    t: f64,
    sigma: (f64, f64),
    grid: &PhaseGrid,
    hbar: f64,
) -> Result<HybridState> {
    let d = c.len();
    if trajectories.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: trajectories.len(),
        });
    }
    check_resolved(grid, sigma.0, sigma.1)?;
    let rho = pure_from_amplitudes(c)?;
    let zero = vec![Complex64::default(); grid.len()];
    let mut blocks = vec![zero; d * d];
    for (i, traj) in trajectories.iter().enumerate() {
        let (q, p) = traj.at(t)?;
        let w = rho.entry(i, i).re;
        let g = gaussian_state(grid, q, p, sigma.0, sigma.1)?;
        blocks[i * d + i] = g.values().iter().map(|&r| Complex64::new(w * r, 0.0)).collect();
    }
    HybridState::new(*grid, d, hbar, blocks)
}

/// Drops every coherence block and renormalizes the trace.
pub fn collapse_project(state: &HybridState) -> Result<HybridState> {
    state.validate()?;
    state.without_coherences()
}
