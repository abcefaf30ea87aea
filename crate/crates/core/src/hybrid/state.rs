use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::phase_space::{ClassicalDensity, PhaseGrid, EPS_NEG};
use crate::quantum::{eig2, hermitian_eigenvalues, symmetrize, CMatrix, QuantumDensity, MAX_DIM};

/// Trace tolerance of a hybrid state.
pub const HYBRID_TRACE_TOL: f64 = 1e-8;

/// `Σ_ij |ψ_i⟩⟨ψ_j| ⊗ f_ij(q̂, p̂)` in the eigenbasis of the measured
/// observable. Block `(i, j)` is a complex field on the shared grid and
/// `f_ji = conj(f_ij)` holds exactly as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct HybridState {
    grid: PhaseGrid,
    dim: usize,
    hbar: f64,
    blocks: Vec<Vec<Complex64>>,
}

impl HybridState {
    /// Validates block symmetry, real non-negative diagonals and unit trace.
    pub fn new(grid: PhaseGrid, dim: usize, hbar: f64, blocks: Vec<Vec<Complex64>>) -> Result<Self> {
        let state = Self::from_blocks(grid, dim, hbar, blocks)?;
        state.validate()?;
        Ok(state)
    }

    /// Shape checks only.
    pub(crate) fn from_blocks(grid: PhaseGrid, dim: usize, hbar: f64, blocks: Vec<Vec<Complex64>>) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::UnsupportedDimension(dim));
        }
        if !(hbar > 0.0 && hbar.is_finite()) {
            return Err(Error::NonFinite(format!("hbar = {hbar}")));
        }
        if blocks.len() != dim * dim {
            return Err(Error::DimensionMismatch {
                expected: dim * dim,
                got: blocks.len(),
            });
        }
        if let Some(b) = blocks.iter().find(|b| b.len() != grid.len()) {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                got: b.len(),
            });
        }
        Ok(Self { grid, dim, hbar, blocks })
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        for i in 0..d {
            let diag = self.block(i, i);
            let max = diag.iter().map(|z| z.re).fold(0.0, f64::max);
            for z in diag {
                if z.im != 0.0 || !z.re.is_finite() {
                    return Err(Error::InvalidState(format!("diagonal block {} not real", i + 1)));
                }
                if z.re < -EPS_NEG * max {
                    return Err(Error::NegativeDensity {
                        value: z.re,
                        tolerance: EPS_NEG * max,
                    });
                }
            }
            for j in 0..i {
                let (a, b) = (self.block(i, j), self.block(j, i));
                if a.iter().zip(b).any(|(x, y)| *x != y.conj()) {
                    return Err(Error::InvalidState(format!("blocks ({}, {}) not conjugate", i + 1, j + 1)));
                }
            }
        }
        let tr = self.trace();
        if (tr - 1.0).abs() > HYBRID_TRACE_TOL {
            return Err(Error::InvalidState(format!("hybrid trace {tr}")));
        }
        Ok(())
    }

    pub fn grid(&self) -> &PhaseGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn block(&self, i: usize, j: usize) -> &[Complex64] {
        &self.blocks[i * self.dim + j]
    }

    pub(crate) fn block_mut(&mut self, i: usize, j: usize) -> &mut Vec<Complex64> {
        &mut self.blocks[i * self.dim + j]
    }

    /// Re-establishes `f_ji = conj(f_ij)` from the upper triangle.
    pub(crate) fn mirror_upper(&mut self) {
        let d = self.dim;
        for i in 0..d {
            for j in (i + 1)..d {
                let conj: Vec<Complex64> = self.block(i, j).iter().map(|z| z.conj()).collect();
                *self.block_mut(j, i) = conj;
            }
        }
    }

    /// Real part of diagonal block `i`.
    pub fn diagonal_values(&self, i: usize) -> Vec<f64> {
        self.block(i, i).iter().map(|z| z.re).collect()
    }

    /// `quadrature(Re f_ii)`.
    pub fn block_mass(&self, i: usize) -> f64 {
        self.grid.quadrature(&self.diagonal_values(i))
    }

    /// `Σ_i quadrature(Re f_ii)`.
    pub fn trace(&self) -> f64 {
        (0..self.dim).map(|i| self.block_mass(i)).sum()
    }

    /// Complex quadrature of block `(i, j)`.
    pub fn block_integral(&self, i: usize, j: usize) -> Complex64 {
        let s: Complex64 = self.block(i, j).iter().sum();
        s * self.grid.cell_area()
    }

    /// `quadrature(|f_ij|)`.
    pub fn block_abs_mass(&self, i: usize, j: usize) -> f64 {
        self.block(i, j).iter().map(|z| z.norm()).sum::<f64>() * self.grid.cell_area()
    }

    /// The d×d matrix `[f_ij(q, p)]` at node `k`.
    pub fn node_matrix(&self, k: usize) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| self.block(i, j)[k])
    }

    /// Largest diagonal field value over all blocks and nodes.
    pub fn diagonal_peak(&self) -> f64 {
        (0..self.dim)
            .flat_map(|i| self.block(i, i).iter().map(|z| z.re))
            .fold(0.0, f64::max)
    }

    /// Drops every off-diagonal block and rescales to unit trace.
    pub fn without_coherences(&self) -> Result<HybridState> {
        let mut out = self.clone();
        let tr = self.trace();
        if !(tr > 0.0) {
            return Err(Error::InvalidState(format!("cannot renormalize trace {tr}")));
        }
        let scale = 1.0 / tr;
        for i in 0..self.dim {
            for j in 0..self.dim {
                let b = out.block_mut(i, j);
                if i == j {
                    b.iter_mut().for_each(|z| *z *= scale);
                } else {
                    b.iter_mut().for_each(|z| *z = Complex64::default());
                }
            }
        }
        Ok(out)
    }
}

/// Noncorrelated state `ρ_qm ⊗ ρ_cm`: `f_ij = (ρ_qm)_ij ρ_cm(q, p)`.
pub fn product_state(rho_qm: &QuantumDensity, rho_cm: &ClassicalDensity, hbar: f64) -> Result<HybridState> {
    let d = rho_qm.dim();
    let mut blocks = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let c = if i == j {
                Complex64::new(rho_qm.entry(i, i).re, 0.0)
            } else {
                rho_qm.entry(i, j)
            };
            blocks.push(rho_cm.values().iter().map(|&r| c * r).collect());
        }
    }
    let mut state = HybridState::from_blocks(*rho_cm.grid(), d, hbar, blocks)?;
    state.mirror_upper();
    state.validate()?;
    Ok(state)
}

/// Traces out the classical system: `ρ_ij = quadrature(f_ij)`.
///
/// Positivity is not required of the result.
pub fn quantum_marginal(state: &HybridState) -> QuantumDensity {
    let d = state.dim();
    let m = CMatrix::from_fn(d, d, |i, j| state.block_integral(i, j));
    let m = symmetrize(m);
    QuantumDensity::from_marginal(m)
}

/// Apparatus state `Σ_i Re f_ii`.
pub fn classical_marginal(state: &HybridState) -> Result<ClassicalDensity> {
    let mut values = vec![0.0; state.grid().len()];
    for i in 0..state.dim() {
        for (acc, z) in values.iter_mut().zip(state.block(i, i)) {
            *acc += z.re;
        }
    }
    ClassicalDensity::normalized(*state.grid(), values)
}

/// Pointwise positivity certificate.
///
/// The classical kernels are diagonal in the node basis, so the composite
/// operator is block-diagonal over nodes and its spectrum is the union of
/// the spectra of the d×d matrices `M(q, p) = [f_ij(q, p)]`. The state is
/// non-negative iff every `M(q, p)` is.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseMin {
    /// Global minimum eigenvalue scaled by the cell area (the eigenvalue of
    /// the discretized operator in the normalized node basis).
    pub value: f64,
    /// Global minimum in field units.
    pub raw: f64,
    pub node: usize,
    pub location: (f64, f64),
    /// Per-node minimum eigenvalue in field units.
    pub field: Vec<f64>,
}

pub fn node_min_eigenvalue(state: &HybridState, k: usize) -> f64 {
    match state.dim() {
        1 => state.block(0, 0)[k].re,
        2 => eig2(state.block(0, 0)[k].re, state.block(1, 1)[k].re, state.block(0, 1)[k].norm()).0,
        _ => hermitian_eigenvalues(&state.node_matrix(k))[0],
    }
}

pub fn pointwise_min_eigenvalue(state: &HybridState) -> PointwiseMin {
    let field: Vec<f64> = (0..state.grid().len())
        .into_par_iter()
        .map(|k| node_min_eigenvalue(state, k))
        .collect();
    let (node, raw) = field
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::INFINITY), |best, (k, v)| if v < best.1 { (k, v) } else { best });
    PointwiseMin {
        value: raw * state.grid().cell_area(),
        raw,
        node,
        location: state.grid().node(node),
        field,
    }
}

/// Purity functional `Σ_ij quadrature(|f_ij|²) · cell_area / trace²`.
///
/// Only ratios of this quantity are meaningful under regularization; see
/// [`purity_ratio`].
pub fn hybrid_purity(state: &HybridState) -> f64 {
    let area = state.grid().cell_area();
    let mut sum = 0.0;
    for i in 0..state.dim() {
        for j in 0..state.dim() {
            sum += state.block(i, j).iter().map(|z| z.norm_sqr()).sum::<f64>();
        }
    }
    let tr = state.trace();
    sum * area * area / (tr * tr)
}

/// `hybrid_purity(state) / hybrid_purity(reference)`.
pub fn purity_ratio(state: &HybridState, reference: &HybridState) -> f64 {
    hybrid_purity(state) / hybrid_purity(reference)
}

/// Per pair `i < j`: `max_nodes (|f_ij| − sqrt(f_ii f_jj))`. Positive values
/// violate the 2×2 minor condition `|f_ij|² ≤ f_ii f_jj`.
pub fn pair_margins(state: &HybridState) -> Vec<f64> {
    let d = state.dim();
    let mut out = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            let (fii, fjj, fij) = (state.block(i, i), state.block(j, j), state.block(i, j));
            let m = (0..state.grid().len())
                .map(|k| fij[k].norm() - (fii[k].re.max(0.0) * fjj[k].re.max(0.0)).sqrt())
                .fold(f64::NEG_INFINITY, f64::max);
            out.push(m);
        }
    }
    out
}
