use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::hybrid::{check_step, product_state, EvolveConfig, HybridState, BOUNDARY_MARGIN_SIGMAS};
use crate::phase_space::{check_resolved, flow_trajectory, gaussian_state, ClassicalHamiltonian, PhaseGrid, Trajectory};
use crate::quantum::{pure_from_amplitudes, MeasuredObservable};

/// Amplitude normalization tolerance of a scenario.
pub const AMPLITUDE_TOL: f64 = 1e-12;

/// Distance, in widths, that packet centres keep from the grid edges: the
/// boundary margin plus enough tail for 99.99% of the mass.
pub const CENTRE_MARGIN_SIGMAS: f64 = BOUNDARY_MARGIN_SIGMAS + 4.0;

/// Initial data and numerics of a von Neumann-type measurement: the
/// quantum system in `Σ c_i |ψ_i⟩`, the apparatus at `(q0, p0)`, coupled
/// through `V_qm ⊗ V_cm`.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementScenario {
    pub amplitudes: Vec<Complex64>,
    pub observable: MeasuredObservable,
    pub coupling: ClassicalHamiltonian,
    pub start: (f64, f64),
    pub sigma: (f64, f64),
    pub grid: PhaseGrid,
    pub dt: f64,
    pub t_final: f64,
    pub cadence: usize,
    pub hbar: f64,
}

impl MeasurementScenario {
    /// Pointer coupling `V_cm = p` with the apparatus at rest at the origin.
    ///
    /// The grid follows the fastest block out to `t_final` with an 8σ
    /// margin, at σ/8 per cell; `dt` is the largest step both stability
    /// bounds allow (`ħ = 1`).
    pub fn pointer(amplitudes: Vec<Complex64>, eigenvalues: Vec<f64>, sigma: f64, t_final: f64) -> Result<Self> {
        let observable = MeasuredObservable::new(eigenvalues)?;
        let vmax = observable.eigenvalues().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let h = sigma / 8.0;
        let half_q = vmax * t_final + 8.0 * sigma;
        let half_p = 8.0 * sigma;
        let n_q = (2.0 * half_q / h).ceil() as usize;
        let n_p = (2.0 * half_p / h).ceil() as usize;
        let grid = PhaseGrid::new(-half_q, half_q, -half_p, half_p, n_q, n_p)?;
        let mut dt = if vmax > 0.0 { grid.dq() / vmax } else { grid.dq() };
        let gap = observable.max_gap();
        if gap > 0.0 {
            dt = dt.min(crate::hybrid::PHASE_BOUND / (gap * half_p));
        }
        let s = Self {
            amplitudes,
            observable,
            coupling: ClassicalHamiltonian::linear_p(1.0),
            start: (0.0, 0.0),
            sigma: (sigma, sigma),
            grid,
            dt,
            t_final,
            cadence: 1,
            hbar: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    /// Replaces the amplitudes; call [`validate`](Self::validate) after.
    pub fn with_amplitudes(mut self, amplitudes: Vec<Complex64>) -> Self {
        self.amplitudes = amplitudes;
        self
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// Checks normalization, shapes, resolvability, step bounds, and that
    /// every block centre keeps [`CENTRE_MARGIN_SIGMAS`] widths from the
    /// grid edges over the horizon.
    pub fn validate(&self) -> Result<()> {
        let norm: f64 = self.amplitudes.iter().map(|c| c.norm_sqr()).sum();
        if (norm - 1.0).abs() > AMPLITUDE_TOL {
            return Err(Error::InvalidState(format!("amplitudes have norm² {norm}, expected 1")));
        }
        if self.observable.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: self.observable.dim(),
            });
        }
        if self.cadence == 0 {
            return Err(Error::Config(vec!["cadence must be at least 1".into()]));
        }
        let (q0, p0) = self.start;
        if !self.grid.contains(q0, p0) {
            return Err(Error::OutsideGrid { q: q0, p: p0 });
        }
        check_resolved(&self.grid, self.sigma.0, self.sigma.1)?;
        check_step(&self.grid, &self.observable, &self.coupling, self.dt, self.hbar)?;
        let (mq, mp) = (CENTRE_MARGIN_SIGMAS * self.sigma.0, CENTRE_MARGIN_SIGMAS * self.sigma.1);
        for traj in self.pair_trajectories()? {
            for &(q, p) in &traj.points {
                let inside = q - self.grid.q_min() >= mq
                    && self.grid.q_max() - q >= mq
                    && p - self.grid.p_min() >= mp
                    && self.grid.p_max() - p >= mp;
                if !inside {
                    return Err(Error::OutsideGrid { q, p });
                }
            }
        }
        Ok(())
    }

    /// Block Hamiltonian `((v_i + v_j)/2) V_cm`.
    pub fn block_hamiltonian(&self, i: usize, j: usize) -> ClassicalHamiltonian {
        self.coupling.scaled(0.5 * (self.observable.v(i) + self.observable.v(j)))
    }

    /// Pointer trajectory of eigenstate `i` under `H_i = v_i V_cm`.
    pub fn trajectory(&self, i: usize) -> Result<Trajectory> {
        self.pair_trajectory(i, i)
    }

    /// Characteristic of block `(i, j)` from the start point.
    pub fn pair_trajectory(&self, i: usize, j: usize) -> Result<Trajectory> {
        let (q0, p0) = self.start;
        flow_trajectory(&self.block_hamiltonian(i, j), q0, p0, self.t_final, self.dt)
    }

    pub fn trajectories(&self) -> Result<Vec<Trajectory>> {
        (0..self.dim()).map(|i| self.trajectory(i)).collect()
    }

    /// Characteristics for every `i ≤ j`, row-major over the upper triangle.
    pub fn pair_trajectories(&self) -> Result<Vec<Trajectory>> {
        let d = self.dim();
        let mut out = Vec::with_capacity(d * (d + 1) / 2);
        for i in 0..d {
            for j in i..d {
                out.push(self.pair_trajectory(i, j)?);
            }
        }
        Ok(out)
    }

    /// Time for the fastest pair of pointer packets to separate by `2σ_q`
    /// in `q`, using the pointer speeds at the start point.
    pub fn separation_time(&self) -> f64 {
        let (q0, p0) = self.start;
        let speeds: Vec<f64> = (0..self.dim())
            .map(|i| self.block_hamiltonian(i, i).dh_dp(q0, p0))
            .collect();
        let lo = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = speeds.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if hi > lo {
            2.0 * self.sigma.0 / (hi - lo)
        } else {
            f64::INFINITY
        }
    }

    /// Evolution settings with the boundary rule enabled.
    pub fn evolve_config(&self) -> EvolveConfig {
        EvolveConfig::new(self.dt, self.t_final, self.cadence).with_boundary(self.sigma.0, self.sigma.1)
    }
}

/// Noncorrelated start `|ψ⟩⟨ψ| ⊗ ρ_cm` with `ρ_cm` the Gaussian at the
/// start point.
pub fn build_initial(s: &MeasurementScenario) -> Result<HybridState> {
    s.validate()?;
    let rho_qm = pure_from_amplitudes(&s.amplitudes)?;
    let rho_cm = gaussian_state(&s.grid, s.start.0, s.start.1, s.sigma.0, s.sigma.1)?;
    product_state(&rho_qm, &rho_cm, s.hbar)
}
