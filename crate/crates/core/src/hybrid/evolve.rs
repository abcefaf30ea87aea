use std::io::Write;
use std::ops::ControlFlow;

use super::integrator::{BlockIntegrator, STEP_TRACE_TOL};
use super::state::{hybrid_purity, pair_margins, pointwise_min_eigenvalue, quantum_marginal, HybridState};
use crate::error::{Error, Result};
use crate::phase_space::{step_count, ClassicalHamiltonian};
use crate::quantum::{self, MeasuredObservable, QuantumDensity};

/// Default PSD tolerance, relative to the largest diagonal field value.
pub const DEFAULT_TOL_PSD: f64 = 1e-6;

/// Interior mass fraction required by the boundary rule.
pub const BOUNDARY_MASS_FRACTION: f64 = 0.9999;

/// Margin, in units of the packet width, that counts as "away from the
/// boundary".
pub const BOUNDARY_MARGIN_SIGMAS: f64 = 3.0;

/// What happens when the pointwise certificate fails mid-run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PositivityPolicy {
    /// Keep integrating the raw equation; violations are only reported.
    #[default]
    Report,
    /// Project out the coherences as soon as the state stops being
    /// non-negative, the only non-negative continuation.
    Collapse,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvolveConfig {
    pub dt: f64,
    pub t_final: f64,
    /// Diagnostics every `cadence` steps (and always at the final step).
    pub cadence: usize,
    pub policy: PositivityPolicy,
    /// Relative PSD tolerance; see [`DEFAULT_TOL_PSD`].
    pub tol_psd: f64,
    /// Packet widths `(σq, σp)` for the boundary-contamination check.
    pub boundary_widths: Option<(f64, f64)>,
}

impl EvolveConfig {
    pub fn new(dt: f64, t_final: f64, cadence: usize) -> Self {
        Self {
            dt,
            t_final,
            cadence,
            policy: PositivityPolicy::Report,
            tol_psd: DEFAULT_TOL_PSD,
            boundary_widths: None,
        }
    }

    pub fn with_policy(mut self, policy: PositivityPolicy) -> Self {
        self.policy = policy;
        self
    }

    pub fn with_boundary(mut self, sigma_q: f64, sigma_p: f64) -> Self {
        self.boundary_widths = Some((sigma_q, sigma_p));
        self
    }

    pub fn with_tol_psd(mut self, tol: f64) -> Self {
        self.tol_psd = tol;
        self
    }
}

/// Observables recorded at one diagnostics tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub time: f64,
    pub trace: f64,
    pub hybrid_purity: f64,
    pub purity_ratio: f64,
    /// `1 − purity_ratio`.
    pub linear_entropy: f64,
    /// Pointwise minimum eigenvalue, scaled by the cell area.
    pub min_eig: f64,
    pub min_eig_location: (f64, f64),
    /// Largest diagonal field value, scaled by the cell area.
    pub diag_peak: f64,
    pub quantum_marginal: QuantumDensity,
    /// NaN when the marginal has a negative eigenvalue.
    pub qm_entropy: f64,
    pub qm_purity: f64,
    pub qm_min_eig: f64,
    /// `quadrature(|f_ij|)` for `i < j`, row-major over the upper triangle.
    pub offdiag_mass: Vec<f64>,
    /// `max_nodes (|f_ij| − sqrt(f_ii f_jj))` for `i < j`, field units.
    pub pair_margins: Vec<f64>,
    pub block_mass: Vec<f64>,
    /// `(⟨q⟩_i, ⟨p⟩_i)` of each diagonal block, normalized per block.
    pub means: Vec<(f64, f64)>,
}

impl Diagnostics {
    /// Pointwise minimum relative to the diagonal peak.
    pub fn relative_min_eig(&self) -> f64 {
        if self.diag_peak > 0.0 {
            self.min_eig / self.diag_peak
        } else {
            0.0
        }
    }

    pub fn violates(&self, tol_psd: f64) -> bool {
        self.min_eig < -tol_psd * self.diag_peak
    }
}

/// Computes all diagnostics of `state`; `reference_purity` is the purity
/// functional of the run's initial state.
pub fn diagnose(state: &HybridState, time: f64, reference_purity: f64) -> Diagnostics {
    let grid = state.grid();
    let d = state.dim();
    let area = grid.cell_area();
    let pm = pointwise_min_eigenvalue(state);
    let marginal = quantum_marginal(state);
    let qm_entropy = quantum::von_neumann_entropy(&marginal).unwrap_or(f64::NAN);
    let purity = hybrid_purity(state);
    let ratio = purity / reference_purity;

    let mut offdiag_mass = Vec::new();
    for i in 0..d {
        for j in (i + 1)..d {
            offdiag_mass.push(state.block_abs_mass(i, j));
        }
    }
    let block_mass: Vec<f64> = (0..d).map(|i| state.block_mass(i)).collect();
    let means = (0..d)
        .map(|i| {
            let (mut sq, mut sp, mut s) = (0.0, 0.0, 0.0);
            for (k, z) in state.block(i, i).iter().enumerate() {
                let (q, p) = grid.node(k);
                sq += q * z.re;
                sp += p * z.re;
                s += z.re;
            }
            if s > 0.0 {
                (sq / s, sp / s)
            } else {
                (f64::NAN, f64::NAN)
            }
        })
        .collect();

    Diagnostics {
        time,
        trace: state.trace(),
        hybrid_purity: purity,
        purity_ratio: ratio,
        linear_entropy: 1.0 - ratio,
        min_eig: pm.value,
        min_eig_location: pm.location,
        diag_peak: state.diagonal_peak() * area,
        qm_entropy,
        qm_purity: quantum::purity(&marginal),
        qm_min_eig: marginal.min_eigenvalue(),
        quantum_marginal: marginal,
        offdiag_mass,
        pair_margins: pair_margins(state),
        block_mass,
        means,
    }
}

/// Time at which a positivity-enforcing run projected out the coherences.
#[derive(Debug, Clone, PartialEq)]
pub struct CollapseEvent {
    pub time: f64,
    /// Pointwise minimum just before the projection (cell-area scaled).
    pub min_eig: f64,
    /// The same minimum relative to the diagonal peak.
    pub relative_min_eig: f64,
    pub location: (f64, f64),
}

/// Output of [`evolve`].
#[derive(Debug, Clone)]
pub struct Run {
    pub dim: usize,
    pub tol_psd: f64,
    pub ticks: Vec<Diagnostics>,
    pub final_state: HybridState,
    pub collapse: Option<CollapseEvent>,
}

impl Run {
    pub fn initial(&self) -> &Diagnostics {
        &self.ticks[0]
    }
}

/// Fixed-step integration with diagnostics every `cadence` steps.
pub fn evolve(
    state: &HybridState,
    obs: &MeasuredObservable,
    coupling: &ClassicalHamiltonian,
    cfg: &EvolveConfig,
) -> Result<Run> {
    evolve_with(state, obs, coupling, cfg, |_, _| Ok(ControlFlow::Continue(())))
}

/// [`evolve`] with an observer called at every diagnostics tick. Returning
/// `Break` ends the run after that tick.
pub fn evolve_with<F>(
    state: &HybridState,
    obs: &MeasuredObservable,
    coupling: &ClassicalHamiltonian,
    cfg: &EvolveConfig,
    mut observer: F,
) -> Result<Run>
where
    F: FnMut(&HybridState, &Diagnostics) -> Result<ControlFlow<()>>,
{
    if cfg.cadence == 0 {
        return Err(Error::Config(vec!["cadence must be at least 1".into()]));
    }
    if !(cfg.t_final >= 0.0 && cfg.t_final.is_finite()) {
        return Err(Error::NonFinite(format!("t_final = {}", cfg.t_final)));
    }
    let steps = step_count(cfg.t_final, cfg.dt);
    let full = BlockIntegrator::new(state, obs, coupling, cfg.dt)?;
    let remainder = cfg.t_final - (steps as f64 - 1.0) * cfg.dt;
    let last = if steps > 0 && (remainder - cfg.dt).abs() > 1e-9 * cfg.dt {
        Some(BlockIntegrator::new(state, obs, coupling, remainder)?)
    } else {
        None
    };

    let reference = hybrid_purity(state);
    let mut cur = state.clone();
    let mut ticks = Vec::new();
    let mut collapse = None;

    let first = diagnose(&cur, 0.0, reference);
    check_boundary(&cur, 0.0, cfg)?;
    let stop = observer(&cur, &first)?.is_break();
    ticks.push(first);
    let steps = if stop { 0 } else { steps };

    for k in 0..steps {
        let is_last = k + 1 == steps;
        let integ = match (&last, is_last) {
            (Some(l), true) => l,
            _ => &full,
        };
        let before = cur.trace();
        integ.step(&mut cur)?;
        let time = if is_last { cfg.t_final } else { (k + 1) as f64 * cfg.dt };
        let drift = (cur.trace() - before).abs();
        if drift > STEP_TRACE_TOL {
            return Err(Error::TraceDrift {
                time,
                drift,
                limit: STEP_TRACE_TOL,
            });
        }

        if cfg.policy == PositivityPolicy::Collapse && collapse.is_none() && cur.dim() > 1 {
            let pm = pointwise_min_eigenvalue(&cur);
            let peak = cur.diagonal_peak();
            if pm.raw < -cfg.tol_psd * peak {
                collapse = Some(CollapseEvent {
                    time,
                    min_eig: pm.value,
                    relative_min_eig: pm.raw / peak,
                    location: pm.location,
                });
                cur = cur.without_coherences()?;
            }
        }

        if (k + 1) % cfg.cadence == 0 || is_last {
            let diag = diagnose(&cur, time, reference);
            check_boundary(&cur, time, cfg)?;
            let stop = observer(&cur, &diag)?.is_break();
            ticks.push(diag);
            if stop {
                break;
            }
        }
    }

    Ok(Run {
        dim: state.dim(),
        tol_psd: cfg.tol_psd,
        ticks,
        final_state: cur,
        collapse,
    })
}

/// One row per tick: `t,trace,purity_ratio,min_eig,qm_entropy,qm_purity`,
/// then `offdiag_mass_ij` for `i < j` and `mean_q_i,mean_p_i` per level.
pub fn write_diagnostics_csv<W: Write>(mut w: W, dim: usize, ticks: &[Diagnostics]) -> std::io::Result<()> {
    let mut header = String::from("t,trace,purity_ratio,min_eig,qm_entropy,qm_purity");
    for i in 0..dim {
        for j in (i + 1)..dim {
            header.push_str(&format!(",offdiag_mass_{}{}", i + 1, j + 1));
        }
    }
    for i in 0..dim {
        header.push_str(&format!(",mean_q_{0},mean_p_{0}", i + 1));
    }
    writeln!(w, "{header}")?;
    for d in ticks {
        let mut row = format!(
            "{},{},{},{},{},{}",
            d.time, d.trace, d.purity_ratio, d.min_eig, d.qm_entropy, d.qm_purity
        );
        for m in &d.offdiag_mass {
            row.push_str(&format!(",{m}"));
        }
        for (q, p) in &d.means {
            row.push_str(&format!(",{q},{p}"));
        }
        writeln!(w, "{row}")?;
    }
    Ok(())
}

fn check_boundary(state: &HybridState, time: f64, cfg: &EvolveConfig) -> Result<()> {
    let Some((sq, sp)) = cfg.boundary_widths else {
        return Ok(());
    };
    let mut values = vec![0.0; state.grid().len()];
    for i in 0..state.dim() {
        for (acc, z) in values.iter_mut().zip(state.block(i, i)) {
            *acc += z.re.max(0.0);
        }
    }
    let fraction =
        state
            .grid()
            .interior_fraction(&values, BOUNDARY_MARGIN_SIGMAS * sq, BOUNDARY_MARGIN_SIGMAS * sp);
    if fraction < BOUNDARY_MASS_FRACTION {
        return Err(Error::BoundaryContamination { time, fraction });
    }
    Ok(())
}
