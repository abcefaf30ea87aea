//! Shrinking-width sweep of the measurement scenario.
//!
//! Each width gets two independent runs. The onset run resolves the packet
//! finely and refines `dt` until the first violating tick lies well inside
//! the sampled history. The half-time run follows the coherence of the
//! fastest-separating pair until it halves, on the finest grid the node
//! budget allows. Onset is reported at tick resolution; the half-time is
//! interpolated between the two ticks that bracket the crossing.

use std::io::Write;
use std::ops::ControlFlow;

use log::warn;
use rayon::prelude::*;

use super::detect::interpolated_crossing;
use super::{build_initial, MeasurementScenario, CENTRE_MARGIN_SIGMAS};
use crate::error::{Error, Result};
use crate::hybrid::{check_step, evolve_with, Diagnostics, EvolveConfig, PHASE_BOUND};
use crate::phase_space::{flow_trajectory, PhaseGrid};

/// Node budget per run, `512²`.
pub const MAX_STUDY_NODES: usize = 512 * 512;

#[derive(Debug, Clone, PartialEq)]
pub struct StudySettings {
    pub tol_psd: f64,
    pub onset_cells_per_sigma: f64,
    /// Tried in order; the first that fits the node budget is used.
    pub half_time_cells_per_sigma: Vec<f64>,
    /// The onset tick index the `dt` refinement aims for.
    pub min_onset_ticks: usize,
    pub max_refinements: usize,
    pub node_cap: usize,
}

impl Default for StudySettings {
    fn default() -> Self {
        Self {
            tol_psd: crate::hybrid::DEFAULT_TOL_PSD,
            onset_cells_per_sigma: 16.0,
            half_time_cells_per_sigma: vec![8.0, 6.0, 4.0],
            min_onset_ticks: 8,
            max_refinements: 8,
            node_cap: MAX_STUDY_NODES,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub sigma: f64,
    pub onset_time: Option<f64>,
    /// Step of the final onset run.
    pub onset_dt: Option<f64>,
    pub half_time: Option<f64>,
    /// `(n_q, n_p)` of the half-time run.
    pub half_time_grid: Option<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub rows: Vec<StudyRow>,
    /// Fitted `d ln(onset) / d ln(σ)`.
    pub onset_exponent: Option<f64>,
    /// Fitted `d ln(half-time) / d ln(σ)`.
    pub half_time_exponent: Option<f64>,
    /// One record per skipped width.
    pub warnings: Vec<String>,
}

/// Runs the sweep over strictly decreasing `sigmas` with default settings.
pub fn delta_limit_study(base: &MeasurementScenario, sigmas: &[f64]) -> Result<StudyTable> {
    delta_limit_study_with(base, sigmas, &StudySettings::default())
}

pub fn delta_limit_study_with(base: &MeasurementScenario, sigmas: &[f64], settings: &StudySettings) -> Result<StudyTable> {
    check_sigmas(sigmas)?;
    let jobs: Vec<Result<std::result::Result<StudyRow, String>>> =
        sigmas.par_iter().map(|&s| study_one(base, s, settings)).collect();
    let mut rows = Vec::new();
    let mut warnings = Vec::new();
    for job in jobs {
        match job? {
            Ok(row) => rows.push(row),
            Err(w) => {
                warn!("{w}");
                warnings.push(w);
            }
        }
    }
    let pick = |f: fn(&StudyRow) -> Option<f64>| -> Vec<(f64, f64)> {
        rows.iter().filter_map(|r| f(r).map(|y| (r.sigma, y))).collect()
    };
    let onset_exponent = fit_power_law(&pick(|r| r.onset_time));
    let half_time_exponent = fit_power_law(&pick(|r| r.half_time));
    Ok(StudyTable {
        rows,
        onset_exponent,
        half_time_exponent,
        warnings,
    })
}

pub fn check_sigmas(sigmas: &[f64]) -> Result<()> {
    if sigmas.is_empty() {
        return Err(Error::InvalidSigmas("empty list".into()));
    }
    if let Some(s) = sigmas.iter().find(|s| !(s.is_finite() && **s > 0.0)) {
        return Err(Error::InvalidSigmas(format!("{s} is not a positive width")));
    }
    if let Some(w) = sigmas.windows(2).find(|w| w[1] >= w[0]) {
        return Err(Error::InvalidSigmas(format!("not strictly decreasing at {} -> {}", w[0], w[1])));
    }
    Ok(())
}

/// Least-squares slope of `ln y` against `ln x`; needs two distinct `x`.
pub fn fit_power_law(points: &[(f64, f64)]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = points
        .iter()
        .filter(|(x, y)| *x > 0.0 && *y > 0.0)
        .map(|(x, y)| (x.ln(), y.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx > 0.0 {
        Some(sxy / sxx)
    } else {
        None
    }
}

/// `sigma,onset_time,half_time,fit_exponent`; the last column carries the
/// fitted onset exponent, empty entries mean "not observed".
pub fn write_study_csv<W: Write>(mut w: W, table: &StudyTable) -> std::io::Result<()> {
    writeln!(w, "sigma,onset_time,half_time,fit_exponent")?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &table.rows {
        writeln!(
            w,
            "{},{},{},{}",
            r.sigma,
            opt(r.onset_time),
            opt(r.half_time),
            opt(table.onset_exponent)
        )?;
    }
    Ok(())
}

// Outer error: breakdown; inner error: skipped width with its warning.
fn study_one(base: &MeasurementScenario, sigma: f64, st: &StudySettings) -> Result<std::result::Result<StudyRow, String>> {
    let skip = |what: &str, e: Error| Ok(Err(format!("sigma = {sigma}: {what} skipped: {e}")));
    let probe = rescaled(base, sigma, 8.0, 0.0, usize::MAX)?;

    let (onset_time, onset_dt) = match onset_run(&probe, st) {
        Ok(v) => v,
        Err(e @ (Error::UnderResolved { .. } | Error::InvalidGrid(_))) => return skip("onset run", e),
        Err(e) => return Err(e),
    };
    let (half_time, half_time_grid) = match half_time_run(&probe, st) {
        Ok(v) => v,
        Err(e @ (Error::UnderResolved { .. } | Error::InvalidGrid(_))) => return skip("half-time run", e),
        Err(e) => return Err(e),
    };
    Ok(Ok(StudyRow {
        sigma,
        onset_time,
        onset_dt,
        half_time,
        half_time_grid,
    }))
}

/// Copy of `base` at width `sigma` (keeping the `σ_p/σ_q` ratio) on a grid
/// of `cells` nodes per width that contains every block centre over
/// `horizon` with the boundary margin; `dt` is the largest stable step.
fn rescaled(base: &MeasurementScenario, sigma: f64, cells: f64, horizon: f64, cap: usize) -> Result<MeasurementScenario> {
    let ratio = base.sigma.1 / base.sigma.0;
    let (sq, sp) = (sigma, sigma * ratio);
    let (q0, p0) = base.start;
    let d = base.dim();
    let (mut lo_q, mut hi_q, mut lo_p, mut hi_p) = (q0, q0, p0, p0);
    let traj_dt = if horizon > 0.0 { horizon / 512.0 } else { 1.0 };
    for i in 0..d {
        for j in i..d {
            let h = base.coupling.scaled(0.5 * (base.observable.v(i) + base.observable.v(j)));
            for (q, p) in flow_trajectory(&h, q0, p0, horizon, traj_dt)?.points {
                lo_q = lo_q.min(q);
                hi_q = hi_q.max(q);
                lo_p = lo_p.min(p);
                hi_p = hi_p.max(p);
            }
        }
    }
    let margin = CENTRE_MARGIN_SIGMAS + 1.0;
    let (q_min, q_max) = (lo_q - margin * sq, hi_q + margin * sq);
    let (p_min, p_max) = (lo_p - margin * sp, hi_p + margin * sp);
    let n_q = ((q_max - q_min) * cells / sq).ceil() as usize;
    let n_p = ((p_max - p_min) * cells / sp).ceil() as usize;
    if n_q.saturating_mul(n_p) > cap {
        return Err(Error::InvalidGrid(format!("{n_q} x {n_p} nodes exceed the budget of {cap}")));
    }
    let grid = PhaseGrid::new(q_min, q_max, p_min, p_max, n_q, n_p)?;
    let dt = stable_dt(base, &grid);
    let s = MeasurementScenario {
        sigma: (sq, sp),
        grid,
        dt,
        t_final: horizon,
        cadence: 1,
        ..base.clone()
    };
    s.validate()?;
    Ok(s)
}

/// Largest `dt` meeting the transport bound of every block and the phase
/// bound.
fn stable_dt(base: &MeasurementScenario, grid: &PhaseGrid) -> f64 {
    let d = base.dim();
    let mut dt = f64::INFINITY;
    for i in 0..d {
        for j in i..d {
            let (vq, vp) = base.block_hamiltonian(i, j).max_velocities(grid);
            if vq > 0.0 {
                dt = dt.min(grid.dq() / vq);
            }
            if vp > 0.0 {
                dt = dt.min(grid.dp() / vp);
            }
        }
    }
    let phase = base.observable.max_gap() * base.coupling.max_abs(grid) / base.hbar;
    if phase > 0.0 {
        dt = dt.min(PHASE_BOUND / phase);
    }
    if !dt.is_finite() {
        dt = grid.dq();
    }
    // guard against the bound check rounding the other way
    for _ in 0..8 {
        if check_step(grid, &base.observable, &base.coupling, dt, base.hbar).is_ok() {
            break;
        }
        dt *= 1.0 - 1e-12;
    }
    dt
}

/// Runs until the first violating tick, refining `dt` until that tick has
/// index at least `min_onset_ticks`.
fn onset_run(probe: &MeasurementScenario, st: &StudySettings) -> Result<(Option<f64>, Option<f64>)> {
    let t_sep = probe.separation_time();
    if !t_sep.is_finite() {
        return Ok((None, None));
    }
    let mut horizon = 2.0 * t_sep;
    let s0 = rescaled(probe, probe.sigma.0, st.onset_cells_per_sigma, horizon, st.node_cap)?;
    let state = build_initial(&s0)?;
    let mut dt = s0.dt;
    let mut best: (Option<f64>, Option<f64>) = (None, None);
    for _ in 0..=st.max_refinements {
        let cfg = EvolveConfig::new(dt, horizon, 1).with_boundary(s0.sigma.0, s0.sigma.1);
        let tol = st.tol_psd;
        let run = evolve_with(&state, &s0.observable, &s0.coupling, &cfg, |_, d: &Diagnostics| {
            Ok(if d.violates(tol) {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            })
        })?;
        let hit = run.ticks.iter().position(|d| d.violates(tol));
        match hit {
            None => break,
            Some(k) => {
                let t = run.ticks[k].time;
                best = (Some(t), Some(dt));
                if k >= st.min_onset_ticks {
                    break;
                }
                dt = t / (2 * st.min_onset_ticks) as f64;
                horizon = 2.0 * t;
            }
        }
    }
    Ok(best)
}

/// Follows the coherence of the fastest-separating pair with non-zero
/// weight until it halves, extending the horizon when needed.
fn half_time_run(probe: &MeasurementScenario, st: &StudySettings) -> Result<(Option<f64>, Option<(usize, usize)>)> {
    let d = probe.dim();
    let mut pair = None;
    let mut gap = 0.0;
    for i in 0..d {
        for j in (i + 1)..d {
            let g = (probe.observable.v(i) - probe.observable.v(j)).abs();
            let w = (probe.amplitudes[i] * probe.amplitudes[j].conj()).norm();
            if w > 0.0 && g > gap {
                gap = g;
                pair = Some((i, j));
            }
        }
    }
    let Some((pi, pj)) = pair else {
        return Ok((None, None));
    };
    // natural dephasing scale ħ / (Δv · spread of V_cm over the packet)
    let (q0, p0) = probe.start;
    let spread = (probe.coupling.dh_dq(q0, p0) * probe.sigma.0).hypot(probe.coupling.dh_dp(q0, p0) * probe.sigma.1);
    if spread == 0.0 {
        return Ok((None, None));
    }
    let mut horizon = 1.5 * probe.hbar / (gap * spread);
    for _ in 0..4 {
        let s = st
            .half_time_cells_per_sigma
            .iter()
            .find_map(|&cells| rescaled(probe, probe.sigma.0, cells, horizon, st.node_cap).ok());
        let Some(s) = s else {
            return Err(Error::UnderResolved {
                axis: 'q',
                sigma: probe.sigma.0,
                min_width: 0.0,
            });
        };
        let state = build_initial(&s)?;
        let first = state.block_integral(pi, pj).norm();
        let cfg = s.evolve_config();
        let run = evolve_with(&state, &s.observable, &s.coupling, &cfg, |_, diag: &Diagnostics| {
            let r = diag.quantum_marginal.entry(pi, pj).norm() / first;
            Ok(if r <= 0.5 {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            })
        })?;
        let curve: Vec<(f64, f64)> = run
            .ticks
            .iter()
            .map(|d| (d.time, d.quantum_marginal.entry(pi, pj).norm() / first))
            .collect();
        if let Some(t) = interpolated_crossing(&curve, 0.5) {
            return Ok((Some(t), Some((s.grid.n_q(), s.grid.n_p()))));
        }
        horizon *= 2.0;
    }
    Ok((None, None))
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;

    #[test]
    fn sigma_list_rules() {
        assert!(check_sigmas(&[0.4, 0.2, 0.1]).is_ok());
        assert!(check_sigmas(&[0.2]).is_ok());
        assert!(matches!(check_sigmas(&[0.1, 0.2]), Err(Error::InvalidSigmas(_))));
        assert!(matches!(check_sigmas(&[0.2, 0.2]), Err(Error::InvalidSigmas(_))));
        assert!(check_sigmas(&[]).is_err());
        assert!(check_sigmas(&[0.2, -0.1]).is_err());
    }

    #[test]
    fn power_law_fit_recovers_exponent() {
        let pts: Vec<(f64, f64)> = [0.4, 0.2, 0.1].iter().map(|&s: &f64| (s, 3.0 * s.powf(-1.5))).collect();
        assert!((fit_power_law(&pts).unwrap() + 1.5).abs() < 1e-12);
        assert_eq!(fit_power_law(&pts[..1]), None);
    }

    #[test]
    fn single_width_gives_one_row() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
        let base = MeasurementScenario::pointer(amps, vec![1.0, -1.0], 0.4, 0.5).unwrap();
        let t = delta_limit_study(&base, &[0.4]).unwrap();
        assert_eq!(t.rows.len(), 1);
        assert!(t.onset_exponent.is_none());
        let row = &t.rows[0];
        assert!(row.onset_time.unwrap() < base.separation_time());
        // Gaussian phase average: ħ sqrt(2 ln 2) / (Δv σ_p)
        let oracle = (2.0 * 2f64.ln()).sqrt() / (2.0 * 0.4);
        assert!((row.half_time.unwrap() - oracle).abs() < 0.02 * oracle);
        let mut buf = Vec::new();
        write_study_csv(&mut buf, &t).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("sigma,onset_time,half_time,fit_exponent\n0.4,"));
    }

    #[test]
    fn budget_overflow_is_a_skip_not_a_failure() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let amps = vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)];
        let base = MeasurementScenario::pointer(amps, vec![1.0, -1.0], 0.4, 0.5).unwrap();
        let st = StudySettings {
            node_cap: 1000,
            ..StudySettings::default()
        };
        let t = delta_limit_study_with(&base, &[0.4], &st).unwrap();
        assert!(t.rows.is_empty());
        assert_eq!(t.warnings.len(), 1);
    }
}
