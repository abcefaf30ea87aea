//! Hamiltonian characteristics: `dq/dt = ∂H/∂p`, `dp/dt = -∂H/∂q`.
//!
//! Separable Hamiltonians use kick-drift-kick Störmer-Verlet, everything
//! else the implicit midpoint rule. Both are symplectic, second order and
//! time-symmetric, so a step of `-dt` inverts a step of `dt`.

use super::ClassicalHamiltonian;
use crate::error::{Error, Result};

const MIDPOINT_MAX_ITER: usize = 100;

/// One symplectic step from `(q, p)`; returns the displacement `(Δq, Δp)`.
///
/// Returning the displacement rather than the endpoint keeps a vanishing
/// flow exactly zero, which the grid transport relies on.
pub fn symplectic_displacement(h: &ClassicalHamiltonian, q: f64, p: f64, dt: f64) -> Result<(f64, f64)> {
    if h.has_trivial_flow() {
        return Ok((0.0, 0.0));
    }
    if h.is_separable() {
        let kick1 = -0.5 * dt * h.dh_dq(q, p);
        let drift = dt * h.dh_dp(q, p + kick1);
        let kick2 = -0.5 * dt * h.dh_dq(q + drift, p + kick1);
        return Ok((drift, kick1 + kick2));
    }

    // Implicit midpoint: z = x + dt J ∇H((x + z) / 2), by fixed-point iteration.
    let mut dq = dt * h.dh_dp(q, p);
    let mut dp = -dt * h.dh_dq(q, p);
    for _ in 0..MIDPOINT_MAX_ITER {
        let (qm, pm) = (q + 0.5 * dq, p + 0.5 * dp);
        let ndq = dt * h.dh_dp(qm, pm);
        let ndp = -dt * h.dh_dq(qm, pm);
        if !(ndq.is_finite() && ndp.is_finite()) {
            return Err(Error::NoConvergence { q, p });
        }
        let change = (ndq - dq).abs().max((ndp - dp).abs());
        dq = ndq;
        dp = ndp;
        if change <= 1e-15 * (1.0 + q.abs().max(p.abs())) {
            return Ok((dq, dp));
        }
    }
    Err(Error::NoConvergence { q, p })
}

/// Sampled phase-space path of a single classical system.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<(f64, f64)>,
}

impl Trajectory {
    pub fn start(&self) -> (f64, f64) {
        self.points[0]
    }

    pub fn end(&self) -> (f64, f64) {
        *self.points.last().expect("trajectory has at least one point")
    }

    pub fn t_final(&self) -> f64 {
        *self.times.last().expect("trajectory has at least one point")
    }

    /// Point at sample time `t` (matched to 1e-12 relative).
    pub fn at(&self, t: f64) -> Result<(f64, f64)> {
        let tol = 1e-12 * t.abs().max(1.0);
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= tol)
            .map(|k| self.points[k])
            .ok_or(Error::NotOnTrajectory(t))
    }

    /// Largest relative deviation of `H` along the path from its initial value.
    pub fn energy_drift(&self, h: &ClassicalHamiltonian) -> f64 {
        let (q0, p0) = self.start();
        let e0 = h.value(q0, p0);
        let scale = e0.abs().max(f64::MIN_POSITIVE);
        self.points
            .iter()
            .map(|&(q, p)| (h.value(q, p) - e0).abs() / scale)
            .fold(0.0, f64::max)
    }
}

/// Integrates Hamilton's equations from `(q0, p0)` up to `t_final`.
///
/// Uses `ceil(t_final / dt)` steps, the last one shortened so the path ends
/// exactly at `t_final`.
pub fn flow_trajectory(h: &ClassicalHamiltonian, q0: f64, p0: f64, t_final: f64, dt: f64) -> Result<Trajectory> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimeStep(dt));
    }
    if !(t_final >= 0.0 && t_final.is_finite()) {
        return Err(Error::NonFinite(format!("t_final = {t_final}")));
    }
    let steps = step_count(t_final, dt);
    let mut times = Vec::with_capacity(steps + 1);
    let mut points = Vec::with_capacity(steps + 1);
    let (mut q, mut p) = (q0, p0);
    times.push(0.0);
    points.push((q, p));
    for k in 0..steps {
        let t = k as f64 * dt;
        let t_next = if k + 1 == steps { t_final } else { (k + 1) as f64 * dt };
        let h_step = t_next - t;
        let (dq, dp) = symplectic_displacement(h, q, p, h_step).map_err(|_| Error::NonFiniteFlow { time: t })?;
        if !(dq.is_finite() && dp.is_finite()) {
            return Err(Error::NonFiniteFlow { time: t });
        }
        q += dq;
        p += dp;
        times.push(t_next);
        points.push((q, p));
    }
    Ok(Trajectory { times, points })
}

/// Number of fixed steps of size `dt` needed to reach `t_final`.
pub fn step_count(t_final: f64, dt: f64) -> usize {
    let ratio = t_final / dt;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.max(1.0) {
        rounded as usize
    } else {
        ratio.ceil() as usize
    }
}
