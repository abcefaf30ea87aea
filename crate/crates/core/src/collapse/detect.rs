use std::io::Write;

use crate::error::{Error, Result};
use crate::hybrid::{pointwise_min_eigenvalue, HybridState, PointwiseMin, Run};

/// Outcome of scanning a run for pointwise positivity violations.
#[derive(Debug, Clone, PartialEq)]
pub struct ViolationReport {
    /// First tick whose pointwise minimum fell below `−tol_psd · peak`.
    pub onset_time: Option<f64>,
    pub location: Option<(f64, f64)>,
    /// Most negative pointwise minimum over the run (cell-area scaled)
    /// and the tick at which it occurred.
    pub worst: Option<(f64, f64)>,
    /// Per tick: `(t, [max_nodes |f_ij| − sqrt(f_ii f_jj) for i < j])`.
    pub margins: Vec<(f64, Vec<f64>)>,
}

impl ViolationReport {
    pub fn violated(&self) -> bool {
        self.onset_time.is_some()
    }
}

/// Scans the diagnostics ticks of `run` against the relative tolerance
/// `tol_psd`. Onset is reported at tick resolution.
pub fn detect_violation(run: &Run, tol_psd: f64) -> ViolationReport {
    let mut onset_time = None;
    let mut location = None;
    let mut worst: Option<(f64, f64)> = None;
    let mut margins = Vec::with_capacity(run.ticks.len());
    for d in &run.ticks {
        margins.push((d.time, d.pair_margins.clone()));
        if d.violates(tol_psd) {
            if onset_time.is_none() {
                onset_time = Some(d.time);
                location = Some(d.min_eig_location);
            }
            if worst.map_or(true, |(v, _)| d.min_eig < v) {
                worst = Some((d.min_eig, d.time));
            }
        }
    }
    ViolationReport {
        onset_time,
        location,
        worst,
        margins,
    }
}

/// Pointwise certificate of a single state: the minimum when it lies
/// below `−tol_psd` times the diagonal peak, `None` otherwise.
pub fn certify(state: &HybridState, tol_psd: f64) -> Option<PointwiseMin> {
    let pm = pointwise_min_eigenvalue(state);
    if pm.raw < -tol_psd * state.diagonal_peak() {
        Some(pm)
    } else {
        None
    }
}

/// `|ρ_ij(t)| / |ρ_ij(0)|` of the quantum marginal at every tick.
pub fn decoherence_curve(run: &Run, i: usize, j: usize) -> Result<Vec<(f64, f64)>> {
    if i == j || i >= run.dim || j >= run.dim {
        return Err(Error::InvalidState(format!("decoherence curve needs distinct levels, got ({i}, {j})")));
    }
    let first = run.initial().quantum_marginal.entry(i, j).norm();
    if first == 0.0 {
        return Err(Error::InvalidState(format!("no initial coherence between levels {} and {}", i + 1, j + 1)));
    }
    Ok(run
        .ticks
        .iter()
        .map(|d| (d.time, d.quantum_marginal.entry(i, j).norm() / first))
        .collect())
}

/// First time a sampled curve is at or below `level`.
pub fn first_crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    curve.iter().find(|(_, v)| *v <= level).map(|(t, _)| *t)
}

/// Time at which a sampled curve falls to `level`, linearly interpolated
/// between the bracketing samples.
pub fn interpolated_crossing(curve: &[(f64, f64)], level: f64) -> Option<f64> {
    let k = curve.iter().position(|(_, v)| *v <= level)?;
    if k == 0 {
        return Some(curve[0].0);
    }
    let ((t0, v0), (t1, v1)) = (curve[k - 1], curve[k]);
    Some(t0 + (v0 - level) / (v0 - v1) * (t1 - t0))
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    pub initial: f64,
    pub last: f64,
    /// Largest drop between consecutive ticks (0 when monotone).
    pub max_decrease: f64,
    pub max_decrease_time: Option<f64>,
    /// Largest absolute deviation from the initial entropy.
    pub max_drift: f64,
}

impl EntropyReport {
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.max_decrease <= tol
    }
}

/// Tracks the von Neumann entropy of the quantum marginal over a run.
/// Ticks with an undefined entropy (non-PSD marginal) count as a drop of
/// infinite size.
pub fn entropy_monotonicity(run: &Run) -> EntropyReport {
    let s: Vec<(f64, f64)> = run.ticks.iter().map(|d| (d.time, d.qm_entropy)).collect();
    let initial = s[0].1;
    let mut max_decrease: f64 = 0.0;
    let mut max_decrease_time = None;
    let mut max_drift: f64 = 0.0;
    for w in s.windows(2) {
        let drop = if w[1].1.is_nan() { f64::INFINITY } else { w[0].1 - w[1].1 };
        if drop > max_decrease {
            max_decrease = drop;
            max_decrease_time = Some(w[1].0);
        }
    }
    for &(_, v) in &s {
        max_drift = max_drift.max((v - initial).abs());
    }
    EntropyReport {
        initial,
        last: s[s.len() - 1].1,
        max_decrease,
        max_decrease_time,
        max_drift,
    }
}

/// `onset_time,onset_q,onset_p,worst_value,worst_time`; no data row when
/// nothing was violated.
pub fn write_violation_csv<W: Write>(mut w: W, report: &ViolationReport) -> std::io::Result<()> {
    writeln!(w, "onset_time,onset_q,onset_p,worst_value,worst_time")?;
    if let (Some(t), Some((q, p)), Some((v, tw))) = (report.onset_time, report.location, report.worst) {
        writeln!(w, "{t},{q},{p},{v},{tw}")?;
    }
    Ok(())
}

/// `t,margin_12,...` per tick.
pub fn write_margins_csv<W: Write>(mut w: W, dim: usize, report: &ViolationReport) -> std::io::Result<()> {
    let mut header = String::from("t");
    for i in 0..dim {
        for j in (i + 1)..dim {
            header.push_str(&format!(",margin_{}{}", i + 1, j + 1));
        }
    }
    writeln!(w, "{header}")?;
    for (t, m) in &report.margins {
        let row: Vec<String> = std::iter::once(t.to_string()).chain(m.iter().map(|v| v.to_string())).collect();
        writeln!(w, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use num_complex::Complex64;

    use super::*;
    use crate::collapse::{build_initial, collapsed_state, MeasurementScenario};
    use crate::hybrid::evolve;

    fn half() -> Vec<Complex64> {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        vec![Complex64::new(h, 0.0), Complex64::new(h, 0.0)]
    }

    #[test]
    fn mixture_run_has_no_onset() {
        let s = MeasurementScenario::pointer(half(), vec![1.0, -1.0], 0.25, 0.5).unwrap();
        let st = collapsed_state(&s.amplitudes, &s.trajectories().unwrap(), 0.0, s.sigma, &s.grid, 1.0).unwrap();
        let run = evolve(&st, &s.observable, &s.coupling, &s.evolve_config()).unwrap();
        let rep = detect_violation(&run, 1e-6);
        assert!(!rep.violated());
        let mut buf = Vec::new();
        write_violation_csv(&mut buf, &rep).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
    }

    #[test]
    fn equal_speeds_have_no_onset() {
        let s = MeasurementScenario::pointer(half(), vec![0.5, 0.5], 0.25, 0.5).unwrap();
        let run = evolve(&build_initial(&s).unwrap(), &s.observable, &s.coupling, &s.evolve_config()).unwrap();
        assert!(!detect_violation(&run, 1e-6).violated());
        let curve = decoherence_curve(&run, 0, 1).unwrap();
        assert!(curve.iter().all(|(_, v)| (v - 1.0).abs() < 1e-8));
        assert!(entropy_monotonicity(&run).max_drift < 1e-8);
    }

    #[test]
    fn pointer_run_violates_before_separation() {
        let s = MeasurementScenario::pointer(half(), vec![1.0, -1.0], 0.25, 0.25).unwrap();
        let run = evolve(&build_initial(&s).unwrap(), &s.observable, &s.coupling, &s.evolve_config()).unwrap();
        let rep = detect_violation(&run, 1e-6);
        let onset = rep.onset_time.unwrap();
        assert!(onset > 0.0 && onset <= s.separation_time());
        assert!(rep.worst.unwrap().0 < 0.0);
        assert_eq!(run.collapse, None);
    }

    #[test]
    fn curve_rejects_diagonal_index() {
        let s = MeasurementScenario::pointer(half(), vec![1.0, -1.0], 0.25, 0.0).unwrap();
        let run = evolve(&build_initial(&s).unwrap(), &s.observable, &s.coupling, &s.evolve_config()).unwrap();
        assert!(decoherence_curve(&run, 1, 1).is_err());
        assert_eq!(decoherence_curve(&run, 0, 1).unwrap(), vec![(0.0, 1.0)]);
    }

    #[test]
    fn crossings() {
        let c = [(0.0, 1.0), (1.0, 0.8), (2.0, 0.4)];
        assert_eq!(first_crossing(&c, 0.5), Some(2.0));
        assert!((interpolated_crossing(&c, 0.5).unwrap() - 1.75).abs() < 1e-15);
        assert_eq!(interpolated_crossing(&c, 0.1), None);
    }
}
