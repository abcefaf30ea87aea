//! Two-level pointer: the pointer momentum couples to diag(1, -1) and the
//! two branches move apart. Coherences in the quantum marginal fade as
//! exp(-2 σ_p² t² / ħ²), and the composite state stops being pointwise
//! positive semidefinite at the first step.

use hybrid_dynamics::collapse::{build_initial, decoherence_curve, detect_violation, MeasurementScenario};
use hybrid_dynamics::hybrid::{evolve, DEFAULT_TOL_PSD};
use num_complex::Complex64;

fn main() -> hybrid_dynamics::Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let amps = vec![Complex64::new(h, 0.0); 2];
    let s = MeasurementScenario::pointer(amps, vec![1.0, -1.0], 0.25, 0.5)?;
    let run = evolve(&build_initial(&s)?, &s.observable, &s.coupling, &s.evolve_config())?;

    let curve = decoherence_curve(&run, 0, 1)?;
    println!("{:>8} {:>10} {:>12} {:>12} {:>12}", "t", "purity", "min eig", "|rho_12|", "oracle");
    for (d, (t, c)) in run.ticks.iter().zip(&curve).step_by(2) {
        let oracle = (-2.0 * s.sigma.1.powi(2) * t * t / (s.hbar * s.hbar)).exp();
        println!(
            "{t:8.4} {:10.6} {:12.4e} {c:12.6} {oracle:12.6}",
            d.purity_ratio,
            d.relative_min_eig()
        );
    }
    let report = detect_violation(&run, DEFAULT_TOL_PSD);
    println!("separation time  {}", s.separation_time());
    match (report.onset_time, report.location) {
        (Some(t), Some((q, p))) => println!("onset            t = {t} at (q, p) = ({q:.4}, {p:.4})"),
        _ => println!("no violation"),
    }
    Ok(())
}
