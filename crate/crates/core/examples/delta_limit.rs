//! Shrinking the pointer width: onset of the positivity violation and
//! coherence half-life against their closed forms.

use hybrid_dynamics::collapse::{delta_limit_study, MeasurementScenario};
use num_complex::Complex64;

fn main() -> hybrid_dynamics::Result<()> {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let base = MeasurementScenario::pointer(vec![Complex64::new(h, 0.0); 2], vec![1.0, -1.0], 0.25, 0.5)?;
    let sigmas = [0.4, 0.2, 0.1];
    let table = delta_limit_study(&base, &sigmas)?;

    let dv = 2.0;
    println!("{:>6} {:>12} {:>12} {:>10} {:>10}", "sigma", "onset", "t_sep", "half", "oracle");
    for r in &table.rows {
        let half = (2.0 * std::f64::consts::LN_2).sqrt() * base.hbar / (dv * r.sigma);
        println!(
            "{:6.3} {:12.4e} {:12.4e} {:10.5} {:10.5}",
            r.sigma,
            r.onset_time.unwrap_or(f64::NAN),
            2.0 * r.sigma / dv,
            r.half_time.unwrap_or(f64::NAN),
            half
        );
    }
    println!("onset exponent     {:?}", table.onset_exponent);
    println!("half-time exponent {:?}", table.half_time_exponent);
    for w in &table.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
