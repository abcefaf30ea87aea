//! Measurement scenario, correlated and collapsed states, positivity
//! violation detection and the shrinking-width study.
//!
//! For the pointer coupling `V_cm = p` with `v = (+1, −1)` every block is
//! known in closed form: the diagonal packets move apart at unit speed and
//! the coherence stays put while its phase winds as `exp(−2ipt/ħ)`. At the
//! midpoint the 2×2 node matrix has determinant proportional to
//! `exp(−t²/σ_q²) − 1`, so positivity fails at every `t > 0`. What the
//! onset time measures is how long the deficit takes to exceed the chosen
//! tolerance.

mod ansatz;
mod detect;
mod scenario;
mod study;

pub use ansatz::{ansatz_correlated, catalog_points, collapse_project, collapsed_state, PointTable};
pub use detect::{
    certify, decoherence_curve, detect_violation, entropy_monotonicity, first_crossing, interpolated_crossing, write_margins_csv,
    write_violation_csv, EntropyReport, ViolationReport,
};
pub use scenario::{build_initial, MeasurementScenario, AMPLITUDE_TOL, CENTRE_MARGIN_SIGMAS};
pub use study::{
    check_sigmas, delta_limit_study, delta_limit_study_with, fit_power_law, write_study_csv, StudyRow, StudySettings,
    StudyTable, MAX_STUDY_NODES,
};
