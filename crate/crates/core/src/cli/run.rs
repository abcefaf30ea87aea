use std::fmt::Write as _;
use std::fs::File;
use std::io::BufWriter;
use std::ops::ControlFlow;
use std::path::{Path, PathBuf};

use log::info;

use super::config::{Mode, RunConfig};
use super::snapshot::write_hybrid;
use crate::collapse::{
    ansatz_correlated, build_initial, catalog_points, collapsed_state, delta_limit_study, detect_violation,
    write_margins_csv, write_study_csv, write_violation_csv, StudySettings, ViolationReport,
};
use crate::error::{Error, Result};
use crate::hybrid::{evolve_with, write_diagnostics_csv, HybridState, PHASE_BOUND};
use crate::phase_space::{step_count, transport_bound};

/// Exit status of a clean run.
pub const EXIT_OK: i32 = 0;
/// Exit status of a run that ended in an error.
pub const EXIT_FAILURE: i32 = 1;
/// Exit status of a clean run that found a positivity violation.
pub const EXIT_VIOLATION: i32 = 2;

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    pub violation: Option<ViolationReport>,
}

fn create(dir: &Path, name: &str, files: &mut Vec<PathBuf>) -> Result<BufWriter<File>> {
    let path = dir.join(name);
    let f = File::create(&path).map_err(|e| Error::io(&path, e))?;
    files.push(path);
    Ok(BufWriter::new(f))
}

fn finish(w: std::io::Result<()>, path: &Path) -> Result<()> {
    w.map_err(|e| Error::io(path, e))
}

/// Builds the starting state of the configured mode.
pub fn initial_state(cfg: &RunConfig) -> Result<HybridState> {
    let s = &cfg.scenario;
    match cfg.mode {
        Mode::Evolve | Mode::Study => build_initial(s),
        Mode::Ansatz => ansatz_correlated(
            &s.amplitudes,
            &catalog_points(s, cfg.ansatz_time)?,
            s.sigma,
            &s.grid,
            s.hbar,
        ),
        Mode::Collapsed => collapsed_state(&s.amplitudes, &s.trajectories()?, cfg.ansatz_time, s.sigma, &s.grid, s.hbar),
    }
}

/// Runs `cfg` and writes its artifacts under `cfg.output.dir`.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    for n in &cfg.notices {
        info!("{n}");
    }
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = Vec::new();

    if cfg.mode == Mode::Study {
        let table = delta_limit_study(&cfg.scenario, &cfg.sigmas)?;
        if cfg.output.study_table {
            let mut w = create(dir, "study.csv", &mut files)?;
            finish(write_study_csv(&mut w, &table), &dir.join("study.csv"))?;
        }
        return Ok(Outcome {
            exit_code: EXIT_OK,
            files,
            violation: None,
        });
    }

    let s = &cfg.scenario;
    let state = initial_state(cfg)?;
    let ecfg = s
        .evolve_config()
        .with_policy(cfg.policy)
        .with_tol_psd(cfg.tol_psd);
    let mut tick = 0usize;
    let mut snapshot_err = None;
    let mut snapshot_files = Vec::new();
    let run = evolve_with(&state, &s.observable, &s.coupling, &ecfg, |st, d| {
        if cfg.output.snapshots && tick % cfg.output.snapshot_cadence == 0 {
            let name = format!("snapshot_{tick:06}.txt");
            let path = dir.join(&name);
            let res = File::create(&path)
                .and_then(|f| {
                    let mut w = BufWriter::new(f);
                    write_hybrid(&mut w, st, d.time)?;
                    std::io::Write::flush(&mut w)
                })
                .map_err(|e| Error::io(&path, e));
            match res {
                Ok(()) => snapshot_files.push(path),
                Err(e) => {
                    snapshot_err = Some(e);
                    return Ok(ControlFlow::Break(()));
                }
            }
        }
        tick += 1;
        Ok(ControlFlow::Continue(()))
    })?;
    if let Some(e) = snapshot_err {
        return Err(e);
    }
    files.extend(snapshot_files);

    if cfg.output.diagnostics {
        let mut w = create(dir, "diagnostics.csv", &mut files)?;
        finish(write_diagnostics_csv(&mut w, s.dim(), &run.ticks), &dir.join("diagnostics.csv"))?;
    }
    let mut report = detect_violation(&run, cfg.tol_psd);
    if let (None, Some(ev)) = (report.onset_time, &run.collapse) {
        report.onset_time = Some(ev.time);
        report.location = Some(ev.location);
        report.worst = Some((ev.min_eig, ev.time));
    }
    if cfg.output.violation_report {
        let mut w = create(dir, "violation.csv", &mut files)?;
        finish(write_violation_csv(&mut w, &report), &dir.join("violation.csv"))?;
        let mut w = create(dir, "margins.csv", &mut files)?;
        finish(write_margins_csv(&mut w, s.dim(), &report), &dir.join("margins.csv"))?;
    }
    let exit_code = if report.violated() { EXIT_VIOLATION } else { EXIT_OK };
    Ok(Outcome {
        exit_code,
        files,
        violation: Some(report),
    })
}

/// Human-readable plan: resolved keys, stability margins, memory and work
/// estimates.
pub fn describe(cfg: &RunConfig) -> String {
    let s = &cfg.scenario;
    let g = &s.grid;
    let d = s.dim();
    let mut out = String::new();
    let _ = writeln!(out, "scenario {} ({} mode)", cfg.name, cfg.mode.name());
    let mut current = "";
    for (sec, key, value) in cfg.resolved() {
        if sec != current {
            let _ = writeln!(out, "[{sec}]");
            current = sec;
        }
        let mark = if cfg.user_keys.iter().any(|(a, b)| a == sec && b == key) {
            ""
        } else {
            "  (default)"
        };
        let _ = writeln!(out, "  {key} = {value}{mark}");
    }
    for n in &cfg.notices {
        let _ = writeln!(out, "notice: {n}");
    }

    let _ = writeln!(out, "grid: {} x {} nodes, dq = {}, dp = {}", g.n_q(), g.n_p(), g.dq(), g.dp());
    let _ = writeln!(
        out,
        "resolution: sigma_q = {} cells, sigma_p = {} cells",
        s.sigma.0 / g.dq(),
        s.sigma.1 / g.dp()
    );
    let mut worst: Option<(&str, f64, f64)> = None;
    let mut lines = Vec::new();
    for i in 0..d {
        for j in i..d {
            let h = s.block_hamiltonian(i, j);
            let (vq, vp) = h.max_velocities(g);
            let cq = ("transport CFL in q: max|dH/dp| dt / dq", vq * s.dt / g.dq(), 1.0);
            let cp = ("transport CFL in p: max|dH/dq| dt / dp", vp * s.dt / g.dp(), 1.0);
            for c in [cq, cp] {
                if worst.map_or(true, |w| c.1 / c.2 > w.1 / w.2) {
                    worst = Some(c);
                }
            }
            if transport_bound(g, &h, s.dt).is_some() {
                lines.push(format!("block ({}, {}) violates the transport bound", i + 1, j + 1));
            }
        }
    }
    let phase = (
        "phase resolution: dt max|dv| max|V_cm| / hbar",
        s.dt * s.observable.max_gap() * s.coupling.max_abs(g) / s.hbar,
        PHASE_BOUND,
    );
    let _ = writeln!(out, "stability:");
    if let Some(w) = worst {
        let _ = writeln!(out, "  {} = {} (limit {})", w.0, w.1, w.2);
    }
    let _ = writeln!(out, "  {} = {} (limit {})", phase.0, phase.1, phase.2);
    let binding = match worst {
        Some(w) if w.1 / w.2 >= phase.1 / phase.2 => w.0,
        _ => phase.0,
    };
    let _ = writeln!(out, "  binding constraint: {binding}");
    for l in lines {
        let _ = writeln!(out, "  {l}");
    }
    let values = d * d * g.len();
    let _ = writeln!(
        out,
        "memory: d^2 n_q n_p = {values} complex values per buffer ({} reals, {} bytes)",
        2 * values,
        16 * values
    );

    if cfg.mode == Mode::Study {
        let st = StudySettings::default();
        let _ = writeln!(out, "planned jobs: {}", cfg.sigmas.len());
        for (k, sigma) in cfg.sigmas.iter().enumerate() {
            let _ = writeln!(
                out,
                "  job {}: sigma = {sigma} (onset run at {} cells/sigma, half-time run at {:?} cells/sigma, node budget {})",
                k + 1,
                st.onset_cells_per_sigma,
                st.half_time_cells_per_sigma,
                st.node_cap
            );
        }
    } else {
        let steps = step_count(s.t_final, s.dt);
        let ticks = 1 + steps / s.cadence + usize::from(steps % s.cadence != 0);
        let _ = writeln!(out, "steps: {steps} (dt = {}, t_final = {}), diagnostics ticks: {ticks}", s.dt, s.t_final);
    }
    out
}
