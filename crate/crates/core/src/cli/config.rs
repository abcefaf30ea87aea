use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ini::Ini;
use num_complex::Complex64;

use crate::collapse::{check_sigmas, MeasurementScenario};
use crate::error::{Error, Result};
use crate::hybrid::{PositivityPolicy, DEFAULT_TOL_PSD};
use crate::phase_space::{ClassicalHamiltonian, PhaseGrid};
use crate::quantum::MeasuredObservable;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    /// Noncorrelated product start.
    Evolve,
    /// Correlated start with every block at its own characteristic.
    Ansatz,
    /// Coherence-free mixture along the pointer trajectories.
    Collapsed,
    /// Shrinking-width sweep.
    Study,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Evolve => "evolve",
            Mode::Ansatz => "ansatz",
            Mode::Collapsed => "collapsed",
            Mode::Study => "study",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub diagnostics: bool,
    pub snapshots: bool,
    /// Snapshot every this many diagnostics ticks.
    pub snapshot_cadence: usize,
    pub violation_report: bool,
    pub study_table: bool,
}

/// Validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub mode: Mode,
    pub scenario: MeasurementScenario,
    pub policy: PositivityPolicy,
    pub tol_psd: f64,
    /// Time at which the ansatz and collapsed modes place their packets.
    pub ansatz_time: f64,
    pub sigmas: Vec<f64>,
    /// Coupling as written: kind, scale and polynomial terms.
    pub coupling_spec: (String, f64, Option<String>),
    pub output: OutputConfig,
    /// Non-fatal adjustments made while parsing.
    pub notices: Vec<String>,
    /// Keys present in the input, as `(section, key)`.
    pub user_keys: Vec<(String, String)>,
}

const SECTIONS: [&str; 4] = ["quantum", "classical", "run", "output"];

const KEYS: [(&str, &[&str]); 4] = [
    ("quantum", &["amplitudes", "eigenvalues"]),
    (
        "classical",
        &[
            "q_min",
            "q_max",
            "p_min",
            "p_max",
            "n_q",
            "n_p",
            "q0",
            "p0",
            "sigma_q",
            "sigma_p",
            "coupling",
            "coupling_scale",
            "coupling_terms",
        ],
    ),
    (
        "run",
        &[
            "name",
            "mode",
            "dt",
            "t_final",
            "cadence",
            "hbar",
            "tol_psd",
            "positivity",
            "ansatz_time",
            "sigmas",
        ],
    ),
    (
        "output",
        &[
            "dir",
            "diagnostics",
            "snapshots",
            "snapshot_cadence",
            "violation_report",
            "study_table",
        ],
    ),
];

/// Reads and parses a config file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

struct Fields<'a> {
    map: BTreeMap<(String, String), String>,
    errors: &'a mut Vec<String>,
}

impl Fields<'_> {
    fn raw(&self, sec: &str, key: &str) -> Option<&str> {
        self.map.get(&(sec.to_string(), key.to_string())).map(String::as_str)
    }

    fn parse<T: std::str::FromStr>(&mut self, sec: &str, key: &str, default: Option<T>) -> Option<T> {
        match self.raw(sec, key) {
            Some(v) => match v.trim().parse::<T>() {
                Ok(x) => Some(x),
                Err(_) => {
                    self.errors.push(format!("[{sec}] {key}: cannot parse {v:?}"));
                    None
                }
            },
            None => {
                if default.is_none() {
                    self.errors.push(format!("[{sec}] missing key {key}"));
                }
                default
            }
        }
    }

    fn required<T: std::str::FromStr>(&mut self, sec: &str, key: &str) -> Option<T> {
        self.parse(sec, key, None)
    }

    fn list(&mut self, sec: &str, key: &str, required: bool) -> Option<Vec<f64>> {
        let Some(v) = self.raw(sec, key).map(str::to_string) else {
            if required {
                self.errors.push(format!("[{sec}] missing key {key}"));
            }
            return None;
        };
        let parsed: std::result::Result<Vec<f64>, _> = v.split(',').map(|x| x.trim().parse::<f64>()).collect();
        match parsed {
            Ok(xs) if !xs.is_empty() => Some(xs),
            _ => {
                self.errors.push(format!("[{sec}] {key}: expected comma-separated numbers, got {v:?}"));
                None
            }
        }
    }
}

/// Parses an INI-style config. All problems are collected into one
/// [`Error::Config`].
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let ini = Ini::load_from_str(text).map_err(|e| Error::Config(vec![format!("syntax: {e}")]))?;
    let mut errors = Vec::new();
    let mut map = BTreeMap::new();
    let mut user_keys = Vec::new();
    for (sec, props) in ini.iter() {
        let Some(sec) = sec else {
            for (k, _) in props.iter() {
                errors.push(format!("key {k:?} outside any section"));
            }
            continue;
        };
        let Some((_, allowed)) = KEYS.iter().find(|(s, _)| *s == sec) else {
            errors.push(format!("unknown section [{sec}]"));
            continue;
        };
        for (k, v) in props.iter() {
            if !allowed.contains(&k) {
                errors.push(format!("[{sec}] unknown key {k}"));
            } else if map.insert((sec.to_string(), k.to_string()), v.to_string()).is_some() {
                errors.push(format!("[{sec}] duplicate key {k}"));
            } else {
                user_keys.push((sec.to_string(), k.to_string()));
            }
        }
    }
    for sec in SECTIONS {
        if ini.section(Some(sec)).is_none() {
            errors.push(format!("missing section [{sec}]"));
        }
    }
    let mut f = Fields { map, errors: &mut errors };
    let mut notices = Vec::new();

    // [quantum]
    let amplitudes = match f.raw("quantum", "amplitudes").map(str::to_string) {
        None => {
            f.errors.push("[quantum] missing key amplitudes".into());
            None
        }
        Some(v) => parse_amplitudes(&v, &mut notices).map_err(|e| f.errors.push(e)).ok(),
    };
    let eigenvalues = f.list("quantum", "eigenvalues", true);

    // [classical]
    let q_min: Option<f64> = f.required("classical", "q_min");
    let q_max: Option<f64> = f.required("classical", "q_max");
    let p_min: Option<f64> = f.required("classical", "p_min");
    let p_max: Option<f64> = f.required("classical", "p_max");
    let n_q: Option<usize> = f.required("classical", "n_q");
    let n_p: Option<usize> = f.required("classical", "n_p");
    let q0: Option<f64> = f.required("classical", "q0");
    let p0: Option<f64> = f.required("classical", "p0");
    let sigma_q: Option<f64> = f.required("classical", "sigma_q");
    let sigma_p: Option<f64> = f.required("classical", "sigma_p");
    let kind: Option<String> = f.required("classical", "coupling");
    let scale: Option<f64> = f.parse("classical", "coupling_scale", Some(1.0));
    let terms = f.raw("classical", "coupling_terms").map(str::to_string);
    let coupling = match (kind.as_deref(), scale) {
        (Some(k), Some(scale)) => parse_coupling(k, scale, terms.as_deref()).map_err(|e| f.errors.push(e)).ok(),
        _ => None,
    };
    if terms.is_some() && kind.as_deref() != Some("polynomial") {
        f.errors.push("[classical] coupling_terms only applies to coupling = polynomial".into());
    }

    // [run]
    let name: Option<String> = f.parse("run", "name", Some("scenario".to_string()));
    let mode = match f.parse::<String>("run", "mode", Some("evolve".into())).as_deref() {
        Some("evolve") => Some(Mode::Evolve),
        Some("ansatz") => Some(Mode::Ansatz),
        Some("collapsed") => Some(Mode::Collapsed),
        Some("study") => Some(Mode::Study),
        Some(other) => {
            f.errors.push(format!("[run] mode: expected evolve|ansatz|collapsed|study, got {other:?}"));
            None
        }
        None => None,
    };
    let dt: Option<f64> = f.required("run", "dt");
    let t_final: Option<f64> = f.required("run", "t_final");
    let cadence: Option<usize> = f.parse("run", "cadence", Some(1));
    let hbar: Option<f64> = f.parse("run", "hbar", Some(1.0));
    let tol_psd: Option<f64> = f.parse("run", "tol_psd", Some(DEFAULT_TOL_PSD));
    let policy = match f.parse::<String>("run", "positivity", Some("report".into())).as_deref() {
        Some("report") => Some(PositivityPolicy::Report),
        Some("collapse") => Some(PositivityPolicy::Collapse),
        Some(other) => {
            f.errors.push(format!("[run] positivity: expected report|collapse, got {other:?}"));
            None
        }
        None => None,
    };
    let ansatz_time: Option<f64> = f.parse("run", "ansatz_time", Some(0.0));
    let sigmas = f.list("run", "sigmas", mode == Some(Mode::Study));
    if let Some(s) = &sigmas {
        if let Err(e) = check_sigmas(s) {
            f.errors.push(format!("[run] sigmas: {e}"));
        }
    }
    if let Some(t) = tol_psd {
        if !(t > 0.0 && t.is_finite()) {
            f.errors.push(format!("[run] tol_psd must be positive, got {t}"));
        }
    }

    // [output]
    let dir: Option<String> = f.parse("output", "dir", Some("out".into()));
    let diagnostics: Option<bool> = f.parse("output", "diagnostics", Some(true));
    let snapshots: Option<bool> = f.parse("output", "snapshots", Some(false));
    let snapshot_cadence: Option<usize> = f.parse("output", "snapshot_cadence", Some(1));
    let violation_report: Option<bool> = f.parse("output", "violation_report", Some(true));
    let study_table: Option<bool> = f.parse("output", "study_table", Some(true));
    if snapshot_cadence == Some(0) {
        f.errors.push("[output] snapshot_cadence must be at least 1".into());
    }

    if !errors.is_empty() {
        return Err(Error::Config(errors));
    }
    // every field parsed; assemble and run the physics checks
    let (amplitudes, eigenvalues, coupling) = (amplitudes.unwrap(), eigenvalues.unwrap(), coupling.unwrap());
    let mode = mode.unwrap();
    let scenario = (|| -> Result<MeasurementScenario> {
        let grid = PhaseGrid::new(q_min.unwrap(), q_max.unwrap(), p_min.unwrap(), p_max.unwrap(), n_q.unwrap(), n_p.unwrap())?;
        let s = MeasurementScenario {
            amplitudes,
            observable: MeasuredObservable::new(eigenvalues)?,
            coupling,
            start: (q0.unwrap(), p0.unwrap()),
            sigma: (sigma_q.unwrap(), sigma_p.unwrap()),
            grid,
            dt: dt.unwrap(),
            t_final: t_final.unwrap(),
            cadence: cadence.unwrap(),
            hbar: hbar.unwrap(),
        };
        s.validate()?;
        Ok(s)
    })()
    .map_err(|e| Error::Config(vec![e.to_string()]))?;
    let ansatz_time = ansatz_time.unwrap();
    if matches!(mode, Mode::Ansatz | Mode::Collapsed) && !(0.0..=scenario.t_final).contains(&ansatz_time) {
        return Err(Error::Config(vec![format!(
            "[run] ansatz_time {ansatz_time} outside [0, t_final = {}]",
            scenario.t_final
        )]));
    }
    if matches!(mode, Mode::Ansatz | Mode::Collapsed) {
        let on_path = scenario.trajectories().and_then(|ts| ts[0].at(ansatz_time).map(|_| ()));
        if on_path.is_err() {
            return Err(Error::Config(vec![format!(
                "[run] ansatz_time {ansatz_time} is not a step time (a multiple of dt = {}, or t_final)",
                scenario.dt
            )]));
        }
    }

    Ok(RunConfig {
        name: name.unwrap(),
        mode,
        scenario,
        policy: policy.unwrap(),
        tol_psd: tol_psd.unwrap(),
        ansatz_time,
        sigmas: sigmas.unwrap_or_default(),
        coupling_spec: (kind.unwrap(), scale.unwrap(), terms),
        output: OutputConfig {
            dir: PathBuf::from(dir.unwrap()),
            diagnostics: diagnostics.unwrap(),
            snapshots: snapshots.unwrap(),
            snapshot_cadence: snapshot_cadence.unwrap(),
            violation_report: violation_report.unwrap(),
            study_table: study_table.unwrap(),
        },
        notices,
        user_keys,
    })
}

/// `re,im; re,im; ...`, normalized with a notice when needed.
fn parse_amplitudes(v: &str, notices: &mut Vec<String>) -> std::result::Result<Vec<Complex64>, String> {
    let mut out = Vec::new();
    for pair in v.split(';') {
        let parts: Vec<&str> = pair.split(',').map(str::trim).collect();
        let parsed = match parts.as_slice() {
            [re, im] => re.parse::<f64>().ok().zip(im.parse::<f64>().ok()),
            _ => None,
        };
        match parsed {
            Some((re, im)) if re.is_finite() && im.is_finite() => out.push(Complex64::new(re, im)),
            _ => return Err(format!("[quantum] amplitudes: expected `re,im; re,im; ...`, got {v:?}")),
        }
    }
    let norm: f64 = out.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 0.0) {
        return Err("[quantum] amplitudes: zero vector cannot be normalized".into());
    }
    if (norm * norm - 1.0).abs() > crate::collapse::AMPLITUDE_TOL {
        notices.push(format!("amplitudes rescaled by 1/{norm} to unit norm"));
        out.iter_mut().for_each(|c| *c /= norm);
    }
    Ok(out)
}

fn parse_coupling(kind: &str, scale: f64, terms: Option<&str>) -> std::result::Result<ClassicalHamiltonian, String> {
    let base = match kind {
        "p" => ClassicalHamiltonian::linear_p(1.0),
        "q" => ClassicalHamiltonian::linear_q(1.0),
        "harmonic" => ClassicalHamiltonian::harmonic(),
        "zero" => ClassicalHamiltonian::zero(),
        "polynomial" => {
            let terms = terms.ok_or("[classical] coupling = polynomial needs coupling_terms")?;
            let mut list = Vec::new();
            for t in terms.split(';') {
                let parts: Vec<&str> = t.split_whitespace().collect();
                let parsed = match parts.as_slice() {
                    [a, b, c] => match (a.parse::<u32>(), b.parse::<u32>(), c.parse::<f64>()) {
                        (Ok(a), Ok(b), Ok(c)) => Some((a, b, c)),
                        _ => None,
                    },
                    _ => None,
                };
                list.push(parsed.ok_or_else(|| {
                    format!("[classical] coupling_terms: expected `deg_q deg_p coeff; ...`, got {terms:?}")
                })?);
            }
            ClassicalHamiltonian::polynomial(list).map_err(|e| format!("[classical] coupling_terms: {e}"))?
        }
        other => return Err(format!("[classical] coupling: expected p|q|harmonic|zero|polynomial, got {other:?}")),
    };
    if !scale.is_finite() {
        return Err(format!("[classical] coupling_scale must be finite, got {scale}"));
    }
    Ok(base.scaled(scale))
}

impl RunConfig {
    /// Resolved value of every known key, in config syntax.
    pub fn resolved(&self) -> Vec<(&'static str, &'static str, String)> {
        let s = &self.scenario;
        let g = &s.grid;
        let join = |xs: &[f64]| xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
        let amps = s
            .amplitudes
            .iter()
            .map(|c| format!("{},{}", c.re, c.im))
            .collect::<Vec<_>>()
            .join("; ");
        let mut out = vec![
            ("quantum", "amplitudes", amps),
            ("quantum", "eigenvalues", join(s.observable.eigenvalues())),
            ("classical", "q_min", g.q_min().to_string()),
            ("classical", "q_max", g.q_max().to_string()),
            ("classical", "p_min", g.p_min().to_string()),
            ("classical", "p_max", g.p_max().to_string()),
            ("classical", "n_q", g.n_q().to_string()),
            ("classical", "n_p", g.n_p().to_string()),
            ("classical", "q0", s.start.0.to_string()),
            ("classical", "p0", s.start.1.to_string()),
            ("classical", "sigma_q", s.sigma.0.to_string()),
            ("classical", "sigma_p", s.sigma.1.to_string()),
            ("classical", "coupling", self.coupling_spec.0.clone()),
            ("classical", "coupling_scale", self.coupling_spec.1.to_string()),
            ("run", "name", self.name.clone()),
            ("run", "mode", self.mode.name().to_string()),
            ("run", "dt", s.dt.to_string()),
            ("run", "t_final", s.t_final.to_string()),
            ("run", "cadence", s.cadence.to_string()),
            ("run", "hbar", s.hbar.to_string()),
            ("run", "tol_psd", self.tol_psd.to_string()),
            (
                "run",
                "positivity",
                match self.policy {
                    PositivityPolicy::Report => "report",
                    PositivityPolicy::Collapse => "collapse",
                }
                .to_string(),
            ),
            ("run", "ansatz_time", self.ansatz_time.to_string()),
            ("output", "dir", self.output.dir.display().to_string()),
            ("output", "diagnostics", self.output.diagnostics.to_string()),
            ("output", "snapshots", self.output.snapshots.to_string()),
            ("output", "snapshot_cadence", self.output.snapshot_cadence.to_string()),
            ("output", "violation_report", self.output.violation_report.to_string()),
            ("output", "study_table", self.output.study_table.to_string()),
        ];
        if let Some(t) = &self.coupling_spec.2 {
            let k = out.iter().position(|e| e.1 == "coupling_scale").unwrap() + 1;
            out.insert(k, ("classical", "coupling_terms", t.trim().to_string()));
        }
        if !self.sigmas.is_empty() {
            let k = out.iter().position(|e| e.1 == "ansatz_time").unwrap() + 1;
            out.insert(k, ("run", "sigmas", join(&self.sigmas)));
        }
        out
    }
}
