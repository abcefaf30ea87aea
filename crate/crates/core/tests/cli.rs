use std::path::Path;
use std::process::Command;

use hybrid_dynamics::cli::{describe, parse_config, run, EXIT_FAILURE, EXIT_OK, EXIT_VIOLATION};
use hybrid_dynamics::Error;
use proptest::prelude::*;

const BASE: &str = "
[quantum]
amplitudes = 1,0; 1,0
eigenvalues = 1, -1

[classical]
q_min = -2.5
q_max = 2.5
p_min = -2
p_max = 2
n_q = 160
n_p = 128
q0 = 0
p0 = 0
sigma_q = 0.25
sigma_p = 0.25
coupling = p

[run]
dt = 0.03125
t_final = 0.5

[output]
dir = out
";

fn with(extra_run: &str) -> String {
    BASE.replace("[run]\n", &format!("[run]\n{extra_run}\n"))
}

fn bin(args: &[&str], dir: &Path) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_hybrid-sim"))
        .args(args)
        .current_dir(dir)
        .env("HYBRID_SIM_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn minimal_config_echoes_defaults_and_normalizes() {
    let cfg = parse_config(BASE).unwrap();
    assert_eq!(cfg.tol_psd, hybrid_dynamics::hybrid::DEFAULT_TOL_PSD);
    assert_eq!(cfg.scenario.cadence, 1);
    let h = std::f64::consts::FRAC_1_SQRT_2;
    assert!(cfg.scenario.amplitudes.iter().all(|c| (c.re - h).abs() < 1e-15 && c.im == 0.0));
    assert_eq!(cfg.notices.len(), 1);
}

#[test]
fn all_errors_are_listed() {
    let text = BASE
        .replace("dt = 0.03125\n", "")
        .replace("coupling = p", "coupling = p\ncolour = red")
        .replace("[output]", "[extra]\nx = 1\n[output]");
    let Err(Error::Config(errs)) = parse_config(&text) else {
        panic!("expected a config error");
    };
    assert_eq!(errs.len(), 3, "{errs:?}");
    assert!(errs.iter().any(|e| e.contains("missing key dt")));
    assert!(errs.iter().any(|e| e.contains("unknown key colour")));
    assert!(errs.iter().any(|e| e.contains("unknown section [extra]")));
    assert!(matches!(parse_config(&BASE.replace("1,0; 1,0", "0,0; 0,0")), Err(Error::Config(_))));
    assert!(matches!(parse_config(&BASE.replace("[output]\ndir = out", "")), Err(Error::Config(_))));
}

#[test]
fn physics_checks_run_before_any_compute() {
    // one cell per sigma
    let coarse = BASE.replace("n_q = 160", "n_q = 20").replace("n_p = 128", "n_p = 16");
    assert!(matches!(parse_config(&coarse), Err(Error::Config(_))));
    let fast = with("").replace("dt = 0.03125", "dt = 0.5");
    let Err(Error::Config(errs)) = parse_config(&fast) else {
        panic!("expected a stability error");
    };
    assert!(errs[0].contains("transport") || errs[0].contains("phase"), "{errs:?}");
}

#[test]
fn describe_reports_memory_jobs_and_binding_constraint() {
    let text = with("mode = study\nsigmas = 0.4, 0.2, 0.1, 0.05");
    let cfg = parse_config(&text).unwrap();
    let out = describe(&cfg);
    assert!(out.contains("planned jobs: 4"));
    assert_eq!(out.matches("  job ").count(), 4);

    let big = BASE
        .replace("n_q = 160", "n_q = 256")
        .replace("n_p = 128", "n_p = 256")
        .replace("q_min = -2.5", "q_min = -4")
        .replace("q_max = 2.5", "q_max = 4")
        .replace("p_min = -2", "p_min = -4")
        .replace("p_max = 2", "p_max = 4");
    let out = describe(&parse_config(&big).unwrap());
    let values = 4 * 256 * 256;
    assert!(out.contains(&format!("{values} complex values")));
    assert!(out.contains(&format!("{} reals", 2 * values)));
    assert!(out.contains("binding constraint: transport CFL in q"));
    assert!(out.contains("steps: 16"));
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = tmp.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };

    // pointer scenario: a violation is a finding
    let p = write("pointer.ini", BASE);
    let out = bin(&["simulate", p.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_VIOLATION));
    let report = std::fs::read_to_string(tmp.path().join("out/violation.csv")).unwrap();
    assert_eq!(report.lines().count(), 2);

    // collapsed mixture: clean
    let p = write("mixture.ini", &with("mode = collapsed\nansatz_time = 0.125").replace("dir = out", "dir = mix"));
    let out = bin(&["simulate", p.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    let report = std::fs::read_to_string(tmp.path().join("mix/violation.csv")).unwrap();
    assert_eq!(report.lines().count(), 1);

    // unresolvable width: fails before stepping, nothing written
    let p = write("coarse.ini", &BASE.replace("n_q = 160", "n_q = 20").replace("dir = out", "dir = never"));
    let out = bin(&["simulate", p.to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_FAILURE));
    assert!(!tmp.path().join("never").exists());

    let out = bin(&["describe", tmp.path().join("pointer.ini").to_str().unwrap()], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_OK));
    assert!(String::from_utf8_lossy(&out.stdout).contains("binding constraint"));

    let out = bin(&["simulate", "missing.ini"], tmp.path());
    assert_eq!(out.status.code(), Some(EXIT_FAILURE));
}

#[test]
fn overlong_horizon_is_an_error() {
    // horizon stretched past what the grid was validated for: the
    // branches run into the seam
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(BASE).unwrap();
    cfg.output.dir = tmp.path().to_path_buf();
    cfg.scenario.t_final = 2.5;
    let err = run(&cfg).unwrap_err();
    assert!(
        matches!(err, Error::BoundaryContamination { .. } | Error::OutsideGrid { .. }),
        "{err:?}"
    );
}

#[test]
fn bad_thread_override_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let p = tmp.path().join("pointer.ini");
    std::fs::write(&p, BASE).unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_hybrid-sim"))
        .args(["describe", p.to_str().unwrap()])
        .env("HYBRID_SIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_FAILURE));
}

#[test]
fn snapshots_follow_their_cadence() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = parse_config(&BASE.replace("dir = out", "dir = out\nsnapshots = true\nsnapshot_cadence = 5")).unwrap();
    cfg.output.dir = tmp.path().to_path_buf();
    let out = run(&cfg).unwrap();
    let snaps: Vec<_> = out
        .files
        .iter()
        .filter(|p| p.file_name().unwrap().to_string_lossy().starts_with("snapshot_"))
        .collect();
    // 17 ticks, every fifth one
    assert_eq!(snaps.len(), 4);
    let f = std::fs::File::open(snaps[1]).unwrap();
    let (state, t) = hybrid_dynamics::cli::read_hybrid(std::io::BufReader::new(f), 1.0).unwrap();
    assert_eq!(t, 5.0 * 0.03125);
    assert_eq!(state.dim(), 2);
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn describe_contains_every_user_key(
        cadence in 1usize..20,
        tol in 1e-9f64..1e-3,
        hbar in 0.5f64..2.0,
        scale in 0.5f64..1.0,
        collapse in any::<bool>(),
    ) {
        let extra = format!(
            "cadence = {cadence}\ntol_psd = {tol}\nhbar = {hbar}\npositivity = {}",
            if collapse { "collapse" } else { "report" }
        );
        let text = with(&extra).replace("coupling = p", &format!("coupling = p\ncoupling_scale = {scale}"));
        let cfg = parse_config(&text).unwrap();
        let out = describe(&cfg);
        for (sec, key) in &cfg.user_keys {
            let value = cfg.resolved().into_iter().find(|(s, k, _)| s == sec && k == key).unwrap().2;
            let line = format!("  {key} = {value}");
            prop_assert!(out.lines().any(|l| l == line), "missing {line:?}");
        }
        let (want_cadence, want_tol) = (format!("  cadence = {cadence}\n"), format!("  tol_psd = {tol}\n"));
        prop_assert!(out.contains(&want_cadence));
        prop_assert!(out.contains(&want_tol));

        // resolved values parse back to the same configuration
        let mut ini = String::new();
        let mut current = "";
        for (sec, key, value) in cfg.resolved() {
            if sec != current {
                ini.push_str(&format!("[{sec}]\n"));
                current = sec;
            }
            ini.push_str(&format!("{key} = {value}\n"));
        }
        let back = parse_config(&ini).unwrap();
        prop_assert_eq!(back.resolved(), cfg.resolved());
    }
}
