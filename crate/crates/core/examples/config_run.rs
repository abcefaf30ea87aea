//! Parse a config, print the plan, and run it into a temporary directory.

use hybrid_dynamics::cli::{describe, parse_config, run};

const CONFIG: &str = "
[quantum]
amplitudes = 0.6,0; 0,0.8
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
name = example
dt = 0.03125
t_final = 0.5
cadence = 4
positivity = collapse

[output]
dir = placeholder
";

fn main() -> hybrid_dynamics::Result<()> {
    let mut cfg = parse_config(CONFIG)?;
    cfg.output.dir = std::env::temp_dir().join("hybrid-sim-example");
    print!("{}", describe(&cfg));
    let out = run(&cfg)?;
    println!("exit code {}", out.exit_code);
    for f in &out.files {
        println!("  {}", f.display());
    }
    let diag = std::fs::read_to_string(cfg.output.dir.join("diagnostics.csv")).unwrap();
    print!("{diag}");
    Ok(())
}
