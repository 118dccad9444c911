//! End-to-end runs of the binary: exit codes, messages and CSV contents.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const LASSO: &str = "\
# minimize (1/2)(x - 4)^2 + |x|
[primal]
dim = 1
h = quadratic
h.center = 4
[block]
dim = 1
g = l1
[stop]
tol = 1e-13
";

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_splitsolve"));
    c.env_remove("SPLITSOLVE_SEED");
    c
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn footer(csv: &str, key: &str) -> String {
    let prefix = format!("# {key} = ");
    csv.lines()
        .find_map(|l| l.strip_prefix(&prefix))
        .unwrap_or_else(|| panic!("no '{key}' in footer"))
        .to_string()
}

fn solve(cfg: &Path, extra: &[&str]) -> (Output, String) {
    let out = cfg.with_extension("csv");
    let o = bin().arg("solve").arg(cfg).arg("-o").arg(&out).args(extra).output().unwrap();
    (o, fs::read_to_string(out).unwrap_or_default())
}

#[test]
fn lasso_converges_to_three() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = solve(&write(&dir, "lasso.cfg", LASSO), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(footer(&csv, "termination"), "converged");
    let x: f64 = footer(&csv, "x").parse().unwrap();
    assert!((x - 3.0).abs() <= 1e-6, "x = {x}");
    assert!(csv.starts_with("iter,step_norm,kkt_residual,primal_obj,dual_obj,gap,wall_ms\n"));
    // wall_ms stays blank without --timing
    let row = csv.lines().nth(1).unwrap();
    assert!(row.ends_with(','), "{row}");
    assert_eq!(row.split(',').count(), 7);
}

#[test]
fn csv_goes_to_stdout_without_out_path() {
    let dir = TempDir::new().unwrap();
    let o = bin().arg("solve").arg(write(&dir, "lasso.cfg", LASSO)).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# termination = converged"));
}

#[test]
fn timing_fills_wall_ms() {
    let dir = TempDir::new().unwrap();
    let (o, csv) = solve(&write(&dir, "lasso.cfg", LASSO), &["--timing"]);
    assert_eq!(o.status.code(), Some(0));
    let row = csv.lines().nth(1).unwrap();
    assert!(!row.ends_with(','), "{row}");
}

#[test]
fn auto_steps_are_echoed() {
    let dir = TempDir::new().unwrap();
    let manual = format!("{LASSO}[steps]\nmode = manual\ntau = 0.1\nsigma = 0.1\n");
    let (o, csv) = solve(&write(&dir, "lasso.cfg", &manual), &["--steps", "auto"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    // β = 1, ‖L‖ = 1: τ = σ = 0.99 / (1/2 + 1)
    let tau: f64 = footer(&csv, "tau").parse().unwrap();
    assert!((tau - 0.66).abs() < 1e-15, "tau = {tau}");
    assert!(stderr(&o).contains("steps: auto (safety 0.99), tau = 6.6"), "{}", stderr(&o));
}

#[test]
fn inadmissible_steps_are_refused_unless_unsafe() {
    let dir = TempDir::new().unwrap();
    let text = format!("{LASSO}[steps]\nmode = manual\ntau = 1\nsigma = 1\n");
    let cfg = write(&dir, "bad.cfg", &text);
    let (o, _) = solve(&cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    let msg = stderr(&o);
    assert!(msg.contains("refused") && msg.contains("admissible = false"), "{msg}");
    assert!(msg.contains("rho = 0.0"), "{msg}");
    let (o, csv) = solve(&cfg, &["--unsafe-steps"]);
    assert_ne!(o.status.code(), Some(1), "{}", stderr(&o));
    assert_eq!(footer(&csv, "admissible"), "false");
}

#[test]
fn max_iter_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let text = LASSO.replace("tol = 1e-13", "tol = 1e-13\nmax_iter = 3");
    let (o, csv) = solve(&write(&dir, "short.cfg", &text), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(footer(&csv, "termination"), "max_iter");
    assert_eq!(footer(&csv, "iterations"), "3");
}

#[test]
fn divergence_exits_with_three() {
    let dir = TempDir::new().unwrap();
    let text = format!("{LASSO}[steps]\nmode = manual\ntau = 1000\nsigma = 0.001\n");
    let (o, csv) = solve(&write(&dir, "wild.cfg", &text), &["--unsafe-steps"]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert_eq!(footer(&csv, "termination"), "diverged");
}

#[test]
fn config_errors_are_line_anchored() {
    let dir = TempDir::new().unwrap();
    let cfg = write(&dir, "typo.cfg", &LASSO.replace("g = l1", "g = l1\nweigth = 1"));
    let (o, _) = solve(&cfg, &[]);
    assert_eq!(o.status.code(), Some(1));
    let expected = format!("{}:9: unknown key 'weigth' in [block]", cfg.display());
    assert!(stderr(&o).contains(&expected), "{}", stderr(&o));

    let o = bin().arg("solve").arg(dir.path().join("missing.cfg")).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_arguments_exit_with_one() {
    let o = bin().args(["solve"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().args(["--help"]).output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

const TWO_BLOCKS: &str = "\
[primal]
dim = 1
[block]
dim = 1
weight = 0.5
[block]
dim = 1
weight = 0.5
[steps]
mode = manual
tau = 0.25
sigma = 0.25
";

#[test]
fn check_prints_rho_for_the_two_block_example() {
    let dir = TempDir::new().unwrap();
    let o = bin().arg("check").arg(write(&dir, "two.cfg", TWO_BLOCKS)).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l == "rho = 3.0"), "{text}");
    assert!(text.contains("block 1: ‖L‖ ≤ 1.0"), "{text}");
    assert!(text.contains("qualification: satisfied"), "{text}");
}

#[test]
fn check_names_the_weight_invariant() {
    let dir = TempDir::new().unwrap();
    let text = TWO_BLOCKS.replacen("weight = 0.5", "weight = 0.7", 1);
    let o = bin().arg("check").arg(write(&dir, "w.cfg", &text)).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("weights sum to"), "{}", stderr(&o));
}

#[test]
fn diag_passes_on_an_admissible_config() {
    let dir = TempDir::new().unwrap();
    let o = bin().arg("diag").arg(write(&dir, "lasso.cfg", LASSO)).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    for name in ["skew(S): PASS", "strong-positivity(V): PASS", "cocoercive(Q): PASS"] {
        assert!(text.contains(name), "{text}");
    }
}

#[test]
fn diag_flags_an_overstated_mu() {
    let dir = TempDir::new().unwrap();
    let text = LASSO.replace("h.center = 4", "h.center = 4\nh.mu = 3");
    let o = bin().arg("diag").arg(write(&dir, "mu.cfg", &text)).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("cocoercive(Q): FAIL"), "{text}");
    assert!(text.contains("skew(S): PASS"), "{text}");
}

#[test]
fn diag_reports_nonpositive_rho_for_inadmissible_steps() {
    let dir = TempDir::new().unwrap();
    let text = format!("{LASSO}[steps]\nmode = manual\ntau = 2\nsigma = 1\n");
    let o = bin().arg("diag").arg(write(&dir, "bad.cfg", &text)).output().unwrap();
    assert_eq!(o.status.code(), Some(2));
    let text = stdout(&o);
    assert!(text.contains("strong-positivity(V): FAIL") && text.contains("≤ 0"), "{text}");
}

#[test]
fn bench_rejects_unknown_suites() {
    let dir = TempDir::new().unwrap();
    let o = bin().args(["bench", "nope", "-o"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("unknown suite 'nope'"));
}

#[test]
fn bench_fb_reduction_prints_its_verdict() {
    let dir = TempDir::new().unwrap();
    let o = bin().args(["bench", "fb-reduction", "-o"]).arg(dir.path()).output().unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.lines().any(|l| l.starts_with("[1] max deviation vs forward-backward:") && l.ends_with("≤ 1e-12: PASS")), "{text}");
    assert!(dir.path().join("fb-reduction.csv").exists());
}

#[test]
fn seed_override_changes_error_draws_only() {
    let dir = TempDir::new().unwrap();
    let text = format!("seed = 1\n{LASSO}[errors]\nkind = geometric\namplitude = 0.1\ndecay = 0.5\n");
    let cfg = write(&dir, "err.cfg", &text);
    let run = |seed: Option<&str>| {
        let mut c = bin();
        c.arg("solve").arg(&cfg);
        if let Some(s) = seed {
            c.env("SPLITSOLVE_SEED", s);
        }
        let o = c.output().unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        stdout(&o)
    };
    assert_eq!(run(None), run(Some("1")));
    assert_ne!(run(None), run(Some("2")));
    let o = bin().arg("solve").arg(&cfg).env("SPLITSOLVE_SEED", "x").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}
