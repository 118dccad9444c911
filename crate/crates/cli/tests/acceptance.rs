//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! followed by the individual checks behind it.
//!
//! Run with `cargo test -p splitsolve-cli --test acceptance -- --nocapture`
//! to see the lines.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::OnceLock;

use splitsolve_cli::suites::{
    fused_lasso_config, fused_lasso_errors_config, huber_config, operator_certificates, run_suite,
    step_admissibility, tv1d_config, Outcome, SuiteOutput, SUITES,
};

fn suites() -> &'static [SuiteOutput] {
    static ALL: OnceLock<Vec<SuiteOutput>> = OnceLock::new();
    ALL.get_or_init(|| {
        SUITES
            .iter()
            .map(|s| run_suite(s).expect("known suite"))
            .collect()
    })
}

fn outcomes_for(criterion: u8) -> Vec<Outcome> {
    suites()
        .iter()
        .flat_map(|s| s.outcomes.iter())
        .filter(|o| o.criterion == criterion)
        .cloned()
        .collect()
}

fn report(criterion: u8, title: &str, outcomes: &[Outcome]) {
    let passed = !outcomes.is_empty() && outcomes.iter().all(|o| o.passed);
    println!(
        "criterion {criterion} ({title}): {}",
        if passed { "PASS" } else { "FAIL" }
    );
    for o in outcomes {
        println!("    {o}");
    }
    assert!(passed, "criterion {criterion} failed");
}

#[test]
fn criterion_01_forward_backward_equivalence() {
    report(1, "forward-backward equivalence", &outcomes_for(1));
}

#[test]
fn criterion_02_condat_reduction() {
    report(2, "Condat reduction", &outcomes_for(2));
}

#[test]
fn criterion_03_chambolle_pock_reduction() {
    report(3, "Chambolle–Pock reduction", &outcomes_for(3));
}

#[test]
fn criterion_04_tv_and_fused_lasso() {
    let all = outcomes_for(4);
    assert!(all.iter().any(|o| o.name.starts_with("tv1d")));
    assert!(all.iter().any(|o| o.name.starts_with("fusedlasso")));
    report(4, "TV-1D and fused lasso against long reference runs", &all);
}

#[test]
fn criterion_05_step_admissibility() {
    report(5, "step-size admissibility", &step_admissibility(1000));
}

#[test]
fn criterion_06_fejer_monotonicity() {
    let all = outcomes_for(6);
    // every error-free run: five suites, two runs in two of them
    assert_eq!(all.len(), 7);
    report(6, "Fejér monotonicity of error-free runs", &all);
}

#[test]
fn criterion_07_error_robustness() {
    report(7, "summable errors", &outcomes_for(7));
}

#[test]
fn criterion_08_strong_convergence() {
    report(8, "strong convergence, primal and dual", &outcomes_for(8));
}

#[test]
fn criterion_09_operator_certificates() {
    report(9, "operator certificates and mutations", &operator_certificates(100));
}

fn solve_twice(bin: &str, dir: &Path, name: &str, config: &str, seed: Option<&str>) -> Outcome {
    let cfg = dir.join(format!("{name}.cfg"));
    fs::write(&cfg, config).unwrap();
    let run = |tag: &str| {
        let out = dir.join(format!("{name}-{tag}.csv"));
        let mut cmd = Command::new(bin);
        cmd.arg("solve").arg(&cfg).arg("-o").arg(&out);
        match seed {
            Some(s) => cmd.env("SPLITSOLVE_SEED", s),
            None => cmd.env_remove("SPLITSOLVE_SEED"),
        };
        let status = cmd.status().unwrap();
        assert_eq!(status.code(), Some(0), "{name} did not converge");
        fs::read(out).unwrap()
    };
    let (a, b) = (run("a"), run("b"));
    let label = match seed {
        Some(s) => format!("{name} (SPLITSOLVE_SEED={s}): differing CSV bytes"),
        None => format!("{name}: differing CSV bytes"),
    };
    let differing = a.len().abs_diff(b.len()) + a.iter().zip(&b).filter(|(x, y)| x != y).count();
    Outcome::at_most(10, label, differing as f64, 0.0)
}

#[test]
fn criterion_10_determinism() {
    let bin = env!("CARGO_BIN_EXE_splitsolve");
    let dir = tempfile::tempdir().unwrap();
    let mut all = vec![
        solve_twice(bin, dir.path(), "tv1d", &tv1d_config().to_string(), None),
        solve_twice(bin, dir.path(), "huber", &huber_config().to_string(), None),
        solve_twice(bin, dir.path(), "fusedlasso", &fused_lasso_config().to_string(), None),
        solve_twice(bin, dir.path(), "fusedlasso-errors", &fused_lasso_errors_config().to_string(), None),
        solve_twice(bin, dir.path(), "fusedlasso-errors", &fused_lasso_errors_config().to_string(), Some("99")),
    ];
    for suite in ["fb-reduction", "condat-reduction", "project-intersection"] {
        let dirs = [dir.path().join(format!("{suite}-1")), dir.path().join(format!("{suite}-2"))];
        for d in &dirs {
            let status = Command::new(bin).args(["bench", suite, "-o"]).arg(d).status().unwrap();
            assert_eq!(status.code(), Some(0));
        }
        let mut names: Vec<_> = fs::read_dir(&dirs[0])
            .unwrap()
            .map(|e| e.unwrap().file_name())
            .collect();
        names.sort();
        for n in names {
            let same = fs::read(dirs[0].join(&n)).unwrap() == fs::read(dirs[1].join(&n)).unwrap();
            all.push(Outcome::at_most(
                10,
                format!("bench {suite}: {} differs between runs", n.to_string_lossy()),
                f64::from(u8::from(!same)),
                0.0,
            ));
        }
    }
    report(10, "byte-identical CSVs", &all);
}
