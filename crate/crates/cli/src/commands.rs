//! Subcommands. Each writes to the given streams and returns the process
//! exit code, so they can be tested without spawning the binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use splitsolve::convexfront::{
    check_qualification, configure_steps, lower_to_inclusion, solve_convex, Qualification,
    StepChoice,
};
use splitsolve::diagnostics::{build_product_ops, certify_all, certify_t_bound, DEFAULT_SAMPLES};
use splitsolve::solver::{StepConfig, Termination};

use crate::config::{Built, ProblemConfig, StepMode};
use crate::report::{fmt_f64, render_csv};
use crate::suites::{run_suite, SUITES};

pub const EXIT_OK: u8 = 0;
/// Config errors, refusals and I/O failures.
pub const EXIT_ERROR: u8 = 1;
/// `solve` hit `max_iter`; `bench` and `diag` had a failing check.
pub const EXIT_INCOMPLETE: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

pub const SEED_ENV: &str = "SPLITSOLVE_SEED";

/// Reads and parses a config, applying the seed override. Errors carry the
/// path and, where known, the line.
pub fn load_config(path: &Path, seed: Option<u64>) -> Result<ProblemConfig, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let mut cfg = ProblemConfig::parse(&text).map_err(|e| located(path, &e))?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn located(path: &Path, e: &crate::config::ConfigError) -> String {
    if e.line == 0 {
        format!("{}: {}", path.display(), e.message)
    } else {
        format!("{}:{}: {}", path.display(), e.line, e.message)
    }
}

fn build(path: &Path, cfg: &ProblemConfig) -> Result<Built, String> {
    cfg.build().map_err(|e| located(path, &e))
}

fn admissibility_report(steps: &StepConfig) -> String {
    let sigmas: Vec<String> = steps.sigmas().iter().map(|s| format!("{s:?}")).collect();
    format!(
        "tau = {:?}\nsigma = {}\nrho = {:?}\nbeta = {:?}\ndelta = {:?}\n2*rho*beta = {:?}\nadmissible = {}\n",
        steps.tau(),
        sigmas.join(" "),
        steps.rho(),
        steps.beta(),
        steps.delta(),
        2.0 * steps.rho() * steps.beta(),
        steps.admissible()
    )
}

pub struct SolveArgs {
    pub config: PathBuf,
    pub out: Option<PathBuf>,
    pub steps: Option<StepMode>,
    pub unsafe_steps: bool,
    /// Fill the `wall_ms` column (makes the CSV nondeterministic).
    pub timing: bool,
}

pub fn cmd_solve(args: &SolveArgs, seed: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    macro_rules! fail {
        ($($t:tt)*) => {{
            let _ = writeln!(err, $($t)*);
            return EXIT_ERROR;
        }};
    }
    let mut cfg = match load_config(&args.config, seed) {
        Ok(c) => c,
        Err(e) => fail!("error: {e}"),
    };
    if let Some(mode) = args.steps {
        cfg.steps.mode = mode;
    }
    let Built { problem, mut options } = match build(&args.config, &cfg) {
        Ok(b) => b,
        Err(e) => fail!("error: {e}"),
    };
    let steps = match lower_to_inclusion(&problem).and_then(|spec| {
        configure_steps(&spec, &options.steps, &options.lambda, options.over_relaxation)
    }) {
        Ok(s) => s,
        Err(e) => fail!("error: {e}"),
    };
    if !steps.admissible() && !args.unsafe_steps {
        fail!(
            "refused: step sizes violate 2*rho*beta > 1 (pass --unsafe-steps to run anyway)\n{}",
            admissibility_report(&steps).trim_end()
        );
    }
    options.unsafe_steps = args.unsafe_steps;
    let sol = match solve_convex(&problem, &options) {
        Ok(s) => s,
        Err(e) => fail!("error: {e}"),
    };
    let csv = render_csv(&sol.report, &sol.steps, args.timing);
    match &args.out {
        Some(p) => {
            if let Err(e) = fs::write(p, &csv) {
                fail!("error: {}: {e}", p.display());
            }
        }
        None => {
            let _ = out.write_all(csv.as_bytes());
        }
    }
    let how = match &options.steps {
        StepChoice::Auto { safety } => format!("auto (safety {safety})"),
        StepChoice::Manual { .. } => "manual".to_string(),
    };
    let _ = writeln!(
        err,
        "termination: {} after {} iterations\nsteps: {how}, tau = {}, sigma = {}\nrho = {}, beta = {}, admissible = {}",
        sol.report.termination.as_str(),
        sol.report.iterations,
        fmt_f64(sol.steps.tau()),
        sol.steps.sigmas().iter().map(|s| fmt_f64(*s)).collect::<Vec<_>>().join(" "),
        fmt_f64(sol.steps.rho()),
        fmt_f64(sol.steps.beta()),
        sol.steps.admissible(),
    );
    match sol.report.termination {
        Termination::Converged => EXIT_OK,
        Termination::MaxIter => EXIT_INCOMPLETE,
        Termination::Diverged => EXIT_DIVERGED,
    }
}

pub fn cmd_check(path: &Path, seed: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let built = load_config(path, seed).and_then(|c| build(path, &c));
    let Built { problem, options } = match built {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let spec = match lower_to_inclusion(&problem) {
        Ok(s) => s,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    for (i, c) in spec.norm_certificates().iter().enumerate() {
        let _ = writeln!(
            out,
            "block {i}: ‖L‖ ≤ {:?} ({}; power-iteration estimate {:?})",
            c.bound,
            if c.from_hint { "hint" } else { "estimate" },
            c.estimate.estimate
        );
    }
    let _ = writeln!(out, "mu = {:?}", spec.mu());
    let nus: Vec<String> = spec.nus().iter().map(|n| format!("{n:?}")).collect();
    let _ = writeln!(out, "nu = {}", nus.join(" "));
    match configure_steps(&spec, &options.steps, &options.lambda, options.over_relaxation) {
        Ok(steps) => {
            let _ = write!(out, "{}", admissibility_report(&steps));
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    }
    let verdict = match check_qualification(&problem) {
        Qualification::Satisfied { witness } => {
            let w: Vec<String> = witness.iter().map(|x| format!("{x:?}")).collect();
            format!("satisfied (witness {})", w.join(" "))
        }
        Qualification::NotVerified { reason } => format!("not verified ({reason})"),
    };
    let _ = writeln!(out, "qualification: {verdict}");
    EXIT_OK
}

pub fn cmd_diag(path: &Path, seed: Option<u64>, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    let prepared = load_config(path, seed).and_then(|c| {
        let Built { problem, options } = build(path, &c)?;
        let spec = lower_to_inclusion(&problem).map_err(|e| e.to_string())?;
        let steps = configure_steps(&spec, &options.steps, &options.lambda, options.over_relaxation)
            .map_err(|e| e.to_string())?;
        let ops = build_product_ops(&spec, &steps).map_err(|e| e.to_string())?;
        Ok((c.seed, ops))
    });
    let (seed, ops) = match prepared {
        Ok(p) => p,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_ERROR;
        }
    };
    let _ = writeln!(out, "rho = {:?}, beta = {:?}, delta = {:?}", ops.rho, ops.beta, ops.delta);
    let mut certs = certify_all(&ops, DEFAULT_SAMPLES, seed);
    certs.push(certify_t_bound(&ops, DEFAULT_SAMPLES, seed.wrapping_add(3)));
    for c in &certs {
        let _ = writeln!(out, "{c}");
    }
    if certs.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_INCOMPLETE
    }
}

pub fn cmd_bench(suite: &str, dir: &Path, out: &mut dyn Write, err: &mut dyn Write) -> u8 {
    if !SUITES.contains(&suite) {
        let _ = writeln!(err, "error: unknown suite '{suite}' (known: {})", SUITES.join(", "));
        return EXIT_ERROR;
    }
    if let Err(e) = fs::create_dir_all(dir) {
        let _ = writeln!(err, "error: {}: {e}", dir.display());
        return EXIT_ERROR;
    }
    let result = run_suite(suite).expect("suite name checked above");
    for (name, contents) in &result.files {
        let p = dir.join(name);
        if let Err(e) = fs::write(&p, contents) {
            let _ = writeln!(err, "error: {}: {e}", p.display());
            return EXIT_ERROR;
        }
    }
    for o in &result.outcomes {
        let _ = writeln!(out, "{o}");
    }
    let verdict = if result.passed() { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "{suite}: {verdict}");
    if result.passed() {
        EXIT_OK
    } else {
        EXIT_INCOMPLETE
    }
}
