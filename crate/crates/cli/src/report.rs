//! Run CSV: one row per iteration, then a `#`-prefixed summary footer.
//!
//! Numbers use 17 significant digits so every `f64` round-trips. Fields a
//! run cannot provide are left blank; `wall_ms` is blank unless timing is
//! requested, which keeps repeated runs byte-identical.

use std::fmt::Write as _;

use splitsolve::solver::{RunReport, StepConfig};

pub const HEADER: &str = "iter,step_norm,kkt_residual,primal_obj,dual_obj,gap,wall_ms";

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

fn cell(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

fn join(v: &[f64]) -> String {
    v.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" ")
}

pub fn render_csv(report: &RunReport, steps: &StepConfig, timing: bool) -> String {
    let mut out = String::with_capacity(128 * (report.history.len() + 10));
    out.push_str(HEADER);
    out.push('\n');
    for r in &report.history {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.iter,
            fmt_f64(r.step_norm),
            cell(r.kkt_residual),
            cell(r.primal_value),
            cell(r.dual_value),
            cell(r.gap),
            cell(timing.then_some(r.wall_ms)),
        );
    }
    out.push_str(&summary(report, steps));
    out
}

/// Footer lines, each starting with `# `.
pub fn summary(report: &RunReport, steps: &StepConfig) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# termination = {}", report.termination.as_str());
    let _ = writeln!(out, "# iterations = {}", report.iterations);
    if let Some(d) = &report.divergence {
        let _ = writeln!(out, "# diverged_at = {} {:?}", d.iteration, d.block);
    }
    let _ = writeln!(out, "# tau = {}", fmt_f64(steps.tau()));
    let _ = writeln!(out, "# sigma = {}", join(steps.sigmas()));
    let _ = writeln!(out, "# rho = {}", fmt_f64(steps.rho()));
    let _ = writeln!(out, "# beta = {}", fmt_f64(steps.beta()));
    let _ = writeln!(out, "# delta = {}", fmt_f64(steps.delta()));
    let _ = writeln!(out, "# admissible = {}", steps.admissible());
    let _ = writeln!(out, "# x = {}", join(&report.final_state.x));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 3.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            let mantissa = s.split('e').next().unwrap().replace(['-', '.'], "");
            assert_eq!(mantissa.len(), 17, "{s}");
        }
        assert_eq!(fmt_f64(3.0), "3.0000000000000000e0");
        assert_eq!(fmt_f64(f64::NEG_INFINITY), "-inf");
    }
}
