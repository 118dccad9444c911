use super::*;
use crate::operators::{prox_conjugate, soft_threshold, LinearOp, ProxFunction};
use crate::solver::{run_with, ErrorSchedule, RunOptions, StoppingRule};
use crate::spaces::{dot, SpaceLayout};

fn one_block_layout(n: usize, g: usize) -> SpaceLayout {
    SpaceLayout::uniform(n, vec![g]).unwrap()
}

/// `min ½(x − 4)² + |x|` on `R`, split as `h = ½(· − 4)²`, `g = |·|`.
fn scalar_lasso() -> ConvexProblem {
    ConvexProblem::new(
        one_block_layout(1, 1),
        ProxFunction::zero(1),
        SmoothTerm::quadratic(1.0, vec![4.0]).unwrap(),
        vec![0.0],
        vec![ConvexBlock {
            g: ProxFunction::l1(1, 1.0).unwrap(),
            ell: StrongTerm::zero_indicator(1),
            l: LinearOp::identity(1),
            r: vec![0.0],
        }],
    )
    .unwrap()
}

#[test]
fn lowering_uses_prox_and_gradient() {
    let b = vec![1.0, -2.0, 0.5];
    let cp = ConvexProblem::new(
        one_block_layout(3, 3),
        ProxFunction::l1(3, 1.0).unwrap(),
        SmoothTerm::quadratic(1.0, b.clone()).unwrap(),
        vec![0.0; 3],
        vec![ConvexBlock {
            g: ProxFunction::zero(3),
            ell: StrongTerm::zero_indicator(3),
            l: LinearOp::identity(3),
            r: vec![0.0; 3],
        }],
    )
    .unwrap();
    let spec = lower_to_inclusion(&cp).unwrap();
    let w = [2.5, -0.3, -1.7];
    let j = spec.a().resolvent(0.5, &w).unwrap();
    for (jk, wk) in j.iter().zip(w) {
        assert_eq!(*jk, soft_threshold(wk, 0.5));
    }
    assert_eq!(spec.mu(), 1.0);
    assert_eq!(spec.c().apply(&[0.0, 0.0, 0.0]), vec![-1.0, 2.0, -0.5]);
    assert!(spec.blocks()[0].d_inv.is_zero());
    assert_eq!(spec.nus(), vec![f64::INFINITY]);
}

#[test]
fn quadratic_ell_lowers_to_scaled_identity() {
    let cp = ConvexProblem::new(
        one_block_layout(2, 2),
        ProxFunction::zero(2),
        SmoothTerm::zero(2),
        vec![0.0; 2],
        vec![ConvexBlock {
            g: ProxFunction::l1(2, 1.0).unwrap(),
            ell: StrongTerm::quadratic(2, 4.0).unwrap(),
            l: LinearOp::identity(2),
            r: vec![0.0; 2],
        }],
    )
    .unwrap();
    let spec = lower_to_inclusion(&cp).unwrap();
    assert_eq!(spec.blocks()[0].d_inv.apply(&[4.0, -2.0]), vec![1.0, -0.5]);
    assert_eq!(spec.nus(), vec![4.0]);
}

#[test]
fn scalar_lasso_solves_to_three() {
    let cp = scalar_lasso();
    let opts = SolveOptions {
        stop: StoppingRule::new(1e-13, 100_000),
        ..Default::default()
    };
    let sol = solve_convex(&cp, &opts).unwrap();
    assert!(sol.report.converged());
    assert!((sol.report.final_state.x[0] - 3.0).abs() < 1e-9);
    let gap = evaluate_gap(&cp, &[3.0], &[vec![1.0]]).unwrap();
    assert!(gap.gap.unwrap().abs() <= 1e-8, "{gap:?}");
    assert_eq!(gap.kkt_residual, 0.0);
    assert!(sol.gap.gap.unwrap().abs() <= 1e-8);
}

#[test]
fn point_indicator_f_fixes_x_after_one_prox() {
    let b = vec![2.0, -1.0];
    let cp = ConvexProblem::new(
        one_block_layout(2, 2),
        ProxFunction::point_indicator(b.clone()).unwrap(),
        SmoothTerm::quadratic(1.0, vec![0.0; 2]).unwrap(),
        vec![0.0; 2],
        vec![ConvexBlock {
            g: ProxFunction::l1(2, 0.3).unwrap(),
            ell: StrongTerm::zero_indicator(2),
            l: LinearOp::diagonal(vec![1.0, 2.0]),
            r: vec![0.0; 2],
        }],
    )
    .unwrap();
    let opts = SolveOptions {
        stop: StoppingRule::new(0.0, 1),
        ..Default::default()
    };
    let sol = solve_convex(&cp, &opts).unwrap();
    assert_eq!(sol.report.final_state.p, b);
}

#[test]
fn infimal_convolution_closed_forms() {
    let g = ProxFunction::l1(1, 1.0).unwrap();
    let huber = infimal_convolution(&g, &StrongTerm::quadratic(1, 1.0).unwrap(), &[0.5]).unwrap();
    assert!((huber - 0.125).abs() < 1e-15);
    let far = infimal_convolution(&g, &StrongTerm::quadratic(1, 1.0).unwrap(), &[3.0]).unwrap();
    assert!((far - 2.5).abs() < 1e-15);
    let plain = infimal_convolution(&g, &StrongTerm::zero_indicator(1), &[-0.7]).unwrap();
    assert_eq!(plain, 0.7);
    let custom = StrongTerm::custom(1, 1.0, |v| v.to_vec());
    assert!(infimal_convolution(&g, &custom, &[0.1]).is_err());
}

#[test]
fn conjugate_of_sum_with_quadratic_h() {
    // f = ι_[0,∞), h = ½‖·‖²: (f+h)*(u) = ½ max(u,0)².
    let f = ProxFunction::box_indicator(vec![0.0], vec![f64::INFINITY]).unwrap();
    let h = SmoothTerm::quadratic(1.0, vec![0.0]).unwrap();
    for u in [-2.0, 0.0, 1.5] {
        let want = 0.5 * f64::max(u, 0.0).powi(2);
        assert!((conjugate_of_sum(&f, &h, &[u]).unwrap() - want).abs() < 1e-15);
    }
}

#[test]
fn weak_duality_holds_at_feasible_pairs() {
    let n = 6;
    let b: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin() * 3.0).collect();
    let cp = ConvexProblem::new(
        SpaceLayout::uniform(n, vec![n - 1]).unwrap(),
        ProxFunction::zero(n),
        SmoothTerm::quadratic(1.0, b).unwrap(),
        vec![0.0; n],
        vec![ConvexBlock {
            g: ProxFunction::l1(n - 1, 0.5).unwrap(),
            ell: StrongTerm::zero_indicator(n - 1),
            l: LinearOp::forward_difference(n).unwrap(),
            r: vec![0.0; n - 1],
        }],
    )
    .unwrap();
    let mut rng = crate::sampling::seeded(4);
    for _ in 0..50 {
        let x = crate::sampling::gaussian(&mut rng, n);
        let v: Vec<f64> = crate::sampling::gaussian(&mut rng, n - 1)
            .into_iter()
            .map(|e| 0.5 * e.tanh())
            .collect();
        let rep = evaluate_gap(&cp, &x, &[v]).unwrap();
        assert!(rep.gap.unwrap() >= -1e-9);
    }
}

#[test]
fn infeasible_dual_is_reported_as_infinite() {
    let cp = scalar_lasso();
    let rep = evaluate_gap(&cp, &[1.0], &[vec![2.0]]).unwrap();
    assert_eq!(rep.dual_value, Some(f64::INFINITY));
    assert!(rep.notes.iter().any(|n| n.contains("infeasible")));
}

#[test]
fn non_evaluable_terms_are_flagged() {
    let f = ProxFunction::custom(1, |x| x[0].abs(), |_, w| w.to_vec());
    let cp = ConvexProblem::new(
        one_block_layout(1, 1),
        f,
        SmoothTerm::zero(1),
        vec![0.0],
        vec![ConvexBlock {
            g: ProxFunction::l1(1, 1.0).unwrap(),
            ell: StrongTerm::zero_indicator(1),
            l: LinearOp::identity(1),
            r: vec![0.0],
        }],
    )
    .unwrap();
    let rep = evaluate_gap(&cp, &[0.0], &[vec![0.0]]).unwrap();
    assert!(rep.primal_value.is_some());
    assert!(rep.dual_value.is_none());
    assert!(rep.gap.is_none());
    assert!(rep.notes.iter().any(|n| n.contains("not evaluable")));
}

#[test]
fn bad_gradient_is_rejected_at_construction() {
    let h = SmoothTerm::custom(2, 1.0, |x| dot(x, x), |x| x.to_vec());
    let err = ConvexProblem::new(
        one_block_layout(2, 2),
        ProxFunction::zero(2),
        h,
        vec![0.0; 2],
        vec![ConvexBlock {
            g: ProxFunction::zero(2),
            ell: StrongTerm::zero_indicator(2),
            l: LinearOp::identity(2),
            r: vec![0.0; 2],
        }],
    );
    assert!(matches!(err, Err(ConvexError::GradientCheck { .. })));
}

#[test]
fn solve_convex_matches_the_lowered_run_bit_for_bit() {
    let cp = scalar_lasso();
    let opts = SolveOptions {
        stop: StoppingRule::new(0.0, 200),
        record_trajectory: true,
        errors: ErrorSchedule::geometric(0.05, 0.8, 2),
        ..Default::default()
    };
    let sol = solve_convex(&cp, &opts).unwrap();
    let spec = lower_to_inclusion(&cp).unwrap();
    let direct = run_with(
        &spec,
        &sol.steps,
        vec![0.0],
        vec![vec![0.0]],
        &opts.errors,
        &opts.stop,
        &RunOptions {
            record_trajectory: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(sol.report.trajectory, direct.trajectory);
}

#[test]
fn chambolle_pock_reduction() {
    // m = 1, h = 0, λ ≡ 1: x⁺ = prox_{τf}(x − τL*v), v⁺ = prox_{σg*}(v + σL(2x⁺ − x)).
    let n = 5;
    let f = ProxFunction::squared_distance(1.0, vec![1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
    let g = ProxFunction::l1(n - 1, 0.4).unwrap();
    let l = LinearOp::forward_difference(n).unwrap();
    let cp = ConvexProblem::new(
        SpaceLayout::uniform(n, vec![n - 1]).unwrap(),
        f.clone(),
        SmoothTerm::zero(n),
        vec![0.0; n],
        vec![ConvexBlock {
            g: g.clone(),
            ell: StrongTerm::zero_indicator(n - 1),
            l: l.clone(),
            r: vec![0.0; n - 1],
        }],
    )
    .unwrap();
    let opts = SolveOptions {
        stop: StoppingRule::new(0.0, 300),
        record_trajectory: true,
        ..Default::default()
    };
    let sol = solve_convex(&cp, &opts).unwrap();
    let (tau, sigma) = (sol.steps.tau(), sol.steps.sigmas()[0]);
    let traj = sol.report.trajectory.unwrap();
    let mut x = vec![0.0; n];
    let mut v = vec![0.0; n - 1];
    for pt in traj.iter().skip(1) {
        let back = l.adjoint(&v);
        let arg: Vec<f64> = x.iter().zip(&back).map(|(a, b)| a - tau * b).collect();
        let xn = f.prox(tau, &arg).unwrap();
        let bar: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| 2.0 * a - b).collect();
        let lb = l.apply(&bar);
        let arg: Vec<f64> = v.iter().zip(&lb).map(|(a, b)| a + sigma * b).collect();
        v = prox_conjugate(&g, sigma, &arg).unwrap();
        x = xn;
        for (a, b) in pt.primal.iter().zip(&x) {
            assert!((a - b).abs() <= 1e-12);
        }
        for (a, b) in pt.duals[0].iter().zip(&v) {
            assert!((a - b).abs() <= 1e-12);
        }
    }
}

#[test]
fn qualification_whole_space() {
    assert!(check_qualification(&scalar_lasso()).is_satisfied());
}

#[test]
fn qualification_unit_interval() {
    let cp = ConvexProblem::new(
        one_block_layout(1, 1),
        ProxFunction::zero(1),
        SmoothTerm::zero(1),
        vec![0.0],
        vec![ConvexBlock {
            g: ProxFunction::box_indicator(vec![0.0], vec![1.0]).unwrap(),
            ell: StrongTerm::zero_indicator(1),
            l: LinearOp::identity(1),
            r: vec![0.0],
        }],
    )
    .unwrap();
    match check_qualification(&cp) {
        Qualification::Satisfied { witness } => {
            assert!(witness[0] > 0.0 && witness[0] < 1.0);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn qualification_point_domain_is_not_verified() {
    let cp = ConvexProblem::new(
        one_block_layout(1, 1),
        ProxFunction::zero(1),
        SmoothTerm::zero(1),
        vec![0.0],
        vec![ConvexBlock {
            g: ProxFunction::zero_indicator(1),
            ell: StrongTerm::zero_indicator(1),
            l: LinearOp::identity(1),
            r: vec![1.0],
        }],
    )
    .unwrap();
    assert!(matches!(
        check_qualification(&cp),
        Qualification::NotVerified { .. }
    ));
}

#[test]
fn qualification_needs_the_feasibility_solve() {
    // x ∈ (0, 10)², x₁ − x₂ ∈ (5, 6): the center and most samples miss.
    let cp = ConvexProblem::new(
        one_block_layout(2, 1),
        ProxFunction::box_indicator(vec![0.0; 2], vec![10.0; 2]).unwrap(),
        SmoothTerm::zero(2),
        vec![0.0; 2],
        vec![ConvexBlock {
            g: ProxFunction::box_indicator(vec![5.0], vec![5.01]).unwrap(),
            ell: StrongTerm::zero_indicator(1),
            l: LinearOp::dense(vec![vec![1.0, -1.0]]).unwrap(),
            r: vec![0.0],
        }],
    )
    .unwrap();
    match check_qualification(&cp) {
        Qualification::Satisfied { witness } => {
            let d = witness[0] - witness[1];
            assert!(d > 5.0 && d < 5.01);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn custom_domain_is_not_verified() {
    let cp = ConvexProblem::new(
        one_block_layout(1, 1),
        ProxFunction::custom(1, |_| 0.0, |_, w| w.to_vec()),
        SmoothTerm::zero(1),
        vec![0.0],
        vec![ConvexBlock {
            g: ProxFunction::zero(1),
            ell: StrongTerm::zero_indicator(1),
            l: LinearOp::identity(1),
            r: vec![0.0],
        }],
    )
    .unwrap();
    assert!(!check_qualification(&cp).is_satisfied());
}
