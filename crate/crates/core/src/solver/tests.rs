use proptest::prelude::*;

use super::*;
use crate::operators::{CocoerciveOp, LinearOp, ProxFunction, ResolventOp};
use crate::spaces::{BlockId, SpaceLayout};

fn block(dim: usize, b: ResolventOp, l: LinearOp) -> DualBlock {
    DualBlock {
        b,
        d_inv: CocoerciveOp::zero(dim),
        l,
        r: vec![0.0; dim],
    }
}

/// `A = 0`, `C = Id`, one degenerate block: the forward-backward reduction
/// on `R`.
fn fb_problem() -> ProblemSpec {
    ProblemSpec::new(
        SpaceLayout::uniform(1, vec![1]).unwrap(),
        ResolventOp::zero(1),
        CocoerciveOp::scaled_identity(1, 1.0).unwrap(),
        vec![0.0],
        vec![block(1, ResolventOp::zero(1), LinearOp::identity(1))],
    )
    .unwrap()
}

/// `min ½(x − 4)² + |x|`, solution `x̄ = 3` with dual `v̄ = 1`.
fn scalar_lasso() -> ProblemSpec {
    ProblemSpec::new(
        SpaceLayout::uniform(1, vec![1]).unwrap(),
        ResolventOp::subdifferential(ProxFunction::squared_distance(1.0, vec![4.0]).unwrap()),
        CocoerciveOp::zero(1),
        vec![0.0],
        vec![block(
            1,
            ResolventOp::subdifferential(ProxFunction::l1(1, 1.0).unwrap()),
            LinearOp::identity(1),
        )],
    )
    .unwrap()
}

fn identity_blocks(weights: Vec<f64>, mu: f64) -> ProblemSpec {
    let m = weights.len();
    let c = if mu.is_infinite() {
        CocoerciveOp::zero(1)
    } else {
        CocoerciveOp::scaled_identity(1, 1.0 / mu).unwrap()
    };
    ProblemSpec::new(
        SpaceLayout::new(1, vec![1; m], weights).unwrap(),
        ResolventOp::zero(1),
        c,
        vec![0.0],
        (0..m)
            .map(|_| block(1, ResolventOp::zero(1), LinearOp::identity(1)))
            .collect(),
    )
    .unwrap()
}

#[test]
fn rho_single_block() {
    let spec = identity_blocks(vec![1.0], 0.6);
    let cfg = validate_steps(&spec, 0.5, &[0.5]).unwrap();
    assert_eq!(cfg.rho(), 1.0);
    assert_eq!(cfg.beta(), 0.6);
    assert!(cfg.admissible());
    assert!((cfg.delta() - 1.0).abs() < 1e-15);

    let borderline = identity_blocks(vec![1.0], 0.5);
    assert!(!validate_steps(&borderline, 0.5, &[0.5]).unwrap().admissible());
}

#[test]
fn rho_vanishes_on_the_boundary() {
    let spec = identity_blocks(vec![1.0], f64::INFINITY);
    let cfg = validate_steps(&spec, 1.0, &[1.0]).unwrap();
    assert_eq!(cfg.rho(), 0.0);
    assert!(!cfg.admissible());
}

#[test]
fn rho_two_blocks() {
    let spec = identity_blocks(vec![0.5, 0.5], 1.0);
    let cfg = validate_steps(&spec, 0.25, &[0.25, 0.25]).unwrap();
    assert_eq!(cfg.rho(), 3.0);
}

#[test]
fn validate_rejects_bad_inputs() {
    let spec = identity_blocks(vec![1.0], 1.0);
    assert!(validate_steps(&spec, 0.0, &[0.5]).is_err());
    assert!(validate_steps(&spec, 0.5, &[-1.0]).is_err());
    assert!(matches!(
        validate_steps(&spec, 0.5, &[0.5, 0.5]),
        Err(SolverError::Dimension { .. })
    ));
}

#[test]
fn suggested_steps_for_unit_beta() {
    let spec = identity_blocks(vec![1.0], 1.0);
    let cfg = suggest_steps(&spec, 0.99).unwrap();
    assert!((cfg.tau() - 0.66).abs() < 1e-15);
    assert_eq!(cfg.sigmas(), &[cfg.tau()]);
    // ρ = (1/0.66)(1 − 0.66)
    let rho = (1.0 - 0.66) / 0.66;
    assert!((cfg.rho() - rho).abs() < 1e-12);
    assert!((2.0 * cfg.rho() * cfg.beta() - 1.030_303_030_303).abs() < 1e-9);
    assert!(cfg.admissible());

    let half = suggest_steps(&spec, 0.495).unwrap();
    assert!((half.tau() - 0.33).abs() < 1e-15);
    assert!(half.admissible());
}

#[test]
fn suggested_steps_with_capped_beta() {
    let spec = identity_blocks(vec![1.0], f64::INFINITY);
    let cfg = suggest_steps(&spec, 0.99).unwrap();
    assert_eq!(cfg.beta(), BETA_CAP);
    assert!((cfg.tau() - 0.99).abs() < 1e-11);
    assert!(cfg.admissible());
    assert!(suggest_steps(&spec, 1.0).is_err());
}

#[test]
fn forward_backward_hand_step() {
    let spec = fb_problem();
    let cfg = validate_steps(&spec, 0.5, &[0.5]).unwrap();
    let st = IterState::initial(&spec, vec![1.0], vec![vec![0.0]]).unwrap();
    let next = iterate_once(&spec, &cfg, &st, None).unwrap();
    assert_eq!(next.p, vec![0.5]);
    assert_eq!(next.x, vec![0.5]);
    assert_eq!(next.v, vec![vec![0.0]]);
    assert_eq!(next.y, vec![0.0]);
    assert_eq!(next.n, 1);
}

#[test]
fn fixed_point_is_invariant() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9).unwrap();
    let st = IterState::initial(&spec, vec![3.0], vec![vec![1.0]]).unwrap();
    let next = iterate_once(&spec, &cfg, &st, None).unwrap();
    assert!((next.x[0] - 3.0).abs() <= 1e-12);
    assert!((next.v[0][0] - 1.0).abs() <= 1e-12);
}

#[test]
fn a2_error_shifts_p_exactly() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9).unwrap();
    let st = IterState::initial(&spec, vec![0.3], vec![vec![-0.2]]).unwrap();
    let exact = iterate_once(&spec, &cfg, &st, None).unwrap();
    let mut err = StepErrors::zeros(spec.layout());
    err.a2 = vec![0.125];
    let shifted = iterate_once(&spec, &cfg, &st, Some(&err)).unwrap();
    assert_eq!(shifted.p[0], exact.p[0] + 0.125);
}

#[test]
fn relaxation_is_applied_exactly() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9)
        .unwrap()
        .with_lambda(LambdaSchedule::Constant(0.7));
    let st = IterState::initial(&spec, vec![-1.0], vec![vec![0.4]]).unwrap();
    let next = iterate_once(&spec, &cfg, &st, None).unwrap();
    assert_eq!(next.x[0], st.x[0] + 0.7 * (next.p[0] - st.x[0]));
    assert_eq!(next.v[0][0], st.v[0][0] + 0.7 * (next.q[0][0] - st.v[0][0]));
}

#[test]
fn forward_backward_run_decays_geometrically() {
    let spec = fb_problem();
    let cfg = validate_steps(&spec, 0.5, &[0.5])
        .unwrap()
        .with_lambda(LambdaSchedule::Constant(0.8));
    let opts = RunOptions {
        record_trajectory: true,
        ..Default::default()
    };
    let rep = run_with(
        &spec,
        &cfg,
        vec![1.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &StoppingRule::new(1e-10, 1000),
        &opts,
    )
    .unwrap();
    assert!(rep.converged());
    assert!(rep.final_state.x[0].abs() < 1e-9);
    let traj = rep.trajectory.unwrap();
    assert_eq!(traj.len(), rep.iterations + 1);
    for (n, pt) in traj.iter().enumerate() {
        let closed = (1.0f64 - 0.8 * 0.5).powi(n as i32);
        assert!((pt.primal[0] - closed).abs() <= 1e-15);
    }
    assert_eq!(rep.history.len(), rep.iterations);
}

#[test]
fn zero_problem_converges_immediately() {
    let spec = ProblemSpec::new(
        SpaceLayout::uniform(2, vec![2]).unwrap(),
        ResolventOp::zero(2),
        CocoerciveOp::zero(2),
        vec![0.0; 2],
        vec![block(2, ResolventOp::zero(2), LinearOp::identity(2))],
    )
    .unwrap();
    let cfg = suggest_steps(&spec, 0.9).unwrap();
    let x0 = vec![1.5, -2.0];
    let rep = run(
        &spec,
        &cfg,
        x0.clone(),
        vec![vec![0.0; 2]],
        &ErrorSchedule::Zero,
        &StoppingRule::default(),
    )
    .unwrap();
    assert_eq!(rep.termination, Termination::Converged);
    assert_eq!(rep.iterations, 1);
    assert_eq!(rep.final_state.x, x0);
}

#[test]
fn strongly_monotone_c_converges_in_norm() {
    // z ∈ ∂‖·‖₁(x) + x with z = b: the solution is the soft threshold of b.
    let b = vec![3.0, -0.5, 1.25, -2.0];
    let spec = ProblemSpec::new(
        SpaceLayout::uniform(4, vec![4]).unwrap(),
        ResolventOp::zero(4),
        CocoerciveOp::scaled_identity(4, 1.0).unwrap(),
        b.clone(),
        vec![block(
            4,
            ResolventOp::subdifferential(ProxFunction::l1(4, 1.0).unwrap()),
            LinearOp::identity(4),
        )],
    )
    .unwrap();
    let cfg = suggest_steps(&spec, 0.95).unwrap();
    let rep = run(
        &spec,
        &cfg,
        vec![0.0; 4],
        vec![vec![0.0; 4]],
        &ErrorSchedule::Zero,
        &StoppingRule::new(1e-12, 100_000),
    )
    .unwrap();
    assert!(rep.converged());
    let want = [2.0, 0.0, 0.25, -1.0];
    for (x, w) in rep.final_state.x.iter().zip(want) {
        assert!((x - w).abs() < 1e-9, "{x} vs {w}");
    }
}

#[test]
fn inadmissible_steps_are_refused_unless_overridden() {
    let spec = identity_blocks(vec![1.0], 0.5);
    let cfg = validate_steps(&spec, 0.5, &[0.5]).unwrap();
    let stop = StoppingRule::new(1e-10, 5);
    let refused = run(
        &spec,
        &cfg,
        vec![1.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &stop,
    );
    assert!(matches!(refused, Err(SolverError::Inadmissible { .. })));
    let opts = RunOptions {
        unsafe_steps: true,
        ..Default::default()
    };
    let forced = run_with(
        &spec,
        &cfg,
        vec![1.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &stop,
        &opts,
    );
    assert!(forced.is_ok());
}

#[test]
fn over_relaxation_needs_the_flag() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9)
        .unwrap()
        .with_lambda(LambdaSchedule::Constant(1.5));
    let st = IterState::zeros(&spec);
    assert!(matches!(
        iterate_once(&spec, &cfg, &st, None),
        Err(SolverError::LambdaOutOfRange { iteration: 0, .. })
    ));
    let cfg = cfg.with_over_relaxation(true);
    assert!(iterate_once(&spec, &cfg, &st, None).is_ok());
    let cfg = cfg.with_lambda(LambdaSchedule::Constant(2.0));
    assert!(iterate_once(&spec, &cfg, &st, None).is_err());
}

#[test]
fn small_lambda_below_epsilon_is_rejected() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9)
        .unwrap()
        .with_lambda(LambdaSchedule::Sequence(vec![1.0, 1e-4]));
    let rep = run(
        &spec,
        &cfg,
        vec![0.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &StoppingRule::new(0.0, 10),
    );
    assert!(matches!(
        rep,
        Err(SolverError::LambdaOutOfRange { iteration: 1, .. })
    ));
}

#[test]
fn divergence_names_the_offending_block() {
    let layout = SpaceLayout::uniform(1, vec![1]).unwrap();
    let nan_primal = ProblemSpec::new(
        layout.clone(),
        ResolventOp::from_fn(1, |_, w| if w[0] < -0.5 { vec![f64::NAN] } else { w.to_vec() }),
        CocoerciveOp::scaled_identity(1, 1.0).unwrap(),
        vec![0.0],
        vec![block(1, ResolventOp::zero(1), LinearOp::identity(1))],
    )
    .unwrap();
    let cfg = suggest_steps(&nan_primal, 0.9).unwrap();
    let rep = run(
        &nan_primal,
        &cfg,
        vec![-5.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &StoppingRule::default(),
    )
    .unwrap();
    assert_eq!(rep.termination, Termination::Diverged);
    assert_eq!(
        rep.divergence,
        Some(Divergence {
            iteration: 0,
            block: BlockId::Primal
        })
    );
    assert_eq!(rep.iterations, 0);

    let inf_dual = ProblemSpec::new(
        layout,
        ResolventOp::zero(1),
        CocoerciveOp::scaled_identity(1, 1.0).unwrap(),
        vec![0.0],
        vec![block(
            1,
            ResolventOp::from_fn(1, |_, _| vec![f64::NEG_INFINITY]),
            LinearOp::identity(1),
        )],
    )
    .unwrap();
    let cfg = suggest_steps(&inf_dual, 0.9).unwrap();
    let rep = run(
        &inf_dual,
        &cfg,
        vec![1.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &StoppingRule::default(),
    )
    .unwrap();
    assert_eq!(rep.divergence.unwrap().block, BlockId::Dual(0));
}

#[test]
fn problem_invariants_are_checked() {
    let layout = SpaceLayout::uniform(2, vec![2]).unwrap();
    let zero_l = LinearOp::diagonal(vec![0.0, 0.0]);
    let err = ProblemSpec::new(
        layout.clone(),
        ResolventOp::zero(2),
        CocoerciveOp::zero(2),
        vec![0.0; 2],
        vec![block(2, ResolventOp::zero(2), zero_l)],
    );
    assert!(matches!(err, Err(SolverError::ZeroOperator { block: 0 })));

    let bad_adjoint = LinearOp::from_fn(
        2,
        2,
        |x, out| {
            out[0] = x[1];
            out[1] = 0.0;
        },
        |v, out| {
            out[0] = v[0];
            out[1] = 0.0;
        },
    );
    let err = ProblemSpec::new(
        layout.clone(),
        ResolventOp::zero(2),
        CocoerciveOp::zero(2),
        vec![0.0; 2],
        vec![block(2, ResolventOp::zero(2), bad_adjoint)],
    );
    assert!(matches!(err, Err(SolverError::AdjointMismatch { block: 0, .. })));

    let err = ProblemSpec::new(
        layout,
        ResolventOp::zero(2),
        CocoerciveOp::zero(3),
        vec![0.0; 2],
        vec![block(2, ResolventOp::zero(2), LinearOp::identity(2))],
    );
    assert!(matches!(err, Err(SolverError::Dimension { .. })));
}

#[test]
fn non_summable_errors_are_refused() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9).unwrap();
    let rep = run(
        &spec,
        &cfg,
        vec![0.0],
        vec![vec![0.0]],
        &ErrorSchedule::geometric(0.1, 1.0, 1),
        &StoppingRule::default(),
    );
    assert!(matches!(rep, Err(SolverError::NonSummableErrors)));
}

#[test]
fn summable_errors_still_reach_the_solution() {
    let spec = scalar_lasso();
    let cfg = suggest_steps(&spec, 0.9).unwrap();
    let rep = run(
        &spec,
        &cfg,
        vec![0.0],
        vec![vec![0.0]],
        &ErrorSchedule::geometric(0.1, 0.9, 11),
        &StoppingRule::new(1e-11, 100_000),
    )
    .unwrap();
    assert!(rep.converged());
    assert!(rep.errors_injected);
    assert!((rep.final_state.x[0] - 3.0).abs() < 1e-8);
}

#[test]
fn prox_certificate_holds_along_the_run() {
    // A = ∂(‖·‖₁): p must satisfy ‖u‖₁ ≥ ‖p‖₁ + ⟨(w − p)/τ, u − p⟩.
    let n = 3;
    let spec = ProblemSpec::new(
        SpaceLayout::uniform(n, vec![n]).unwrap(),
        ResolventOp::subdifferential(ProxFunction::l1(n, 1.0).unwrap()),
        CocoerciveOp::scaled_identity(n, 2.0).unwrap(),
        vec![1.0, -3.0, 0.2],
        vec![block(
            n,
            ResolventOp::subdifferential(ProxFunction::box_indicator(vec![-1.0; n], vec![1.0; n]).unwrap()),
            LinearOp::diagonal(vec![1.0, -2.0, 0.5]),
        )],
    )
    .unwrap();
    let cfg = suggest_steps(&spec, 0.9).unwrap();
    let mut rng = crate::sampling::seeded(99);
    let mut st = IterState::zeros(&spec);
    let l1 = |u: &[f64]| u.iter().map(|e| e.abs()).sum::<f64>();
    for _ in 0..30 {
        let blk = &spec.blocks()[0];
        let back = blk.l.adjoint(&st.v[0]);
        let cx = spec.c().apply(&st.x);
        let w: Vec<f64> = (0..n)
            .map(|k| st.x[k] - cfg.tau() * (back[k] + cx[k] - spec.z()[k]))
            .collect();
        let next = iterate_once(&spec, &cfg, &st, None).unwrap();
        for _ in 0..10 {
            let u = crate::sampling::gaussian(&mut rng, n);
            let lin: f64 = (0..n)
                .map(|k| (w[k] - next.p[k]) / cfg.tau() * (u[k] - next.p[k]))
                .sum();
            assert!(l1(&u) >= l1(&next.p) + lin - 1e-8);
        }
        st = next;
    }
}

proptest! {
    #[test]
    fn suggested_steps_are_admissible(
        norms in prop::collection::vec(0.05f64..20.0, 1..4),
        raw_w in prop::collection::vec(0.1f64..1.0, 4),
        mu in 0.01f64..100.0,
        safety in 0.01f64..0.999,
    ) {
        let m = norms.len();
        let total: f64 = raw_w[..m].iter().sum();
        let weights: Vec<f64> = raw_w[..m].iter().map(|w| w / total).collect();
        let blocks = norms
            .iter()
            .map(|&s| block(1, ResolventOp::zero(1), LinearOp::diagonal(vec![s])))
            .collect();
        let layout = SpaceLayout::new(1, vec![1; m], weights);
        prop_assume!(layout.is_ok());
        let spec = ProblemSpec::new(
            layout.unwrap(),
            ResolventOp::zero(1),
            CocoerciveOp::scaled_identity(1, 1.0 / mu).unwrap(),
            vec![0.0],
            blocks,
        )
        .unwrap();
        let cfg = suggest_steps(&spec, safety).unwrap();
        prop_assert!(cfg.admissible());
        prop_assert!(cfg.delta() > 0.0);
    }
}

#[test]
fn overflowing_iterates_are_not_reported_as_converged() {
    // τ = 1000 multiplies x by about −999 per step, so ‖x‖² overflows long
    // before any entry does
    let spec = ProblemSpec::new(
        SpaceLayout::uniform(1, vec![1]).unwrap(),
        ResolventOp::zero(1),
        CocoerciveOp::scaled_identity(1, 1.0).unwrap(),
        vec![4.0],
        vec![block(
            1,
            ResolventOp::subdifferential(ProxFunction::l1(1, 1.0).unwrap()),
            LinearOp::identity(1),
        )],
    )
    .unwrap();
    let cfg = validate_steps(&spec, 1000.0, &[1e-3]).unwrap();
    let rep = run_with(
        &spec,
        &cfg,
        vec![0.0],
        vec![vec![0.0]],
        &ErrorSchedule::Zero,
        &StoppingRule::new(1e-10, 10_000),
        &RunOptions {
            unsafe_steps: true,
            ..Default::default()
        },
    )
    .unwrap();
    assert_eq!(rep.termination, Termination::Diverged);
    assert!(rep.iterations > 100);
}
