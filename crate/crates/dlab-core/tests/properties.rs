//! Property-based invariants of the dynamical core.

use dlab_core::dynamics::eval_drift;
use dlab_core::equilibria::{eigen2, jacobian, saddle_point, Eigen, Jacobian2};
use dlab_core::performance::crossing_time;
use dlab_core::separatrix::{compute_separatrix, psi_approx, psi_eval};
use dlab_core::simulate::{
    integrate_ode, no_ai_arrival_time, no_ai_time_to_reach, simulate_discrete, simulate_sde,
};
use dlab_core::{
    CoreError, DiscreteSimConfig, ModelParams, ModelVariant, PhaseState, SdeConfig,
    SkillDistribution,
};
use proptest::prelude::*;

fn simplified_params() -> impl Strategy<Value = ModelParams> {
    (0.05f64..0.95, 0.2f64..6.0, 0.2f64..6.0)
        .prop_map(|(theta_a, kappa, delta)| ModelParams::simplified(theta_a, kappa, delta))
}

fn general_params() -> impl Strategy<Value = ModelParams> {
    (0.1f64..0.95, 0.2f64..6.0, 0.2f64..6.0, 0.0f64..0.9).prop_map(
        |(theta_a, kappa, delta, frac)| {
            ModelParams::general(theta_a, kappa, delta, frac * theta_a)
        },
    )
}

/// One random parameter set per variant, all passing validation.
fn variant_params() -> impl Strategy<Value = ModelParams> {
    let base = || (0.1f64..0.9, 0.2f64..5.0, 0.2f64..5.0);
    prop_oneof![
        base().prop_map(|(a, k, d)| ModelParams::simplified(a, k, d)),
        (base(), 0.0f64..0.9).prop_map(|((a, k, d), f)| ModelParams::general(a, k, d, f * a)),
        base().prop_map(|(a, k, d)| ModelParams::simplified(a, k, d)
            .with_variant(ModelVariant::NoAi)),
        (base(), 0.05f64..0.95, 0.05f64..0.95, 0.1f64..0.9).prop_map(|((a, k, d), s1, s2, w)| {
            let dist = SkillDistribution::new(vec![s1, s2], vec![w, 1.0 - w]).unwrap();
            ModelParams::simplified(a, k, d).with_variant(ModelVariant::JaggedAi(dist))
        }),
        (base(), 0.05f64..0.95).prop_map(|((a, k, d), tt)| ModelParams::simplified(a, k, d)
            .with_variant(ModelVariant::MisperceivedAi { theta_tilde_a: tt })),
        (base(), 0.1f64..2.0).prop_map(|((a, k, d), alpha)| ModelParams::simplified(a, k, d)
            .with_variant(ModelVariant::Asymmetric { alpha })),
        (base(), 0.0f64..1.0).prop_map(|((a, k, d), q)| ModelParams::simplified(a, k, d)
            .with_variant(ModelVariant::DetectionPenalty { q })),
    ]
}

fn numeric_jacobian(params: &ModelParams, state: &PhaseState, h: f64) -> Jacobian2 {
    let f = |theta: f64, p: f64| eval_drift(params, &PhaseState { theta, p });
    let ft_p = f(state.theta + h, state.p);
    let ft_m = f(state.theta - h, state.p);
    let fp_p = f(state.theta, state.p + h);
    let fp_m = f(state.theta, state.p - h);
    Jacobian2 {
        j11: (ft_p.d_theta - ft_m.d_theta) / (2.0 * h),
        j12: (fp_p.d_theta - fp_m.d_theta) / (2.0 * h),
        j21: (ft_p.d_p - ft_m.d_p) / (2.0 * h),
        j22: (fp_p.d_p - fp_m.d_p) / (2.0 * h),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(120))]

    #[test]
    fn unit_square_is_forward_invariant(
        params in variant_params(),
        theta in 0.0f64..=1.0,
        p in 0.0f64..=1.0,
    ) {
        let init = PhaseState { theta, p };
        let traj = integrate_ode(&params, &init, 2.0, 1e-2).unwrap();
        for (t, s) in traj.iter() {
            prop_assert!(s.in_unit_square(), "state ({}, {}) left the unit square at t = {t}", s.theta, s.p);
        }
    }

    #[test]
    fn discrete_updates_stay_in_bounds(
        params in simplified_params(),
        eta in 1e-3f64..0.04,
        seed in any::<u64>(),
        theta in 0.0f64..=1.0,
        p in 0.0f64..=1.0,
    ) {
        let bound = params.kappa.max(params.delta).max(1.0);
        prop_assume!(2.0 * eta * bound < 1.0);
        let cfg = DiscreteSimConfig { eta, n_steps: 400, seed };
        let traj = simulate_discrete(&params, &PhaseState { theta, p }, &cfg).unwrap();
        prop_assert_eq!(traj.len(), 401);
        for (_, s) in traj.iter() {
            prop_assert!(s.in_unit_square());
        }
    }

    #[test]
    fn sde_paths_stay_in_bounds_and_absorb_only_on_the_boundary(
        params in simplified_params(),
        sigma in 0.0f64..0.5,
        seed in any::<u64>(),
        theta in 0.05f64..0.95,
        p in 0.05f64..0.95,
    ) {
        let cfg = SdeConfig { sigma, step: 0.01, seed, t_end: 10.0 };
        let traj = simulate_sde(&params, &PhaseState { theta, p }, &cfg).unwrap();
        for (_, s) in traj.iter() {
            prop_assert!(s.in_unit_square());
        }
        let last_t = *traj.times.last().unwrap();
        if last_t < cfg.t_end - 1e-9 {
            let p_end = traj.final_state().p;
            prop_assert!(p_end == 0.0 || p_end == 1.0,
                "early stop at t = {last_t} with interior p = {p_end}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn jacobian_matches_central_differences(
        params in variant_params(),
        theta in 0.02f64..0.98,
        p in 0.02f64..0.98,
    ) {
        // The asymmetric field is only piecewise smooth; stay off the switch.
        if let ModelVariant::Asymmetric { .. } = params.variant {
            prop_assume!((theta - params.theta_a).abs() > 1e-2);
        }
        let state = PhaseState { theta, p };
        let j = jacobian(&params, &state);
        let n = numeric_jacobian(&params, &state, 1e-5);
        for (name, a, b) in [
            ("j11", j.j11, n.j11),
            ("j12", j.j12, n.j12),
            ("j21", j.j21, n.j21),
            ("j22", j.j22, n.j22),
        ] {
            prop_assert!((a - b).abs() < 1e-6,
                "{name}: analytic {a} vs central difference {b} under {:?}", params.variant);
        }
    }

    #[test]
    fn saddle_has_exactly_zero_drift_and_negative_determinant(
        params in prop_oneof![simplified_params(), general_params()],
    ) {
        let saddle = saddle_point(&params).unwrap();
        prop_assert!(saddle.in_unit_square());
        let v = eval_drift(&params, &saddle);
        prop_assert_eq!(v.d_theta, 0.0);
        prop_assert_eq!(v.d_p, 0.0);
        prop_assert!(jacobian(&params, &saddle).det() < 0.0);
    }

    #[test]
    fn eigen_decomposition_identities(
        j11 in -5.0f64..5.0,
        j12 in -5.0f64..5.0,
        j21 in -5.0f64..5.0,
        j22 in -5.0f64..5.0,
    ) {
        let j = Jacobian2 { j11, j12, j21, j22 };
        let scale = 1.0 + j11.abs() + j12.abs() + j21.abs() + j22.abs();
        match eigen2(&j) {
            Eigen::Real { values, vectors } => {
                prop_assert!(values[0] >= values[1]);
                prop_assert!((values[0] + values[1] - j.trace()).abs() <= 1e-9 * scale);
                prop_assert!((values[0] * values[1] - j.det()).abs() <= 1e-8 * scale * scale);
                if let Some(vs) = vectors {
                    for (lam, v) in values.iter().zip(vs.iter()) {
                        let norm = v[0].hypot(v[1]);
                        prop_assert!((norm - 1.0).abs() <= 1e-12);
                        let r1 = j.j11 * v[0] + j.j12 * v[1] - lam * v[0];
                        let r2 = j.j21 * v[0] + j.j22 * v[1] - lam * v[1];
                        prop_assert!(r1.hypot(r2) <= 1e-7 * scale,
                            "residual {} for eigenvalue {lam}", r1.hypot(r2));
                    }
                }
            }
            Eigen::Complex { real, imag } => {
                prop_assert!(imag > 0.0);
                prop_assert!((2.0 * real - j.trace()).abs() <= 1e-9 * scale);
                prop_assert!((real * real + imag * imag - j.det()).abs() <= 1e-8 * scale * scale);
            }
        }
    }

    #[test]
    fn variant_reductions_collapse_to_the_simplified_field(
        a in 0.05f64..0.95,
        kappa in 0.2f64..6.0,
        delta in 0.2f64..6.0,
        theta in 0.0f64..=1.0,
        p in 0.0f64..=1.0,
    ) {
        let simplified = ModelParams::simplified(a, kappa, delta);
        let state = PhaseState { theta, p };
        let reference = eval_drift(&simplified, &state);

        let reductions = [
            simplified
                .clone()
                .with_variant(ModelVariant::JaggedAi(SkillDistribution::point_mass(a).unwrap())),
            simplified.clone().with_variant(ModelVariant::Asymmetric { alpha: 1.0 }),
            simplified.clone().with_variant(ModelVariant::DetectionPenalty { q: 0.0 }),
            simplified
                .clone()
                .with_variant(ModelVariant::MisperceivedAi { theta_tilde_a: a }),
        ];
        for params in &reductions {
            let v = eval_drift(params, &state);
            prop_assert!((v.d_theta - reference.d_theta).abs() <= 1e-12,
                "{} skill drift {} vs {}", params.variant.name(), v.d_theta, reference.d_theta);
            prop_assert!((v.d_p - reference.d_p).abs() <= 1e-12,
                "{} delegation drift {} vs {}", params.variant.name(), v.d_p, reference.d_p);
        }
    }

    #[test]
    fn psi_approx_is_continuous_and_anchored(params in simplified_params()) {
        let curve = match psi_approx(&params) {
            Ok(curve) => curve,
            Err(CoreError::SingularPasting(_)) => return Ok(()),
            Err(e) => return Err(TestCaseError::fail(format!("unexpected error: {e}"))),
        };
        prop_assert!(curve.eval(0.0).abs() < 1e-12);
        if curve.theta_r < 1.0 {
            prop_assert!((curve.eval(1.0) - 1.0).abs() < 1e-12);
        }
        let at_saddle = curve.eval(curve.theta_dagger);
        prop_assert!((at_saddle - curve.p_dagger).abs() < 1e-12);
        for bp in [curve.theta_l, curve.theta_r] {
            if bp > 1e-6 && bp < 1.0 - 1e-6 {
                let below = curve.eval(bp - 1e-9);
                let above = curve.eval(bp + 1e-9);
                prop_assert!((below - above).abs() < 1e-6,
                    "jump {} at pasting point {bp}", (below - above).abs());
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn competitive_order_is_preserved(
        params in simplified_params(),
        t1 in 0.05f64..0.95,
        t2 in 0.05f64..0.95,
        q1 in 0.05f64..0.95,
        q2 in 0.05f64..0.95,
    ) {
        let lo = PhaseState { theta: t1.min(t2), p: q1.max(q2) };
        let hi = PhaseState { theta: t1.max(t2), p: q1.min(q2) };
        let a = integrate_ode(&params, &lo, 5.0, 1e-2).unwrap();
        let b = integrate_ode(&params, &hi, 5.0, 1e-2).unwrap();
        prop_assert_eq!(a.len(), b.len());
        for k in 0..a.len() {
            prop_assert!(a.states[k].theta <= b.states[k].theta + 1e-7,
                "skill order broken at step {k}");
            prop_assert!(a.states[k].p >= b.states[k].p - 1e-7,
                "delegation order broken at step {k}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn no_ai_arrival_matches_the_closed_form(
        theta_0 in 0.05f64..0.9,
        frac in 0.05f64..0.95,
    ) {
        let target = theta_0 + (0.95 - theta_0) * frac;
        let closed = no_ai_time_to_reach(theta_0, target).unwrap();
        let numeric = no_ai_arrival_time(theta_0, target, 1e-3).unwrap();
        prop_assert!((closed - numeric).abs() < 1e-6,
            "closed form {closed} vs integrated {numeric}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn crossing_never_exceeds_the_catch_up_time(
        theta_0 in 0.15f64..0.6,
        gap in 0.05f64..0.35,
        kappa in 0.5f64..4.0,
        delta in 0.5f64..4.0,
        p0 in 0.1f64..0.9,
    ) {
        let theta_a = (theta_0 + gap).min(0.95);
        let params = ModelParams::simplified(theta_a, kappa, delta);
        let init = PhaseState { theta: theta_0, p: p0 };
        let res = crossing_time(&params, &init, 200.0).unwrap();
        prop_assert!(res.t_c <= res.t_star + 1e-6,
            "t_c = {} above the catch-up bound {}", res.t_c, res.t_star);
        let arrive = no_ai_time_to_reach(theta_0, theta_a).unwrap();
        prop_assert!((res.t_star - arrive).abs() <= 1e-12);
    }
}

// The traced separatrix is the stable manifold: starting on it, the forward
// flow should funnel into the saddle instead of committing to either corner.
#[test]
fn separatrix_nodes_flow_into_the_saddle() {
    let params = ModelParams::default();
    let sep = compute_separatrix(&params, 512).unwrap();
    let saddle = sep.saddle;
    for index in [sep.nodes.len() / 4, 3 * sep.nodes.len() / 4] {
        let node = sep.nodes[index];
        let traj = integrate_ode(&params, &node, 8.0, 1e-3).unwrap();
        for (t, s) in traj.iter() {
            let off_curve = (s.p - psi_eval(&sep, s.theta)).abs();
            assert!(
                off_curve < 0.02,
                "orbit from node {index} left the curve by {off_curve} at t = {t}"
            );
        }
        let end = traj.final_state();
        assert!(
            end.linf_dist(&saddle) < 0.01,
            "orbit from node {index} ended at ({}, {}) away from the saddle",
            end.theta,
            end.p
        );
    }
}
