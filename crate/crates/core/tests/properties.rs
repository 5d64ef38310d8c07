use proptest::prelude::*;

use nfield_core::field::{
    DelayField, FieldModel, FieldOperator, FiringRate, Kernel, Prehistory, QuadratureRule, SpatialGrid, SpatialKernel,
    TemporalKernel,
};
use nfield_core::lab::SquaredIntegral;
use nfield_core::volterra::{
    check_volterra_property, extend_solution, extend_window, restrict_window, CausalityCheck, SolverConfig, TimeGrid,
    TimeWindow, Trajectory,
};

fn rate_strategy() -> impl Strategy<Value = FiringRate> {
    prop_oneof![
        (1.0..8.0f64, 0.05..2.0f64).prop_map(|(k, t)| FiringRate::Hill { steepness: k, threshold: t }),
        (0.1..10.0f64, -1.0..1.0f64).prop_map(|(k, t)| FiringRate::TanhSigmoid { steepness: k, threshold: t }),
        (0.1..10.0f64, -1.0..1.0f64).prop_map(|(k, t)| FiringRate::Logistic { steepness: k, threshold: t }),
        Just(FiringRate::Square),
        Just(FiringRate::Identity),
    ]
}

proptest! {
    #[test]
    fn lipschitz_certificate_holds(rate in rate_strategy(), r in 0.01..20.0f64, a in -1.0..1.0f64, b in -1.0..1.0f64) {
        let (u, v) = (a * r, b * r);
        let bound = rate.lipschitz_bound(r);
        let gap = (rate.eval(u) - rate.eval(v)).abs();
        prop_assert!(gap <= bound * (u - v).abs() * (1.0 + 1e-12) + 1e-15, "{rate:?} {u} {v}");
    }

    #[test]
    fn restriction_keeps_norms(values in prop::collection::vec(-5.0..5.0f64, 3 * 21), from in 0usize..10, len in 1usize..10) {
        let traj = Trajectory::from_raw(0.0, 0.1, 3, values);
        let w = TimeWindow::new(from as f64 * 0.1, len as f64 * 0.1);
        let seg = restrict_window(&traj, w).unwrap();
        let direct = (from..=from + len).map(|j| traj.field_state(j).norm()).fold(0.0, f64::max);
        prop_assert_eq!(seg.sup_norm, direct);
        let held = extend_window(&seg, 2.0);
        prop_assert_eq!(held.sup_norm(), seg.sup_norm);
        prop_assert!((held.end_time() - 2.0).abs() < 1e-9);
    }

    #[test]
    fn field_operator_is_causal(
        excitation in 1.0..3.0f64,
        velocity in 0.5..4.0f64,
        rate in rate_strategy(),
        seed in any::<u64>(),
    ) {
        let grid = SpatialGrid::interval(-1.0, 1.0, 5, QuadratureRule::Trapezoid).unwrap();
        let model = FieldModel::new(
            0.0,
            grid,
            Kernel::scalar(
                TemporalKernel::Alpha { rate: 1.5 },
                SpatialKernel::mexican_hat(excitation, 0.5, 2.0, 1.0).unwrap(),
            ),
            vec![rate],
            DelayField::Transmission { velocity },
            Prehistory::gaussian_bump(1, 0.5, 1.0, vec![0.0]),
        )
        .unwrap();
        let tg = TimeGrid::covering(0.0, 0.6, 0.05).unwrap();
        let op = FieldOperator::new(model, tg.step, tg.end()).unwrap();
        let check = CausalityCheck { trials: 4, seed, xi: 0.3, ..CausalityCheck::default() };
        let report = check_volterra_property(&op, &tg, &check).unwrap();
        prop_assert!(report.is_causal(), "{report:?}");
    }

    #[test]
    fn accepted_windows_honor_the_ratio_slack(lambda in 0.0..0.5f64, q in 0.2..0.8f64) {
        let cfg = SolverConfig { time_step: 1e-2, q_target: q, ..SolverConfig::default() };
        let out = extend_solution(&SquaredIntegral::new(lambda), 1.2, &cfg).unwrap();
        prop_assert!(out.max_ratio() <= q + 0.1);
        let traj = out.trajectory().unwrap();
        prop_assert!((traj.sup_norm() - out.sup_norm()).abs() <= 1e-12 * (1.0 + traj.sup_norm()));
    }
}
