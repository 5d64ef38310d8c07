use std::sync::Arc;

use nfield_core::field::{
    build_memory_truncation, shift_lookup, solve_truncated_memory, validate_assumptions, Assumption, DelayField,
    FieldModel, FieldOperator, FiringRate, Kernel, ModelError, Prehistory, QuadratureRule, SpatialGrid, SpatialKernel,
    TemporalKernel, ValidationOptions,
};
use nfield_core::volterra::{apply_full, SolverConfig, TimeGrid, TimeWindow, Trajectory, VolterraOperator};

fn line(radius: f64, points: usize) -> SpatialGrid {
    SpatialGrid::truncated_line(radius, points, QuadratureRule::Trapezoid).unwrap()
}

fn hat() -> SpatialKernel {
    SpatialKernel::mexican_hat(2.0, 1.0, 2.0, 1.0).unwrap()
}

fn logistic() -> FiringRate {
    FiringRate::Logistic { steepness: 4.0, threshold: 0.3 }
}

fn ramp_history() -> Prehistory {
    Prehistory::from_fn(1, "ramp", Arc::new(|xi, x, out: &mut [f64]| out[0] = 1.0 + 0.5 * xi + 0.1 * x[0]))
}

fn model(grid: SpatialGrid, delay: DelayField, phi: Prehistory) -> FieldModel {
    FieldModel::new(
        0.0,
        grid,
        Kernel::scalar(TemporalKernel::Exponential { rate: 1.0 }, hat()),
        vec![logistic()],
        delay,
        phi,
    )
    .unwrap()
}

fn wavy(grid: &TimeGrid, m: usize) -> Trajectory {
    Trajectory::from_fn(grid, m, |t, s| {
        for (k, v) in s.iter_mut().enumerate() {
            *v = (t + 0.3 * k as f64).sin();
        }
    })
}

#[test]
fn lookup_without_delay_reads_the_trajectory() {
    let m = model(SpatialGrid::interval(-1.0, 1.0, 5, QuadratureRule::Trapezoid).unwrap(), DelayField::Zero, ramp_history());
    let tg = TimeGrid::covering(0.0, 1.0, 0.1).unwrap();
    let u = wavy(&tg, 5);
    for j in [0, 3, 10] {
        for y in 0..5 {
            let v = shift_lookup(&m, &u, tg.time(j), 1, y).unwrap();
            assert!((v[0] - u.state(j)[y]).abs() < 1e-14);
        }
    }
}

#[test]
fn lookup_before_origin_reads_the_prehistory() {
    let grid = SpatialGrid::interval(-1.0, 1.0, 5, QuadratureRule::Trapezoid).unwrap();
    let tg = TimeGrid::covering(0.0, 1.0, 0.1).unwrap();
    let u = wavy(&tg, 5);

    let m = model(grid.clone(), DelayField::Constant(0.3), ramp_history());
    let v = shift_lookup(&m, &u, 0.0, 2, 4).unwrap();
    assert!((v[0] - (1.0 + 0.5 * -0.3 + 0.1 * 1.0)).abs() < 1e-14);

    // |x − y| = 1 at speed 2 gives τ = 0.5, so t = 0.2 looks back to −0.3
    let m = model(grid, DelayField::Transmission { velocity: 2.0 }, ramp_history());
    let v = shift_lookup(&m, &u, 0.2, 0, 2).unwrap();
    assert!((v[0] - (1.0 + 0.5 * -0.3 + 0.1 * 0.0)).abs() < 1e-14);
}

#[test]
fn history_splice_is_continuous() {
    let grid = SpatialGrid::interval(-1.0, 1.0, 5, QuadratureRule::Trapezoid).unwrap();
    let m = model(grid.clone(), DelayField::Constant(0.2), ramp_history());
    let tg = TimeGrid::covering(0.0, 1.0, 0.01).unwrap();
    // continues the ramp past the origin
    let u = Trajectory::from_fn(&tg, 5, |t, s| {
        for (k, v) in s.iter_mut().enumerate() {
            *v = 1.0 + 0.5 * t + 0.1 * grid.point_at(k)[0] + t * t;
        }
    });
    let before = shift_lookup(&m, &u, 0.2 - 1e-9, 1, 3).unwrap()[0];
    let after = shift_lookup(&m, &u, 0.2 + 1e-9, 1, 3).unwrap()[0];
    assert!((before - after).abs() < 1e-6, "{before} vs {after}");
}

#[test]
fn zero_kernel_maps_everything_to_the_initial_profile() {
    let grid = line(3.0, 31);
    let m = FieldModel::new(
        0.0,
        grid,
        Kernel::zero(1),
        vec![FiringRate::Square],
        DelayField::Transmission { velocity: 1.0 },
        Prehistory::gaussian_bump(1, 1.0, 1.0, vec![0.0]),
    )
    .unwrap();
    let op = FieldOperator::new(m, 0.05, 1.0).unwrap();
    let u = wavy(op.time_grid(), 31);
    let image = apply_full(&op, &u).unwrap();
    for j in 0..image.len() {
        assert_eq!(image.state(j), op.base_state());
    }
}

#[test]
fn exponential_mass_matches_closed_form() {
    let width = 0.5;
    let spatial = SpatialKernel::Gaussian { amplitude: 1.0, width };
    let m = FieldModel::new(
        0.0,
        line(6.0, 121),
        Kernel::scalar(TemporalKernel::Exponential { rate: 3.0 }, spatial),
        vec![logistic()],
        DelayField::Zero,
        Prehistory::zero(1),
    )
    .unwrap();
    let op = FieldOperator::new(m, 0.01, 1.0).unwrap();
    let s = op.spatial_mass().unwrap();
    // the row through the centre holds the full Gaussian integral
    assert!((s - width * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-6, "{s}");
    for delta in [0.01, 0.1, 0.5] {
        let mass = op.kernel_mass(TimeWindow::new(0.2, delta));
        assert!((mass - s * (1.0 - (-3.0 * delta).exp())).abs() < 1e-12);
    }
}

#[test]
fn mexican_hat_mass_stays_below_line_bound() {
    let op = FieldOperator::new(model(line(20.0, 401), DelayField::Zero, Prehistory::zero(1)), 0.01, 1.0).unwrap();
    let s = op.spatial_mass().unwrap();
    assert!(s <= 4.0 + 1e-10, "{s}");
    assert_eq!(hat().line_mass_bound(), Some(4.0));
}

#[test]
fn general_kernel_reproduces_separable_evaluation() {
    let grid = line(3.0, 25);
    let kernel = Kernel::Separable {
        temporal: vec![TemporalKernel::Exponential { rate: 1.0 }, TemporalKernel::Alpha { rate: 2.0 }],
        spatial: vec![
            hat(),
            SpatialKernel::Gaussian { amplitude: -0.5, width: 1.0 },
            SpatialKernel::WizardHat { amplitude: 1.0, decay: 1.5 },
            SpatialKernel::Zero,
        ],
    };
    let general = kernel.to_general();
    let phi = Prehistory::from_fn(
        2,
        "pair",
        Arc::new(|xi, x, out: &mut [f64]| {
            out[0] = (xi + x[0]).cos();
            out[1] = 0.3 * x[0];
        }),
    );
    let build = |k: Kernel| {
        let m = FieldModel::new(
            0.0,
            grid.clone(),
            k,
            vec![logistic(), FiringRate::TanhSigmoid { steepness: 2.0, threshold: 0.0 }],
            DelayField::Transmission { velocity: 1.5 },
            phi.clone(),
        )
        .unwrap();
        FieldOperator::new(m, 0.05, 1.0).unwrap()
    };
    let (a, b) = (build(kernel), build(general));
    let u = wavy(a.time_grid(), 50);
    let (ia, ib) = (apply_full(&a, &u).unwrap(), apply_full(&b, &u).unwrap());
    let gap = ia.as_slice().iter().zip(ib.as_slice()).fold(0.0f64, |g, (x, y)| g.max((x - y).abs()));
    assert!(gap < 1e-12, "{gap}");
}

#[test]
fn non_finite_general_kernel_is_reported() {
    let kernel = Kernel::General {
        populations: 1,
        w: Arc::new(|t, s, _x, _y, out: &mut [f64]| out[0] = if t > 0.5 { f64::NAN } else { (t - s).exp() }),
    };
    let m = FieldModel::new(0.0, line(1.0, 5), kernel, vec![FiringRate::Identity], DelayField::Zero, Prehistory::zero(1))
        .unwrap();
    let op = FieldOperator::new(m, 0.1, 1.0).unwrap();
    let u = wavy(op.time_grid(), 5);
    let err = apply_full(&op, &u).unwrap_err();
    assert!(err.to_string().contains("kernel"), "{err}");
}

fn unit_memory_model(rate: f64) -> FieldModel {
    // spatial mass close to one, unit Lipschitz rate
    let width = 0.5;
    let amplitude = 1.0 / (width * (2.0 * std::f64::consts::PI).sqrt());
    FieldModel::new(
        0.0,
        line(6.0, 241),
        Kernel::scalar(TemporalKernel::Exponential { rate }, SpatialKernel::Gaussian { amplitude, width }),
        vec![FiringRate::Identity],
        DelayField::Zero,
        Prehistory::zero(1),
    )
    .unwrap()
}

#[test]
fn memory_truncation_follows_the_exponential_tail() {
    let m = unit_memory_model(1.0);
    let a = build_memory_truncation(&m, 0.0, 1.0, 1e-8).unwrap();
    assert!((a - 1e-8f64.ln()).abs() < 1e-3, "{a}");
    let halved = build_memory_truncation(&m, 0.0, 1.0, 5e-9).unwrap();
    assert!(halved < a);
    assert!((a - halved - 2f64.ln()).abs() < 1e-6);
    let shifted = build_memory_truncation(&m, 3.0, 1.0, 1e-8).unwrap();
    assert!((shifted - a - 3.0).abs() < 1e-9);
}

#[test]
fn memory_truncation_edge_cases() {
    let m = unit_memory_model(1.0);
    let zero = FieldModel::new(0.0, line(1.0, 5), Kernel::zero(1), vec![FiringRate::Identity], DelayField::Zero, Prehistory::zero(1))
        .unwrap();
    assert_eq!(build_memory_truncation(&zero, 2.0, 1.0, 1e-8).unwrap(), 2.0);
    assert!(matches!(build_memory_truncation(&m, 0.0, 1.0, 0.0), Err(ModelError::InvalidParameter(_))));
    let decaying = FieldModel::new(
        0.0,
        line(1.0, 5),
        Kernel::scalar(TemporalKernel::TimeDecay { rate: 1.0 }, SpatialKernel::Gaussian { amplitude: 1.0, width: 1.0 }),
        vec![FiringRate::Identity],
        DelayField::Zero,
        Prehistory::zero(1),
    )
    .unwrap();
    assert!(matches!(build_memory_truncation(&decaying, 0.0, 1.0, 1e-8), Err(ModelError::Unsupported(_))));
}

#[test]
fn truncated_memory_run_reaches_b() {
    let m = unit_memory_model(4.0);
    let cfg = SolverConfig {
        time_step: 0.05,
        ..SolverConfig::default()
    };
    let (a, outcome) = solve_truncated_memory(&m, 1.0, 1.0, 1e-6, &cfg).unwrap();
    assert!(a < 1.0 - 3.0);
    assert!(outcome.kind.is_global());
    // zero history and f(0) = 0
    assert_eq!(outcome.sup_norm(), 0.0);
}

#[test]
fn standard_model_satisfies_every_assumption() {
    let m = model(line(20.0, 201), DelayField::Transmission { velocity: 1.0 }, Prehistory::gaussian_bump(1, 1.0, 1.0, vec![0.0]));
    let m = FieldModel::new(
        0.0,
        m.grid().clone(),
        m.kernel().clone(),
        vec![FiringRate::Hill { steepness: 2.0, threshold: 0.5 }],
        m.delay().clone(),
        m.prehistory().clone(),
    )
    .unwrap();
    let report = validate_assumptions(&m, 2.0, &ValidationOptions::default());
    assert!(report.passed(), "{report}");
}

#[test]
fn singular_kernel_fails_integrability() {
    let kernel = Kernel::General {
        populations: 1,
        w: Arc::new(|t, s, _x, _y, out: &mut [f64]| out[0] = if s < t { 1.0 / (t - s) } else { 0.0 }),
    };
    let m = FieldModel::new(0.0, line(2.0, 21), kernel, vec![logistic()], DelayField::Zero, Prehistory::zero(1)).unwrap();
    let report = validate_assumptions(&m, 1.0, &ValidationOptions::default());
    let check = report.check(Assumption::KernelIntegrability);
    assert!(!check.passed, "{report}");
    assert!(report.failures().any(|c| c.assumption == Assumption::KernelIntegrability));
}

#[test]
fn localization_depends_on_truncation() {
    let build = |radius: f64| {
        FieldModel::new(
            0.0,
            line(radius, 61),
            Kernel::scalar(TemporalKernel::Exponential { rate: 1.0 }, SpatialKernel::Profile { amplitude: 1.0, width: 1.0 }),
            vec![logistic()],
            DelayField::Zero,
            Prehistory::zero(1),
        )
        .unwrap()
    };
    let opts = ValidationOptions::default();
    assert!(validate_assumptions(&build(6.0), 1.0, &opts).check(Assumption::Localization).passed);
    assert!(!validate_assumptions(&build(2.0), 1.0, &opts).check(Assumption::Localization).passed);
}

#[test]
fn rate_lipschitz_examples() {
    assert_eq!(FiringRate::Logistic { steepness: 4.0, threshold: 0.0 }.lipschitz_bound(10.0), 1.0);
    assert_eq!(FiringRate::TanhSigmoid { steepness: 2.0, threshold: 0.0 }.lipschitz_bound(10.0), 1.0);
    assert_eq!(FiringRate::Square.lipschitz_bound(3.0), 6.0);
    assert_eq!(FiringRate::Identity.lipschitz_bound(7.0), 1.0);
}
