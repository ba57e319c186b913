mod common;

use std::f64::consts::PI;
use std::sync::Arc;

use beamdelay_core::simulation::{
    default_nodes, field_at, iss_diagnostics, project_disturbance, project_initial,
    reconstruct_field, simulate, state_norm, sup_displacement, uniform_grid, Control,
    DelaySignal, Distributed, DisturbanceSpec, FnHistory, InitialHistory, IssOptions,
    ModalHistory, SeparableTerm, SimulationOptions, Trajectory,
};
use beamdelay_core::spectral::{self, riesz_constants};
use beamdelay_core::{benchmark, linalg, reduction, Error};
use nalgebra::DVector;
use proptest::prelude::*;

fn open_loop_run(n_sim: usize, dt: f64, t_final: f64) -> Trajectory {
    let p = benchmark::params();
    let hist = project_initial(&benchmark::initial_history(), &p, n_sim, 0.22, default_nodes(n_sim)).unwrap();
    let mut o = SimulationOptions::new(n_sim, dt, t_final);
    o.record_every = (0.01 / dt).round() as usize;
    simulate(&p, Control::OpenLoop, &benchmark::delay(), &benchmark::disturbances(), &hist, &o).unwrap()
}

fn oracle_case(n_sim: usize) -> f64 {
    let p = benchmark::params();
    let h = 0.12;
    let model = reduction::assemble(&p, n_sim).unwrap();
    let f = model.a() - model.m();
    let g = model.m().clone();
    let dim = 2 * n_sim;
    let poly: Vec<DVector<f64>> = (0..3)
        .map(|i| DVector::from_fn(dim, |r, _| [1.0, 0.5, 0.3, -2.0, 1.0, 1.0][(3 * r + i) % 6] / (1 + r) as f64))
        .collect();
    let expected = common::method_of_steps(&f, &g, h, &poly, 2.0);

    let poly_h = poly.clone();
    let hist = FnHistory::new(dim, move |tau, out: &mut [f64]| common::polynomial_history(&poly_h, tau, out));
    let o = SimulationOptions::new(n_sim, 1e-3, 2.0);
    let traj = simulate(
        &p,
        Control::OpenLoop,
        &DelaySignal::constant(h).unwrap(),
        &DisturbanceSpec::none(),
        &hist,
        &o,
    )
    .unwrap();
    assert!((traj.times().last().unwrap() - 2.0).abs() < 1e-12);
    let got = DVector::from_column_slice(traj.coeffs().last().unwrap());
    (got - &expected).norm() / expected.norm()
}

#[test]
fn constant_delay_matches_method_of_steps() {
    for n_sim in [1, 2] {
        let err = oracle_case(n_sim);
        assert!(err < 1e-6, "N_sim = {n_sim}: relative error {err:e}");
    }
}

#[test]
fn velocity_profile_projects_onto_one_pair() {
    let p = benchmark::params();
    let ic = InitialHistory::new(
        Arc::new(|_, _| 0.0),
        Arc::new(|_, _| 0.0),
        Arc::new(|_, x| (2.0 * PI * x).sin()),
    );
    let coarse = project_initial(&ic, &p, 4, 0.22, 128).unwrap();
    let fine = project_initial(&ic, &p, 4, 0.22, 1280).unwrap();
    let mut a = vec![0.0; 8];
    let mut b = vec![0.0; 8];
    coarse.coefficients(-0.1, &mut a);
    fine.coefficients(-0.1, &mut b);
    let [m, pl] = spectral::mode_pair(&p, 2);
    for (i, v) in a.iter().enumerate() {
        let expected = match i {
            2 => m.c / 2.0,
            3 => pl.c / 2.0,
            _ => 0.0,
        };
        assert!((v - expected).abs() < 1e-12, "entry {i}: {v} vs {expected}");
        assert!((v - b[i]).abs() < 1e-12);
    }
}

#[test]
fn initial_displacement_reconstructs_from_forty_modes() {
    let p = benchmark::params();
    let hist = project_initial(&benchmark::initial_history(), &p, 40, 0.22, default_nodes(40)).unwrap();
    let mut c = vec![0.0; 80];
    hist.coefficients(0.0, &mut c);
    assert!(c.iter().all(|v| v.is_finite()));
    let err = common::simpson(|x| (field_at(&c, &p, x).0 - 2.0 * x * (1.0 - x)).powi(2), 4000).sqrt();
    assert!(err < 1e-3, "L2 error {err:e}");
}

#[test]
fn distributed_disturbance_projection() {
    let p = benchmark::params();
    let dist = benchmark::disturbances();
    let a = project_disturbance(&dist, 5.0, &p, 12, default_nodes(12));
    let b = project_disturbance(&dist, 5.0, &p, 12, 10 * default_nodes(12));
    assert!((&a - &b).amax() < 1e-10);

    let general = DisturbanceSpec {
        distributed: Distributed::General(Arc::new(|t: f64, x: f64| 3.0 * (-2.0 * (t - 5.0).powi(2)).exp() * (2.0 + (2.0 * PI * x).cos()))),
        boundary: None,
    };
    assert!((project_disturbance(&general, 5.0, &p, 12, 1280) - &a).amax() < 1e-10);

    let third = DisturbanceSpec {
        distributed: Distributed::Separable(vec![SeparableTerm {
            time: Arc::new(|_| 1.0),
            space: Arc::new(|x| (3.0 * PI * x).sin()),
        }]),
        boundary: None,
    };
    let v = project_disturbance(&third, 0.0, &p, 5, 256);
    let [m, pl] = spectral::mode_pair(&p, 3);
    for (i, x) in v.iter().enumerate() {
        let expected = match i {
            4 => m.c / 2.0,
            5 => pl.c / 2.0,
            _ => 0.0,
        };
        assert!((x - expected).abs() < 1e-12);
    }
    assert_eq!(project_disturbance(&DisturbanceSpec::none(), 1.0, &p, 5, 256).amax(), 0.0);
}

#[test]
fn reference_run_invariants() {
    let traj = common::reference_run(12, 1e-4, 20.0, 0.01);
    let p = benchmark::params();
    let r = riesz_constants(&p);
    let k = traj.gain().unwrap().clone();
    let bound = linalg::spectral_norm(&k) / r.m_r.sqrt();
    let grid = uniform_grid(101);
    for ((c, x), u) in traj.coeffs().iter().zip(traj.state_norms()).zip(traj.controls()) {
        let sq: f64 = c.iter().map(|v| v * v).sum();
        assert!(r.m_r * sq <= x * x * (1.0 + 1e-12) && x * x <= r.big_m_r * sq * (1.0 + 1e-12));
        assert!((u[0] * u[0] + u[1] * u[1]).sqrt() <= bound * x * (1.0 + 1e-12) + 1e-300);
        assert!(sup_displacement(c, &p, &grid) <= *x * (1.0 + 1e-12));
    }
    let fields = reconstruct_field(&traj, &[0.0, 0.25, 1.0]);
    assert!(fields.displacement.iter().all(|row| row[0] == 0.0 && row[2] == 0.0));
    assert!(fields.velocity.iter().all(|row| row[0] == 0.0 && row[2] == 0.0));

    let report = iss_diagnostics(
        &traj,
        &benchmark::initial_history(),
        &IssOptions { tail_start: 8.0, disturbance_window: Some(benchmark::DISTURBANCE_WINDOW), h_max: 0.22 },
    );
    assert!(report.conclusive);
    assert!(report.fitted_rate.unwrap() > 0.0);
    assert_eq!(report.fading_memory, Some(true));
    assert!(report.control_margin.unwrap() >= 0.0);

    let x0 = traj.state_norms()[0];
    assert!(traj.norm_near(4.0) < 0.05 * x0);
    assert!(traj.norm_near(5.0) > traj.norm_near(3.5));
    assert!(traj.norm_near(20.0) < 1e-2 * x0);
}

#[test]
fn open_loop_grows() {
    let traj = open_loop_run(12, 1e-4, 10.0);
    assert!(traj.norm_near(10.0) > traj.norm_near(2.0));
    assert!(traj.controls().iter().all(|u| u[0] == 0.0 && u[1] == 0.0));
    let report = iss_diagnostics(
        &traj,
        &benchmark::initial_history(),
        &IssOptions { tail_start: 8.0, disturbance_window: None, h_max: 0.22 },
    );
    assert!(report.fitted_rate.unwrap() < 0.0);
    assert!(report.control_margin.is_none());
}

#[test]
fn runs_are_deterministic() {
    let a = common::reference_run(6, 2e-4, 2.0, 0.01);
    let b = common::reference_run(6, 2e-4, 2.0, 0.01);
    assert_eq!(a.coeffs(), b.coeffs());
    assert_eq!(a.controls(), b.controls());
    assert_eq!(a.state_norms(), b.state_norms());
}

#[test]
fn step_halving_shows_fourth_order() {
    let runs: Vec<Trajectory> = [1e-3, 5e-4, 2.5e-4].iter().map(|&dt| common::reference_run(8, dt, 10.0, 0.1)).collect();
    let end = |t: &Trajectory| DVector::from_column_slice(t.coeffs().last().unwrap());
    let e1 = (end(&runs[0]) - end(&runs[1])).norm();
    let e2 = (end(&runs[1]) - end(&runs[2])).norm();
    let order = (e1 / e2).log2();
    assert!(order >= 3.0, "observed order {order}");
    let n1 = (runs[0].norm_near(10.0) - runs[1].norm_near(10.0)).abs();
    let n2 = (runs[1].norm_near(10.0) - runs[2].norm_near(10.0)).abs();
    assert!((n1 / n2).log2() >= 3.0);
}

fn relative_gap(a: &Trajectory, b: &Trajectory) -> Vec<(f64, f64)> {
    a.times()
        .iter()
        .zip(a.state_norms().iter().zip(b.state_norms()))
        .map(|(t, (x, y))| (*t, (x - y).abs() / y))
        .collect()
}

/// Truncation of the initial condition alone already separates 40 and 60
/// modes by more than 1e-3: the curvature moments of `2x(1-x)` decay like
/// `1/n`, so the energy tail beyond mode `N` scales like `1/N`.
#[test]
fn initial_truncation_gap() {
    let p = benchmark::params();
    let norm = |n_sim: usize| {
        let hist = project_initial(&benchmark::initial_history(), &p, n_sim, 0.22, 2048).unwrap();
        let mut c = vec![0.0; 2 * n_sim];
        hist.coefficients(0.0, &mut c);
        state_norm(&c, &p)
    };
    let gap = |a: usize, b: usize| (norm(a) - norm(b)).abs() / norm(b);
    let g = gap(40, 60);
    assert!(g > 1e-3 && g < 2e-3, "{g:e}");
    // Doubling the retained modes roughly halves the gap.
    let ratio = gap(20, 240) / gap(40, 240);
    assert!(ratio > 1.7 && ratio < 2.3, "{ratio}");
}

#[test]
fn truncation_from_forty_to_sixty_modes() {
    let a = common::reference_run(40, 2.5e-5, 20.0, 0.05);
    let b = common::reference_run(60, 2.5e-5, 20.0, 0.05);
    for (t, gap) in relative_gap(&a, &b) {
        let inside = (3.0..=7.0).contains(&t);
        let limit = if inside { 2e-2 } else { 3e-3 };
        assert!(gap < limit, "t = {t}: relative gap {gap:e}");
    }
}

#[test]
#[ignore = "the modal tail decays like 1/N; the 1e-3 uniform bound is not attainable"]
fn truncation_within_one_per_mille() {
    let a = common::reference_run(40, 2.5e-5, 20.0, 0.05);
    let b = common::reference_run(60, 2.5e-5, 20.0, 0.05);
    let worst = relative_gap(&a, &b).into_iter().map(|(_, g)| g).fold(0.0, f64::max);
    assert!(worst < 1e-3, "worst relative gap {worst:e}");
}

#[test]
fn delay_outside_declared_range_is_rejected() {
    let p = benchmark::params();
    let hist = project_initial(&benchmark::initial_history(), &p, 4, 0.22, 128).unwrap();
    let delay = DelaySignal::custom(0.02, 0.22, Arc::new(|t| if t > 0.5 { 0.3 } else { 0.1 })).unwrap();
    let err = simulate(&p, Control::OpenLoop, &delay, &DisturbanceSpec::none(), &hist, &SimulationOptions::new(4, 1e-3, 1.0))
        .unwrap_err();
    match err {
        Error::DelayOutOfRange { t, h, .. } => assert!(t > 0.49 && t < 0.51 && h == 0.3),
        other => panic!("unexpected {other:?}"),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn gram_norm_matches_quadrature(
        alpha in 1.1f64..3.0,
        beta0 in 0.0f64..200.0,
        gamma in 0.5f64..200.0,
        c in proptest::collection::vec(-1.0f64..1.0, 2..=10),
    ) {
        let p = spectral::BeamParams::new(alpha, beta0, gamma).unwrap();
        let c: Vec<f64> = c.iter().copied().take(c.len() / 2 * 2).collect();
        let exact = state_norm(&c, &p);
        let quad = common::energy_norm_by_quadrature(&c, &p);
        prop_assert!((exact - quad).abs() <= 1e-8 * exact.max(1e-300), "{} vs {}", exact, quad);
    }

    #[test]
    fn zero_history_stays_at_rest(n_sim in 1usize..=4, h in 0.05f64..0.3) {
        let p = benchmark::params();
        let hist = FnHistory::new(2 * n_sim, |_, out: &mut [f64]| out.fill(0.0));
        let traj = simulate(
            &p,
            Control::OpenLoop,
            &DelaySignal::constant(h).unwrap(),
            &DisturbanceSpec::none(),
            &hist,
            &SimulationOptions::new(n_sim, 1e-3, 0.5),
        ).unwrap();
        prop_assert!(traj.state_norms().iter().all(|x| *x == 0.0));
    }
}

