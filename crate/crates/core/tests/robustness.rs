use beamdelay_core::robustness::{
    self, certificate_io, constructive_variables, decay_envelope, delay_upper_bound_small_gain,
    find_certificate, max_certified_delay, max_decay_rate, small_gain_delay_check,
    verify_certificate, LkCertificate, ThetaProblem,
};
use beamdelay_core::{benchmark, linalg, ActuationConfig, Error};
use nalgebra::DMatrix;
use proptest::prelude::*;

fn single_input() -> (DMatrix<f64>, DMatrix<f64>) {
    let model = benchmark::model();
    let gain = benchmark::placed_gain(ActuationConfig::LeftOnly).unwrap();
    (model.a() + model.b() * gain.k(), model.m().clone())
}

fn two_input() -> (DMatrix<f64>, DMatrix<f64>) {
    let model = benchmark::model();
    let gain = benchmark::placed_gain(ActuationConfig::BothEnds).unwrap();
    (model.a() + model.b() * gain.k(), model.m().clone())
}

fn certificate_at(f: &DMatrix<f64>, g: &DMatrix<f64>, h: f64, kappa: f64) -> Option<LkCertificate> {
    find_certificate(&ThetaProblem::new(f.clone(), g.clone(), h, kappa).unwrap())
}

#[test]
fn inflated_delay_breaks_a_certificate() {
    let (f, g) = single_input();
    let cert = certificate_at(&f, &g, 0.034, 0.0).expect("certificate at 0.034");
    assert!(verify_certificate(&cert));
    let mut inflated = cert.clone();
    inflated.problem = cert.problem.with_h_max(3.4).unwrap();
    assert!(!verify_certificate(&inflated));
}

#[test]
fn certificates_are_reusable_for_smaller_rates() {
    let (f, g) = single_input();
    let cert = certificate_at(&f, &g, 0.03, 0.4).expect("certificate at kappa = 0.4");
    for kappa in [0.0, 0.1, 0.2, 0.3, 0.4] {
        let mut reused = cert.clone();
        reused.problem = cert.problem.with_kappa(kappa).unwrap();
        assert!(verify_certificate(&reused), "kappa = {kappa}");
    }
}

#[test]
fn two_inputs_certify_a_larger_delay() {
    let (f1, g1) = single_input();
    let (f2, g2) = two_input();
    let single = max_certified_delay(&f1, &g1, 0.0, 0.005).unwrap();
    let two = max_certified_delay(&f2, &g2, 0.0, 0.005).unwrap();
    assert!(verify_certificate(&single.certificate) && verify_certificate(&two.certificate));
    assert!(!single.capped && !two.capped);
    assert!(two.h_max > single.h_max, "{} vs {}", two.h_max, single.h_max);
    assert!(single.h_max >= 0.030 && two.h_max >= 0.2);
}

#[test]
fn absent_delay_term_is_capped() {
    let f = -DMatrix::identity(3, 3) + DMatrix::from_fn(3, 3, |i, j| if j == i + 1 { 0.5 } else { 0.0 });
    let g = DMatrix::zeros(3, 3);
    let result = max_certified_delay(&f, &g, 0.0, 0.5).unwrap();
    assert!(result.capped);
    assert_eq!(result.h_max, robustness::DELAY_BRACKET_MAX);
    assert!(verify_certificate(&result.certificate));
}

#[test]
fn uncertifiable_problem_is_reported() {
    let f = DMatrix::identity(2, 2);
    let g = DMatrix::zeros(2, 2);
    assert!(matches!(max_certified_delay(&f, &g, 0.0, 0.01), Err(Error::NoneCertified { .. })));
    assert!(matches!(max_decay_rate(&f, &g, 0.1, 0.01), Err(Error::InfeasibleAtZeroRate { .. })));
}

#[test]
fn decay_rate_is_a_grid_maximum_and_shrinks_with_delay() {
    let (f, g) = single_input();
    let res = 0.01;
    let (kappa, cert) = max_decay_rate(&f, &g, 0.03, res).unwrap();
    assert!(verify_certificate(&cert));
    assert!(kappa > 0.0);
    let below = certificate_at(&f, &g, 0.03, kappa - res).expect("certificate just below");
    assert!(verify_certificate(&below));
    assert!(certificate_at(&f, &g, 0.03, kappa + 2.0 * res).is_none());

    let (kappa_half, _) = max_decay_rate(&f, &g, 0.015, res).unwrap();
    assert!(kappa_half >= kappa, "{kappa_half} < {kappa}");
}

#[test]
fn small_gain_bounds_from_published_gains() {
    let model = benchmark::model();
    let single = model.a() + model.b() * benchmark::published_gain_single();
    let two = model.a() + model.b() * benchmark::published_gain_two();
    let b1 = delay_upper_bound_small_gain(&single, model.m()).unwrap();
    let b2 = delay_upper_bound_small_gain(&two, model.m()).unwrap();
    assert!((b1 - benchmark::REPORTED_BOUND_SINGLE).abs() < 5e-4, "{b1}");
    assert!((b2 - benchmark::REPORTED_BOUND_TWO).abs() < 5e-4, "{b2}");

    let env = decay_envelope(&single).unwrap();
    assert!(env.c_lambda >= 1.0 && env.lambda > 0.0);
    assert!(!small_gain_delay_check(&single, model.m(), 0.008, env.c_lambda, env.lambda));
    assert!(small_gain_delay_check(&single, model.m(), 0.0, env.c_lambda, env.lambda));
    let zero = DMatrix::zeros(4, 4);
    assert!(small_gain_delay_check(&single, &zero, 5.0, env.c_lambda, env.lambda));

    let huge = model.m() * 1e12;
    assert!(delay_upper_bound_small_gain(&single, &huge).unwrap() < 1e-10);
    assert!(matches!(
        delay_upper_bound_small_gain(model.a(), model.m()),
        Err(Error::NotHurwitz { .. })
    ));
}

#[test]
fn solver_certificate_survives_text_export() {
    let (f, g) = two_input();
    let cert = certificate_at(&f, &g, 0.215, 0.0).expect("certificate at 0.215");
    let text = certificate_io::to_text(&cert);
    let parsed = certificate_io::from_text(&text).unwrap();
    assert_eq!(parsed, cert);
    assert!(verify_certificate(&parsed));
}

fn hurwitz(n: usize, entries: &[f64], margin: f64) -> DMatrix<f64> {
    let r = DMatrix::from_fn(n, n, |i, j| entries[i * 6 + j]);
    let shift = linalg::spectral_abscissa(&r) + margin;
    r - DMatrix::identity(n, n) * shift
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn constructive_certificate_exists_for_small_delay(
        n in 1usize..=6,
        f_entries in proptest::collection::vec(-3.0f64..3.0, 36),
        g_entries in proptest::collection::vec(-3.0f64..3.0, 36),
        margin in 0.05f64..2.0,
    ) {
        let f = hurwitz(n, &f_entries, margin);
        let g = DMatrix::from_fn(n, n, |i, j| g_entries[i * 6 + j]);
        let vars = constructive_variables(&f).unwrap();
        let mut h = 1.0;
        let mut found = false;
        for _ in 0..60 {
            let cert = LkCertificate {
                vars: vars.clone(),
                problem: ThetaProblem::new(f.clone(), g.clone(), h, 0.0).unwrap(),
                resolution: None,
                iterations: 0,
            };
            if verify_certificate(&cert) {
                found = true;
                break;
            }
            h /= 2.0;
        }
        prop_assert!(found);
    }

    #[test]
    fn theta_is_exactly_symmetric(
        n in 1usize..=4,
        entries in proptest::collection::vec(-2.0f64..2.0, 6 * 36),
        h in 1e-3f64..2.0,
        kappa in 0.0f64..3.0,
    ) {
        let m = |k: usize| DMatrix::from_fn(n, n, |i, j| entries[k * 36 + i * 6 + j]);
        let sym = |k: usize| { let a = m(k); &a + a.transpose() };
        let problem = ThetaProblem::new(m(0), m(1), h, kappa).unwrap();
        let vars = robustness::LmiVariables { p1: sym(2), p2: m(3), p3: m(4), q: sym(5) };
        let theta = robustness::build_theta(&problem, &vars);
        prop_assert_eq!(theta.clone(), theta.transpose());
    }
}
