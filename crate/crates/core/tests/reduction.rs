mod common;

use std::f64::consts::PI;

use beamdelay_core::reduction::{self, InputSelection};
use beamdelay_core::spectral::{self, BeamParams};
use beamdelay_core::{linalg, Error};
use common::simpson;
use proptest::prelude::*;

/// `b_{n,ε,m} = -λ_{n,ε}⟨L e_m, ψ_{n,ε}⟩ + ⟨U L e_m, ψ_{n,ε}⟩` with the cubic
/// lifting `L u = ((u2 - u1)x³/6 + u1 x²/2 - (2u1 + u2)x/6, 0)`.
/// For a cubic first component, `U (ℓ, 0) = (0, β ℓ)`.
fn input_entry_by_quadrature(p: &BeamParams, n: usize, plus: bool, m: usize) -> f64 {
    let [minus_mode, plus_mode] = spectral::mode_pair(p, n);
    let (mode, other) = if plus { (plus_mode, minus_mode) } else { (minus_mode, plus_mode) };
    let (u1, u2) = if m == 1 { (1.0, 0.0) } else { (0.0, 1.0) };
    let lift = |x: f64| (u2 - u1) * x.powi(3) / 6.0 + u1 * x * x / 2.0 - (2.0 * u1 + u2) * x / 6.0;
    let lift_xx = |x: f64| (u2 - u1) * x + u1;
    let nn = (n * n) as f64 * PI * PI;
    let s = |x: f64| (n as f64 * PI * x).sin();
    let curvature_pairing = simpson(|x| lift_xx(x) * mode.c * other.lambda / nn * s(x), 4000);
    let velocity_pairing = simpson(|x| p.beta() * lift(x) * mode.c * s(x), 4000);
    -mode.lambda * curvature_pairing + velocity_pairing
}

#[test]
fn input_block_matches_lifting_oracle() {
    let p = common::reference_params();
    for n in 1..=8 {
        let b = reduction::input_block(&p, n);
        for (row, plus) in [(0, false), (1, true)] {
            for m in 1..=2 {
                let oracle = input_entry_by_quadrature(&p, n, plus, m);
                assert!(
                    (b[(row, m - 1)] - oracle).abs() < 1e-9 * (1.0 + oracle.abs()),
                    "n = {n}, row {row}, m = {m}: {} vs {oracle}",
                    b[(row, m - 1)]
                );
            }
        }
    }
}

#[test]
fn delay_blocks_are_bounded_for_forty_modes() {
    let p = common::reference_params();
    let mut previous = f64::INFINITY;
    for n in 1..=40 {
        let block = reduction::delay_block(&p, n);
        let norm = block.singular_values().max();
        let bound = reduction::delay_block_bound(&p, n);
        assert!(norm <= bound * (1.0 + 1e-12), "n = {n}: {norm} > {bound}");
        assert!((norm - reduction::delay_block_norm(&p, n)).abs() < 1e-12 * bound);
        assert!(bound < previous);
        previous = bound;
        assert!(block.trace().abs() < 1e-12 * bound);
        assert!(block.determinant().abs() < 1e-12 * bound * bound);
    }
}

#[test]
fn reference_delay_bound_value() {
    let p = BeamParams::new(1.5, 50.0, 50.0).unwrap();
    let m1 = reduction::delay_block_bound(&p, 1);
    let expected = 2f64.sqrt() * 1.5 * 50.0 / (1.25 * PI.powi(4) + 100.0).sqrt();
    assert!((m1 - expected).abs() < 1e-12);
    assert!((m1 - 7.122).abs() < 1e-3);
}

#[test]
fn mode_count_reference_and_gates() {
    let p = common::reference_params();
    let check = reduction::small_gain_mode_count(&p, 2).unwrap();
    assert!(check.satisfied);
    // Independent evaluation with the textbook root.
    let (_, lambda3) = common::quadratic_roots(1.5, 100.0, 3);
    let lhs = 60.0 * 2.25 * 2500.0 / (1.25 * 81.0 * PI.powi(4) + 100.0) / (lambda3 * lambda3);
    assert!((check.lhs - lhs).abs() < 1e-10);
    assert!((check.lhs - 0.0303).abs() < 1e-3);
    assert_eq!(
        reduction::small_gain_mode_count(&p, 0).unwrap_err(),
        Error::BelowUnstableCount { n0: 0, unstable: 1 }
    );
    let tiny = BeamParams::new(1.5, 50.0, 1e-9).unwrap();
    assert!(reduction::small_gain_mode_count(&tiny, 1).unwrap().satisfied);
}

#[test]
fn reference_models_are_controllable() {
    let p = common::reference_params();
    for n0 in 1..=4 {
        let model = reduction::assemble(&p, n0).unwrap();
        for sel in [InputSelection::Full, InputSelection::Column1, InputSelection::Column2] {
            assert!(reduction::controllability_check(&model, sel), "N0 = {n0}, {sel:?}");
        }
    }
    let model = reduction::assemble(&p, 1).unwrap();
    assert_eq!(reduction::kalman_rank(model.a(), &InputSelection::Column1.select(model.b())), 2);
}

#[test]
fn block_diagonal_delay_norm() {
    let p = common::reference_params();
    let model = reduction::assemble(&p, 4).unwrap();
    let norm = linalg::spectral_norm(model.m());
    let max_block = (1..=4).map(|n| reduction::delay_block_norm(&p, n)).fold(0.0, f64::max);
    assert!((norm - max_block).abs() < 1e-12 * norm);
    assert!(norm <= reduction::delay_block_bound(&p, 1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn delay_bound_holds_for_random_parameters(
        alpha in 1.01f64..5.0,
        beta0 in 0.0f64..200.0,
        gamma in 0.01f64..200.0,
        n in 1usize..40,
    ) {
        let p = BeamParams::new(alpha, beta0, gamma).unwrap();
        let norm = reduction::delay_block(&p, n).singular_values().max();
        prop_assert!(norm <= reduction::delay_block_bound(&p, n) * (1.0 + 1e-12));
    }

    #[test]
    fn mode_count_lhs_decreases_in_n0(
        alpha in 1.01f64..5.0,
        beta0 in 0.0f64..200.0,
        gamma in 0.01f64..200.0,
    ) {
        let p = BeamParams::new(alpha, beta0, gamma).unwrap();
        let start = spectral::unstable_count(&p).max(1);
        let mut previous = f64::INFINITY;
        let mut satisfied = false;
        for n0 in start..start + 8 {
            let check = reduction::small_gain_mode_count(&p, n0).unwrap();
            prop_assert!(check.lhs < previous);
            prop_assert!(!satisfied || check.satisfied);
            satisfied = check.satisfied;
            previous = check.lhs;
        }
    }

    #[test]
    fn random_models_are_controllable_for_every_selection(
        alpha in 1.01f64..5.0,
        beta0 in 0.0f64..200.0,
        gamma in 0.01f64..200.0,
        n0 in 1usize..=4,
    ) {
        let p = BeamParams::new(alpha, beta0, gamma).unwrap();
        let model = reduction::assemble(&p, n0).unwrap();
        for sel in [InputSelection::Full, InputSelection::Column1, InputSelection::Column2] {
            prop_assert!(reduction::controllability_check(&model, sel));
        }
        prop_assert!(model.b().iter().all(|v| *v != 0.0));
    }
}
