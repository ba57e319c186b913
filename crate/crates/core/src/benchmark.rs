//! Reference scenario: `α = 1.5`, `β0 = 50`, `γ = 50`, `N0 = 2`, closed-loop
//! poles `{-5, -6, -7, -8}`, delay `h(t) = 0.12 + 0.1 sin(6πt)`, vanishing
//! disturbances centred at `t = 5` and a polynomial/sinusoidal history.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::error::Result;
use crate::reduction::{self, TruncatedModel};
use crate::simulation::{DelaySignal, Distributed, DisturbanceSpec, InitialHistory, SeparableTerm};
use crate::spectral::BeamParams;
use crate::synthesis::{self, ActuationConfig, FeedbackGain};

pub const ALPHA: f64 = 1.5;
pub const BETA0: f64 = 50.0;
pub const GAMMA: f64 = 50.0;
pub const N0: usize = 2;
pub const POLES: [f64; 4] = [-5.0, -6.0, -7.0, -8.0];

/// Largest certified delays reported for the reference gains.
pub const REPORTED_DELAY_SINGLE: f64 = 0.038;
pub const REPORTED_DELAY_TWO: f64 = 0.239;
/// Reported small-gain upper bounds.
pub const REPORTED_BOUND_SINGLE: f64 = 0.0070;
pub const REPORTED_BOUND_TWO: f64 = 0.0148;

/// Interval where the disturbances are non-negligible (`e^{-2(t-5)²} > 3e-4`).
pub const DISTURBANCE_WINDOW: (f64, f64) = (3.0, 7.0);

pub fn params() -> BeamParams {
    BeamParams::new(ALPHA, BETA0, GAMMA).expect("reference parameters are valid")
}

pub fn model() -> TruncatedModel {
    reduction::assemble(&params(), N0).expect("N0 = 2 is valid")
}

/// Published single-input gain (torque at `x = 0`).
pub fn published_gain_single() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[-1.7614, 0.0276, 11.8714, -0.0360, 0.0, 0.0, 0.0, 0.0])
}

/// Published two-input gain.
pub fn published_gain_two() -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 4, &[2.0076, 0.4186, 5.0313, 0.1129, 1.9972, 0.4278, -4.5575, -0.0178])
}

/// Gain placed by this crate for `config`.
pub fn placed_gain(config: ActuationConfig) -> Result<FeedbackGain> {
    synthesis::place_poles(&model(), config, &synthesis::real_poles(&POLES))
}

pub fn delay() -> DelaySignal {
    DelaySignal::sinusoidal(0.12, 0.1, 3.0).expect("reference delay is valid")
}

fn pulse(t: f64) -> f64 {
    (-2.0 * (t - 5.0).powi(2)).exp()
}

/// `d_d = 3 e^{-2(t-5)²} (2 + cos 2πx)`,
/// `d_b = (cos(2πt) e^{-2(t-5)²}, -sin(3πt) e^{-2(t-5)²})`.
pub fn disturbances() -> DisturbanceSpec {
    DisturbanceSpec {
        distributed: Distributed::Separable(vec![SeparableTerm {
            time: Arc::new(|t| 3.0 * pulse(t)),
            space: Arc::new(|x| 2.0 + (2.0 * PI * x).cos()),
        }]),
        boundary: Some(Arc::new(|t| [(2.0 * PI * t).cos() * pulse(t), -(3.0 * PI * t).sin() * pulse(t)])),
    }
}

/// `y0 = 2(1-τ)² x(1-x)`, `yt0 = -(1-τ)² sin(4πx)(1+2x)`.
pub fn initial_history() -> InitialHistory {
    InitialHistory::new(
        Arc::new(|t, x| 2.0 * (1.0 - t).powi(2) * x * (1.0 - x)),
        Arc::new(|t, _| -4.0 * (1.0 - t).powi(2)),
        Arc::new(|t, x| -(1.0 - t).powi(2) * (4.0 * PI * x).sin() * (1.0 + 2.0 * x)),
    )
    .with_tau_derivatives(
        Arc::new(|t, _| 8.0 * (1.0 - t)),
        Arc::new(|t, x| 2.0 * (1.0 - t) * (4.0 * PI * x).sin() * (1.0 + 2.0 * x)),
    )
}
