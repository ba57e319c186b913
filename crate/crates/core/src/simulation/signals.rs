//! Delay signal, disturbances and initial history.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type TimeFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type SpaceFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// A function of `(t, x)` or `(τ, x)`.
pub type FieldFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type BoundaryFn = Arc<dyn Fn(f64) -> [f64; 2] + Send + Sync>;

#[derive(Clone)]
enum DelayKind {
    Constant(f64),
    Sinusoidal { offset: f64, amplitude: f64, frequency: f64 },
    Custom(TimeFn),
}

/// Time-varying delay `h(t)` with declared bounds `h_m ≤ h(t) ≤ h_M`.
#[derive(Clone)]
pub struct DelaySignal {
    h_min: f64,
    h_max: f64,
    kind: DelayKind,
}

impl fmt::Debug for DelaySignal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.kind {
            DelayKind::Constant(h) => format!("Constant({h})"),
            DelayKind::Sinusoidal { offset, amplitude, frequency } => {
                format!("Sinusoidal({offset} + {amplitude} sin(2π·{frequency}·t))")
            }
            DelayKind::Custom(_) => "Custom".to_string(),
        };
        f.debug_struct("DelaySignal")
            .field("h_min", &self.h_min)
            .field("h_max", &self.h_max)
            .field("kind", &kind)
            .finish()
    }
}

impl DelaySignal {
    fn check_bounds(h_min: f64, h_max: f64) -> Result<()> {
        if !(h_min.is_finite() && h_max.is_finite() && h_min > 0.0 && h_max >= h_min) {
            return Err(Error::InvalidArgument(format!(
                "delay bounds must satisfy 0 < h_m <= h_M, got [{h_min}, {h_max}]"
            )));
        }
        Ok(())
    }

    pub fn constant(h: f64) -> Result<Self> {
        Self::check_bounds(h, h)?;
        Ok(Self { h_min: h, h_max: h, kind: DelayKind::Constant(h) })
    }

    /// `h(t) = offset + amplitude · sin(2π · frequency · t)`.
    pub fn sinusoidal(offset: f64, amplitude: f64, frequency: f64) -> Result<Self> {
        if !(amplitude.is_finite() && frequency.is_finite()) {
            return Err(Error::InvalidArgument("non-finite delay parameters".into()));
        }
        let h_min = offset - amplitude.abs();
        let h_max = offset + amplitude.abs();
        Self::check_bounds(h_min, h_max)?;
        Ok(Self { h_min, h_max, kind: DelayKind::Sinusoidal { offset, amplitude, frequency } })
    }

    /// Arbitrary evaluator. The bounds are checked at every evaluation
    /// during a simulation.
    pub fn custom(h_min: f64, h_max: f64, h: TimeFn) -> Result<Self> {
        Self::check_bounds(h_min, h_max)?;
        Ok(Self { h_min, h_max, kind: DelayKind::Custom(h) })
    }

    pub fn h_min(&self) -> f64 {
        self.h_min
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn eval(&self, t: f64) -> f64 {
        match &self.kind {
            DelayKind::Constant(h) => *h,
            DelayKind::Sinusoidal { offset, amplitude, frequency } => {
                offset + amplitude * (2.0 * PI * frequency * t).sin()
            }
            DelayKind::Custom(h) => h(t),
        }
    }

    /// `h(t)`, or an error when it leaves `[h_m, h_M]`.
    pub fn checked(&self, t: f64) -> Result<f64> {
        let h = self.eval(t);
        let slack = 1e-12 * self.h_max;
        if !(h >= self.h_min - slack && h <= self.h_max + slack) {
            return Err(Error::DelayOutOfRange { t, h, h_min: self.h_min, h_max: self.h_max });
        }
        Ok(h)
    }
}

/// One term `a(t) · s(x)` of a separable distributed disturbance.
#[derive(Clone)]
pub struct SeparableTerm {
    pub time: TimeFn,
    pub space: SpaceFn,
}

#[derive(Clone, Default)]
pub enum Distributed {
    #[default]
    None,
    /// `Σ a_j(t) s_j(x)`; spatial projections are computed once.
    Separable(Vec<SeparableTerm>),
    General(FieldFn),
}

/// Distributed disturbance `d_d(t, x)` and boundary disturbance
/// `d_b(t) = (d_{b,1}(t), d_{b,2}(t))`.
#[derive(Clone, Default)]
pub struct DisturbanceSpec {
    pub distributed: Distributed,
    pub boundary: Option<BoundaryFn>,
}

impl fmt::Debug for DisturbanceSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match &self.distributed {
            Distributed::None => "None".to_string(),
            Distributed::Separable(terms) => format!("Separable({} terms)", terms.len()),
            Distributed::General(_) => "General".to_string(),
        };
        f.debug_struct("DisturbanceSpec")
            .field("distributed", &d)
            .field("boundary", &self.boundary.is_some())
            .finish()
    }
}

impl DisturbanceSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn distributed_at(&self, t: f64, x: f64) -> f64 {
        match &self.distributed {
            Distributed::None => 0.0,
            Distributed::Separable(terms) => terms.iter().map(|s| (s.time)(t) * (s.space)(x)).sum(),
            Distributed::General(d) => d(t, x),
        }
    }

    pub fn boundary_at(&self, t: f64) -> [f64; 2] {
        self.boundary.as_ref().map_or([0.0, 0.0], |b| b(t))
    }
}

/// Initial history `Φ(τ) = (y0(τ, ·), yt0(τ, ·))` on `τ ∈ [-h_M, 0]`.
///
/// The curvature `∂ₓₓ y0` is required because the modal projection uses the
/// energy inner product. The `τ`-derivatives are optional; when absent,
/// central differences are used for `‖Φ‖_{1,h_M}`.
#[derive(Clone)]
pub struct InitialHistory {
    y0: FieldFn,
    y0_xx: FieldFn,
    yt0: FieldFn,
    tau_derivatives: Option<(FieldFn, FieldFn)>,
}

impl fmt::Debug for InitialHistory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("InitialHistory")
            .field("tau_derivatives", &self.tau_derivatives.is_some())
            .finish_non_exhaustive()
    }
}

impl InitialHistory {
    pub fn new(y0: FieldFn, y0_xx: FieldFn, yt0: FieldFn) -> Self {
        Self { y0, y0_xx, yt0, tau_derivatives: None }
    }

    /// Supply `∂_τ ∂ₓₓ y0` and `∂_τ yt0`.
    pub fn with_tau_derivatives(mut self, y0_xx_tau: FieldFn, yt0_tau: FieldFn) -> Self {
        self.tau_derivatives = Some((y0_xx_tau, yt0_tau));
        self
    }

    pub fn y0(&self, tau: f64, x: f64) -> f64 {
        (self.y0)(tau, x)
    }

    pub fn y0_xx(&self, tau: f64, x: f64) -> f64 {
        (self.y0_xx)(tau, x)
    }

    pub fn yt0(&self, tau: f64, x: f64) -> f64 {
        (self.yt0)(tau, x)
    }

    pub fn tau_derivatives(&self) -> Option<(&FieldFn, &FieldFn)> {
        self.tau_derivatives.as_ref().map(|(a, b)| (a, b))
    }

    /// Check `y0(τ, 0) = y0(τ, 1) = 0` on 41 points of `[-h_M, 0]`.
    pub fn validate(&self, h_max: f64) -> Result<()> {
        let samples = 40;
        for k in 0..=samples {
            let tau = -h_max * k as f64 / samples as f64;
            let left = self.y0(tau, 0.0);
            let right = self.y0(tau, 1.0);
            let scale = 1.0 + self.y0(tau, 0.5).abs();
            if !(left.abs() <= 1e-12 * scale && right.abs() <= 1e-12 * scale) {
                return Err(Error::NotPinned(format!(
                    "y0({tau}, 0) = {left}, y0({tau}, 1) = {right}"
                )));
            }
        }
        Ok(())
    }
}
