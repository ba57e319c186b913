//! Scenario files: TOML with named parametric families for the delay, the
//! disturbances and the initial history.

use std::f64::consts::PI;
use std::sync::Arc;

use beamdelay_core::simulation::{
    BoundaryFn, DelaySignal, Distributed, DisturbanceSpec, FieldFn, InitialHistory, SeparableTerm,
};
use beamdelay_core::{ActuationConfig, BeamParams};
use nalgebra::DMatrix;
use serde::Deserialize;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub beam: BeamSection,
    pub control: ControlSection,
    pub delay: DelaySection,
    #[serde(default)]
    pub disturbance: DisturbanceSection,
    pub initial: InitialSection,
    pub simulation: SimulationSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BeamSection {
    pub alpha: f64,
    pub beta0: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Actuation {
    Left,
    Right,
    Both,
}

impl Actuation {
    pub fn config(self) -> ActuationConfig {
        match self {
            Actuation::Left => ActuationConfig::LeftOnly,
            Actuation::Right => ActuationConfig::RightOnly,
            Actuation::Both => ActuationConfig::BothEnds,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSection {
    pub n0: usize,
    pub actuation: Actuation,
    pub poles: Vec<f64>,
    #[serde(default)]
    pub open_loop: bool,
    /// Inline `2 × 2N0` gain; skips pole placement in `simulate`.
    #[serde(default)]
    pub gain: Option<Vec<Vec<f64>>>,
    #[serde(default = "default_resolution")]
    pub resolution: f64,
}

fn default_resolution() -> f64 {
    1e-3
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum DelaySection {
    Constant { value: f64 },
    /// `offset + amplitude · sin(2π · frequency · t)`.
    Sinusoidal { offset: f64, amplitude: f64, frequency: f64 },
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisturbanceSection {
    #[serde(default)]
    pub distributed: Vec<PulseTerm>,
    #[serde(default)]
    pub boundary: BoundarySection,
}

/// `amplitude · exp(-rate (t - center)²) · s(x)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PulseTerm {
    pub amplitude: f64,
    pub center: f64,
    pub rate: f64,
    pub space: TrigSeries,
}

/// `constant + Σ a cos(kπx) + Σ b sin(kπx)`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrigSeries {
    #[serde(default)]
    pub constant: f64,
    #[serde(default)]
    pub cosine: Vec<Harmonic>,
    #[serde(default)]
    pub sine: Vec<Harmonic>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Harmonic {
    pub amplitude: f64,
    pub wavenumber: f64,
}

impl TrigSeries {
    fn eval(&self, x: f64) -> f64 {
        let c: f64 = self.cosine.iter().map(|h| h.amplitude * (h.wavenumber * PI * x).cos()).sum();
        let s: f64 = self.sine.iter().map(|h| h.amplitude * (h.wavenumber * PI * x).sin()).sum();
        self.constant + c + s
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundarySection {
    pub left: Option<BoundaryPulse>,
    pub right: Option<BoundaryPulse>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Carrier {
    Cos,
    Sin,
    One,
}

/// `amplitude · carrier(2π · frequency · t) · exp(-rate (t - center)²)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundaryPulse {
    pub amplitude: f64,
    pub center: f64,
    pub rate: f64,
    pub carrier: Carrier,
    #[serde(default)]
    pub frequency: f64,
}

impl BoundaryPulse {
    fn eval(&self, t: f64) -> f64 {
        let phase = 2.0 * PI * self.frequency * t;
        let carrier = match self.carrier {
            Carrier::Cos => phase.cos(),
            Carrier::Sin => phase.sin(),
            Carrier::One => 1.0,
        };
        self.amplitude * carrier * (-self.rate * (t - self.center).powi(2)).exp()
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialSection {
    #[serde(default)]
    pub displacement: Vec<SeparableProfile>,
    #[serde(default)]
    pub velocity: Vec<SeparableProfile>,
}

/// `T(τ) · S(x)` with `T` a polynomial in `τ` and `S` a polynomial in `x`,
/// optionally multiplied by `sin(kπx)`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableProfile {
    pub time: Vec<f64>,
    pub space: SpaceProfile,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceProfile {
    pub polynomial: Vec<f64>,
    #[serde(default)]
    pub sine_wavenumber: Option<u32>,
}

/// Value and first two derivatives of `Σ c_i x^i`.
fn polynomial(coeffs: &[f64], x: f64) -> [f64; 3] {
    let mut out = [0.0; 3];
    for c in coeffs.iter().rev() {
        out[2] = out[2] * x + 2.0 * out[1];
        out[1] = out[1] * x + out[0];
        out[0] = out[0] * x + c;
    }
    out
}

impl SpaceProfile {
    /// `(S, S″)`.
    fn eval(&self, x: f64) -> (f64, f64) {
        let [p, dp, ddp] = polynomial(&self.polynomial, x);
        match self.sine_wavenumber {
            None => (p, ddp),
            Some(k) => {
                let w = k as f64 * PI;
                let (s, c) = (w * x).sin_cos();
                (p * s, ddp * s + 2.0 * dp * w * c - w * w * p * s)
            }
        }
    }
}

impl SeparableProfile {
    fn time(&self, tau: f64) -> [f64; 2] {
        let [v, d, _] = polynomial(&self.time, tau);
        [v, d]
    }
}

/// Which function of a profile list to build.
#[derive(Clone, Copy)]
enum Part {
    Value,
    Curvature,
    TimeDerivative,
    CurvatureTimeDerivative,
}

fn profile_sum(terms: &[SeparableProfile], part: Part) -> FieldFn {
    let terms = terms.to_vec();
    Arc::new(move |tau, x| {
        terms
            .iter()
            .map(|term| {
                let [t, dt] = term.time(tau);
                let (s, ds) = term.space.eval(x);
                match part {
                    Part::Value => t * s,
                    Part::Curvature => t * ds,
                    Part::TimeDerivative => dt * s,
                    Part::CurvatureTimeDerivative => dt * ds,
                }
            })
            .sum()
    })
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    pub n_sim: usize,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default)]
    pub record_interval: Option<f64>,
    #[serde(default = "default_x_points")]
    pub x_points: usize,
    #[serde(default)]
    pub tail_start: Option<f64>,
    #[serde(default)]
    pub disturbance_window: Option<[f64; 2]>,
}

fn default_x_points() -> usize {
    101
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub dir: String,
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn default_out() -> String {
    "out".to_string()
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<String>,
    pub dt: Option<f64>,
    pub modes: Option<usize>,
    pub actuation: Option<Actuation>,
    pub open_loop: bool,
    pub resolution: Option<f64>,
}

/// A validated scenario with the core objects built.
#[derive(Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub params: BeamParams,
    pub actuation: ActuationConfig,
    pub delay: DelaySignal,
    pub disturbances: DisturbanceSpec,
    pub initial: InitialHistory,
    pub gain: Option<DMatrix<f64>>,
    pub record_every: usize,
}

pub fn parse(text: &str) -> Result<ScenarioConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

fn positive(name: &str, v: f64) -> Result<(), String> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(format!("{name} must be a positive number, got {v}"))
    }
}

fn finite(name: &str, values: impl IntoIterator<Item = f64>) -> Result<(), String> {
    if values.into_iter().all(f64::is_finite) {
        Ok(())
    } else {
        Err(format!("{name} contains a non-finite value"))
    }
}

impl ScenarioConfig {
    pub fn apply(&mut self, o: &Overrides) {
        if let Some(out) = &o.out {
            self.output.dir = out.clone();
        }
        if let Some(dt) = o.dt {
            self.simulation.dt = dt;
        }
        if let Some(m) = o.modes {
            self.simulation.n_sim = m;
        }
        if let Some(a) = o.actuation {
            self.control.actuation = a;
        }
        if o.open_loop {
            self.control.open_loop = true;
        }
        if let Some(r) = o.resolution {
            self.control.resolution = r;
        }
    }

    /// Range checks and construction of the core objects. Nothing is
    /// computed beyond closed-form signal definitions.
    pub fn build(self) -> Result<Scenario, String> {
        let b = &self.beam;
        let params = BeamParams::new(b.alpha, b.beta0, b.gamma).map_err(|e| e.to_string())?;

        let c = &self.control;
        positive("control.resolution", c.resolution)?;
        if c.poles.len() != 2 * c.n0 {
            return Err(format!("control.poles must list 2 * n0 = {} values, got {}", 2 * c.n0, c.poles.len()));
        }
        finite("control.poles", c.poles.iter().copied())?;
        let gain = match &c.gain {
            None => None,
            Some(rows) => {
                if rows.len() != 2 || rows.iter().any(|r| r.len() != 2 * c.n0) {
                    return Err(format!("control.gain must be 2 rows of {} values", 2 * c.n0));
                }
                finite("control.gain", rows.iter().flatten().copied())?;
                Some(DMatrix::from_fn(2, 2 * c.n0, |i, j| rows[i][j]))
            }
        };

        let delay = match self.delay {
            DelaySection::Constant { value } => DelaySignal::constant(value),
            DelaySection::Sinusoidal { offset, amplitude, frequency } => {
                DelaySignal::sinusoidal(offset, amplitude, frequency)
            }
        }
        .map_err(|e| format!("delay: {e}"))?;

        for term in &self.disturbance.distributed {
            finite("disturbance.distributed", [term.amplitude, term.center, term.rate])?;
            if term.rate < 0.0 {
                return Err("disturbance.distributed.rate must be >= 0".into());
            }
        }
        let distributed = if self.disturbance.distributed.is_empty() {
            Distributed::None
        } else {
            Distributed::Separable(
                self.disturbance
                    .distributed
                    .iter()
                    .map(|term| {
                        let (a, c0, r) = (term.amplitude, term.center, term.rate);
                        let space = term.space.clone();
                        SeparableTerm {
                            time: Arc::new(move |t| a * (-r * (t - c0).powi(2)).exp()),
                            space: Arc::new(move |x| space.eval(x)),
                        }
                    })
                    .collect(),
            )
        };
        let bnd = self.disturbance.boundary.clone();
        for p in [&bnd.left, &bnd.right].into_iter().flatten() {
            finite("disturbance.boundary", [p.amplitude, p.center, p.rate, p.frequency])?;
            if p.rate < 0.0 {
                return Err("disturbance.boundary.rate must be >= 0".into());
            }
        }
        let boundary: Option<BoundaryFn> = if bnd.left.is_none() && bnd.right.is_none() {
            None
        } else {
            Some(Arc::new(move |t| {
                [bnd.left.as_ref().map_or(0.0, |p| p.eval(t)), bnd.right.as_ref().map_or(0.0, |p| p.eval(t))]
            }))
        };
        let disturbances = DisturbanceSpec { distributed, boundary };

        let init = &self.initial;
        for p in init.displacement.iter().chain(&init.velocity) {
            finite("initial", p.time.iter().chain(&p.space.polynomial).copied())?;
        }
        let initial = InitialHistory::new(
            profile_sum(&init.displacement, Part::Value),
            profile_sum(&init.displacement, Part::Curvature),
            profile_sum(&init.velocity, Part::Value),
        )
        .with_tau_derivatives(
            profile_sum(&init.displacement, Part::CurvatureTimeDerivative),
            profile_sum(&init.velocity, Part::TimeDerivative),
        );
        initial.validate(delay.h_max()).map_err(|e| format!("initial: {e}"))?;

        let s = &self.simulation;
        positive("simulation.dt", s.dt)?;
        positive("simulation.t_final", s.t_final)?;
        if s.n_sim == 0 {
            return Err("simulation.n_sim must be >= 1".into());
        }
        if !c.open_loop && s.n_sim < c.n0 {
            return Err(format!("simulation.n_sim = {} is below control.n0 = {}", s.n_sim, c.n0));
        }
        if s.dt > delay.h_min() / 4.0 {
            return Err(format!("simulation.dt = {} exceeds h_m / 4 = {}", s.dt, delay.h_min() / 4.0));
        }
        if s.x_points < 2 {
            return Err("simulation.x_points must be >= 2".into());
        }
        let record_every = match s.record_interval {
            None => 1,
            Some(r) => {
                positive("simulation.record_interval", r)?;
                ((r / s.dt).round() as usize).max(1)
            }
        };
        if let Some(t) = s.tail_start {
            if !(t.is_finite() && t >= 0.0) {
                return Err("simulation.tail_start must be >= 0".into());
            }
        }
        if let Some([w0, w1]) = s.disturbance_window {
            if !(w0.is_finite() && w1.is_finite() && w0 <= w1) {
                return Err("simulation.disturbance_window must be an ordered pair".into());
            }
        }
        if self.output.dir.is_empty() {
            return Err("output.dir must not be empty".into());
        }

        Ok(Scenario {
            actuation: self.control.actuation.config(),
            config: self,
            params,
            delay,
            disturbances,
            initial,
            gain,
            record_every,
        })
    }
}
