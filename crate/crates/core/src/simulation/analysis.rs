//! Field reconstruction, norms and ISS diagnostics of a trajectory.

use std::f64::consts::PI;

use super::signals::InitialHistory;
use super::Trajectory;
use crate::linalg;
use crate::quadrature::CompositeRule;
use crate::spectral::{self, BeamParams};

/// `‖X‖² = Σ_n c_nᵀ G_n c_n` with the exact per-pair Gram blocks.
pub fn state_norm(coeffs: &[f64], params: &BeamParams) -> f64 {
    let mut sq = 0.0;
    for (n, pair) in coeffs.chunks_exact(2).enumerate() {
        let g = spectral::gram_cross_term(params, n + 1);
        sq += pair[0] * pair[0] + pair[1] * pair[1] + 2.0 * g * pair[0] * pair[1];
    }
    sq.max(0.0).sqrt()
}

/// `(y(x), y_t(x))` with `y = Σ c_{n,ε} sin(nπx)/k_{n,ε}` and
/// `y_t = Σ c_{n,ε} λ_{n,ε} sin(nπx)/k_{n,ε}`.
pub fn field_at(coeffs: &[f64], params: &BeamParams, x: f64) -> (f64, f64) {
    let mut y = 0.0;
    let mut yt = 0.0;
    for (n, pair) in coeffs.chunks_exact(2).enumerate() {
        let s = ((n + 1) as f64 * PI * x).sin();
        for (c, mode) in pair.iter().zip(spectral::mode_pair(params, n + 1)) {
            y += c * s / mode.k;
            yt += c * mode.lambda * s / mode.k;
        }
    }
    (y, yt)
}

/// `points` equally spaced nodes on `[0, 1]`, endpoints included.
pub fn uniform_grid(points: usize) -> Vec<f64> {
    assert!(points >= 2);
    (0..points).map(|i| i as f64 / (points - 1) as f64).collect()
}

/// Evaluates `sin(nπx)/k_{n,ε}` once per grid point and mode.
struct FieldBasis {
    /// `[x][coefficient]` entries of the displacement and velocity profiles.
    disp: Vec<Vec<f64>>,
    vel: Vec<Vec<f64>>,
}

impl FieldBasis {
    fn new(params: &BeamParams, n_sim: usize, x_grid: &[f64]) -> Self {
        let modes: Vec<_> = (1..=n_sim).flat_map(|n| spectral::mode_pair(params, n)).collect();
        let mut disp = Vec::with_capacity(x_grid.len());
        let mut vel = Vec::with_capacity(x_grid.len());
        for &x in x_grid {
            let d: Vec<f64> = modes
                .iter()
                .map(|m| {
                    // Exact zeros at the pinned ends.
                    if x == 0.0 || x == 1.0 {
                        0.0
                    } else {
                        (m.index.n() as f64 * PI * x).sin() / m.k
                    }
                })
                .collect();
            vel.push(d.iter().zip(&modes).map(|(v, m)| v * m.lambda).collect());
            disp.push(d);
        }
        Self { disp, vel }
    }

    fn eval(rows: &[Vec<f64>], coeffs: &[f64]) -> Vec<f64> {
        rows.iter().map(|r| r.iter().zip(coeffs).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Displacement and velocity on `x_grid` at every recorded time.
#[derive(Debug, Clone)]
pub struct FieldSnapshots {
    pub x_grid: Vec<f64>,
    pub times: Vec<f64>,
    pub displacement: Vec<Vec<f64>>,
    pub velocity: Vec<Vec<f64>>,
}

pub fn reconstruct_field(traj: &Trajectory, x_grid: &[f64]) -> FieldSnapshots {
    let basis = FieldBasis::new(traj.params(), traj.n_sim(), x_grid);
    let displacement = traj.coeffs().iter().map(|c| FieldBasis::eval(&basis.disp, c)).collect();
    let velocity = traj.coeffs().iter().map(|c| FieldBasis::eval(&basis.vel, c)).collect();
    FieldSnapshots { x_grid: x_grid.to_vec(), times: traj.times().to_vec(), displacement, velocity }
}

/// `max_x |y(x)|` over `x_grid`.
pub fn sup_displacement(coeffs: &[f64], params: &BeamParams, x_grid: &[f64]) -> f64 {
    x_grid.iter().map(|&x| field_at(coeffs, params, x).0.abs()).fold(0.0, f64::max)
}

/// `‖Φ‖_{1,h_M} = sqrt(‖Φ(0)‖² + ∫_{-h_M}^0 ‖Φ̇(τ)‖² dτ)` in the energy norm
/// `‖(y1, y2)‖² = ∫ y1″² + y2²`.
pub fn norm_1_hm(ic: &InitialHistory, h_max: f64) -> f64 {
    let space = CompositeRule::unit_interval(256);
    let energy = |f: &dyn Fn(f64) -> (f64, f64)| {
        space.integrate(|x| {
            let (a, b) = f(x);
            a * a + b * b
        })
    };
    let at_zero = energy(&|x| (ic.y0_xx(0.0, x), ic.yt0(0.0, x)));
    let time = CompositeRule::new(-h_max, 0.0, 8, 8);
    let derivative_sq = match ic.tau_derivatives() {
        Some((dcurv, dvel)) => time.integrate(|tau| energy(&|x| (dcurv(tau, x), dvel(tau, x)))),
        None => {
            let step = h_max / 1000.0;
            time.integrate(|tau| {
                energy(&|x| {
                    (
                        (ic.y0_xx(tau + step, x) - ic.y0_xx(tau - step, x)) / (2.0 * step),
                        (ic.yt0(tau + step, x) - ic.yt0(tau - step, x)) / (2.0 * step),
                    )
                })
            })
        }
    };
    (at_zero + derivative_sq).sqrt()
}

#[derive(Debug, Clone, Copy)]
pub struct IssOptions {
    /// Start of the disturbance-free tail used for the rate fit.
    pub tail_start: f64,
    /// Interval where disturbances act, if any.
    pub disturbance_window: Option<(f64, f64)>,
    pub h_max: f64,
}

#[derive(Debug, Clone)]
pub struct IssReport {
    /// Least-squares rate `κ` of `log ‖X(t)‖ ≈ a - κ t` on the tail.
    pub fitted_rate: Option<f64>,
    /// `‖X(T)‖ ≤ Ĉ e^{-κ(T - t*)} sup_{window} ‖X‖`, with `Ĉ` the fitted
    /// constant; `None` when inconclusive or without a window.
    pub fading_memory: Option<bool>,
    /// `min_t (‖K‖/√m_R ‖X(t)‖ - ‖u(t)‖)`; `None` in open loop.
    pub control_margin: Option<f64>,
    pub initial_norm: f64,
    pub conclusive: bool,
}

pub const MIN_TAIL_SAMPLES: usize = 10;

pub fn iss_diagnostics(traj: &Trajectory, ic: &InitialHistory, opts: &IssOptions) -> IssReport {
    let params = traj.params();
    let tail: Vec<(f64, f64)> = traj
        .times()
        .iter()
        .zip(traj.state_norms())
        .filter(|(t, x)| **t >= opts.tail_start && **x > 0.0)
        .map(|(t, x)| (*t, x.ln()))
        .collect();
    let conclusive = tail.len() >= MIN_TAIL_SAMPLES;
    let fit = conclusive.then(|| {
        let n = tail.len() as f64;
        let mean_t = tail.iter().map(|p| p.0).sum::<f64>() / n;
        let mean_l = tail.iter().map(|p| p.1).sum::<f64>() / n;
        let sxx: f64 = tail.iter().map(|p| (p.0 - mean_t).powi(2)).sum();
        let sxy: f64 = tail.iter().map(|p| (p.0 - mean_t) * (p.1 - mean_l)).sum();
        let slope = sxy / sxx;
        (slope, mean_l - slope * mean_t)
    });
    let fitted_rate = fit.map(|(slope, _)| -slope);

    let fading_memory = match (fit, opts.disturbance_window) {
        (Some((slope, intercept)), Some((w0, w1))) => {
            let sup = traj
                .times()
                .iter()
                .zip(traj.state_norms())
                .filter(|(t, _)| **t >= w0 && **t <= w1)
                .map(|(_, x)| *x)
                .fold(0.0, f64::max);
            let kappa = -slope;
            let t_star = opts.tail_start;
            // Smallest constant making the fit an upper envelope of the tail.
            let worst_residual = tail
                .iter()
                .map(|(t, l)| l - (intercept + slope * t))
                .fold(f64::NEG_INFINITY, f64::max);
            let envelope_at = |t: f64| (intercept + slope * t + worst_residual).exp();
            let c_hat = envelope_at(t_star) / sup;
            let t_final = *traj.times().last().unwrap();
            let x_final = *traj.state_norms().last().unwrap();
            let bound = c_hat * (-kappa * (t_final - t_star)).exp() * sup;
            Some(sup > 0.0 && kappa > 0.0 && x_final <= bound * (1.0 + 1e-12) && x_final < sup)
        }
        _ => None,
    };

    let control_margin = traj.gain().map(|k| {
        let factor = linalg::spectral_norm(k) / spectral::riesz_constants(params).m_r.sqrt();
        traj.state_norms()
            .iter()
            .zip(traj.controls())
            .map(|(x, u)| factor * x - (u[0] * u[0] + u[1] * u[1]).sqrt())
            .fold(f64::INFINITY, f64::min)
    });

    IssReport {
        fitted_rate,
        fading_memory,
        control_margin,
        initial_norm: norm_1_hm(ic, opts.h_max),
        conclusive,
    }
}
