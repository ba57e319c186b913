//! Fixed-step integration of the modal delay-differential system
//!
//! ```text
//! ċ_n = Λ_n c_n + M_n (c_n(t - h(t)) - c_n) + B_n (u + d_b) + p_{d,n},   n = 1..N_sim
//! ```
//!
//! with `u = K Y`, `Y` the first `2 N0` coefficients. The scheme is classical
//! RK4. Delayed values come from a cubic Hermite interpolant built on the
//! stored nodes and their derivatives, or from the initial history itself
//! when `t - h(t) < 0`. Steps are split where `t - h(t)` crosses a
//! derivative discontinuity of the solution (`t = 0` and its first few
//! descendants), so that no interpolation interval and no RK stage straddles
//! a kink.

mod analysis;
mod export;
mod projection;
mod signals;

use std::collections::VecDeque;

use nalgebra::DMatrix;

pub use analysis::{
    field_at, iss_diagnostics, norm_1_hm, reconstruct_field, state_norm, sup_displacement,
    uniform_grid, FieldSnapshots, IssOptions, IssReport,
};
pub use export::{write_field_csv, write_trajectory_csv, FieldComponent};
pub use projection::{
    default_nodes, project_disturbance, project_initial, DisturbanceProjector, FnHistory,
    ModalHistory, ProjectedHistory, MIN_QUADRATURE_NODES,
};
pub use signals::{
    BoundaryFn, DelaySignal, Distributed, DisturbanceSpec, FieldFn, InitialHistory, SeparableTerm,
    SpaceFn, TimeFn,
};

use crate::error::{Error, Result};
use crate::reduction;
use crate::spectral::{self, BeamParams, Branch, ModeIndex};
use crate::synthesis::FeedbackGain;

#[derive(Debug, Clone, Copy)]
pub enum Control<'a> {
    OpenLoop,
    Feedback(&'a FeedbackGain),
}

#[derive(Debug, Clone, Copy)]
pub struct SimulationOptions {
    pub n_sim: usize,
    pub dt: f64,
    pub t_final: f64,
    /// Store every `record_every`-th step.
    pub record_every: usize,
    /// Generations of propagated discontinuities at which steps are split.
    pub breakpoint_generations: usize,
    /// Nodes of the spatial quadrature used for projections.
    pub quadrature_nodes: usize,
}

impl SimulationOptions {
    pub fn new(n_sim: usize, dt: f64, t_final: f64) -> Self {
        Self {
            n_sim,
            dt,
            t_final,
            record_every: 1,
            breakpoint_generations: 3,
            quadrature_nodes: default_nodes(n_sim),
        }
    }
}

/// Explicit RK4 is stable on the real axis up to about 2.785.
pub const STIFFNESS_LIMIT: f64 = 2.5;

#[derive(Debug, Clone)]
pub struct Trajectory {
    params: BeamParams,
    n_sim: usize,
    gain: Option<DMatrix<f64>>,
    times: Vec<f64>,
    coeffs: Vec<Vec<f64>>,
    controls: Vec<[f64; 2]>,
    state_norms: Vec<f64>,
    warnings: Vec<String>,
}

impl Trajectory {
    pub fn params(&self) -> &BeamParams {
        &self.params
    }

    pub fn n_sim(&self) -> usize {
        self.n_sim
    }

    /// The feedback matrix, `None` for open-loop runs.
    pub fn gain(&self) -> Option<&DMatrix<f64>> {
        self.gain.as_ref()
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn coeffs(&self) -> &[Vec<f64>] {
        &self.coeffs
    }

    pub fn controls(&self) -> &[[f64; 2]] {
        &self.controls
    }

    pub fn state_norms(&self) -> &[f64] {
        &self.state_norms
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Stored norm at the recorded time closest to `t`.
    pub fn norm_near(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s < t);
        let i = if i == self.times.len() || (i > 0 && (t - self.times[i - 1]) < (self.times[i] - t)) {
            i - 1
        } else {
            i
        };
        self.state_norms[i]
    }
}

/// Node of the solution history with its derivative.
struct Node {
    t: f64,
    y: Vec<f64>,
    f: Vec<f64>,
}

struct HistoryBuffer<'a> {
    nodes: VecDeque<Node>,
    initial: &'a dyn ModalHistory,
}

impl HistoryBuffer<'_> {
    fn value(&self, s: f64, out: &mut [f64]) -> Result<()> {
        if s < 0.0 {
            self.initial.coefficients(s, out);
            return Ok(());
        }
        let i = self.nodes.partition_point(|n| n.t <= s);
        if i == 0 {
            return Err(Error::InvalidArgument(format!("history was discarded before t = {s}")));
        }
        let left = &self.nodes[i - 1];
        if s == left.t {
            out.copy_from_slice(&left.y);
            return Ok(());
        }
        let right = self.nodes.get(i).ok_or_else(|| {
            Error::InvalidArgument(format!("delayed time {s} is ahead of the stored solution"))
        })?;
        let h = right.t - left.t;
        let theta = (s - left.t) / h;
        let t2 = theta * theta;
        let t3 = t2 * theta;
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + theta;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        for (k, o) in out.iter_mut().enumerate() {
            *o = h00 * left.y[k] + h * h10 * left.f[k] + h01 * right.y[k] + h * h11 * right.f[k];
        }
        Ok(())
    }

    fn discard_before(&mut self, cutoff: f64) {
        while self.nodes.len() > 2 && self.nodes[1].t <= cutoff {
            self.nodes.pop_front();
        }
    }
}

/// Per-mode-pair constant data.
struct ModalSystem {
    lambda: Vec<[f64; 2]>,
    m: Vec<[[f64; 2]; 2]>,
    b: Vec<[[f64; 2]; 2]>,
}

impl ModalSystem {
    fn new(params: &BeamParams, n_sim: usize) -> Self {
        let mut lambda = Vec::with_capacity(n_sim);
        let mut m = Vec::with_capacity(n_sim);
        let mut b = Vec::with_capacity(n_sim);
        for n in 1..=n_sim {
            let [minus, plus] = spectral::mode_pair(params, n);
            lambda.push([minus.lambda, plus.lambda]);
            let mn = reduction::delay_block(params, n);
            m.push([[mn[(0, 0)], mn[(0, 1)]], [mn[(1, 0)], mn[(1, 1)]]]);
            let bn = reduction::input_block(params, n);
            b.push([[bn[(0, 0)], bn[(0, 1)]], [bn[(1, 0)], bn[(1, 1)]]]);
        }
        Self { lambda, m, b }
    }
}

struct Rhs<'a> {
    system: ModalSystem,
    gain: Option<&'a DMatrix<f64>>,
    delay: &'a DelaySignal,
    dist: &'a DisturbanceSpec,
    projector: DisturbanceProjector,
    delayed: Vec<f64>,
}

impl Rhs<'_> {
    fn control(&self, y: &[f64]) -> [f64; 2] {
        match self.gain {
            None => [0.0, 0.0],
            Some(k) => {
                let mut u = [0.0; 2];
                for (r, ur) in u.iter_mut().enumerate() {
                    *ur = (0..k.ncols()).map(|j| k[(r, j)] * y[j]).sum();
                }
                u
            }
        }
    }

    fn eval(&mut self, t: f64, y: &[f64], history: &HistoryBuffer, out: &mut [f64]) -> Result<()> {
        let h = self.delay.checked(t)?;
        history.value(t - h, &mut self.delayed)?;
        let u = self.control(y);
        let db = self.dist.boundary_at(t);
        let w = [u[0] + db[0], u[1] + db[1]];
        for n in 0..self.system.lambda.len() {
            let (a, b) = (2 * n, 2 * n + 1);
            let dy = [self.delayed[a] - y[a], self.delayed[b] - y[b]];
            let m = &self.system.m[n];
            let bn = &self.system.b[n];
            let lam = &self.system.lambda[n];
            out[a] = lam[0] * y[a] + m[0][0] * dy[0] + m[0][1] * dy[1] + bn[0][0] * w[0] + bn[0][1] * w[1];
            out[b] = lam[1] * y[b] + m[1][0] * dy[0] + m[1][1] * dy[1] + bn[1][0] * w[0] + bn[1][1] * w[1];
        }
        self.projector.accumulate(t, out);
        Ok(())
    }
}

/// Discontinuity times of the solution derivatives, with their generation.
struct Breakpoints {
    points: Vec<(f64, usize)>,
    max_generation: usize,
}

impl Breakpoints {
    /// Earliest `s ∈ (t0, t1]` where `s - h(s)` crosses a tracked breakpoint
    /// of generation below the maximum.
    fn first_crossing(&self, delay: &DelaySignal, t0: f64, t1: f64) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for &(b, gen) in &self.points {
            if gen >= self.max_generation {
                continue;
            }
            let g = |s: f64| s - delay.eval(s) - b;
            let (g0, g1) = (g(t0), g(t1));
            if (g0 < 0.0) == (g1 < 0.0) || g0 == 0.0 {
                continue;
            }
            let (mut lo, mut hi) = (t0, t1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid <= lo || mid >= hi {
                    break;
                }
                if (g(mid) < 0.0) == (g0 < 0.0) {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            if best.is_none_or(|(r, _)| hi < r) {
                best = Some((hi, gen + 1));
            }
        }
        best
    }

    fn discard_before(&mut self, cutoff: f64) {
        self.points.retain(|&(b, _)| b >= cutoff);
    }
}

fn validate(
    params: &BeamParams,
    control: &Control,
    delay: &DelaySignal,
    history: &dyn ModalHistory,
    opts: &SimulationOptions,
) -> Result<()> {
    if opts.n_sim == 0 {
        return Err(Error::InvalidArgument("N_sim must be >= 1".into()));
    }
    if history.dim() != 2 * opts.n_sim {
        return Err(Error::InvalidArgument(format!(
            "history has {} coefficients, expected {}",
            history.dim(),
            2 * opts.n_sim
        )));
    }
    if !(opts.dt.is_finite() && opts.dt > 0.0 && opts.dt <= delay.h_min() / 4.0) {
        return Err(Error::InvalidArgument(format!(
            "dt = {} must be positive and at most h_m/4 = {}",
            opts.dt,
            delay.h_min() / 4.0
        )));
    }
    if !(opts.t_final.is_finite() && opts.t_final > 0.0) {
        return Err(Error::InvalidArgument(format!("T must be > 0, got {}", opts.t_final)));
    }
    if opts.record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be >= 1".into()));
    }
    if let Control::Feedback(gain) = control {
        if gain.n0() > opts.n_sim {
            return Err(Error::InvalidArgument(format!(
                "gain uses N0 = {} modes but only N_sim = {} are simulated",
                gain.n0(),
                opts.n_sim
            )));
        }
    }
    let _ = params;
    Ok(())
}

/// Integrate the closed-loop (or open-loop) modal system on `[0, T]`.
pub fn simulate(
    params: &BeamParams,
    control: Control,
    delay: &DelaySignal,
    dist: &DisturbanceSpec,
    history: &dyn ModalHistory,
    opts: &SimulationOptions,
) -> Result<Trajectory> {
    validate(params, &control, delay, history, opts)?;
    let n_sim = opts.n_sim;
    let dim = 2 * n_sim;
    let gain = match control {
        Control::OpenLoop => None,
        Control::Feedback(g) => Some(g.k()),
    };

    let mut warnings = Vec::new();
    let stiffest = spectral::eigenvalue(params, ModeIndex::new(n_sim, Branch::Minus)?).abs();
    if opts.dt * stiffest > STIFFNESS_LIMIT {
        warnings.push(format!(
            "dt * max|lambda| = {:.3} exceeds {STIFFNESS_LIMIT}; explicit RK4 may be unstable",
            opts.dt * stiffest
        ));
    }

    let mut rhs = Rhs {
        system: ModalSystem::new(params, n_sim),
        gain,
        delay,
        dist,
        projector: DisturbanceProjector::new(dist, params, n_sim, opts.quadrature_nodes),
        delayed: vec![0.0; dim],
    };
    let mut buffer = HistoryBuffer { nodes: VecDeque::new(), initial: history };
    let mut breakpoints = Breakpoints { points: vec![(0.0, 0)], max_generation: opts.breakpoint_generations };

    let mut y = vec![0.0; dim];
    history.coefficients(0.0, &mut y);

    let steps = (opts.t_final / opts.dt).round() as usize;
    let capacity = steps / opts.record_every + 1;
    let mut traj = Trajectory {
        params: *params,
        n_sim,
        gain: gain.cloned(),
        times: Vec::with_capacity(capacity),
        coeffs: Vec::with_capacity(capacity),
        controls: Vec::with_capacity(capacity),
        state_norms: Vec::with_capacity(capacity),
        warnings,
    };
    let record = |traj: &mut Trajectory, t: f64, y: &[f64], rhs: &Rhs| {
        traj.times.push(t);
        traj.controls.push(rhs.control(y));
        traj.state_norms.push(state_norm(y, params));
        traj.coeffs.push(y.to_vec());
    };
    record(&mut traj, 0.0, &y, &rhs);

    let mut k = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    let mut stage = vec![0.0; dim];
    let mut t = 0.0;
    for step in 1..=steps {
        let t_end = step as f64 * opts.dt;
        while t < t_end {
            let mut target = t_end;
            let mut spawned = None;
            if let Some((r, gen)) = breakpoints.first_crossing(delay, t, t_end) {
                if r < t_end - 1e-12 * opts.dt {
                    target = r;
                }
                spawned = Some((r.min(t_end), gen));
            }
            let h = target - t;
            rhs.eval(t, &y, &buffer, &mut k[0])?;
            buffer.nodes.push_back(Node { t, y: y.clone(), f: k[0].clone() });
            for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(&k[0])) {
                *s = yi + 0.5 * h * ki;
            }
            let (_, rest) = k.split_at_mut(1);
            rhs.eval(t + 0.5 * h, &stage, &buffer, &mut rest[0])?;
            for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(&rest[0])) {
                *s = yi + 0.5 * h * ki;
            }
            rhs.eval(t + 0.5 * h, &stage, &buffer, &mut rest[1])?;
            for (s, (yi, ki)) in stage.iter_mut().zip(y.iter().zip(&rest[1])) {
                *s = yi + h * ki;
            }
            rhs.eval(target, &stage, &buffer, &mut rest[2])?;
            for i in 0..dim {
                y[i] += h / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]);
            }
            t = if target == t_end { t_end } else { target };
            if let Some(bp) = spawned {
                if bp.0 <= t {
                    breakpoints.points.push(bp);
                }
            }
            if y.iter().any(|v| !v.is_finite() || v.abs() > 1e150) {
                return Err(Error::Divergence { time: t });
            }
            let cutoff = t - delay.h_max() - 2.0 * opts.dt;
            buffer.discard_before(cutoff);
            breakpoints.discard_before(cutoff);
        }
        if step % opts.record_every == 0 {
            record(&mut traj, t_end, &y, &rhs);
        }
    }
    Ok(traj)
}
