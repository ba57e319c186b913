//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::PI;

use beamdelay_core::benchmark;
use beamdelay_core::simulation::{
    default_nodes, project_initial, simulate, Control, SimulationOptions, Trajectory,
};
use beamdelay_core::spectral::{self, Branch, ModeIndex};
use beamdelay_core::{ActuationConfig, BeamParams};
use nalgebra::{DMatrix, DVector};

/// Roots of `λ² + 2αn²π²λ + (n⁴π⁴ - β) = 0` by the textbook formula,
/// `(minus, plus)`.
pub fn quadratic_roots(alpha: f64, beta: f64, n: usize) -> (f64, f64) {
    let a = alpha * (n * n) as f64 * PI * PI;
    let c = ((n * n) as f64 * PI * PI).powi(2) - beta;
    let disc = (a * a - c).sqrt();
    (-a - disc, -a + disc)
}

/// Composite Simpson rule on `[0, 1]`.
pub fn simpson<F: Fn(f64) -> f64>(f: F, intervals: usize) -> f64 {
    let n = intervals + intervals % 2;
    let h = 1.0 / n as f64;
    let mut s = f(0.0) + f(1.0);
    for i in 1..n {
        s += if i % 2 == 1 { 4.0 } else { 2.0 } * f(i as f64 * h);
    }
    s * h / 3.0
}

/// Single-input gain for diagonal `A` with distinct entries from the
/// partial-fraction expansion of `det(sI - A - b k)`:
/// `k_i = -Π_j (a_i - p_j) / (b_i Π_{l≠i} (a_i - a_l))`.
pub fn residue_gain(diag: &[f64], b: &[f64], poles: &[f64]) -> Vec<f64> {
    (0..diag.len())
        .map(|i| {
            let num: f64 = poles.iter().map(|p| diag[i] - p).product();
            let den: f64 = (0..diag.len()).filter(|&l| l != i).map(|l| diag[i] - diag[l]).product();
            -num / (b[i] * den)
        })
        .collect()
}

/// Method of steps for `ċ = F c + G c(t - h)` with constant `h` and a
/// history that is polynomial in `τ`: `c(τ) = Σ_i a_i τ^i` on `[-h, 0]`.
///
/// On `[kh, (k+1)h]` the pieces `w_j(s) = c(jh + s)`, `j = 0..k`, together
/// with `q_i(s) = (s - h)^i` form a linear time-invariant system that is
/// propagated exactly with the matrix exponential.
pub fn method_of_steps(f: &DMatrix<f64>, g: &DMatrix<f64>, h: f64, history: &[DVector<f64>], t: f64) -> DVector<f64> {
    let n = f.nrows();
    let d = history.len();
    let mut nodes: Vec<DVector<f64>> = vec![history[0].clone()];
    let mut k = 0usize;
    loop {
        let s_end = (t - k as f64 * h).min(h);
        let size = n * (k + 1) + d;
        let mut l = DMatrix::zeros(size, size);
        let poly = n * (k + 1);
        for j in 0..=k {
            l.view_mut((n * j, n * j), (n, n)).copy_from(f);
            if j == 0 {
                for (i, a) in history.iter().enumerate() {
                    let col = g * a;
                    for r in 0..n {
                        l[(r, poly + i)] = col[r];
                    }
                }
            } else {
                l.view_mut((n * j, n * (j - 1)), (n, n)).copy_from(g);
            }
        }
        for i in 1..d {
            l[(poly + i, poly + i - 1)] = i as f64;
        }
        let mut z0 = DVector::zeros(size);
        for (j, node) in nodes.iter().enumerate().take(k + 1) {
            z0.rows_mut(n * j, n).copy_from(node);
        }
        for i in 0..d {
            z0[poly + i] = (-h).powi(i as i32);
        }
        let z = (l * s_end).exp() * z0;
        let c_end = z.rows(n * k, n).into_owned();
        if t - k as f64 * h <= h {
            return c_end;
        }
        nodes.push(c_end);
        k += 1;
    }
}

/// Evaluates `Σ_i a_i τ^i`.
pub fn polynomial_history(coeffs: &[DVector<f64>], tau: f64, out: &mut [f64]) {
    out.fill(0.0);
    let mut p = 1.0;
    for a in coeffs {
        for (o, v) in out.iter_mut().zip(a.iter()) {
            *o += v * p;
        }
        p *= tau;
    }
}

/// Reference scenario run with the crate's two-input gain and the full
/// disturbance set.
pub fn reference_run(n_sim: usize, dt: f64, t_final: f64, record: f64) -> Trajectory {
    let p = benchmark::params();
    let gain = benchmark::placed_gain(ActuationConfig::BothEnds).unwrap();
    let hist = project_initial(&benchmark::initial_history(), &p, n_sim, 0.22, default_nodes(n_sim)).unwrap();
    let mut o = SimulationOptions::new(n_sim, dt, t_final);
    o.record_every = (record / dt).round().max(1.0) as usize;
    simulate(&p, Control::Feedback(&gain), &benchmark::delay(), &benchmark::disturbances(), &hist, &o).unwrap()
}

pub fn reference_params() -> BeamParams {
    benchmark::params()
}

/// `⟨φ_{n,ε}, ψ_{m,ε'}⟩` with `φ = (sin, λ sin)/k` and
/// `ψ = C (-λ_{-ε}/(n⁴π⁴) sin, sin)` in the energy inner product.
pub fn pairing(p: &BeamParams, n: usize, e: Branch, m: usize, f: Branch) -> f64 {
    let phi = spectral::mode_data(p, ModeIndex::new(n, e).unwrap());
    let psi = spectral::mode_data(p, ModeIndex::new(m, f).unwrap());
    let lam_opp = spectral::eigenvalue(p, ModeIndex::new(m, f.opposite()).unwrap());
    let (nn, mm) = ((n * n) as f64 * PI * PI, (m * m) as f64 * PI * PI);
    simpson(
        |x| {
            let sn = (n as f64 * PI * x).sin();
            let sm = (m as f64 * PI * x).sin();
            let phi_curv = -nn * sn / phi.k;
            let phi_vel = phi.lambda * sn / phi.k;
            let psi_curv = psi.c * lam_opp / mm * sm;
            let psi_vel = psi.c * sm;
            phi_curv * psi_curv + phi_vel * psi_vel
        },
        4000,
    )
}

/// `sqrt(∫ y″² + y_t²)` of the field `Σ c_{n,ε} φ_{n,ε}` by Simpson's rule.
pub fn energy_norm_by_quadrature(c: &[f64], p: &BeamParams) -> f64 {
    let modes: Vec<_> = (1..=c.len() / 2).flat_map(|n| spectral::mode_pair(p, n)).collect();
    simpson(
        |x| {
            let mut curv = 0.0;
            let mut vel = 0.0;
            for (v, m) in c.iter().zip(&modes) {
                let nn = m.index.n() as f64 * PI;
                let s = (nn * x).sin();
                curv -= v * nn * nn * s / m.k;
                vel += v * m.lambda * s / m.k;
            }
            curv * curv + vel * vel
        },
        4000,
    )
    .sqrt()
}
