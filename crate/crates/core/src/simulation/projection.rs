//! Projections onto the dual basis `ψ_{n,ε}`.
//!
//! Coefficients are stored in block order `c_{1,-1}, c_{1,+1}, c_{2,-1}, …`.

use std::f64::consts::PI;

use nalgebra::DVector;

use super::signals::{DisturbanceSpec, Distributed, InitialHistory};
use crate::error::{Error, Result};
use crate::quadrature::CompositeRule;
use crate::spectral::{self, BeamParams};

pub const MIN_QUADRATURE_NODES: usize = 64;

/// Default number of quadrature nodes for `n_sim` modes.
pub fn default_nodes(n_sim: usize) -> usize {
    (16 * n_sim).max(128)
}

/// Modal coefficients of the history `τ ↦ c(τ)` for `τ ≤ 0`.
pub trait ModalHistory {
    fn dim(&self) -> usize;
    fn coefficients(&self, tau: f64, out: &mut [f64]);
}

/// Wraps a closure returning the coefficient vector directly.
pub struct FnHistory<F> {
    dim: usize,
    f: F,
}

impl<F: Fn(f64, &mut [f64])> FnHistory<F> {
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F: Fn(f64, &mut [f64])> ModalHistory for FnHistory<F> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn coefficients(&self, tau: f64, out: &mut [f64]) {
        (self.f)(tau, out)
    }
}

/// Precomputed `sin(nπx_j)` on the quadrature nodes.
#[derive(Debug, Clone)]
struct SineTable {
    rule: CompositeRule,
    /// Row `n - 1`, column `j`: `w_j sin(nπ x_j)`.
    weighted: Vec<Vec<f64>>,
}

impl SineTable {
    fn new(n_sim: usize, nodes: usize) -> Self {
        let rule = CompositeRule::unit_interval(nodes);
        let weighted = (1..=n_sim)
            .map(|n| {
                rule.nodes()
                    .iter()
                    .zip(rule.weights())
                    .map(|(x, w)| w * (n as f64 * PI * x).sin())
                    .collect()
            })
            .collect();
        Self { rule, weighted }
    }

    /// `∫₀¹ g(x) sin(nπx) dx` for all `n` from samples `g(x_j)`.
    fn sine_moments(&self, samples: &[f64], out: &mut [f64]) {
        for (o, row) in out.iter_mut().zip(&self.weighted) {
            *o = row.iter().zip(samples).map(|(a, b)| a * b).sum();
        }
    }
}

/// History obtained by projecting an [`InitialHistory`] at every requested
/// `τ`, so values for `t - h(t) < 0` are exact up to quadrature.
#[derive(Debug, Clone)]
pub struct ProjectedHistory {
    ic: InitialHistory,
    table: SineTable,
    /// Per mode pair: `(C_{n,-1}, C_{n,+1})` and `λ_{n,-ε}/(n²π²)`.
    c: Vec<[f64; 2]>,
    curvature_factor: Vec<[f64; 2]>,
}

impl ProjectedHistory {
    pub fn n_sim(&self) -> usize {
        self.c.len()
    }

    pub fn initial(&self) -> &InitialHistory {
        &self.ic
    }
}

impl ModalHistory for ProjectedHistory {
    fn dim(&self) -> usize {
        2 * self.c.len()
    }

    fn coefficients(&self, tau: f64, out: &mut [f64]) {
        let nodes = self.table.rule.nodes();
        let curv: Vec<f64> = nodes.iter().map(|&x| self.ic.y0_xx(tau, x)).collect();
        let vel: Vec<f64> = nodes.iter().map(|&x| self.ic.yt0(tau, x)).collect();
        let n_sim = self.c.len();
        let mut curv_m = vec![0.0; n_sim];
        let mut vel_m = vec![0.0; n_sim];
        self.table.sine_moments(&curv, &mut curv_m);
        self.table.sine_moments(&vel, &mut vel_m);
        for n in 0..n_sim {
            for e in 0..2 {
                out[2 * n + e] = self.c[n][e] * (self.curvature_factor[n][e] * curv_m[n] + vel_m[n]);
            }
        }
    }
}

/// `c_{n,ε}(τ) = C_{n,ε} [ (λ_{n,-ε}/(n²π²)) ∫ ∂ₓₓy0 sin(nπξ) dξ + ∫ yt0 sin(nπξ) dξ ]`.
pub fn project_initial(
    ic: &InitialHistory,
    params: &BeamParams,
    n_sim: usize,
    h_max: f64,
    nodes: usize,
) -> Result<ProjectedHistory> {
    if n_sim == 0 {
        return Err(Error::InvalidArgument("N_sim must be >= 1".into()));
    }
    if nodes < MIN_QUADRATURE_NODES {
        return Err(Error::InvalidArgument(format!(
            "at least {MIN_QUADRATURE_NODES} quadrature nodes are required, got {nodes}"
        )));
    }
    ic.validate(h_max)?;
    let mut c = Vec::with_capacity(n_sim);
    let mut curvature_factor = Vec::with_capacity(n_sim);
    for n in 1..=n_sim {
        let [minus, plus] = spectral::mode_pair(params, n);
        let nn = (n * n) as f64 * PI * PI;
        c.push([minus.c, plus.c]);
        curvature_factor.push([plus.lambda / nn, minus.lambda / nn]);
    }
    Ok(ProjectedHistory { ic: ic.clone(), table: SineTable::new(n_sim, nodes), c, curvature_factor })
}

/// Evaluates `p_{d,n,ε}(t) = C_{n,ε} ∫ d_d(t, ξ) sin(nπξ) dξ`.
#[derive(Clone)]
pub struct DisturbanceProjector {
    dist: DisturbanceSpec,
    table: SineTable,
    c: Vec<[f64; 2]>,
    /// Projections of the spatial factors of separable terms.
    separable: Vec<Vec<f64>>,
}

impl DisturbanceProjector {
    pub fn new(dist: &DisturbanceSpec, params: &BeamParams, n_sim: usize, nodes: usize) -> Self {
        let table = SineTable::new(n_sim, nodes.max(MIN_QUADRATURE_NODES));
        let c = (1..=n_sim)
            .map(|n| {
                let [minus, plus] = spectral::mode_pair(params, n);
                [minus.c, plus.c]
            })
            .collect();
        let separable = match &dist.distributed {
            Distributed::Separable(terms) => terms
                .iter()
                .map(|term| {
                    let samples: Vec<f64> = table.rule.nodes().iter().map(|&x| (term.space)(x)).collect();
                    let mut m = vec![0.0; n_sim];
                    table.sine_moments(&samples, &mut m);
                    m
                })
                .collect(),
            _ => Vec::new(),
        };
        Self { dist: dist.clone(), table, c, separable }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.dist.distributed, Distributed::None)
    }

    /// Adds the projection at time `t` into `out`.
    pub fn accumulate(&self, t: f64, out: &mut [f64]) {
        let n_sim = self.c.len();
        let mut moments = vec![0.0; n_sim];
        match &self.dist.distributed {
            Distributed::None => return,
            Distributed::Separable(terms) => {
                for (term, proj) in terms.iter().zip(&self.separable) {
                    let a = (term.time)(t);
                    if a != 0.0 {
                        for (m, p) in moments.iter_mut().zip(proj) {
                            *m += a * p;
                        }
                    }
                }
            }
            Distributed::General(d) => {
                let samples: Vec<f64> = self.table.rule.nodes().iter().map(|&x| d(t, x)).collect();
                self.table.sine_moments(&samples, &mut moments);
            }
        }
        for n in 0..n_sim {
            out[2 * n] += self.c[n][0] * moments[n];
            out[2 * n + 1] += self.c[n][1] * moments[n];
        }
    }
}

/// Vector of `p_{d,n,ε}(t)` of length `2 n_sim`.
pub fn project_disturbance(
    dist: &DisturbanceSpec,
    t: f64,
    params: &BeamParams,
    n_sim: usize,
    nodes: usize,
) -> DVector<f64> {
    let mut out = DVector::zeros(2 * n_sim);
    DisturbanceProjector::new(dist, params, n_sim, nodes).accumulate(t, out.as_mut_slice());
    out
}
