//! Delay robustness of the closed-loop truncated model
//! `Ẏ = F Y + G (Y(t - h(t)) - Y)`.
//!
//! Two routes are provided. The Lyapunov–Krasovskii LMI `Θ(h_M, κ) ≺ 0`
//! is searched with the barrier solver in [`sdp`] and every answer is handed
//! out as an [`LkCertificate`] that [`verify_certificate`] re-checks with a
//! plain symmetric eigensolver. The small-gain route gives closed-form
//! bounds from `‖A_cl‖`, `‖M‖` and the spectral abscissa.

pub mod certificate_io;
pub mod sdp;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use sdp::{AffineMatrix, BarrierOptions, BarrierProblem};

#[derive(Debug, Clone, PartialEq)]
pub struct ThetaProblem {
    f: DMatrix<f64>,
    g: DMatrix<f64>,
    h_max: f64,
    kappa: f64,
}

impl ThetaProblem {
    pub fn new(f: DMatrix<f64>, g: DMatrix<f64>, h_max: f64, kappa: f64) -> Result<Self> {
        if !f.is_square() || f.shape() != g.shape() || f.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "F {:?} and G {:?} must be square of the same size",
                f.shape(),
                g.shape()
            )));
        }
        if !(h_max.is_finite() && h_max > 0.0) {
            return Err(Error::InvalidArgument(format!("h_M must be > 0, got {h_max}")));
        }
        if !(kappa.is_finite() && kappa >= 0.0) {
            return Err(Error::InvalidArgument(format!("kappa must be >= 0, got {kappa}")));
        }
        Ok(Self { f, g, h_max, kappa })
    }

    pub fn f(&self) -> &DMatrix<f64> {
        &self.f
    }

    pub fn g(&self) -> &DMatrix<f64> {
        &self.g
    }

    pub fn h_max(&self) -> f64 {
        self.h_max
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn dim(&self) -> usize {
        self.f.nrows()
    }

    pub fn with_h_max(&self, h_max: f64) -> Result<Self> {
        Self::new(self.f.clone(), self.g.clone(), h_max, self.kappa)
    }

    pub fn with_kappa(&self, kappa: f64) -> Result<Self> {
        Self::new(self.f.clone(), self.g.clone(), self.h_max, kappa)
    }
}

/// The decision matrices `(P1, P2, P3, Q)` of the functional.
#[derive(Debug, Clone, PartialEq)]
pub struct LmiVariables {
    pub p1: DMatrix<f64>,
    pub p2: DMatrix<f64>,
    pub p3: DMatrix<f64>,
    pub q: DMatrix<f64>,
}

/// Assemble the 3n×3n matrix
///
/// ```text
/// [ 2κP1 + FᵀP2 + P2ᵀF   P1 - P2ᵀ + FᵀP3     h P2ᵀG        ]
/// [        ·            -P3 - P3ᵀ + h Q      h P3ᵀG        ]
/// [        ·                  ·             -h e^{-2κh} Q  ]
/// ```
///
/// Lower blocks are copied from the upper ones, so the result is exactly
/// symmetric.
pub fn build_theta(problem: &ThetaProblem, vars: &LmiVariables) -> DMatrix<f64> {
    let n = problem.dim();
    let f = problem.f();
    let g = problem.g();
    let h = problem.h_max();
    let kappa = problem.kappa();
    let LmiVariables { p1, p2, p3, q } = vars;

    let b11 = p1 * (2.0 * kappa) + f.transpose() * p2 + p2.transpose() * f;
    let b12 = p1 - p2.transpose() + f.transpose() * p3;
    let b13 = p2.transpose() * g * h;
    let b22 = -p3 - p3.transpose() + q * h;
    let b23 = p3.transpose() * g * h;
    let b33 = q * (-h * (-2.0 * kappa * h).exp());

    let mut theta = DMatrix::zeros(3 * n, 3 * n);
    theta.view_mut((0, 0), (n, n)).copy_from(&b11);
    theta.view_mut((0, n), (n, n)).copy_from(&b12);
    theta.view_mut((0, 2 * n), (n, n)).copy_from(&b13);
    theta.view_mut((n, n), (n, n)).copy_from(&b22);
    theta.view_mut((n, 2 * n), (n, n)).copy_from(&b23);
    theta.view_mut((2 * n, 2 * n), (n, n)).copy_from(&b33);
    for i in 0..3 * n {
        for j in 0..i {
            theta[(i, j)] = theta[(j, i)];
        }
    }
    theta
}

#[derive(Debug, Clone, PartialEq)]
pub struct LkCertificate {
    pub vars: LmiVariables,
    pub problem: ThetaProblem,
    /// Grid resolution of the search that produced it, if any.
    pub resolution: Option<f64>,
    pub iterations: usize,
}

impl LkCertificate {
    pub fn theta(&self) -> DMatrix<f64> {
        build_theta(&self.problem, &self.vars)
    }
}

pub const VERIFY_RELATIVE_MARGIN: f64 = 1e-9;

/// Independent check of a certificate: `P1 ≻ 0`, `Q ≻ 0` and `Θ ≺ 0`, each
/// with a relative margin of `1e-9` of the matrix norm.
pub fn verify_certificate(cert: &LkCertificate) -> bool {
    let n = cert.problem.dim();
    let LmiVariables { p1, p2, p3, q } = &cert.vars;
    if [p1, p2, p3, q].iter().any(|m| m.shape() != (n, n) || m.iter().any(|v| !v.is_finite())) {
        return false;
    }
    let definite = |m: &DMatrix<f64>| {
        let sym = linalg::symmetric_part(m);
        let (lo, hi) = linalg::symmetric_extremes(&sym);
        let norm = lo.abs().max(hi.abs());
        norm > 0.0 && lo > VERIFY_RELATIVE_MARGIN * norm
    };
    if !definite(p1) || !definite(q) {
        return false;
    }
    let theta = cert.theta();
    let (lo, hi) = linalg::symmetric_extremes(&theta);
    let norm = lo.abs().max(hi.abs());
    norm > 0.0 && hi < -VERIFY_RELATIVE_MARGIN * norm
}

#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub barrier: BarrierOptions,
    /// Radius of the normalizing ball on the decision variables.
    pub radius: f64,
    /// Feasibility is declared once `λ_max(Θ) < -threshold`.
    pub threshold: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { barrier: BarrierOptions::default(), radius: 100.0, threshold: 1e-7 }
    }
}

/// Variable layout: P1 and Q by their upper triangles, P2 and P3 in full,
/// then the epigraph variable `t`.
struct Layout {
    n: usize,
}

impl Layout {
    fn sym_len(&self) -> usize {
        self.n * (self.n + 1) / 2
    }

    fn p1(&self) -> usize {
        0
    }

    fn q(&self) -> usize {
        self.sym_len()
    }

    fn p2(&self) -> usize {
        2 * self.sym_len()
    }

    fn p3(&self) -> usize {
        2 * self.sym_len() + self.n * self.n
    }

    fn t(&self) -> usize {
        2 * self.sym_len() + 2 * self.n * self.n
    }

    fn len(&self) -> usize {
        self.t() + 1
    }

    fn sym_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.n;
        let mut out = Vec::with_capacity(self.sym_len());
        for i in 0..n {
            for j in i..n {
                let mut e = DMatrix::zeros(n, n);
                e[(i, j)] = 1.0;
                e[(j, i)] = 1.0;
                out.push(e);
            }
        }
        out
    }

    fn full_basis(&self) -> Vec<DMatrix<f64>> {
        let n = self.n;
        (0..n * n)
            .map(|k| {
                let mut e = DMatrix::zeros(n, n);
                e[(k / n, k % n)] = 1.0;
                e
            })
            .collect()
    }

    fn unpack(&self, x: &DVector<f64>) -> LmiVariables {
        let n = self.n;
        let sym = |offset: usize| {
            let mut m = DMatrix::zeros(n, n);
            let mut k = offset;
            for i in 0..n {
                for j in i..n {
                    m[(i, j)] = x[k];
                    m[(j, i)] = x[k];
                    k += 1;
                }
            }
            m
        };
        let full = |offset: usize| DMatrix::from_fn(n, n, |i, j| x[offset + i * n + j]);
        LmiVariables { p1: sym(self.p1()), p2: full(self.p2()), p3: full(self.p3()), q: sym(self.q()) }
    }
}

/// Search for `(P1, P2, P3, Q)` with `Θ ≺ 0`, `P1 ⪰ εI`, `Q ⪰ εI` by
/// minimizing `t` subject to `Θ ⪯ tI` inside a ball. Returns `None` when no
/// verifiable certificate was reached; that is not a proof of infeasibility.
pub fn find_certificate(problem: &ThetaProblem) -> Option<LkCertificate> {
    find_certificate_with(problem, &SolverOptions::default())
}

pub fn find_certificate_with(problem: &ThetaProblem, opts: &SolverOptions) -> Option<LkCertificate> {
    let n = problem.dim();
    let layout = Layout { n };
    let dim = 3 * n;
    let eps = 1e-6 * (1.0 + linalg::spectral_norm(problem.f()));
    let zero = DMatrix::zeros(n, n);
    let theta_of = |p1: &DMatrix<f64>, p2: &DMatrix<f64>, p3: &DMatrix<f64>, q: &DMatrix<f64>| {
        build_theta(
            problem,
            &LmiVariables { p1: p1.clone(), p2: p2.clone(), p3: p3.clone(), q: q.clone() },
        )
    };

    // tI - Θ(x) ≻ 0
    let mut lmi = AffineMatrix::new(DMatrix::zeros(dim, dim));
    let mut p1_pos = AffineMatrix::new(DMatrix::identity(n, n) * -eps);
    let mut q_pos = AffineMatrix::new(DMatrix::identity(n, n) * -eps);
    for (k, e) in layout.sym_basis().into_iter().enumerate() {
        lmi.add_term(layout.p1() + k, -theta_of(&e, &zero, &zero, &zero));
        lmi.add_term(layout.q() + k, -theta_of(&zero, &zero, &zero, &e));
        p1_pos.add_term(layout.p1() + k, e.clone());
        q_pos.add_term(layout.q() + k, e);
    }
    for (k, e) in layout.full_basis().into_iter().enumerate() {
        lmi.add_term(layout.p2() + k, -theta_of(&zero, &e, &zero, &zero));
        lmi.add_term(layout.p3() + k, -theta_of(&zero, &zero, &e, &zero));
    }
    lmi.add_term(layout.t(), DMatrix::identity(dim, dim));

    let mut objective = DVector::zeros(layout.len());
    objective[layout.t()] = 1.0;
    let bp = BarrierProblem {
        n_vars: layout.len(),
        objective,
        constraints: vec![lmi, p1_pos, q_pos],
        ball: Some(((0..layout.t()).collect(), opts.radius)),
    };

    // Start from P1 = Q = cI, P2 = P3 = 0, at half the ball radius.
    let c = opts.radius / (2.0 * (2.0 * n as f64).sqrt());
    let mut x0 = DVector::zeros(layout.len());
    let ident = DMatrix::identity(n, n) * c;
    let mut k = 0;
    for i in 0..n {
        for j in i..n {
            x0[layout.p1() + k] = ident[(i, j)];
            x0[layout.q() + k] = ident[(i, j)];
            k += 1;
        }
    }
    let start = layout.unpack(&x0);
    let (_, hi) = linalg::symmetric_extremes(&build_theta(problem, &start));
    x0[layout.t()] = hi.abs().max(1.0) * 2.0 + hi.max(0.0);

    let mut found: Option<(DVector<f64>, usize)> = None;
    let mut steps = 0;
    let outcome = bp.solve(x0, &opts.barrier, |x| {
        steps += 1;
        if x[layout.t()] < -opts.threshold {
            let cert = LkCertificate {
                vars: layout.unpack(x),
                problem: problem.clone(),
                resolution: None,
                iterations: steps,
            };
            if verify_certificate(&cert) {
                found = Some((x.clone(), steps));
                return true;
            }
        }
        false
    })?;

    let (x, iterations) = match found {
        Some(v) => v,
        None => (outcome.x, outcome.newton_iterations),
    };
    let cert = LkCertificate {
        vars: layout.unpack(&x),
        problem: problem.clone(),
        resolution: None,
        iterations,
    };
    verify_certificate(&cert).then_some(cert)
}

/// Certificate from the constructive feasibility argument:
/// `FᵀP2 + P2F = -I`, `P1 = 2P2`, `P3 = -F⁻ᵀP2`, `Q = I`.
/// Valid for small enough `h_M` whenever `F` is Hurwitz.
pub fn constructive_variables(f: &DMatrix<f64>) -> Option<LmiVariables> {
    let n = f.nrows();
    let p2 = linalg::solve_lyapunov(f, &DMatrix::identity(n, n))?;
    let f_inv = f.clone().try_inverse()?;
    let p3 = -(f_inv.transpose() * &p2);
    Some(LmiVariables { p1: &p2 * 2.0, p2, p3, q: DMatrix::identity(n, n) })
}

#[derive(Debug, Clone)]
pub struct DelayCertification {
    pub h_max: f64,
    pub certificate: LkCertificate,
    /// True when the upper end of the bracket was itself certified.
    pub capped: bool,
}

pub const DELAY_BRACKET_MAX: f64 = 10.0;

/// Largest `h_M` on the grid `{k · resolution}` ∩ `[resolution, 10]` at which
/// a certificate is found, located by bisection. The answer is a lower bound
/// on the true feasibility boundary.
pub fn max_certified_delay(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    kappa: f64,
    resolution: f64,
) -> Result<DelayCertification> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidArgument(format!("resolution must be > 0, got {resolution}")));
    }
    let base = ThetaProblem::new(f.clone(), g.clone(), resolution, kappa)?;
    let attempt = |k: u64| -> Option<LkCertificate> {
        let problem = base.with_h_max(k as f64 * resolution).ok()?;
        find_certificate(&problem).map(|mut c| {
            c.resolution = Some(resolution);
            c
        })
    };
    let mut lo = 1u64;
    let mut best = attempt(lo).ok_or(Error::NoneCertified { h_min: resolution })?;
    let mut hi = (DELAY_BRACKET_MAX / resolution).floor() as u64;
    if hi <= lo {
        return Ok(DelayCertification { h_max: resolution, certificate: best, capped: true });
    }
    if let Some(c) = attempt(hi) {
        return Ok(DelayCertification { h_max: hi as f64 * resolution, certificate: c, capped: true });
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match attempt(mid) {
            Some(c) => {
                lo = mid;
                best = c;
            }
            None => hi = mid,
        }
    }
    Ok(DelayCertification { h_max: lo as f64 * resolution, certificate: best, capped: false })
}

/// Largest `κ` on the grid `{k · resolution}` ∩ `[0, 2 μ_M(F)]` for which
/// `Θ(h_M, κ) ≺ 0` is certified.
pub fn max_decay_rate(
    f: &DMatrix<f64>,
    g: &DMatrix<f64>,
    h_max: f64,
    resolution: f64,
) -> Result<(f64, LkCertificate)> {
    if !(resolution.is_finite() && resolution > 0.0) {
        return Err(Error::InvalidArgument(format!("resolution must be > 0, got {resolution}")));
    }
    let base = ThetaProblem::new(f.clone(), g.clone(), h_max, 0.0)?;
    let attempt = |k: u64| -> Option<LkCertificate> {
        let problem = base.with_kappa(k as f64 * resolution).ok()?;
        find_certificate(&problem).map(|mut c| {
            c.resolution = Some(resolution);
            c
        })
    };
    let mut best = attempt(0).ok_or(Error::InfeasibleAtZeroRate { h_max })?;
    let mu = -linalg::spectral_abscissa(f);
    let mut lo = 0u64;
    let mut hi = ((2.0 * mu.max(0.0)) / resolution).floor() as u64;
    if hi == 0 {
        return Ok((0.0, best));
    }
    if let Some(c) = attempt(hi) {
        return Ok((hi as f64 * resolution, c));
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        match attempt(mid) {
            Some(c) => {
                lo = mid;
                best = c;
            }
            None => hi = mid,
        }
    }
    Ok((lo as f64 * resolution, best))
}

/// `μ_M(A) = -max Re λ(A)`; errors when `A` is not Hurwitz.
pub fn stability_margin(a: &DMatrix<f64>) -> Result<f64> {
    let abscissa = linalg::spectral_abscissa(a);
    if abscissa >= 0.0 {
        return Err(Error::NotHurwitz { abscissa });
    }
    Ok(-abscissa)
}

/// Necessary bound `h_M < log(1 + μ_M(A_cl)/‖M‖) / ‖A_cl‖` for the strict
/// small-gain condition.
pub fn delay_upper_bound_small_gain(a_cl: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<f64> {
    let mu = stability_margin(a_cl)?;
    let m_norm = linalg::spectral_norm(m);
    if m_norm == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((mu / m_norm).ln_1p() / linalg::spectral_norm(a_cl))
}

/// `C_λ ‖M‖ (e^{‖A_cl‖ h} - e^{-λh}) < λ`.
pub fn small_gain_delay_check(
    a_cl: &DMatrix<f64>,
    m: &DMatrix<f64>,
    h_max: f64,
    c_lambda: f64,
    lambda: f64,
) -> bool {
    let lhs = c_lambda
        * linalg::spectral_norm(m)
        * ((linalg::spectral_norm(a_cl) * h_max).exp() - (-lambda * h_max).exp());
    lhs < lambda
}

/// Constants with `‖e^{A t}‖ ≤ C_λ e^{-λ t}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayEnvelope {
    pub c_lambda: f64,
    pub lambda: f64,
}

/// `λ = 0.9 μ_M(A)` and `C_λ = sqrt(cond P)` with
/// `(A + λI)ᵀP + P(A + λI) = -I`, inflated by the worst violation seen when
/// sampling `‖e^{At}‖ e^{λt}` on `[0, 20]` at 2000 points.
pub fn decay_envelope(a: &DMatrix<f64>) -> Result<DecayEnvelope> {
    let mu = stability_margin(a)?;
    let lambda = 0.9 * mu;
    let n = a.nrows();
    let shifted = a + DMatrix::identity(n, n) * lambda;
    let p = linalg::solve_lyapunov(&shifted, &DMatrix::identity(n, n))
        .ok_or_else(|| Error::InvalidArgument("Lyapunov equation is singular".into()))?;
    let (lo, hi) = linalg::symmetric_extremes(&p);
    let mut c_lambda = (hi / lo).sqrt().max(1.0);
    let samples = 2000;
    let horizon = 20.0;
    let step = (a * (horizon / samples as f64)).exp();
    let mut propagator = DMatrix::identity(n, n);
    let mut worst: f64 = 1.0;
    for k in 0..=samples {
        let t = k as f64 * horizon / samples as f64;
        let ratio = linalg::spectral_norm(&propagator) * (lambda * t).exp() / c_lambda;
        worst = worst.max(ratio);
        propagator = &step * propagator;
    }
    c_lambda *= worst;
    Ok(DecayEnvelope { c_lambda, lambda })
}
