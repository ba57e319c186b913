//! Log-det barrier method for small dense LMI problems.
//!
//! Solves `min cᵀx` subject to `F_j(x) = F_j0 + Σ_i x_i F_ji ≻ 0` and an
//! optional Euclidean ball `‖x_S‖ < R` on a subset `S` of the variables.
//! The solver is deliberately plain: damped Newton steps on
//! `τ cᵀx - Σ log det F_j(x) - log(R² - ‖x_S‖²)` with `τ` increased
//! geometrically. Problem sizes in this crate are a few dozen variables and
//! matrices of order ≤ 24.

use nalgebra::{DMatrix, DVector};

/// `F(x) = constant + Σ coeff_k · x_{var_k}` with sparse variable coupling.
#[derive(Debug, Clone)]
pub struct AffineMatrix {
    pub constant: DMatrix<f64>,
    pub terms: Vec<(usize, DMatrix<f64>)>,
}

impl AffineMatrix {
    pub fn new(constant: DMatrix<f64>) -> Self {
        Self { constant, terms: Vec::new() }
    }

    pub fn add_term(&mut self, var: usize, coeff: DMatrix<f64>) {
        if coeff.iter().any(|v| *v != 0.0) {
            self.terms.push((var, coeff));
        }
    }

    pub fn order(&self) -> usize {
        self.constant.nrows()
    }

    pub fn eval(&self, x: &DVector<f64>) -> DMatrix<f64> {
        let mut out = self.constant.clone();
        for (var, coeff) in &self.terms {
            out += coeff * x[*var];
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct BarrierProblem {
    pub n_vars: usize,
    pub objective: DVector<f64>,
    pub constraints: Vec<AffineMatrix>,
    /// Variables confined to the ball, and its radius.
    pub ball: Option<(Vec<usize>, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct BarrierOptions {
    pub initial_tau: f64,
    pub tau_growth: f64,
    pub max_outer: usize,
    pub max_newton: usize,
    /// Stop once the barrier duality-gap bound `ν/τ` drops below this.
    pub gap_tolerance: f64,
}

impl Default for BarrierOptions {
    fn default() -> Self {
        Self {
            initial_tau: 1.0,
            tau_growth: 8.0,
            max_outer: 40,
            max_newton: 60,
            gap_tolerance: 1e-9,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BarrierOutcome {
    pub x: DVector<f64>,
    pub objective: f64,
    pub newton_iterations: usize,
    pub converged: bool,
}

impl BarrierProblem {
    fn ball_slack(&self, x: &DVector<f64>) -> Option<f64> {
        self.ball.as_ref().map(|(vars, r)| r * r - vars.iter().map(|&i| x[i] * x[i]).sum::<f64>())
    }

    /// Barrier value; `None` outside the strict interior.
    fn barrier(&self, x: &DVector<f64>) -> Option<f64> {
        let mut value = 0.0;
        for c in &self.constraints {
            let chol = c.eval(x).cholesky()?;
            let logdet: f64 = chol.l_dirty().diagonal().iter().map(|d| 2.0 * d.ln()).sum();
            value -= logdet;
        }
        if let Some(s) = self.ball_slack(x) {
            if s <= 0.0 {
                return None;
            }
            value -= s.ln();
        }
        Some(value)
    }

    pub fn is_interior(&self, x: &DVector<f64>) -> bool {
        self.barrier(x).is_some()
    }

    fn barrier_parameter(&self) -> f64 {
        let mats: usize = self.constraints.iter().map(|c| c.order()).sum();
        mats as f64 + if self.ball.is_some() { 1.0 } else { 0.0 }
    }

    /// Gradient and Hessian of the barrier at an interior point.
    fn derivatives(&self, x: &DVector<f64>) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let d = self.n_vars;
        let mut grad = DVector::zeros(d);
        let mut hess = DMatrix::zeros(d, d);
        for c in &self.constraints {
            let chol = c.eval(x).cholesky()?;
            let l = chol.l();
            // L⁻¹ F_i L⁻ᵀ for every coupled variable.
            let scaled: Vec<(usize, DMatrix<f64>)> = c
                .terms
                .iter()
                .map(|(var, coeff)| {
                    let left = l.solve_lower_triangular(coeff).expect("nonsingular factor");
                    let both = l
                        .solve_lower_triangular(&left.transpose())
                        .expect("nonsingular factor");
                    (*var, both)
                })
                .collect();
            for (a, (va, sa)) in scaled.iter().enumerate() {
                grad[*va] -= sa.trace();
                for (vb, sb) in scaled.iter().skip(a) {
                    let h = sa.dot(sb);
                    hess[(*va, *vb)] += h;
                    if va != vb {
                        hess[(*vb, *va)] += h;
                    }
                }
            }
        }
        if let Some((vars, _)) = &self.ball {
            let s = self.ball_slack(x)?;
            for &i in vars {
                grad[i] += 2.0 * x[i] / s;
                hess[(i, i)] += 2.0 / s;
            }
            for &i in vars {
                for &j in vars {
                    hess[(i, j)] += 4.0 * x[i] * x[j] / (s * s);
                }
            }
        }
        Some((grad, hess))
    }

    /// Run the barrier method from a strictly feasible `x0`. `stop` is
    /// consulted after every Newton step and may end the run early.
    pub fn solve<S: FnMut(&DVector<f64>) -> bool>(
        &self,
        x0: DVector<f64>,
        opts: &BarrierOptions,
        mut stop: S,
    ) -> Option<BarrierOutcome> {
        let mut x = x0;
        self.barrier(&x)?;
        let nu = self.barrier_parameter();
        let mut tau = opts.initial_tau;
        let mut iterations = 0;
        let mut converged = false;
        'outer: for _ in 0..opts.max_outer {
            for _ in 0..opts.max_newton {
                let (g_bar, h) = match self.derivatives(&x) {
                    Some(v) => v,
                    None => break 'outer,
                };
                let grad = &self.objective * tau + g_bar;
                let step = match solve_spd(&h, &(-&grad)) {
                    Some(s) => s,
                    None => break 'outer,
                };
                let decrement = -grad.dot(&step);
                if !decrement.is_finite() {
                    break 'outer;
                }
                if decrement / 2.0 < 1e-10 {
                    break;
                }
                // Backtracking line search on the penalized objective.
                let phi = |y: &DVector<f64>| self.barrier(y).map(|b| tau * self.objective.dot(y) + b);
                let phi0 = match phi(&x) {
                    Some(v) => v,
                    None => break 'outer,
                };
                let mut alpha = 1.0;
                let mut accepted = false;
                for _ in 0..60 {
                    let trial = &x + &step * alpha;
                    if let Some(v) = phi(&trial) {
                        if v <= phi0 - 0.25 * alpha * decrement {
                            x = trial;
                            accepted = true;
                            break;
                        }
                    }
                    alpha *= 0.5;
                }
                iterations += 1;
                if stop(&x) {
                    return Some(BarrierOutcome {
                        objective: self.objective.dot(&x),
                        x,
                        newton_iterations: iterations,
                        converged: false,
                    });
                }
                if !accepted {
                    break;
                }
            }
            if nu / tau < opts.gap_tolerance * (1.0 + self.objective.dot(&x).abs()) {
                converged = true;
                break;
            }
            tau *= opts.tau_growth;
        }
        Some(BarrierOutcome {
            objective: self.objective.dot(&x),
            x,
            newton_iterations: iterations,
            converged,
        })
    }
}

/// Solve `H s = r` for symmetric positive (semi)definite `H`, adding a small
/// diagonal shift when the factorization fails.
fn solve_spd(h: &DMatrix<f64>, r: &DVector<f64>) -> Option<DVector<f64>> {
    let scale = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut shift = 0.0;
    for _ in 0..12 {
        let mut m = h.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += shift;
        }
        if let Some(chol) = m.cholesky() {
            let s = chol.solve(r);
            if s.iter().all(|v| v.is_finite()) {
                return Some(s);
            }
        }
        shift = if shift == 0.0 { 1e-14 * scale } else { shift * 100.0 };
    }
    None
}
