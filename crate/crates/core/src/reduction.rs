//! Finite-dimensional delayed model of the first `N0` mode pairs.
//!
//! Each pair `c_n = (c_{n,-1}, c_{n,+1})` obeys
//!
//! ```text
//! ċ_n = Λ_n c_n + M_n (c_n(t - h(t)) - c_n) + B_n (u + d_b) + p_{d,n}
//! ```
//!
//! and stacking `n = 1..N0` gives `Ẏ = AY + M(Y(t-h) - Y) + B(u + d_b) + P_d`.

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, Matrix2};

use crate::error::{Error, Result};
use crate::linalg;
use crate::spectral::{self, BeamParams};

/// `M_n = γ/(λ_{n,-1} - λ_{n,+1}) [[1, k₋/k₊], [-k₊/k₋, -1]]`.
pub fn delay_block(params: &BeamParams, n: usize) -> Matrix2<f64> {
    let [minus, plus] = spectral::mode_pair(params, n);
    let scale = params.gamma() / (minus.lambda - plus.lambda);
    let ratio = minus.k / plus.k;
    Matrix2::new(1.0, ratio, -1.0 / ratio, -1.0) * scale
}

/// Upper bound `m_n = √2 α γ / sqrt((α² - 1) n⁴π⁴ + β)` on `‖M_n‖`.
pub fn delay_block_bound(params: &BeamParams, n: usize) -> f64 {
    std::f64::consts::SQRT_2 * params.alpha() * params.gamma()
        / spectral::discriminant(params, n).sqrt()
}

/// Exact `‖M_n‖₂ = γ/|λ₋ - λ₊| · sqrt(2 + (k₋/k₊)² + (k₊/k₋)²)`.
pub fn delay_block_norm(params: &BeamParams, n: usize) -> f64 {
    let [minus, plus] = spectral::mode_pair(params, n);
    let r = minus.k / plus.k;
    params.gamma() / (minus.lambda - plus.lambda).abs() * (2.0 + r * r + 1.0 / (r * r)).sqrt()
}

/// `B_n`: row `ε`, column `m` holds `b_{n,ε,m}` with
/// `b_{n,ε,1} = -nπ C_{n,ε}` and `b_{n,ε,2} = (-1)ⁿ nπ C_{n,ε}`.
pub fn input_block(params: &BeamParams, n: usize) -> Matrix2<f64> {
    let [minus, plus] = spectral::mode_pair(params, n);
    let npi = n as f64 * PI;
    let parity = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
    Matrix2::new(
        -npi * minus.c,
        parity * npi * minus.c,
        -npi * plus.c,
        parity * npi * plus.c,
    )
}

#[derive(Debug, Clone)]
pub struct TruncatedModel {
    n0: usize,
    params: BeamParams,
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    m: DMatrix<f64>,
}

impl TruncatedModel {
    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn dim(&self) -> usize {
        2 * self.n0
    }

    pub fn params(&self) -> &BeamParams {
        &self.params
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn m(&self) -> &DMatrix<f64> {
        &self.m
    }

    /// Build a model from raw matrices. Used to probe the checks on
    /// artificial data; no structural invariant is enforced here.
    pub fn from_parts(
        params: BeamParams,
        a: DMatrix<f64>,
        b: DMatrix<f64>,
        m: DMatrix<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || !n.is_multiple_of(2) || a.ncols() != n || b.shape() != (n, 2) || m.shape() != (n, n) {
            return Err(Error::InvalidArgument(format!(
                "inconsistent model shapes A {:?}, B {:?}, M {:?}",
                a.shape(),
                b.shape(),
                m.shape()
            )));
        }
        Ok(Self { n0: n / 2, params, a, b, m })
    }
}

pub fn assemble(params: &BeamParams, n0: usize) -> Result<TruncatedModel> {
    if n0 == 0 {
        return Err(Error::InvalidArgument("N0 must be >= 1".into()));
    }
    let dim = 2 * n0;
    let mut a = DMatrix::zeros(dim, dim);
    let mut b = DMatrix::zeros(dim, 2);
    let mut m = DMatrix::zeros(dim, dim);
    for n in 1..=n0 {
        let r = 2 * (n - 1);
        let [minus, plus] = spectral::mode_pair(params, n);
        a[(r, r)] = minus.lambda;
        a[(r + 1, r + 1)] = plus.lambda;
        b.view_mut((r, 0), (2, 2)).copy_from(&input_block(params, n));
        m.view_mut((r, r), (2, 2)).copy_from(&delay_block(params, n));
    }
    Ok(TruncatedModel { n0, params: *params, a, b, m })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModeCountCheck {
    pub satisfied: bool,
    pub lhs: f64,
}

/// Mode-count small-gain condition
/// `60α²γ² / ((α²-1)(N0+1)⁴π⁴ + β) · 1/λ²_{N0+1,+1} < 1`.
///
/// Fails with [`Error::BelowUnstableCount`] when `N0` does not capture every
/// unstable mode.
pub fn small_gain_mode_count(params: &BeamParams, n0: usize) -> Result<ModeCountCheck> {
    let unstable = spectral::unstable_count(params);
    if n0 < unstable {
        return Err(Error::BelowUnstableCount { n0, unstable });
    }
    let next = n0 + 1;
    let lambda = spectral::eigenvalue(
        params,
        spectral::ModeIndex::new(next, spectral::Branch::Plus)?,
    );
    if lambda == 0.0 {
        return Err(Error::BelowUnstableCount { n0, unstable });
    }
    let a = params.alpha();
    let g = params.gamma();
    let lhs = 60.0 * a * a * g * g / spectral::discriminant(params, next) / (lambda * lambda);
    Ok(ModeCountCheck { satisfied: lhs < 1.0, lhs })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InputSelection {
    Full,
    Column1,
    Column2,
}

impl InputSelection {
    pub fn select(self, b: &DMatrix<f64>) -> DMatrix<f64> {
        match self {
            InputSelection::Full => b.clone(),
            InputSelection::Column1 => b.columns(0, 1).into_owned(),
            InputSelection::Column2 => b.columns(1, 1).into_owned(),
        }
    }
}

pub const RANK_TOLERANCE: f64 = 1e-8;

/// Numerical rank of the Kalman matrix `[B, ÂB, …, Â^{n-1}B]` with
/// `Â = A/‖A‖` and unit-norm columns. Rank is unchanged by both scalings.
pub fn kalman_rank(a: &DMatrix<f64>, b: &DMatrix<f64>) -> usize {
    let n = a.nrows();
    let scale = linalg::spectral_norm(a);
    let a_hat = if scale > 0.0 { a / scale } else { a.clone() };
    let m = b.ncols();
    let mut kalman = DMatrix::zeros(n, n * m);
    let mut block = b.clone();
    for k in 0..n {
        kalman.view_mut((0, k * m), (n, m)).copy_from(&block);
        block = &a_hat * block;
    }
    for mut col in kalman.column_iter_mut() {
        let norm = col.norm();
        if norm > 0.0 {
            col /= norm;
        }
    }
    linalg::numerical_rank(&kalman, RANK_TOLERANCE)
}

/// PBH test: `rank [A - sI, B] = n` at every eigenvalue `s` of `A`.
pub fn pbh_controllable(a: &DMatrix<f64>, b: &DMatrix<f64>) -> bool {
    let n = a.nrows();
    let m = b.ncols();
    for s in linalg::eigenvalues(a) {
        let mut pencil = DMatrix::<Complex<f64>>::zeros(n, n + m);
        for i in 0..n {
            for j in 0..n {
                pencil[(i, j)] = Complex::new(a[(i, j)], 0.0);
            }
            pencil[(i, i)] -= Complex::new(s.re, s.im);
            for j in 0..m {
                pencil[(i, n + j)] = Complex::new(b[(i, j)], 0.0);
            }
        }
        let sv = pencil.singular_values();
        let top = sv.max();
        let rank = sv.iter().filter(|&&v| v > RANK_TOLERANCE * top).count();
        if rank < n {
            return false;
        }
    }
    true
}

/// Controllability of `(A, B_sel)` for the chosen input columns.
pub fn controllability_check(model: &TruncatedModel, which: InputSelection) -> bool {
    pbh_controllable(model.a(), &which.select(model.b()))
}
