//! Closed-form spectral data of the delay-free beam operator.
//!
//! With pinned ends and point torques removed, the operator
//! `(y1, y2) ↦ (y2, -y1'''' + 2α y2'' + β y1)` on
//! `(H² ∩ H¹₀) × L²` has the simple real eigenvalues
//!
//! ```text
//! λ_{n,ε} = -α n²π² + ε sqrt((α² - 1) n⁴π⁴ + β),   n ≥ 1, ε = ±1
//! ```
//!
//! with unit eigenvectors `φ_{n,ε} = (sin(nπ·), λ_{n,ε} sin(nπ·)) / k_{n,ε}`
//! and dual vectors `ψ_{n,ε} = C_{n,ε} (-λ_{n,-ε}/(n⁴π⁴) sin(nπ·), sin(nπ·))`.
//! Everything in this module is a pure function of [`BeamParams`].

use std::f64::consts::PI;

use nalgebra::Matrix2;

use crate::error::{Error, Result};

/// Physical coefficients of the beam: damping `α > 1`, reaction `β₀ ≥ 0`
/// and delayed reaction `γ > 0`. `β = β₀ + γ` is derived on demand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BeamParams {
    alpha: f64,
    beta0: f64,
    gamma: f64,
}

impl BeamParams {
    pub fn new(alpha: f64, beta0: f64, gamma: f64) -> Result<Self> {
        if !(alpha.is_finite() && alpha > 1.0) {
            return Err(Error::InvalidParams(format!("alpha must be > 1, got {alpha}")));
        }
        if !(beta0.is_finite() && beta0 >= 0.0) {
            return Err(Error::InvalidParams(format!("beta0 must be >= 0, got {beta0}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::InvalidParams(format!("gamma must be > 0, got {gamma}")));
        }
        Ok(Self { alpha, beta0, gamma })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta0(&self) -> f64 {
        self.beta0
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn beta(&self) -> f64 {
        self.beta0 + self.gamma
    }
}

/// The sign `ε` of a mode pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }

    pub fn opposite(self) -> Self {
        match self {
            Branch::Minus => Branch::Plus,
            Branch::Plus => Branch::Minus,
        }
    }

    /// Position inside a 2×2 mode block; `Minus` always comes first.
    pub fn offset(self) -> usize {
        match self {
            Branch::Minus => 0,
            Branch::Plus => 1,
        }
    }

    pub const BOTH: [Branch; 2] = [Branch::Minus, Branch::Plus];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ModeIndex {
    n: usize,
    branch: Branch,
}

impl ModeIndex {
    pub fn new(n: usize, branch: Branch) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("mode number must be >= 1".into()));
        }
        Ok(Self { n, branch })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn branch(&self) -> Branch {
        self.branch
    }

    /// Row of this mode in the stacked modal state `(c_{1,-1}, c_{1,+1}, c_{2,-1}, ...)`.
    pub fn state_row(&self) -> usize {
        2 * (self.n - 1) + self.branch.offset()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralMode {
    pub index: ModeIndex,
    pub lambda: f64,
    /// Normalization `k_{n,ε}` of the unit eigenvector.
    pub k: f64,
    /// Dual-basis coefficient `C_{n,ε}`; its sign is `ε`.
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszConstants {
    pub c_r: f64,
    pub m_r: f64,
    pub big_m_r: f64,
}

/// `(nπ)⁴`, evaluated as `n⁴ · π⁴` so that `β = π⁴` hits `n = 1` exactly.
pub(crate) fn n4pi4(n: usize) -> f64 {
    let n2 = (n * n) as f64;
    n2 * n2 * PI.powi(4)
}

pub(crate) fn n2pi2(n: usize) -> f64 {
    (n * n) as f64 * PI * PI
}

/// `(α² - 1) n⁴π⁴ + β`, strictly positive for valid parameters.
pub fn discriminant(params: &BeamParams, n: usize) -> f64 {
    let a = params.alpha();
    (a * a - 1.0) * n4pi4(n) + params.beta()
}

pub fn eigenvalue(params: &BeamParams, idx: ModeIndex) -> f64 {
    let n = idx.n();
    let root = discriminant(params, n).sqrt();
    let damping = params.alpha() * n2pi2(n);
    match idx.branch() {
        Branch::Minus => -damping - root,
        // Rationalized: (-a + s)(a + s) = s² - a² = β - n⁴π⁴.
        Branch::Plus => (params.beta() - n4pi4(n)) / (damping + root),
    }
}

pub fn mode_data(params: &BeamParams, idx: ModeIndex) -> SpectralMode {
    let lambda = eigenvalue(params, idx);
    let k = ((n4pi4(idx.n()) + lambda * lambda) / 2.0).sqrt();
    let c = idx.branch().sign() * k / discriminant(params, idx.n()).sqrt();
    SpectralMode { index: idx, lambda, k, c }
}

/// Both modes of pair `n`, `Minus` first.
pub fn mode_pair(params: &BeamParams, n: usize) -> [SpectralMode; 2] {
    assert!(n >= 1, "mode number must be >= 1");
    Branch::BOTH.map(|b| mode_data(params, ModeIndex { n, branch: b }))
}

/// Number of nonnegative eigenvalues, `⌊β^{1/4}/π⌋`.
///
/// The floor is evaluated through the exact comparison `n⁴π⁴ ≤ β`, which is
/// the sign test of `λ_{n,+1}`.
pub fn unstable_count(params: &BeamParams) -> usize {
    let beta = params.beta();
    let estimate = (beta.powf(0.25) / PI).floor().max(0.0) as usize;
    let mut n = estimate.saturating_sub(1);
    while n4pi4(n + 1) <= beta {
        n += 1;
    }
    while n > 0 && n4pi4(n) > beta {
        n -= 1;
    }
    n
}

pub fn riesz_constants(params: &BeamParams) -> RieszConstants {
    let a = params.alpha();
    let beta = params.beta();
    let c_r = (1.0 / a).max(beta / (4.0 * a * a * PI.powi(8) + beta * beta).sqrt());
    RieszConstants { c_r, m_r: 1.0 - c_r, big_m_r: 1.0 + c_r }
}

/// `⟨φ_{n,-1}, φ_{n,+1}⟩ = (2n⁴π⁴ - β) / (2 k_{n,-1} k_{n,+1})`.
pub fn gram_cross_term(params: &BeamParams, n: usize) -> f64 {
    let [minus, plus] = mode_pair(params, n);
    (2.0 * n4pi4(n) - params.beta()) / (2.0 * minus.k * plus.k)
}

/// Gram matrix of `(φ_{n,-1}, φ_{n,+1})` in the energy inner product.
pub fn gram_block(params: &BeamParams, n: usize) -> Matrix2<f64> {
    let g = gram_cross_term(params, n);
    Matrix2::new(1.0, g, g, 1.0)
}
