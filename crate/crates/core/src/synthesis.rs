//! State-feedback synthesis `u = K Y` for the truncated model.
//!
//! Single-input configurations have a unique gain for the chosen column of
//! `B`, computed by Ackermann's formula with an eigenvector-based fallback. With both torques available the
//! gain is not unique; it is computed by eigenvector assignment, choosing the
//! closed-loop eigenvectors to keep their matrix well conditioned.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg;
use crate::reduction::{self, InputSelection, TruncatedModel};

/// Which boundary torques are driven.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ActuationConfig {
    BothEnds,
    /// Torque at `x = 0` only; row 2 of `K` is zero.
    LeftOnly,
    /// Torque at `x = 1` only; row 1 of `K` is zero.
    RightOnly,
}

impl ActuationConfig {
    pub fn selection(self) -> InputSelection {
        match self {
            ActuationConfig::BothEnds => InputSelection::Full,
            ActuationConfig::LeftOnly => InputSelection::Column1,
            ActuationConfig::RightOnly => InputSelection::Column2,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeedbackGain {
    k: DMatrix<f64>,
    config: ActuationConfig,
    target_poles: Vec<Complex64>,
}

impl FeedbackGain {
    /// Wrap an externally supplied gain. The zero-row constraint of `config`
    /// is checked exactly.
    pub fn from_matrix(
        k: DMatrix<f64>,
        config: ActuationConfig,
        target_poles: Vec<Complex64>,
    ) -> Result<Self> {
        if k.nrows() != 2 || k.ncols() == 0 || !k.ncols().is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!("gain must be 2 x 2N0, got {:?}", k.shape())));
        }
        let zero_row = match config {
            ActuationConfig::BothEnds => None,
            ActuationConfig::LeftOnly => Some(1),
            ActuationConfig::RightOnly => Some(0),
        };
        if let Some(r) = zero_row {
            if k.row(r).iter().any(|v| *v != 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "row {} of K must vanish for {config:?}",
                    r + 1
                )));
            }
        }
        Ok(Self { k, config, target_poles })
    }

    pub fn k(&self) -> &DMatrix<f64> {
        &self.k
    }

    pub fn config(&self) -> ActuationConfig {
        self.config
    }

    pub fn target_poles(&self) -> &[Complex64] {
        &self.target_poles
    }

    pub fn n0(&self) -> usize {
        self.k.ncols() / 2
    }
}

pub fn real_poles(values: &[f64]) -> Vec<Complex64> {
    values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
}

/// Conjugate-closure check; returns the poles ordered as
/// reals first, then `(p, p̄)` pairs with `Im p > 0`.
fn normalize_poles(poles: &[Complex64]) -> Result<Vec<Complex64>> {
    let scale = poles.iter().map(|p| p.norm()).fold(1.0, f64::max);
    let tol = 1e-10 * scale;
    let mut reals = Vec::new();
    let mut uppers = Vec::new();
    let mut lowers = Vec::new();
    for p in poles {
        if !(p.re.is_finite() && p.im.is_finite()) {
            return Err(Error::InvalidPoles(format!("non-finite pole {p}")));
        }
        if p.im.abs() <= tol {
            reals.push(Complex64::new(p.re, 0.0));
        } else if p.im > 0.0 {
            uppers.push(*p);
        } else {
            lowers.push(*p);
        }
    }
    let mut out = reals;
    for u in uppers {
        let pos = lowers
            .iter()
            .position(|l| (l - u.conj()).norm() <= tol)
            .ok_or_else(|| Error::InvalidPoles(format!("{u} has no conjugate partner")))?;
        lowers.swap_remove(pos);
        out.push(u);
        out.push(u.conj());
    }
    if !lowers.is_empty() {
        return Err(Error::InvalidPoles(format!("{} has no conjugate partner", lowers[0])));
    }
    Ok(out)
}

/// Real coefficients `[1, a_{n-1}, …, a_0]` of `Π (s - p_i)`.
fn characteristic_polynomial(poles: &[Complex64]) -> Vec<f64> {
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for p in poles {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i] += c;
            next[i + 1] -= c * p;
        }
        coeffs = next;
    }
    coeffs.into_iter().map(|c| c.re).collect()
}

/// Ackermann's formula for `ẋ = Ax + bu`, returning the row `k` such that
/// `A + b k` has the given spectrum. The computation runs on `A/‖A‖`.
pub fn ackermann(a: &DMatrix<f64>, b: &DVector<f64>, poles: &[Complex64]) -> Result<DVector<f64>> {
    let n = a.nrows();
    if poles.len() != n {
        return Err(Error::InvalidPoles(format!("expected {n} poles, got {}", poles.len())));
    }
    let poles = normalize_poles(poles)?;
    let sigma = linalg::spectral_norm(a).max(1.0);
    let a_hat = a / sigma;
    let scaled: Vec<Complex64> = poles.iter().map(|p| p / sigma).collect();
    let coeffs = characteristic_polynomial(&scaled);

    // φ(Â) by Horner.
    let mut phi = DMatrix::identity(n, n) * coeffs[0];
    for c in &coeffs[1..] {
        phi = &a_hat * phi + DMatrix::identity(n, n) * *c;
    }

    let mut ctrb = DMatrix::zeros(n, n);
    let mut col = b.clone();
    for j in 0..n {
        ctrb.set_column(j, &col);
        col = &a_hat * col;
    }
    if !reduction::pbh_controllable(a, &DMatrix::from_column_slice(n, 1, b.as_slice())) {
        return Err(Error::Uncontrollable);
    }
    let mut e_n = DVector::zeros(n);
    e_n[n - 1] = 1.0;
    let q = ctrb
        .transpose()
        .full_piv_lu()
        .solve(&e_n)
        .ok_or(Error::Uncontrollable)?;
    let row = phi.transpose() * q * (-sigma);
    Ok(row)
}

/// Eigenvector assignment for `m ≥ 1` inputs.
///
/// For each target `s` the admissible closed-loop eigenvectors span the
/// `v`-part of `ker [A - sI, B]`. Starting from the leading kernel vectors,
/// each eigenvector is repeatedly replaced by the admissible direction
/// closest to the orthogonal complement of the others, then `K = W V⁻¹`.
pub fn eigenvector_assignment(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    poles: &[Complex64],
    sweeps: usize,
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let m = b.ncols();
    if poles.len() != n {
        return Err(Error::InvalidPoles(format!("expected {n} poles, got {}", poles.len())));
    }
    let poles = normalize_poles(poles)?;

    // Admissible subspaces: orthonormal V-basis with the matching W part.
    let mut spaces: Vec<(DMatrix<Complex64>, DMatrix<Complex64>)> = Vec::new();
    let mut slot_of_pole = Vec::new();
    let mut i = 0;
    while i < poles.len() {
        let s = poles[i];
        let mut pencil = DMatrix::<Complex64>::zeros(n, n + m);
        for r in 0..n {
            for c in 0..n {
                pencil[(r, c)] = Complex64::new(a[(r, c)], 0.0);
            }
            pencil[(r, r)] -= s;
            for c in 0..m {
                pencil[(r, n + c)] = Complex64::new(b[(r, c)], 0.0);
            }
        }
        // Pad to a square matrix so the SVD exposes the full right basis.
        let mut square = DMatrix::<Complex64>::zeros(n + m, n + m);
        square.view_mut((0, 0), (n, n + m)).copy_from(&pencil);
        let svd = square.svd(false, true);
        let v_t = svd.v_t.ok_or_else(|| Error::Placement("SVD failed".into()))?;
        let sv = &svd.singular_values;
        let top = sv.max();
        let rank = sv.iter().filter(|&&v| v > reduction::RANK_TOLERANCE * top).count();
        if rank < n {
            return Err(Error::Uncontrollable);
        }
        let mut order: Vec<usize> = (0..n + m).collect();
        order.sort_by(|&x, &y| sv[x].total_cmp(&sv[y]));
        let mut kernel = DMatrix::<Complex64>::zeros(n + m, m);
        for (c, &idx) in order.iter().take(m).enumerate() {
            kernel.set_column(c, &v_t.row(idx).adjoint());
        }
        let v_part = kernel.rows(0, n).into_owned();
        let w_part = kernel.rows(n, m).into_owned();
        // Orthonormalize the V part and carry W along. Kernel directions with
        // a vanishing V part come from dependent inputs and are dropped.
        let vsvd = v_part.svd(true, true);
        let (u, vt) = match (vsvd.u, vsvd.v_t) {
            (Some(u), Some(vt)) => (u, vt),
            _ => return Err(Error::Placement("SVD failed".into())),
        };
        let vs = &vsvd.singular_values;
        let keep: Vec<usize> =
            (0..vs.len()).filter(|&c| vs[c] > 1e-10 * vs.max()).collect();
        if keep.is_empty() {
            return Err(Error::Placement(format!("degenerate eigenvector space at {s}")));
        }
        let basis = u.select_columns(keep.iter());
        let mut w_basis = DMatrix::<Complex64>::zeros(m, keep.len());
        for (c, &idx) in keep.iter().enumerate() {
            let dir = vt.row(idx).adjoint() / Complex64::new(vs[idx], 0.0);
            w_basis.set_column(c, &(&w_part * dir));
        }
        spaces.push((basis, w_basis));
        slot_of_pole.push(i);
        i += if s.im != 0.0 { 2 } else { 1 };
    }

    // Coefficients z_j in each space; start from the first basis vector.
    let mut coeffs: Vec<DVector<Complex64>> = spaces
        .iter()
        .map(|(q, _)| {
            let mut z = DVector::zeros(q.ncols());
            z[0] = Complex64::new(1.0, 0.0);
            z
        })
        .collect();

    let build_v = |coeffs: &[DVector<Complex64>]| -> DMatrix<f64> {
        let mut v = DMatrix::zeros(n, n);
        for (j, (q, _)) in spaces.iter().enumerate() {
            let vec = q * &coeffs[j];
            let col = slot_of_pole[j];
            if poles[col].im != 0.0 {
                v.set_column(col, &vec.map(|c| c.re));
                v.set_column(col + 1, &vec.map(|c| c.im));
            } else {
                v.set_column(col, &vec.map(|c| c.re));
            }
        }
        v
    };

    for _ in 0..sweeps {
        for j in 0..spaces.len() {
            let v = build_v(&coeffs);
            let col = slot_of_pole[j];
            let width = if poles[col].im != 0.0 { 2 } else { 1 };
            let others: Vec<usize> = (0..n).filter(|c| *c < col || *c >= col + width).collect();
            let target = if others.is_empty() {
                v.column(col).into_owned()
            } else {
                let rest = v.select_columns(others.iter());
                let qr = rest.clone().qr();
                let q = qr.q();
                // Direction orthogonal to the other eigenvectors: residual of
                // the current vector, or of any basis vector if it vanishes.
                let mut best = DVector::zeros(n);
                let mut best_norm = 0.0;
                let current = v.column(col).into_owned();
                let mut candidates = vec![current];
                candidates.extend((0..n).map(|e| DVector::from_fn(n, |r, _| if r == e { 1.0 } else { 0.0 })));
                for cand in candidates {
                    let resid = &cand - &q * (q.transpose() * &cand);
                    let nr = resid.norm();
                    if nr > best_norm * (1.0 + 1e-12) + 1e-14 {
                        best_norm = nr;
                        best = resid;
                        if nr > 1e-3 {
                            break;
                        }
                    }
                }
                best
            };
            let (q, _) = &spaces[j];
            let target_c = target.map(|x| Complex64::new(x, 0.0));
            let z = q.adjoint() * target_c;
            let nz = z.norm();
            if nz > 1e-300 {
                coeffs[j] = z / Complex64::new(nz, 0.0);
            }
        }
    }

    let v = build_v(&coeffs);
    let mut w = DMatrix::zeros(m, n);
    for (j, (_, wq)) in spaces.iter().enumerate() {
        let vec = wq * &coeffs[j];
        let col = slot_of_pole[j];
        w.set_column(col, &vec.map(|c| c.re));
        if poles[col].im != 0.0 {
            w.set_column(col + 1, &vec.map(|c| c.im));
        }
    }
    let v_inv = v
        .try_inverse()
        .ok_or_else(|| Error::Placement("closed-loop eigenvector matrix is singular".into()))?;
    // (A - sI)v + B w = 0 with K v = w gives (A + BK) v = s v.
    Ok(w * v_inv)
}

const SPECTRUM_TOLERANCE: f64 = 1e-6;

/// Largest distance between the spectrum of `m` and `targets` under the
/// best greedy matching.
pub fn spectrum_mismatch(m: &DMatrix<f64>, targets: &[Complex64]) -> f64 {
    let mut eig = linalg::eigenvalues(m);
    let mut worst: f64 = 0.0;
    for t in targets {
        let (pos, dist) = eig
            .iter()
            .enumerate()
            .map(|(i, e)| (i, (e - t).norm()))
            .fold((usize::MAX, f64::INFINITY), |acc, x| if x.1 < acc.1 { x } else { acc });
        if pos == usize::MAX {
            return f64::INFINITY;
        }
        eig.swap_remove(pos);
        worst = worst.max(dist);
    }
    worst
}

/// Pole placement on the truncated model.
pub fn place_poles(
    model: &TruncatedModel,
    config: ActuationConfig,
    poles: &[Complex64],
) -> Result<FeedbackGain> {
    let n = model.dim();
    if poles.len() != n {
        return Err(Error::InvalidPoles(format!("expected {n} poles, got {}", poles.len())));
    }
    normalize_poles(poles)?;
    if let Some(p) = poles.iter().find(|p| p.re >= 0.0) {
        return Err(Error::InvalidPoles(format!("target pole {p} is not stable")));
    }
    if !reduction::controllability_check(model, config.selection()) {
        return Err(Error::Uncontrollable);
    }
    let k = assign_poles(model.a(), model.b(), config, poles)?;
    let closed = model.a() + model.b() * &k;
    let mismatch = spectrum_mismatch(&closed, poles);
    if mismatch.is_nan() || mismatch > SPECTRUM_TOLERANCE {
        return Err(Error::Placement(format!(
            "closed-loop spectrum misses the targets by {mismatch:e}"
        )));
    }
    FeedbackGain::from_matrix(k, config, poles.to_vec())
}

/// Gain for `A + BK` without stability or tolerance checks on the result.
pub fn assign_poles(
    a: &DMatrix<f64>,
    b: &DMatrix<f64>,
    config: ActuationConfig,
    poles: &[Complex64],
) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let mut k = DMatrix::zeros(2, n);
    match config {
        ActuationConfig::LeftOnly | ActuationConfig::RightOnly => {
            let col = if config == ActuationConfig::LeftOnly { 0 } else { 1 };
            let b_col = b.column(col).into_owned();
            let mut row = DMatrix::from_row_slice(1, n, ackermann(a, &b_col, poles)?.as_slice());
            // Ackermann degrades when the targets sit far from the open-loop
            // spectrum. The single-input eigenvector gain is the same matrix
            // in exact arithmetic; keep whichever lands closer.
            let b_mat = DMatrix::from_column_slice(n, 1, b_col.as_slice());
            if let Ok(alt) = eigenvector_assignment(a, &b_mat, poles, 0) {
                let miss = |r: &DMatrix<f64>| spectrum_mismatch(&(a + &b_mat * r), poles);
                if miss(&alt) < miss(&row) {
                    row = alt;
                }
            }
            k.set_row(col, &row.row(0));
        }
        ActuationConfig::BothEnds => {
            k = eigenvector_assignment(a, b, poles, 50)?;
        }
    }
    Ok(k)
}

pub fn closed_loop(model: &TruncatedModel, gain: &FeedbackGain) -> Result<DMatrix<f64>> {
    if gain.k().ncols() != model.dim() {
        return Err(Error::InvalidArgument(format!(
            "gain has {} columns, model dimension is {}",
            gain.k().ncols(),
            model.dim()
        )));
    }
    Ok(model.a() + model.b() * gain.k())
}
