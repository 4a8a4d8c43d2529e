//! Complex vectors/matrices, DFT matrix construction and linear solves used
//! by every other module.
//!
//! Dense storage and factorizations come from `nalgebra`; this module owns
//! the DFT conventions and the solve-versus-pseudo-inverse policy.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type CMat = DMatrix<Complex64>;
pub type CVec = DVector<Complex64>;

/// Square matrices with a reciprocal condition estimate below this are
/// treated as singular.
pub const RCOND_THRESHOLD: f64 = 1e-12;

/// `exp(j * phase)` as a unit-magnitude complex number.
#[inline]
pub fn cis(phase: f64) -> Complex64 {
    Complex64::from_polar(1.0, phase)
}

/// K x K DFT matrix with entry (m, n) = exp(-j 2 pi m n / K), zero-based.
///
/// Its conjugate transpose is the inverse transform up to a 1/K factor:
/// `dft_matrix(K)^H * dft_matrix(K) = K * I`.
pub fn dft_matrix(k: usize) -> Result<CMat> {
    if k == 0 {
        return Err(Error::InvalidDimension {
            what: "DFT size",
            expected: 1,
            got: 0,
        });
    }
    let step = -2.0 * std::f64::consts::PI / k as f64;
    Ok(CMat::from_fn(k, k, |m, n| cis(step * (m * n) as f64)))
}

/// Q x K matrix whose q-th row is the `pilot_indices[q]`-th row of
/// `dft_matrix(k)`. Selecting rows `0..Q` reproduces the contiguous pilot
/// DFT block used by the LMS error transform.
pub fn pilot_dft_matrix(k: usize, pilot_indices: &[usize]) -> Result<CMat> {
    if pilot_indices.len() > k {
        return Err(Error::InvalidIndex(format!(
            "{} pilot rows requested from a {k}-point DFT",
            pilot_indices.len()
        )));
    }
    let mut seen = vec![false; k];
    for &idx in pilot_indices {
        if idx >= k {
            return Err(Error::InvalidIndex(format!(
                "pilot index {idx} out of range for K={k}"
            )));
        }
        if seen[idx] {
            return Err(Error::InvalidIndex(format!("duplicate pilot index {idx}")));
        }
        seen[idx] = true;
    }
    let step = -2.0 * std::f64::consts::PI / k as f64;
    Ok(CMat::from_fn(pilot_indices.len(), k, |q, n| {
        cis(step * (pilot_indices[q] * n) as f64)
    }))
}

/// Moore-Penrose pseudo-inverse application `A^+ B` computed from the SVD,
/// with singular values below `sigma_max * 1e-13` treated as zero.
fn pinv_apply(m: &CMat, b: &CMat) -> Result<CMat> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("SVD with U requested");
    let v_t = svd.v_t.as_ref().expect("SVD with V^T requested");
    let smax = svd.singular_values.max();
    let tol = smax * 1e-13;

    // A = U S Vt  =>  A^+ = Vt^H S^+ U^H
    let mut uh_b = u.adjoint() * b;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let inv = if s > tol { 1.0 / s } else { 0.0 };
        uh_b.row_mut(i).scale_mut(inv);
    }
    Ok(v_t.adjoint() * uh_b)
}

/// Reciprocal condition estimate (smallest over largest singular value).
pub fn rcond(m: &CMat) -> f64 {
    let sv = m.clone().svd(false, false).singular_values;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for &s in sv.iter() {
        lo = lo.min(s);
        hi = hi.max(s);
    }
    if hi == 0.0 {
        0.0
    } else {
        lo / hi
    }
}

/// Solve `M X = B`. Square well-conditioned systems get an exact solve;
/// rectangular systems get the minimum-norm least-squares solution. A square
/// system with reciprocal condition below [`RCOND_THRESHOLD`] is rejected as
/// singular.
pub fn solve_or_pinv(m: &CMat, b: &CMat) -> Result<CMat> {
    if m.nrows() != b.nrows() {
        return Err(Error::InvalidDimension {
            what: "right-hand side rows",
            expected: m.nrows(),
            got: b.nrows(),
        });
    }
    if m.is_square() {
        let rc = rcond(m);
        if rc < RCOND_THRESHOLD {
            return Err(Error::SingularMatrix { rcond: rc });
        }
    }
    pinv_apply(m, b)
}

/// Vector convenience wrapper around [`solve_or_pinv`].
pub fn solve_or_pinv_vec(m: &CMat, b: &CVec) -> Result<CVec> {
    let cols = CMat::from_columns(&[b.clone()]);
    Ok(CVec::from_column_slice(solve_or_pinv(m, &cols)?.as_slice()))
}

/// Moore-Penrose pseudo-inverse of `m`.
pub fn pinv(m: &CMat) -> Result<CMat> {
    pinv_apply(m, &CMat::identity(m.nrows(), m.nrows()))
}
