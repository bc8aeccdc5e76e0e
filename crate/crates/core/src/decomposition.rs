//! Stability of atomic decompositions under small perturbations, with a
//! singular-value check of the bounds for `p = 2`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spaces::SeqVector;

/// Vectors `f_1..f_K` cut to their first `dimension` coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomicSystem {
    pub dimension: usize,
    pub vectors: Vec<SeqVector>,
    pub p: f64,
    pub a: f64,
    pub b: f64,
}

impl AtomicSystem {
    pub fn new(dimension: usize, vectors: &[SeqVector], p: f64, a: f64, b: f64) -> Result<Self> {
        if !(a > 0.0 && a <= b && b.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "bounds must satisfy 0 < A <= B, got A = {a}, B = {b}"
            )));
        }
        if dimension == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        Ok(AtomicSystem {
            dimension,
            vectors: vectors.iter().map(|v| v.truncated(dimension)).collect(),
            p,
            a,
            b,
        })
    }

    /// `K x D` matrix whose rows are the vectors.
    pub fn matrix(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.vectors.len(), self.dimension);
        for (r, v) in self.vectors.iter().enumerate() {
            for (j, c) in v.iter() {
                m[(r, j - 1)] = c;
            }
        }
        m
    }
}

/// Bounds `(A / (1 + eps B), B / (1 - eps B))` of a system `eps`-close to
/// one with bounds `(A, B)`.
pub fn perturbed_bounds(a: f64, b: f64, epsilon: f64) -> Result<(f64, f64)> {
    if !(a > 0.0 && a <= b && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "bounds must satisfy 0 < A <= B, got A = {a}, B = {b}"
        )));
    }
    if !(epsilon > 0.0 && epsilon * b < 1.0) {
        return Err(Error::Precondition(format!(
            "perturbation size must satisfy 0 < eps < 1/B = {}, got {epsilon}",
            1.0 / b
        )));
    }
    Ok((a / (1.0 + epsilon * b), b / (1.0 - epsilon * b)))
}

/// `||{err_k}||_{l^q} <= eps` with `q` conjugate to `p`, and `eps < 1/B`.
pub fn check_closeness(errors: &[f64], p: f64, epsilon: f64, b: f64) -> Result<bool> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "p must satisfy 1 <= p < inf, got {p}"
        )));
    }
    if errors.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
        return Err(Error::InvalidInput(
            "errors must be finite and nonnegative".into(),
        ));
    }
    let size = if p == 1.0 {
        errors.iter().copied().fold(0.0, f64::max)
    } else {
        let q = p / (p - 1.0);
        errors.iter().map(|e| e.powf(q)).sum::<f64>().powf(1.0 / q)
    };
    Ok(size <= epsilon && epsilon * b < 1.0)
}

/// Measured bounds of a `p = 2` system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    /// Smallest singular value of the coefficient matrix, 0 if rank deficient.
    pub a: f64,
    pub b: f64,
    pub rank: usize,
    /// Full rank in the ambient dimension.
    pub complete: bool,
}

/// Extremal singular values of the `K x D` coefficient matrix. They are the
/// best constants in `A ||c|| <= ||sum c_k f_k|| <= B ||c||` when `K <= D`.
pub fn frame_bounds_p2(system: &AtomicSystem) -> Result<FrameBounds> {
    if system.p != 2.0 {
        return Err(Error::InvalidParameter(format!(
            "singular-value bounds need p = 2, got {}",
            system.p
        )));
    }
    let m = system.matrix();
    let (k, d) = m.shape();
    if k == 0 {
        return Err(Error::InvalidInput("empty system".into()));
    }
    let gram = if k <= d {
        &m * m.transpose()
    } else {
        m.transpose() * &m
    };
    let eig = nalgebra::SymmetricEigen::new(gram);
    let mut sv: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0).sqrt()).collect();
    sv.sort_by(|a, b| a.total_cmp(b));
    let top = *sv.last().unwrap();
    let tol = top * 1e-12 * k.max(d) as f64;
    let rank = sv.iter().filter(|&&s| s > tol).count();
    let a = if rank < sv.len() { 0.0 } else { sv[0] };
    Ok(FrameBounds {
        a,
        b: top,
        rank,
        complete: rank == d,
    })
}
