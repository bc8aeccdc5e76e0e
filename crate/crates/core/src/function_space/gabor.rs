use super::certificate::{DecayCertificate, TailFit};
use super::grid::{cells_for, GridFunction};
use crate::error::{Error, Result};

/// A grid function with a verified tail bound.
#[derive(Debug, Clone, PartialEq)]
pub struct CertifiedFunction {
    pub f: GridFunction,
    pub cert: DecayCertificate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaborMember {
    pub m: i64,
    pub n: u64,
    pub member: CertifiedFunction,
}

/// Column-wise snake order over `[-m_max, m_max] x [0, n_max]`: even
/// columns run `m` upwards, odd columns downwards, so neighbours differ by
/// one modulation or one translation step.
pub fn snake_order(m_max: u64, n_max: u64) -> Vec<(i64, u64)> {
    let m_max = m_max as i64;
    let mut out = Vec::with_capacity(((2 * m_max + 1) as usize) * (n_max as usize + 1));
    for n in 0..=n_max {
        if n % 2 == 0 {
            out.extend((-m_max..=m_max).map(|m| (m, n)));
        } else {
            out.extend((-m_max..=m_max).rev().map(|m| (m, n)));
        }
    }
    out
}

/// `f_k = E_{m b} T_{n a} g` in snake order, with `C_k = C mu^{k a}` and
/// `a_k = ceil(d0 + k a)`.
pub fn gabor_half_system(
    g: &GridFunction,
    fit: &TailFit,
    a: f64,
    b: f64,
    m_max: u64,
    n_max: u64,
) -> Result<Vec<GaborMember>> {
    if !(a > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "translation step a must be positive and b finite, got a = {a}, b = {b}"
        )));
    }
    let step_cells = cells_for(a, g.q()).map_err(|_| {
        Error::GridMismatch(format!(
            "a = {a} is not a multiple of the grid step 1/{}",
            g.q()
        ))
    })? as i64;
    let length = g.length() + (n_max as f64 * a).ceil();
    let base = g.padded(length)?;
    snake_order(m_max, n_max)
        .into_iter()
        .enumerate()
        .map(|(i, (m, n))| {
            let k = (i + 1) as f64;
            let f = base
                .translate_cells(n as i64 * step_cells)
                .modulate(m as f64 * b);
            let c = (fit.c.ln() + k * a * fit.mu.ln()).exp();
            if !c.is_finite() {
                return Err(Error::Overflow(format!(
                    "certificate constant for member {}",
                    i + 1
                )));
            }
            let cert = DecayCertificate {
                c,
                a_k: (fit.d0 + k * a - 1e-9).ceil() as u64,
                mu: fit.mu,
            };
            Ok(GaborMember {
                m,
                n,
                member: CertifiedFunction { f, cert },
            })
        })
        .collect()
}
