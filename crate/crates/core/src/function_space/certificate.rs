use serde::{Deserialize, Serialize};

use super::grid::GridFunction;
use crate::error::{Error, Result};

/// `||f chi_[a, inf)|| <= c mu^{-a}` for every cutoff `a >= a_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecayCertificate {
    pub c: f64,
    pub a_k: u64,
    pub mu: f64,
}

impl DecayCertificate {
    pub fn bound(&self, a: f64) -> f64 {
        (self.c.ln() - a * self.mu.ln()).exp()
    }

    /// Cutoffs `a >= a_k` on the grid of `f` where the bound fails.
    pub fn violations(&self, f: &GridFunction) -> Vec<f64> {
        let profile = f.tail_profile();
        let start = self.a_k as usize * f.q();
        (start..profile.len())
            .map(|i| (i as f64 * f.h(), profile[i]))
            .filter(|&(a, t)| t > self.bound(a) * (1.0 + 1e-12))
            .map(|(a, _)| a)
            .collect()
    }

    pub fn holds(&self, f: &GridFunction) -> bool {
        self.violations(f).is_empty()
    }
}

/// Result of fitting `||g chi_[d, inf)|| <= c mu^{-d}` for `d >= d0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailFit {
    pub c: f64,
    pub mu: f64,
    pub d0: f64,
    /// The tail past `d0` is identically zero; `c` is the smallest positive
    /// double and `mu` carries no information.
    pub zero_tail: bool,
}

/// Fits `ln tail(d) ~ ln c - d ln mu` by least squares over grid cutoffs in
/// `[d0, L - margin]`, then raises `c` until the bound holds at every grid
/// cutoff `d >= d0`.
pub fn fit_tail_certificate(g: &GridFunction, d0: f64) -> Result<TailFit> {
    if !(d0 >= 0.0 && d0.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "d0 must be a nonnegative number, got {d0}"
        )));
    }
    let profile = g.tail_profile();
    let q = g.q() as f64;
    let first = (d0 * q).ceil() as usize;
    if first >= g.cells() {
        return Err(Error::NoCertificate(format!(
            "cutoff {d0} leaves no grid points inside [0, {})",
            g.length()
        )));
    }
    if profile[first..].iter().all(|&t| t == 0.0) {
        return Ok(TailFit {
            c: f64::MIN_POSITIVE,
            mu: std::f64::consts::E,
            d0,
            zero_tail: true,
        });
    }
    let margin = (0.125 * g.length()).min(5.0).max(g.h());
    let last = ((g.length() - margin) * q).floor() as usize;
    let pts: Vec<(f64, f64)> = (first..=last.max(first))
        .filter(|&i| profile[i] > 0.0)
        .map(|i| (i as f64 / q, profile[i].ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::NoCertificate(
            "fewer than two positive tail samples to fit".into(),
        ));
    }
    if pts.windows(2).any(|w| w[1].1 >= w[0].1) {
        return Err(Error::NoCertificate(format!(
            "tail is not strictly decreasing on [{d0}, {}]",
            g.length() - margin
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let slope = sxy / sxx;
    if !(slope < 0.0) {
        return Err(Error::NoCertificate(format!(
            "fitted tail slope {slope} is not negative"
        )));
    }
    let ln_mu = -slope;
    let ln_c = (first..profile.len())
        .filter(|&i| profile[i] > 0.0)
        .map(|i| profile[i].ln() + (i as f64 / q) * ln_mu)
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(TailFit {
        c: ln_c.exp() * (1.0 + 1e-12),
        mu: ln_mu.exp(),
        d0,
        zero_tail: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function_space::grid::GridGenerator;
    use crate::function_space::weight::ModerateWeight;

    fn expo(p: f64) -> GridFunction {
        GridFunction::generate(
            &GridGenerator::Exponential {
                amplitude: 1.0,
                rate: 1.0,
            },
            64,
            40.0,
            p,
            ModerateWeight::Constant,
        )
        .unwrap()
    }

    #[test]
    fn exponential_p1() {
        let g = expo(1.0);
        let fit = fit_tail_certificate(&g, 0.0).unwrap();
        assert!((fit.mu / std::f64::consts::E - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.c - 1.0).abs() < 1e-2, "{fit:?}");
        let cert = DecayCertificate {
            c: fit.c,
            a_k: 0,
            mu: fit.mu,
        };
        assert!(cert.holds(&g));
    }

    #[test]
    fn exponential_p2() {
        let g = expo(2.0);
        let fit = fit_tail_certificate(&g, 0.0).unwrap();
        assert!((fit.mu / std::f64::consts::E - 1.0).abs() < 1e-3, "{fit:?}");
        assert!((fit.c - 0.5f64.sqrt()).abs() < 1e-2, "{fit:?}");
    }

    #[test]
    fn compact_support() {
        let g = GridFunction::generate(
            &GridGenerator::Characteristic {
                start: 0.0,
                end: 2.0,
            },
            16,
            10.0,
            1.0,
            ModerateWeight::Constant,
        )
        .unwrap();
        let fit = fit_tail_certificate(&g, 3.0).unwrap();
        assert!(fit.zero_tail);
        assert_eq!(fit.c, f64::MIN_POSITIVE);
    }

    #[test]
    fn flat_tail_rejected() {
        // no mass on [1, 5): the tail stalls there
        let g = crate::function_space::grid::GridFunction::from_fn(
            8,
            10.0,
            1.0,
            ModerateWeight::Constant,
            |x| num_complex::Complex64::new(if !(1.0..5.0).contains(&x) { 1.0 } else { 0.0 }, 0.0),
        )
        .unwrap();
        assert!(matches!(
            fit_tail_certificate(&g, 0.0),
            Err(Error::NoCertificate(_))
        ));
    }
}
