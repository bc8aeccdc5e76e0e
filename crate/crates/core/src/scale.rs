//! Integer powers of a positive scalar carried as exponents.
//!
//! The suborbit construction multiplies by `lambda^alpha(k)` with `alpha`
//! growing quadratically, so the power itself leaves double range long
//! before the products it appears in do. Exponents are kept as integers and
//! only folded into a value when that value is read.

use num_complex::Complex64;

/// Returns `value * lambda^exponent`, computed without forming an
/// intermediate power that overflows or underflows.
pub fn scale_real(value: f64, lambda: f64, exponent: i64) -> f64 {
    if value == 0.0 || exponent == 0 || lambda == 1.0 {
        return value;
    }
    if exponent.unsigned_abs() <= 1000 {
        let power = lambda.powi(exponent as i32);
        if power.is_normal() {
            let direct = value * power;
            if direct.is_finite() && (direct == 0.0 || direct.is_normal()) {
                return direct;
            }
        }
    }
    let log_mag = value.abs().ln() + exponent as f64 * lambda.ln();
    value.signum() * log_mag.exp()
}

/// Complex analogue of [`scale_real`]; the phase is untouched.
pub fn scale_complex(value: Complex64, lambda: f64, exponent: i64) -> Complex64 {
    if exponent == 0 || lambda == 1.0 {
        return value;
    }
    let norm = value.norm();
    if norm == 0.0 {
        return value;
    }
    let scaled = scale_real(norm, lambda, exponent);
    value * (scaled / norm)
}

/// Natural log of `|value| * lambda^exponent`.
pub fn log_magnitude(value: f64, lambda: f64, exponent: i64) -> f64 {
    value.abs().ln() + exponent as f64 * lambda.ln()
}

/// A value together with a pending factor `lambda^exponent`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaled<V> {
    pub lambda: f64,
    pub exponent: i64,
    pub inner: V,
}

impl<V> Scaled<V> {
    pub fn new(lambda: f64, exponent: i64, inner: V) -> Self {
        Scaled {
            lambda,
            exponent,
            inner,
        }
    }

    pub fn unscaled(lambda: f64, inner: V) -> Self {
        Scaled::new(lambda, 0, inner)
    }

    /// Combined factor as a double, if representable.
    pub fn factor(&self) -> Option<f64> {
        let f = scale_real(1.0, self.lambda, self.exponent);
        (f.is_finite() && f > 0.0).then_some(f)
    }

    pub fn map<W>(self, f: impl FnOnce(V) -> W) -> Scaled<W> {
        Scaled {
            lambda: self.lambda,
            exponent: self.exponent,
            inner: f(self.inner),
        }
    }
}
