use serde::{Deserialize, Serialize};

/// Weight `w` on the real line together with a submultiplicative majorant
/// `m` such that `w(x + y) <= m(x) w(y)`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModerateWeight {
    /// `w = m = 1`.
    #[default]
    Constant,
    /// `w(x) = m(x) = e^{gamma x}`.
    Exponential { gamma: f64 },
    /// `w(x) = (1 + |x|)^s`, `m(x) = (1 + |x|)^{|s|}`.
    Polynomial { s: f64 },
}

impl ModerateWeight {
    pub fn w(&self, x: f64) -> f64 {
        match *self {
            ModerateWeight::Constant => 1.0,
            ModerateWeight::Exponential { gamma } => (gamma * x).exp(),
            ModerateWeight::Polynomial { s } => (1.0 + x.abs()).powf(s),
        }
    }

    pub fn m(&self, x: f64) -> f64 {
        match *self {
            ModerateWeight::Constant => 1.0,
            ModerateWeight::Exponential { gamma } => (gamma * x).exp(),
            ModerateWeight::Polynomial { s } => (1.0 + x.abs()).powf(s.abs()),
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, ModerateWeight::Constant)
            || matches!(self, ModerateWeight::Exponential { gamma } if *gamma == 0.0)
            || matches!(self, ModerateWeight::Polynomial { s } if *s == 0.0)
    }

    /// Bound on the translation `f -> f(. - 1)` in `L^p_w`.
    pub fn norm_t1_bound(&self, p: f64) -> f64 {
        self.m(1.0).powf(1.0 / p)
    }

    /// Bound on the translation `f -> f(. + 1)` in `L^p_w`.
    pub fn norm_tminus1_bound(&self, p: f64) -> f64 {
        self.m(-1.0).powf(1.0 / p)
    }

    pub fn validate(&self) -> crate::Result<()> {
        let ok = match *self {
            ModerateWeight::Constant => true,
            ModerateWeight::Exponential { gamma } => gamma.is_finite(),
            ModerateWeight::Polynomial { s } => s.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(crate::Error::InvalidParameter(format!(
                "weight parameters must be finite: {self:?}"
            )))
        }
    }

    /// Checks `w(x + y) <= m(x) w(y)` on the grid `{-r, -r + h, .., r}^2`.
    pub fn sampled_moderate(&self, r: f64, h: f64) -> bool {
        let n = (r / h).round() as i64;
        (-n..=n).all(|i| {
            let x = i as f64 * h;
            (-n..=n).all(|j| {
                let y = j as f64 * h;
                self.w(x + y) <= self.m(x) * self.w(y) * (1.0 + 1e-12)
            })
        })
    }
}
