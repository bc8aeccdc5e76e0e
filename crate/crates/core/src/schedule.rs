//! Tolerance sequences `eps_j` and minimal power schedules `alpha(k)`.
//!
//! Each construction is a [`ScheduleRule`]: given the already fixed
//! `alpha(1..k-1)` it lists lower bounds on `alpha(k)`. The minimal schedule
//! takes the largest bound at every step, and [`replay`] re-evaluates the
//! same bounds against any candidate sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spaces::{ln_add, WeightSequence};

/// How the tolerances are normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum EpsVariant {
    /// `eps_j = eps 2^{-j}`: errors are eps-close for every `p >= 1`.
    Plain,
    /// `M = max{1, sum_k 2^{-kp} w_k}`: weighted error sum at most `eps^p`.
    Weighted { p: f64, weights: WeightSequence },
    /// `M = ||{2^{-k}}||_{l^p_w}`: the error sequence has `l^p_w` norm at most `eps`.
    SequenceSpace { p: f64, weights: WeightSequence },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpsSchedule {
    pub epsilon: f64,
    pub m: f64,
    pub variant: EpsVariant,
}

impl EpsSchedule {
    pub fn new(variant: EpsVariant, epsilon: f64) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "epsilon must be positive and finite, got {epsilon}"
            )));
        }
        let m = match &variant {
            EpsVariant::Plain => 1.0,
            EpsVariant::Weighted { p, weights } => {
                check_p(*p)?;
                weights.validate()?;
                let s = weights
                    .ln_geometric_sum(-p * std::f64::consts::LN_2, 1)?
                    .exp();
                s.max(1.0)
            }
            EpsVariant::SequenceSpace { p, weights } => {
                check_p(*p)?;
                weights.validate()?;
                (weights.ln_geometric_sum(-p * std::f64::consts::LN_2, 1)? / p).exp()
            }
        };
        if !(m.is_finite() && m > 0.0) {
            return Err(Error::UnsupportedWeight(format!(
                "normalization M = {m} is not a positive finite number"
            )));
        }
        Ok(EpsSchedule {
            epsilon,
            m,
            variant,
        })
    }

    pub fn plain(epsilon: f64) -> Result<Self> {
        Self::new(EpsVariant::Plain, epsilon)
    }

    /// `eps_j = (eps/M) 2^{-j}`.
    pub fn term(&self, j: usize) -> f64 {
        self.tail(j)
    }

    pub fn ln_term(&self, j: usize) -> f64 {
        (self.epsilon / self.m).ln() - j as f64 * std::f64::consts::LN_2
    }

    /// `sum_{j > k} eps_j = (eps/M) 2^{-k}`.
    pub fn tail(&self, k: usize) -> f64 {
        let scale = self.epsilon / self.m;
        if k < 1000 {
            scale * 0.5f64.powi(k as i32)
        } else {
            self.ln_tail(k).exp()
        }
    }

    pub fn ln_tail(&self, k: usize) -> f64 {
        (self.epsilon / self.m).ln() - k as f64 * std::f64::consts::LN_2
    }

    /// Same schedule with every tolerance scaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(self.variant.clone(), self.epsilon * factor)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "p must satisfy 1 <= p < inf, got {p}"
        )))
    }
}

/// Which construction produced a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Theorem {
    /// Finitely supported family, shifts bounded on the basis.
    Finite,
    /// Exponentially localized family.
    Localized,
    /// Half-line function space with translation operators.
    Function,
}

/// Names of the inequalities a schedule step must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// `alpha(k) >= 0`
    Nonnegative,
    /// `alpha(1) = 0`
    FixedStart,
    /// `alpha(k) > alpha(k-1)`
    Monotone,
    /// `||S||^{increment} ||f_k|| <= eps_k` (first term of `r_k`)
    Tolerance,
    /// increment (or `alpha(1)`) at least `N(k)`
    SupportCurrent,
    /// increment at least `N(k-1)`
    SupportPrevious,
    /// `||S||^{increment} ||f_k|| <= eps_k / 2` (strict for the function space)
    HalfTolerance,
    /// `alpha(k) >= alpha(k-1) + k - 2`
    Spacing,
    /// growth bound involving `lambda e^{-beta}` for localized families
    LocalizedGrowth,
    /// increment at least the certificate offset `a_{k-1}`
    CertificateOffset,
    /// growth bound involving `mu / (lambda ||T_{-1}||)`
    FunctionGrowth,
}

impl Constraint {
    pub fn name(self) -> &'static str {
        match self {
            Constraint::Nonnegative => "nonnegative",
            Constraint::FixedStart => "fixed_start",
            Constraint::Monotone => "monotone",
            Constraint::Tolerance => "tolerance",
            Constraint::SupportCurrent => "support_current",
            Constraint::SupportPrevious => "support_previous",
            Constraint::HalfTolerance => "half_tolerance",
            Constraint::Spacing => "spacing",
            Constraint::LocalizedGrowth => "localized_growth",
            Constraint::CertificateOffset => "certificate_offset",
            Constraint::FunctionGrowth => "function_growth",
        }
    }
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A lower bound on `alpha(k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub constraint: Constraint,
    /// Real-valued threshold on `alpha(k)` before rounding.
    pub threshold: f64,
    /// Smallest integer `alpha(k)` satisfying the constraint.
    pub min_alpha: i64,
}

const MAX_ALPHA: f64 = 9.0e15;

impl Bound {
    /// `alpha >= threshold`.
    fn at_least(constraint: Constraint, threshold: f64) -> Result<Option<Bound>> {
        Self::rounded(constraint, threshold, threshold.ceil())
    }

    /// `alpha > threshold`; an integer threshold moves up by one.
    fn above(constraint: Constraint, threshold: f64) -> Result<Option<Bound>> {
        Self::rounded(constraint, threshold, threshold.floor() + 1.0)
    }

    fn rounded(constraint: Constraint, threshold: f64, min: f64) -> Result<Option<Bound>> {
        if threshold.is_nan() {
            return Err(Error::InvalidParameter(format!(
                "{constraint} threshold is not a number"
            )));
        }
        if threshold == f64::NEG_INFINITY {
            return Ok(None);
        }
        if min > MAX_ALPHA {
            return Err(Error::InvalidParameter(format!(
                "{constraint} asks for alpha >= {threshold}, beyond integer range"
            )));
        }
        Ok(Some(Bound {
            constraint,
            threshold,
            min_alpha: min.max(-MAX_ALPHA) as i64,
        }))
    }

    fn exact(constraint: Constraint, min_alpha: i64) -> Bound {
        Bound {
            constraint,
            threshold: min_alpha as f64,
            min_alpha,
        }
    }
}

pub trait ScheduleRule {
    fn theorem(&self) -> Theorem;

    /// Number of family members `K`.
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Lower bounds on `alpha(k)` (1-based `k`) given `alpha(1..k-1)`.
    fn bounds(&self, k: usize, prefix: &[u64]) -> Result<Vec<Bound>>;

    /// Some constructions pin `alpha(1)`.
    fn fixed_first(&self) -> Option<u64> {
        None
    }

    fn eps(&self) -> &EpsSchedule;
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScheduleStep {
    pub alpha: u64,
    pub binding: Constraint,
    pub bounds: Vec<Bound>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PowerSchedule {
    pub theorem: Theorem,
    pub steps: Vec<ScheduleStep>,
    pub eps: EpsSchedule,
}

impl PowerSchedule {
    pub fn alphas(&self) -> Vec<u64> {
        self.steps.iter().map(|s| s.alpha).collect()
    }

    /// `alpha(k)`, 1-based.
    pub fn alpha(&self, k: usize) -> u64 {
        self.steps[k - 1].alpha
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Schedule with explicitly given powers, e.g. for replaying hand-made
    /// sequences. Binding constraints are left as `Nonnegative`.
    pub fn from_alphas(theorem: Theorem, alphas: &[u64], eps: EpsSchedule) -> Result<Self> {
        if alphas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidParameter(
                "powers must be strictly increasing".into(),
            ));
        }
        Ok(PowerSchedule {
            theorem,
            steps: alphas
                .iter()
                .map(|&a| ScheduleStep {
                    alpha: a,
                    binding: Constraint::Nonnegative,
                    bounds: Vec::new(),
                })
                .collect(),
            eps,
        })
    }
}

/// Smallest schedule satisfying every bound of `rule`.
pub fn build_schedule(rule: &dyn ScheduleRule) -> Result<PowerSchedule> {
    let mut alphas: Vec<u64> = Vec::with_capacity(rule.len());
    let mut steps = Vec::with_capacity(rule.len());
    for k in 1..=rule.len() {
        let mut bounds = vec![Bound::exact(Constraint::Nonnegative, 0)];
        if k == 1 {
            if let Some(a) = rule.fixed_first() {
                bounds.push(Bound::exact(Constraint::FixedStart, a as i64));
            }
        } else {
            bounds.push(Bound::exact(Constraint::Monotone, alphas[k - 2] as i64 + 1));
        }
        bounds.extend(rule.bounds(k, &alphas)?);
        let binding = bounds
            .iter()
            .max_by_key(|b| b.min_alpha)
            .copied()
            .expect("nonnegativity is always present");
        if k == 1 {
            if let Some(a) = rule.fixed_first() {
                if binding.min_alpha > a as i64 {
                    return Err(Error::InvalidParameter(format!(
                        "alpha(1) is fixed at {a} but {} needs at least {}",
                        binding.constraint, binding.min_alpha
                    )));
                }
            }
        }
        let alpha = binding.min_alpha as u64;
        alphas.push(alpha);
        steps.push(ScheduleStep {
            alpha,
            binding: binding.constraint,
            bounds,
        });
    }
    Ok(PowerSchedule {
        theorem: rule.theorem(),
        steps,
        eps: rule.eps().clone(),
    })
}

/// A failed inequality found by [`replay`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub k: usize,
    pub constraint: Constraint,
    pub alpha: i64,
    pub required: i64,
}

/// Re-evaluates every defining inequality of `rule` on `alphas`. Negative
/// entries are allowed so that probes below zero can be expressed.
pub fn replay(rule: &dyn ScheduleRule, alphas: &[i64]) -> Result<Vec<Violation>> {
    if alphas.len() != rule.len() {
        return Err(Error::InvalidParameter(format!(
            "schedule has {} entries, family has {}",
            alphas.len(),
            rule.len()
        )));
    }
    let mut out = Vec::new();
    let mut prefix: Vec<u64> = Vec::with_capacity(alphas.len());
    for (i, &alpha) in alphas.iter().enumerate() {
        let k = i + 1;
        let fail = |constraint, required| Violation {
            k,
            constraint,
            alpha,
            required,
        };
        if alpha < 0 {
            out.push(fail(Constraint::Nonnegative, 0));
            // later bounds need a valid prefix; nothing further is checkable
            return Ok(out);
        }
        if k == 1 {
            if let Some(a) = rule.fixed_first() {
                if alpha != a as i64 {
                    out.push(fail(Constraint::FixedStart, a as i64));
                }
            }
        } else if alpha <= alphas[i - 1] {
            out.push(fail(Constraint::Monotone, alphas[i - 1] + 1));
        }
        for b in rule.bounds(k, &prefix)? {
            if alpha < b.min_alpha {
                out.push(fail(b.constraint, b.min_alpha));
            }
        }
        prefix.push(alpha as u64);
    }
    Ok(out)
}

/// Indices `k` at which `alpha(k) - 1` still passes [`replay`]. Empty for a
/// minimal schedule.
pub fn minimality_gaps(rule: &dyn ScheduleRule, schedule: &PowerSchedule) -> Result<Vec<usize>> {
    let base: Vec<i64> = schedule.alphas().iter().map(|&a| a as i64).collect();
    let mut gaps = Vec::new();
    for k in 1..=base.len() {
        let mut probe = base.clone();
        probe[k - 1] -= 1;
        if replay(rule, &probe)?.is_empty() {
            gaps.push(k);
        }
    }
    Ok(gaps)
}

fn check_contraction(norm_s: f64) -> Result<()> {
    if norm_s > 0.0 && norm_s < 1.0 {
        Ok(())
    } else {
        Err(Error::ContractionViolated { norm_s })
    }
}

fn check_norms(norms: &[f64], k: usize) -> Result<()> {
    if norms.len() != k {
        return Err(Error::InvalidParameter(format!(
            "expected {k} norms, got {}",
            norms.len()
        )));
    }
    if let Some(bad) = norms.iter().find(|n| !(n.is_finite() && **n >= 0.0)) {
        return Err(Error::InvalidParameter(format!(
            "family norms must be finite and nonnegative, got {bad}"
        )));
    }
    Ok(())
}

/// `ceil`-ready threshold for `||S||^d ||f|| <= target`: `d >= (ln target - ln||f||)/ln||S||`.
/// A zero vector imposes nothing.
fn contraction_threshold(ln_target: f64, norm_f: f64, norm_s: f64) -> f64 {
    if norm_f == 0.0 {
        f64::NEG_INFINITY
    } else {
        (ln_target - norm_f.ln()) / norm_s.ln()
    }
}

/// Finitely supported family: `f_k` lies in `span{e_1..e_{N(k)}}`.
#[derive(Debug, Clone)]
pub struct FiniteRule {
    pub supports: Vec<usize>,
    pub norms: Vec<f64>,
    pub norm_s: f64,
    pub eps: EpsSchedule,
}

impl FiniteRule {
    pub fn new(
        supports: Vec<usize>,
        norms: Vec<f64>,
        norm_s: f64,
        eps: EpsSchedule,
    ) -> Result<Self> {
        check_contraction(norm_s)?;
        check_norms(&norms, supports.len())?;
        Ok(FiniteRule {
            supports,
            norms,
            norm_s,
            eps,
        })
    }

    /// `r_k = max{(ln eps_k - ln||f_k||)/ln||S||, N(k)}`.
    pub fn r(&self, k: usize) -> f64 {
        contraction_threshold(self.eps.ln_term(k), self.norms[k - 1], self.norm_s)
            .max(self.supports[k - 1] as f64)
    }
}

impl ScheduleRule for FiniteRule {
    fn theorem(&self) -> Theorem {
        Theorem::Finite
    }

    fn len(&self) -> usize {
        self.supports.len()
    }

    fn eps(&self) -> &EpsSchedule {
        &self.eps
    }

    fn bounds(&self, k: usize, prefix: &[u64]) -> Result<Vec<Bound>> {
        let tol = contraction_threshold(self.eps.ln_term(k), self.norms[k - 1], self.norm_s);
        let n_k = self.supports[k - 1] as f64;
        let mut out = Vec::with_capacity(3);
        if k == 1 {
            // the recursion leaves alpha(1) free, but the convergence of phi
            // needs alpha(1) >= r_1
            out.extend(Bound::at_least(Constraint::Tolerance, tol)?);
            out.extend(Bound::at_least(Constraint::SupportCurrent, n_k)?);
            return Ok(out);
        }
        let prev = prefix[k - 2] as f64;
        out.extend(Bound::at_least(Constraint::Tolerance, prev + tol)?);
        out.extend(Bound::at_least(
            Constraint::SupportPrevious,
            prev + self.supports[k - 2] as f64,
        )?);
        out.extend(Bound::at_least(Constraint::SupportCurrent, prev + n_k)?);
        Ok(out)
    }
}

/// Interpretation of the `n = 0` term in the localized growth bound, whose
/// sum runs over `n = 0..k-1` while `alpha(0)` is otherwise undefined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InnerSumStart {
    /// Include `n = 0` with `alpha(0) = 0`, i.e. an extra summand 1.
    #[default]
    ZeroWithUnitTerm,
    /// Sum over `n = 1..k-1` only.
    One,
}

/// Family with `|<f_k, e_j^*>| <= C e^{-beta |j-k|}`.
#[derive(Debug, Clone)]
pub struct LocalizedRule {
    pub c: f64,
    pub beta: f64,
    pub lambda: f64,
    pub norm_s: f64,
    pub b_upper: f64,
    pub norms: Vec<f64>,
    /// `||{e^{-beta j}}_j||` in the coefficient space.
    pub xd_norm_exp_beta: f64,
    pub eps: EpsSchedule,
    pub inner_sum: InnerSumStart,
}

impl LocalizedRule {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        c: f64,
        beta: f64,
        lambda: f64,
        norm_s: f64,
        b_upper: f64,
        norms: Vec<f64>,
        xd_norm_exp_beta: f64,
        eps: EpsSchedule,
        inner_sum: InnerSumStart,
    ) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "lambda must be positive, got {lambda}"
            )));
        }
        if !(beta > lambda.ln()) {
            return Err(Error::DecayTooSlow {
                beta,
                ln_lambda: lambda.ln(),
            });
        }
        check_contraction(norm_s)?;
        let n = norms.len();
        check_norms(&norms, n)?;
        for (name, v) in [
            ("C", c),
            ("B", b_upper),
            ("||e^{-beta j}||", xd_norm_exp_beta),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(LocalizedRule {
            c,
            beta,
            lambda,
            norm_s,
            b_upper,
            norms,
            xd_norm_exp_beta,
            eps,
            inner_sum,
        })
    }

    /// `ln sum_n (lambda e^{-beta})^{-alpha(n)} e^{beta n}` over the fixed prefix.
    fn ln_inner_sum(&self, prefix: &[u64], k: usize) -> f64 {
        let ln_ratio = self.lambda.ln() - self.beta;
        let mut acc = match self.inner_sum {
            InnerSumStart::ZeroWithUnitTerm => 0.0,
            InnerSumStart::One => f64::NEG_INFINITY,
        };
        for n in 1..k {
            acc = ln_add(
                acc,
                -(prefix[n - 1] as f64) * ln_ratio + self.beta * n as f64,
            );
        }
        acc
    }

    /// Real-valued right side of the localized growth bound for `alpha(k)`.
    pub fn growth_threshold(&self, k: usize, prefix: &[u64]) -> f64 {
        let numer = self.eps.ln_tail(k)
            - self.xd_norm_exp_beta.ln()
            - self.ln_inner_sum(prefix, k)
            - (2.0 * self.b_upper * self.c).ln();
        numer / (self.lambda.ln() - self.beta)
    }
}

impl ScheduleRule for LocalizedRule {
    fn theorem(&self) -> Theorem {
        Theorem::Localized
    }

    fn len(&self) -> usize {
        self.norms.len()
    }

    fn eps(&self) -> &EpsSchedule {
        &self.eps
    }

    fn fixed_first(&self) -> Option<u64> {
        Some(0)
    }

    fn bounds(&self, k: usize, prefix: &[u64]) -> Result<Vec<Bound>> {
        if k == 1 {
            return Ok(Vec::new());
        }
        let prev = prefix[k - 2] as f64;
        let half = contraction_threshold(
            self.eps.ln_term(k) - std::f64::consts::LN_2,
            self.norms[k - 1],
            self.norm_s,
        );
        let mut out = Vec::with_capacity(3);
        out.extend(Bound::at_least(Constraint::HalfTolerance, prev + half)?);
        out.extend(Bound::at_least(Constraint::Spacing, prev + k as f64 - 2.0)?);
        out.extend(Bound::above(
            Constraint::LocalizedGrowth,
            self.growth_threshold(k, prefix),
        )?);
        Ok(out)
    }
}

/// Half-line function family with tail certificates
/// `||f_k chi_[a,inf)|| <= C_k mu^{-a}` for `a >= a_k`.
#[derive(Debug, Clone)]
pub struct FunctionRule {
    pub norms: Vec<f64>,
    pub norm_s: f64,
    pub lambda: f64,
    pub norm_tminus1: f64,
    pub mu: f64,
    pub a_ks: Vec<u64>,
    pub c_ks: Vec<f64>,
    pub eps: EpsSchedule,
}

impl FunctionRule {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        norms: Vec<f64>,
        norm_s: f64,
        lambda: f64,
        norm_tminus1: f64,
        mu: f64,
        a_ks: Vec<u64>,
        c_ks: Vec<f64>,
        eps: EpsSchedule,
    ) -> Result<Self> {
        check_contraction(norm_s)?;
        let n = norms.len();
        check_norms(&norms, n)?;
        if a_ks.len() != n || c_ks.len() != n {
            return Err(Error::InvalidParameter(format!(
                "need one certificate per family member ({n}), got {} offsets and {} constants",
                a_ks.len(),
                c_ks.len()
            )));
        }
        if let Some(bad) = c_ks.iter().find(|c| !(c.is_finite() && **c > 0.0)) {
            return Err(Error::InvalidParameter(format!(
                "certificate constants must be positive, got {bad}"
            )));
        }
        let threshold = lambda * norm_tminus1;
        if !(mu > threshold && threshold > 0.0 && mu.is_finite()) {
            return Err(Error::GrowthCondition { mu, threshold });
        }
        Ok(FunctionRule {
            norms,
            norm_s,
            lambda,
            norm_tminus1,
            mu,
            a_ks,
            c_ks,
            eps,
        })
    }

    fn ln_rho(&self) -> f64 {
        (self.mu / (self.lambda * self.norm_tminus1)).ln()
    }

    /// Real-valued right side of the function-space growth bound for `alpha(k)`.
    pub fn growth_threshold(&self, k: usize, prefix: &[u64]) -> f64 {
        let ln_rho = self.ln_rho();
        let mut acc = f64::NEG_INFINITY;
        for n in 1..k {
            acc = ln_add(acc, self.c_ks[n - 1].ln() + prefix[n - 1] as f64 * ln_rho);
        }
        (std::f64::consts::LN_2 + acc - self.eps.ln_tail(k)) / ln_rho
    }
}

impl ScheduleRule for FunctionRule {
    fn theorem(&self) -> Theorem {
        Theorem::Function
    }

    fn len(&self) -> usize {
        self.norms.len()
    }

    fn eps(&self) -> &EpsSchedule {
        &self.eps
    }

    fn fixed_first(&self) -> Option<u64> {
        Some(0)
    }

    fn bounds(&self, k: usize, prefix: &[u64]) -> Result<Vec<Bound>> {
        if k == 1 {
            return Ok(Vec::new());
        }
        let prev = prefix[k - 2] as f64;
        let half = contraction_threshold(
            self.eps.ln_term(k) - std::f64::consts::LN_2,
            self.norms[k - 1],
            self.norm_s,
        );
        let mut out = Vec::with_capacity(3);
        out.extend(Bound::above(Constraint::HalfTolerance, prev + half)?);
        out.extend(Bound::at_least(
            Constraint::CertificateOffset,
            prev + self.a_ks[k - 2] as f64,
        )?);
        out.extend(Bound::at_least(
            Constraint::FunctionGrowth,
            self.growth_threshold(k, prefix),
        )?);
        Ok(out)
    }
}

pub fn schedule_finite(
    supports: &[usize],
    norms: &[f64],
    norm_s: f64,
    eps: &EpsSchedule,
) -> Result<PowerSchedule> {
    build_schedule(&FiniteRule::new(
        supports.to_vec(),
        norms.to_vec(),
        norm_s,
        eps.clone(),
    )?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eps_variants() {
        let e = EpsSchedule::plain(1.0).unwrap();
        assert_eq!(e.m, 1.0);
        assert_eq!(e.term(3), 0.125);
        assert_eq!(e.tail(3), 0.125);

        let w = EpsSchedule::new(
            EpsVariant::Weighted {
                p: 1.0,
                weights: WeightSequence::unit(),
            },
            1.0,
        )
        .unwrap();
        assert!((w.m - 1.0).abs() < 1e-15);

        let x = EpsSchedule::new(
            EpsVariant::SequenceSpace {
                p: 1.0,
                weights: WeightSequence::unit(),
            },
            1.0,
        )
        .unwrap();
        assert!((x.m - 1.0).abs() < 1e-15);

        // sum 2^{-2k} 2^k = 1
        let w2 = EpsSchedule::new(
            EpsVariant::Weighted {
                p: 2.0,
                weights: WeightSequence::Geometric { ratio: 2.0 },
            },
            1.0,
        )
        .unwrap();
        assert!((w2.m - 1.0).abs() < 1e-15);

        // sum 2^{-k} 4^k diverges
        let bad = EpsSchedule::new(
            EpsVariant::Weighted {
                p: 1.0,
                weights: WeightSequence::Geometric { ratio: 4.0 },
            },
            1.0,
        );
        assert!(matches!(bad, Err(Error::UnsupportedWeight(_))));
        assert!(EpsSchedule::plain(0.0).is_err());
    }

    #[test]
    fn tails_telescope() {
        let e = EpsSchedule::plain(0.7).unwrap();
        for k in 1..60 {
            assert_eq!(e.tail(k) - e.tail(k + 1), e.term(k + 1));
        }
    }

    #[test]
    fn finite_triangular_schedule() {
        let k = 12;
        let supports: Vec<usize> = (1..=k).collect();
        let s = schedule_finite(
            &supports,
            &vec![1.0; k],
            0.25,
            &EpsSchedule::plain(1.0).unwrap(),
        )
        .unwrap();
        let expected: Vec<u64> = (1..=k as u64).map(|k| k * (k + 1) / 2).collect();
        assert_eq!(s.alphas(), expected);
        assert_eq!(s.steps[1].binding, Constraint::SupportCurrent);
    }

    #[test]
    fn finite_single_element() {
        let eps = EpsSchedule::plain(1.0).unwrap(); // eps_1 = 1/2
        let s = schedule_finite(&[1], &[1.0], 0.5, &eps).unwrap();
        assert_eq!(s.alphas(), vec![1]);
    }

    #[test]
    fn finite_large_eps_uses_supports() {
        let eps = EpsSchedule::plain(1e9).unwrap();
        let s = schedule_finite(&[2, 5, 1, 3], &[1.0; 4], 0.5, &eps).unwrap();
        assert_eq!(s.alphas(), vec![2, 7, 12, 15]);
    }

    #[test]
    fn finite_zero_vector_does_not_crash() {
        let eps = EpsSchedule::plain(1.0).unwrap();
        let s = schedule_finite(&[1, 0, 2], &[1.0, 0.0, 1.0], 0.5, &eps).unwrap();
        assert_eq!(s.alphas(), vec![1, 2, 5]);
        assert_eq!(s.steps[1].binding, Constraint::SupportPrevious);
    }

    #[test]
    fn contraction_required() {
        let eps = EpsSchedule::plain(1.0).unwrap();
        assert!(matches!(
            schedule_finite(&[1], &[1.0], 1.0, &eps),
            Err(Error::ContractionViolated { .. })
        ));
    }

    #[test]
    fn localized_rejects_slow_decay() {
        let eps = EpsSchedule::plain(1.0).unwrap();
        let r = LocalizedRule::new(
            1.0,
            0.5,
            2.0,
            0.5,
            1.0,
            vec![1.0],
            1.0,
            eps,
            InnerSumStart::default(),
        );
        assert!(matches!(r, Err(Error::DecayTooSlow { .. })));
    }

    #[test]
    fn function_rule_huge_eps_increments_by_one() {
        let eps = EpsSchedule::plain(1e30).unwrap();
        let rule = FunctionRule::new(
            vec![1.0, 1.0],
            0.5,
            2.0,
            1.0,
            4.0,
            vec![0, 0],
            vec![1.0, 1.0],
            eps,
        )
        .unwrap();
        let s = build_schedule(&rule).unwrap();
        assert_eq!(s.alphas(), vec![0, 1]);
        assert_eq!(s.steps[1].binding, Constraint::Monotone);
    }

    #[test]
    fn function_rule_growth_condition() {
        let eps = EpsSchedule::plain(1.0).unwrap();
        let r = FunctionRule::new(vec![1.0], 0.5, 2.0, 1.0, 2.0, vec![0], vec![1.0], eps);
        assert!(matches!(r, Err(Error::GrowthCondition { .. })));
    }

    #[test]
    fn replay_flags_decrements() {
        let eps = EpsSchedule::plain(1.0).unwrap();
        let rule = FiniteRule::new((1..=6).collect(), vec![1.0; 6], 0.25, eps).unwrap();
        let s = build_schedule(&rule).unwrap();
        let base: Vec<i64> = s.alphas().iter().map(|&a| a as i64).collect();
        assert!(replay(&rule, &base).unwrap().is_empty());
        assert!(minimality_gaps(&rule, &s).unwrap().is_empty());
        let mut bumped = base.clone();
        bumped[5] += 1;
        assert!(replay(&rule, &bumped).unwrap().is_empty());
        // raising an earlier power moves every later lower bound with it
        let mut early = base.clone();
        early[2] += 1;
        assert!(!replay(&rule, &early).unwrap().is_empty());
        early[2] -= 2;
        assert!(!replay(&rule, &early).unwrap().is_empty());
    }

    /// Direct floating evaluation of the localized recursion, no logs.
    fn localized_oracle(k_max: usize, sum_from_zero: bool) -> Vec<u64> {
        let e = std::f64::consts::E;
        let (lambda, beta, b, c) = (e, 2.0f64, 1.0, 1.0);
        let norm_s = 1.0 / e;
        let q = (-4.0f64).exp();
        let xd = (q / (1.0 - q)).sqrt();
        let f_norm = (1.0 + 2.0 * q / (1.0 - q)).sqrt();
        let ratio = lambda * (-beta).exp();
        let mut alphas = vec![0u64];
        for k in 2..=k_max {
            let prev = alphas[k - 2];
            let eps_k = 0.5f64.powi(k as i32);
            let tail = eps_k;
            let mut inc = 1u64;
            // ||S||^d ||f|| <= eps_k / 2
            while norm_s.powi(inc as i32) * f_norm > eps_k / 2.0 {
                inc += 1;
            }
            let mut alpha = (prev + inc).max(prev + k as u64 - 2);
            let mut sum = if sum_from_zero { 1.0 } else { 0.0 };
            for n in 1..k {
                sum += ratio.powi(-(alphas[n - 1] as i32)) * (beta * n as f64).exp();
            }
            // smallest alpha with B C ||xd|| ratio^alpha sum * 2 < tail
            let mut a = 0u64;
            while 2.0 * b * c * xd * sum * ratio.powi(a as i32) >= tail {
                a += 1;
            }
            alpha = alpha.max(a);
            alphas.push(alpha);
        }
        alphas
    }

    fn localized_fixture(k: usize, start: InnerSumStart) -> LocalizedRule {
        let e = std::f64::consts::E;
        let q = (-4.0f64).exp();
        LocalizedRule::new(
            1.0,
            2.0,
            e,
            1.0 / e,
            1.0,
            vec![(1.0 + 2.0 * q / (1.0 - q)).sqrt(); k],
            (q / (1.0 - q)).sqrt(),
            EpsSchedule::plain(1.0).unwrap(),
            start,
        )
        .unwrap()
    }

    #[test]
    fn localized_matches_direct_oracle() {
        for (start, zero) in [
            (InnerSumStart::ZeroWithUnitTerm, true),
            (InnerSumStart::One, false),
        ] {
            let rule = localized_fixture(8, start);
            let s = build_schedule(&rule).unwrap();
            assert_eq!(s.alphas(), localized_oracle(8, zero), "{start:?}");
            assert!(minimality_gaps(&rule, &s).unwrap().is_empty());
        }
    }

    #[test]
    fn function_matches_integer_oracle() {
        // rho = 2, C_n = 1, ||S|| = 1/2, eps_k = 2^{-k}: everything is a power of two
        let k_max = 7;
        let rule = FunctionRule::new(
            vec![1.0; k_max],
            0.5,
            2.0,
            1.0,
            4.0,
            vec![0; k_max],
            vec![1.0; k_max],
            EpsSchedule::plain(1.0).unwrap(),
        )
        .unwrap();
        let s = build_schedule(&rule).unwrap();
        let mut oracle = vec![0u64];
        for k in 2..=k_max {
            let prev = oracle[k - 2];
            // 2^{-d} < 2^{-k-1}  <=>  d >= k + 2
            let half = prev + k as u64 + 2;
            let sum: u128 = oracle.iter().map(|&a| 1u128 << a).sum();
            let need = sum << (k + 1);
            let mut a = 0u64;
            while (1u128 << a) < need {
                a += 1;
            }
            oracle.push(half.max(a).max(prev + 1));
        }
        assert_eq!(s.alphas(), oracle);
        assert!(minimality_gaps(&rule, &s).unwrap().is_empty());
    }
}
