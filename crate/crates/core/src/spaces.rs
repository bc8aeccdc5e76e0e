//! Weighted sequence spaces `l^p_w`, sparse coefficient vectors and their norms.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Positive weight sequence `w_1, w_2, ...` in closed form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightSequence {
    /// `w_k = value`
    Constant { value: f64 },
    /// `w_k = ratio^k`
    Geometric { ratio: f64 },
    /// `w_k = k^exponent`
    Power { exponent: f64 },
    /// Explicit `w_1..w_m` followed by a constant tail.
    Table { prefix: Vec<f64>, tail: f64 },
}

impl Default for WeightSequence {
    fn default() -> Self {
        WeightSequence::Constant { value: 1.0 }
    }
}

/// `ln(e^a + e^b)` without overflow.
pub(crate) fn ln_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// `ln(1 - e^x)` for `x < 0`.
fn ln_one_minus_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

impl WeightSequence {
    pub fn unit() -> Self {
        WeightSequence::Constant { value: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = |x: f64| x.is_finite() && x > 0.0;
        match self {
            WeightSequence::Constant { value } if !ok(*value) => Err(Error::InvalidInput(format!(
                "constant weight must be positive and finite, got {value}"
            ))),
            WeightSequence::Geometric { ratio } if !ok(*ratio) => Err(Error::InvalidInput(
                format!("geometric weight ratio must be positive and finite, got {ratio}"),
            )),
            WeightSequence::Power { exponent } if !exponent.is_finite() => {
                Err(Error::InvalidInput(format!(
                    "power weight exponent must be finite, got {exponent}"
                )))
            }
            WeightSequence::Table { prefix, tail } => {
                if let Some(bad) = prefix.iter().find(|w| !ok(**w)) {
                    return Err(Error::InvalidInput(format!(
                        "table weights must be positive and finite, got {bad}"
                    )));
                }
                if !ok(*tail) {
                    return Err(Error::InvalidInput(format!(
                        "table tail weight must be positive and finite, got {tail}"
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// `w_k` as a double (may be `inf` or `0` for extreme geometric weights).
    pub fn weight(&self, k: usize) -> f64 {
        debug_assert!(k >= 1);
        match self {
            WeightSequence::Constant { value } => *value,
            WeightSequence::Geometric { ratio } => {
                if k <= i32::MAX as usize {
                    ratio.powi(k as i32)
                } else {
                    (k as f64 * ratio.ln()).exp()
                }
            }
            WeightSequence::Power { exponent } => (k as f64).powf(*exponent),
            WeightSequence::Table { prefix, tail } => prefix.get(k - 1).copied().unwrap_or(*tail),
        }
    }

    pub fn ln_weight(&self, k: usize) -> f64 {
        match self {
            WeightSequence::Constant { value } => value.ln(),
            WeightSequence::Geometric { ratio } => k as f64 * ratio.ln(),
            WeightSequence::Power { exponent } => exponent * (k as f64).ln(),
            WeightSequence::Table { .. } => self.weight(k).ln(),
        }
    }

    /// `sup_k w_k`, or `None` when unbounded.
    pub fn sup(&self) -> Option<f64> {
        match self {
            WeightSequence::Constant { value } => Some(*value),
            WeightSequence::Geometric { ratio } => (*ratio <= 1.0).then_some(*ratio),
            WeightSequence::Power { exponent } => (*exponent <= 0.0).then_some(1.0),
            WeightSequence::Table { prefix, tail } => {
                Some(prefix.iter().copied().fold(*tail, f64::max))
            }
        }
    }

    /// `ln sum_{j >= from} q^j w_j` for `q = exp(ln_q) < 1`.
    ///
    /// Constant, geometric and table weights are summed in closed form. Power
    /// weights are summed term by term until a geometric majorant certifies the
    /// remainder below one part in 10^17, and that majorant is added, so the
    /// returned value never underestimates the series.
    pub fn ln_geometric_sum(&self, ln_q: f64, from: usize) -> Result<f64> {
        let from = from.max(1);
        if !(ln_q < 0.0) {
            return Err(Error::UnsupportedWeight(format!(
                "series with ratio e^{ln_q} does not converge"
            )));
        }
        match self {
            WeightSequence::Constant { value } => {
                Ok(value.ln() + from as f64 * ln_q - ln_one_minus_exp(ln_q))
            }
            WeightSequence::Geometric { ratio } => {
                let ln_eff = ln_q + ratio.ln();
                if !(ln_eff < 0.0) {
                    return Err(Error::UnsupportedWeight(format!(
                        "sum of q^j * {ratio}^j diverges (q = {})",
                        ln_q.exp()
                    )));
                }
                Ok(from as f64 * ln_eff - ln_one_minus_exp(ln_eff))
            }
            WeightSequence::Table { prefix, tail } => {
                let mut acc = f64::NEG_INFINITY;
                for j in from..=prefix.len() {
                    acc = ln_add(acc, j as f64 * ln_q + prefix[j - 1].ln());
                }
                let start = from.max(prefix.len() + 1);
                let tail_sum = tail.ln() + start as f64 * ln_q - ln_one_minus_exp(ln_q);
                Ok(ln_add(acc, tail_sum))
            }
            WeightSequence::Power { exponent } => {
                let s = *exponent;
                let ln_term = |j: usize| j as f64 * ln_q + s * (j as f64).ln();
                let mut acc = f64::NEG_INFINITY;
                let mut j = from;
                loop {
                    let t = ln_term(j);
                    acc = ln_add(acc, t);
                    // ratio of consecutive terms from j+1 on is at most this
                    let ln_ratio = ln_q + s.max(0.0) * ((j + 2) as f64 / (j + 1) as f64).ln();
                    if ln_ratio < 0.0 {
                        let ln_rest = ln_term(j + 1) - ln_one_minus_exp(ln_ratio);
                        if ln_rest < acc - 17.0 * std::f64::consts::LN_10 {
                            return Ok(ln_add(acc, ln_rest));
                        }
                    }
                    j += 1;
                    if j - from > 50_000_000 {
                        return Err(Error::UnsupportedWeight(
                            "power-weight series converges too slowly to certify".into(),
                        ));
                    }
                }
            }
        }
    }
}

/// Which basis the coefficients of a [`SeqVector`] refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BasisMode {
    /// Unit vectors `delta_k`.
    #[default]
    Canonical,
    /// Normalized vectors `e_k = w_k^{-1/p} delta_k`.
    Scaled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeightedLpSpace {
    pub p: f64,
    pub weights: WeightSequence,
    #[serde(default)]
    pub basis: BasisMode,
}

impl WeightedLpSpace {
    pub fn new(p: f64, weights: WeightSequence, basis: BasisMode) -> Result<Self> {
        let space = WeightedLpSpace { p, weights, basis };
        space.validate()?;
        Ok(space)
    }

    /// Unweighted `l^p` in the canonical basis.
    pub fn lp(p: f64) -> Result<Self> {
        Self::new(p, WeightSequence::unit(), BasisMode::Canonical)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p >= 1.0 && self.p.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "exponent p must satisfy 1 <= p < inf, got {}",
                self.p
            )));
        }
        self.weights.validate()
    }

    /// Weights seen by coefficients in this space's basis: the scaled basis
    /// turns the weighted norm into the plain `l^p` norm.
    pub fn coefficient_weights(&self) -> WeightSequence {
        match self.basis {
            BasisMode::Canonical => self.weights.clone(),
            BasisMode::Scaled => WeightSequence::unit(),
        }
    }

    pub fn norm(&self, v: &SeqVector) -> Result<f64> {
        norm(self, v)
    }
}

/// Geometric envelope `|c_j| <= C e^{-beta |j - center|}`. Coefficients from
/// `tail_start` on are not stored; they are equal to the envelope there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub amplitude: f64,
    pub rate: f64,
    pub center: usize,
    pub tail_start: usize,
}

impl DecayProfile {
    pub fn envelope(&self, j: usize) -> f64 {
        self.amplitude * (-self.rate * (j as f64 - self.center as f64).abs()).exp()
    }

    fn validate(&self) -> Result<()> {
        if !(self.amplitude > 0.0 && self.amplitude.is_finite()) {
            return Err(Error::InvalidInput(
                "decay amplitude must be positive".into(),
            ));
        }
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(Error::InvalidInput("decay rate must be positive".into()));
        }
        if self.center < 1 || self.tail_start < self.center {
            return Err(Error::InvalidInput(format!(
                "decay tail must start at or after its center (center {}, start {})",
                self.center, self.tail_start
            )));
        }
        Ok(())
    }
}

/// Sparse coefficient sequence indexed from 1. Zero coefficients are never
/// stored.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "SeqVectorRepr", into = "SeqVectorRepr")]
pub struct SeqVector {
    coefficients: BTreeMap<usize, f64>,
    decay: Option<DecayProfile>,
}

#[derive(Serialize, Deserialize)]
struct SeqVectorRepr {
    #[serde(default)]
    entries: Vec<(usize, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    decay: Option<DecayProfile>,
}

impl TryFrom<SeqVectorRepr> for SeqVector {
    type Error = Error;

    fn try_from(r: SeqVectorRepr) -> Result<Self> {
        let v = SeqVector::from_pairs(r.entries)?;
        match r.decay {
            Some(d) => v.with_decay(d),
            None => Ok(v),
        }
    }
}

impl From<SeqVector> for SeqVectorRepr {
    fn from(v: SeqVector) -> Self {
        SeqVectorRepr {
            entries: v.coefficients.into_iter().collect(),
            decay: v.decay,
        }
    }
}

impl SeqVector {
    pub fn zero() -> Self {
        SeqVector::default()
    }

    /// Coefficient 1 at index `k`.
    pub fn unit(k: usize) -> Result<Self> {
        SeqVector::from_pairs([(k, 1.0)])
    }

    /// Builds a finitely supported vector. Repeated indices are summed.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut v = SeqVector::zero();
        for (j, c) in pairs {
            if j < 1 {
                return Err(Error::InvalidIndex { index: j as i64 });
            }
            if !c.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "coefficient at index {j} is not finite ({c})"
                )));
            }
            v.add_at(j, c);
        }
        Ok(v)
    }

    /// Attaches a geometric tail. Every stored coefficient must lie under the
    /// envelope and before the tail start.
    pub fn with_decay(mut self, decay: DecayProfile) -> Result<Self> {
        decay.validate()?;
        if let Some(last) = self.last_index() {
            if last >= decay.tail_start {
                return Err(Error::InvalidInput(format!(
                    "stored index {last} overlaps the decay tail starting at {}",
                    decay.tail_start
                )));
            }
        }
        for (&j, &c) in &self.coefficients {
            let env = decay.envelope(j);
            if c.abs() > env * (1.0 + 1e-12) {
                return Err(Error::InvalidInput(format!(
                    "coefficient {c} at index {j} exceeds the decay envelope {env}"
                )));
            }
        }
        self.decay = Some(decay);
        Ok(self)
    }

    pub fn decay(&self) -> Option<&DecayProfile> {
        self.decay.as_ref()
    }

    pub fn is_finitely_supported(&self) -> bool {
        self.decay.is_none()
    }

    pub fn is_zero(&self) -> bool {
        self.coefficients.is_empty() && self.decay.is_none()
    }

    /// Coefficient at `j`, including the implicit decay tail.
    pub fn get(&self, j: usize) -> f64 {
        if let Some(&c) = self.coefficients.get(&j) {
            return c;
        }
        match &self.decay {
            Some(d) if j >= d.tail_start => d.envelope(j),
            _ => 0.0,
        }
    }

    /// Stored (index, coefficient) pairs in increasing index order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.coefficients.iter().map(|(&j, &c)| (j, c))
    }

    pub fn nnz(&self) -> usize {
        self.coefficients.len()
    }

    pub fn last_index(&self) -> Option<usize> {
        self.coefficients.keys().next_back().copied()
    }

    /// Smallest `N` with the vector in `span{e_1..e_N}`; `None` for an
    /// infinite tail.
    pub fn support_bound(&self) -> Option<usize> {
        if self.decay.is_some() {
            None
        } else {
            Some(self.last_index().unwrap_or(0))
        }
    }

    pub(crate) fn add_at(&mut self, j: usize, c: f64) {
        if c == 0.0 {
            return;
        }
        let entry = self.coefficients.entry(j).or_insert(0.0);
        *entry += c;
        if *entry == 0.0 {
            self.coefficients.remove(&j);
        }
    }

    /// `self - other` on finitely supported vectors.
    pub fn sub(&self, other: &SeqVector) -> Result<SeqVector> {
        if self.decay.is_some() || other.decay.is_some() {
            return Err(Error::InvalidInput(
                "subtraction needs finitely supported vectors".into(),
            ));
        }
        let mut out = self.clone();
        for (j, c) in other.iter() {
            out.add_at(j, -c);
        }
        Ok(out)
    }

    pub fn add(&self, other: &SeqVector) -> Result<SeqVector> {
        if self.decay.is_some() || other.decay.is_some() {
            return Err(Error::InvalidInput(
                "addition needs finitely supported vectors".into(),
            ));
        }
        let mut out = self.clone();
        for (j, c) in other.iter() {
            out.add_at(j, c);
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> SeqVector {
        let mut out = SeqVector::zero();
        for (j, c) in self.iter() {
            out.add_at(j, c * factor);
        }
        out.decay = self.decay.clone().and_then(|mut d| {
            if factor == 0.0 {
                return None;
            }
            d.amplitude *= factor.abs();
            Some(d)
        });
        out
    }

    /// Keeps only indices `<= last`, dropping any tail.
    pub fn truncated(&self, last: usize) -> SeqVector {
        SeqVector {
            coefficients: self
                .coefficients
                .range(..=last)
                .map(|(&j, &c)| (j, c))
                .collect(),
            decay: None,
        }
    }

    /// `L^n`: coefficient `j` of the result is coefficient `j + n` of `self`.
    pub fn shifted_left(&self, n: usize) -> SeqVector {
        if n == 0 {
            return self.clone();
        }
        let coefficients = self
            .coefficients
            .range(n + 1..)
            .map(|(&j, &c)| (j - n, c))
            .collect();
        let decay = self.decay.as_ref().map(|d| {
            let start = d.tail_start.saturating_sub(n).max(1);
            if d.center > n {
                DecayProfile {
                    center: d.center - n,
                    tail_start: start,
                    ..d.clone()
                }
            } else {
                // recentre at 1: the tail only ever lies to the right of the centre
                let drop = (1 + n - d.center) as f64;
                DecayProfile {
                    amplitude: d.amplitude * (-d.rate * drop).exp(),
                    center: 1,
                    tail_start: start,
                    rate: d.rate,
                }
            }
        });
        SeqVector {
            coefficients,
            decay,
        }
    }

    /// `R^n`: every index moves up by `n`.
    pub fn shifted_right(&self, n: usize) -> SeqVector {
        if n == 0 {
            return self.clone();
        }
        SeqVector {
            coefficients: self
                .coefficients
                .iter()
                .map(|(&j, &c)| (j + n, c))
                .collect(),
            decay: self.decay.as_ref().map(|d| DecayProfile {
                center: d.center + n,
                tail_start: d.tail_start + n,
                ..d.clone()
            }),
        }
    }

    pub(crate) fn from_map(coefficients: BTreeMap<usize, f64>) -> SeqVector {
        SeqVector {
            coefficients: coefficients
                .into_iter()
                .filter(|&(_, c)| c != 0.0)
                .collect(),
            decay: None,
        }
    }
}

/// Sum of `|c_j|^p w_j`, kept exact while the terms are ordinary doubles and
/// switched to log-sum-exp for terms outside double range.
#[derive(Default)]
struct PowerSum {
    direct: f64,
    ln_extra: f64,
    has_extra: bool,
}

impl PowerSum {
    fn new() -> Self {
        PowerSum {
            direct: 0.0,
            ln_extra: f64::NEG_INFINITY,
            has_extra: false,
        }
    }

    fn push(&mut self, c: f64, p: f64, weights: &WeightSequence, j: usize) {
        if c == 0.0 {
            return;
        }
        let w = weights.weight(j);
        let a = c.abs();
        let term = if p == 1.0 { a * w } else { a.powf(p) * w };
        if term.is_normal() && w.is_normal() {
            self.direct += term;
        } else {
            self.push_ln(p * a.ln() + weights.ln_weight(j));
        }
    }

    fn push_ln(&mut self, ln_term: f64) {
        self.ln_extra = ln_add(self.ln_extra, ln_term);
        self.has_extra = true;
    }

    fn root(&self, p: f64) -> f64 {
        if !self.has_extra {
            return if p == 1.0 {
                self.direct
            } else if p == 2.0 {
                self.direct.sqrt()
            } else {
                self.direct.powf(1.0 / p)
            };
        }
        let ln_direct = if self.direct > 0.0 {
            self.direct.ln()
        } else {
            f64::NEG_INFINITY
        };
        (ln_add(ln_direct, self.ln_extra) / p).exp()
    }
}

fn tail_power_sum(space: &WeightedLpSpace, v: &SeqVector, from: usize) -> Result<PowerSum> {
    let weights = space.coefficient_weights();
    let mut acc = PowerSum::new();
    for (j, c) in v.coefficients.range(from..) {
        acc.push(*c, space.p, &weights, *j);
    }
    if let Some(d) = &v.decay {
        let start = from.max(d.tail_start);
        // sum_{j>=start} (A e^{-r(j-c)})^p w_j = A^p e^{r p c} sum_j (e^{-r p})^j w_j
        let ln_series = weights.ln_geometric_sum(-d.rate * space.p, start)?;
        acc.push_ln(space.p * d.amplitude.ln() + d.rate * space.p * d.center as f64 + ln_series);
    }
    Ok(acc)
}

/// `||v||` in `space`, reading the coefficients in the space's basis.
pub fn norm(space: &WeightedLpSpace, v: &SeqVector) -> Result<f64> {
    Ok(tail_power_sum(space, v, 1)?.root(space.p))
}

/// Norm of the restriction of `v` to indices `>= from_index`, with a
/// certified upper bound on it.
pub fn tail_norm(space: &WeightedLpSpace, v: &SeqVector, from_index: usize) -> Result<(f64, f64)> {
    if from_index < 1 {
        return Err(Error::InvalidIndex { index: 0 });
    }
    let value = tail_power_sum(space, v, from_index)?.root(space.p);
    let bound = if v.decay.is_some() {
        // closed-form tails pass through exp/ln; cover the rounding
        value * (1.0 + 64.0 * f64::EPSILON)
    } else {
        value
    };
    Ok((value, bound))
}

/// The `k`-th normalized basis vector `w_k^{-1/p} delta_k`, written in the
/// space's basis.
pub fn scaled_basis_vector(space: &WeightedLpSpace, k: i64) -> Result<SeqVector> {
    if k < 1 {
        return Err(Error::InvalidIndex { index: k });
    }
    let k = k as usize;
    let c = match space.basis {
        BasisMode::Scaled => 1.0,
        BasisMode::Canonical => {
            let w = space.weights.weight(k);
            let c = if w.is_normal() {
                w.powf(-1.0 / space.p)
            } else {
                (-space.weights.ln_weight(k) / space.p).exp()
            };
            if !c.is_normal() {
                return Err(Error::Overflow(format!(
                    "w_{k}^(-1/p) is not representable as a double"
                )));
            }
            c
        }
    };
    SeqVector::from_pairs([(k, c)])
}
