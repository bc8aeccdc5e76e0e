//! The generating vector `phi = sum_j S^{alpha(j)} f_j` and error reports
//! for its suborbit `T^{alpha(k)} phi`.

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scale::scale_real;
use crate::schedule::{
    EpsSchedule, EpsVariant, InnerSumStart, LocalizedRule, PowerSchedule, ScheduleRule,
};
use crate::shifts::ShiftOperators;
use crate::spaces::{norm, BasisMode, SeqVector};

/// `phi_N = sum_{j<=N} S^{alpha(j)} f_j`, kept as the list of pairs
/// `(alpha(j), f_j)`.
#[derive(Debug, Clone)]
pub struct OrbitRepresentation {
    pub ops: ShiftOperators,
    pub schedule: PowerSchedule,
    pub family: Vec<SeqVector>,
    pub truncation_index: usize,
    /// Upper bound on `||phi - phi_N||`.
    pub truncation_tail_bound: f64,
    family_norms: Vec<f64>,
}

pub fn build_phi(
    ops: &ShiftOperators,
    schedule: &PowerSchedule,
    family: &[SeqVector],
    n: usize,
) -> Result<OrbitRepresentation> {
    let k_max = family.len();
    if schedule.len() != k_max {
        return Err(Error::Precondition(format!(
            "schedule has {} powers for {k_max} family members",
            schedule.len()
        )));
    }
    if n > k_max {
        return Err(Error::Precondition(format!(
            "truncation index {n} exceeds family size {k_max}"
        )));
    }
    if let Some(j) = family.iter().position(|f| !f.is_finitely_supported()) {
        return Err(Error::Precondition(format!(
            "family member {} has an infinite tail; truncate it first",
            j + 1
        )));
    }
    let family_norms = family
        .iter()
        .map(|f| norm(&ops.space, f))
        .collect::<Result<Vec<_>>>()?;
    let ln_s = ops.norm_s().ln();
    let mut tail = 0.0;
    for j in n + 1..=k_max {
        if family_norms[j - 1] > 0.0 {
            tail += (schedule.alpha(j) as f64 * ln_s + family_norms[j - 1].ln()).exp();
        }
    }
    tail += 0.5 * schedule.eps.tail(k_max);
    Ok(OrbitRepresentation {
        ops: ops.clone(),
        schedule: schedule.clone(),
        family: family.to_vec(),
        truncation_index: n,
        truncation_tail_bound: tail,
        family_norms,
    })
}

impl OrbitRepresentation {
    pub fn len(&self) -> usize {
        self.family.len()
    }

    pub fn is_empty(&self) -> bool {
        self.family.is_empty()
    }

    pub fn family_norm(&self, k: usize) -> f64 {
        self.family_norms[k - 1]
    }

    /// The stored pairs `(alpha(j), f_j)`, `j <= N`.
    pub fn terms(&self) -> impl Iterator<Item = (u64, &SeqVector)> + '_ {
        self.family[..self.truncation_index]
            .iter()
            .enumerate()
            .map(|(i, f)| (self.schedule.alpha(i + 1), f))
    }

    /// Dense `phi_N`. Fails if some `lambda^{-alpha(j)} c` overflows.
    pub fn materialize(&self) -> Result<SeqVector> {
        let mut acc = BTreeMap::new();
        for (alpha, f) in self.terms() {
            let term = self.ops.apply_s_pow(f, alpha as usize).materialize()?;
            for (j, c) in term.iter() {
                *acc.entry(j).or_insert(0.0) += c;
            }
        }
        Ok(SeqVector::from_map(acc))
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k < 1 || k > self.len() {
            Err(Error::OutOfRange { k, len: self.len() })
        } else {
            Ok(())
        }
    }
}

/// `T^{alpha(k)} phi_N`, summing `lambda^{alpha(k)-alpha(j)}` times the
/// shifted `f_j` with the exponent difference formed exactly.
pub fn evaluate_suborbit(orbit: &OrbitRepresentation, k: usize) -> Result<SeqVector> {
    orbit.check_k(k)?;
    let lambda = orbit.ops.lambda;
    let alpha_k = orbit.schedule.alpha(k) as i64;
    let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
    for (alpha_j, f) in orbit.terms() {
        let delta = alpha_k - alpha_j as i64;
        let shifted = if delta >= 0 {
            f.shifted_left(delta as usize)
        } else {
            f.shifted_right(delta.unsigned_abs() as usize)
        };
        for (i, c) in shifted.iter() {
            let v = scale_real(c, lambda, delta);
            if !v.is_finite() {
                return Err(Error::Overflow(format!(
                    "coefficient {i} of T^{alpha_k} phi"
                )));
            }
            *acc.entry(i).or_insert(0.0) += v;
        }
    }
    Ok(SeqVector::from_map(acc))
}

/// Reference path: materializes `phi_N` and applies `T` one step at a time.
pub fn evaluate_suborbit_naive(orbit: &OrbitRepresentation, k: usize) -> Result<SeqVector> {
    orbit.check_k(k)?;
    let mut v = orbit.materialize()?;
    for _ in 0..orbit.schedule.alpha(k) {
        if v.is_zero() {
            break;
        }
        v = v.shifted_left(1).scaled(orbit.ops.lambda);
        if v.iter().any(|(_, c)| !c.is_finite()) {
            return Err(Error::Overflow(format!("T^n phi for n <= alpha({k})")));
        }
    }
    Ok(v)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRow {
    pub k: usize,
    pub alpha: u64,
    pub actual_error: f64,
    pub bound: f64,
    pub allowance: f64,
    /// Discretization error estimate, present for grid-function runs.
    pub quadrature: Option<f64>,
    pub pass: bool,
}

impl ErrorRow {
    pub fn new(
        k: usize,
        alpha: u64,
        actual_error: f64,
        bound: f64,
        allowance: f64,
        quadrature: Option<f64>,
    ) -> Self {
        let pass = actual_error <= bound + allowance + quadrature.unwrap_or(0.0);
        ErrorRow {
            k,
            alpha,
            actual_error,
            bound,
            allowance,
            quadrature,
            pass,
        }
    }

    pub fn ratio(&self) -> f64 {
        self.actual_error / self.bound
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub rows: Vec<ErrorRow>,
    pub max_ratio: f64,
}

impl ErrorReport {
    pub fn from_rows(rows: Vec<ErrorRow>) -> Self {
        let max_ratio = rows.iter().map(ErrorRow::ratio).fold(0.0, f64::max);
        ErrorReport { rows, max_ratio }
    }

    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn errors(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.actual_error).collect()
    }

    /// CSV with a header row; floats carry 17 significant digits.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let with_quad = self.rows.iter().any(|r| r.quadrature.is_some());
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["k", "alpha_k", "actual_error", "bound", "allowance"];
        if with_quad {
            header.push("quadrature");
        }
        header.push("pass");
        w.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![
                r.k.to_string(),
                r.alpha.to_string(),
                fmt_f64(r.actual_error),
                fmt_f64(r.bound),
                fmt_f64(r.allowance),
            ];
            if with_quad {
                rec.push(fmt_f64(r.quadrature.unwrap_or(0.0)));
            }
            rec.push(r.pass.to_string());
            w.write_record(&rec).map_err(csv_err)?;
        }
        w.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(e.to_string())
}

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// Runs `f` over `0..n` on `jobs` threads (all cores for 0), results in order.
pub(crate) fn par_map<T: Send>(
    n: usize,
    jobs: usize,
    f: impl Fn(usize) -> Result<T> + Sync + Send,
) -> Result<Vec<T>> {
    if jobs == 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(|| (0..n).into_par_iter().map(f).collect())
}

/// Per-k comparison of `||f_k - T^{alpha(k)} phi_N||` with `sum_{j>k} eps_j`.
/// Terms left out of `phi_N` are covered by the allowance column.
pub fn verify_bounds(
    orbit: &OrbitRepresentation,
    eps: &EpsSchedule,
    jobs: usize,
) -> Result<ErrorReport> {
    let space = &orbit.ops.space;
    let n = orbit.truncation_index;
    let ln_s = orbit.ops.norm_s().ln();
    let rows = par_map(orbit.len(), jobs, |i| {
        let k = i + 1;
        let alpha_k = orbit.schedule.alpha(k);
        let image = evaluate_suborbit(orbit, k)?;
        let actual = norm(space, &orbit.family[k - 1].sub(&image)?)?;
        let mut allowance = 0.0;
        for j in n + 1..=orbit.len() {
            let fj = orbit.family_norm(j);
            if fj == 0.0 {
                continue;
            }
            let alpha_j = orbit.schedule.alpha(j);
            if j <= k {
                let delta = (alpha_k - alpha_j) as usize;
                let shifted = orbit.family[j - 1].shifted_left(delta);
                allowance += scale_real(norm(space, &shifted)?, orbit.ops.lambda, delta as i64);
            } else {
                allowance += ((alpha_j - alpha_k) as f64 * ln_s + fj.ln()).exp();
            }
        }
        Ok(ErrorRow::new(
            k,
            alpha_k,
            actual,
            eps.tail(k),
            allowance,
            None,
        ))
    })?;
    Ok(ErrorReport::from_rows(rows))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Closeness {
    /// Left side including the certified tail beyond the report.
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// Aggregate check of the errors against the variant's target:
/// (i) `sum err^p <= eps^p / (2^p - 1)`, (ii) `sum err^p w_k <= eps^p`,
/// (iii) `||{err_k}||_{l^p_w} <= eps`. Indices past the report contribute
/// their guaranteed bound `eps.tail(k)`.
pub fn verify_eps_close(report: &ErrorReport, eps: &EpsSchedule, p: f64) -> Result<Closeness> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "p must satisfy 1 <= p < inf, got {p}"
        )));
    }
    let k_max = report.rows.len();
    let ln2 = std::f64::consts::LN_2;
    let epsilon = eps.epsilon;
    let (weights, p) = match &eps.variant {
        EpsVariant::Plain => (None, p),
        EpsVariant::Weighted { p: q, weights } | EpsVariant::SequenceSpace { p: q, weights } => {
            (Some(weights), *q)
        }
    };
    let weight = |k: usize| weights.map_or(1.0, |w| w.weight(k));
    let mut sum = 0.0;
    for r in &report.rows {
        sum += r.actual_error.powf(p) * weight(r.k);
    }
    // sum_{k>K} ((eps/M) 2^{-k})^p w_k
    let ln_scale = p * (epsilon / eps.m).ln();
    let ln_tail = match weights {
        None => ln_scale - p * ln2 * (k_max + 1) as f64 - (1.0 - (-p * ln2).exp()).ln(),
        Some(w) => ln_scale + w.ln_geometric_sum(-p * ln2, k_max + 1)?,
    };
    sum += ln_tail.exp();
    let slack = 1.0 + 1e-12;
    let (lhs, rhs) = match eps.variant {
        EpsVariant::Plain => (sum, epsilon.powf(p) / (2f64.powf(p) - 1.0)),
        EpsVariant::Weighted { .. } => (sum, epsilon.powf(p)),
        EpsVariant::SequenceSpace { .. } => (sum.powf(1.0 / p), epsilon),
    };
    Ok(Closeness {
        lhs,
        rhs,
        pass: lhs <= rhs * slack,
    })
}

/// `f_k` with coefficients `c e^{-beta |j-k|}`, dropped where the envelope
/// falls below `cutoff`.
pub fn localized_family(k_max: usize, c: f64, beta: f64, cutoff: f64) -> Result<Vec<SeqVector>> {
    if !(c > 0.0 && beta > 0.0 && cutoff > 0.0) {
        return Err(Error::InvalidParameter(
            "localized family needs positive amplitude, rate and cutoff".into(),
        ));
    }
    let reach = if cutoff >= c {
        0
    } else {
        ((c / cutoff).ln() / beta).floor() as usize
    };
    (1..=k_max)
        .map(|k| {
            let lo = k.saturating_sub(reach).max(1);
            SeqVector::from_pairs(
                (lo..=k + reach).map(|j| (j, c * (-beta * (j as f64 - k as f64).abs()).exp())),
            )
        })
        .collect()
}

/// Upper p-Riesz bound `B` of the basis the coefficients refer to.
pub fn riesz_upper_bound(ops: &ShiftOperators) -> Result<f64> {
    match ops.space.basis {
        BasisMode::Scaled => Ok(1.0),
        BasisMode::Canonical => ops
            .space
            .weights
            .sup()
            .map(|s| s.powf(1.0 / ops.space.p))
            .ok_or_else(|| {
                Error::UnsupportedWeight(
                    "canonical basis of an unbounded weight has no upper Riesz bound".into(),
                )
            }),
    }
}

/// Schedule rule for a family with `|<f_k, e_j^*>| <= c e^{-beta |j-k|}`,
/// coefficient space `l^p`.
pub fn localized_rule(
    ops: &ShiftOperators,
    family: &[SeqVector],
    c: f64,
    beta: f64,
    eps: &EpsSchedule,
    inner_sum: InnerSumStart,
) -> Result<LocalizedRule> {
    let p = ops.space.p;
    let q = (-beta * p).exp();
    let xd = (q / (1.0 - q)).powf(1.0 / p);
    let norms = family
        .iter()
        .map(|f| norm(&ops.space, f))
        .collect::<Result<Vec<_>>>()?;
    LocalizedRule::new(
        c,
        beta,
        ops.lambda,
        ops.norm_s(),
        riesz_upper_bound(ops)?,
        norms,
        xd,
        eps.clone(),
        inner_sum,
    )
}

/// Supports `N(k)` and norms for the finite schedule.
pub fn finite_inputs(ops: &ShiftOperators, family: &[SeqVector]) -> Result<(Vec<usize>, Vec<f64>)> {
    let mut supports = Vec::with_capacity(family.len());
    let mut norms = Vec::with_capacity(family.len());
    for (i, f) in family.iter().enumerate() {
        supports.push(f.support_bound().ok_or_else(|| {
            Error::Precondition(format!("family member {} is not finitely supported", i + 1))
        })?);
        norms.push(norm(&ops.space, f)?);
    }
    Ok((supports, norms))
}

/// Replays a rule on the schedule it produced; any violation is returned as
/// an error naming the first failed inequality.
pub fn recheck(rule: &dyn ScheduleRule, schedule: &PowerSchedule) -> Result<()> {
    let alphas: Vec<i64> = schedule.alphas().iter().map(|&a| a as i64).collect();
    match crate::schedule::replay(rule, &alphas)?.first() {
        None => Ok(()),
        Some(v) => Err(Error::Precondition(format!(
            "alpha({}) = {} violates {} (needs {})",
            v.k, v.alpha, v.constraint, v.required
        ))),
    }
}
