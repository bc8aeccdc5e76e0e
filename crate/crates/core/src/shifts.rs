//! Left/right shifts on `l^p_w` and the weighted pair `T = lambda L`,
//! `S = lambda^{-1} R`.

use rand::Rng;

use crate::error::{Error, Result, ShiftSide};
use crate::scale::{scale_real, Scaled};
use crate::spaces::{norm, BasisMode, SeqVector, WeightSequence, WeightedLpSpace};

/// Default relative margin of `lambda` over `||R||`.
pub const DEFAULT_LAMBDA_MARGIN: f64 = 0.5;

/// Exact operator norms `(||L||, ||R||)` with respect to the space's basis.
///
/// In the canonical basis these are `sup_{k>=2} (w_{k-1}/w_k)^{1/p}` and
/// `sup_{k>=2} (w_k/w_{k-1})^{1/p}`, evaluated in closed form per weight
/// kind. The scaled basis makes both shifts isometric up to the first
/// coordinate, so both norms are 1.
pub fn shift_norms(space: &WeightedLpSpace) -> Result<(f64, f64)> {
    if space.basis == BasisMode::Scaled {
        return Ok((1.0, 1.0));
    }
    let (sup_down, sup_up) = match &space.weights {
        WeightSequence::Constant { .. } => (1.0, 1.0),
        WeightSequence::Geometric { ratio } => (1.0 / ratio, *ratio),
        // (k/(k-1))^s is monotone in k with limit 1
        WeightSequence::Power { exponent } => {
            let at_two = 2f64.powf(*exponent);
            if *exponent >= 0.0 {
                (1.0, at_two)
            } else {
                (1.0 / at_two, 1.0)
            }
        }
        WeightSequence::Table { prefix, tail } => {
            let mut seq = prefix.clone();
            seq.push(*tail);
            // past the prefix the ratio is tail/tail = 1
            let mut down = 1.0f64;
            let mut up = 1.0f64;
            for pair in seq.windows(2) {
                down = down.max(pair[0] / pair[1]);
                up = up.max(pair[1] / pair[0]);
            }
            (down, up)
        }
    };
    let p = space.p;
    let norm_l = sup_down.powf(1.0 / p);
    let norm_r = sup_up.powf(1.0 / p);
    if !norm_l.is_finite() {
        return Err(Error::UnboundedOperator(ShiftSide::Left));
    }
    if !norm_r.is_finite() {
        return Err(Error::UnboundedOperator(ShiftSide::Right));
    }
    Ok((norm_l, norm_r))
}

pub fn apply_l_pow(v: &SeqVector, n: usize) -> SeqVector {
    v.shifted_left(n)
}

pub fn apply_r_pow(v: &SeqVector, n: usize) -> SeqVector {
    v.shifted_right(n)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperators {
    pub space: WeightedLpSpace,
    pub lambda: f64,
    pub norm_l: f64,
    pub norm_r: f64,
}

impl ShiftOperators {
    pub fn new(space: WeightedLpSpace, lambda: f64) -> Result<Self> {
        space.validate()?;
        let (norm_l, norm_r) = shift_norms(&space)?;
        if !(lambda.is_finite() && lambda > norm_r) {
            return Err(Error::LambdaTooSmall { lambda, norm_r });
        }
        Ok(ShiftOperators {
            space,
            lambda,
            norm_l,
            norm_r,
        })
    }

    /// `lambda = ||R|| (1 + margin)`.
    pub fn with_margin(space: WeightedLpSpace, margin: f64) -> Result<Self> {
        if !(margin > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lambda margin must be positive, got {margin}"
            )));
        }
        let (_, norm_r) = shift_norms(&space)?;
        Self::new(space, norm_r * (1.0 + margin))
    }

    pub fn with_default_lambda(space: WeightedLpSpace) -> Result<Self> {
        Self::with_margin(space, DEFAULT_LAMBDA_MARGIN)
    }

    pub fn norm_s(&self) -> f64 {
        self.norm_r / self.lambda
    }

    pub fn norm_t_bound(&self) -> f64 {
        self.lambda * self.norm_l
    }

    /// `T^n v = lambda^n L^n v`, with `lambda^n` kept as an exponent.
    pub fn apply_t_pow(&self, v: &SeqVector, n: usize) -> Scaled<SeqVector> {
        Scaled::new(self.lambda, n as i64, v.shifted_left(n))
    }

    /// `S^n v = lambda^{-n} R^n v`, with `lambda^{-n}` kept as an exponent.
    pub fn apply_s_pow(&self, v: &SeqVector, n: usize) -> Scaled<SeqVector> {
        Scaled::new(self.lambda, -(n as i64), v.shifted_right(n))
    }
}

impl Scaled<SeqVector> {
    pub fn then_t(self, n: usize) -> Self {
        Scaled::new(
            self.lambda,
            self.exponent + n as i64,
            self.inner.shifted_left(n),
        )
    }

    pub fn then_s(self, n: usize) -> Self {
        Scaled::new(
            self.lambda,
            self.exponent - n as i64,
            self.inner.shifted_right(n),
        )
    }

    /// Coefficient at `j` with the pending factor applied.
    pub fn coefficient(&self, j: usize) -> f64 {
        scale_real(self.inner.get(j), self.lambda, self.exponent)
    }

    /// Norm without forming `lambda^exponent` on its own.
    pub fn norm(&self, space: &WeightedLpSpace) -> Result<f64> {
        Ok(scale_real(
            norm(space, &self.inner)?,
            self.lambda,
            self.exponent,
        ))
    }

    /// Folds the factor into the coefficients. Coefficients that would
    /// overflow are an error; ones that underflow to zero are dropped.
    pub fn materialize(&self) -> Result<SeqVector> {
        let mut pairs = Vec::with_capacity(self.inner.nnz());
        for (j, c) in self.inner.iter() {
            let v = scale_real(c, self.lambda, self.exponent);
            if !v.is_finite() {
                return Err(Error::Overflow(format!(
                    "coefficient {c} * {}^{} at index {j}",
                    self.lambda, self.exponent
                )));
            }
            pairs.push((j, v));
        }
        let out = SeqVector::from_pairs(pairs)?;
        match self.inner.decay() {
            Some(d) => {
                let amplitude = scale_real(d.amplitude, self.lambda, self.exponent);
                if !(amplitude.is_finite() && amplitude > 0.0) {
                    return Err(Error::Overflow("decay amplitude out of range".into()));
                }
                out.with_decay(crate::spaces::DecayProfile {
                    amplitude,
                    ..d.clone()
                })
            }
            None => Ok(out),
        }
    }
}

/// Sampled p-Riesz ratios `||sum c_k e_k|| / (sum |c_k|^p)^{1/p}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RieszSample {
    /// Smallest observed ratio; the true lower bound `A` is at most this.
    pub a_upper: f64,
    /// Largest observed ratio; the true upper bound `B` is at least this.
    pub b_lower: f64,
}

/// Samples random finite coefficient sequences of length `<= max_dim` and
/// records the extreme ratios. The basis vectors `e_k` are formed in the
/// canonical representation, so in scaled mode this exercises the
/// normalization `w_k^{-1/p}` rather than assuming it.
pub fn sample_priesz_bounds<R: Rng + ?Sized>(
    space: &WeightedLpSpace,
    trials: usize,
    max_dim: usize,
    rng: &mut R,
) -> Result<RieszSample> {
    if trials < 1 || max_dim < 1 {
        return Err(Error::InvalidParameter(
            "trials and max_dim must be at least 1".into(),
        ));
    }
    let canonical = WeightedLpSpace {
        basis: BasisMode::Canonical,
        ..space.clone()
    };
    let p = space.p;
    let mut a_upper = f64::INFINITY;
    let mut b_lower = 0.0f64;
    for _ in 0..trials {
        let dim = rng.gen_range(1..=max_dim);
        let mut coeffs = Vec::with_capacity(dim);
        for k in 1..=dim {
            if rng.gen_bool(0.5) || k == dim {
                let c: f64 = rng.gen_range(-1.0..1.0);
                if c != 0.0 {
                    coeffs.push((k, c));
                }
            }
        }
        if coeffs.is_empty() {
            continue;
        }
        let lp: f64 = coeffs
            .iter()
            .map(|(_, c)| c.abs().powf(p))
            .sum::<f64>()
            .powf(1.0 / p);
        let mut pairs = Vec::with_capacity(coeffs.len());
        for &(k, c) in &coeffs {
            let e_k = match space.basis {
                BasisMode::Canonical => 1.0,
                BasisMode::Scaled => {
                    crate::spaces::scaled_basis_vector(&canonical, k as i64)?.get(k)
                }
            };
            pairs.push((k, c * e_k));
        }
        let v = SeqVector::from_pairs(pairs)?;
        let ratio = norm(&canonical, &v)? / lp;
        a_upper = a_upper.min(ratio);
        b_lower = b_lower.max(ratio);
    }
    Ok(RieszSample { a_upper, b_lower })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn space(p: f64, w: WeightSequence, basis: BasisMode) -> WeightedLpSpace {
        WeightedLpSpace::new(p, w, basis).unwrap()
    }

    #[test]
    fn norm_formulas() {
        let s = space(
            1.0,
            WeightSequence::Geometric { ratio: 2.0 },
            BasisMode::Canonical,
        );
        assert_eq!(shift_norms(&s).unwrap(), (0.5, 2.0));

        let s = space(
            3.0,
            WeightSequence::Power { exponent: 7.0 },
            BasisMode::Scaled,
        );
        assert_eq!(shift_norms(&s).unwrap(), (1.0, 1.0));

        let s = space(
            2.0,
            WeightSequence::Power { exponent: 1.0 },
            BasisMode::Canonical,
        );
        let (l, r) = shift_norms(&s).unwrap();
        assert_eq!(l, 1.0);
        assert!((r - 2f64.sqrt()).abs() < 1e-15);

        let s = space(
            1.0,
            WeightSequence::Table {
                prefix: vec![1.0, 4.0, 2.0],
                tail: 1.0,
            },
            BasisMode::Canonical,
        );
        assert_eq!(shift_norms(&s).unwrap(), (2.0, 4.0));
    }

    #[test]
    fn unbounded_shift_is_named() {
        let s = space(
            1.0,
            WeightSequence::Table {
                prefix: vec![1e-300, 1e300],
                tail: 1e300,
            },
            BasisMode::Canonical,
        );
        assert_eq!(
            shift_norms(&s),
            Err(Error::UnboundedOperator(ShiftSide::Right))
        );
        let s = space(
            1.0,
            WeightSequence::Table {
                prefix: vec![1e300, 1e-300],
                tail: 1e-300,
            },
            BasisMode::Canonical,
        );
        assert_eq!(
            shift_norms(&s),
            Err(Error::UnboundedOperator(ShiftSide::Left))
        );
    }

    #[test]
    fn brute_force_power_weight_never_exceeds_formula() {
        let s = space(
            2.0,
            WeightSequence::Power { exponent: 1.0 },
            BasisMode::Canonical,
        );
        let (nl, nr) = shift_norms(&s).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut best_r = 0.0f64;
        for _ in 0..2000 {
            let dim = rng.gen_range(1..=50);
            let v =
                SeqVector::from_pairs((1..=dim).map(|k| (k, rng.gen_range(-1.0..1.0)))).unwrap();
            let nv = norm(&s, &v).unwrap();
            let rl = norm(&s, &apply_l_pow(&v, 1)).unwrap() / nv;
            let rr = norm(&s, &apply_r_pow(&v, 1)).unwrap() / nv;
            assert!(rl <= nl * (1.0 + 1e-12));
            assert!(rr <= nr * (1.0 + 1e-12));
            best_r = best_r.max(rr);
        }
        // delta_1 attains the sup for R
        let e1 = SeqVector::unit(1).unwrap();
        let at_e1 = norm(&s, &apply_r_pow(&e1, 1)).unwrap();
        assert!((at_e1 - nr).abs() < 1e-15);
        assert!(best_r <= nr);
    }

    #[test]
    fn shift_examples() {
        let e3 = SeqVector::unit(3).unwrap();
        assert_eq!(apply_l_pow(&e3, 2), SeqVector::unit(1).unwrap());
        assert!(apply_l_pow(&e3, 3).is_zero());
        let v = SeqVector::from_pairs([(2, 1.0), (5, 1.0)]).unwrap();
        assert_eq!(
            apply_l_pow(&v, 1),
            SeqVector::from_pairs([(1, 1.0), (4, 1.0)]).unwrap()
        );

        let e1 = SeqVector::unit(1).unwrap();
        assert_eq!(apply_r_pow(&e1, 4), SeqVector::unit(5).unwrap());
        let w = SeqVector::from_pairs([(1, 1.0), (2, 1.0)]).unwrap();
        assert_eq!(apply_r_pow(&w, 0), w);
    }

    #[test]
    fn weighted_pair_examples() {
        let ops = ShiftOperators::new(WeightedLpSpace::lp(2.0).unwrap(), 4.0).unwrap();
        let e3 = SeqVector::unit(3).unwrap();
        let t = ops.apply_t_pow(&e3, 2).materialize().unwrap();
        assert_eq!(t, SeqVector::from_pairs([(1, 16.0)]).unwrap());
        assert!(ops.apply_t_pow(&e3, 3).materialize().unwrap().is_zero());
        let v = SeqVector::from_pairs([(4, 4f64.powi(-3))]).unwrap();
        assert_eq!(
            ops.apply_t_pow(&v, 3).materialize().unwrap(),
            SeqVector::unit(1).unwrap()
        );

        let e1 = SeqVector::unit(1).unwrap();
        assert_eq!(
            ops.apply_s_pow(&e1, 1).materialize().unwrap(),
            SeqVector::from_pairs([(2, 0.25)]).unwrap()
        );
        assert_eq!(ops.apply_s_pow(&e1, 0).materialize().unwrap(), e1);
        assert_eq!(ops.norm_s(), 0.25);
    }

    #[test]
    fn lambda_must_exceed_norm_r() {
        let s = space(
            1.0,
            WeightSequence::Geometric { ratio: 2.0 },
            BasisMode::Canonical,
        );
        assert!(matches!(
            ShiftOperators::new(s.clone(), 2.0),
            Err(Error::LambdaTooSmall { .. })
        ));
        let ops = ShiftOperators::with_default_lambda(s).unwrap();
        assert_eq!(ops.lambda, 3.0);
        assert!((ops.norm_s() - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn huge_exponents_cancel() {
        let ops = ShiftOperators::new(WeightedLpSpace::lp(2.0).unwrap(), 4.0).unwrap();
        let v = SeqVector::from_pairs([(1, 0.75), (2, -2.0)]).unwrap();
        let far = ops.apply_s_pow(&v, 5000);
        assert!(far.materialize().unwrap().is_zero());
        let back = far.then_t(5000);
        assert_eq!(back.exponent, 0);
        assert_eq!(back.materialize().unwrap(), v);
    }

    #[test]
    fn riesz_sampling_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = space(
            1.5,
            WeightSequence::Geometric { ratio: 3.0 },
            BasisMode::Scaled,
        );
        let r = sample_priesz_bounds(&s, 200, 30, &mut rng).unwrap();
        assert!((r.a_upper - 1.0).abs() < 1e-12 && (r.b_lower - 1.0).abs() < 1e-12);

        let s = WeightedLpSpace::lp(2.0).unwrap();
        let r = sample_priesz_bounds(&s, 50, 10, &mut rng).unwrap();
        assert!((r.a_upper - 1.0).abs() < 1e-12 && (r.b_lower - 1.0).abs() < 1e-12);

        let s = space(
            1.0,
            WeightSequence::Geometric { ratio: 2.0 },
            BasisMode::Canonical,
        );
        let r = sample_priesz_bounds(&s, 300, 8, &mut rng).unwrap();
        // ratios are weighted averages of w_k = 2^k over k <= 8
        assert!(r.a_upper <= r.b_lower);
        assert!(r.a_upper >= 2.0 - 1e-12 && r.b_lower <= 256.0 + 1e-9);
    }
}
