use std::io::{Read, Write};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::weight::ModerateWeight;
use crate::error::{Error, Result};
use crate::scale::{scale_complex, Scaled};

/// Function on `[0, L)` stored as one complex value per cell
/// `[i h, (i + 1) h)`, `h = 1/q`. Built-in generators sample at cell
/// midpoints, so the rectangle rule on cells is the midpoint rule.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    q: usize,
    samples: Vec<Complex64>,
    pub p: f64,
    pub weight: ModerateWeight,
    /// Norm of everything pushed past `L` by translations so far.
    pub lost_mass: f64,
}

/// Norm of a restriction to `[from, L)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TailNorm {
    pub value: f64,
    /// The cutoff was not a grid point and was moved down to one.
    pub snapped: bool,
}

/// Built-in grid function shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridGenerator {
    /// `amplitude e^{-rate x}`
    Exponential {
        #[serde(default = "one")]
        amplitude: f64,
        rate: f64,
    },
    /// indicator of `[start, end)`
    Characteristic { start: f64, end: f64 },
    /// `e^{-(x - center)^2 / (2 sigma^2)}` restricted to `[0, L)`
    Gaussian { center: f64, sigma: f64 },
}

fn one() -> f64 {
    1.0
}

impl GridGenerator {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            GridGenerator::Exponential { amplitude, rate } => amplitude * (-rate * x).exp(),
            GridGenerator::Characteristic { start, end } => {
                if x >= start && x < end {
                    1.0
                } else {
                    0.0
                }
            }
            GridGenerator::Gaussian { center, sigma } => {
                (-(x - center).powi(2) / (2.0 * sigma * sigma)).exp()
            }
        }
    }
}

fn check_grid(q: usize, p: f64) -> Result<()> {
    if q == 0 {
        return Err(Error::GridMismatch(
            "steps per unit q must be at least 1".into(),
        ));
    }
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "p must satisfy 1 <= p < inf, got {p}"
        )));
    }
    Ok(())
}

/// Number of cells covering `[0, length)`, requiring `length q` integral.
pub fn cells_for(length: f64, q: usize) -> Result<usize> {
    let c = length * q as f64;
    if !(c >= 0.0 && (c - c.round()).abs() < 1e-9) {
        return Err(Error::GridMismatch(format!(
            "length {length} is not a multiple of the step 1/{q}"
        )));
    }
    Ok(c.round() as usize)
}

impl GridFunction {
    pub fn from_samples(
        q: usize,
        samples: Vec<Complex64>,
        p: f64,
        weight: ModerateWeight,
    ) -> Result<Self> {
        check_grid(q, p)?;
        weight.validate()?;
        if samples
            .iter()
            .any(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::InvalidInput("grid samples must be finite".into()));
        }
        Ok(GridFunction {
            q,
            samples,
            p,
            weight,
            lost_mass: 0.0,
        })
    }

    pub fn zeros(q: usize, length: f64, p: f64, weight: ModerateWeight) -> Result<Self> {
        let n = cells_for(length, q)?;
        Self::from_samples(q, vec![Complex64::new(0.0, 0.0); n], p, weight)
    }

    /// Samples `f` at the cell midpoints of `[0, length)`.
    pub fn from_fn(
        q: usize,
        length: f64,
        p: f64,
        weight: ModerateWeight,
        f: impl Fn(f64) -> Complex64,
    ) -> Result<Self> {
        check_grid(q, p)?;
        let n = cells_for(length, q)?;
        let h = 1.0 / q as f64;
        let samples = (0..n).map(|i| f((i as f64 + 0.5) * h)).collect();
        Self::from_samples(q, samples, p, weight)
    }

    pub fn generate(
        gen: &GridGenerator,
        q: usize,
        length: f64,
        p: f64,
        weight: ModerateWeight,
    ) -> Result<Self> {
        Self::from_fn(q, length, p, weight, |x| Complex64::new(gen.eval(x), 0.0))
    }

    /// Reads `x,re,im` rows, `x` the left end of each cell, evenly spaced
    /// from 0 with step `1/q`.
    pub fn from_csv<R: Read>(reader: R, p: f64, weight: ModerateWeight) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(reader);
        let mut xs = Vec::new();
        let mut samples = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::InvalidInput(e.to_string()))?;
            let field = |i: usize| -> Result<f64> {
                rec.get(i)
                    .ok_or_else(|| Error::InvalidInput(format!("row needs x,re,im: {rec:?}")))?
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidInput(format!("{e} in {rec:?}")))
            };
            xs.push(field(0)?);
            samples.push(Complex64::new(field(1)?, field(2)?));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidInput(
                "grid CSV needs at least two rows".into(),
            ));
        }
        let step = xs[1] - xs[0];
        let qf = 1.0 / step;
        let q = qf.round();
        if !(q >= 1.0 && (qf - q).abs() < 1e-6) {
            return Err(Error::GridMismatch(format!(
                "step {step} is not 1/q for an integer q"
            )));
        }
        for (i, x) in xs.iter().enumerate() {
            if (x - i as f64 / q).abs() > 1e-9 {
                return Err(Error::GridMismatch(format!(
                    "row {i}: x = {x} is off the grid"
                )));
            }
        }
        Self::from_samples(q as usize, samples, p, weight)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let err = crate::construct::csv_err;
        w.write_record(["x", "re", "im"]).map_err(err)?;
        for (i, z) in self.samples.iter().enumerate() {
            w.write_record([
                crate::construct::fmt_f64(i as f64 * self.h()),
                crate::construct::fmt_f64(z.re),
                crate::construct::fmt_f64(z.im),
            ])
            .map_err(err)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn h(&self) -> f64 {
        1.0 / self.q as f64
    }

    pub fn cells(&self) -> usize {
        self.samples.len()
    }

    pub fn length(&self) -> f64 {
        self.samples.len() as f64 / self.q as f64
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn same_grid(&self, other: &GridFunction) -> bool {
        self.q == other.q && self.p == other.p && self.weight == other.weight
    }

    fn midpoint(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.h()
    }

    fn cell_mass(&self, i: usize) -> f64 {
        let a = self.samples[i].norm();
        if a == 0.0 {
            return 0.0;
        }
        let ap = if self.p == 1.0 { a } else { a.powf(self.p) };
        ap * self.weight.w(self.midpoint(i)) * self.h()
    }

    fn root(&self, s: f64) -> f64 {
        if self.p == 1.0 {
            s
        } else if self.p == 2.0 {
            s.sqrt()
        } else {
            s.powf(1.0 / self.p)
        }
    }

    pub fn lp_norm(&self) -> f64 {
        self.tail_from_cell(0)
    }

    /// `||f chi_[from, L)||`; negative or `-inf` cutoffs mean 0.
    pub fn tail_norm(&self, from: f64) -> TailNorm {
        if from.is_nan() {
            return TailNorm {
                value: self.lp_norm(),
                snapped: true,
            };
        }
        if from <= 0.0 {
            return TailNorm {
                value: self.lp_norm(),
                snapped: false,
            };
        }
        let exact = from * self.q as f64;
        let cell = exact.floor();
        let snapped = (exact - cell).abs() > 1e-9 && (exact - exact.round()).abs() > 1e-9;
        let cell = if snapped { cell } else { exact.round() } as usize;
        TailNorm {
            value: self.tail_from_cell(cell.min(self.cells())),
            snapped,
        }
    }

    pub(crate) fn tail_from_cell(&self, cell: usize) -> f64 {
        let s: f64 = (cell..self.cells()).rev().map(|i| self.cell_mass(i)).sum();
        self.root(s)
    }

    /// Tail norms at every grid cutoff `i h`, `i = 0..=cells`.
    pub fn tail_profile(&self) -> Vec<f64> {
        let n = self.cells();
        let mut acc = 0.0;
        let mut out = vec![0.0; n + 1];
        for i in (0..n).rev() {
            acc += self.cell_mass(i);
            out[i] = self.root(acc);
        }
        out
    }

    /// Moves values by `cells` grid cells; positive is to the right. Values
    /// leaving on the right count as lost mass, values crossing 0 are cut.
    pub fn translate_cells(&self, cells: i64) -> GridFunction {
        let n = self.cells();
        let zero = Complex64::new(0.0, 0.0);
        let mut out = vec![zero; n];
        let mut dropped = vec![zero; n];
        for (i, &z) in self.samples.iter().enumerate() {
            let t = i as i64 + cells;
            if t < 0 {
                continue;
            }
            let t = t as usize;
            if t < n {
                out[t] = z;
            } else {
                dropped[i] = z;
            }
        }
        let lost = if cells > 0 {
            // measured where it would have landed
            let mass: f64 = dropped
                .iter()
                .enumerate()
                .filter(|(_, z)| z.norm() > 0.0)
                .map(|(i, z)| {
                    let a = z.norm();
                    a.powf(self.p)
                        * self.weight.w(self.midpoint(i) + cells as f64 * self.h())
                        * self.h()
                })
                .sum();
            self.root(mass)
        } else {
            0.0
        };
        GridFunction {
            q: self.q,
            samples: out,
            p: self.p,
            weight: self.weight,
            lost_mass: self.lost_mass + lost,
        }
    }

    /// `f(x - n)` restricted to `[0, L)`.
    pub fn translate(&self, n: i64) -> GridFunction {
        self.translate_cells(n * self.q as i64)
    }

    /// `e^{2 pi i freq x} f(x)`, evaluated at cell midpoints.
    pub fn modulate(&self, freq: f64) -> GridFunction {
        let mut out = self.clone();
        for (i, z) in out.samples.iter_mut().enumerate() {
            let phase = 2.0 * std::f64::consts::PI * freq * self.midpoint(i);
            *z *= Complex64::from_polar(1.0, phase);
        }
        out
    }

    /// Same function on a longer domain, zero past the old end.
    pub fn padded(&self, length: f64) -> Result<GridFunction> {
        let n = cells_for(length, self.q)?;
        if n < self.cells() {
            return Err(Error::GridMismatch(format!(
                "cannot pad to {length}, shorter than {}",
                self.length()
            )));
        }
        let mut out = self.clone();
        out.samples.resize(n, Complex64::new(0.0, 0.0));
        Ok(out)
    }

    pub fn scaled(&self, c: f64) -> GridFunction {
        let mut out = self.clone();
        out.samples.iter_mut().for_each(|z| *z *= c);
        out.lost_mass *= c.abs();
        out
    }

    pub fn sub(&self, other: &GridFunction) -> Result<GridFunction> {
        if !self.same_grid(other) || self.cells() != other.cells() {
            return Err(Error::GridMismatch(
                "subtracting functions on different grids".into(),
            ));
        }
        let mut out = self.clone();
        for (a, b) in out.samples.iter_mut().zip(&other.samples) {
            *a -= b;
        }
        out.lost_mass += other.lost_mass;
        Ok(out)
    }

    /// Adds `lambda^exponent g`; `g` must sit on the same grid.
    pub(crate) fn add_scaled(&mut self, g: &Scaled<GridFunction>) -> Result<()> {
        if !self.same_grid(&g.inner) || self.cells() != g.inner.cells() {
            return Err(Error::GridMismatch(
                "adding functions on different grids".into(),
            ));
        }
        for (a, b) in self.samples.iter_mut().zip(&g.inner.samples) {
            if *b == Complex64::new(0.0, 0.0) {
                continue;
            }
            let v = scale_complex(*b, g.lambda, g.exponent);
            if !(v.re.is_finite() && v.im.is_finite()) {
                return Err(Error::Overflow("scaled grid sample".into()));
            }
            *a += v;
        }
        self.lost_mass += crate::scale::scale_real(g.inner.lost_mass, g.lambda, g.exponent);
        Ok(())
    }

    /// The same function on the grid with step `2h`, averaging cell pairs.
    pub fn coarsen(&self) -> Result<GridFunction> {
        if !self.q.is_multiple_of(2) || !self.cells().is_multiple_of(2) {
            return Err(Error::GridMismatch(format!(
                "coarsening needs an even number of cells per unit, q = {}",
                self.q
            )));
        }
        let samples = self
            .samples
            .chunks(2)
            .map(|c| (c[0] + c[1]) * 0.5)
            .collect();
        Ok(GridFunction {
            q: self.q / 2,
            samples,
            p: self.p,
            weight: self.weight,
            lost_mass: self.lost_mass,
        })
    }
}

/// `T^n f = lambda^n (f(. + n)) chi_[0, inf)`.
pub fn apply_t_func(f: &GridFunction, lambda: f64, n: u64) -> Scaled<GridFunction> {
    Scaled::new(lambda, n as i64, f.translate(-(n as i64)))
}

/// `S^n f = lambda^{-n} f(. - n)`.
pub fn apply_s_func(f: &GridFunction, lambda: f64, n: u64) -> Scaled<GridFunction> {
    Scaled::new(lambda, -(n as i64), f.translate(n as i64))
}
