//! Approximate suborbit representations with certified error bounds.
//!
//! ```
//! use suborbit::construct::{build_phi, finite_inputs, verify_bounds};
//! use suborbit::schedule::{schedule_finite, EpsSchedule};
//! use suborbit::shifts::ShiftOperators;
//! use suborbit::spaces::{SeqVector, WeightedLpSpace};
//!
//! let ops = ShiftOperators::new(WeightedLpSpace::lp(2.0)?, 4.0)?;
//! let family: Vec<SeqVector> = (1..=12).map(SeqVector::unit).collect::<Result<_, _>>()?;
//! let eps = EpsSchedule::plain(1.0)?;
//! let (supports, norms) = finite_inputs(&ops, &family)?;
//! let schedule = schedule_finite(&supports, &norms, ops.norm_s(), &eps)?;
//! let orbit = build_phi(&ops, &schedule, &family, family.len())?;
//! let report = verify_bounds(&orbit, &eps, 1)?;
//! assert!(report.all_pass());
//! # Ok::<(), suborbit::Error>(())
//! ```

// Negated comparisons are used to reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod construct;
pub mod decomposition;
pub mod error;
pub mod function_space;
pub mod scale;
pub mod schedule;
pub mod shifts;
pub mod spaces;

pub use error::{Error, Result};
