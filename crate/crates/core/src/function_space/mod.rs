//! Discretized weighted `L^p` on the half-line, translation operators and
//! the half Gabor system.

pub mod certificate;
pub mod gabor;
pub mod grid;
pub mod pipeline;
pub mod weight;

pub use certificate::{fit_tail_certificate, DecayCertificate, TailFit};
pub use gabor::{gabor_half_system, snake_order, CertifiedFunction, GaborMember};
pub use grid::{apply_s_func, apply_t_func, GridFunction, GridGenerator, TailNorm};
pub use pipeline::{run_function_pipeline, FunctionRun};
pub use weight::ModerateWeight;
