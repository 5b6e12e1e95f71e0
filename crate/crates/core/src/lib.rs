//! SCI-assisted machine-learning QoT estimation for flex-grid optical links.
//!
//! The pipeline precomputes per-channel self-channel interference (SCI) with
//! an integral-form GN oracle, trains gradient-boosted trees that map SCI
//! features to the total NLI coefficient, and uses the resulting estimator
//! for spectrum assignment and multi-period planning.
//!
//! Numerical kernels are generic over [`Real`]; the aliases below fix the
//! scalar to `f64` for the rest of the pipeline.

pub mod dataset;
pub mod error;
pub mod gbm;
pub mod nli;
pub mod num;
pub mod phys;
pub mod planner;
pub mod qot;
pub mod quad;
pub mod specopt;

pub use error::{Error, Result};
pub use num::Real;

pub type FiberParams = phys::FiberParams<f64>;
pub type Span = phys::Span<f64>;
pub type SpanKernel = nli::SpanKernel<f64>;
pub type QuadConfig = quad::QuadConfig<f64>;
