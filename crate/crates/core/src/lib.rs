//! Exponential families on finite (or quadrature-discretised) sample
//! spaces, their IID extensions and natural exponential families, and
//! numerical checks of the invariance properties that single out the Fisher
//! information metric.
//!
//! The modules build on one another:
//!
//! - [`measures`]: weighted point sets, push-forwards, moments,
//!   Radon–Nikodym derivatives.
//! - [`expfam`]: families, log-partition, Fisher matrix by three routes.
//! - [`derived`]: distributions `Q_n` of the mean statistic, their tangent
//!   vectors, and the standardising affine map.
//! - [`geometry`]: metric fields and norm functionals on `(P, f·P)` pairs.
//! - [`invariance`]: IID scaling, sufficiency, affine invariance, the
//!   across-`n` constancy pipeline, CLT diagnostics, uniqueness witnesses.
//! - [`tensors`]: higher-order symmetric tensors.

pub mod derived;
pub mod error;
pub mod expfam;
pub mod geometry;
pub mod invariance;
pub mod linalg;
pub mod measures;
pub mod quadrature;
pub mod tensors;

pub use error::{Error, Result};
pub use expfam::{builtin_families, make_family, ExpFamily, Route, TangentCoord, ThetaDomain};
pub use measures::{AtomicMeasure, FiniteMeasure, GaussianReference, SignedFiniteMeasure, TangentPair};
