//! One-pass forgetting-factor least squares for streams whose underlying
//! concept drifts over time.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation: the estimators, the exact closed-form reference solution,
//! the estimate-error bound evaluator, seeded synthetic drift generators,
//! and the evaluation metrics. File formats, configuration and the command
//! line live in the companion `dfop` crate.
//!
//! ```
//! use dfop_core::estimators::{Dfop, OnlineEstimator, Recursion, Sample};
//!
//! let mut model = Dfop::new(2, 0.01, 1e3, Recursion::Consistent).unwrap();
//! for t in 0..200 {
//!     let x = [1.0, (t as f64 * 0.37).sin()];
//!     let y = 0.5 + 2.0 * x[1];
//!     model.update(&Sample::new(x.to_vec(), y)).unwrap();
//! }
//! assert!((model.weights()[1] - 2.0).abs() < 1e-3);
//! ```
#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod estimators;
pub mod eval;
pub mod linalg;
pub mod oracle;
pub mod seed;
pub mod streams;

mod math;

pub use error::{Error, Result};
