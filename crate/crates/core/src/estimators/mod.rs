//! Streaming estimators sharing one update contract.
//!
//! * [`Dfop`]: constant forgetting factor `mu`, recursion on
//!   `R(t) = (1 - mu) R(t-1) + mu x xᵀ` with `P = R⁻¹`.
//! * [`Gdfop`]: per-step discount `lambda(t)` supplied by a [`LambdaSchedule`].
//! * [`Rls`]: the generalized recursion with `lambda = 1`.
//! * [`WindowLs`]: ridge least squares over the last `W` samples. Not one-pass;
//!   kept as a baseline.

mod dfop;
mod gdfop;
mod state;
mod window;

use alloc::vec::Vec;

pub use dfop::{dfop_init, dfop_update, dfop_update_with, Dfop, Recursion};
pub use gdfop::{
    gdfop_init, gdfop_update, rls_update, ConstantLambda, Gdfop, LambdaSchedule, PiecewiseLambda,
    Rls,
};
pub use state::ModelState;
pub use window::{window_ls_update, WindowLs, WindowState};

use crate::linalg::dot;
use crate::{Error, Result};

/// One stream item.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Sample {
    pub x: Vec<f64>,
    pub y: f64,
}

impl Sample {
    pub fn new(x: Vec<f64>, y: f64) -> Self {
        Sample { x, y }
    }

    /// A classification sample; the target must be exactly `-1` or `+1`.
    pub fn labeled(x: Vec<f64>, y: f64) -> Result<Self> {
        if y != 1.0 && y != -1.0 {
            return Err(Error::InvalidLabel(y));
        }
        Ok(Sample { x, y })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Task {
    Regression,
    Classification,
}

/// `+1` when `raw >= 0`, `-1` otherwise (ties go to `+1`).
#[inline]
pub fn sign_label(raw: f64) -> f64 {
    if raw >= 0.0 {
        1.0
    } else {
        -1.0
    }
}

/// Prediction produced by the weights after an update, on the same sample.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutput {
    pub prediction_raw: f64,
    pub prediction_label: f64,
    pub w_hat_after: Vec<f64>,
}

impl StepOutput {
    pub(crate) fn after(w_hat: &[f64], x: &[f64]) -> Self {
        let raw = dot(w_hat, x);
        StepOutput {
            prediction_raw: raw,
            prediction_label: sign_label(raw),
            w_hat_after: w_hat.to_vec(),
        }
    }
}

/// Linear prediction `ŵᵀx`, or its sign for classification.
pub fn predict(w_hat: &[f64], x: &[f64], task: Task) -> Result<f64> {
    if w_hat.len() != x.len() {
        return Err(Error::DimensionMismatch {
            expected: w_hat.len(),
            found: x.len(),
        });
    }
    let raw = dot(w_hat, x);
    Ok(match task {
        Task::Regression => raw,
        Task::Classification => sign_label(raw),
    })
}

/// Common contract for every streaming estimator in the crate.
pub trait OnlineEstimator {
    fn dim(&self) -> usize;

    fn weights(&self) -> &[f64];

    /// Number of samples consumed so far.
    fn steps(&self) -> u64;

    /// Consumes one sample, returning the post-update prediction on it.
    fn update(&mut self, sample: &Sample) -> Result<StepOutput>;

    fn predict_raw(&self, x: &[f64]) -> f64 {
        dot(self.weights(), x)
    }
}

pub(crate) fn check_dim(expected: usize, x: &[f64]) -> Result<()> {
    if x.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            found: x.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn predict_zero_weights() {
        assert_eq!(predict(&[0.0, 0.0], &[3.0, -2.0], Task::Regression).unwrap(), 0.0);
        assert_eq!(predict(&[0.0, 0.0], &[3.0, -2.0], Task::Classification).unwrap(), 1.0);
    }

    #[test]
    fn predict_arithmetic_and_scale_invariance() {
        let w = [1.0, -1.0];
        let x = [2.0, 1.0];
        assert_eq!(predict(&w, &x, Task::Regression).unwrap(), 1.0);
        assert_eq!(predict(&w, &x, Task::Classification).unwrap(), 1.0);
        for c in [1e-6, 0.5, 3.0, 1e9] {
            let scaled: Vec<f64> = w.iter().map(|v| v * c).collect();
            assert_eq!(predict(&scaled, &x, Task::Classification).unwrap(), 1.0);
            assert_eq!(predict(&scaled, &[1.0, 2.0], Task::Classification).unwrap(), -1.0);
        }
    }

    #[test]
    fn predict_dimension_mismatch() {
        assert!(predict(&[1.0], &[1.0, 2.0], Task::Regression).is_err());
    }

    #[test]
    fn labeled_sample_validates_target() {
        assert!(Sample::labeled(vec![1.0], 1.0).is_ok());
        assert!(Sample::labeled(vec![1.0], -1.0).is_ok());
        assert_eq!(Sample::labeled(vec![1.0], 0.5), Err(Error::InvalidLabel(0.5)));
    }
}
