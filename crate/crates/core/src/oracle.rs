//! Non-recursive references for the estimators.
//!
//! [`closed_form_weighted_ls`] solves the discounted least-squares problem
//! directly from the full history, including the prior term the recursions
//! carry implicitly. [`estimate_error_bound`] evaluates the high-probability
//! estimate-error bound for the constant-forgetting estimator, and
//! [`wtilde_recurrence_check`] verifies the linear recurrence satisfied by
//! `R(t) w̃(t)` on a trace with known drift and noise.

use alloc::vec::Vec;

use crate::estimators::{ModelState, Recursion, Sample};
use crate::linalg::{norm, solve_spd, sub, SymMatrix};
use crate::math::{exp, ln, powf, sqrt};
use crate::streams::LabeledTrace;
use crate::{Error, Result};

/// Samples together with the discount `lambda(i)` applied at each step.
#[derive(Debug, Clone, PartialEq)]
pub struct History {
    samples: Vec<Sample>,
    lambdas: Vec<f64>,
}

impl History {
    pub fn new(samples: Vec<Sample>, lambdas: Vec<f64>) -> Result<Self> {
        if samples.len() != lambdas.len() {
            return Err(Error::LengthMismatch {
                left: samples.len(),
                right: lambdas.len(),
            });
        }
        if lambdas.iter().any(|l| !(*l > 0.0 && *l <= 1.0)) {
            return Err(Error::param("lambda", "must lie in (0, 1]"));
        }
        Ok(History { samples, lambdas })
    }

    pub fn constant(samples: Vec<Sample>, lambda: f64) -> Result<Self> {
        let n = samples.len();
        Self::new(samples, alloc::vec![lambda; n])
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Minimizer of
/// `Σ Λ(i,t) (y(i) - x(i)ᵀw)² + Λ(0,t) (w - w0)ᵀ R0 (w - w0)`
/// with `Λ(i,t) = Π_{j=i+1..t} lambda(j)`.
///
/// A recursion started from `P(0) = R0⁻¹`, `ŵ(0) = w0` reproduces this value
/// at every step. With `R0 -> 0` it is the plain discounted solution.
pub fn closed_form_weighted_ls(h: &History, r0: &SymMatrix, w0: &[f64]) -> Result<Vec<f64>> {
    let d = r0.dim();
    if w0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: w0.len(),
        });
    }
    let mut gram = SymMatrix::zeros(d);
    let mut rhs = alloc::vec![0.0; d];
    let mut discount = 1.0;
    for (s, lambda) in h.samples.iter().zip(&h.lambdas).rev() {
        if s.x.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: s.x.len(),
            });
        }
        gram.add_outer(&s.x, discount);
        for (r, xi) in rhs.iter_mut().zip(&s.x) {
            *r += discount * xi * s.y;
        }
        discount *= lambda;
    }
    gram.add_scaled(r0, discount);
    let prior = r0.mul_vec(w0);
    for (r, p) in rhs.iter_mut().zip(&prior) {
        *r += discount * p;
    }
    solve_spd(&gram, &rhs)
}

/// Prior matrix under which the constant-forgetting estimator started at
/// `P(0) = p0_scale * I` matches [`closed_form_weighted_ls`] with
/// `lambda = 1 - mu`: `R0 = I / (p0_scale * mu)`.
pub fn dfop_equivalent_prior(d: usize, mu: f64, p0_scale: f64) -> SymMatrix {
    SymMatrix::scaled_identity(d, 1.0 / (p0_scale * mu))
}

/// Every symbol of the estimate-error bound.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundParams {
    /// `sup_k ‖P(k)‖`
    pub k: f64,
    /// `sup_k ‖x(k)‖`
    pub x_star: f64,
    /// `sup_k ‖x(k)‖ · sup_k sigma_k` (noise bounding constant)
    pub sigma_star: f64,
    /// `sup_k gamma_k` (drift bounding constant)
    pub gamma_star: f64,
    /// `‖R(0)‖`
    pub r0_norm: f64,
    /// `‖w(0) - ŵ(0)‖`
    pub w_tilde0_norm: f64,
    pub mu: f64,
    pub t: u64,
    pub delta: f64,
}

/// The bound split into its three terms (before multiplying by `k`).
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundTerms {
    pub k: f64,
    /// `(1-mu)^t ‖R(0)‖ ‖w̃(0)‖`, decays to zero.
    pub initialization: f64,
    /// `2 sqrt(2) (1 + sqrt(3 ln(2t/delta))) sigma* sqrt(mu)`
    pub noise: f64,
    /// `sqrt(2) (1 + sqrt(3 ln(2t/delta))) (‖R(0)‖ + x*²) gamma* / sqrt(mu)`
    pub drift: f64,
    /// `k * (initialization + noise + drift)`
    pub total: f64,
}

pub fn estimate_error_bound(p: &BoundParams) -> Result<BoundTerms> {
    let nonneg = [
        ("k", p.k),
        ("x_star", p.x_star),
        ("sigma_star", p.sigma_star),
        ("gamma_star", p.gamma_star),
        ("r0_norm", p.r0_norm),
        ("w_tilde0_norm", p.w_tilde0_norm),
    ];
    for (name, v) in nonneg {
        if !(v >= 0.0) || !v.is_finite() {
            return Err(Error::param(name, "must be finite and >= 0"));
        }
    }
    if !(p.mu > 0.0 && p.mu < 1.0) {
        return Err(Error::param("mu", "must lie in (0, 1)"));
    }
    if !(p.delta > 0.0 && p.delta < 1.0) {
        return Err(Error::param("delta", "must lie in (0, 1)"));
    }
    if p.t == 0 {
        return Err(Error::param("t", "must be >= 1"));
    }
    let t = p.t as f64;
    let confidence = sqrt(2.0) * (1.0 + sqrt(3.0 * ln(2.0 * t / p.delta)));
    let initialization = powf(1.0 - p.mu, t) * p.r0_norm * p.w_tilde0_norm;
    let noise = confidence * 2.0 * p.sigma_star * sqrt(p.mu);
    let drift = confidence * p.gamma_star * (p.r0_norm + p.x_star * p.x_star) / sqrt(p.mu);
    Ok(BoundTerms {
        k: p.k,
        initialization,
        noise,
        drift,
        total: p.k * (initialization + noise + drift),
    })
}

/// Smallest `c` with `E exp(‖v‖²/c²) <= e` for `v ~ N(0, std² I_dim)`.
///
/// `‖v‖²/std²` is chi-squared with `dim` degrees of freedom, whose moment
/// generating function gives `c² = 2 std² / (1 - e^{-2/dim})`.
pub fn gaussian_bounding_constant(std: f64, dim: usize) -> f64 {
    std * sqrt(2.0 / (1.0 - exp(-2.0 / dim as f64)))
}

/// Incremental check of
/// `R(t) w̃(t) = (1-mu) R(t-1) w̃(t-1) - mu x(t) eps(t) + R(t) s(t)`
/// with `w̃ = w - ŵ` and `R = P⁻¹`.
///
/// Defining the error as `ŵ - w` instead flips the signs of the last two
/// terms; the norm of `w̃` is unaffected.
#[derive(Debug, Clone)]
pub struct RecurrenceTracker {
    mu: f64,
    prev_r: SymMatrix,
    max_residual: f64,
}

impl RecurrenceTracker {
    pub fn new(p0: &SymMatrix, mu: f64) -> Result<Self> {
        Ok(RecurrenceTracker {
            mu,
            prev_r: p0.inverse_spd()?,
            max_residual: 0.0,
        })
    }

    /// Feeds one step: `w_prev` is `w(t-1)`, `w_next` is `w(t)`, `w_hat_prev`
    /// and `w_hat_next` the estimates around the update, `p_next` is `P(t)`.
    #[allow(clippy::too_many_arguments)]
    pub fn observe(
        &mut self,
        x: &[f64],
        eps: f64,
        s: &[f64],
        w_prev: &[f64],
        w_next: &[f64],
        w_hat_prev: &[f64],
        w_hat_next: &[f64],
        p_next: &SymMatrix,
    ) -> Result<f64> {
        let r = p_next.inverse_spd()?;
        let err_prev = sub(w_prev, w_hat_prev);
        let err_next = sub(w_next, w_hat_next);
        let lhs = r.mul_vec(&err_next);
        let carried = self.prev_r.mul_vec(&err_prev);
        let drift = r.mul_vec(s);
        let residual: Vec<f64> = (0..lhs.len())
            .map(|i| {
                lhs[i] - ((1.0 - self.mu) * carried[i] - self.mu * x[i] * eps + drift[i])
            })
            .collect();
        let res = norm(&residual);
        self.max_residual = self.max_residual.max(res);
        self.prev_r = r;
        Ok(res)
    }

    pub fn max_residual(&self) -> f64 {
        self.max_residual
    }
}

/// Runs the constant-forgetting estimator from `P(0) = p0_scale I`, `ŵ(0) = 0`
/// over `trace` and returns the largest residual of the `R(t) w̃(t)`
/// recurrence.
pub fn wtilde_recurrence_check(trace: &LabeledTrace, mu: f64, p0_scale: f64) -> Result<f64> {
    let truth = trace
        .truth
        .as_ref()
        .ok_or(Error::MissingTruth("trace lacks w/s/eps columns"))?;
    if truth.len() != trace.samples.len() {
        return Err(Error::LengthMismatch {
            left: truth.len(),
            right: trace.samples.len(),
        });
    }
    let mut state = ModelState::new(trace.dim().max(1), mu, p0_scale)?;
    let mut tracker = RecurrenceTracker::new(state.p(), mu)?;
    for (sample, g) in trace.samples.iter().zip(truth) {
        let w_hat_prev = state.w_hat().to_vec();
        state.dfop_step(sample, Recursion::Consistent)?;
        tracker.observe(
            &sample.x,
            g.eps,
            &g.s,
            &g.w,
            &g.w_after(),
            &w_hat_prev,
            state.w_hat(),
            state.p(),
        )?;
    }
    Ok(tracker.max_residual())
}
