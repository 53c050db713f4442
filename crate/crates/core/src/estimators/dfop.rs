use super::{check_dim, ModelState, OnlineEstimator, Sample, StepOutput};
use crate::linalg::{axpy, dot};
use crate::{Error, Result};

/// Which covariance recursion the constant-forgetting estimator runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Recursion {
    /// `P(t) = 1/(1-mu) [P - mu P x xᵀ P / ((1-mu) + mu xᵀ P x)]`, the exact
    /// inverse of `R(t) = (1-mu) R(t-1) + mu x xᵀ`.
    #[default]
    Consistent,
    /// Same as above but with denominator `(1-mu) + xᵀ P x`. This does not
    /// track the discounted least-squares solution; it is kept for
    /// side-by-side comparison only.
    PaperLiteral,
}

pub fn dfop_init(d: usize, mu: f64, p0_scale: f64) -> Result<ModelState> {
    ModelState::new(d, mu, p0_scale)
}

pub fn dfop_update(state: &ModelState, s: &Sample) -> Result<(ModelState, StepOutput)> {
    dfop_update_with(state, s, Recursion::Consistent)
}

pub fn dfop_update_with(
    state: &ModelState,
    s: &Sample,
    recursion: Recursion,
) -> Result<(ModelState, StepOutput)> {
    let mut next = state.clone();
    let out = next.dfop_step(s, recursion)?;
    Ok((next, out))
}

impl ModelState {
    /// One constant-forgetting step, in place. On error the state is left
    /// untouched.
    pub fn dfop_step(&mut self, s: &Sample, recursion: Recursion) -> Result<StepOutput> {
        check_dim(self.dim(), &s.x)?;
        let step = self.t + 1;
        let mu = self.mu;
        let keep = 1.0 - mu;
        let denom_weight = match recursion {
            Recursion::Consistent => mu,
            Recursion::PaperLiteral => 1.0,
        };
        let p = self
            .p
            .rank1_correction(&s.x, 1.0 / keep, mu, keep, denom_weight)
            .map_err(|_| Error::NumericFailure { step })?;
        let gain = p.mul_vec(&s.x);
        let residual = s.y - dot(&self.w_hat, &s.x);
        let mut w_hat = self.w_hat.clone();
        axpy(mu * residual, &gain, &mut w_hat);
        if w_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure { step });
        }
        self.p = p;
        self.w_hat = w_hat;
        self.t = step;
        Ok(StepOutput::after(&self.w_hat, &s.x))
    }
}

/// Constant forgetting factor estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct Dfop {
    state: ModelState,
    recursion: Recursion,
}

impl Dfop {
    pub fn new(d: usize, mu: f64, p0_scale: f64, recursion: Recursion) -> Result<Self> {
        Ok(Dfop {
            state: dfop_init(d, mu, p0_scale)?,
            recursion,
        })
    }

    pub fn from_state(state: ModelState, recursion: Recursion) -> Self {
        Dfop { state, recursion }
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }

    pub fn recursion(&self) -> Recursion {
        self.recursion
    }
}

impl OnlineEstimator for Dfop {
    fn dim(&self) -> usize {
        self.state.dim()
    }

    fn weights(&self) -> &[f64] {
        self.state.w_hat()
    }

    fn steps(&self) -> u64 {
        self.state.t()
    }

    fn update(&mut self, sample: &Sample) -> Result<StepOutput> {
        self.state.dfop_step(sample, self.recursion)
    }
}
