use alloc::boxed::Box;
use alloc::vec::Vec;

use super::{check_dim, ModelState, OnlineEstimator, Sample, StepOutput};
use crate::linalg::{axpy, dot, outer_rank1_downdate, SymMatrix};
use crate::{Error, Result};

/// Discount applied at step `t` (1-based) of the generalized recursion.
pub trait LambdaSchedule {
    fn lambda(&self, t: u64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantLambda(pub f64);

impl LambdaSchedule for ConstantLambda {
    fn lambda(&self, _t: u64) -> f64 {
        self.0
    }
}

/// Piecewise-constant schedule: `(start_step, lambda)` pairs sorted by start.
/// Steps before the first breakpoint use `initial`.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLambda {
    pub initial: f64,
    pub breakpoints: Vec<(u64, f64)>,
}

impl LambdaSchedule for PiecewiseLambda {
    fn lambda(&self, t: u64) -> f64 {
        self.breakpoints
            .iter()
            .take_while(|(start, _)| *start <= t)
            .last()
            .map_or(self.initial, |(_, l)| *l)
    }
}

impl<F: Fn(u64) -> f64> LambdaSchedule for F {
    fn lambda(&self, t: u64) -> f64 {
        self(t)
    }
}

impl LambdaSchedule for Box<dyn LambdaSchedule + Send + Sync> {
    fn lambda(&self, t: u64) -> f64 {
        (**self).lambda(t)
    }
}

/// Generalized state: `ŵ = 0`, `P = p0_scale * I`. `mu` is stored as zero.
pub fn gdfop_init(d: usize, p0_scale: f64) -> Result<ModelState> {
    ModelState::new(d, 0.0, p0_scale)
}

pub fn gdfop_update(
    state: &ModelState,
    s: &Sample,
    lambda_t: f64,
) -> Result<(ModelState, StepOutput)> {
    let mut next = state.clone();
    let out = next.gdfop_step(s, lambda_t)?;
    Ok((next, out))
}

pub fn rls_update(state: &ModelState, s: &Sample) -> Result<(ModelState, StepOutput)> {
    gdfop_update(state, s, 1.0)
}

impl ModelState {
    /// `P(t) = 1/λ [P - P x xᵀ P / (λ + xᵀ P x)]`, `ŵ(t) = ŵ + P(t) x (y - ŵᵀx)`.
    pub fn gdfop_step(&mut self, s: &Sample, lambda_t: f64) -> Result<StepOutput> {
        if !(lambda_t > 0.0 && lambda_t <= 1.0) {
            return Err(Error::param("lambda", "must lie in (0, 1]"));
        }
        check_dim(self.dim(), &s.x)?;
        let step = self.t + 1;
        let p = outer_rank1_downdate(&self.p, &s.x, lambda_t, 1.0)
            .map_err(|_| Error::NumericFailure { step })?;
        let gain = p.mul_vec(&s.x);
        let residual = s.y - dot(&self.w_hat, &s.x);
        let mut w_hat = self.w_hat.clone();
        axpy(residual, &gain, &mut w_hat);
        if w_hat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NumericFailure { step });
        }
        self.p = p;
        self.w_hat = w_hat;
        self.t = step;
        Ok(StepOutput::after(&self.w_hat, &s.x))
    }
}

/// Generalized estimator driven by a discount schedule.
pub struct Gdfop<S> {
    state: ModelState,
    schedule: S,
}

impl<S: LambdaSchedule> Gdfop<S> {
    pub fn new(d: usize, p0_scale: f64, schedule: S) -> Result<Self> {
        Ok(Gdfop {
            state: gdfop_init(d, p0_scale)?,
            schedule,
        })
    }

    pub fn with_prior(w0: Vec<f64>, p0: SymMatrix, schedule: S) -> Result<Self> {
        Ok(Gdfop {
            state: ModelState::with_prior(w0, p0, 0.0)?,
            schedule,
        })
    }

    pub fn from_state(state: ModelState, schedule: S) -> Self {
        Gdfop { state, schedule }
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }
}

impl<S: LambdaSchedule> OnlineEstimator for Gdfop<S> {
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
        let lambda = self.schedule.lambda(self.state.t() + 1);
        self.state.gdfop_step(sample, lambda)
    }
}

/// Ordinary recursive least squares (no forgetting).
#[derive(Debug, Clone, PartialEq)]
pub struct Rls {
    state: ModelState,
}

impl Rls {
    pub fn new(d: usize, p0_scale: f64) -> Result<Self> {
        Ok(Rls {
            state: gdfop_init(d, p0_scale)?,
        })
    }

    pub fn from_state(state: ModelState) -> Self {
        Rls { state }
    }

    pub fn state(&self) -> &ModelState {
        &self.state
    }

    pub fn into_state(self) -> ModelState {
        self.state
    }
}

impl OnlineEstimator for Rls {
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
        self.state.gdfop_step(sample, 1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn hand_evaluated_rls_step() {
        let s0 = gdfop_init(1, 1.0).unwrap();
        let (s1, out) = gdfop_update(&s0, &Sample::new(vec![1.0], 1.0), 1.0).unwrap();
        assert!((s1.p().get(0, 0) - 0.5).abs() < 1e-15);
        assert!((s1.w_hat()[0] - 0.5).abs() < 1e-15);
        assert!((out.prediction_raw - 0.5).abs() < 1e-15);
        let (s1b, _) = rls_update(&s0, &Sample::new(vec![1.0], 1.0)).unwrap();
        assert_eq!(s1, s1b);
    }

    #[test]
    fn zero_feature_scales_by_inverse_lambda() {
        let s0 = gdfop_init(2, 2.0).unwrap();
        let (s1, _) = gdfop_update(&s0, &Sample::new(vec![0.0, 0.0], 7.0), 0.8).unwrap();
        assert_eq!(s1.w_hat(), &[0.0, 0.0]);
        assert!((s1.p().get(1, 1) - 2.5).abs() < 1e-15);
    }

    #[test]
    fn lambda_out_of_range() {
        let s0 = gdfop_init(1, 1.0).unwrap();
        let x = Sample::new(vec![1.0], 1.0);
        for l in [0.0, -0.5, 1.0000001, f64::NAN] {
            assert!(matches!(
                gdfop_update(&s0, &x, l),
                Err(Error::InvalidParameter { name: "lambda", .. })
            ));
        }
    }

    #[test]
    fn piecewise_schedule() {
        let s = PiecewiseLambda {
            initial: 1.0,
            breakpoints: vec![(10, 0.9), (20, 0.5)],
        };
        assert_eq!(s.lambda(1), 1.0);
        assert_eq!(s.lambda(9), 1.0);
        assert_eq!(s.lambda(10), 0.9);
        assert_eq!(s.lambda(25), 0.5);
        let f = |t: u64| if t.is_multiple_of(2) { 0.9 } else { 1.0 };
        assert_eq!(f.lambda(4), 0.9);
    }

    #[test]
    fn rls_matches_gdfop_with_unit_lambda() {
        let mut rls = Rls::new(2, 10.0).unwrap();
        let mut g = Gdfop::new(2, 10.0, ConstantLambda(1.0)).unwrap();
        for i in 0..50 {
            let t = i as f64;
            let s = Sample::new(vec![(t * 0.3).sin(), (t * 0.7).cos()], t * 0.01);
            rls.update(&s).unwrap();
            g.update(&s).unwrap();
            assert_eq!(rls.weights(), g.weights());
        }
    }
}
