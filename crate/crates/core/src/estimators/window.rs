use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use super::{check_dim, OnlineEstimator, Sample, StepOutput};
use crate::linalg::{solve_spd, SymMatrix};
use crate::{Error, Result};

/// Most recent `capacity` samples and the weights fitted on them.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowState {
    dim: usize,
    capacity: usize,
    buffer: VecDeque<Sample>,
    w_hat: Vec<f64>,
    t: u64,
}

impl WindowState {
    pub fn new(dim: usize, capacity: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("d", "must be >= 1"));
        }
        if capacity == 0 {
            return Err(Error::param("window", "must be >= 1"));
        }
        Ok(WindowState {
            dim,
            capacity,
            buffer: VecDeque::with_capacity(capacity + 1),
            w_hat: vec![0.0; dim],
            t: 0,
        })
    }

    pub fn len(&self) -> usize {
        self.buffer.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buffer.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn w_hat(&self) -> &[f64] {
        &self.w_hat
    }

    fn push(&mut self, s: &Sample, ridge_eps: f64) -> Result<StepOutput> {
        check_dim(self.dim, &s.x)?;
        self.buffer.push_back(s.clone());
        while self.buffer.len() > self.capacity {
            self.buffer.pop_front();
        }
        self.t += 1;
        let mut gram = SymMatrix::scaled_identity(self.dim, ridge_eps);
        let mut rhs = vec![0.0; self.dim];
        for item in &self.buffer {
            gram.add_outer(&item.x, 1.0);
            for (r, xi) in rhs.iter_mut().zip(&item.x) {
                *r += xi * item.y;
            }
        }
        self.w_hat = solve_spd(&gram, &rhs)?;
        Ok(StepOutput::after(&self.w_hat, &s.x))
    }
}

/// Appends `s`, evicts beyond the window, and refits ridge least squares.
///
/// With `ridge_eps > 0` the normal equations are always solvable; with zero
/// ridge a rank-deficient window reports [`Error::SingularMatrix`].
pub fn window_ls_update(
    state: &WindowState,
    s: &Sample,
    ridge_eps: f64,
) -> Result<(WindowState, StepOutput)> {
    let mut next = state.clone();
    let out = next.push(s, ridge_eps)?;
    Ok((next, out))
}

/// Sliding-window ridge regression baseline.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowLs {
    state: WindowState,
    ridge_eps: f64,
}

impl WindowLs {
    pub const DEFAULT_RIDGE: f64 = 1e-8;

    pub fn new(dim: usize, capacity: usize, ridge_eps: f64) -> Result<Self> {
        if !(ridge_eps >= 0.0) {
            return Err(Error::param("ridge_eps", "must be >= 0"));
        }
        Ok(WindowLs {
            state: WindowState::new(dim, capacity)?,
            ridge_eps,
        })
    }

    pub fn state(&self) -> &WindowState {
        &self.state
    }
}

impl OnlineEstimator for WindowLs {
    fn dim(&self) -> usize {
        self.state.dim
    }

    fn weights(&self) -> &[f64] {
        &self.state.w_hat
    }

    fn steps(&self) -> u64 {
        self.state.t
    }

    fn update(&mut self, sample: &Sample) -> Result<StepOutput> {
        self.state.push(sample, self.ridge_eps)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_point_fit() {
        let s0 = WindowState::new(1, 1).unwrap();
        let (s1, out) = window_ls_update(&s0, &Sample::new(vec![1.0], 3.0), 0.0).unwrap();
        assert_eq!(s1.w_hat(), &[3.0]);
        assert_eq!(out.prediction_raw, 3.0);
    }

    #[test]
    fn recovers_weights_from_independent_samples() {
        let w0 = [0.7, -1.3, 2.0];
        let xs = [[1.0, 0.2, -0.4], [0.3, -1.0, 0.5], [0.9, 0.8, 1.1]];
        let mut m = WindowLs::new(3, 3, 1e-12).unwrap();
        for x in xs {
            let y = x.iter().zip(&w0).map(|(a, b)| a * b).sum();
            m.update(&Sample::new(x.to_vec(), y)).unwrap();
        }
        for (a, b) in m.weights().iter().zip(&w0) {
            assert!((a - b).abs() < 1e-8, "{a} vs {b}");
        }
    }

    #[test]
    fn buffer_never_exceeds_capacity() {
        let mut m = WindowLs::new(2, 4, WindowLs::DEFAULT_RIDGE).unwrap();
        for i in 0..25 {
            let t = i as f64;
            m.update(&Sample::new(vec![t.sin(), 1.0], t)).unwrap();
            assert!(m.state().len() <= 4);
        }
        assert_eq!(m.state().len(), 4);
        assert_eq!(m.steps(), 25);
    }

    #[test]
    fn zero_ridge_rank_deficient_is_singular() {
        let s0 = WindowState::new(2, 3).unwrap();
        let r = window_ls_update(&s0, &Sample::new(vec![1.0, 1.0], 1.0), 0.0);
        assert!(matches!(r, Err(Error::SingularMatrix { .. })));
    }
}
