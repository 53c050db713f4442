//! Seeded synthetic drift streams with ground truth.
//!
//! Every generator is a pure function of its parameters and seed. Stage
//! generators split the stream into equal consecutive stages and record the
//! stage id of each sample together with the concept that produced it, so
//! fresh samples from the same distribution can be drawn later for holdout
//! evaluation.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::estimators::{sign_label, Sample, Task};
use crate::linalg::{axpy, dot, norm};
use crate::math::{cos, sin, sqrt};
use crate::seed::{self, StreamRng};
use crate::{Error, Result};

/// SEA thresholds, one per stage.
pub const SEA_THRESHOLDS: [f64; 4] = [7.0, 8.0, 9.0, 9.5];
pub const SEA_DEFAULT_N: usize = 50_000;
pub const HYPERPLANE_CLS_DIM: usize = 10;
pub const HYPERPLANE_CLS_STAGES: usize = 9;
pub const HYPERPLANE_CLS_DEFAULT_N: usize = 90_000;
/// Rotation angle between consecutive hyperplane-classification concepts.
pub const HYPERPLANE_CLS_ROTATION: f64 = core::f64::consts::FRAC_PI_4;
pub const HYPERPLANE_REG_DIM: usize = 10;
/// Zero-based first index of the three averaged features, per stage.
pub const HYPERPLANE_REG_WINDOWS: [usize; 4] = [0, 1, 3, 6];
pub const HYPERPLANE_REG_DEFAULT_N: usize = 2_000;

/// The data-generating distribution of one stage.
#[derive(Debug, Clone, PartialEq)]
pub enum Concept {
    /// Three features uniform on `[0, 10]`; label `+1` iff `x1 + x2 <= threshold`,
    /// flipped with probability `noise_rate`.
    Sea { threshold: f64, noise_rate: f64 },
    /// Features uniform on `[0, 1]^d`; label `+1` iff `weights·x >= offset`.
    Hyperplane { weights: Vec<f64>, offset: f64 },
    /// Ten features uniform on `[0, 1]`; real target
    /// `(x[start] + x[start+1] + x[start+2]) / 3`.
    WindowMean { start: usize },
}

impl Concept {
    pub fn dim(&self) -> usize {
        match self {
            Concept::Sea { .. } => 3,
            Concept::Hyperplane { weights, .. } => weights.len(),
            Concept::WindowMean { .. } => HYPERPLANE_REG_DIM,
        }
    }

    pub fn task(&self) -> Task {
        match self {
            Concept::WindowMean { .. } => Task::Regression,
            _ => Task::Classification,
        }
    }

    /// Noise-free target for `x`.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Concept::Sea { threshold, .. } => {
                if x[0] + x[1] <= *threshold {
                    1.0
                } else {
                    -1.0
                }
            }
            Concept::Hyperplane { weights, offset } => sign_label(dot(weights, x) - offset),
            Concept::WindowMean { start } => (x[*start] + x[start + 1] + x[start + 2]) / 3.0,
        }
    }

    /// Draws one sample from the stage distribution, label noise included.
    pub fn draw(&self, rng: &mut StreamRng) -> Sample {
        match self {
            Concept::Sea { noise_rate, .. } => {
                let x: Vec<f64> = (0..3).map(|_| 10.0 * rng.random::<f64>()).collect();
                let flip = rng.random::<f64>() < *noise_rate;
                let y = self.value(&x);
                Sample::new(x, if flip { -y } else { y })
            }
            Concept::Hyperplane { weights, .. } => {
                let x: Vec<f64> = (0..weights.len()).map(|_| rng.random::<f64>()).collect();
                let y = self.value(&x);
                Sample::new(x, y)
            }
            Concept::WindowMean { .. } => {
                let x: Vec<f64> = (0..HYPERPLANE_REG_DIM).map(|_| rng.random::<f64>()).collect();
                let y = self.value(&x);
                Sample::new(x, y)
            }
        }
    }
}

/// Ground truth of one drifting-linear step.
///
/// `w` is the weight vector that produced this row's target, i.e.
/// `y(t) = x(t)ᵀ w(t-1) + eps(t)`; the next row's `w` is `w + s`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub w: Vec<f64>,
    pub s: Vec<f64>,
    pub eps: f64,
}

impl GroundTruth {
    /// `w(t) = w(t-1) + s(t)`, the weight in force after this step.
    pub fn w_after(&self) -> Vec<f64> {
        self.w.iter().zip(&self.s).map(|(a, b)| a + b).collect()
    }
}

/// An ordered stream with whatever ground truth its source knows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LabeledTrace {
    pub samples: Vec<Sample>,
    pub truth: Option<Vec<GroundTruth>>,
    pub stages: Option<Vec<u32>>,
    /// Thresholded `±1` companion of a real-valued target, when defined.
    pub labels: Option<Vec<f64>>,
    /// Concept of each stage, indexed by stage id. Empty for external data.
    pub concepts: Vec<Concept>,
}

impl LabeledTrace {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.samples.first().map_or(0, Sample::dim)
    }

    /// Concept in force at zero-based position `i`.
    pub fn concept_at(&self, i: usize) -> Result<&Concept> {
        let stages = self
            .stages
            .as_ref()
            .ok_or(Error::MissingTruth("trace has no stage ids"))?;
        let stage = *stages.get(i).ok_or(Error::LengthMismatch {
            left: i,
            right: stages.len(),
        })? as usize;
        self.concepts
            .get(stage)
            .ok_or(Error::MissingTruth("trace has no concept for this stage"))
    }

    /// Regression unless every target is `±1`.
    pub fn infer_task(&self) -> Task {
        if !self.samples.is_empty() && self.samples.iter().all(|s| s.y == 1.0 || s.y == -1.0) {
            Task::Classification
        } else {
            Task::Regression
        }
    }
}

/// Synthetic generator selection.
#[derive(Debug, Clone, PartialEq)]
pub enum SyntheticKind {
    Sea {
        noise_rate: f64,
    },
    HyperplaneCls,
    HyperplaneReg,
    DriftingLinear {
        d: usize,
        gamma: f64,
        sigma: f64,
        /// Defaults to the unit vector `(1, ..., 1) / sqrt(d)`.
        w0: Option<Vec<f64>>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub kind: SyntheticKind,
    pub n: usize,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn generate(&self) -> Result<LabeledTrace> {
        match &self.kind {
            SyntheticKind::Sea { noise_rate } => gen_sea(self.n, *noise_rate, self.seed),
            SyntheticKind::HyperplaneCls => gen_hyperplane_cls(self.n, self.seed),
            SyntheticKind::HyperplaneReg => gen_hyperplane_reg(self.n, self.seed),
            SyntheticKind::DriftingLinear { d, gamma, sigma, w0 } => {
                let w0 = match w0 {
                    Some(w) => w.clone(),
                    None => default_w0(*d),
                };
                gen_drifting_linear(*d, self.n, *gamma, *sigma, self.seed, &w0)
            }
        }
    }

    pub fn task(&self) -> Task {
        match self.kind {
            SyntheticKind::Sea { .. } | SyntheticKind::HyperplaneCls => Task::Classification,
            SyntheticKind::HyperplaneReg | SyntheticKind::DriftingLinear { .. } => Task::Regression,
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SyntheticSpec {
            seed,
            ..self.clone()
        }
    }
}

pub fn default_w0(d: usize) -> Vec<f64> {
    vec![1.0 / sqrt(d as f64); d]
}

fn stage_of(i: usize, n: usize, stages: usize) -> usize {
    (i * stages / n).min(stages - 1)
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::param("n", "must be >= 1"));
    }
    Ok(())
}

fn staged_trace(n: usize, concepts: Vec<Concept>, rng: &mut StreamRng) -> LabeledTrace {
    let k = concepts.len();
    let mut samples = Vec::with_capacity(n);
    let mut stages = Vec::with_capacity(n);
    for i in 0..n {
        let stage = stage_of(i, n, k);
        samples.push(concepts[stage].draw(rng));
        stages.push(stage as u32);
    }
    LabeledTrace {
        samples,
        truth: None,
        stages: Some(stages),
        labels: None,
        concepts,
    }
}

/// SEA concepts: four equal stages with thresholds 7, 8, 9, 9.5.
pub fn gen_sea(n: usize, noise_rate: f64, seed: u64) -> Result<LabeledTrace> {
    check_n(n)?;
    if !(0.0..0.5).contains(&noise_rate) {
        return Err(Error::param("noise_rate", "must lie in [0, 0.5)"));
    }
    let concepts = SEA_THRESHOLDS
        .iter()
        .map(|&threshold| Concept::Sea {
            threshold,
            noise_rate,
        })
        .collect();
    Ok(staged_trace(n, concepts, &mut seed::rng(seed)))
}

/// The nine hyperplane-classification concepts for `seed`.
///
/// Stage 0 uses `w = (1, ..., 1)/sqrt(10)`; each later stage rotates the
/// previous normal by [`HYPERPLANE_CLS_ROTATION`] towards a seeded random
/// orthogonal direction. The offset puts the boundary through the centre of
/// the unit cube.
pub fn hyperplane_cls_concepts(seed: u64) -> Vec<Concept> {
    let d = HYPERPLANE_CLS_DIM;
    let mut rng = seed::rng(seed::derive_seed(seed, seed::CONCEPTS));
    let centre = vec![0.5; d];
    let mut w = default_w0(d);
    let mut concepts = Vec::with_capacity(HYPERPLANE_CLS_STAGES);
    for stage in 0..HYPERPLANE_CLS_STAGES {
        if stage > 0 {
            let mut u: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let along = dot(&u, &w);
            axpy(-along, &w, &mut u);
            let len = norm(&u);
            u.iter_mut().for_each(|v| *v /= len);
            let (c, s) = (cos(HYPERPLANE_CLS_ROTATION), sin(HYPERPLANE_CLS_ROTATION));
            w = w.iter().zip(&u).map(|(a, b)| c * a + s * b).collect();
        }
        concepts.push(Concept::Hyperplane {
            offset: dot(&w, &centre),
            weights: w.clone(),
        });
    }
    concepts
}

/// Ten uniform features, nine equal stages of rotating linear concepts.
pub fn gen_hyperplane_cls(n: usize, seed: u64) -> Result<LabeledTrace> {
    check_n(n)?;
    Ok(staged_trace(n, hyperplane_cls_concepts(seed), &mut seed::rng(seed)))
}

/// Ten uniform features, four stages of three-feature averages. Targets are
/// the real averages; `labels` holds `+1` where the average is `>= 0.5`.
pub fn gen_hyperplane_reg(n: usize, seed: u64) -> Result<LabeledTrace> {
    check_n(n)?;
    let concepts = HYPERPLANE_REG_WINDOWS
        .iter()
        .map(|&start| Concept::WindowMean { start })
        .collect();
    let mut trace = staged_trace(n, concepts, &mut seed::rng(seed));
    trace.labels = Some(trace.samples.iter().map(|s| sign_label(s.y - 0.5)).collect());
    Ok(trace)
}

/// Random-walk linear model: `y(t) = x(t)ᵀ w(t-1) + eps(t)`,
/// `w(t) = w(t-1) + s(t)`, with `x ~ U[-1, 1]^d`, `eps ~ N(0, sigma²)` and
/// `s ~ N(0, gamma² I)`.
pub fn gen_drifting_linear(
    d: usize,
    n: usize,
    gamma: f64,
    sigma: f64,
    seed: u64,
    w0: &[f64],
) -> Result<LabeledTrace> {
    check_n(n)?;
    if d == 0 {
        return Err(Error::param("d", "must be >= 1"));
    }
    if w0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: w0.len(),
        });
    }
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::param("gamma", "must be finite and >= 0"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(Error::param("sigma", "must be finite and >= 0"));
    }
    let mut rng = seed::rng(seed);
    let mut w = w0.to_vec();
    let mut samples = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for _ in 0..n {
        let x: Vec<f64> = (0..d).map(|_| 2.0 * rng.random::<f64>() - 1.0).collect();
        let eps = sigma * rng.sample::<f64, _>(StandardNormal);
        let s: Vec<f64> = (0..d)
            .map(|_| gamma * rng.sample::<f64, _>(StandardNormal))
            .collect();
        let y = dot(&x, &w) + eps;
        let row = GroundTruth { w, s, eps };
        w = row.w_after();
        samples.push(Sample::new(x, y));
        truth.push(row);
    }
    Ok(LabeledTrace {
        samples,
        truth: Some(truth),
        stages: None,
        labels: None,
        concepts: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sea_first_stage_concept() {
        let trace = gen_sea(4, 0.0, 1).unwrap();
        assert_eq!(trace.stages.as_deref(), Some(&[0, 1, 2, 3][..]));
        let c = trace.concept_at(0).unwrap();
        assert_eq!(c.value(&[3.0, 3.0, 9.0]), 1.0);
        assert_eq!(c.value(&[5.0, 5.0, 0.0]), -1.0);
        assert_eq!(trace.concept_at(3).unwrap().value(&[5.0, 4.5, 0.0]), 1.0);
    }

    #[test]
    fn sea_noiseless_labels_match_concept() {
        let trace = gen_sea(2_000, 0.0, 5).unwrap();
        for (i, s) in trace.samples.iter().enumerate() {
            assert_eq!(trace.concept_at(i).unwrap().value(&s.x), s.y);
        }
    }

    #[test]
    fn sea_noise_rate_flips_about_that_fraction() {
        let trace = gen_sea(20_000, 0.1, 5).unwrap();
        let flipped = trace
            .samples
            .iter()
            .enumerate()
            .filter(|(i, s)| trace.concept_at(*i).unwrap().value(&s.x) != s.y)
            .count() as f64
            / 20_000.0;
        // binomial sd ~ 0.0021
        assert!((flipped - 0.1).abs() < 0.01, "{flipped}");
    }

    #[test]
    fn sea_rejects_noise_out_of_range() {
        assert!(gen_sea(10, 0.5, 1).is_err());
        assert!(gen_sea(10, -0.1, 1).is_err());
        assert!(gen_sea(0, 0.0, 1).is_err());
    }

    #[test]
    fn hyperplane_cls_stages() {
        let trace = gen_hyperplane_cls(9, 3).unwrap();
        assert_eq!(
            trace.stages.as_deref(),
            Some(&[0, 1, 2, 3, 4, 5, 6, 7, 8][..])
        );
        assert_eq!(trace.dim(), 10);
        assert_eq!(trace.concepts.len(), 9);
    }

    #[test]
    fn hyperplane_cls_concepts_are_unit_and_rotated() {
        let concepts = hyperplane_cls_concepts(11);
        let ws: Vec<&Vec<f64>> = concepts
            .iter()
            .map(|c| match c {
                Concept::Hyperplane { weights, .. } => weights,
                _ => unreachable!(),
            })
            .collect();
        for pair in ws.windows(2) {
            assert!((norm(pair[1]) - 1.0).abs() < 1e-12);
            let cosine = dot(pair[0], pair[1]);
            assert!((cosine - HYPERPLANE_CLS_ROTATION.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn hyperplane_reg_concepts() {
        let trace = gen_hyperplane_reg(8, 2).unwrap();
        let stage0 = trace.concept_at(0).unwrap();
        let mut x = [0.1; 10];
        x[0] = 0.9;
        x[1] = 0.9;
        x[2] = 0.9;
        assert!((stage0.value(&x) - 0.9).abs() < 1e-15);
        let half = [0.5; 10];
        assert_eq!(stage0.value(&half), 0.5);
        assert_eq!(sign_label(stage0.value(&half) - 0.5), 1.0);
        let labels = trace.labels.as_ref().unwrap();
        for (s, l) in trace.samples.iter().zip(labels) {
            assert_eq!(*l, sign_label(s.y - 0.5));
        }
        assert_eq!(trace.stages.as_deref(), Some(&[0, 0, 1, 1, 2, 2, 3, 3][..]));
    }

    #[test]
    fn drifting_linear_static_case() {
        let w0 = [0.5, -1.0, 2.0];
        let trace = gen_drifting_linear(3, 200, 0.0, 0.0, 9, &w0).unwrap();
        for (s, g) in trace.samples.iter().zip(trace.truth.as_ref().unwrap()) {
            assert_eq!(g.w, w0);
            assert_eq!(s.y, dot(&s.x, &w0));
            assert!(s.x.iter().all(|v| (-1.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn drifting_linear_truth_chains() {
        let trace = gen_drifting_linear(2, 50, 0.1, 0.2, 4, &[1.0, 1.0]).unwrap();
        let truth = trace.truth.unwrap();
        for pair in truth.windows(2) {
            assert_eq!(pair[0].w_after(), pair[1].w);
        }
        for (s, g) in trace.samples.iter().zip(&truth) {
            assert_eq!(s.y, dot(&s.x, &g.w) + g.eps);
        }
    }

    #[test]
    fn drift_increments_have_zero_mean() {
        let (gamma, n) = (0.01, 1000);
        let trace = gen_drifting_linear(3, n, gamma, 0.1, 21, &[0.0; 3]).unwrap();
        let truth = trace.truth.unwrap();
        for k in 0..3 {
            let mean = truth.iter().map(|g| g.s[k]).sum::<f64>() / n as f64;
            assert!(mean.abs() <= 3.0 * gamma / (n as f64).sqrt(), "coord {k}: {mean}");
        }
    }

    #[test]
    fn generators_are_deterministic() {
        assert_eq!(gen_sea(500, 0.1, 42).unwrap(), gen_sea(500, 0.1, 42).unwrap());
        assert_ne!(gen_sea(500, 0.1, 42).unwrap(), gen_sea(500, 0.1, 43).unwrap());
        assert_eq!(
            gen_hyperplane_cls(90, 42).unwrap(),
            gen_hyperplane_cls(90, 42).unwrap()
        );
        assert_eq!(
            gen_hyperplane_reg(40, 42).unwrap(),
            gen_hyperplane_reg(40, 42).unwrap()
        );
        let w0 = default_w0(4);
        assert_eq!(
            gen_drifting_linear(4, 100, 0.01, 0.1, 42, &w0).unwrap(),
            gen_drifting_linear(4, 100, 0.01, 0.1, 42, &w0).unwrap()
        );
    }

    #[test]
    fn sea_feature_marginals() {
        let n = 10_000;
        let trace = gen_sea(n, 0.0, 77).unwrap();
        for k in 0..3 {
            let mean = trace.samples.iter().map(|s| s.x[k]).sum::<f64>() / n as f64;
            assert!((mean - 5.0).abs() <= 3.0 * 10.0 / (n as f64).sqrt());
        }
    }

    #[test]
    fn task_inference() {
        assert_eq!(gen_sea(10, 0.0, 1).unwrap().infer_task(), Task::Classification);
        assert_eq!(gen_hyperplane_reg(10, 1).unwrap().infer_task(), Task::Regression);
    }
}
