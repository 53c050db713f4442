use dfop_core::estimators::{Recursion, Rls, Task};
use dfop_core::eval::{
    accumulated_accuracy, bound_montecarlo, build_estimator, inverse_e, mse, mu_sweep, recommend_mu,
    robustness, run_stream, weight_after_one_period, EstimatorChoice, FeatureMap, HoldoutSettings,
    MonteCarloConfig, RunSettings, SweepConfig,
};
use dfop_core::streams::{
    default_w0, gen_drifting_linear, gen_hyperplane_cls, gen_hyperplane_reg, gen_sea, LabeledTrace,
    SyntheticKind, SyntheticSpec,
};
use proptest::prelude::*;

fn dfop(mu: f64) -> EstimatorChoice {
    EstimatorChoice::Dfop {
        mu,
        recursion: Recursion::Consistent,
    }
}

proptest! {
    #[test]
    fn aa_equals_prefix_count(bits in prop::collection::vec(any::<(bool, bool)>(), 1..300)) {
        let p: Vec<f64> = bits.iter().map(|b| if b.0 { 1.0 } else { -1.0 }).collect();
        let y: Vec<f64> = bits.iter().map(|b| if b.1 { 1.0 } else { -1.0 }).collect();
        let aa = accumulated_accuracy(&p, &y).unwrap();
        for t in 1..=p.len() {
            let count = (0..t).filter(|&i| p[i] == y[i]).count();
            prop_assert_eq!(aa[t - 1], count as f64 / t as f64);
            prop_assert!((0.0..=1.0).contains(&aa[t - 1]));
        }
    }

    #[test]
    fn mse_matches_naive_loop(pairs in prop::collection::vec((-1e3f64..1e3, -1e3f64..1e3), 1..200)) {
        let (p, y): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let mut acc = 0.0;
        for i in 0..p.len() {
            acc += (p[i] - y[i]).powi(2);
        }
        let naive = acc / p.len() as f64;
        prop_assert!((mse(&p, &y).unwrap() - naive).abs() <= 1e-12 * naive.max(1.0));
    }
}

#[test]
fn robustness_three_by_three() {
    let table = vec![
        vec![0.90, 0.60, 0.75],
        vec![0.80, 0.70, 0.50],
        vec![0.60, 0.65, 1.00],
    ];
    let r = robustness(&table).unwrap();
    let want = [
        0.90 / 0.60 + 0.60 / 0.60 + 0.75 / 0.50,
        0.80 / 0.60 + 0.70 / 0.60 + 0.50 / 0.50,
        0.60 / 0.60 + 0.65 / 0.60 + 1.00 / 0.50,
    ];
    for (a, b) in r.iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn forgetting_period_table_reproduced() {
    let table = [
        (400.0, "2.50E-03"),
        (600.0, "1.67E-03"),
        (9_000.0, "1.11E-04"),
        (1_000.0, "1.00E-03"),
        (2_000.0, "5.00E-04"),
        (10_000.0, "1.00E-04"),
    ];
    for (t0, printed) in table {
        let mu = recommend_mu(t0).unwrap();
        assert_eq!(format!("{mu:.2E}").replace("E-", "E-0"), printed);
    }
    let mut mu = 1e-4;
    while mu <= 0.5 {
        assert!(weight_after_one_period(mu) < inverse_e(), "{mu}");
        mu *= 1.5;
    }
    assert!(weight_after_one_period(0.5) < inverse_e());
}

#[test]
fn rls_estimate_error_vanishes_on_static_clean_stream() {
    let d = 4;
    let trace = gen_drifting_linear(d, 50 * d, 0.0, 0.0, 3, &default_w0(d)).unwrap();
    let mut est = Rls::new(d, 1e3).unwrap();
    let out = run_stream(&trace, &mut est, &RunSettings::new(Task::Regression), 0).unwrap();
    let errs = out.series.estimate_errors().unwrap();
    assert!(errs[errs.len() - 1] <= 1e-3);
    assert!(errs[errs.len() - 1] < errs[0]);
}

fn drift_sweep() -> SweepConfig {
    SweepConfig {
        stream: SyntheticSpec {
            kind: SyntheticKind::DriftingLinear {
                d: 5,
                gamma: 1e-3,
                sigma: 0.1,
                w0: None,
            },
            n: 20_000,
            seed: 0,
        },
        estimator: dfop(0.0),
        p0_scale: 1e3,
        settings: RunSettings::new(Task::Regression),
    }
}

#[test]
fn mu_sweep_is_u_shaped_on_drifting_stream() {
    let grid = [1e-4, 1e-3, 1e-2, 1e-1, 0.5];
    let seeds = [0, 1, 2, 3, 4];
    let r = mu_sweep(&drift_sweep(), &grid, &seeds).unwrap();
    for &seed in &seeds {
        let err: Vec<f64> = grid
            .iter()
            .map(|&mu| {
                let c = r.cells.iter().find(|c| c.mu == mu && c.seed == seed).unwrap();
                c.outcome.as_ref().unwrap().final_quarter_estimate_error.unwrap()
            })
            .collect();
        let best_inner = err[1..4].iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(best_inner < err[0] && best_inner < err[4], "seed {seed}: {err:?}");
    }
}

#[test]
fn sweep_is_deterministic_and_order_free() {
    let mut cfg = drift_sweep();
    cfg.stream.n = 500;
    let a = mu_sweep(&cfg, &[0.01, 0.1], &[1, 2]).unwrap();
    let b = mu_sweep(&cfg, &[0.1, 0.01], &[1, 2]).unwrap();
    assert_eq!(a.rows[0], b.rows[1]);
    assert_eq!(a.rows[1], b.rows[0]);
    assert_eq!(a, mu_sweep(&cfg, &[0.01, 0.1], &[1, 2]).unwrap());
}

#[test]
fn frozen_model_sweep_predicts_the_majority_sign() {
    let cfg = SweepConfig {
        stream: SyntheticSpec {
            kind: SyntheticKind::Sea { noise_rate: 0.0 },
            n: 4_000,
            seed: 0,
        },
        estimator: dfop(0.0),
        p0_scale: 1e3,
        settings: RunSettings {
            task: Task::Classification,
            features: FeatureMap { intercept: true },
            holdout: None,
        },
    };
    let r = mu_sweep(&cfg, &[0.0], &[5]).unwrap();
    let trace = dfop_core::eval::sweep_trace(&cfg, 5).unwrap();
    let positive = trace.samples.iter().filter(|s| s.y == 1.0).count() as f64 / 4_000.0;
    let acc = r.rows[0].prequential_accuracy.unwrap().mean;
    assert_eq!(acc, positive);
}

fn final_quarter_metric(trace: &LabeledTrace, choice: EstimatorChoice, task: Task, intercept: bool) -> f64 {
    let d = trace.dim() + usize::from(intercept);
    let mut est = build_estimator(choice, d, 1e3).unwrap();
    let settings = RunSettings {
        task,
        features: FeatureMap { intercept },
        holdout: None,
    };
    let s = run_stream(trace, est.as_mut(), &settings, 0).unwrap().summary;
    match (task, s.final_quarter_estimate_error) {
        (Task::Classification, _) => 1.0 - s.final_quarter_accuracy.unwrap(),
        (Task::Regression, Some(e)) => e,
        (Task::Regression, None) => s.final_quarter_mse,
    }
}

#[test]
fn recommended_mu_beats_rls_on_every_synthetic_stream() {
    for seed in 0..3 {
        let cases = [
            (gen_sea(50_000, 0.1, seed).unwrap(), Task::Classification, 12_500.0, true),
            (gen_hyperplane_cls(90_000, seed).unwrap(), Task::Classification, 10_000.0, true),
            (gen_hyperplane_reg(2_000, seed).unwrap(), Task::Regression, 500.0, true),
            // no stages: the period balancing noise against drift, sigma / gamma
            (
                gen_drifting_linear(5, 20_000, 1e-3, 0.1, seed, &default_w0(5)).unwrap(),
                Task::Regression,
                100.0,
                false,
            ),
        ];
        for (trace, task, t0, intercept) in &cases {
            let mu = recommend_mu(*t0).unwrap();
            let ours = final_quarter_metric(trace, dfop(mu), *task, *intercept);
            let rls = final_quarter_metric(trace, EstimatorChoice::Rls, *task, *intercept);
            assert!(ours < rls, "seed {seed}, T0 {t0}: {ours} vs {rls}");
        }
    }
}

fn holdout_drops_at_boundaries(trace: &LabeledTrace) {
    let d = trace.dim() + 1;
    let mut est = build_estimator(dfop(1e-3), d, 1e3).unwrap();
    let settings = RunSettings {
        task: Task::Classification,
        features: FeatureMap { intercept: true },
        holdout: Some(HoldoutSettings {
            every: 50,
            size: 500,
            seed: 3,
        }),
    };
    let out = run_stream(trace, est.as_mut(), &settings, 0).unwrap();
    let pts = out.series.holdout_points();
    let n = trace.len() as u64;
    let w = n / 20;
    let k = trace.concepts.len() as u64;
    for b in 1..k {
        let at = b * n / k;
        let mean = |lo: u64, hi: u64| {
            let v: Vec<f64> = pts.iter().filter(|p| p.0 > lo && p.0 <= hi).map(|p| p.1).collect();
            v.iter().sum::<f64>() / v.len() as f64
        };
        let before = mean(at - w, at);
        let after = mean(at, at + w);
        assert!(after < before, "boundary {b}: {before} -> {after}");
    }
}

#[test]
fn holdout_accuracy_drops_after_each_stage_boundary() {
    holdout_drops_at_boundaries(&gen_sea(50_000, 0.1, 2).unwrap());
    holdout_drops_at_boundaries(&gen_hyperplane_cls(90_000, 2).unwrap());
}

#[test]
fn coverage_shrinks_as_bound_is_scaled_down() {
    let report = bound_montecarlo(&MonteCarloConfig {
        d: 3,
        n: 1_000,
        runs: 50,
        ..MonteCarloConfig::default()
    })
    .unwrap();
    let c: Vec<f64> = [1.0, 0.5, 0.1, 0.01, 0.001]
        .iter()
        .map(|&s| report.coverage_at(s))
        .collect();
    assert!(c.windows(2).all(|w| w[1] <= w[0]), "{c:?}");
    assert!(c[0] >= 0.95);
    assert!(report.max_recurrence_residual <= 1e-8);
}
