mod common;

use std::sync::Arc;

use common::*;
use mle_struct::dual::{dual_objective, theta_star, GramCache};
use mle_struct::fw::{
    curvature_bound_estimate, fw_infer, fw_learn, learn, line_search, CurvatureProbe, ExactOracle,
    FWConfig, LearnOptions, Mode, Progress, StepRule,
};
use mle_struct::map::map_decode;
use mle_struct::model::{
    edge_weight_matrix, FeatureMap, Reweighting, Structure, StructuredModel, Topology,
};
use mle_struct::synth::{sample_permutation, synthesize, Regime, SynthSpec};
use mle_struct::{Dataset, Matrix, Pseudomarginals};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(mode: Mode, rule: StepRule, gap_tol: f64, max_iters: usize) -> FWConfig {
    FWConfig {
        mode,
        step_rule: rule,
        gap_tol,
        max_iters,
        ..FWConfig::default()
    }
}

fn bethe(data: &Dataset) -> Reweighting {
    Reweighting::uniform(data.topology(), 1.0).unwrap()
}

#[test]
fn line_search_objective_never_increases() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for data in [
        bipartite_dataset(&mut rng, 4, 3, 4),
        grid_dataset(&mut rng, 2, 3, 4),
    ] {
        let r = fw_learn(
            &data,
            &bethe(&data),
            0.5,
            &config(Mode::Batch, StepRule::LineSearch, 1e-9, 300),
            &ExactOracle,
        )
        .unwrap();
        for w in r.trace.rows.windows(2) {
            assert!(w[1].objective <= w[0].objective + 1e-12, "{:?}", w);
        }
    }
}

#[test]
fn gap_bounds_suboptimality() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let data = bipartite_dataset(&mut rng, 4, 2, 5);
    let rho = Reweighting::uniform(data.topology(), 0.5).unwrap();
    let reference = fw_learn(
        &data,
        &rho,
        1.0,
        &config(Mode::Batch, StepRule::LineSearch, 1e-10, 100_000),
        &ExactOracle,
    )
    .unwrap();
    assert!(reference.converged);
    for rule in [StepRule::Decay, StepRule::LineSearch] {
        let r = fw_learn(
            &data,
            &rho,
            1.0,
            &config(Mode::Batch, rule, 1e-8, 2000),
            &ExactOracle,
        )
        .unwrap();
        for row in &r.trace.rows {
            assert!(
                row.gap >= row.objective - reference.objective - 1e-9,
                "{row:?}"
            );
        }
    }
}

#[test]
fn start_at_optimum_takes_no_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = bipartite_dataset(&mut rng, 3, 2, 1);
    let cfg = config(Mode::Batch, StepRule::LineSearch, 1e-9, 100_000);
    let solved = fw_learn(&data, &bethe(&data), 1.0, &cfg, &ExactOracle).unwrap();
    let again = learn(
        &data,
        &bethe(&data),
        1.0,
        &cfg,
        &ExactOracle,
        LearnOptions {
            init: Some(solved.taus.clone()),
            observer: None,
        },
    )
    .unwrap();
    assert_eq!(again.iterations, 0);
    assert!(again.gap <= 1e-9);
}

#[test]
fn decay_schedule_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = grid_dataset(&mut rng, 2, 2, 3);
    let rho = Reweighting::uniform(data.topology(), 0.75).unwrap();
    let r = fw_learn(
        &data,
        &rho,
        1.0,
        &config(Mode::Batch, StepRule::Decay, 1e-12, 4000),
        &ExactOracle,
    )
    .unwrap();
    let best = fw_learn(
        &data,
        &rho,
        1.0,
        &config(Mode::Batch, StepRule::LineSearch, 1e-10, 100_000),
        &ExactOracle,
    )
    .unwrap()
    .objective;
    // primal suboptimality of the decay schedule falls like C/(t + 2); fit C on the early
    // iterates and check the late ones stay under the bound
    let c = r.trace.rows[1..20]
        .iter()
        .map(|row| (row.objective - best) * (row.t as f64 + 2.0) / 2.0)
        .fold(0.0, f64::max);
    let estimate = curvature_bound_estimate(&data, &rho, 1.0, &CurvatureProbe::default()).unwrap();
    assert!(estimate > 0.0);
    for row in r.trace.rows.iter().skip(20) {
        assert!(
            row.objective - best <= c.max(estimate) * 2.0 / (row.t as f64 + 2.0) + 1e-9,
            "{row:?}"
        );
    }
}

#[test]
fn single_sample_block_matches_batch() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let data = bipartite_dataset(&mut rng, 4, 3, 1);
    for rule in [StepRule::Decay, StepRule::LineSearch] {
        let a = learn(
            &data,
            &bethe(&data),
            0.7,
            &config(Mode::Batch, rule, 1e-9, 200),
            &ExactOracle,
            LearnOptions::default(),
        )
        .unwrap();
        let b = learn(
            &data,
            &bethe(&data),
            0.7,
            &config(Mode::Block, rule, 1e-9, 200),
            &ExactOracle,
            LearnOptions::default(),
        )
        .unwrap();
        assert_eq!(a.trace.rows.len(), b.trace.rows.len());
        for (x, y) in a.trace.rows.iter().zip(&b.trace.rows) {
            assert_eq!(x.t, y.t);
            assert!((x.objective - y.objective).abs() < 1e-9 * x.objective.abs().max(1.0));
            assert!((x.gamma - y.gamma).abs() < 1e-9);
        }
    }
}

#[test]
fn block_and_batch_agree_on_synthetic_data() {
    let data = synthesize(
        &SynthSpec {
            regime: Regime::LowSnr,
            n: 6,
            m: 12,
        },
        3,
    )
    .unwrap()
    .dataset;
    let rho = Reweighting::uniform(data.topology(), 0.5).unwrap();
    let a = fw_learn(
        &data,
        &rho,
        1.0,
        &config(Mode::Batch, StepRule::LineSearch, 1e-7, 20_000),
        &ExactOracle,
    )
    .unwrap();
    let b = learn(
        &data,
        &rho,
        1.0,
        &FWConfig {
            rng_seed: 9,
            ..config(Mode::Block, StepRule::LineSearch, 1e-7, 1_000_000)
        },
        &ExactOracle,
        LearnOptions::default(),
    )
    .unwrap();
    assert!(a.converged && b.converged);
    assert!(((a.objective - b.objective) / a.objective).abs() < 1e-4);
}

#[test]
fn block_runs_are_reproducible_under_a_seed() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = grid_dataset(&mut rng, 2, 2, 4);
    let cfg = FWConfig {
        rng_seed: 17,
        ..config(Mode::Block, StepRule::LineSearch, 1e-8, 400)
    };
    let run = || {
        learn(
            &data,
            &bethe(&data),
            1.0,
            &cfg,
            &ExactOracle,
            LearnOptions::default(),
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.theta, b.theta);
    let strip = |r: &mle_struct::fw::LearnResult| -> Vec<(usize, f64, f64, f64)> {
        r.trace
            .rows
            .iter()
            .map(|x| (x.t, x.objective, x.gap, x.gamma))
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}

fn variance(x: &[f64]) -> f64 {
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / x.len() as f64
}

/// Matchings drawn exactly from per-sample random features and a planted `θ`.
fn planted(rng: &mut ChaCha8Rng, theta: &[f64], n: usize, m: usize) -> Dataset {
    let t = Arc::new(Topology::bipartite(n).unwrap());
    let samples = (0..m)
        .map(|_| {
            let mats: Vec<Matrix> = theta.iter().map(|_| random_matrix(rng, n, n)).collect();
            let f = Arc::new(FeatureMap::bipartite(&t, &mats).unwrap());
            let model = StructuredModel::new(t.clone(), f.clone()).unwrap();
            let w = edge_weight_matrix(&model, theta).unwrap();
            (
                f,
                Structure::Permutation(sample_permutation(&w, rng).unwrap()),
            )
        })
        .collect();
    Dataset::new(t, samples).unwrap()
}

#[test]
fn averaging_damps_test_error() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let truth = [1.5, -1.0, 0.5, 2.0];
    let train = planted(&mut rng, &truth, 6, 30);
    let test = planted(&mut rng, &truth, 6, 100);
    let rho = Reweighting::uniform(train.topology(), 1.0).unwrap();
    let lambda = 0.1;
    let error = |taus: &[Pseudomarginals]| -> f64 {
        let theta = theta_star(&train, taus, lambda).unwrap().theta;
        test.samples()
            .iter()
            .map(|s| {
                let pred = map_decode(s.model(), &theta).unwrap();
                let pred = Structure::from_vertex(test.topology(), &pred.coords).unwrap();
                pred.hamming_loss(s.structure()).unwrap()
            })
            .sum::<f64>()
            / test.len() as f64
    };
    let mut raw = Vec::new();
    let mut avg = Vec::new();
    let mut observer = |p: &Progress| {
        raw.push(error(p.taus));
        avg.push(error(p.averaged.unwrap()));
    };
    let cfg = FWConfig {
        averaging: true,
        rng_seed: 4,
        ..config(Mode::Block, StepRule::Decay, 1e-12, 30 * 60)
    };
    learn(
        &train,
        &rho,
        lambda,
        &cfg,
        &ExactOracle,
        LearnOptions {
            init: None,
            observer: Some(&mut observer),
        },
    )
    .unwrap();
    let (raw, avg) = (&raw[raw.len() - 20..], &avg[avg.len() - 20..]);
    assert!(
        variance(avg) < variance(raw),
        "{} vs {}",
        variance(avg),
        variance(raw)
    );
}

#[test]
fn line_search_step_beats_endpoints() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..30 {
        let data = if trial % 2 == 0 {
            bipartite_dataset(&mut rng, 4, 2, 3)
        } else {
            grid_dataset(&mut rng, 2, 3, 3)
        };
        let t = data.topology();
        let rho = random_rho(&mut rng, t);
        let lambda = rng.gen_range(0.2..3.0);
        let taus: Vec<Pseudomarginals> = (0..3).map(|_| random_interior(&mut rng, t)).collect();
        let dirs: Vec<Vec<f64>> = taus
            .iter()
            .map(|x| {
                random_vertex(&mut rng, t)
                    .iter()
                    .zip(x.values())
                    .map(|(a, b)| a - b)
                    .collect()
            })
            .collect();
        let cache = GramCache::new(&data, &taus).unwrap();
        let fallback = 2.0 / (2.0 + (trial + 1) as f64);
        let gamma = line_search(&data, &taus, &dirs, &cache, &rho, lambda, fallback).unwrap();
        assert!((0.0..1.0).contains(&gamma));
        let h = |eta: f64| {
            let moved: Vec<Pseudomarginals> = taus
                .iter()
                .zip(&dirs)
                .map(|(x, d)| {
                    Pseudomarginals::new(
                        x.values().iter().zip(d).map(|(a, b)| a + eta * b).collect(),
                    )
                })
                .collect();
            dual_objective(&data, &moved, lambda, &rho).unwrap()
        };
        assert!(h(gamma) <= h(0.0).min(h(fallback)) + 1e-10);
    }
}

#[test]
fn uphill_direction_gives_zero_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = bipartite_dataset(&mut rng, 3, 2, 1);
    let rho = bethe(&data);
    let solved = fw_learn(
        &data,
        &rho,
        1.0,
        &config(Mode::Batch, StepRule::LineSearch, 1e-12, 100_000),
        &ExactOracle,
    )
    .unwrap();
    // at the optimum every feasible direction is uphill to first order
    let taus = solved.taus;
    let cache = GramCache::new(&data, &taus).unwrap();
    let s = random_vertex(&mut rng, data.topology());
    let d: Vec<f64> = s.iter().zip(taus[0].values()).map(|(a, b)| a - b).collect();
    let base = dual_objective(&data, &taus, 1.0, &rho).unwrap();
    let gamma = line_search(&data, &taus, &[d], &cache, &rho, 1.0, 0.0).unwrap();
    assert!(gamma < 1e-3, "{gamma} at objective {base}");
}

fn two_by_two() -> StructuredModel {
    let t = Arc::new(Topology::bipartite(2).unwrap());
    let f = Arc::new(FeatureMap::bipartite(&t, &[Matrix::identity(2)]).unwrap());
    StructuredModel::new(t, f).unwrap()
}

#[test]
fn inference_on_two_by_two_at_zero_weights() {
    let model = two_by_two();
    let cfg = config(Mode::Batch, StepRule::LineSearch, 1e-12, 10_000);
    let b = fw_infer(
        &model,
        &[0.0],
        &Reweighting::uniform(model.topology(), 1.0).unwrap(),
        &cfg,
        &ExactOracle,
    )
    .unwrap();
    assert!(b.log_z.abs() < 1e-10);
    let rw = fw_infer(
        &model,
        &[0.0],
        &Reweighting::uniform(model.topology(), 0.5).unwrap(),
        &cfg,
        &ExactOracle,
    )
    .unwrap();
    assert!((rw.log_z - 2.0 * 2f64.ln()).abs() < 1e-10);
    for x in rw.tau.values() {
        assert!((x - 0.5).abs() < 1e-9);
    }
}

#[test]
fn inference_on_single_node_is_softmax() {
    let t = Arc::new(Topology::pairwise(1, &[]).unwrap());
    let f = Arc::new(FeatureMap::grid(&t, Matrix::identity(1), Matrix::zeros(0, 1)).unwrap());
    let model = StructuredModel::new(t.clone(), f).unwrap();
    // scores (a, b) = (0.3, -1.1)
    let theta = [0.3, -1.1, 0.0, 0.0, 0.0, 0.0];
    let r = fw_infer(
        &model,
        &theta,
        &Reweighting::uniform(&t, 1.0).unwrap(),
        &config(Mode::Batch, StepRule::LineSearch, 1e-12, 10_000),
        &ExactOracle,
    )
    .unwrap();
    let z = 0.3f64.exp() + (-1.1f64).exp();
    assert!((r.log_z - z.ln()).abs() < 1e-9);
    assert!((r.tau.values()[0] - 0.3f64.exp() / z).abs() < 1e-9);
}

#[test]
fn curvature_estimates_grow_with_probes_and_towards_the_boundary() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data = bipartite_dataset(&mut rng, 4, 2, 2);
    let rho = bethe(&data);
    let est = |probes, margin| {
        curvature_bound_estimate(
            &data,
            &rho,
            1.0,
            &CurvatureProbe {
                probes,
                seed: 3,
                margin,
            },
        )
        .unwrap()
    };
    assert!(est(50, 0.05) <= est(200, 0.05));
    assert!(est(200, 0.5) < est(200, 0.01));
}

#[test]
fn curvature_of_a_lone_binary_node_is_finite() {
    let t = Arc::new(Topology::pairwise(1, &[]).unwrap());
    let f = Arc::new(FeatureMap::grid(&t, Matrix::zeros(1, 1), Matrix::zeros(0, 1)).unwrap());
    let data = Dataset::new(t.clone(), vec![(f, Structure::Labels(vec![0]))]).unwrap();
    let rho = Reweighting::uniform(&t, 0.0).unwrap();
    let c = curvature_bound_estimate(
        &data,
        &rho,
        1.0,
        &CurvatureProbe {
            probes: 500,
            seed: 1,
            margin: 0.1,
        },
    )
    .unwrap();
    assert!(c.is_finite() && c > 0.0);
}
