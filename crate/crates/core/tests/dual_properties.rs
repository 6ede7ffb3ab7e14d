mod common;

use common::*;
use mle_struct::dual::{
    dual_objective, entropies, grad_dual, residual, saddle_value, theta_star, update_gram_residual,
    GramCache,
};
use mle_struct::entropy::{entropy_gradient, MatchingGraph};
use mle_struct::fw::{fw_learn, ExactOracle, FWConfig, StepRule};
use mle_struct::map::linear_minimize;
use mle_struct::model::{Reweighting, Topology};
use mle_struct::Pseudomarginals;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SLACK: f64 = 1e-10;

fn midpoint(a: &[Pseudomarginals], b: &[Pseudomarginals]) -> Vec<Pseudomarginals> {
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let mut p = x.clone();
            p.step_towards(y.values(), 0.5);
            p
        })
        .collect()
}

#[test]
fn free_energy_is_convex_on_sub_matchings() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let edges = [
        (0, 3),
        (0, 4),
        (1, 3),
        (1, 4),
        (1, 5),
        (2, 4),
        (2, 5),
        (0, 5),
    ];
    let g = MatchingGraph::imperfect(6, &edges);
    // vertices of T' are the matchings, including partial and empty ones
    let point = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut x = vec![0.0; edges.len()];
        let mut left = 1.0;
        for _ in 0..4 {
            let w = rng.gen_range(0.0..left);
            left -= w;
            let mut used = [false; 6];
            for (e, &(i, j)) in edges.iter().enumerate() {
                if !used[i] && !used[j] && rng.gen_bool(0.5) {
                    used[i] = true;
                    used[j] = true;
                    x[e] += w;
                }
            }
        }
        x
    };
    for _ in 0..100 {
        let rho: Vec<f64> = (0..6).map(|_| rng.gen_range(0.0..=1.0)).collect();
        let w: Vec<f64> = (0..edges.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = |x: &[f64]| {
            -x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - g.entropy(x, &rho).unwrap()
        };
        let (a, b) = (point(&mut rng), point(&mut rng));
        let m: Vec<f64> = a.iter().zip(&b).map(|(x, y)| 0.5 * (x + y)).collect();
        assert!(f(&m) <= 0.5 * (f(&a) + f(&b)) + SLACK);
    }
}

#[test]
fn dual_objective_is_convex() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for trial in 0..100 {
        let data = match trial % 3 {
            0 => bipartite_dataset(&mut rng, 4, 2, 3),
            1 => general_dataset(&mut rng, 3),
            _ => grid_dataset(&mut rng, 1, 4, 3),
        };
        let t = data.topology();
        // on the chain every edge is a bridge, so any ρ in [0, 1] stays concave
        let rho = random_rho(&mut rng, t);
        let lambda = rng.gen_range(0.1..5.0);
        let a: Vec<Pseudomarginals> = (0..3).map(|_| random_interior(&mut rng, t)).collect();
        let b: Vec<Pseudomarginals> = (0..3).map(|_| random_interior(&mut rng, t)).collect();
        let l = |x: &[Pseudomarginals]| dual_objective(&data, x, lambda, &rho).unwrap();
        assert!(l(&midpoint(&a, &b)) <= 0.5 * (l(&a) + l(&b)) + SLACK);
    }
}

#[test]
fn observed_points_give_zero_parameters() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let data = bipartite_dataset(&mut rng, 4, 3, 5);
    let taus: Vec<Pseudomarginals> = data
        .samples()
        .iter()
        .map(|s| Pseudomarginals::new(s.observed().to_vec()))
        .collect();
    assert!(theta_star(&data, &taus, 1.0)
        .unwrap()
        .theta
        .iter()
        .all(|&x| x == 0.0));
    let rho = Reweighting::uniform(data.topology(), 0.5).unwrap();
    assert_eq!(dual_objective(&data, &taus, 1.0, &rho).unwrap(), 0.0);
}

#[test]
fn doubling_lambda_halves_theta() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let data = grid_dataset(&mut rng, 2, 2, 3);
    let taus: Vec<Pseudomarginals> = (0..3)
        .map(|_| random_interior(&mut rng, data.topology()))
        .collect();
    let a = theta_star(&data, &taus, 1.3).unwrap().theta;
    let b = theta_star(&data, &taus, 2.6).unwrap().theta;
    for (x, y) in a.iter().zip(&b) {
        assert!((x - 2.0 * y).abs() < 1e-14);
    }
}

#[test]
fn objective_equals_saddle_at_theta_star() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for data in [
        bipartite_dataset(&mut rng, 3, 2, 4),
        general_dataset(&mut rng, 2),
        grid_dataset(&mut rng, 2, 2, 2),
    ] {
        let t = data.topology();
        let rho = random_rho(&mut rng, t);
        let taus: Vec<Pseudomarginals> = (0..data.len())
            .map(|_| random_interior(&mut rng, t))
            .collect();
        let theta = theta_star(&data, &taus, 0.8).unwrap().theta;
        let direct = saddle_value(&data, &taus, &theta, 0.8, &rho).unwrap();
        let l = dual_objective(&data, &taus, 0.8, &rho).unwrap();
        assert!((direct - l).abs() < 1e-10 * l.abs().max(1.0));
        // brute-force evaluation from the definition
        let r = residual(&data, &taus).unwrap();
        let h: f64 = entropies(&data, &taus, &rho).unwrap().iter().sum();
        let by_hand = r.iter().map(|x| x * x).sum::<f64>() / (2.0 * 0.8) - h;
        assert!((by_hand - l).abs() < 1e-10 * l.abs().max(1.0));
    }
}

#[test]
fn block_update_matches_recompute_and_drift_stays_small() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let data = bipartite_dataset(&mut rng, 4, 3, 6);
    let t = data.topology();
    let mut taus: Vec<Pseudomarginals> = (0..6).map(|_| random_interior(&mut rng, t)).collect();
    let mut cache = GramCache::new(&data, &taus)
        .unwrap()
        .with_refresh_interval(usize::MAX);
    for k in 0..1000 {
        let m = rng.gen_range(0..6);
        let old = taus[m].values().to_vec();
        let s = random_vertex(&mut rng, t);
        taus[m].step_towards(&s, rng.gen_range(0.0..0.3));
        update_gram_residual(&mut cache, &data, &taus, m, &old).unwrap();
        if k == 0 {
            let fresh = residual(&data, &taus).unwrap();
            for (a, b) in cache.residual().iter().zip(&fresh) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
    assert!(cache.drift(&data, &taus).unwrap() < 1e-8);
    assert!(cache.refresh(&data, &taus).unwrap() < 1e-8);
    assert_eq!(cache.drift(&data, &taus).unwrap(), 0.0);
}

#[test]
fn heavy_regularisation_leaves_the_entropy_gradient() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let data = grid_dataset(&mut rng, 2, 3, 2);
    let t = data.topology();
    let rho = random_rho(&mut rng, t);
    let taus: Vec<Pseudomarginals> = (0..2).map(|_| random_interior(&mut rng, t)).collect();
    let cache = GramCache::new(&data, &taus).unwrap();
    let g = grad_dual(&data, &taus, 1e12, &rho, &cache).unwrap();
    for (gm, tau) in g.iter().zip(&taus) {
        let h = entropy_gradient(t, tau.values(), &rho).unwrap();
        for (a, b) in gm.iter().zip(&h) {
            assert!((a + b).abs() < 1e-9);
        }
    }
}

#[test]
fn optimum_has_zero_sample_gaps() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let data = bipartite_dataset(&mut rng, 3, 2, 3);
    let rho = Reweighting::uniform(data.topology(), 1.0).unwrap();
    let cfg = FWConfig {
        step_rule: StepRule::LineSearch,
        gap_tol: 1e-11,
        max_iters: 200_000,
        ..FWConfig::default()
    };
    let r = fw_learn(&data, &rho, 1.0, &cfg, &ExactOracle).unwrap();
    assert!(r.converged);
    let cache = GramCache::new(&data, &r.taus).unwrap();
    let g = grad_dual(&data, &r.taus, 1.0, &rho, &cache).unwrap();
    for (gm, tau) in g.iter().zip(&r.taus) {
        let s = linear_minimize(data.topology(), gm).unwrap();
        let gap: f64 = tau
            .values()
            .iter()
            .zip(&s.coords)
            .zip(gm)
            .map(|((x, y), g)| (x - y) * g)
            .sum();
        assert!(gap <= 1e-11);
    }
}

#[test]
fn uniform_matching_gradient_is_symmetric() {
    let t = Topology::bipartite(5).unwrap();
    let tau = vec![0.2; 25];
    let g = entropy_gradient(&t, &tau, &Reweighting::uniform(&t, 0.7).unwrap()).unwrap();
    assert!(g.iter().all(|x| (x - g[0]).abs() < 1e-12));
}
