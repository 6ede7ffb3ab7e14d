use mle_struct::map::{
    brute_force_local_lp, brute_force_map, brute_force_minimize, linear_minimize,
    min_cost_assignment, solve_bipartite_matching, solve_general_perfect_matching,
};
use mle_struct::model::{FeatureMap, Structure, StructuredModel, Topology};
use mle_struct::Matrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> Matrix {
    Matrix::from_fn(n, n, |_, _| rng.gen_range(-3.0..3.0))
}

#[test]
fn assignment_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for trial in 0..200 {
        let n = 1 + trial % 7;
        let c = random_matrix(&mut rng, n);
        let (_, value) = min_cost_assignment(&c).unwrap();
        let t = Topology::bipartite(n).unwrap();
        let brute = brute_force_minimize(&t, c.as_slice()).unwrap();
        assert!(
            (value - brute.objective).abs() < 1e-9,
            "n={n}: {value} vs {}",
            brute.objective
        );
    }
}

#[test]
fn integer_assignment_ties_are_lexicographic() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let n = 5;
        let c = Matrix::from_fn(n, n, |_, _| rng.gen_range(0..3) as f64);
        let t = Topology::bipartite(n).unwrap();
        let brute = brute_force_minimize(&t, c.as_slice()).unwrap();
        let sol = linear_minimize(&t, c.as_slice()).unwrap();
        assert_eq!(sol.coords, brute.coords);
    }
}

#[test]
fn bipartite_map_matches_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = Arc::new(Topology::bipartite(5).unwrap());
    for _ in 0..200 {
        let fs = [random_matrix(&mut rng, 5), random_matrix(&mut rng, 5)];
        let model =
            StructuredModel::new(t.clone(), Arc::new(FeatureMap::bipartite(&t, &fs).unwrap()))
                .unwrap();
        let theta = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
        let brute = brute_force_map(&model, &theta).unwrap();
        let w = mle_struct::model::edge_weight_matrix(&model, &theta).unwrap();
        let fast = solve_bipartite_matching(&w, true).unwrap();
        assert!((fast.objective - brute.objective).abs() < 1e-9);
    }
}

#[test]
fn general_matching_matches_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let n = 8;
        let mut edges = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                if rng.gen_bool(0.6) {
                    edges.push((i, j));
                }
            }
        }
        let Ok(t) = Topology::general_matching(n, &edges) else {
            continue;
        };
        let w: Vec<f64> = (0..t.num_edges())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        let sol = solve_general_perfect_matching(&t, &w).unwrap();
        let neg: Vec<f64> = w.iter().map(|x| -x).collect();
        let brute = brute_force_minimize(&t, &neg).unwrap();
        assert!((sol.objective + brute.objective).abs() < 1e-9);
    }
}

fn random_grid_costs(rng: &mut ChaCha8Rng, t: &Topology, submodular: bool) -> Vec<f64> {
    let mut g: Vec<f64> = (0..t.num_coords())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    if submodular {
        for e in 0..t.num_edges() {
            let b = t.edge_coord(e, 0, 0);
            // a + d <= b + c
            let excess = g[b] + g[b + 3] - g[b + 1] - g[b + 2];
            if excess > 0.0 {
                g[b + 1] += excess;
            }
        }
    }
    g
}

#[test]
fn pairwise_lp_matches_enumerated_lp() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let t = Topology::grid(3, 3).unwrap();
    for _ in 0..200 {
        let g = random_grid_costs(&mut rng, &t, false);
        let lp = linear_minimize(&t, &g).unwrap();
        let brute_lp = brute_force_local_lp(&t, &g).unwrap();
        let integral = brute_force_minimize(&t, &g).unwrap();
        assert!((lp.objective - brute_lp.objective).abs() < 1e-9);
        assert!(lp.objective <= integral.objective + 1e-9);
        if lp.is_integral() {
            assert!((lp.objective - integral.objective).abs() < 1e-9);
        }
        assert!(lp.coords.iter().all(|&x| x == 0.0 || x == 0.5 || x == 1.0));
    }
}

#[test]
fn submodular_lp_is_persistent() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let t = Topology::grid(3, 3).unwrap();
    for _ in 0..200 {
        let g = random_grid_costs(&mut rng, &t, true);
        let lp = linear_minimize(&t, &g).unwrap();
        let integral = brute_force_minimize(&t, &g).unwrap();
        assert!((lp.objective - integral.objective).abs() < 1e-9);
        for n in 0..t.num_nodes() {
            let x = lp.coords[2 * n + 1];
            if x != 0.5 {
                assert_eq!(x, integral.coords[2 * n + 1]);
            }
        }
    }
}

#[test]
fn linear_minimization_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let grid = Topology::grid(3, 3).unwrap();
    let bip = Topology::bipartite(6).unwrap();
    for t in [&grid, &bip] {
        let g: Vec<f64> = (0..t.num_coords())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let s = linear_minimize(t, &g).unwrap();
        for _ in 0..1000 {
            let v = match t.grid_shape() {
                Some(_) => Structure::Labels((0..9).map(|_| rng.gen_range(0..2)).collect()),
                None => {
                    let mut p: Vec<usize> = (0..6).collect();
                    for i in (1..6).rev() {
                        p.swap(i, rng.gen_range(0..=i));
                    }
                    Structure::Permutation(p)
                }
            };
            let y = v.indicator(t).unwrap();
            let val: f64 = y.iter().zip(&g).map(|(a, b)| a * b).sum();
            assert!(s.objective <= val + 1e-9);
        }
    }
}
