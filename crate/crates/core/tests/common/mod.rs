#![allow(dead_code)]

use std::sync::Arc;

use mle_struct::map::linear_minimize;
use mle_struct::model::{FeatureMap, Reweighting, Structure, Topology};
use mle_struct::{init_pseudomarginals, Dataset, Matrix, Pseudomarginals};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn random_vertex(rng: &mut ChaCha8Rng, t: &Topology) -> Vec<f64> {
    let g: Vec<f64> = (0..t.num_coords())
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();
    linear_minimize(t, &g).unwrap().coords
}

/// The interior start pulled towards a few random vertices; keeps at least 1/8 of the
/// start's weight.
pub fn random_interior(rng: &mut ChaCha8Rng, t: &Topology) -> Pseudomarginals {
    let mut tau = init_pseudomarginals(t).unwrap();
    for _ in 0..3 {
        let v = random_vertex(rng, t);
        tau.step_towards(&v, rng.gen_range(0.0..0.5));
    }
    tau
}

pub fn random_rho(rng: &mut ChaCha8Rng, t: &Topology) -> Reweighting {
    Reweighting::new(
        (0..t.reweighting_len())
            .map(|_| rng.gen_range(0.0..1.0))
            .collect(),
    )
    .unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.gen_range(-1.0..1.0))
}

/// Grid samples with per-sample random features (C = 2, D = 2) and random labels.
pub fn grid_dataset(rng: &mut ChaCha8Rng, rows: usize, cols: usize, m: usize) -> Dataset {
    let t = Arc::new(Topology::grid(rows, cols).unwrap());
    let samples = (0..m)
        .map(|_| {
            let node = random_matrix(rng, t.num_nodes(), 2);
            let edge = random_matrix(rng, t.num_edges(), 2);
            let f = Arc::new(FeatureMap::grid(&t, node, edge).unwrap());
            let labels = (0..t.num_nodes()).map(|_| rng.gen_range(0..2u8)).collect();
            (f, Structure::Labels(labels))
        })
        .collect();
    Dataset::new(t, samples).unwrap()
}

/// Bipartite samples with per-sample random feature matrices and random permutations.
pub fn bipartite_dataset(rng: &mut ChaCha8Rng, n: usize, k: usize, m: usize) -> Dataset {
    let t = Arc::new(Topology::bipartite(n).unwrap());
    let samples = (0..m)
        .map(|_| {
            let mats: Vec<Matrix> = (0..k).map(|_| random_matrix(rng, n, n)).collect();
            let f = Arc::new(FeatureMap::bipartite(&t, &mats).unwrap());
            let y = Structure::from_vertex(&t, &random_vertex(rng, &t)).unwrap();
            (f, y)
        })
        .collect();
    Dataset::new(t, samples).unwrap()
}

/// Perfect matchings of a six-vertex graph with random symmetric features.
pub fn general_dataset(rng: &mut ChaCha8Rng, m: usize) -> Dataset {
    let edges = [
        (0, 1),
        (0, 2),
        (0, 3),
        (1, 2),
        (1, 3),
        (2, 3),
        (3, 4),
        (4, 5),
        (2, 5),
        (1, 5),
        (0, 4),
    ];
    let t = Arc::new(Topology::general_matching(6, &edges).unwrap());
    let samples = (0..m)
        .map(|_| {
            let mats: Vec<Matrix> = (0..2)
                .map(|_| {
                    let a = random_matrix(rng, 6, 6);
                    Matrix::from_fn(6, 6, |i, j| a[(i, j)] + a[(j, i)])
                })
                .collect();
            let f = Arc::new(FeatureMap::general(&t, &mats).unwrap());
            let y = Structure::from_vertex(&t, &random_vertex(rng, &t)).unwrap();
            (f, y)
        })
        .collect();
    Dataset::new(t, samples).unwrap()
}

pub fn flatten(taus: &[Pseudomarginals]) -> Vec<f64> {
    taus.iter()
        .flat_map(|t| t.values().iter().copied())
        .collect()
}

pub fn unflatten(x: &[f64], m: usize) -> Vec<Pseudomarginals> {
    let n = x.len() / m;
    x.chunks(n)
        .map(|c| Pseudomarginals::new(c.to_vec()))
        .collect()
}
