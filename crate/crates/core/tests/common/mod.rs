#![allow(dead_code)]

use platoon_risk::graph::Edge;
use platoon_risk::{platoon_stable, spectral_decomposition, CommGraph, PlatoonParams, Spectrum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random spanning tree plus extra edges with probability `p`.
pub fn random_connected_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, w: (f64, f64)) -> CommGraph {
    let mut edges = Vec::new();
    let mut present = vec![vec![false; n + 1]; n + 1];
    for v in 2..=n {
        let u = rng.random_range(1..v);
        edges.push(Edge { i: u, j: v, w: rng.random_range(w.0..=w.1) });
        present[u][v] = true;
    }
    for i in 1..=n {
        for j in i + 1..=n {
            if !present[i][j] && rng.random::<f64>() < p {
                edges.push(Edge { i, j, w: rng.random_range(w.0..=w.1) });
            }
        }
    }
    CommGraph::from_edges(n, &edges).expect("spanning tree keeps the graph connected")
}

pub struct Scenario {
    pub graph: CommGraph,
    pub spectrum: Spectrum,
    pub params: PlatoonParams,
}

/// A random stable platoon whose distance standard deviations are of order
/// `target_std`.
pub fn random_stable_scenario(rng: &mut ChaCha8Rng, n_max: usize, target_std: f64) -> Scenario {
    loop {
        let n = rng.random_range(3..=n_max);
        let p = rng.random_range(0.0..0.7);
        let graph = random_connected_graph(rng, n, p, (0.3, 2.0));
        let spectrum = spectral_decomposition(&graph.laplacian()).unwrap();
        let tau = rng.random_range(0.01..0.2);
        let beta = rng.random_range(0.3..3.0);
        if !platoon_stable(&spectrum, tau, beta).stable {
            continue;
        }
        let mut params = PlatoonParams::uniform(n, tau, beta, 2.0, 1.1, 0.1, 1.0);
        let law = platoon_risk::distance_covariance(&spectrum, &params).unwrap();
        let mean_std = (1..n).map(|i| law.std_dev(i)).sum::<f64>() / (n - 1) as f64;
        params.g = vec![target_std / mean_std; n];
        return Scenario { graph, spectrum, params };
    }
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
