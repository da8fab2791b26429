//! Small helpers shared by unit tests, integration tests, and benches.

use rand::Rng;

use crate::network::{Matrix, Network, NetworkSpec};

/// Network with weights drawn uniformly from [-1, 1].
pub fn random_network<R: Rng>(spec: NetworkSpec, rng: &mut R) -> Network {
    random_network_in(spec, -1.0, 1.0, rng)
}

/// Network with weights drawn uniformly from [lo, hi].
pub fn random_network_in<R: Rng>(spec: NetworkSpec, lo: f64, hi: f64, rng: &mut R) -> Network {
    let weights = (0..spec.depth)
        .map(|l| {
            let (r, c) = spec.weight_shape(l);
            let data = (0..r * c).map(|_| rng.random_range(lo..hi)).collect();
            Matrix::from_vec(r, c, data).unwrap()
        })
        .collect();
    Network::new(spec, weights).unwrap()
}

/// Vector with entries uniform in [-1, 1].
pub fn random_vector<R: Rng>(len: usize, rng: &mut R) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Relative error with a floor on the scale.
pub fn rel_err(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs()).max(1e-30);
    (a - b).abs() / scale
}
