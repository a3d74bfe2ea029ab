//! Seeded randomness for the solver and the verification campaigns.
//!
//! Every random stream is a ChaCha8 generator keyed by a root seed with the
//! sample index as stream id, so any single sample can be regenerated in
//! isolation from `(root_seed, index)`.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use crate::measures::{Density, WeightedSpace};

/// Generator for sample `index` under `root_seed`.
pub fn sample_rng(root_seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(root_seed);
    rng.set_stream(index);
    rng
}

/// Flat Dirichlet(1, …, 1) weights of length `k`.
pub fn dirichlet_weights<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (0..k).map(|_| rng.sample::<f64, _>(Exp1)).collect();
    let s: f64 = g.iter().sum();
    if s > 0.0 {
        g.iter_mut().for_each(|x| *x /= s);
    } else {
        g = vec![1.0 / k as f64; k];
    }
    g
}

/// Random probability density: masses `(1-floor)·Dirichlet(1) + floor·uniform`.
/// A positive `floor` keeps every atom at mass ≥ `floor/n`.
pub fn random_density<R: Rng + ?Sized>(rng: &mut R, space: &Arc<WeightedSpace>, floor: f64) -> Density {
    let n = space.len();
    let masses = dirichlet_weights(rng, n);
    let w = space.mu_weights();
    let values = masses.iter().zip(w).map(|(m, wi)| ((1.0 - floor) * m + floor / n as f64) / wi).collect();
    Density::from_parts_unchecked(space.clone(), values)
}

/// Uniform integer in `lo..=hi`.
pub fn uniform_usize<R: Rng + ?Sized>(rng: &mut R, lo: usize, hi: usize) -> usize {
    rng.random_range(lo..=hi)
}
