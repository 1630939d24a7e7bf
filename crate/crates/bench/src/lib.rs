//! Shared fixtures for the geofield benchmarks.

use geofield::{FieldSpec, GaussianCovariogram, Observations, Site};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

/// Standard benchmark covariogram.
pub fn bench_model() -> GaussianCovariogram {
    GaussianCovariogram::new(0.5, 2.0, 1.5).unwrap()
}

/// Scattered sites with a minimum separation, deterministic in `seed`.
pub fn bench_sites(n: usize, extent: f64, seed: u64) -> Vec<Site> {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut sites: Vec<Site> = Vec::with_capacity(n);
    while sites.len() < n {
        let s = Site::new(
            rng.random_range(0.0..extent),
            rng.random_range(0.0..extent),
        )
        .unwrap();
        if sites.iter().all(|t| t.distance_to(&s) > 0.02 * extent) {
            sites.push(s);
        }
    }
    sites
}

/// A simulated field over scattered sites.
pub fn bench_observations(n: usize, seed: u64) -> Observations {
    let sites = bench_sites(n, 10.0, seed);
    geofield::simulate_field(
        &FieldSpec {
            model: bench_model(),
            trend: None,
            seed,
        },
        &sites,
    )
    .unwrap()
}
