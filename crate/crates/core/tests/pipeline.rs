//! Cross-module integration: the full detrend -> variogram -> predict
//! pipeline on simulated data, agreement of the three prediction routes, and
//! the concurrency contract of fitted objects.

use approx::assert_abs_diff_eq;
use geofield::{
    assemble_system, bin_to_table, detrend, fit_tps, median_polish, retrend, simulate_field,
    DriftBasis, FieldSpec, GaussianCovariogram, Grid, MedianPolishFit, Observations, Site,
    TpsFit,
};
use rand::prelude::*;
use rand_chacha::ChaCha12Rng;

fn scattered(rng: &mut ChaCha12Rng, n: usize, extent: f64) -> Vec<Site> {
    let mut sites: Vec<Site> = Vec::new();
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

#[test]
fn three_prediction_routes_agree_on_simulated_field() {
    let model = GaussianCovariogram::new(0.3, 2.5, 1.5).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(101);
    let sites = scattered(&mut rng, 40, 8.0);
    let obs = simulate_field(
        &FieldSpec {
            model,
            trend: None,
            seed: 5,
        },
        &sites,
    )
    .unwrap();
    let sys = assemble_system(&obs, model, DriftBasis::Linear).unwrap();
    let dual = sys.fit_dual();
    let scale = obs.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for _ in 0..50 {
        let t0 = Site::new(rng.random_range(0.0..8.0), rng.random_range(0.0..8.0)).unwrap();
        let primal = sys.predict_primal(&t0).unwrap();
        let bordered = sys.predict_bordered(&t0);
        let d = dual.predict(&t0);
        let denom = primal.value.abs().max(scale);
        assert!((primal.value - d).abs() <= 1e-9 * denom);
        assert!((primal.value - bordered.value).abs() <= 1e-9 * denom);
        assert!((primal.variance - bordered.variance).abs() <= 1e-9 * model.sill());
    }
}

#[test]
fn detrended_pipeline_recovers_trended_field() {
    // Simulated stationary field plus a strong additive trend; after median
    // polish the kriging grid predictions, re-trended, should sit near the
    // data values at the data sites (zero nugget branch).
    let model = GaussianCovariogram::new(0.0, 1.5, 1.2).unwrap();
    let sites = Grid::new(0.0, 6.0, 0.0, 6.0, 7, 7).unwrap().sites();
    let base = simulate_field(
        &FieldSpec {
            model,
            trend: None,
            seed: 9,
        },
        &sites,
    )
    .unwrap();
    let trended = base
        .with_values(
            (0..base.len())
                .map(|k| base.value(k) + 2.0 + 1.5 * base.site(k).x() - 0.8 * base.site(k).y())
                .collect(),
        )
        .unwrap();

    let (table, _) = bin_to_table(&trended, 4, 4).unwrap();
    let fit = median_polish(&table, 1e-6, 100).unwrap();
    let residual = detrend(&trended, &fit).unwrap();

    let sys = assemble_system(&residual, model, DriftBasis::Constant).unwrap();
    for j in (0..trended.len()).step_by(5) {
        let t = trended.site(j);
        let predicted = retrend(sys.predict_primal(t).unwrap().value, t, &fit);
        assert_abs_diff_eq!(predicted, trended.value(j), epsilon = 1e-6);
    }
}

#[test]
fn fitted_objects_are_shareable_across_threads() {
    fn assert_sync<T: Send + Sync>() {}
    assert_sync::<Observations>();
    assert_sync::<GaussianCovariogram>();
    assert_sync::<geofield::KrigingSystem<GaussianCovariogram>>();
    assert_sync::<TpsFit>();
    assert_sync::<MedianPolishFit>();

    let model = GaussianCovariogram::new(0.4, 2.0, 1.0).unwrap();
    let mut rng = ChaCha12Rng::seed_from_u64(103);
    let sites = scattered(&mut rng, 25, 5.0);
    let obs = simulate_field(
        &FieldSpec {
            model,
            trend: None,
            seed: 3,
        },
        &sites,
    )
    .unwrap();
    let sys = assemble_system(&obs, model, DriftBasis::Constant).unwrap();
    let tps = fit_tps(&obs, 0.2).unwrap();
    let targets: Vec<Site> = (0..64)
        .map(|k| Site::new(0.08 * k as f64, 5.0 - 0.07 * k as f64).unwrap())
        .collect();

    // Sequential reference, then the same predictions from worker threads.
    let want: Vec<(f64, f64)> = targets
        .iter()
        .map(|t| (sys.predict_primal(t).unwrap().value, tps.predict(t)))
        .collect();
    let got: Vec<(f64, f64)> = std::thread::scope(|scope| {
        let handles: Vec<_> = targets
            .chunks(16)
            .map(|chunk| {
                let sys = &sys;
                let tps = &tps;
                scope.spawn(move || {
                    chunk
                        .iter()
                        .map(|t| (sys.predict_primal(t).unwrap().value, tps.predict(t)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().unwrap())
            .collect()
    });
    assert_eq!(want, got);
}
