//! Law checks for the time-changed picture: the clocked GBM behaves as a
//! Brownian motion started at 1 and absorbed at zero.
//!
//! Expected values for the stopped/conditioned moments come from the
//! reflection principle, evaluated by direct quadrature inside the tests;
//! the conditioning of each probe on survival past the probe time is part
//! of the stated estimand.

use gbm_embed::paths::{simulate_gbm_with, time_grid};
use gbm_embed::rng::Stream;
use gbm_embed::stats;
use gbm_embed::timechange::{absorbed_bm, dds_construct, qv_clock, value_at_clock};
use rayon::prelude::*;

fn phi(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// Moments of `W_u` given `min_{s<=u} W_s > -1`, by quadrature of the
/// image-method density `phi_sigma(x) - phi_sigma(x + 2)` on `x > -1`.
fn survivor_moments(u: f64) -> (f64, f64) {
    let sigma = u.sqrt();
    let dens = |x: f64| (phi(x / sigma) - phi((x + 2.0) / sigma)) / sigma;
    let (mut mass, mut m1, mut m2) = (0.0, 0.0, 0.0);
    let n = 400_000;
    let (lo, hi) = (-1.0, 8.0 * sigma);
    let h = (hi - lo) / n as f64;
    for k in 0..n {
        let x = lo + (k as f64 + 0.5) * h;
        let f = dens(x) * h;
        mass += f;
        m1 += x * f;
        m2 += x * x * f;
    }
    let mean = m1 / mass;
    (mean, m2 / mass - mean * mean)
}

/// `E[u ∧ H]` for the hit time `H` of level -1 by standard BM, via the
/// hit-time density `t^{-3/2} phi(1/sqrt(t))`.
fn expected_stopped_time(u: f64) -> f64 {
    let n = 400_000;
    let h = u / n as f64;
    let mut e_hit = 0.0;
    let mut p_hit = 0.0;
    for k in 0..n {
        let t = (k as f64 + 0.5) * h;
        let dens = t.powf(-1.5) * phi(1.0 / t.sqrt());
        e_hit += t * dens * h;
        p_hit += dens * h;
    }
    e_hit + u * (1.0 - p_hit)
}

#[test]
fn absorbed_view_variance_matches_reflection_oracle() {
    let u = 0.25;
    let n = 10_000u64;
    let grid = time_grid(2e-3, 40.0);
    let rows: Vec<(f64, bool)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(880, i);
            let z = simulate_gbm_with(&mut rng, &grid);
            let clock = qv_clock(&z, 1.0);
            let survived = clock.a_infinity_estimate > u;
            let b = absorbed_bm(&z, 1.0, &[u]);
            (b.values[0] - 1.0, survived)
        })
        .collect();

    // Unconditional stopped variance: E[(W_{u ∧ H})^2] = E[u ∧ H].
    let all: Vec<f64> = rows.iter().map(|r| r.0).collect();
    let (mean_all, _) = stats::mean_and_se(&all);
    let var_all =
        all.iter().map(|x| (x - mean_all) * (x - mean_all)).sum::<f64>() / all.len() as f64;
    let expect_all = expected_stopped_time(u);
    assert!(
        (var_all - expect_all).abs() < 0.012,
        "stopped variance {var_all}, oracle {expect_all}"
    );
    assert!((var_all - u).abs() <= 0.02, "stopped variance {var_all} vs clock time {u}");

    // Conditional on surviving past u: reflection-oracle moments.
    let survivors: Vec<f64> = rows.iter().filter(|r| r.1).map(|r| r.0).collect();
    let (mean_s, _) = stats::mean_and_se(&survivors);
    let var_s = survivors.iter().map(|x| (x - mean_s) * (x - mean_s)).sum::<f64>()
        / survivors.len() as f64;
    let (oracle_mean, oracle_var) = survivor_moments(u);
    assert!(
        (mean_s - oracle_mean).abs() < 0.02,
        "survivor mean {mean_s}, oracle {oracle_mean}"
    );
    assert!(
        (var_s - oracle_var).abs() < 0.012,
        "survivor variance {var_s}, oracle {oracle_var}"
    );
}

#[test]
fn clocked_brownian_marginal_is_gaussian() {
    // At a small clock time the survival conditioning is negligible
    // (2 Phi(-1/sqrt(u)) < 1e-3), so the marginal must look Gaussian.
    let u = 0.09;
    let n = 10_000u64;
    let grid = time_grid(2e-3, 40.0);
    let samples: Vec<f64> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = Stream::new(881, i);
            let z = simulate_gbm_with(&mut rng, &grid);
            let (w, _) = dds_construct(&z, 1.0);
            value_at_clock(&w, u).map(|v| v / u.sqrt())
        })
        .collect();
    assert!(samples.len() as f64 > 0.99 * n as f64);
    let ks = stats::ks_against_cdf(&samples, stats::normal_cdf, stats::normal_cdf);
    assert!(ks < 0.02, "ks {ks} over {} survivors", samples.len());
    // The later-time marginal is reported with its conditioning caveat.
    let mid: Vec<f64> = (0..n)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = Stream::new(881, i);
            let z = simulate_gbm_with(&mut rng, &grid);
            let (w, _) = dds_construct(&z, 1.0);
            value_at_clock(&w, 0.5)
        })
        .collect();
    let (mean_mid, se_mid) = stats::mean_and_se(&mid);
    println!(
        "W at clock 0.5 among {} survivors: mean {mean_mid:.4} (se {se_mid:.4}; \
         conditioned on surviving past 0.5)",
        mid.len()
    );
}

#[test]
fn absorption_probability_grows_to_one_with_horizon() {
    let absorbed_frac = |horizon: f64, salt: u64| {
        let grid = time_grid(2e-3, horizon);
        let n = 2_000u64;
        let absorbed = (0..n)
            .into_par_iter()
            .filter(|&i| {
                let mut rng = Stream::new(882 + salt, i);
                let z = simulate_gbm_with(&mut rng, &grid);
                *z.values.last().unwrap() < 1e-6
            })
            .count();
        absorbed as f64 / n as f64
    };
    let short = absorbed_frac(20.0, 0);
    let long = absorbed_frac(80.0, 1);
    assert!(long > short, "short {short}, long {long}");
    assert!(long >= 0.99, "long-horizon absorption {long}");
}
