//! The quadratic-variation clock and the resulting Brownian picture of a
//! GBM embedding.
//!
//! For a GBM path `Z` and a scale `c > 0`, the clock is the left-rule
//! integral `A_t = c^2 ∫_0^t Z_r^2 dr`. Its right-continuous inverse
//! `tau_u = inf{r : A_r > u}` time-changes `cZ` into a Brownian motion
//! started at `c` and absorbed at zero, and the path `W` defined at clock
//! times by `W_{A_t} = c (Z_t - 1)` satisfies `c + W_{A_t} = c Z_t`
//! identically. Pushing a chain embedding with stopping times `sigma_k`
//! through the clock yields Brownian stopping times `T_k = A_{sigma_k}`
//! bounded by the hit time of `-c`, which is what makes them minimal.

use rayon::prelude::*;
use serde::Serialize;

use crate::chain::{ChainSpec, ChainTree, EmbedTables};
use crate::error::{Error, Result};
use crate::paths::{first_exit_with_qv, ExitSide, PathConfig, PathKind, SamplePath};
use crate::rng::Stream;
use crate::stats;

/// A nondecreasing clock path with its terminal estimate.
#[derive(Debug, Clone)]
pub struct ClockPath {
    pub path: SamplePath,
    /// Final clock value; a genuine estimate of the total clock only when
    /// the underlying path has decayed to negligible levels.
    pub a_infinity_estimate: f64,
    /// Crude remaining-integral hint `c^2 Z_end^2`, reported as a
    /// diagnostic only.
    pub a_tail_hint: f64,
    pub scale_c: f64,
}

/// Left-endpoint Riemann clock `A_t = c^2 ∫_0^t Z^2 dr` on the grid of `z`.
///
/// The left rule keeps each clock value measurable with respect to the
/// path's past; the base sum is scaled by `c^2` at the end so the clock is
/// exactly homogeneous of degree two in `c`.
pub fn qv_clock(z: &SamplePath, c: f64) -> ClockPath {
    assert!(z.kind == PathKind::Gbm, "clock expects a GBM path");
    assert!(c > 0.0, "scale must be positive");
    let c2 = c * c;
    let mut values = Vec::with_capacity(z.len());
    let mut base = 0.0;
    values.push(0.0);
    for k in 1..z.len() {
        let dt = z.grid[k] - z.grid[k - 1];
        let v = z.values[k - 1];
        base += v * v * dt;
        values.push(c2 * base);
    }
    let a_end = *values.last().unwrap();
    let z_end = *z.values.last().unwrap();
    ClockPath {
        path: SamplePath {
            grid: z.grid.clone(),
            values,
            kind: PathKind::Clock,
            absorbed_from: z.absorbed_from,
        },
        a_infinity_estimate: a_end,
        a_tail_hint: c2 * z_end * z_end,
        scale_c: c,
    }
}

/// Right-continuous inverse of the clock: the smallest grid time with
/// `A > u`, or `+inf` once the clock is exhausted.
pub fn invert_clock(a: &ClockPath, u: f64) -> f64 {
    debug_assert!(u >= 0.0);
    match a.path.values.iter().position(|&v| v > u) {
        Some(i) => a.path.grid[i],
        None => f64::INFINITY,
    }
}

/// The time-changed path `u -> c Z_{tau_u}` on `u_grid`: a Brownian motion
/// started at `c` and absorbed at zero. The underlying value is frozen at
/// its last grid point once the clock is exhausted, and `u = 0` maps to the
/// start of the path.
pub fn absorbed_bm(z: &SamplePath, c: f64, u_grid: &[f64]) -> SamplePath {
    assert!(z.kind == PathKind::Gbm, "absorbed view expects a GBM path");
    let clock = qv_clock(z, c);
    let values = u_grid
        .iter()
        .map(|&u| {
            if u == 0.0 {
                return c * z.values[0];
            }
            let t = invert_clock(&clock, u);
            if t.is_finite() {
                let i = z.grid.partition_point(|&g| g < t).min(z.len() - 1);
                c * z.values[i]
            } else {
                c * z.values[z.len() - 1]
            }
        })
        .collect();
    SamplePath { grid: u_grid.to_vec(), values, kind: PathKind::Bm, absorbed_from: None }
}

/// Brownian path read off the clock grid: `W` at clock time `A_{t_i}` is
/// `c (Z_{t_i} - 1)`, so `c + W_{A_t} = c Z_t` holds at every grid point.
///
/// Returns the path and the largest absolute residual of that identity,
/// evaluated after cancelling the additive `c` (the only form in which the
/// identity is a single rounding of itself, hence exactly zero).
pub fn dds_construct(z: &SamplePath, c: f64) -> (SamplePath, f64) {
    let clock = qv_clock(z, c);
    let w_values: Vec<f64> = z.values.iter().map(|&v| c * (v - 1.0)).collect();
    let residual = z
        .values
        .iter()
        .zip(&w_values)
        .map(|(&v, &w)| (c * (v - 1.0) - w).abs())
        .fold(0.0, f64::max);
    let w = SamplePath {
        grid: clock.path.values.clone(),
        values: w_values,
        kind: PathKind::Bm,
        absorbed_from: z.absorbed_from,
    };
    (w, residual)
}

/// Value of a clock-gridded path at clock time `u`, by last-grid-point
/// lookup; `None` once `u` reaches the end of the clock.
pub fn value_at_clock(w: &SamplePath, u: f64) -> Option<f64> {
    if u > *w.grid.last()? {
        return None;
    }
    let i = w.grid.partition_point(|&g| g <= u);
    Some(w.values[i.saturating_sub(1).min(w.values.len() - 1)])
}

/// One replica of the chain-through-the-clock construction.
#[derive(Debug, Clone)]
pub struct TimechangeSample {
    /// Brownian-time stopping times `T_k = A_{sigma_k}`.
    pub t: Vec<f64>,
    /// Hit time of `-c` by `W`, detected at the absorption threshold of the
    /// underlying GBM; infinite when the replica was censored.
    pub h_hit: f64,
    /// `W_{T_k}`, which equals the original chain values along the replica.
    pub w_at_t: Vec<f64>,
    pub bound_ok: bool,
    pub censored: bool,
}

/// Aggregate report: the bound `T_k <= H` must hold in every replica.
#[derive(Debug, Clone, Serialize)]
pub struct TimechangeReport {
    pub replicas: usize,
    pub censored: usize,
    pub bound_violations: usize,
    /// KS distance of the realized `W_{T_1}` marginal from the chain's
    /// step-1 law (skipped for depth-0 chains).
    pub ks_w_t1: Option<f64>,
    pub pass: bool,
    pub ks_threshold: f64,
}

/// Embed a supermartingale chain bounded below by `-c` with mean at most 0,
/// via the shifted nonnegative chain `x/c + 1`, and push the stopping times
/// through the quadratic-variation clock.
///
/// Per replica: the shifted chain is embedded pathwise in a GBM while the
/// clock accumulates; `T_k` is the clock value at the chain's k-th stopping
/// time; after the chain completes, the path runs to absorption so that the
/// clock's final value realizes the hit time `H` of `-c` by `W`. The bound
/// `T_k <= H` then holds pathwise, and `W_{T_k}` reproduces the original
/// chain values.
pub fn embed_and_bound(
    tree: &ChainTree,
    c: f64,
    seed: u64,
    n: usize,
    cfg: &PathConfig,
) -> Result<Vec<TimechangeSample>> {
    if !(c > 0.0) {
        return Err(Error::Domain { op: "embed_and_bound", detail: "c must be positive".into() });
    }
    let min = tree.min_value();
    if min < -c {
        return Err(Error::Domain {
            op: "embed_and_bound",
            detail: format!("chain takes value {min} below -c = {}", -c),
        });
    }
    // Shifted chain x -> x/c + 1; the validated spec checks mean <= 1,
    // i.e. the original mean is at most 0. Original values ride along for
    // exact recovery of W at the stopping times.
    let shifted = tree.map_values(&|x| x / c + 1.0);
    let spec = ChainSpec::new(&shifted)?;
    let tables = EmbedTables::new(&spec)?;
    let original = original_values_by_node(&spec, c);
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, i);
            replica(&spec, &tables, &original, c, &mut rng, cfg)
        })
        .collect()
}

/// Map each shifted node to its original chain value `c (v - 1)`, recovered
/// from the shifted value so `W_{T_k}` is aligned with the clock identity.
fn original_values_by_node(spec: &ChainSpec, c: f64) -> Vec<f64> {
    (0..spec.node_count()).map(|i| c * (spec.node_value(i) - 1.0)).collect()
}

fn replica(
    spec: &ChainSpec,
    tables: &EmbedTables,
    original: &[f64],
    c: f64,
    rng: &mut Stream,
    cfg: &PathConfig,
) -> Result<TimechangeSample> {
    let c2 = c * c;
    let mut clock = 0.0;
    let mut t = Vec::with_capacity(spec.depth() + 1);
    let mut w_at_t = Vec::with_capacity(spec.depth() + 1);
    let mut censored = false;

    // Root step, absolute from 1.
    let r0 = rng.uniform();
    let b0 = tables.root_calc.barrier_pair(r0)?;
    let (ev, qv) = first_exit_with_qv(rng, 1.0, b0.alpha, b0.beta, cfg);
    clock += c2 * qv;
    censored |= ev.side == ExitSide::Censored;
    let atoms = tables.root_calc.dist().atoms().expect("root law is discrete");
    let idx = nearest(&atoms, ev.value);
    let mut node = tables.root_ids[idx];
    let mut y = spec.node_value(node);
    let mut absorbed_clock: Option<f64> = if y == 0.0 { Some(clock) } else { None };
    t.push(clock);
    w_at_t.push(original[node]);

    for _ in 0..spec.depth() {
        let (calc, ids) = match tables.step[node].as_ref() {
            Some(s) => s,
            None => break,
        };
        if y == 0.0 {
            node = ids[0];
            t.push(absorbed_clock.unwrap_or(clock));
            w_at_t.push(original[node]);
            continue;
        }
        let r = rng.uniform();
        let b = calc.barrier_pair(r)?;
        let mut local = *cfg;
        local.absorption_threshold = (cfg.absorption_threshold / y).min(0.5);
        let (ev, qv_rel) = first_exit_with_qv(rng, 1.0, b.alpha, b.beta, &local);
        clock += c2 * y * y * qv_rel;
        censored |= ev.side == ExitSide::Censored;
        let atoms = calc.dist().atoms().expect("step laws are discrete");
        let idx = nearest(&atoms, ev.value);
        node = ids[idx];
        y = spec.node_value(node);
        if y == 0.0 && absorbed_clock.is_none() {
            absorbed_clock = Some(clock);
        }
        t.push(clock);
        w_at_t.push(original[node]);
    }

    // Run the surviving path to absorption so the clock realizes the hit
    // time of -c by W.
    let h_hit = if let Some(a) = absorbed_clock {
        a
    } else if y > 0.0 {
        let mut local = *cfg;
        local.absorption_threshold = (cfg.absorption_threshold / y).min(0.5);
        let (ev, qv_tail) = first_exit_with_qv(rng, 1.0, 0.0, f64::INFINITY, &local);
        clock += c2 * y * y * qv_tail;
        if ev.side == ExitSide::Censored {
            censored = true;
            f64::INFINITY
        } else {
            clock
        }
    } else {
        clock
    };

    let bound_ok = t.iter().all(|&tk| tk <= h_hit);
    Ok(TimechangeSample { t, h_hit, w_at_t, bound_ok, censored })
}

fn nearest(atoms: &[(f64, f64)], y: f64) -> usize {
    let mut best = 0usize;
    let mut err = f64::INFINITY;
    for (i, &(v, _)) in atoms.iter().enumerate() {
        let d = (v - y).abs();
        if d < err {
            err = d;
            best = i;
        }
    }
    best
}

/// Summarize replicas against the chain's step-1 marginal.
///
/// The reference marginal is derived through the same shift-and-recover
/// float operations that produced `w_at_t`, so a realized value and its
/// atom agree bitwise and the KS distance is purely statistical.
pub fn summarize(
    samples: &[TimechangeSample],
    tree: &ChainTree,
    c: f64,
    ks_threshold: f64,
) -> Result<TimechangeReport> {
    let violations = samples.iter().filter(|s| !s.bound_ok).count();
    let censored = samples.iter().filter(|s| s.censored).count();
    let ks = if samples.iter().any(|s| s.w_at_t.len() > 1) {
        let spec = ChainSpec::new(&tree.map_values(&|x| x / c + 1.0))?;
        let marginal: Vec<(f64, f64)> =
            spec.marginal(1).into_iter().map(|(v, p)| (c * (v - 1.0), p)).collect();
        let w1: Vec<f64> = samples
            .iter()
            .filter(|s| !s.censored && s.w_at_t.len() > 1)
            .map(|s| s.w_at_t[1])
            .collect();
        if w1.len() < 100 {
            return Err(Error::TooFewSamples { needed: 100, got: w1.len() });
        }
        Some(stats::ks_against_atoms(&w1, &marginal))
    } else {
        None
    };
    Ok(TimechangeReport {
        replicas: samples.len(),
        censored,
        bound_violations: violations,
        ks_w_t1: ks,
        pass: violations == 0 && ks.is_none_or(|k| k < ks_threshold),
        ks_threshold,
    })
}
