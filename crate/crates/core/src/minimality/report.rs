//! Assembled minimality verdicts for stopped processes.
//!
//! A stopping time is minimal when no strictly smaller stopping time
//! reproduces the stopped law. The sufficient conditions checked here, for
//! a test transform `g` of the stopped process:
//!
//! - (a) `g(X)^tau` is a closed supermartingale: a drift direction check
//!   plus the uniform-integrability diagnostic on its negative part;
//! - (b) `g(X)` has no intervals of constancy before `tau`: certified by a
//!   nonvanishing diffusion coefficient on the visited range (or strictly
//!   increasing realized quadratic variation), a sufficient surrogate;
//! - (c) the path converges on `{tau = infinity}`: dropped for strictly
//!   monotone `g` on a one-dimensional state space, otherwise taken from
//!   boundary transience or empirical finiteness of `tau`.
//!
//! The overall verdict is `minimal-sufficient` only when every piece is
//! satisfied; anything weaker is reported as `not-established`.

use rayon::prelude::*;
use serde::Serialize;

use super::scale::{DiffusionKind, DiffusionSpec};
use super::transform::GTransform;
use super::ui::{ui_diagnostic, SignedPart, StoppedPaths, UiConfig, UiReport, UiVerdict};
use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::stats;

#[derive(Debug, Clone)]
pub enum ProcessModel {
    Diffusion(DiffusionSpec),
    BrownianMotion { dim: usize, start: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StoppingRule {
    Deterministic { at: f64 },
    FirstExit { lower: f64, upper: f64 },
    FirstHit { level: f64 },
    /// Observe the path at `observe_at`, then stop at the first later hit
    /// of `factor` times the observed value.
    InflatedHit { observe_at: f64, factor: f64 },
}

/// Which transform to apply before the diagnostics.
#[derive(Debug, Clone)]
pub enum GChoice {
    Identity,
    /// Scale function oriented so the transformed process is bounded on the
    /// closed side (negated when the scale is finite at the upper
    /// boundary).
    ScaleOriented,
    Scale,
    NegScale,
    PowerDecay { dim: u32, pole: Vec<f64> },
    LogDistance { pole: Vec<f64> },
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ReportConfig {
    pub seed: u64,
    pub replicas: usize,
    pub delta: f64,
    pub horizon: f64,
    pub obs_points: usize,
    pub ui: UiConfig,
    /// CI multiplier for the supermartingale drift-direction check.
    pub drift_ci_mult: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig {
            seed: 1,
            replicas: 10_000,
            delta: 1.0 / 64.0,
            horizon: 64.0,
            obs_points: 16,
            ui: UiConfig::default(),
            drift_ci_mult: 4.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConditionStatus {
    Satisfied,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionReport {
    pub status: ConditionStatus,
    pub evidence: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Shortcut {
    None,
    StrictlyMonotoneG,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Overall {
    MinimalSufficient,
    NotEstablished,
}

#[derive(Debug, Clone, Serialize)]
pub struct MinimalityReport {
    pub condition_a: ConditionReport,
    pub condition_b: ConditionReport,
    pub condition_c: ConditionReport,
    pub shortcut_used: Shortcut,
    pub overall: Overall,
    pub ui: UiReport,
    pub censored_fraction: f64,
}

/// The one place the overall verdict is formed: `minimal-sufficient`
/// requires (a) and (b) satisfied and (c) satisfied or covered by the
/// strictly-monotone shortcut. No sub-verdict may be violated or
/// inconclusive.
pub fn assemble_overall(
    a: ConditionStatus,
    b: ConditionStatus,
    c: ConditionStatus,
    shortcut: Shortcut,
) -> Overall {
    let c_ok = c == ConditionStatus::Satisfied || shortcut == Shortcut::StrictlyMonotoneG;
    if a == ConditionStatus::Satisfied && b == ConditionStatus::Satisfied && c_ok {
        Overall::MinimalSufficient
    } else {
        Overall::NotEstablished
    }
}

/// Simulate the stopped process, transform it, and grade the sufficient
/// conditions.
pub fn minimality_report(
    process: &ProcessModel,
    rule: &StoppingRule,
    g: &GChoice,
    cfg: &ReportConfig,
) -> Result<MinimalityReport> {
    validate_rule(process, rule)?;
    let sim = simulate(process, rule, cfg)?;
    let (transform, shortcut_possible) = resolve_transform(process, g, &sim)?;

    // Transformed stopped paths on the observation grid.
    let mut g_values = Vec::with_capacity(sim.values.len());
    for row in &sim.values {
        let mut out = Vec::with_capacity(row.len());
        for state in row {
            out.push(transform.eval(state)?);
        }
        g_values.push(out);
    }
    let paths = StoppedPaths { times: sim.times.clone(), values: g_values };

    let ui = ui_diagnostic(&paths, SignedPart::Minus, &cfg.ui)?;
    let drift = drift_direction(&paths, cfg.drift_ci_mult);
    let condition_a = combine_condition_a(&ui, &drift);
    let condition_b = condition_b(process, &sim, &paths);
    let shortcut = if shortcut_possible && transform.strictly_monotone_1d() {
        Shortcut::StrictlyMonotoneG
    } else {
        Shortcut::None
    };
    let condition_c = condition_c(process, &sim, shortcut)?;
    let overall =
        assemble_overall(condition_a.status, condition_b.status, condition_c.status, shortcut);
    Ok(MinimalityReport {
        condition_a,
        condition_b,
        condition_c,
        shortcut_used: shortcut,
        overall,
        ui,
        censored_fraction: sim.censored as f64 / sim.values.len() as f64,
    })
}

fn validate_rule(process: &ProcessModel, rule: &StoppingRule) -> Result<()> {
    if let ProcessModel::BrownianMotion { dim, .. } = process {
        if *dim > 1 && !matches!(rule, StoppingRule::Deterministic { .. }) {
            return Err(Error::Domain {
                op: "minimality_report",
                detail: "multi-dimensional processes support deterministic stopping only".into(),
            });
        }
    }
    match rule {
        StoppingRule::Deterministic { at } if !(*at >= 0.0) => Err(Error::Domain {
            op: "minimality_report",
            detail: "deterministic time must be nonnegative".into(),
        }),
        StoppingRule::FirstExit { lower, upper } if !(lower < upper) => Err(Error::Domain {
            op: "minimality_report",
            detail: "exit interval must be nonempty".into(),
        }),
        _ => Ok(()),
    }
}

struct Simulated {
    times: Vec<f64>,
    /// `values[replica][obs]` is the full stopped state vector.
    values: Vec<Vec<Vec<f64>>>,
    /// Visited range of the scalar state (1-d processes).
    visited_lo: f64,
    visited_hi: f64,
    /// Replicas whose stopping time exceeded the horizon.
    censored: usize,
}

fn obs_times(cfg: &ReportConfig) -> Vec<f64> {
    let m = cfg.obs_points.max(4);
    (1..=m).map(|j| cfg.horizon * (j as f64 / m as f64).powi(2)).collect()
}

fn simulate(process: &ProcessModel, rule: &StoppingRule, cfg: &ReportConfig) -> Result<Simulated> {
    let times = obs_times(cfg);
    match process {
        ProcessModel::Diffusion(spec) => simulate_diffusion(spec, rule, cfg, &times),
        ProcessModel::BrownianMotion { dim, start } => {
            if start.len() != *dim {
                return Err(Error::InvalidSpec(format!(
                    "start point dimension {} does not match dim {dim}",
                    start.len()
                )));
            }
            if *dim == 1 {
                let spec = DiffusionSpec::new(
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    super::expr::Expr::Const(0.0),
                    super::expr::Expr::Const(1.0),
                    0.0,
                )?;
                let mut sim = simulate_diffusion(&spec, rule, cfg, &times)?;
                if start[0] != 0.0 {
                    for row in &mut sim.values {
                        for state in row {
                            state[0] += start[0];
                        }
                    }
                    sim.visited_lo += start[0];
                    sim.visited_hi += start[0];
                }
                Ok(sim)
            } else {
                simulate_bm_multi(*dim, start, rule, cfg, &times)
            }
        }
    }
}

fn simulate_diffusion(
    spec: &DiffusionSpec,
    rule: &StoppingRule,
    cfg: &ReportConfig,
    times: &[f64],
) -> Result<Simulated> {
    let n_steps = (cfg.horizon / cfg.delta).ceil() as usize;
    let observe_step = match rule {
        StoppingRule::InflatedHit { observe_at, .. } => {
            Some((observe_at / cfg.delta).round() as usize)
        }
        _ => None,
    };
    let start = spec.reference;

    let rows: Vec<(Vec<f64>, f64, f64, bool)> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Stream::new(cfg.seed, rep);
            let sqrt_dt = cfg.delta.sqrt();
            let mut x = start;
            let mut stopped = false;
            // Active hit level, if the rule carries one.
            let mut level: Option<f64> = match rule {
                StoppingRule::FirstHit { level } => Some(*level),
                _ => None,
            };
            let mut obs = Vec::with_capacity(times.len());
            let mut next_obs = 0usize;
            let mut lo = x;
            let mut hi = x;
            for step in 0..=n_steps {
                let t = step as f64 * cfg.delta;
                while next_obs < times.len() && t >= times[next_obs] - 1e-12 {
                    obs.push(x);
                    next_obs += 1;
                }
                if next_obs >= times.len() || step == n_steps {
                    break;
                }
                if stopped {
                    continue;
                }
                // Time-based stops and level arming happen at grid points.
                match rule {
                    StoppingRule::Deterministic { at } => {
                        if t >= *at - 1e-12 {
                            stopped = true;
                            continue;
                        }
                    }
                    StoppingRule::InflatedHit { factor, .. }
                        if observe_step == Some(step) =>
                    {
                        let l = factor * x;
                        level = Some(l);
                        // Already at the armed level (e.g. x = 0).
                        if x == l {
                            stopped = true;
                            continue;
                        }
                    }
                    _ => {}
                }
                let drift = spec.mu.eval(x);
                let vol = spec.sigma.eval(x);
                let x_next = x + drift * cfg.delta + vol * sqrt_dt * rng.normal();
                // Level / barrier crossings within the step, frozen at the
                // level itself.
                if let StoppingRule::FirstExit { lower, upper } = rule {
                    if x_next <= *lower {
                        x = *lower;
                        stopped = true;
                        continue;
                    }
                    if x_next >= *upper {
                        x = *upper;
                        stopped = true;
                        continue;
                    }
                }
                if let Some(l) = level {
                    let armed = match rule {
                        StoppingRule::InflatedHit { .. } => {
                            observe_step.is_some_and(|k| step >= k)
                        }
                        _ => true,
                    };
                    if armed && (x_next - l) * (x - l) <= 0.0 {
                        x = l;
                        stopped = true;
                        continue;
                    }
                }
                // Domain exit: boundaries are absorbing.
                if x_next <= spec.lower || x_next >= spec.upper {
                    x = x_next.clamp(spec.lower, spec.upper);
                    stopped = true;
                    continue;
                }
                x = x_next;
                lo = lo.min(x);
                hi = hi.max(x);
            }
            while obs.len() < times.len() {
                obs.push(x);
            }
            (obs, lo, hi, stopped)
        })
        .collect();

    let mut values = Vec::with_capacity(rows.len());
    let mut visited_lo = f64::INFINITY;
    let mut visited_hi = f64::NEG_INFINITY;
    let mut censored = 0usize;
    for (obs, lo, hi, stopped) in rows {
        values.push(obs.into_iter().map(|v| vec![v]).collect());
        visited_lo = visited_lo.min(lo);
        visited_hi = visited_hi.max(hi);
        if !stopped {
            censored += 1;
        }
    }
    Ok(Simulated { times: times.to_vec(), values, visited_lo, visited_hi, censored })
}

fn simulate_bm_multi(
    _dim: usize,
    start: &[f64],
    rule: &StoppingRule,
    cfg: &ReportConfig,
    times: &[f64],
) -> Result<Simulated> {
    // Only deterministic stops reach this path (validated upstream); the
    // state is frozen at the stop time, with exact increments up to it.
    let stop_at = match rule {
        StoppingRule::Deterministic { at } => *at,
        _ => unreachable!("validated rule"),
    };
    let rows: Vec<Vec<Vec<f64>>> = (0..cfg.replicas as u64)
        .into_par_iter()
        .map(|rep| {
            let mut rng = Stream::new(cfg.seed, rep);
            let mut x = start.to_vec();
            let mut out = Vec::with_capacity(times.len());
            let mut t_prev = 0.0;
            for &t in times {
                let target = t.min(stop_at);
                let dt = target - t_prev;
                if dt > 0.0 {
                    let sd = dt.sqrt();
                    for xi in x.iter_mut() {
                        *xi += sd * rng.normal();
                    }
                    t_prev = target;
                }
                out.push(x.clone());
            }
            out
        })
        .collect();
    Ok(Simulated {
        times: times.to_vec(),
        values: rows,
        visited_lo: f64::NAN,
        visited_hi: f64::NAN,
        censored: 0,
    })
}

fn resolve_transform(
    process: &ProcessModel,
    g: &GChoice,
    sim: &Simulated,
) -> Result<(GTransform, bool)> {
    let one_d = matches!(process, ProcessModel::Diffusion(_))
        || matches!(process, ProcessModel::BrownianMotion { dim: 1, .. });
    let table_for = |spec: &DiffusionSpec| -> Result<super::scale::ScaleFunctionTable> {
        let margin = 0.05 * (sim.visited_hi - sim.visited_lo).max(1e-6);
        let lo = (sim.visited_lo - margin).max(spec.lower + 1e-9 * (1.0 + spec.lower.abs()));
        let hi = (sim.visited_hi + margin).min(spec.upper - 1e-9 * (1.0 + spec.upper.abs()));
        let n = 4000;
        let xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        spec.scale_table(&xs)
    };
    match g {
        GChoice::Identity => Ok((GTransform::Identity, one_d)),
        GChoice::Scale | GChoice::NegScale | GChoice::ScaleOriented => {
            let spec = match process {
                ProcessModel::Diffusion(s) => s.clone(),
                ProcessModel::BrownianMotion { dim: 1, .. } => DiffusionSpec::new(
                    f64::NEG_INFINITY,
                    f64::INFINITY,
                    super::expr::Expr::Const(0.0),
                    super::expr::Expr::Const(1.0),
                    0.0,
                )?,
                _ => {
                    return Err(Error::Domain {
                        op: "minimality_report",
                        detail: "scale transforms need a one-dimensional process".into(),
                    })
                }
            };
            let table = table_for(&spec)?;
            let t = match g {
                GChoice::Scale => GTransform::Scale(table),
                GChoice::NegScale => GTransform::NegScale(table),
                _ => {
                    // Orient so the transformed local martingale is bounded
                    // below: negate when the scale is finite at the upper
                    // boundary.
                    if table.s_at_upper_finite == Some(true) {
                        GTransform::NegScale(table)
                    } else {
                        GTransform::Scale(table)
                    }
                }
            };
            Ok((t, one_d))
        }
        GChoice::PowerDecay { dim, pole } => {
            Ok((GTransform::PowerDecay { dim: *dim, pole: pole.clone() }, false))
        }
        // Graded in its supermartingale orientation: the planar log
        // distance itself is a submartingale, its negative is the closed
        // supermartingale whose negative-part tails are the plus part of
        // the log distance.
        GChoice::LogDistance { pole } => {
            Ok((GTransform::NegLogDistance { pole: pole.clone() }, false))
        }
    }
}

struct DriftCheck {
    pass: bool,
    worst_z: f64,
}

/// Supermartingale direction: for every consecutive pair of observation
/// times, and within bins of the current value, the mean increment must not
/// be significantly positive.
fn drift_direction(paths: &StoppedPaths, ci_mult: f64) -> DriftCheck {
    let n_t = paths.times.len();
    let mut worst_z = f64::NEG_INFINITY;
    for ti in 0..n_t.saturating_sub(1) {
        let pairs: Vec<(f64, f64)> = paths
            .values
            .iter()
            .map(|row| (row[ti], row[ti + 1] - row[ti]))
            .collect();
        // Unconditional step drift.
        let incs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let (mean, se) = stats::mean_and_se(&incs);
        if se > 0.0 {
            worst_z = worst_z.max(mean / se);
        }
        // Binned by current value (equal-count bins).
        let mut sorted = pairs.clone();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let bins = 8usize;
        for b in 0..bins {
            let lo = b * sorted.len() / bins;
            let hi = ((b + 1) * sorted.len() / bins).min(sorted.len());
            if hi - lo < 50 {
                continue;
            }
            let incs: Vec<f64> = sorted[lo..hi].iter().map(|p| p.1).collect();
            let (mean, se) = stats::mean_and_se(&incs);
            if se > 0.0 {
                worst_z = worst_z.max(mean / se);
            }
        }
    }
    DriftCheck { pass: worst_z <= ci_mult, worst_z }
}

fn combine_condition_a(ui: &UiReport, drift: &DriftCheck) -> ConditionReport {
    let status = match (ui.verdict, drift.pass) {
        (UiVerdict::Satisfied, true) => ConditionStatus::Satisfied,
        (UiVerdict::Violated, _) => ConditionStatus::Violated,
        (_, false) => ConditionStatus::Violated,
        _ => ConditionStatus::Inconclusive,
    };
    ConditionReport {
        status,
        evidence: format!(
            "negative-part tail diagnostic: {:?} (worst excess {:?} at K {:?}); \
             drift direction worst z = {:.2}",
            ui.verdict, ui.worst_excess, ui.k_star, drift.worst_z
        ),
    }
}

fn condition_b(process: &ProcessModel, sim: &Simulated, paths: &StoppedPaths) -> ConditionReport {
    match process {
        ProcessModel::Diffusion(spec) => {
            let n = 512;
            let lo = sim.visited_lo;
            let hi = sim.visited_hi;
            let mut min_abs = f64::INFINITY;
            for k in 0..=n {
                let x = lo + (hi - lo) * k as f64 / n as f64;
                if x <= spec.lower || x >= spec.upper {
                    continue;
                }
                min_abs = min_abs.min(spec.sigma.eval(x).abs());
            }
            if min_abs > 1e-12 {
                ConditionReport {
                    status: ConditionStatus::Satisfied,
                    evidence: format!(
                        "sigma nonvanishing on visited range [{lo:.4}, {hi:.4}] \
                         (min |sigma| = {min_abs:.3e}; pointwise surrogate for \
                         no-intervals-of-constancy)"
                    ),
                }
            } else {
                ConditionReport {
                    status: ConditionStatus::Inconclusive,
                    evidence: format!(
                        "sigma reaches {min_abs:.3e} on the visited range; constancy \
                         cannot be excluded"
                    ),
                }
            }
        }
        ProcessModel::BrownianMotion { .. } => {
            // Strictly increasing realized quadratic variation of the
            // transformed path before the stop.
            let mut flat = 0usize;
            for row in &paths.values {
                if row.windows(2).any(|w| w[1] == w[0] && w[0] != *row.last().unwrap()) {
                    flat += 1;
                }
            }
            if flat == 0 {
                ConditionReport {
                    status: ConditionStatus::Satisfied,
                    evidence: "realized quadratic variation strictly increasing before the \
                               stop in every replica (surrogate)"
                        .into(),
                }
            } else {
                ConditionReport {
                    status: ConditionStatus::Inconclusive,
                    evidence: format!("{flat} replicas show flat observed steps before the stop"),
                }
            }
        }
    }
}

fn condition_c(
    process: &ProcessModel,
    sim: &Simulated,
    shortcut: Shortcut,
) -> Result<ConditionReport> {
    if shortcut == Shortcut::StrictlyMonotoneG {
        return Ok(ConditionReport {
            status: ConditionStatus::Satisfied,
            evidence: "not required: strictly monotone transform on a one-dimensional state \
                       space"
                .into(),
        });
    }
    if let ProcessModel::Diffusion(spec) = process {
        let class = spec.classify_boundaries()?;
        if class.verdict == DiffusionKind::Transient {
            return Ok(ConditionReport {
                status: ConditionStatus::Satisfied,
                evidence: "transient boundary classification: the path converges on \
                           {tau = infinity}"
                    .into(),
            });
        }
    }
    if sim.censored == 0 {
        return Ok(ConditionReport {
            status: ConditionStatus::Satisfied,
            evidence: "stopping time finite in every replica (empirical, evidence-grade)"
                .into(),
        });
    }
    Ok(ConditionReport {
        status: ConditionStatus::Inconclusive,
        evidence: format!(
            "{} replicas did not stop within the horizon and no convergence argument applies",
            sim.censored
        ),
    })
}
