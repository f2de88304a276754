//! Shared path engine: exact-increment simulation of Brownian motion and the
//! geometric Brownian motion `Z_t = exp(W_t - t/2)`, plus two-barrier
//! first-exit detection with a Brownian-bridge crossing correction.
//!
//! Increments are exact in law on the grid, so all discretization error is
//! confined to barrier detection between grid points; the bridge correction
//! removes its first-order bias. Detection runs on the log scale, where the
//! path is a Brownian motion with drift `-1/2` and the probability that the
//! bridge from `x` to `x'` over a step of length `d` crossed a level `a` on
//! the same side of both endpoints is `exp(-2 (a - x)(a - x') / d)`.

use crate::rng::Stream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PathKind {
    Bm,
    Gbm,
    Clock,
}

/// A time grid with values for one realization of W, Z, or a clock.
#[derive(Debug, Clone)]
pub struct SamplePath {
    pub grid: Vec<f64>,
    pub values: Vec<f64>,
    pub kind: PathKind,
    /// Index from which the path is considered absorbed, if any.
    pub absorbed_from: Option<usize>,
}

impl SamplePath {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }
}

/// Step size, horizon, and absorption policy for pathwise simulation.
#[derive(Debug, Clone, Copy)]
pub struct PathConfig {
    pub delta: f64,
    pub horizon: f64,
    /// Once the path falls below this value with no positive lower barrier,
    /// it is classified as absorbed (it cannot rebound above any fixed
    /// barrier with non-negligible probability from here).
    pub absorption_threshold: f64,
    /// Absorption is only declared after this much time has elapsed.
    pub absorption_burn_in: f64,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            delta: 1e-3,
            horizon: 1e4,
            absorption_threshold: 1e-8,
            absorption_burn_in: 0.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExitSide {
    Lower,
    Upper,
    Absorbed,
    Censored,
}

/// Outcome of a first-exit simulation. `side = upper` implies
/// `value = beta`; `side = lower` implies `value = alpha`.
#[derive(Debug, Clone, Copy)]
pub struct ExitEvent {
    pub time: f64,
    pub side: ExitSide,
    pub value: f64,
}

/// Uniform grid `0, delta, 2 delta, ...` covering `[0, horizon]`.
pub fn time_grid(delta: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / delta).round() as usize;
    (0..=n).map(|k| k as f64 * delta).collect()
}

/// Brownian motion with exact centered Gaussian increments on `grid`.
pub fn simulate_bm_with(rng: &mut Stream, grid: &[f64]) -> SamplePath {
    assert!(!grid.is_empty(), "empty grid");
    let mut values = Vec::with_capacity(grid.len());
    let mut w = 0.0;
    values.push(w);
    for k in 1..grid.len() {
        let dt = grid[k] - grid[k - 1];
        w += dt.sqrt() * rng.normal();
        values.push(w);
    }
    SamplePath { grid: grid.to_vec(), values, kind: PathKind::Bm, absorbed_from: None }
}

/// Geometric Brownian motion `Z_t = exp(W_t - t/2)` on `grid`.
pub fn simulate_gbm_with(rng: &mut Stream, grid: &[f64]) -> SamplePath {
    let mut path = simulate_bm_with(rng, grid);
    for (v, t) in path.values.iter_mut().zip(&path.grid) {
        *v = (*v - 0.5 * t).exp();
    }
    path.kind = PathKind::Gbm;
    path
}

/// Seed-keyed convenience wrappers (stream id 0).
pub fn simulate_bm(seed: u64, grid: &[f64]) -> SamplePath {
    simulate_bm_with(&mut Stream::new(seed, 0), grid)
}

pub fn simulate_gbm(seed: u64, grid: &[f64]) -> SamplePath {
    simulate_gbm_with(&mut Stream::new(seed, 0), grid)
}

/// First exit of a GBM started at `start` from the open interval
/// `(alpha, beta)`, with bridge-corrected barrier detection.
///
/// Requires `alpha <= start <= beta`; starting on a barrier exits at time 0.
/// With `alpha = 0` the lower barrier cannot be hit in finite time; the path
/// is declared absorbed once it falls below the configured threshold.
pub fn first_exit(
    rng: &mut Stream,
    start: f64,
    alpha: f64,
    beta: f64,
    cfg: &PathConfig,
) -> ExitEvent {
    first_exit_with_qv(rng, start, alpha, beta, cfg).0
}

/// Debug variant of [`first_exit`] that also records the traversed path on
/// the step grid (ending at the barrier value on a crossing).
pub fn first_exit_traced(
    rng: &mut Stream,
    start: f64,
    alpha: f64,
    beta: f64,
    cfg: &PathConfig,
) -> (ExitEvent, SamplePath) {
    let mut trace = vec![start];
    let (event, _) = first_exit_inner(rng, start, alpha, beta, cfg, Some(&mut trace));
    if event.time.is_finite() && matches!(event.side, ExitSide::Upper | ExitSide::Lower) {
        *trace.last_mut().unwrap() = event.value;
    }
    let grid = (0..trace.len()).map(|k| k as f64 * cfg.delta).collect();
    let absorbed_from =
        if event.side == ExitSide::Absorbed { Some(trace.len().saturating_sub(1)) } else { None };
    (event, SamplePath { grid, values: trace, kind: PathKind::Gbm, absorbed_from })
}

/// Render one path as CSV rows `t,value` (debugging aid).
pub fn render_path_csv(path: &SamplePath) -> String {
    let mut out = String::from("t,value\n");
    for (t, v) in path.grid.iter().zip(&path.values) {
        out.push_str(&format!("{t},{v}\n"));
    }
    out
}

/// Same as [`first_exit`], additionally returning the left-rule integral
/// `∫_0^exit Y_r^2 dr` of the squared path, which downstream time changes
/// consume as the quadratic-variation clock increment.
pub fn first_exit_with_qv(
    rng: &mut Stream,
    start: f64,
    alpha: f64,
    beta: f64,
    cfg: &PathConfig,
) -> (ExitEvent, f64) {
    first_exit_inner(rng, start, alpha, beta, cfg, None)
}

fn first_exit_inner(
    rng: &mut Stream,
    start: f64,
    alpha: f64,
    beta: f64,
    cfg: &PathConfig,
    mut trace: Option<&mut Vec<f64>>,
) -> (ExitEvent, f64) {
    assert!(start > 0.0, "GBM must start positive");
    assert!(alpha <= start && start <= beta, "start {start} outside [{alpha}, {beta}]");
    if start >= beta {
        return (ExitEvent { time: 0.0, side: ExitSide::Upper, value: beta }, 0.0);
    }
    if start <= alpha {
        return (ExitEvent { time: 0.0, side: ExitSide::Lower, value: alpha }, 0.0);
    }

    let delta = cfg.delta;
    let sqrt_delta = delta.sqrt();
    let log_lower = alpha.ln(); // -inf when alpha = 0
    let log_upper = beta.ln(); // +inf when beta = inf
    let log_absorb = cfg.absorption_threshold.ln();
    let has_lower = alpha > 0.0;
    let has_upper = beta.is_finite();

    let mut x = start.ln();
    let mut t = 0.0;
    let mut qv = 0.0;
    let n_steps = (cfg.horizon / delta).ceil() as u64;
    for step in 0..n_steps {
        let y = (2.0 * x).exp(); // current squared path value
        let x_next = x - 0.5 * delta + sqrt_delta * rng.normal();
        let t_next = (step + 1) as f64 * delta;
        qv += y * delta;
        if let Some(tr) = trace.as_deref_mut() {
            tr.push(x_next.exp());
        }
        if has_upper && x_next >= log_upper {
            return (ExitEvent { time: t_next, side: ExitSide::Upper, value: beta }, qv);
        }
        if has_lower && x_next <= log_lower {
            return (ExitEvent { time: t_next, side: ExitSide::Lower, value: alpha }, qv);
        }
        // Interior step: account for an unobserved crossing of each finite
        // barrier via the bridge crossing probability, drawn independently
        // per barrier; the nearer barrier wins a simultaneous trigger.
        let up = has_upper && {
            let p = (-2.0 * (log_upper - x) * (log_upper - x_next) / delta).exp();
            rng.uniform() < p
        };
        let down = has_lower && {
            let p = (-2.0 * (x - log_lower) * (x_next - log_lower) / delta).exp();
            rng.uniform() < p
        };
        match (up, down) {
            (true, false) => {
                return (ExitEvent { time: t_next, side: ExitSide::Upper, value: beta }, qv)
            }
            (false, true) => {
                return (ExitEvent { time: t_next, side: ExitSide::Lower, value: alpha }, qv)
            }
            (true, true) => {
                let mid = 0.5 * (x + x_next);
                let side = if (log_upper - mid) <= (mid - log_lower) {
                    ExitSide::Upper
                } else {
                    ExitSide::Lower
                };
                let value = if side == ExitSide::Upper { beta } else { alpha };
                return (ExitEvent { time: t_next, side, value }, qv);
            }
            (false, false) => {}
        }
        if !has_lower && x_next <= log_absorb && t_next >= cfg.absorption_burn_in {
            return (ExitEvent { time: f64::INFINITY, side: ExitSide::Absorbed, value: 0.0 }, qv);
        }
        x = x_next;
        t = t_next;
    }
    (ExitEvent { time: t, side: ExitSide::Censored, value: x.exp() }, qv)
}
