//! Target laws on `[0, inf]` and the barrier calculus that embeds them in a
//! geometric Brownian motion started at 1.
//!
//! A [`TargetDistribution`] is represented through its quantile function
//! `F^{-1}(r) = inf{x : F(x) > r}` in one of two closed-form-integrable
//! shapes: a finite set of atoms, or a piecewise-linear quantile. From it we
//! derive the level function
//!
//! ```text
//! level(r) = r - ∫_0^r F^{-1}(s) ds,    r in [0, 1],
//! ```
//!
//! which is concave with `level(0) = 0` and `level(1) = 1 - mean >= 0` for
//! embeddable targets. For a uniform draw `R`, the value `c = level(R)`
//! selects either a single root `theta = R` on the ascending branch (barrier
//! pair `(F^{-1}(theta), inf)`), a pair of roots `theta1 < theta2` straddling
//! the maximum (barrier pair `(F^{-1}(theta1), F^{-1}(theta2))`), or the
//! plateau where the maximum is attained (degenerate pair `(1, 1)`). The
//! exit value of the GBM from the open interval `(alpha, beta)` then has the
//! target law.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for user-supplied probability sums.
const PROB_SUM_TOL: f64 = 1e-12;
/// Slack folded into `1 - mean` when user atoms sum just above one.
const MEAN_TOL: f64 = 1e-9;
/// Root accuracy for the level equation.
const ROOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
enum Repr {
    /// Sorted strictly increasing values with their probabilities and the
    /// cumulative sums; equal values are merged at construction.
    Atoms { values: Vec<f64>, probs: Vec<f64>, cum: Vec<f64> },
    /// Piecewise-linear quantile through knots `(r_i, q_i)` with `r_0 = 0`,
    /// `r_last = 1`, `r` strictly increasing and `q` nondecreasing.
    Quantile { rs: Vec<f64>, qs: Vec<f64> },
}

/// A law on `[0, inf]` represented through its quantile function, with the
/// mean cached in closed form.
#[derive(Debug, Clone, PartialEq)]
pub struct TargetDistribution {
    repr: Repr,
    mean: f64,
}

impl TargetDistribution {
    /// Build from `(value, probability)` atoms. Values are sorted and equal
    /// values merged; probabilities must be in `(0, 1]` and sum to one
    /// within `1e-12`.
    pub fn from_atoms(atoms: &[(f64, f64)]) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::InvalidSpec("atoms: empty list".into()));
        }
        for (i, &(v, p)) in atoms.iter().enumerate() {
            if !(v >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "atoms[{i}].value: must be nonnegative, got {v}"
                )));
            }
            if !(p > 0.0 && p <= 1.0) {
                return Err(Error::InvalidSpec(format!(
                    "atoms[{i}].prob: must lie in (0, 1], got {p}"
                )));
            }
        }
        let sum: f64 = atoms.iter().map(|&(_, p)| p).sum();
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSpec(format!(
                "atoms: probabilities sum to {sum}, expected 1 within {PROB_SUM_TOL:e}"
            )));
        }
        let mut sorted = atoms.to_vec();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut values = Vec::with_capacity(sorted.len());
        let mut probs: Vec<f64> = Vec::with_capacity(sorted.len());
        for (v, p) in sorted {
            if values.last() == Some(&v) {
                *probs.last_mut().unwrap() += p;
            } else {
                values.push(v);
                probs.push(p);
            }
        }
        let mut cum = Vec::with_capacity(probs.len());
        let mut acc = 0.0;
        for &p in &probs {
            acc += p;
            cum.push(acc);
        }
        *cum.last_mut().unwrap() = 1.0;
        let mean = values
            .iter()
            .zip(&probs)
            .map(|(&v, &p)| v * p)
            .sum::<f64>();
        Ok(TargetDistribution { repr: Repr::Atoms { values, probs, cum }, mean })
    }

    /// Build from piecewise-linear quantile knots `(r_i, q_i)`.
    /// `q = inf` is accepted only at `r = 1` and forces an infinite mean.
    pub fn from_quantile_knots(knots: &[(f64, f64)]) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidSpec("knots: need at least two knots".into()));
        }
        let rs: Vec<f64> = knots.iter().map(|k| k.0).collect();
        let qs: Vec<f64> = knots.iter().map(|k| k.1).collect();
        if rs[0] != 0.0 {
            return Err(Error::InvalidSpec(format!("knots[0].r: must be 0, got {}", rs[0])));
        }
        if *rs.last().unwrap() != 1.0 {
            return Err(Error::InvalidSpec(format!(
                "knots[last].r: must be 1, got {}",
                rs.last().unwrap()
            )));
        }
        for i in 1..rs.len() {
            if !(rs[i] > rs[i - 1]) {
                return Err(Error::InvalidSpec(format!(
                    "knots[{i}].r: ranks must be strictly increasing"
                )));
            }
            if !(qs[i] >= qs[i - 1]) {
                return Err(Error::InvalidSpec(format!(
                    "knots[{i}].q: quantile values must be nondecreasing"
                )));
            }
        }
        for (i, &q) in qs.iter().enumerate() {
            if !(q >= 0.0) {
                return Err(Error::InvalidSpec(format!(
                    "knots[{i}].q: must be nonnegative, got {q}"
                )));
            }
            if q.is_infinite() && i + 1 != qs.len() {
                return Err(Error::InvalidSpec(format!(
                    "knots[{i}].q: infinity is only allowed at r = 1"
                )));
            }
        }
        let mut mean = 0.0;
        for i in 1..rs.len() {
            let w = rs[i] - rs[i - 1];
            mean += w * 0.5 * (qs[i - 1] + qs[i]);
        }
        Ok(TargetDistribution { repr: Repr::Quantile { rs, qs }, mean })
    }

    /// Point mass at `v`.
    pub fn point_mass(v: f64) -> Result<Self> {
        Self::from_atoms(&[(v, 1.0)])
    }

    /// `E xi = ∫_0^1 F^{-1}(s) ds`, exact for both representations.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Right-continuous quantile `F^{-1}(r) = inf{x : F(x) > r}` with
    /// `inf of the empty set = +inf`.
    pub fn quantile(&self, r: f64) -> Result<f64> {
        check_rank("quantile", r)?;
        Ok(self.quantile_unchecked(r))
    }

    fn quantile_unchecked(&self, r: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { values, cum, .. } => {
                match cum.iter().position(|&c| c > r) {
                    Some(i) => values[i],
                    None => f64::INFINITY,
                }
            }
            Repr::Quantile { rs, qs } => {
                if r >= 1.0 {
                    return *qs.last().unwrap();
                }
                let i = piece_index(rs, r);
                let w = rs[i + 1] - rs[i];
                if r == rs[i] || qs[i + 1] == qs[i] {
                    qs[i]
                } else {
                    qs[i] + (r - rs[i]) / w * (qs[i + 1] - qs[i])
                }
            }
        }
    }

    /// `∫_0^r F^{-1}(s) ds`, the running quantile integral, in closed form.
    /// Equals 0 at `r = 0` and the mean at `r = 1`.
    pub fn quantile_integral(&self, r: f64) -> Result<f64> {
        check_rank("quantile_integral", r)?;
        Ok(self.quantile_integral_unchecked(r))
    }

    fn quantile_integral_unchecked(&self, r: f64) -> f64 {
        match &self.repr {
            // Full pieces contribute v * p with the stored probability, so
            // the integral at r = 1 reproduces the cached mean bitwise.
            Repr::Atoms { values, probs, cum } => {
                let mut acc = 0.0;
                let mut lo = 0.0;
                for i in 0..values.len() {
                    if r >= cum[i] {
                        acc += values[i] * probs[i];
                    } else {
                        if r > lo {
                            acc += (r - lo) * values[i];
                        }
                        break;
                    }
                    lo = cum[i];
                }
                acc
            }
            Repr::Quantile { rs, qs } => {
                let mut acc = 0.0;
                for i in 1..rs.len() {
                    let lo = rs[i - 1];
                    if lo >= r {
                        break;
                    }
                    let hi = rs[i].min(r);
                    let w = hi - lo;
                    if w <= 0.0 {
                        continue;
                    }
                    let q_hi = if hi == rs[i] {
                        qs[i]
                    } else {
                        qs[i - 1] + (hi - lo) / (rs[i] - lo) * (qs[i] - qs[i - 1])
                    };
                    acc += w * 0.5 * (qs[i - 1] + q_hi);
                }
                acc
            }
        }
    }

    /// `P(xi <= x)`.
    pub fn cdf(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { values, cum, .. } => {
                let mut out = 0.0;
                for (i, &v) in values.iter().enumerate() {
                    if v <= x {
                        out = cum[i];
                    } else {
                        break;
                    }
                }
                out
            }
            Repr::Quantile { rs, qs } => {
                if x < qs[0] {
                    return 0.0;
                }
                let mut out = 0.0;
                for i in 1..rs.len() {
                    if qs[i] <= x {
                        out = rs[i];
                    } else if qs[i - 1] <= x && qs[i] > x {
                        // strictly increasing piece through level x
                        out = rs[i - 1] + (x - qs[i - 1]) / (qs[i] - qs[i - 1]) * (rs[i] - rs[i - 1]);
                    }
                }
                out
            }
        }
    }

    /// `P(xi < x)`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        match &self.repr {
            Repr::Atoms { values, cum, .. } => {
                let mut out = 0.0;
                for (i, &v) in values.iter().enumerate() {
                    if v < x {
                        out = cum[i];
                    } else {
                        break;
                    }
                }
                out
            }
            // Continuous except possibly at flat pieces; the flat piece at
            // level exactly x contributes its left endpoint.
            Repr::Quantile { rs, qs } => {
                if x <= qs[0] {
                    return 0.0;
                }
                let mut out = 0.0;
                for i in 1..rs.len() {
                    if qs[i] < x {
                        out = rs[i];
                    } else if qs[i - 1] < x && qs[i] >= x {
                        if qs[i] > qs[i - 1] {
                            out = rs[i - 1]
                                + (x - qs[i - 1]) / (qs[i] - qs[i - 1]) * (rs[i] - rs[i - 1]);
                        } else {
                            out = rs[i - 1];
                        }
                    }
                }
                out
            }
        }
    }

    /// Atoms view `(value, prob)` for discrete targets, `None` otherwise.
    pub fn atoms(&self) -> Option<Vec<(f64, f64)>> {
        match &self.repr {
            Repr::Atoms { values, probs, .. } => {
                Some(values.iter().copied().zip(probs.iter().copied()).collect())
            }
            Repr::Quantile { .. } => None,
        }
    }

    /// Parse the distribution spec file format:
    /// `{"kind": "atoms", "atoms": [[value, prob], ...]}` or
    /// `{"kind": "quantile", "knots": [[r, q], ...]}`, with `"inf"` accepted
    /// as a value literal at `r = 1`.
    pub fn from_json_str(s: &str) -> Result<Self> {
        let file: DistFile =
            serde_json::from_str(s).map_err(|e| Error::InvalidSpec(format!("distribution file: {e}")))?;
        match file {
            DistFile::Atoms { atoms } => {
                let pairs: Vec<(f64, f64)> =
                    atoms.into_iter().map(|(v, p)| (v.0, p)).collect();
                Self::from_atoms(&pairs)
            }
            DistFile::Quantile { knots } => {
                let pairs: Vec<(f64, f64)> =
                    knots.into_iter().map(|(r, q)| (r, q.0)).collect();
                Self::from_quantile_knots(&pairs)
            }
        }
    }

    /// Serialize back to the spec file format.
    pub fn to_json_string(&self) -> String {
        let file = match &self.repr {
            Repr::Atoms { values, probs, .. } => DistFile::Atoms {
                atoms: values.iter().zip(probs).map(|(&v, &p)| (ExtReal(v), p)).collect(),
            },
            Repr::Quantile { rs, qs } => DistFile::Quantile {
                knots: rs.iter().zip(qs).map(|(&r, &q)| (r, ExtReal(q))).collect(),
            },
        };
        serde_json::to_string_pretty(&file).expect("serialization cannot fail")
    }
}

/// A nonnegative real or `+inf`, written as the string `"inf"` in JSON.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtReal(pub f64);

impl Serialize for ExtReal {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        if self.0.is_infinite() {
            ser.serialize_str("inf")
        } else {
            ser.serialize_f64(self.0)
        }
    }
}

impl<'de> Deserialize<'de> for ExtReal {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Word(String),
        }
        match Raw::deserialize(de)? {
            Raw::Num(x) => Ok(ExtReal(x)),
            Raw::Word(w) => match w.as_str() {
                "inf" | "+inf" | "Infinity" => Ok(ExtReal(f64::INFINITY)),
                other => Err(serde::de::Error::custom(format!(
                    "expected a number or \"inf\", got {other:?}"
                ))),
            },
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum DistFile {
    Atoms { atoms: Vec<(ExtReal, f64)> },
    Quantile { knots: Vec<(f64, ExtReal)> },
}

/// Randomized exit levels around 1; `beta = +inf` is a first-class value
/// (IEEE infinity, serialized as the string `"inf"`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BarrierPair {
    pub alpha: f64,
    pub beta: f64,
}

impl BarrierPair {
    fn new(alpha: f64, beta: f64) -> Self {
        debug_assert!(alpha <= 1.0 && beta >= 1.0, "barrier order violated: {alpha} {beta}");
        BarrierPair { alpha, beta }
    }
}

/// Roots of `level(theta) = c`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelRoots {
    /// One root on the ascending branch (`c` below `level(1)`).
    Single(f64),
    /// Ascending and descending roots `theta1 <= theta2`; at the peak these
    /// are the endpoints of the argmax interval.
    Pair(f64, f64),
}

/// The level-function calculus of a target law: peak value, argmax interval,
/// terminal value, root solving, and the barrier map.
#[derive(Debug, Clone)]
pub struct GCalculus {
    dist: TargetDistribution,
    /// `level(1) = max(0, 1 - mean)`, with rounding slack folded in.
    at_one: f64,
    /// Maximum of the level function.
    peak: f64,
    /// Maximal interval `[lo, hi]` on which the maximum is attained; the
    /// endpoints are where the quantile crosses level 1, so they are exact
    /// knots of the representation rather than products of a search.
    argmax: (f64, f64),
}

impl GCalculus {
    pub fn new(dist: &TargetDistribution) -> Result<Self> {
        let mean = dist.mean();
        if mean > 1.0 + MEAN_TOL {
            return Err(Error::UnsupportedTarget { mean });
        }
        let at_one = (1.0 - mean).max(0.0);
        let argmax = argmax_interval(dist);
        let mut calc = GCalculus { dist: dist.clone(), at_one, peak: 0.0, argmax };
        let peak = calc.level_unchecked(argmax.0);
        calc.peak = peak.max(at_one).max(0.0);
        Ok(calc)
    }

    pub fn dist(&self) -> &TargetDistribution {
        &self.dist
    }

    /// `level(r) = r - ∫_0^r F^{-1}`.
    pub fn level(&self, r: f64) -> Result<f64> {
        check_rank("level", r)?;
        Ok(self.level_unchecked(r))
    }

    fn level_unchecked(&self, r: f64) -> f64 {
        r - self.dist.quantile_integral_unchecked(r)
    }

    /// `level(1) = 1 - mean`, clamped at zero.
    pub fn level_at_one(&self) -> f64 {
        self.at_one
    }

    /// Maximum of the level function over `[0, 1]`.
    pub fn peak_level(&self) -> f64 {
        self.peak
    }

    /// Maximal interval on which the level function attains its peak.
    pub fn argmax_interval(&self) -> (f64, f64) {
        self.argmax
    }

    /// Solve `level(theta) = c` for `0 <= c <= peak`.
    ///
    /// Concavity makes the structure simple: one ascending root below
    /// `level(1)`, an ascending/descending pair between `level(1)` and the
    /// peak, and the argmax endpoints at the peak. Roots satisfy
    /// `|level(theta) - c| <= 1e-12` (closed-form inversion per piece with a
    /// bisection fallback).
    pub fn solve_level(&self, c: f64) -> Result<LevelRoots> {
        if !(c >= 0.0) || c > self.peak + ROOT_TOL {
            return Err(Error::Domain {
                op: "solve_level",
                detail: format!("c = {c} outside [0, {}]", self.peak),
            });
        }
        let c = c.min(self.peak);
        if c >= self.peak {
            return Ok(LevelRoots::Pair(self.argmax.0, self.argmax.1));
        }
        let asc = self.root_on_branch(c, true);
        if c < self.at_one {
            Ok(LevelRoots::Single(asc))
        } else {
            Ok(LevelRoots::Pair(asc, self.root_on_branch(c, false)))
        }
    }

    /// The barrier pair assigned to the randomization value `r`.
    ///
    /// The plateau is detected analytically through the argmax interval,
    /// never by floating-point equality of level values.
    pub fn barrier_pair(&self, r: f64) -> Result<BarrierPair> {
        check_rank("barrier_pair", r)?;
        let (lo, hi) = self.argmax;
        if r >= lo && r <= hi {
            return Ok(BarrierPair::new(1.0, 1.0));
        }
        let c = self.level_unchecked(r);
        if c >= self.peak {
            // Rounding pushed an off-plateau level to the peak.
            return Ok(BarrierPair::new(1.0, 1.0));
        }
        if c < self.at_one {
            // Ascending branch: r itself is the unique root there.
            let alpha = self.dist.quantile_unchecked(r).min(1.0);
            return Ok(BarrierPair::new(alpha, f64::INFINITY));
        }
        // Two-sided branch; r already solves its own side exactly.
        let (t1, t2) = if r < lo {
            (r, self.root_on_branch(c, false))
        } else {
            (self.root_on_branch(c, true), r)
        };
        let alpha = self.dist.quantile_unchecked(t1).min(1.0);
        let beta = self.dist.quantile_unchecked(t2).max(1.0);
        Ok(BarrierPair::new(alpha, beta))
    }

    /// Closed-form per-piece root of `level = c` on the ascending
    /// (`ascending = true`) or descending branch, with bisection fallback.
    fn root_on_branch(&self, c: f64, ascending: bool) -> f64 {
        let (lo, hi) = if ascending { (0.0, self.argmax.0) } else { (self.argmax.1, 1.0) };
        if hi <= lo {
            return lo;
        }
        let knots = self.piece_knots(lo, hi);
        for w in knots.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ga, gb) = (self.level_unchecked(a), self.level_unchecked(b));
            let brackets = if ascending { ga <= c && c <= gb } else { ga >= c && c >= gb };
            if !brackets {
                continue;
            }
            if let Some(theta) = self.solve_on_piece(a, b, ga, c) {
                if (self.level_unchecked(theta) - c).abs() <= ROOT_TOL {
                    return theta;
                }
            }
            return bisect(|r| self.level_unchecked(r), a, b, c, ascending);
        }
        // Level grazes an endpoint; clamp to the nearer bracket end.
        if ascending {
            hi
        } else {
            lo
        }
    }

    /// Representation knots restricted to `[lo, hi]`, with the interval ends
    /// included.
    fn piece_knots(&self, lo: f64, hi: f64) -> Vec<f64> {
        let mut ks = vec![lo];
        let inner: &[f64] = match &self.dist.repr {
            Repr::Atoms { cum, .. } => cum,
            Repr::Quantile { rs, .. } => rs,
        };
        for &k in inner {
            if k > lo && k < hi {
                ks.push(k);
            }
        }
        ks.push(hi);
        ks
    }

    /// Exact root of the level equation on one representation piece starting
    /// at `a` where `level(a) = ga`. The level is linear on atom pieces and
    /// quadratic on quantile pieces.
    fn solve_on_piece(&self, a: f64, b: f64, ga: f64, c: f64) -> Option<f64> {
        let width = b - a;
        match &self.dist.repr {
            Repr::Atoms { .. } => {
                let q = self.dist.quantile_unchecked(0.5 * (a + b));
                let slope = 1.0 - q;
                if slope == 0.0 {
                    return None;
                }
                Some((a + (c - ga) / slope).clamp(a, b))
            }
            Repr::Quantile { .. } => {
                // level(a + w) - c = (ga - c) + (1 - q_a) w - s w^2 / 2
                let qa = self.dist.quantile_unchecked(a);
                let qb = self.dist.quantile_unchecked(b);
                let s = (qb - qa) / width;
                let bb = 1.0 - qa;
                let cc = ga - c;
                if s == 0.0 {
                    if bb == 0.0 {
                        return None;
                    }
                    return Some((a - cc / bb).clamp(a, b));
                }
                let aa = -0.5 * s;
                let disc = bb * bb - 4.0 * aa * cc;
                if disc < 0.0 {
                    return None;
                }
                let sq = disc.sqrt();
                let q = -0.5 * (bb + bb.signum() * sq);
                let mut cands = Vec::with_capacity(2);
                if aa != 0.0 {
                    cands.push(q / aa);
                }
                if q != 0.0 {
                    cands.push(cc / q);
                }
                let eps = 1e-9 * width.max(1e-12);
                cands
                    .into_iter()
                    .filter(|w| (-eps..=width + eps).contains(w))
                    .map(|w| (a + w).clamp(a, b))
                    .min_by(|x, y| {
                        let ex = (self.level_unchecked(*x) - c).abs();
                        let ey = (self.level_unchecked(*y) - c).abs();
                        ex.total_cmp(&ey)
                    })
            }
        }
    }
}

fn check_rank(op: &'static str, r: f64) -> Result<()> {
    if (0.0..=1.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::Domain { op, detail: format!("rank r = {r} outside [0, 1]") })
    }
}

fn piece_index(rs: &[f64], r: f64) -> usize {
    // Largest i with rs[i] <= r, capped to the next-to-last knot.
    match rs.binary_search_by(|probe| probe.total_cmp(&r)) {
        Ok(i) => i.min(rs.len() - 2),
        Err(i) => (i - 1).min(rs.len() - 2),
    }
}

/// Where the quantile crosses level 1. To the left of the interval the level
/// function strictly increases, to the right it strictly decreases, and on
/// it the level is flat at its maximum.
fn argmax_interval(dist: &TargetDistribution) -> (f64, f64) {
    match &dist.repr {
        Repr::Atoms { values, cum, .. } => {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for (i, &v) in values.iter().enumerate() {
                if v < 1.0 {
                    lo = cum[i];
                }
                if v <= 1.0 {
                    hi = cum[i];
                }
            }
            // All mass strictly below 1: the level keeps rising to r = 1.
            if values.iter().all(|&v| v < 1.0) {
                return (1.0, 1.0);
            }
            (lo.min(hi), hi.max(lo))
        }
        Repr::Quantile { rs, qs } => {
            let n = rs.len();
            let lo = if qs[0] >= 1.0 {
                0.0
            } else {
                let mut out = 1.0;
                for i in 1..n {
                    if qs[i] >= 1.0 {
                        out = if qs[i] > qs[i - 1] {
                            rs[i - 1] + (1.0 - qs[i - 1]) / (qs[i] - qs[i - 1]) * (rs[i] - rs[i - 1])
                        } else {
                            rs[i - 1]
                        };
                        break;
                    }
                }
                out
            };
            let hi = if *qs.last().unwrap() <= 1.0 {
                1.0
            } else {
                let mut out = 0.0;
                for i in (1..n).rev() {
                    if qs[i - 1] <= 1.0 {
                        out = if qs[i] > qs[i - 1] {
                            rs[i - 1] + (1.0 - qs[i - 1]) / (qs[i] - qs[i - 1]) * (rs[i] - rs[i - 1])
                        } else {
                            rs[i]
                        };
                        break;
                    }
                }
                out
            };
            (lo.min(hi), hi.max(lo))
        }
    }
}

fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64, c: f64, ascending: bool) -> f64 {
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        let v = f(m);
        if (v - c).abs() <= ROOT_TOL || (b - a).abs() < f64::EPSILON {
            return m;
        }
        let below = if ascending { v < c } else { v > c };
        if below {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}
