//! Embedding of a single target law in a geometric Brownian motion started
//! at 1: draw a uniform randomization value, form the barrier pair, and
//! realize the exit value either analytically (from the two-point exit law)
//! or pathwise (by simulating to the first barrier crossing).
//!
//! Verification helpers check the two defining identities: the law of the
//! exit value equals the target, and the exit value has conditional mean 1
//! given the level variable `eta` on the event where both barriers are
//! finite.

use rayon::prelude::*;
use serde::Serialize;

use crate::dist::{BarrierPair, GCalculus, TargetDistribution};
use crate::error::{Error, Result};
use crate::paths::{first_exit, ExitSide, PathConfig};
use crate::rng::Stream;
use crate::stats;

/// The law of the exit value for one barrier pair: at most two points.
///
/// The GBM is a martingale on natural scale, so for finite barriers the exit
/// probabilities interpolate linearly and the law has mean exactly 1; with an
/// infinite upper barrier the path drifts to zero and the lower level is hit
/// almost surely (a zero lower level means the exit never happens and the
/// exit value is 0).
#[derive(Debug, Clone, PartialEq)]
pub struct ExitLaw {
    points: Vec<(f64, f64)>,
}

impl ExitLaw {
    pub fn of(b: &BarrierPair) -> ExitLaw {
        let (alpha, beta) = (b.alpha, b.beta);
        if !beta.is_finite() {
            return ExitLaw { points: vec![(alpha, 1.0)] };
        }
        if alpha == beta {
            return ExitLaw { points: vec![(alpha, 1.0)] };
        }
        let p_upper = (1.0 - alpha) / (beta - alpha);
        let p_lower = (beta - 1.0) / (beta - alpha);
        let mut points = Vec::with_capacity(2);
        if p_lower > 0.0 {
            points.push((alpha, p_lower));
        }
        if p_upper > 0.0 {
            points.push((beta, p_upper));
        }
        ExitLaw { points }
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn mean(&self) -> f64 {
        self.points.iter().map(|&(v, p)| v * p).sum()
    }

    /// Map a uniform draw to an exit value.
    pub fn sample(&self, u: f64) -> f64 {
        let mut acc = 0.0;
        for &(v, p) in &self.points {
            acc += p;
            if u < acc {
                return v;
            }
        }
        self.points.last().expect("exit law has at least one point").0
    }
}

/// One embedding replica: the randomization value, its level, the barriers,
/// and the realized exit value. `tau` is recorded in pathwise mode only and
/// is grid-accurate.
#[derive(Debug, Clone)]
pub struct EmbeddingSample {
    pub r: f64,
    pub eta: f64,
    pub alpha: f64,
    pub beta: f64,
    pub y: f64,
    pub tau: Option<f64>,
    pub censored: bool,
}

/// Analytic-mode sampling: exit values drawn from the exit law directly.
/// Deterministic for a given `(seed, n)` regardless of parallel schedule.
pub fn sample_embedding(
    dist: &TargetDistribution,
    seed: u64,
    n: usize,
) -> Result<Vec<EmbeddingSample>> {
    if n == 0 {
        return Err(Error::Domain { op: "sample_embedding", detail: "n must be >= 1".into() });
    }
    let calc = GCalculus::new(dist)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, i);
            let r = rng.uniform();
            let b = calc.barrier_pair(r)?;
            let y = ExitLaw::of(&b).sample(rng.uniform());
            Ok(EmbeddingSample {
                r,
                eta: calc.level(r)?,
                alpha: b.alpha,
                beta: b.beta,
                y,
                tau: None,
                censored: false,
            })
        })
        .collect()
}

/// Pathwise sampling: simulate the GBM to its first exit from the barrier
/// interval. Replicas that exhaust the horizon are flagged censored and
/// excluded from law verification.
pub fn sample_embedding_pathwise(
    dist: &TargetDistribution,
    seed: u64,
    n: usize,
    cfg: &PathConfig,
) -> Result<Vec<EmbeddingSample>> {
    if n == 0 {
        return Err(Error::Domain {
            op: "sample_embedding_pathwise",
            detail: "n must be >= 1".into(),
        });
    }
    let calc = GCalculus::new(dist)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = Stream::new(seed, i);
            let r = rng.uniform();
            let b = calc.barrier_pair(r)?;
            let ev = first_exit(&mut rng, 1.0, b.alpha, b.beta, cfg);
            Ok(EmbeddingSample {
                r,
                eta: calc.level(r)?,
                alpha: b.alpha,
                beta: b.beta,
                y: ev.value,
                tau: Some(ev.time),
                censored: ev.side == ExitSide::Censored,
            })
        })
        .collect()
}

/// Goodness-of-fit report for the realized exit-value law.
#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub ks: f64,
    pub n: usize,
    pub censored: usize,
    pub pass: bool,
    pub threshold: f64,
}

/// Two-sided KS distance between the empirical law of the realized values
/// and the target. Needs at least 100 uncensored samples.
pub fn verify_law(
    samples: &[EmbeddingSample],
    dist: &TargetDistribution,
    threshold: f64,
) -> Result<FitReport> {
    let ys: Vec<f64> = samples.iter().filter(|s| !s.censored).map(|s| s.y).collect();
    if ys.len() < 100 {
        return Err(Error::TooFewSamples { needed: 100, got: ys.len() });
    }
    let ks = stats::ks_against_cdf(&ys, |x| dist.cdf(x), |x| dist.cdf_left(x));
    Ok(FitReport {
        ks,
        n: ys.len(),
        censored: samples.len() - ys.len(),
        pass: ks < threshold,
        threshold,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaBin {
    pub eta_lo: f64,
    pub eta_hi: f64,
    pub count: usize,
    pub mean: f64,
    pub se: f64,
}

/// Binned check of `E(y | eta) = 1` on the event where the level is at
/// least `level(1)` (both barriers finite there).
#[derive(Debug, Clone, Serialize)]
pub struct ConditionalMeanReport {
    pub bins: Vec<EtaBin>,
    pub vacuous: bool,
    pub pass: bool,
}

/// Partition `{eta >= level(1)}` into equal-count bins and test each bin
/// mean against 1 at three standard errors. Degenerate conditioning (empty
/// event, or a level variable that is almost surely constant, as for a point
/// mass at 1) yields a vacuous report.
pub fn verify_conditional_mean(
    samples: &[EmbeddingSample],
    calc: &GCalculus,
    n_bins: usize,
) -> Result<ConditionalMeanReport> {
    let cut = calc.level_at_one();
    let mut pairs: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| !s.censored && s.eta >= cut)
        .map(|s| (s.eta, s.y))
        .collect();
    if pairs.is_empty() {
        return Ok(ConditionalMeanReport { bins: vec![], vacuous: true, pass: true });
    }
    let eta_min = pairs.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let eta_max = pairs.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    if eta_max - eta_min < 1e-15 {
        return Ok(ConditionalMeanReport { bins: vec![], vacuous: true, pass: true });
    }
    if pairs.len() < 1000 {
        return Err(Error::TooFewSamples { needed: 1000, got: pairs.len() });
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let n_bins = n_bins.max(10);
    let mut bins = Vec::with_capacity(n_bins);
    let mut pass = true;
    for b in 0..n_bins {
        let lo = b * pairs.len() / n_bins;
        let hi = ((b + 1) * pairs.len() / n_bins).max(lo + 1).min(pairs.len());
        let slice = &pairs[lo..hi];
        let ys: Vec<f64> = slice.iter().map(|p| p.1).collect();
        let (mean, se) = stats::mean_and_se(&ys);
        // A bin of identical exit draws can have zero spread; fall back to
        // an exact comparison there.
        let ok = if se.is_nan() || se == 0.0 {
            mean == 1.0 || (mean - 1.0).abs() < 1e-12
        } else {
            (mean - 1.0).abs() <= 3.0 * se
        };
        pass &= ok;
        bins.push(EtaBin {
            eta_lo: slice.first().unwrap().0,
            eta_hi: slice.last().unwrap().0,
            count: slice.len(),
            mean,
            se: if se.is_nan() { 0.0 } else { se },
        });
    }
    Ok(ConditionalMeanReport { bins, vacuous: false, pass })
}

/// Render samples as CSV with header `r,eta,alpha,beta,y,tau,censored`;
/// infinities are written as the literal `inf`, and `tau` is empty in
/// analytic mode.
pub fn render_csv(samples: &[EmbeddingSample]) -> String {
    let mut out = String::from("r,eta,alpha,beta,y,tau,censored\n");
    for s in samples {
        let tau = match s.tau {
            None => String::new(),
            Some(t) => fmt_ext(t),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            fmt_ext(s.r),
            fmt_ext(s.eta),
            fmt_ext(s.alpha),
            fmt_ext(s.beta),
            fmt_ext(s.y),
            tau,
            s.censored
        ));
    }
    out
}

pub(crate) fn fmt_ext(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn uniform_0_2() -> TargetDistribution {
        TargetDistribution::from_quantile_knots(&[(0.0, 0.0), (1.0, 2.0)]).unwrap()
    }

    #[test]
    fn exit_law_symmetric_interval() {
        let law = ExitLaw::of(&BarrierPair { alpha: 0.0, beta: 2.0 });
        assert_eq!(law.points(), &[(0.0, 0.5), (2.0, 0.5)]);
    }

    #[test]
    fn exit_law_degenerate() {
        let law = ExitLaw::of(&BarrierPair { alpha: 1.0, beta: 1.0 });
        assert_eq!(law.points(), &[(1.0, 1.0)]);
    }

    #[test]
    fn exit_law_asymmetric() {
        let law = ExitLaw::of(&BarrierPair { alpha: 0.6, beta: 1.4 });
        let pts = law.points();
        assert_eq!(pts.len(), 2);
        assert!((pts[0].1 - 0.5).abs() < 1e-12);
        assert!((pts[1].1 - 0.5).abs() < 1e-12);
    }

    #[test]
    fn exit_law_mean_is_one_for_finite_barriers() {
        for (a, b) in [(0.0, 2.0), (0.25, 1.5), (0.6, 1.4), (0.9, 4.0)] {
            let law = ExitLaw::of(&BarrierPair { alpha: a, beta: b });
            assert!((law.mean() - 1.0).abs() < 1e-12, "mean for ({a}, {b})");
        }
    }

    #[test]
    fn exit_law_infinite_upper() {
        let law = ExitLaw::of(&BarrierPair { alpha: 0.5, beta: f64::INFINITY });
        assert_eq!(law.points(), &[(0.5, 1.0)]);
    }

    #[test]
    fn point_mass_at_one_trivial_samples() {
        let dist = TargetDistribution::point_mass(1.0).unwrap();
        let samples = sample_embedding(&dist, 99, 4).unwrap();
        for s in &samples {
            assert_eq!(s.y, 1.0);
            assert_eq!((s.alpha, s.beta), (1.0, 1.0));
        }
    }

    #[test]
    fn bernoulli_embedding_frequency() {
        let dist = TargetDistribution::from_atoms(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let samples = sample_embedding(&dist, 1, 100_000).unwrap();
        let p_two = samples.iter().filter(|s| s.y == 2.0).count() as f64 / samples.len() as f64;
        assert!((0.49..=0.51).contains(&p_two), "P(y = 2) = {p_two}");
    }

    #[test]
    fn deficient_bernoulli_mean() {
        let dist = TargetDistribution::from_atoms(&[(0.0, 0.5), (1.0, 0.5)]).unwrap();
        let samples = sample_embedding(&dist, 2, 100_000).unwrap();
        let mean = samples.iter().map(|s| s.y).sum::<f64>() / samples.len() as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn sampling_is_deterministic() {
        let dist = uniform_0_2();
        let a = sample_embedding(&dist, 7, 512).unwrap();
        let b = sample_embedding(&dist, 7, 512).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.y.to_bits(), y.y.to_bits());
            assert_eq!(x.r.to_bits(), y.r.to_bits());
        }
    }

    #[test]
    fn pathwise_point_mass_tau_zero() {
        let dist = TargetDistribution::point_mass(1.0).unwrap();
        let samples =
            sample_embedding_pathwise(&dist, 3, 16, &PathConfig::default()).unwrap();
        for s in &samples {
            assert_eq!(s.tau, Some(0.0));
            assert_eq!(s.y, 1.0);
        }
    }

    #[test]
    fn pathwise_point_mass_half() {
        // Barriers (0.5, inf) are forced; the lower level is hit a.s.
        let dist = TargetDistribution::point_mass(0.5).unwrap();
        let samples =
            sample_embedding_pathwise(&dist, 4, 200, &PathConfig::default()).unwrap();
        for s in &samples {
            assert_eq!(s.y, 0.5);
            assert!(s.tau.unwrap().is_finite());
        }
        let mean_tau =
            samples.iter().map(|s| s.tau.unwrap()).sum::<f64>() / samples.len() as f64;
        assert!(mean_tau > 0.0);
    }

    #[test]
    fn verify_law_self_consistent() {
        let dist = uniform_0_2();
        let samples = sample_embedding(&dist, 5, 100_000).unwrap();
        let report = verify_law(&samples, &dist, 0.01).unwrap();
        assert!(report.pass, "ks = {}", report.ks);
        assert_eq!(report.censored, 0);
    }

    #[test]
    fn verify_law_detects_mismatch() {
        let bern = TargetDistribution::from_atoms(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let samples = sample_embedding(&bern, 5, 20_000).unwrap();
        let report = verify_law(&samples, &uniform_0_2(), 0.25).unwrap();
        assert!(report.ks >= 0.25, "ks = {}", report.ks);
        assert!(!report.pass);
    }

    #[test]
    fn verify_law_exactly_zero_for_degenerate_match() {
        let dist = TargetDistribution::point_mass(1.0).unwrap();
        let samples = sample_embedding(&dist, 8, 500).unwrap();
        let report = verify_law(&samples, &dist, 0.01).unwrap();
        assert_eq!(report.ks, 0.0);
    }

    #[test]
    fn pathwise_sampling_is_deterministic() {
        let dist = TargetDistribution::from_atoms(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let cfg = PathConfig::default();
        let a = sample_embedding_pathwise(&dist, 9, 64, &cfg).unwrap();
        let b = sample_embedding_pathwise(&dist, 9, 64, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.y.to_bits(), y.y.to_bits());
            assert_eq!(x.tau, y.tau);
        }
    }

    #[test]
    fn verify_law_needs_samples() {
        let dist = uniform_0_2();
        let samples = sample_embedding(&dist, 5, 50).unwrap();
        assert!(matches!(
            verify_law(&samples, &dist, 0.01),
            Err(Error::TooFewSamples { .. })
        ));
    }

    #[test]
    fn conditional_mean_uniform() {
        let dist = uniform_0_2();
        let calc = GCalculus::new(&dist).unwrap();
        let samples = sample_embedding(&dist, 6, 100_000).unwrap();
        let report = verify_conditional_mean(&samples, &calc, 10).unwrap();
        assert!(!report.vacuous);
        assert!(report.pass);
        for bin in &report.bins {
            assert!((bin.mean - 1.0).abs() <= 0.03, "bin mean {}", bin.mean);
        }
    }

    #[test]
    fn conditional_mean_two_point_target() {
        // The level carries no information here (every draw sees the same
        // (0, 2) exit law), so the bins are one effective bin: each passes
        // its own band and the aggregate sits within 1 +/- 0.02.
        let dist = TargetDistribution::from_atoms(&[(0.0, 0.5), (2.0, 0.5)]).unwrap();
        let calc = GCalculus::new(&dist).unwrap();
        let samples = sample_embedding(&dist, 21, 100_000).unwrap();
        let report = verify_conditional_mean(&samples, &calc, 10).unwrap();
        assert!(report.pass);
        let (total, count) = report
            .bins
            .iter()
            .fold((0.0, 0), |acc, b| (acc.0 + b.mean * b.count as f64, acc.1 + b.count));
        let aggregate = total / count as f64;
        assert!((aggregate - 1.0).abs() <= 0.02, "aggregate mean {aggregate}");
    }

    #[test]
    fn conditional_mean_vacuous_for_point_mass() {
        let dist = TargetDistribution::point_mass(1.0).unwrap();
        let calc = GCalculus::new(&dist).unwrap();
        let samples = sample_embedding(&dist, 6, 5_000).unwrap();
        let report = verify_conditional_mean(&samples, &calc, 10).unwrap();
        assert!(report.vacuous);
    }

    #[test]
    fn csv_format() {
        let samples = vec![EmbeddingSample {
            r: 0.25,
            eta: 0.1,
            alpha: 0.5,
            beta: f64::INFINITY,
            y: 0.5,
            tau: Some(f64::INFINITY),
            censored: false,
        }];
        let csv = render_csv(&samples);
        let mut lines = csv.lines();
        assert_eq!(lines.next().unwrap(), "r,eta,alpha,beta,y,tau,censored");
        assert_eq!(lines.next().unwrap(), "0.25,0.1,0.5,inf,0.5,inf,false");
    }
}
