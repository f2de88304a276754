//! Sample statistics used by the verification layers: means with standard
//! errors, one- and two-sample Kolmogorov-Smirnov distances, and a normal
//! CDF for Gaussianity checks.

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, f64::NAN);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Two-sample KS distance `sup_x |F_a(x) - F_b(x)|` between empirical CDFs.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut xs = a.to_vec();
    let mut ys = b.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    ys.sort_by(|p, q| p.total_cmp(q));
    let (na, nb) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut diff: f64 = 0.0;
    let mut best: f64 = 0.0;
    while i < xs.len() || j < ys.len() {
        let take_a = match (xs.get(i), ys.get(j)) {
            (Some(x), Some(y)) => x <= y,
            (Some(_), None) => true,
            _ => false,
        };
        if take_a {
            let v = xs[i];
            while i < xs.len() && xs[i] == v {
                diff += 1.0 / na;
                i += 1;
            }
            while j < ys.len() && ys[j] == v {
                diff -= 1.0 / nb;
                j += 1;
            }
        } else {
            let v = ys[j];
            while j < ys.len() && ys[j] == v {
                diff -= 1.0 / nb;
                j += 1;
            }
        }
        best = best.max(diff.abs());
    }
    best
}

/// One-sample KS distance against a target CDF that may carry atoms.
///
/// `cdf(x) = P(X <= x)` and `cdf_left(x) = P(X < x)`; the supremum over a
/// cadlag target is attained either at a sample point or just before one.
pub fn ks_against_cdf<F, G>(samples: &[f64], cdf: F, cdf_left: G) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64) -> f64,
{
    let mut xs = samples.to_vec();
    xs.sort_by(|p, q| p.total_cmp(q));
    let n = xs.len() as f64;
    let mut best: f64 = 0.0;
    let mut i = 0usize;
    let mut below = 0usize;
    while i < xs.len() {
        let v = xs[i];
        let mut k = i;
        while k < xs.len() && xs[k] == v {
            k += 1;
        }
        let emp_lo = below as f64 / n;
        let emp_hi = k as f64 / n;
        best = best.max((emp_hi - cdf(v)).abs());
        best = best.max((cdf_left(v) - emp_lo).abs());
        below = k;
        i = k;
    }
    best
}

/// One-sample KS distance against a finite discrete law given as
/// `(value, probability)` atoms.
pub fn ks_against_atoms(samples: &[f64], atoms: &[(f64, f64)]) -> f64 {
    let mut sorted = atoms.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let cdf = |x: f64| sorted.iter().take_while(|(v, _)| *v <= x).map(|(_, p)| p).sum::<f64>();
    let cdf_left = |x: f64| sorted.iter().take_while(|(v, _)| *v < x).map(|(_, p)| p).sum::<f64>();
    ks_against_cdf(samples, cdf, cdf_left)
}

/// Standard normal CDF via the Abramowitz-Stegun 7.1.26 erf approximation
/// (absolute error below 1.5e-7, ample for KS checks at these sample sizes).
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * (1.0 + erf(x / std::f64::consts::SQRT_2))
}

fn erf(x: f64) -> f64 {
    let sign = if x < 0.0 { -1.0 } else { 1.0 };
    let x = x.abs();
    let t = 1.0 / (1.0 + 0.327_591_1 * x);
    let y = 1.0
        - (((((1.061_405_429 * t - 1.453_152_027) * t) + 1.421_413_741) * t - 0.284_496_736) * t
            + 0.254_829_592)
            * t
            * (-x * x).exp();
    sign * y
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::Stream;

    #[test]
    fn normal_cdf_reference_points() {
        assert!((normal_cdf(0.0) - 0.5).abs() < 2e-7);
        assert!((normal_cdf(1.959_963_985) - 0.975).abs() < 1e-6);
        assert!((normal_cdf(-1.0) - 0.158_655_25).abs() < 1e-6);
    }

    #[test]
    fn two_sample_ks_identical_is_zero() {
        let xs = [1.0, 2.0, 2.0, 3.5];
        assert_eq!(ks_two_sample(&xs, &xs), 0.0);
    }

    #[test]
    fn two_sample_ks_disjoint_is_one() {
        let a = [0.0, 0.5, 1.0];
        let b = [5.0, 6.0];
        assert_eq!(ks_two_sample(&a, &b), 1.0);
    }

    #[test]
    fn ks_against_atoms_exact_match() {
        // Empirical law identical to the target: distance 0.
        let samples = [0.0, 0.0, 2.0, 2.0];
        let atoms = [(0.0, 0.5), (2.0, 0.5)];
        assert!(ks_against_atoms(&samples, &atoms) < 1e-15);
    }

    #[test]
    fn ks_against_atoms_detects_shift() {
        let samples = [1.0, 1.0, 1.0, 1.0];
        let atoms = [(0.0, 0.5), (2.0, 0.5)];
        // Empirical jumps to 1 at x=1 while the target is 0.5 there.
        assert!((ks_against_atoms(&samples, &atoms) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_gaussian_sample_small_distance() {
        let mut s = Stream::new(3, 0);
        let xs: Vec<f64> = (0..20_000).map(|_| s.normal()).collect();
        let d = ks_against_cdf(&xs, normal_cdf, normal_cdf);
        assert!(d < 0.012, "ks {d}");
    }
}
