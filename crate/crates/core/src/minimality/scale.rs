//! Scale functions of one-dimensional diffusions and boundary
//! classification.
//!
//! For `dX = mu(X) dt + sigma(X) dW` on `J = (l, r)` with reference point
//! `c`, the scale function is
//!
//! ```text
//! s(x) = ∫_c^x exp( -∫_c^y (2 mu / sigma^2)(z) dz ) dy,
//! ```
//!
//! strictly increasing with `s(c) = 0` and `s'(c) = 1`. Values come from
//! nested adaptive quadrature; finiteness of `s` at the boundaries comes
//! from the symbolic tail of the integrand, never from numerical
//! extrapolation alone.

use serde::Serialize;

use super::expr::Expr;
use super::tail::{self, Boundary, Tail};
use crate::error::{Error, Result};

/// A one-dimensional diffusion on the open interval `(lower, upper)` with
/// pointwise-evaluable drift and diffusion coefficients.
#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    pub lower: f64,
    pub upper: f64,
    pub mu: Expr,
    pub sigma: Expr,
    /// Reference point `c` inside the domain; `s(c) = 0`.
    pub reference: f64,
}

impl DiffusionSpec {
    pub fn new(lower: f64, upper: f64, mu: Expr, sigma: Expr, reference: f64) -> Result<Self> {
        if !(lower < upper) {
            return Err(Error::InvalidSpec(format!(
                "domain: lower {lower} must be below upper {upper}"
            )));
        }
        if !(reference > lower && reference < upper) {
            return Err(Error::InvalidSpec(format!(
                "reference: c = {reference} must lie inside ({lower}, {upper})"
            )));
        }
        let spec = DiffusionSpec { lower, upper, mu, sigma, reference };
        spec.validate_coefficients()?;
        Ok(spec)
    }

    /// Nonvanishing diffusion coefficient and finite `1/sigma^2`,
    /// `mu/sigma^2` on a validation grid spanning the domain (a pointwise
    /// surrogate for local integrability).
    fn validate_coefficients(&self) -> Result<()> {
        for x in self.validation_grid() {
            let s = self.sigma.eval(x);
            if !s.is_finite() || s == 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "sigma: vanishes or is not finite at x = {x}"
                )));
            }
            let m = self.mu.eval(x);
            if !(m / (s * s)).is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "mu/sigma^2: not finite at x = {x}"
                )));
            }
        }
        Ok(())
    }

    fn validation_grid(&self) -> Vec<f64> {
        let mut xs = vec![self.reference];
        for k in 0..40 {
            let step = 2f64.powi(k - 20);
            let up = if self.upper.is_finite() {
                self.reference + (self.upper - self.reference) * (1.0 - 2f64.powi(-k - 1))
            } else {
                self.reference + step
            };
            let dn = if self.lower.is_finite() {
                self.reference - (self.reference - self.lower) * (1.0 - 2f64.powi(-k - 1))
            } else {
                self.reference - step
            };
            if up > self.lower && up < self.upper {
                xs.push(up);
            }
            if dn > self.lower && dn < self.upper {
                xs.push(dn);
            }
        }
        xs
    }

    /// The scale density exponent integrand `2 mu / sigma^2` as an
    /// expression.
    fn log_density_slope(&self) -> Expr {
        Expr::Mul(
            Box::new(Expr::Const(2.0)),
            Box::new(Expr::Div(
                Box::new(self.mu.clone()),
                Box::new(Expr::Mul(Box::new(self.sigma.clone()), Box::new(self.sigma.clone()))),
            )),
        )
    }

    /// Scale function value by nested adaptive quadrature. The span between
    /// the reference point and `x` is pre-refined so the cached inner
    /// integral stays accurate regardless of distance.
    pub fn scale_at(&self, x: f64) -> Result<f64> {
        if !(x > self.lower && x < self.upper) {
            return Err(Error::Domain {
                op: "scale_at",
                detail: format!("x = {x} outside ({}, {})", self.lower, self.upper),
            });
        }
        if x == self.reference {
            return Ok(0.0);
        }
        let (lo, hi) = (self.reference.min(x), self.reference.max(x));
        let n = 256;
        let xs: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let table = self.scale_table(&xs)?;
        Ok(if x > self.reference { *table.values.last().unwrap() } else { table.values[0] })
    }

    /// Tabulate the scale function on sorted grid points inside the domain.
    pub fn scale_table(&self, xs: &[f64]) -> Result<ScaleFunctionTable> {
        for w in xs.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Domain {
                    op: "scale_table",
                    detail: "grid must be strictly increasing".into(),
                });
            }
        }
        if let (Some(first), Some(last)) = (xs.first(), xs.last()) {
            if *first <= self.lower || *last >= self.upper {
                return Err(Error::Domain {
                    op: "scale_table",
                    detail: format!(
                        "grid [{first}, {last}] leaves the domain ({}, {})",
                        self.lower, self.upper
                    ),
                });
            }
        }
        let f = self.log_density_slope();
        let slope = |y: f64| f.eval(y);

        // Anchor points: grid plus the reference, each with the cumulative
        // inner integral G; rho is evaluated on demand from the nearest
        // anchor to its left.
        let mut anchors: Vec<f64> = xs.to_vec();
        let pos = anchors.partition_point(|&v| v < self.reference);
        let has_ref = anchors.get(pos) == Some(&self.reference);
        if !has_ref {
            anchors.insert(pos, self.reference);
        }
        let n = anchors.len();
        let mut g = vec![0.0; n];
        for i in (pos + 1)..n {
            g[i] = g[i - 1] + adaptive_simpson(&slope, anchors[i - 1], anchors[i], QUAD_TOL)?;
        }
        for i in (0..pos).rev() {
            g[i] = g[i + 1] - adaptive_simpson(&slope, anchors[i], anchors[i + 1], QUAD_TOL)?;
        }

        let mut s = vec![0.0; n];
        for i in (pos + 1)..n {
            let a = anchors[i - 1];
            let ga = g[i - 1];
            let rho = |y: f64| {
                let inner = ga + quick_simpson(&slope, a, y);
                (-inner).exp()
            };
            s[i] = s[i - 1] + adaptive_simpson(&rho, a, anchors[i], QUAD_TOL)?;
        }
        for i in (0..pos).rev() {
            let a = anchors[i];
            let ga = g[i];
            let rho = |y: f64| {
                let inner = ga + quick_simpson(&slope, a, y);
                (-inner).exp()
            };
            s[i] = s[i + 1] - adaptive_simpson(&rho, a, anchors[i + 1], QUAD_TOL)?;
        }

        let values: Vec<f64> = xs
            .iter()
            .map(|x| {
                let i = anchors.partition_point(|&v| v < *x);
                s[i]
            })
            .collect();
        for w in values.windows(2) {
            if !(w[1] > w[0]) {
                return Err(Error::Numerical(
                    "scale table lost strict monotonicity; tolerance too loose".into(),
                ));
            }
        }
        let class = self.classify_boundaries()?;
        Ok(ScaleFunctionTable {
            xs: xs.to_vec(),
            values,
            s_at_upper_finite: class.s_finite_at_upper,
            s_at_lower_finite: class.s_finite_at_lower,
        })
    }

    /// Finiteness of the scale function at each boundary from the symbolic
    /// tail of the scale density; inconclusive tails are surfaced as `None`
    /// rather than guessed.
    pub fn classify_boundaries(&self) -> Result<BoundaryClassification> {
        let f = self.log_density_slope();
        let upper = if self.upper.is_finite() {
            let b = Boundary::Finite { at: self.upper, from_above: false };
            scale_density_integrable(&f, b, true)
        } else {
            scale_density_integrable(&f, Boundary::PlusInfinity, true)
        };
        let lower = if self.lower.is_finite() {
            let b = Boundary::Finite { at: self.lower, from_above: true };
            scale_density_integrable(&f, b, false)
        } else {
            scale_density_integrable(&f, Boundary::MinusInfinity, false)
        };
        let verdict = match (upper, lower) {
            (Some(true), _) | (_, Some(true)) => DiffusionKind::Transient,
            (Some(false), Some(false)) => DiffusionKind::Recurrent,
            _ => DiffusionKind::Inconclusive,
        };
        let conclusion = match verdict {
            DiffusionKind::Transient => Some(
                "scale function finite at a boundary: every stopping time bounded by the exit \
                 time is minimal"
                    .to_string(),
            ),
            _ => None,
        };
        Ok(BoundaryClassification {
            s_finite_at_upper: upper,
            s_finite_at_lower: lower,
            verdict,
            conclusion,
        })
    }
}

/// Is `∫ exp(-G)` finite toward the boundary, where `G` is the cumulative
/// of the scale density exponent? On the lower side the cumulative enters
/// with a minus sign (`G(y) = -∫_y^c f`).
fn scale_density_integrable(f: &Expr, boundary: Boundary, upper_side: bool) -> Option<bool> {
    let near_zero = matches!(boundary, Boundary::Finite { .. });
    let t_f = tail::tail(f, boundary);
    let cumulative = tail::cumulative_tail(&t_f, near_zero);
    let g = if upper_side { cumulative } else { tail::neg(cumulative) };
    let rho = tail::exponential(tail::neg(g), near_zero);
    if matches!(rho, Tail::Unknown) {
        return None;
    }
    tail::integral_diverges(&rho, near_zero).map(|d| !d)
}

#[derive(Debug, Clone, Serialize)]
pub struct ScaleFunctionTable {
    pub xs: Vec<f64>,
    pub values: Vec<f64>,
    pub s_at_upper_finite: Option<bool>,
    pub s_at_lower_finite: Option<bool>,
}

impl ScaleFunctionTable {
    /// Piecewise-linear interpolation (clamped at the ends).
    pub fn interpolate(&self, x: f64) -> f64 {
        if x <= self.xs[0] {
            return self.values[0];
        }
        if x >= *self.xs.last().unwrap() {
            return *self.values.last().unwrap();
        }
        let i = self.xs.partition_point(|&v| v <= x) - 1;
        let w = (x - self.xs[i]) / (self.xs[i + 1] - self.xs[i]);
        self.values[i] + w * (self.values[i + 1] - self.values[i])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DiffusionKind {
    /// The scale function is finite at some boundary.
    Transient,
    /// The scale function diverges at both boundaries.
    Recurrent,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct BoundaryClassification {
    pub s_finite_at_upper: Option<bool>,
    pub s_finite_at_lower: Option<bool>,
    pub verdict: DiffusionKind,
    pub conclusion: Option<String>,
}

const QUAD_TOL: f64 = 1e-9;

/// Adaptive Simpson quadrature with a strict budget; errors out instead of
/// returning a low-quality value.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let mut budget: u64 = 2_000_000;
    let v = simpson_step(f, a, b, fa, fm, fb, whole, tol, 50, &mut budget)?;
    Ok(v)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
    budget: &mut u64,
) -> Result<f64> {
    if *budget == 0 {
        return Err(Error::Numerical(format!(
            "quadrature budget exhausted on [{a}, {b}]"
        )));
    }
    *budget -= 1;
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let err = left + right - whole;
    let scale = 1.0 + whole.abs();
    if err.abs() <= 15.0 * tol * scale || depth == 0 {
        if depth == 0 && err.abs() > 1e3 * tol * scale {
            return Err(Error::Numerical(format!(
                "quadrature failed to converge on [{a}, {b}] (residual {err:e})"
            )));
        }
        return Ok(left + right + err / 15.0);
    }
    let lv = simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1, budget)?;
    let rv = simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1, budget)?;
    Ok(lv + rv)
}

/// Fixed-node composite Simpson for the short inner integrals between
/// anchors (the integrand is smooth there and the spans are small).
fn quick_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if a == b {
        return 0.0;
    }
    const PANELS: usize = 8;
    let h = (b - a) / (2 * PANELS) as f64;
    let mut acc = f(a) + f(b);
    for k in 1..(2 * PANELS) {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + k as f64 * h);
    }
    acc * h / 3.0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(lower: f64, upper: f64, mu: &str, sigma: &str, c: f64) -> DiffusionSpec {
        DiffusionSpec::new(
            lower,
            upper,
            Expr::parse(mu).unwrap(),
            Expr::parse(sigma).unwrap(),
            c,
        )
        .unwrap()
    }

    fn grid(a: f64, b: f64, step: f64) -> Vec<f64> {
        let n = ((b - a) / step).round() as usize;
        (0..=n).map(|k| a + k as f64 * step).collect()
    }

    #[test]
    fn driftless_scale_is_identity() {
        let d = spec(f64::NEG_INFINITY, f64::INFINITY, "0", "1", 0.0);
        let xs = grid(-3.0, 3.0, 0.25);
        let t = d.scale_table(&xs).unwrap();
        for (x, s) in t.xs.iter().zip(&t.values) {
            assert!((s - x).abs() < 1e-10, "s({x}) = {s}");
        }
    }

    #[test]
    fn constant_negative_drift_scale_is_exponential() {
        let d = spec(f64::NEG_INFINITY, f64::INFINITY, "-0.5", "1", 0.0);
        let xs = grid(-3.0, 3.0, 0.01);
        let t = d.scale_table(&xs).unwrap();
        let mut worst = 0.0f64;
        for (x, s) in t.xs.iter().zip(&t.values) {
            worst = worst.max((s - (x.exp() - 1.0)).abs());
        }
        assert!(worst < 1e-6, "max error {worst}");
    }

    #[test]
    fn gbm_natural_scale() {
        let d = spec(0.0, f64::INFINITY, "0", "x", 1.0);
        let xs = grid(0.1, 4.0, 0.1);
        let t = d.scale_table(&xs).unwrap();
        for (x, s) in t.xs.iter().zip(&t.values) {
            assert!((s - (x - 1.0)).abs() < 1e-9, "s({x}) = {s}");
        }
        assert_eq!(t.s_at_lower_finite, Some(true));
        assert_eq!(t.s_at_upper_finite, Some(false));
    }

    #[test]
    fn scale_normalization_at_reference() {
        let d = spec(f64::NEG_INFINITY, f64::INFINITY, "-0.5", "1", 0.0);
        assert_eq!(d.scale_at(0.0).unwrap(), 0.0);
    }

    #[test]
    fn scale_derivative_is_one_at_reference() {
        let d = spec(f64::NEG_INFINITY, f64::INFINITY, "-0.5", "1", 0.0);
        let h = 1e-4;
        let sp = d.scale_at(h).unwrap();
        let sm = d.scale_at(-h).unwrap();
        assert!(((sp - sm) / (2.0 * h) - 1.0).abs() < 1e-6);
        // s(c) = 0 by construction: the table pins the reference anchor.
        let t = d.scale_table(&[-1.0, 0.0, 1.0]).unwrap();
        assert_eq!(t.values[1], 0.0);
    }

    #[test]
    fn classify_drifted_bm_transient() {
        for a in [1.0, -0.5] {
            let d = spec(f64::NEG_INFINITY, f64::INFINITY, &format!("{a}"), "1", 0.0);
            let c = d.classify_boundaries().unwrap();
            assert_eq!(c.verdict, DiffusionKind::Transient, "drift {a}");
            assert!(c.conclusion.is_some());
        }
    }

    #[test]
    fn classify_bm_recurrent() {
        let d = spec(f64::NEG_INFINITY, f64::INFINITY, "0", "1", 0.0);
        let c = d.classify_boundaries().unwrap();
        assert_eq!(c.verdict, DiffusionKind::Recurrent);
        assert_eq!(c.s_finite_at_upper, Some(false));
        assert_eq!(c.s_finite_at_lower, Some(false));
    }

    #[test]
    fn classify_gbm_transient() {
        let d = spec(0.0, f64::INFINITY, "0", "x", 1.0);
        let c = d.classify_boundaries().unwrap();
        assert_eq!(c.verdict, DiffusionKind::Transient);
        assert_eq!(c.s_finite_at_lower, Some(true));
    }

    #[test]
    fn classification_invariant_under_reference_shift() {
        // s(x) = e^{x - c} - const: finite toward -inf, divergent toward
        // +inf; the flags cannot depend on the reference point.
        for c_ref in [0.0, 0.7, -1.3] {
            let d = spec(f64::NEG_INFINITY, f64::INFINITY, "-0.5", "1", c_ref);
            let c = d.classify_boundaries().unwrap();
            assert_eq!(c.verdict, DiffusionKind::Transient);
            assert_eq!(c.s_finite_at_upper, Some(false));
            assert_eq!(c.s_finite_at_lower, Some(true));
        }
    }

    #[test]
    fn ornstein_uhlenbeck_recurrent() {
        let d = spec(f64::NEG_INFINITY, f64::INFINITY, "-x", "1", 0.0);
        let c = d.classify_boundaries().unwrap();
        assert_eq!(c.verdict, DiffusionKind::Recurrent);
    }

    #[test]
    fn planar_radial_part_recurrent() {
        // mu = 1/(2x), sigma = 1 on (0, inf): scale is log x.
        let d = spec(0.0, f64::INFINITY, "1 / (2 * x)", "1", 1.0);
        let c = d.classify_boundaries().unwrap();
        assert_eq!(c.verdict, DiffusionKind::Recurrent);
        assert_eq!(c.s_finite_at_lower, Some(false));
        assert_eq!(c.s_finite_at_upper, Some(false));
    }

    #[test]
    fn vanishing_sigma_rejected() {
        let err = DiffusionSpec::new(
            f64::NEG_INFINITY,
            f64::INFINITY,
            Expr::parse("0").unwrap(),
            Expr::parse("x").unwrap(),
            0.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidSpec(ref m) if m.contains("sigma")));
    }

    #[test]
    fn interpolation_clamps() {
        let t = ScaleFunctionTable {
            xs: vec![0.0, 1.0, 2.0],
            values: vec![0.0, 1.0, 4.0],
            s_at_upper_finite: None,
            s_at_lower_finite: None,
        };
        assert_eq!(t.interpolate(-1.0), 0.0);
        assert_eq!(t.interpolate(0.5), 0.5);
        assert_eq!(t.interpolate(1.5), 2.5);
        assert_eq!(t.interpolate(9.0), 4.0);
    }
}
