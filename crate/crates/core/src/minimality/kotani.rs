//! Martingale test for driftless diffusions `dY = kappa(Y) dW` on the whole
//! line: `Y` is a true martingale exactly when both tail integrals
//!
//! ```text
//! ∫^∞ x / kappa^2(x) dx   and   ∫_{-∞} |x| / kappa^2(x) dx
//! ```
//!
//! diverge. Divergence is decided from the symbolic tail class of the
//! integrand; a wrong boolean here is worse than none, so anything outside
//! the decidable class is reported as inconclusive (a numerical growth-rate
//! probe is attached as evidence only, never as the verdict).

use serde::Serialize;

use super::expr::Expr;
use super::tail::{integral_diverges, tail, Boundary};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum KotaniVerdict {
    Martingale,
    StrictLocalMartingale,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct KotaniReport {
    pub verdict: KotaniVerdict,
    /// Symbolic divergence of the upper / lower tail integral.
    pub upper_tail_diverges: Option<bool>,
    pub lower_tail_diverges: Option<bool>,
    /// Log-log slope probes of the integrand, evidence only.
    pub upper_exponent_hint: Option<f64>,
    pub lower_exponent_hint: Option<f64>,
}

/// Decide the martingale property of `dY = kappa(Y) dW`.
///
/// `kappa` must be nonvanishing on the validation grid (the pointwise
/// surrogate for the usual local-integrability condition on `kappa^{-2}`).
pub fn kotani_test(kappa: &Expr) -> Result<KotaniReport> {
    for k in -60i32..=60 {
        let x = (k as f64) * (k as f64).abs() / 18.0; // denser near 0, out to ±200
        let v = kappa.eval(x);
        if !v.is_finite() || v == 0.0 {
            return Err(Error::InvalidSpec(format!(
                "kappa: vanishes or is not finite at x = {x}"
            )));
        }
    }
    let integrand = Expr::Div(
        Box::new(Expr::Abs(Box::new(Expr::Var))),
        Box::new(Expr::Mul(Box::new(kappa.clone()), Box::new(kappa.clone()))),
    );
    let upper = integral_diverges(&tail(&integrand, Boundary::PlusInfinity), false);
    let lower = integral_diverges(&tail(&integrand, Boundary::MinusInfinity), false);
    let verdict = match (upper, lower) {
        (Some(true), Some(true)) => KotaniVerdict::Martingale,
        (Some(false), _) | (_, Some(false)) => KotaniVerdict::StrictLocalMartingale,
        _ => KotaniVerdict::Inconclusive,
    };
    let probe = |sign: f64| {
        let f = |x: f64| integrand.eval(sign * x).abs();
        let (a, b) = (1e3, 1e6);
        let (fa, fb) = (f(a), f(b));
        if fa > 0.0 && fb > 0.0 && fa.is_finite() && fb.is_finite() {
            Some((fb.ln() - fa.ln()) / (b.ln() - a.ln()))
        } else {
            None
        }
    };
    Ok(KotaniReport {
        verdict,
        upper_tail_diverges: upper,
        lower_tail_diverges: lower,
        upper_exponent_hint: probe(1.0),
        lower_exponent_hint: probe(-1.0),
    })
}
