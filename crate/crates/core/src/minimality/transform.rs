//! Scalar test transforms mapping process states to the real line, used to
//! feed multi-dimensional or scale-transformed processes into the tail
//! diagnostics.

use super::scale::ScaleFunctionTable;
use crate::error::{Error, Result};

/// A pointwise transform `g` of the state.
#[derive(Debug, Clone)]
pub enum GTransform {
    /// `x` itself (one-dimensional states).
    Identity,
    /// Interpolated scale function (one-dimensional states).
    Scale(ScaleFunctionTable),
    /// Negated scale function.
    NegScale(ScaleFunctionTable),
    /// `|x - pole|^{2 - dim}` for `dim > 2`: a positive transform vanishing
    /// at infinity.
    PowerDecay { dim: u32, pole: Vec<f64> },
    /// `log |x - pole|` in the plane.
    LogDistance { pole: Vec<f64> },
    /// `-log |x - pole|`: the orientation in which the planar log distance
    /// of a Brownian motion is a supermartingale.
    NegLogDistance { pole: Vec<f64> },
}

impl GTransform {
    /// Evaluate at a state vector. The pole of the decay/log transforms is
    /// outside the domain of definition.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        match self {
            GTransform::Identity => scalar(x),
            GTransform::Scale(t) => scalar(x).map(|v| t.interpolate(v)),
            GTransform::NegScale(t) => scalar(x).map(|v| -t.interpolate(v)),
            GTransform::PowerDecay { dim, pole } => {
                if *dim <= 2 {
                    return Err(Error::Domain {
                        op: "g_transform",
                        detail: format!("power decay needs dim > 2, got {dim}"),
                    });
                }
                let d = distance(x, pole)?;
                if d == 0.0 {
                    return Err(pole_error());
                }
                Ok(d.powf(2.0 - *dim as f64))
            }
            GTransform::LogDistance { pole } => {
                let d = distance(x, pole)?;
                if d == 0.0 {
                    return Err(pole_error());
                }
                Ok(d.ln())
            }
            GTransform::NegLogDistance { pole } => {
                let d = distance(x, pole)?;
                if d == 0.0 {
                    return Err(pole_error());
                }
                Ok(-d.ln())
            }
        }
    }

    /// Strictly monotone transforms of a one-dimensional state support the
    /// shortcut that drops the terminal-limit condition.
    pub fn strictly_monotone_1d(&self) -> bool {
        matches!(self, GTransform::Identity | GTransform::Scale(_) | GTransform::NegScale(_))
    }
}

fn scalar(x: &[f64]) -> Result<f64> {
    if x.len() == 1 {
        Ok(x[0])
    } else {
        Err(Error::Domain {
            op: "g_transform",
            detail: format!("expected a scalar state, got dimension {}", x.len()),
        })
    }
}

fn distance(x: &[f64], pole: &[f64]) -> Result<f64> {
    if x.len() != pole.len() {
        return Err(Error::Domain {
            op: "g_transform",
            detail: format!("state dimension {} does not match pole {}", x.len(), pole.len()),
        });
    }
    Ok(x.iter().zip(pole).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

fn pole_error() -> Error {
    Error::Domain { op: "g_transform", detail: "evaluation at the pole".into() }
}
