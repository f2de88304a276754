//! Crate-wide error type.

use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the operation's domain.
    Domain { op: &'static str, detail: String },
    /// The target law cannot be embedded (mean above one).
    UnsupportedTarget { mean: f64 },
    /// A distribution, chain, or diffusion description failed validation.
    /// The message names the offending field.
    InvalidSpec(String),
    /// A verification routine was handed fewer samples than it needs.
    TooFewSamples { needed: usize, got: usize },
    /// A one-step ratio law was requested at a leaf node.
    LeafHasNoRatio { node: usize },
    /// Coarsening target is finer than the source grid.
    CoarsenLevel { m: u32, n: u32 },
    /// A realized value matches no tree node; indicates a barrier or
    /// exit-law bug rather than bad input.
    InternalConsistency(String),
    /// Coefficient expression failed to parse.
    Parse(String),
    /// Quadrature failed to converge.
    Numerical(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Domain { op, detail } => write!(f, "{op}: {detail}"),
            Error::UnsupportedTarget { mean } => {
                write!(f, "target law has mean {mean} > 1 and cannot be embedded")
            }
            Error::InvalidSpec(msg) => write!(f, "invalid spec: {msg}"),
            Error::TooFewSamples { needed, got } => {
                write!(f, "need at least {needed} samples, got {got}")
            }
            Error::LeafHasNoRatio { node } => {
                write!(f, "node {node} is a leaf and carries no one-step ratio law")
            }
            Error::CoarsenLevel { m, n } => {
                write!(f, "cannot coarsen a grid of level {m} to finer level {n}")
            }
            Error::InternalConsistency(msg) => write!(f, "internal consistency: {msg}"),
            Error::Parse(msg) => write!(f, "expression parse error: {msg}"),
            Error::Numerical(msg) => write!(f, "numerical failure: {msg}"),
        }
    }
}

impl std::error::Error for Error {}
