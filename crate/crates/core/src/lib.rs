//! Embeddings of probability laws and discrete-time nonnegative
//! supermartingales in a geometric Brownian motion `Z_t = exp(W_t - t/2)`.
//!
//! The toolkit has three layers:
//!
//! - **Embedding.** A target law on `[0, inf]` with mean at most one is
//!   realized as the exit value of `Z` from a randomized barrier pair
//!   `(alpha, beta)` around 1 ([`dist`], [`embed`]). A finite-horizon
//!   nonnegative supermartingale, given as a rooted tree of conditional
//!   one-step ratio laws, is embedded step by step in fresh relative
//!   copies of `Z` ([`chain`]).
//! - **Time change.** The quadratic-variation clock `A_t = c^2 ∫ Z^2 dr`
//!   maps `cZ` to a Brownian motion started at `c` and absorbed at zero;
//!   chain embeddings pushed through the clock give minimal Brownian
//!   embeddings with the pathwise bound `T_s <= H^W_{-c}` ([`timechange`]).
//! - **Diagnostics.** Scale functions, boundary classification, the Kotani
//!   martingale test, uniform-integrability tail diagnostics, and assembled
//!   minimality verdicts for stopped one-dimensional diffusions
//!   ([`minimality`]).
//!
//! All Monte Carlo sampling uses counter-based per-replica random streams
//! ([`rng`]), so results are deterministic for a given `(seed, n)` and do
//! not depend on thread count or scheduling.

pub mod chain;
pub mod dist;
pub mod embed;
pub mod error;
pub mod minimality;
pub mod paths;
pub mod rng;
pub mod stats;
pub mod timechange;

pub use chain::{ChainEmbeddingSample, ChainMode, ChainSpec, ChainTree};
pub use dist::{BarrierPair, GCalculus, TargetDistribution};
pub use embed::{EmbeddingSample, ExitLaw};
pub use error::{Error, Result};
pub use paths::{ExitEvent, ExitSide, PathConfig, PathKind, SamplePath};
