//! Rating and matchmaking dynamics for large competitive platforms.
//!
//! A platform repeatedly rescales displayed ratings, matches agents with a
//! tunable assortativity, observes noisy pairwise outcomes, and applies
//! Elo-style linear updates while the latent skills drift. In the Gaussian
//! regime this system closes exactly on second moments, so the whole
//! population reduces to one scalar: the accuracy `r`, the correlation
//! between skill and rating.
//!
//! The crate carries four mutually-checking layers:
//!
//! - [`meanfield`] — the exact one-step accuracy transition, its variance
//!   decomposition, the optimal filtering controls (gain and signal-matched
//!   scale) with their assortativity-free invariant map, and the long-run
//!   fixed point that caps accuracy strictly below the skill persistence.
//! - [`control`] — the platform's decision layer: barrier sorting costs, the
//!   matching phase transition, the separated optimal policy, and welfare.
//! - [`sim`] — the N-agent microscopic system whose empirical moments
//!   converge to the closed forms at the root-N rate.
//! - [`oracle`] — a direct Monte Carlo sampler of the one-step mean-field
//!   law, used as an independent check on every closed-form moment.
//!
//! [`harness`] packages the reproducible studies built on top, and [`rng`]
//! provides the seeded, splittable streams that make every run replayable.

pub mod control;
pub mod error;
pub mod harness;
pub mod meanfield;
pub mod oracle;
pub mod rng;
pub mod sim;
pub mod stats;

pub use control::{CostParams, PolicySpec};
pub use error::{Error, Result};
pub use meanfield::{AccuracyState, ControlTriple, ModelParams};
pub use rng::RngStream;
pub use sim::{InitCondition, Population, RunConfig, ScaleSource, Trajectory};
