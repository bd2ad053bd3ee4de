//! Greedy/vigilante shared-resource game.
//!
//! A shared slotted resource is used by `N` players: `M` greedy players who
//! push their access probability up, `V` vigilantes who jam in response to
//! perceived greed, and cooperative players who stay at the fair rate `1/N`.
//! This crate provides the analytic model, best responses (including the
//! greedy player's discontinuous map), Nash-equilibrium detection, fictitious
//! play, the gradient flow and a Monte Carlo slotted channel.

pub mod best_response;
pub mod channel;
pub mod equilibrium;
pub mod error;
pub mod flow;
pub mod model;
pub mod play;
pub mod trajectory;

pub use error::{Error, Result};
pub use model::{FairBaselines, GameConfig, Phi0Convention, StrategyProfile};
pub use play::{Observation, PlayParams};
pub use trajectory::{Trajectory, Verdict};
