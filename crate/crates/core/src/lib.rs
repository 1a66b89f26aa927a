//! Analytics and simulation for a stylized high-frequency trading game.
//!
//! `H` traders each stage either make the market (post a bid and an ask at
//! half-spread `s` around the asset value) or act as bandits that may race to
//! snipe the market maker's quote once news makes it stale. The crate computes
//! the equilibrium spread and utility, the risk-aversion thresholds separating
//! sure, probabilistic and no sniping, simulates the repeated game, and runs a
//! sequential test that flags agents sniping more often than agreed.
//!
//! All spreads and utilities are in units of the news jump size.

pub mod detection;
pub mod error;
pub mod numeric;
pub mod params;
pub mod race;
pub mod simulator;
pub mod transitions;
pub mod utility;

pub use error::{Error, Result};
pub use params::{GameParams, ParamSpec};
pub use race::Population;

/// Library version, recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
