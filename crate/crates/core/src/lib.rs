//! Pareto-optimal operating points of the two-user MISO interference channel,
//! computed by treating the two links as consumers in a pure exchange economy.
//!
//! * [`phy`]: channel realizations, the efficient beamforming parametrization and SINR.
//! * [`economy`]: goods coordinates, indifference curves, the contract curve and core bounds.
//! * [`market`]: budget sets, closed-form demand, excess demand and the Walrasian price.
//! * [`coordination`]: the arbitrator/transmitter protocols as a message-passing state machine.
//! * [`bargaining`]: reference points (Nash, max-sum, MMSE, NBS, Kalai-Smorodinsky).
//! * [`report`]: bit-stable number formatting and CSV/JSON writers shared by the CLI.

pub mod bargaining;
pub mod coordination;
pub mod economy;
mod error;
pub mod market;
pub mod phy;
pub mod report;
pub mod roots;

pub use error::{Error, Result};
pub use phy::{ChannelRealization, DerivedGains, Link, SinrPair};

/// Library version embedded in every output header.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
