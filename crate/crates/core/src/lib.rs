//! Deterministic payment-channel network simulator.
//!
//! The crate models a Lightning-style layer-two network on top of simulated
//! base ledgers:
//!
//! * [`basechain`]: per-asset UTXO ledgers with multisig, timelock, hashlock
//!   and revocation spend paths and a TPS-capped block producer.
//! * [`channel`]: the two-party channel state machine: funding, the
//!   eight-step commitment update with revocation secrets, closes and
//!   penalty enforcement.
//! * [`htlc`]: hashed-timelock contracts on channels, invoices, and the
//!   two-chain atomic swap coordinator.
//! * [`routing`]: channel graph, fee-aware pathfinding, onion packets and
//!   multi-hop payment execution.
//! * [`simnet`]: scenario files, network construction, the tick-driven
//!   event loop, failure injection and metrics.
//!
//! Everything is deterministic for a given scenario and seed.

pub mod basechain;
pub mod channel;
pub mod crypto;
pub mod htlc;
pub mod routing;
pub mod simnet;
mod types;

pub use types::{format_btc, AssetId, ChannelId, NodeId, MSAT_PER_BTC, MSAT_PER_SAT};
