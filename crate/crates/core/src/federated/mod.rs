//! Federated training over an in-process simulated network.
//!
//! The server only ever sees [`ClientUpdate`]s: a parameter delta and a
//! sample count. Client datasets live in private fields of
//! [`ClientHandle`] and never cross that boundary.

mod client;
mod rounds;
mod strategy;
mod transport;

pub use client::{client_update, ClientHandle, ClientId, ClientUpdate};
pub use rounds::{run_rounds, run_rounds_with, FedRoundState, RoundLog, RoundOptions, RoundRecord};
pub use strategy::{aggregate, ServerStrategy, StrategyKind, StrategyParams};
pub use transport::{simulate_transport, Delivery, Transport};
