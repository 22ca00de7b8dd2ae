//! Channel graph, cheapest-route search, onion packets and multi-hop
//! payment execution.

pub mod graph;
pub mod onion;
mod pathfind;
mod payment;

pub use graph::{ChannelGraph, Edge, FeePolicy};
pub use onion::{build_onion, peel_onion, HopPayload, OnionError, OnionPacket, Peeled};
pub use pathfind::{
    find_route, find_route_excluding, Route, RouteError, RouteHop, RouteParams, MAX_ROUTE_HOPS,
};
pub use payment::{Network, NetworkError, PaymentError, PaymentSuccess, SendOptions};
