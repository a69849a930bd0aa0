//! Competitive equilibria for autonomous carpooling markets.
//!
//! A market is a two-terminal capacitated network plus riders with linear
//! time preferences and carpool disutilities. The crate computes socially
//! optimal trip vectors, rider payments and edge tolls that form a market
//! equilibrium, verifies every equilibrium property exactly, and computes the
//! strategyproof VCG equilibrium. All arithmetic is exact.
//!
//! Pipeline on a series-parallel network with homogeneous disutility:
//!
//! 1. [`network::greedy_route_capacities`] allocates integer route capacities.
//! 2. [`auction::kelso_crawford`] runs the ascending auction on unit-capacity
//!    copies of those routes; [`auction::chi`] converts its result to trips.
//! 3. [`equilibrium::solve_dual`] recovers exact utilities and tolls, and
//!    [`equilibrium::payments_from_utilities`] the payments.
//!
//! [`oracle`] holds brute-force ground truth for small instances.

pub mod auction;
pub mod equilibrium;
pub mod error;
pub mod generate;
pub mod lp;
pub mod network;
pub mod oracle;
pub mod preferences;
pub mod rational;
pub mod trips;
pub mod vcg;

pub use error::{CarpoolError, Result};
pub use network::{Edge, Network, Route, RouteCapacityVector, SpTree};
pub use preferences::{Group, MarketInstance, RiderPreferences};
pub use rational::Rational;
pub use trips::{Trip, TripVector};
