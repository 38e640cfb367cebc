//! Finite-letter characterizations (FLCs) of channel capacity regions.
//!
//! An FLC describes a capacity region as the closure of the rates satisfying a
//! finite list of linear inequalities over rates and conditional mutual
//! informations, with the underlying joint distribution tied to the channel by
//! polynomial equations. This crate provides:
//!
//! - exact-rational distributions and channel tensors ([`prob`]),
//! - entropies, conditional mutual information and the entropy continuity
//!   bound that drives the grid error budget ([`info`]),
//! - sparse polynomials with interval enclosures ([`polynomial`], [`interval`]),
//! - the FLC data model, its JSON format and the classical characterizations
//!   (DMC, Marton, Han-Kobayashi) ([`flc`]),
//! - the rational delta-net and feasible-set construction ([`grid`],
//!   [`feasibility`]),
//! - the max-min grid evaluation, epsilon-approximation of capacity, the gap
//!   decision and two-user region extraction ([`engine`], [`region`]),
//! - probabilistic finite automata and the channels built from them ([`pfa`]).
//!
//! Information is measured in nats throughout.

pub mod engine;
mod error;
pub mod feasibility;
pub mod flc;
pub mod grid;
pub mod info;
pub mod interval;
pub mod pfa;
pub mod polynomial;
pub mod prob;
pub mod rational;
pub mod region;

pub use error::{Error, Result};
pub use info::Nats;
pub use prob::{Alphabet, ChannelSpec, Distribution, IndexSet};
pub use rational::Rational;
