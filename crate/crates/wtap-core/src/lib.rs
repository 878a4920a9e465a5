//! Weighted tree augmentation: given a spanning tree and costed candidate
//! links, pick a cheapest link set whose addition makes the graph
//! 2-edge-connected. This crate implements an exact-rational cutting-plane
//! engine (covering, odd-cut and bundle rows), exact solvers for the
//! classes where the odd-cut relaxation is integral, and a decomposition +
//! rounding pipeline with a certified (3/2 + epsilon) cost guarantee for
//! instances with bounded cost ratio.

pub mod bundle;
pub mod decompose;
pub mod error;
pub mod exact;
pub mod generate;
pub mod instance;
pub mod io;
pub mod lp;
pub mod oddcut;
pub mod oracle;
pub mod rational;
pub mod rounding;

pub use error::{Error, Result};
pub use instance::{
    AlgorithmParams, FractionalSolution, Link, LinkClass, LinkId, NodeId, TreeEdge, WtapInstance,
};
pub use rational::Rat;

pub use instance::EdgeId;
