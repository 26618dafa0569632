//! Randomized pairwise gossip with stubborn agents over a two-community
//! weighted complete graph.
//!
//! The crate is organised bottom-up:
//!
//! * [`graph`] builds the weighted graph and the edge-selection distribution.
//! * [`sim`] runs the stochastic averaging process and Monte Carlo estimates
//!   of its expectation.
//! * [`spectral`] computes the mean one-step dynamics, its eigen-structure,
//!   and the exact expected trajectory two ways (step recursion and the
//!   three-mode closed form).
//! * [`theory`] evaluates the transient sign window and the local/global
//!   consensus envelopes and checks them against exact trajectories.
//! * [`harness`] ties everything to config files, presets, and CSV output.

pub mod error;
pub mod graph;
pub mod harness;
pub mod sim;
pub mod spectral;
pub mod theory;
pub mod trajectory;

pub use error::{Error, Result};
pub use graph::{
    Community, GraphParams, InteractionDistribution, StubbornWeights, TwoCommunityGraph,
};
pub use sim::{GossipState, RunConfig, Simulator};
pub use spectral::{ClosedForm, MeanDynamics, SpectralProjections, SpectralSummary};
pub use theory::{BoundMode, BoundReport, ConsensusBound, SignReport, SignWindow};
pub use trajectory::{TrajectoryBundle, TrajectoryKind};
