//! Multi-agent gridworld substrates with scripted background populations
//! and the evaluation protocol built on them.

pub mod bots;
pub mod chemistry;
pub mod ecology;
pub mod grid;
pub mod matrix;
pub mod metrics;
pub mod protocol;
pub mod registry;
pub mod scalar;
pub mod substrate;
pub mod territory;

pub use grid::{Event, EventKind, GridState, Observation, Orientation, Pos, Team};
pub use protocol::{
    run_episode, run_episode_observed, EpisodeResult, Mode, PlayerView, Policy, PolicyHandle, Population, Scenario,
    Session, SessionStep, ABI_VERSION,
};
pub use registry::Registry;
pub use scalar::Scalar;
pub use substrate::{ActionKind, Substrate, SubstrateConfig};

pub type Inventory = matrix::Inventory<f64>;
pub type PayoffMatrix = matrix::PayoffMatrix<f64>;
pub type Normalized = metrics::Normalized<f64>;
