//! The substrate-independent engine: geometry, world state, stepping,
//! beams, rendering and the event vocabulary.

pub mod beam;
pub mod event;
pub mod geom;
pub mod map;
pub mod render;
pub mod rng;
pub mod state;

pub use beam::{BeamHit, BeamKind, BeamSpec, BeamTable};
pub use event::{Event, EventKind, UnknownEvent};
pub use geom::{Orientation, Pos, Team};
pub use map::{CellSpec, GridMap, InitialItem, MapError, Terrain};
pub use render::{observe, render_world, Observation, RgbFrame};
pub use rng::{CounterRng, Stream};
pub use state::{Avatar, GridError, GridState, Item, StepOutcome, World, PERMANENT};
