//! Component-based engineering simulation toolkit.
//!
//! Everything is expressed as components exchanging [`value::Value`]s on a
//! typed dataflow [`graph::Graph`]. Domain modules supply component kinds
//! (frames, fields, mechanical aggregates, controllers) and stand-alone
//! analyses (frequency-response identification, star-field navigation,
//! integer homology). [`scenario`] loads declarative JSON scenarios.

pub mod components;
pub mod control;
pub mod environment;
pub mod fields;
pub mod frames;
pub mod graph;
pub mod imaging;
pub mod mech;
pub mod nav;
pub mod scenario;
pub mod series;
pub mod sysid;
pub mod topology;
pub mod value;

pub use graph::{simulate, Graph, Model, SimConfig};
pub use series::SeriesTable;
pub use value::{Value, ValueTag};
