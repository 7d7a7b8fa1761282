//! First passage percolation on finite balls of hyperbolic Cayley graphs
//! and tessellations.

pub mod ball;
mod cayley;
pub mod delta;
pub mod error;
pub mod experiments;
pub mod fpp;
pub mod graph;
pub mod io;
pub mod model;
pub mod structures;
mod tiling;
pub mod words;

pub use ball::{build_ball, CayleyBall, EdgeId, VertexId, VertexLabel, WordGeodesic};
pub use delta::{estimate_delta, DeltaEstimate, DeltaMode};
pub use error::{Error, Result};
pub use fpp::{
    dijkstra_tree, forward_tree, omega_geodesic, sample_weights, GeodesicTree, OmegaGeodesic, OmegaSample,
    Scope, WeightDistribution,
};
pub use graph::{Graph, PlainGraph};
pub use model::GraphModel;
