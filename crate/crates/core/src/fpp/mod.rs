//! Random edge weights and first-passage distances.

mod forest;
mod tree;
mod weights;

pub use forest::PendantForest;
pub use tree::{
    backward_tree_approx, dijkstra_tree, dijkstra_tree_with_order, forward_tree, omega_geodesic,
    omega_geodesic_in_scope, path_weight, tree_in_scope, EscapeMap, FppEngine, GeodesicTree, OmegaGeodesic,
    Scope, NO_EDGE,
};
pub use weights::{sample_weights, EdgeStream, OmegaSample, WeightDistribution};
