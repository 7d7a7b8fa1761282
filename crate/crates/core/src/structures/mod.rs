//! Statistics read off geodesic trees: exceptional lifts, wandering,
//! coalescence, omega-shadows, crossing radii and disjoint crossings.

mod lifts;
mod radius;
mod slab;

pub use lifts::{
    coalescence_point, exceptional_lift_indicator, first_hits, lift_count, lift_fraction,
    lift_fraction_with_window, omega_shadow, root_branch, wandering_check, wandering_with_window,
    window_radius, window_splits, Coalescence, ExceptionalLiftReport,
};
pub use radius::{
    geodesic_depths, properness_profile, r_omega_estimate, r_omega_on_family, PairFamily, PairInfo,
    RadiusStatistic,
};
pub use slab::{
    crossing_candidates, disjoint_count_between, disjoint_geodesic_count, exact_disjoint, greedy_swap,
    min_edge_cut, DisjointStrategy, SlabSpec, EXACT_LIMIT,
};
