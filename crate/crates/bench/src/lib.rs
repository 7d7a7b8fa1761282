//! Benchmark fixtures shared by the criterion targets.

use hypfpp_core::{CayleyBall, GraphModel};

pub const OCTAGONS: GraphModel = GraphModel::Tessellation { p: 8, q: 8 };

pub fn octagon_ball(radius: u32) -> CayleyBall {
    CayleyBall::build(OCTAGONS, radius).expect("benchmark ball builds")
}
