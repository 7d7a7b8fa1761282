use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The graph families a ball can be built from.
///
/// Group models carry a word-problem solver; tessellations are built
/// combinatorially from their Schläfli symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GraphModel {
    /// Free group on `rank` generators.
    FreeGroup { rank: u32 },
    /// Fundamental group of the closed genus-2 surface, `<a,b,c,d | [a,b][c,d]>`.
    SurfaceGenus2,
    /// 1-skeleton of the regular `{p,q}` tiling of the hyperbolic plane.
    Tessellation { p: u32, q: u32 },
}

impl GraphModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            GraphModel::FreeGroup { rank } if rank < 2 => Err(Error::InvalidModel(format!(
                "free group rank must be at least 2, got {rank}"
            ))),
            GraphModel::Tessellation { p, q } => {
                if p < 3 || q < 3 {
                    return Err(Error::InvalidModel(format!(
                        "tessellation {{{p},{q}}} needs p >= 3 and q >= 3"
                    )));
                }
                if (p - 2) * (q - 2) <= 4 {
                    return Err(Error::InvalidModel(format!(
                        "tessellation {{{p},{q}}} is not hyperbolic: (p-2)(q-2) = {} <= 4",
                        (p - 2) * (q - 2)
                    )));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }

    /// Degree of every interior vertex.
    pub fn valence(&self) -> usize {
        match *self {
            GraphModel::FreeGroup { rank } => 2 * rank as usize,
            GraphModel::SurfaceGenus2 => 8,
            GraphModel::Tessellation { q, .. } => q as usize,
        }
    }

    pub fn is_free(&self) -> bool {
        matches!(self, GraphModel::FreeGroup { .. })
    }

    /// Whether every cycle of the graph has even length. Same-level edges
    /// exist only in non-bipartite models.
    pub fn is_bipartite(&self) -> bool {
        match *self {
            GraphModel::Tessellation { p, .. } => p % 2 == 0,
            _ => true,
        }
    }

    /// Compact descriptor used in file headers and CLI flags.
    pub fn descriptor(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for GraphModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GraphModel::FreeGroup { rank } => write!(f, "free:{rank}"),
            GraphModel::SurfaceGenus2 => write!(f, "surface:2"),
            GraphModel::Tessellation { p, q } => write!(f, "tess:{p},{q}"),
        }
    }
}

impl FromStr for GraphModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidModel(format!("cannot parse model spec {s:?}"));
        let (kind, rest) = s.trim().split_once(':').ok_or_else(bad)?;
        let model = match kind {
            "free" => GraphModel::FreeGroup {
                rank: rest.trim().parse().map_err(|_| bad())?,
            },
            "surface" => {
                if rest.trim() != "2" {
                    return Err(Error::InvalidModel(format!(
                        "only genus 2 surface groups are supported, got {rest:?}"
                    )));
                }
                GraphModel::SurfaceGenus2
            }
            "tess" => {
                let (p, q) = rest.split_once(',').ok_or_else(bad)?;
                GraphModel::Tessellation {
                    p: p.trim().parse().map_err(|_| bad())?,
                    q: q.trim().parse().map_err(|_| bad())?,
                }
            }
            _ => return Err(bad()),
        };
        model.validate()?;
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_round_trip() {
        for s in ["free:2", "free:3", "surface:2", "tess:8,8", "tess:4,5"] {
            let m: GraphModel = s.parse().unwrap();
            assert_eq!(m.to_string(), s);
        }
    }

    #[test]
    fn rejects_euclidean_and_spherical_tilings() {
        assert!("tess:3,3".parse::<GraphModel>().is_err());
        assert!("tess:4,4".parse::<GraphModel>().is_err());
        assert!("tess:3,6".parse::<GraphModel>().is_err());
        assert!("tess:3,7".parse::<GraphModel>().is_ok());
    }

    #[test]
    fn rejects_garbage() {
        assert!("free".parse::<GraphModel>().is_err());
        assert!("free:1".parse::<GraphModel>().is_err());
        assert!("surface:3".parse::<GraphModel>().is_err());
        assert!("torus:1".parse::<GraphModel>().is_err());
        assert!("tess:8".parse::<GraphModel>().is_err());
    }

    #[test]
    fn valence_matches_model() {
        assert_eq!(GraphModel::FreeGroup { rank: 2 }.valence(), 4);
        assert_eq!(GraphModel::SurfaceGenus2.valence(), 8);
        assert_eq!(GraphModel::Tessellation { p: 4, q: 5 }.valence(), 5);
    }
}
