//! Versioned binary ball files and their JSON summaries.
//!
//! Layout, all integers little-endian: the magic `HYPB1\n`; the model
//! descriptor as a `u32` length and UTF-8 bytes; `u32` radius; `f64`
//! padding delta; `u64` vertex and edge counts; one `u64` per sphere size;
//! the edges as `u32` pairs; and a SHA-256 of everything before it.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::ball::{from_parts, CayleyBall};
use crate::error::{Error, Result};
use crate::experiments::BallSummary;
use crate::model::GraphModel;

pub const BALL_MAGIC: &[u8; 6] = b"HYPB1\n";

struct Hashing<W> {
    inner: W,
    hash: Sha256,
}

impl<W: Write> Write for Hashing<W> {
    fn write(&mut self, buf: &[u8]) -> std::io::Result<usize> {
        let n = self.inner.write(buf)?;
        self.hash.update(&buf[..n]);
        Ok(n)
    }
    fn flush(&mut self) -> std::io::Result<()> {
        self.inner.flush()
    }
}

/// Writes the ball and returns the hex checksum stored in its trailer.
pub fn write_ball<W: Write>(ball: &CayleyBall, out: W) -> Result<String> {
    let mut w = Hashing {
        inner: out,
        hash: Sha256::new(),
    };
    let descriptor = ball.model().descriptor();
    w.write_all(BALL_MAGIC)?;
    w.write_all(&(descriptor.len() as u32).to_le_bytes())?;
    w.write_all(descriptor.as_bytes())?;
    w.write_all(&ball.radius().to_le_bytes())?;
    w.write_all(&ball.padding_delta().to_le_bytes())?;
    w.write_all(&(ball.vertex_count() as u64).to_le_bytes())?;
    w.write_all(&(ball.edge_count() as u64).to_le_bytes())?;
    for s in ball.sphere_sizes() {
        w.write_all(&(s as u64).to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(8 * 4096);
    for chunk in ball.edges().chunks(4096) {
        buf.clear();
        for &[a, b] in chunk {
            buf.extend_from_slice(&a.to_le_bytes());
            buf.extend_from_slice(&b.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    let digest = w.hash.finalize();
    w.inner.write_all(&digest)?;
    w.inner.flush()?;
    Ok(hex::encode(digest))
}

struct Reader<R> {
    inner: R,
    hash: Sha256,
}

impl<R: Read> Reader<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner
            .read_exact(&mut b)
            .map_err(|e| Error::Format(format!("truncated ball file: {e}")))?;
        self.hash.update(b);
        Ok(b)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.bytes()?))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.bytes()?))
    }
}

pub fn read_ball<R: Read>(input: R) -> Result<CayleyBall> {
    let mut r = Reader {
        inner: input,
        hash: Sha256::new(),
    };
    if &r.bytes::<6>()? != BALL_MAGIC {
        return Err(Error::Format("not a HYPB1 ball file".into()));
    }
    let len = r.u32()? as usize;
    if len > 64 {
        return Err(Error::Format(format!("model descriptor of {len} bytes")));
    }
    let mut descriptor = vec![0u8; len];
    r.inner
        .read_exact(&mut descriptor)
        .map_err(|e| Error::Format(format!("truncated ball file: {e}")))?;
    r.hash.update(&descriptor);
    let model: GraphModel = std::str::from_utf8(&descriptor)
        .map_err(|_| Error::Format("model descriptor is not UTF-8".into()))?
        .parse()?;
    let radius = r.u32()?;
    let padding_delta = f64::from_le_bytes(r.bytes()?);
    let vertices = r.u64()? as usize;
    let edge_count = r.u64()? as usize;
    let mut levels = Vec::with_capacity(vertices);
    for l in 0..=radius {
        let size = r.u64()? as usize;
        if levels.len() + size > vertices {
            return Err(Error::Format("sphere sizes exceed the vertex count".into()));
        }
        levels.extend(std::iter::repeat_n(l, size));
    }
    if levels.len() != vertices {
        return Err(Error::Format(
            "sphere sizes do not add up to the vertex count".into(),
        ));
    }
    let mut edges = Vec::with_capacity(edge_count);
    for _ in 0..edge_count {
        let a = r.u32()?;
        let b = r.u32()?;
        edges.push([a, b]);
    }
    let expected = r.hash.finalize();
    let mut stored = [0u8; 32];
    r.inner
        .read_exact(&mut stored)
        .map_err(|e| Error::Format(format!("missing checksum: {e}")))?;
    if stored[..] != expected[..] {
        return Err(Error::Format("checksum mismatch".into()));
    }
    from_parts(model, radius, levels, &edges, padding_delta)
}

/// Human-readable companion of a ball file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BallFileSummary {
    pub format: String,
    #[serde(flatten)]
    pub ball: BallSummary,
    pub valence: usize,
    pub delta_estimate: f64,
    pub max_valid_level: u32,
    pub checksum: String,
}

impl BallFileSummary {
    pub fn new(ball: &CayleyBall, checksum: String) -> Self {
        Self {
            format: "HYPB1".into(),
            ball: BallSummary::of(ball),
            valence: ball.model().valence(),
            delta_estimate: ball.padding_delta(),
            max_valid_level: ball.max_valid_level(),
            checksum,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn round_trip(model: GraphModel, radius: u32) {
        let ball = CayleyBall::build(model, radius).unwrap();
        let mut bytes = Vec::new();
        write_ball(&ball, &mut bytes).unwrap();
        let back = read_ball(&bytes[..]).unwrap();
        assert_eq!(back.model(), model);
        assert_eq!(back.levels(), ball.levels());
        assert_eq!(back.edges(), ball.edges());
        assert_eq!(back.padding(), ball.padding());
        for v in 0..ball.vertex_count() as u32 {
            assert_eq!(back.neighbors(v), ball.neighbors(v));
            assert_eq!(back.word(v), ball.word(v));
        }
    }

    #[test]
    fn balls_survive_a_round_trip() {
        round_trip(GraphModel::FreeGroup { rank: 2 }, 4);
        round_trip(GraphModel::SurfaceGenus2, 3);
        round_trip(GraphModel::Tessellation { p: 8, q: 8 }, 4);
        round_trip(GraphModel::Tessellation { p: 4, q: 5 }, 5);
    }

    #[test]
    fn corruption_is_detected() {
        let ball = CayleyBall::build(GraphModel::Tessellation { p: 8, q: 8 }, 3).unwrap();
        let mut bytes = Vec::new();
        write_ball(&ball, &mut bytes).unwrap();
        let mut bad = bytes.clone();
        let mid = bad.len() / 2;
        bad[mid] ^= 1;
        assert!(matches!(read_ball(&bad[..]), Err(Error::Format(_))));
        assert!(matches!(
            read_ball(&bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
        assert!(matches!(read_ball(&b"HYPB2\n"[..]), Err(Error::Format(_))));
    }

    #[test]
    fn summary_lists_spheres() {
        let ball = CayleyBall::build(GraphModel::FreeGroup { rank: 2 }, 3).unwrap();
        let s = BallFileSummary::new(&ball, String::new());
        assert_eq!(s.ball.sphere_sizes, vec![1, 4, 12, 36]);
        assert_eq!(s.valence, 4);
        let json = serde_json::to_value(&s).unwrap();
        assert_eq!(json["sphere_sizes"], serde_json::json!([1, 4, 12, 36]));
    }
}
