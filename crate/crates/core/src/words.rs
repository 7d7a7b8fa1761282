//! Words over a symmetric generating set and exact word-problem solvers.
//!
//! Generators are numbered so that `g ^ 1` is the inverse of `g`: letter
//! `2i` is the i-th generator and `2i + 1` its inverse. Free groups use
//! free reduction; the genus-2 surface group uses Dehn's algorithm, which
//! is complete for `<a,b,c,d | [a,b][c,d]>` because the presentation is
//! C'(1/6) (pieces have length 1, the relator has length 8).

use serde::{Deserialize, Serialize};

pub type Letter = u8;

#[inline]
pub fn inverse_letter(g: Letter) -> Letter {
    g ^ 1
}

pub fn letter_name(g: Letter) -> char {
    let base = (b'a' + g / 2) as char;
    if g.is_multiple_of(2) {
        base
    } else {
        base.to_ascii_uppercase()
    }
}

pub fn format_word(word: &[Letter]) -> String {
    if word.is_empty() {
        return "1".to_string();
    }
    word.iter().map(|&g| letter_name(g)).collect()
}

/// Parses `aBc`-style words; `1` or the empty string is the identity.
pub fn parse_word(s: &str, generator_count: usize) -> Option<Vec<Letter>> {
    if s == "1" {
        return Some(Vec::new());
    }
    s.chars()
        .map(|c| {
            let lower = c.to_ascii_lowercase();
            if !lower.is_ascii_lowercase() {
                return None;
            }
            let idx = (lower as u8 - b'a') * 2 + u8::from(c.is_ascii_uppercase());
            ((idx as usize) < generator_count).then_some(idx)
        })
        .collect()
}

pub fn invert_word(word: &[Letter]) -> Vec<Letter> {
    word.iter().rev().map(|&g| inverse_letter(g)).collect()
}

/// Cancels adjacent inverse pairs until none remain.
pub fn free_reduce(word: &[Letter]) -> Vec<Letter> {
    let mut out: Vec<Letter> = Vec::with_capacity(word.len());
    for &g in word {
        if out.last() == Some(&inverse_letter(g)) {
            out.pop();
        } else {
            out.push(g);
        }
    }
    out
}

/// A group given by generators and a word-problem solver.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum Presentation {
    Free { rank: u32 },
    OneRelator { rank: u32, relator: Vec<Letter> },
}

/// `[a,b][c,d]` with a=0, b=2, c=4, d=6.
pub const SURFACE_GENUS2_RELATOR: [Letter; 8] = [0, 2, 1, 3, 4, 6, 5, 7];

impl Presentation {
    pub fn surface_genus2() -> Self {
        Presentation::OneRelator {
            rank: 4,
            relator: SURFACE_GENUS2_RELATOR.to_vec(),
        }
    }

    pub fn generator_count(&self) -> usize {
        match self {
            Presentation::Free { rank } | Presentation::OneRelator { rank, .. } => 2 * *rank as usize,
        }
    }

    /// Solves the word problem exactly.
    pub fn is_trivial(&self, word: &[Letter]) -> bool {
        match self {
            Presentation::Free { .. } => free_reduce(word).is_empty(),
            Presentation::OneRelator { relator, .. } => Dehn::new(relator).reduce(word).is_empty(),
        }
    }
}

/// Dehn's algorithm for a single cyclically reduced relator.
#[derive(Debug, Clone)]
pub struct Dehn {
    /// All cyclic permutations of the relator and its inverse.
    symmetrized: Vec<Vec<Letter>>,
    len: usize,
}

impl Dehn {
    pub fn new(relator: &[Letter]) -> Self {
        let len = relator.len();
        let inverse = invert_word(relator);
        let mut symmetrized = Vec::with_capacity(2 * len);
        for base in [relator.to_vec(), inverse] {
            for shift in 0..len {
                let rotated: Vec<Letter> = base[shift..].iter().chain(&base[..shift]).copied().collect();
                if !symmetrized.contains(&rotated) {
                    symmetrized.push(rotated);
                }
            }
        }
        Self { symmetrized, len }
    }

    /// Repeatedly replaces a subword that is more than half of a
    /// symmetrized relator by the inverse of the shorter complement.
    /// Returns the fully reduced word; the input is trivial iff the
    /// result is empty.
    pub fn reduce(&self, word: &[Letter]) -> Vec<Letter> {
        let half = self.len / 2;
        let mut w = free_reduce(word);
        'outer: loop {
            for start in 0..w.len() {
                for r in &self.symmetrized {
                    let matched = w[start..]
                        .iter()
                        .zip(r.iter())
                        .take_while(|(a, b)| a == b)
                        .count();
                    if matched > half {
                        let replacement = invert_word(&r[matched..]);
                        let mut next = Vec::with_capacity(w.len());
                        next.extend_from_slice(&w[..start]);
                        next.extend_from_slice(&replacement);
                        next.extend_from_slice(&w[start + matched..]);
                        w = free_reduce(&next);
                        continue 'outer;
                    }
                }
            }
            return w;
        }
    }
}

const PRIME: u64 = 2_147_483_647;

/// Element of SL(2, F_p) with p = 2^31 - 1, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Mat2([u32; 4]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([1, 0, 0, 1]);

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        let a = self.0.map(u64::from);
        let b = o.0.map(u64::from);
        let m = |x: u64, y: u64, z: u64, w: u64| ((x * y % PRIME + z * w % PRIME) % PRIME) as u32;
        Mat2([
            m(a[0], b[0], a[1], b[2]),
            m(a[0], b[1], a[1], b[3]),
            m(a[2], b[0], a[3], b[2]),
            m(a[2], b[1], a[3], b[3]),
        ])
    }

    /// Inverse of a determinant-one matrix.
    pub fn inv(&self) -> Mat2 {
        let neg = |x: u32| ((PRIME - u64::from(x)) % PRIME) as u32;
        Mat2([self.0[3], neg(self.0[1]), neg(self.0[2]), self.0[0]])
    }

    fn pow(&self, k: u32) -> Mat2 {
        (0..k).fold(Mat2::IDENTITY, |acc, _| acc.mul(self))
    }

    /// A determinant-one matrix derived from a fixed seed: lower times
    /// upper unipotent times a diagonal-free shear.
    fn from_seed(seed: u64) -> Mat2 {
        let mut s = seed;
        let mut next = || {
            s = s.wrapping_add(0x9E37_79B9_7F4A_7C15);
            let mut z = s;
            z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
            z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
            (((z ^ (z >> 31)) % (PRIME - 2)) + 1) as u32
        };
        let lower = Mat2([1, 0, next(), 1]);
        let upper = Mat2([1, next(), 0, 1]);
        let lower2 = Mat2([1, 0, next(), 1]);
        lower.mul(&upper).mul(&lower2)
    }
}

/// Homomorphisms of the group into SL(2, F_p), used as a hash key for
/// elements. Equal elements always collide; distinct elements collide
/// rarely, and every collision is confirmed with the exact solver.
#[derive(Debug, Clone)]
pub struct Fingerprinter {
    /// `images[rep][letter]`
    images: Vec<Vec<Mat2>>,
}

pub type Fingerprint = [Mat2; 2];

impl Fingerprinter {
    pub fn new(presentation: &Presentation) -> Self {
        let reps = 2;
        let images = (0..reps)
            .map(|rep| {
                let gens: Vec<Mat2> = match presentation {
                    Presentation::Free { rank } => (0..*rank)
                        .map(|i| Mat2::from_seed(1000 * rep as u64 + u64::from(i)))
                        .collect(),
                    Presentation::OneRelator { rank, relator } => {
                        assert_eq!(
                            (*rank, relator.as_slice()),
                            (4, SURFACE_GENUS2_RELATOR.as_slice()),
                            "fingerprints are only defined for the genus-2 surface relator"
                        );
                        // a -> A, b -> B, c -> Z B Z^-1, d -> Z A Z^-1 with Z a power
                        // of [A,B]; then [a,b][c,d] maps to the identity.
                        let a = Mat2::from_seed(7000 + 31 * rep as u64);
                        let b = Mat2::from_seed(7001 + 31 * rep as u64);
                        let comm = a.mul(&b).mul(&a.inv()).mul(&b.inv());
                        let z = comm.pow(rep as u32 + 1);
                        let zi = z.inv();
                        vec![a, b, z.mul(&b).mul(&zi), z.mul(&a).mul(&zi)]
                    }
                };
                gens.iter().flat_map(|g| [*g, g.inv()]).collect()
            })
            .collect();
        Self { images }
    }

    pub fn identity() -> Fingerprint {
        [Mat2::IDENTITY; 2]
    }

    pub fn step(&self, f: &Fingerprint, g: Letter) -> Fingerprint {
        [
            f[0].mul(&self.images[0][g as usize]),
            f[1].mul(&self.images[1][g as usize]),
        ]
    }

    pub fn of_word(&self, word: &[Letter]) -> Fingerprint {
        word.iter().fold(Self::identity(), |f, &g| self.step(&f, g))
    }
}

pub fn fingerprint_key(f: &Fingerprint) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for m in f {
        for &x in &m.0 {
            h ^= u64::from(x);
            h = h.wrapping_mul(0x0100_0000_01b3);
            h ^= h >> 29;
        }
    }
    h
}
