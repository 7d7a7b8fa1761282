//! Breadth-first enumeration of group balls in shortlex order.
//!
//! Level-`l` elements are expanded in id order and generators in letter
//! order, so the first word that reaches a new element is its shortlex
//! least geodesic. Candidate coincidences are found through fingerprint
//! buckets and confirmed with the exact word-problem solver.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::words::{
    fingerprint_key, free_reduce, invert_word, Dehn, Fingerprint, Fingerprinter, Letter, Presentation,
};

#[derive(Debug, Clone)]
pub(crate) struct GroupBall {
    pub levels: Vec<u32>,
    pub neighbors: Vec<Vec<u32>>,
    /// Shortlex tree: `word(v) = word(parent[v]) . letter[v]`.
    pub parent: Vec<u32>,
    pub letter: Vec<Letter>,
}

struct Solver {
    dehn: Option<Dehn>,
}

impl Solver {
    fn new(p: &Presentation) -> Self {
        let dehn = match p {
            Presentation::Free { .. } => None,
            Presentation::OneRelator { relator, .. } => Some(Dehn::new(relator)),
        };
        Self { dehn }
    }

    fn is_trivial(&self, w: &[Letter]) -> bool {
        match &self.dehn {
            None => free_reduce(w).is_empty(),
            Some(d) => d.reduce(w).is_empty(),
        }
    }
}

pub(crate) fn word_of(parent: &[u32], letter: &[Letter], v: u32, out: &mut Vec<Letter>) {
    out.clear();
    let mut cur = v;
    while cur != 0 {
        out.push(letter[cur as usize]);
        cur = parent[cur as usize];
    }
    out.reverse();
}

pub(crate) fn build_group_ball(presentation: &Presentation, radius: u32, cap: usize) -> Result<GroupBall> {
    let gens = presentation.generator_count() as Letter;
    let fp = Fingerprinter::new(presentation);
    let solver = Solver::new(presentation);

    let mut levels = vec![0u32];
    let mut parent = vec![0u32];
    let mut letter: Vec<Letter> = vec![0];
    let mut prints: Vec<Fingerprint> = vec![Fingerprinter::identity()];
    let mut neighbors: Vec<Vec<u32>> = vec![Vec::new()];
    let mut first: HashMap<u64, u32> = HashMap::new();
    let mut overflow: HashMap<u64, Vec<u32>> = HashMap::new();
    first.insert(fingerprint_key(&prints[0]), 0);

    let mut wv = Vec::new();
    let mut wc = Vec::new();
    let mut probe = Vec::new();

    let mut level_start = 0usize;
    for level in 0..=radius {
        let level_end = levels.len();
        for v in level_start..level_end {
            word_of(&parent, &letter, v as u32, &mut wv);
            for g in 0..gens {
                let f = fp.step(&prints[v], g);
                let key = fingerprint_key(&f);
                let mut found = None;
                let candidates = first
                    .get(&key)
                    .into_iter()
                    .chain(overflow.get(&key).into_iter().flatten());
                for &c in candidates {
                    if prints[c as usize] != f {
                        continue;
                    }
                    // v . g = parent(v) when g undoes the last letter
                    if v != 0 && c == parent[v] && g == (letter[v] ^ 1) {
                        found = Some(c);
                        break;
                    }
                    word_of(&parent, &letter, c, &mut wc);
                    probe.clear();
                    probe.extend_from_slice(&wv);
                    probe.push(g);
                    probe.extend(invert_word(&wc));
                    if solver.is_trivial(&probe) {
                        found = Some(c);
                        break;
                    }
                }
                match found {
                    Some(c) => {
                        if !neighbors[v].contains(&c) {
                            neighbors[v].push(c);
                        }
                    }
                    None if level < radius => {
                        let id = levels.len() as u32;
                        if levels.len() >= cap {
                            return Err(Error::ResourceLimit { radius, cap });
                        }
                        levels.push(level + 1);
                        parent.push(v as u32);
                        letter.push(g);
                        prints.push(f);
                        neighbors.push(Vec::new());
                        neighbors[v].push(id);
                        match first.entry(key) {
                            std::collections::hash_map::Entry::Vacant(e) => {
                                e.insert(id);
                            }
                            std::collections::hash_map::Entry::Occupied(_) => {
                                overflow.entry(key).or_default().push(id);
                            }
                        }
                    }
                    None => {}
                }
            }
        }
        level_start = level_end;
    }
    for ns in &mut neighbors {
        ns.sort_unstable();
    }
    Ok(GroupBall {
        levels,
        neighbors,
        parent,
        letter,
    })
}
