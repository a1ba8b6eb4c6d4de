//! Isomorphism-invariant hashing and iso-class bookkeeping.
//!
//! The hash is a colour-refinement fingerprint over the incidence structure;
//! collisions are resolved by a full isomorphism search, so it is used only
//! to bucket candidates, never as a decision procedure.

use std::collections::hash_map::DefaultHasher;
use std::collections::BTreeMap;
use std::hash::{Hash, Hasher};

use crate::search::is_isomorphic;
use crate::structure::{FinStructure, Mode};

fn h64<T: Hash>(t: &T) -> u64 {
    let mut h = DefaultHasher::new();
    t.hash(&mut h);
    h.finish()
}

/// Colour-refinement hash, invariant under isomorphism.
pub fn iso_hash(s: &FinStructure) -> u64 {
    let n = s.size();
    let mut colour: Vec<u64> = vec![0; n];
    // Initial colour: per-element profile of (relation, own position).
    for e in 0..n {
        let mut profile: Vec<(usize, usize)> = Vec::new();
        for inst in s.instances() {
            for (pos, &x) in inst.tuple.iter().enumerate() {
                if x == e {
                    let p = if s.signature().symbols[inst.rel].mode == Mode::Set {
                        0
                    } else {
                        pos + 1
                    };
                    profile.push((inst.rel, p));
                }
            }
        }
        profile.sort_unstable();
        colour[e] = h64(&profile);
    }
    for _ in 0..n {
        let mut next = vec![0u64; n];
        for e in 0..n {
            let mut profile: Vec<(usize, usize, Vec<u64>)> = Vec::new();
            for inst in s.instances() {
                for (pos, &x) in inst.tuple.iter().enumerate() {
                    if x == e {
                        let p = if s.signature().symbols[inst.rel].mode == Mode::Set {
                            0
                        } else {
                            pos + 1
                        };
                        let mut mates: Vec<u64> =
                            inst.tuple.iter().map(|&m| colour[m]).collect();
                        if s.signature().symbols[inst.rel].mode == Mode::Set {
                            mates.sort_unstable();
                        }
                        profile.push((inst.rel, p, mates));
                    }
                }
            }
            profile.sort_unstable();
            next[e] = h64(&(colour[e], profile));
        }
        if next == colour {
            break;
        }
        colour = next;
    }
    let mut multiset = colour.clone();
    multiset.sort_unstable();
    let mut inst_profile: Vec<(usize, Vec<u64>)> = s
        .instances()
        .map(|inst| {
            let mut cs: Vec<u64> = inst.tuple.iter().map(|&e| colour[e]).collect();
            if s.signature().symbols[inst.rel].mode == Mode::Set {
                cs.sort_unstable();
            }
            (inst.rel, cs)
        })
        .collect();
    inst_profile.sort_unstable();
    h64(&(n, multiset, inst_profile))
}

/// Map from iso-classes of structures to values, with hash buckets and
/// explicit isomorphism checks on collision.
#[derive(Debug, Clone, Default)]
pub struct IsoClassMap<V> {
    buckets: BTreeMap<u64, Vec<(FinStructure, V)>>,
    len: usize,
}

impl<V> IsoClassMap<V> {
    pub fn new() -> Self {
        IsoClassMap {
            buckets: BTreeMap::new(),
            len: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, key: &FinStructure) -> Option<&V> {
        let h = iso_hash(key);
        self.buckets.get(&h).and_then(|b| {
            b.iter()
                .find(|(rep, _)| is_isomorphic(rep, key))
                .map(|(_, v)| v)
        })
    }

    /// Insert if no isomorphic key is present. Returns true when inserted.
    pub fn insert_if_new(&mut self, key: FinStructure, value: V) -> bool {
        let h = iso_hash(&key);
        let bucket = self.buckets.entry(h).or_default();
        if bucket.iter().any(|(rep, _)| is_isomorphic(rep, &key)) {
            return false;
        }
        bucket.push((key, value));
        self.len += 1;
        true
    }

    pub fn iter(&self) -> impl Iterator<Item = (&FinStructure, &V)> {
        self.buckets.values().flatten().map(|(k, v)| (k, v))
    }
}

/// Deduplicate a list of structures up to isomorphism, preserving first
/// occurrences in order.
pub fn dedup_iso(items: Vec<FinStructure>) -> Vec<FinStructure> {
    let mut seen: IsoClassMap<()> = IsoClassMap::new();
    let mut out = Vec::new();
    for s in items {
        if seen.insert_if_new(s.clone(), ()) {
            out.push(s);
        }
    }
    out
}
