//! Deterministic colouring adversaries. A colour depends only on the
//! element id, its creation-time attachment record (possibly through the
//! colours of older elements) and the oracle seed, so every run replays.

use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generic::AttachmentRecord;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum OracleRule {
    /// Every element gets the same colour.
    AllOne { color: usize },
    /// Colour by parity of the creation index.
    CreationParity,
    /// Colour 1 iff the element was created with at least `d` instances.
    AttachmentDegreeThreshold { d: usize },
    /// Explicit id → colour list; elements beyond the list get `default`.
    Scripted { colors: Vec<usize>, default: usize },
    /// Hash of (seed, id) mod arity.
    SeededRandom,
    /// Colour 0 unless that would put two 0-coloured elements in a common
    /// instance: the 0 class stays edge-free in the Gaifman sense.
    EdgeFreeRed,
}

impl OracleRule {
    pub fn parse(name: &str) -> Result<OracleRule> {
        Ok(match name {
            "all-0" => OracleRule::AllOne { color: 0 },
            "all-1" => OracleRule::AllOne { color: 1 },
            "parity" => OracleRule::CreationParity,
            "degree" => OracleRule::AttachmentDegreeThreshold { d: 1 },
            "random" => OracleRule::SeededRandom,
            "edge-free-red" => OracleRule::EdgeFreeRed,
            other => {
                if let Some(d) = other.strip_prefix("degree-") {
                    let d = d
                        .parse()
                        .map_err(|_| Error::Precondition(format!("bad oracle {other}")))?;
                    OracleRule::AttachmentDegreeThreshold { d }
                } else {
                    return Err(Error::Precondition(format!("unknown oracle {other}")));
                }
            }
        })
    }

    pub fn name(&self) -> String {
        match self {
            OracleRule::AllOne { color } => format!("all-{color}"),
            OracleRule::CreationParity => "parity".into(),
            OracleRule::AttachmentDegreeThreshold { d } => format!("degree-{d}"),
            OracleRule::Scripted { .. } => "scripted".into(),
            OracleRule::SeededRandom => "random".into(),
            OracleRule::EdgeFreeRed => "edge-free-red".into(),
        }
    }
}

/// A rule instantiated with a seed and colour count, with a memo so
/// history-dependent rules stay replay-stable.
pub struct ColoringOracle {
    rule: OracleRule,
    arity: usize,
    seed: u64,
    memo: Mutex<Vec<usize>>,
}

impl ColoringOracle {
    pub fn new(rule: OracleRule, arity: usize, seed: u64) -> Self {
        ColoringOracle {
            rule,
            arity,
            seed,
            memo: Mutex::new(Vec::new()),
        }
    }

    pub fn rule(&self) -> &OracleRule {
        &self.rule
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn name(&self) -> String {
        self.rule.name()
    }

    /// Colour of `element`. `records` must cover ids `0..=element`.
    pub fn color(&self, element: usize, records: &[AttachmentRecord]) -> usize {
        let mut memo = self.memo.lock().unwrap();
        while memo.len() <= element {
            let e = memo.len();
            let c = self.compute(e, &records[e], &memo);
            memo.push(c);
        }
        memo[element]
    }

    fn compute(&self, element: usize, record: &AttachmentRecord, older: &[usize]) -> usize {
        debug_assert_eq!(record.element, element);
        match &self.rule {
            OracleRule::AllOne { color } => color % self.arity,
            OracleRule::CreationParity => element % self.arity,
            OracleRule::AttachmentDegreeThreshold { d } => {
                usize::from(record.instances.len() >= *d) % self.arity
            }
            OracleRule::Scripted { colors, default } => {
                colors.get(element).copied().unwrap_or(*default) % self.arity
            }
            OracleRule::SeededRandom => {
                (splitmix(self.seed ^ (element as u64).wrapping_mul(0x9e3779b97f4a7c15))
                    % self.arity as u64) as usize
            }
            OracleRule::EdgeFreeRed => {
                let clash = record.instances.iter().any(|inst| {
                    inst.tuple
                        .iter()
                        .any(|&o| o != element && o < older.len() && older[o] == 0)
                });
                if clash {
                    1 % self.arity
                } else {
                    0
                }
            }
        }
    }
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e3779b97f4a7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::AgeHandle;
    use crate::generic::{GenericStructure, GrowthMode};

    #[test]
    fn replay_stability() {
        let mut g =
            GenericStructure::new(AgeHandle::all_graphs(), 3, GrowthMode::Dovetail).unwrap();
        g.advance(40).unwrap();
        for rule in [
            OracleRule::AllOne { color: 1 },
            OracleRule::CreationParity,
            OracleRule::AttachmentDegreeThreshold { d: 1 },
            OracleRule::SeededRandom,
            OracleRule::EdgeFreeRed,
        ] {
            let a = ColoringOracle::new(rule.clone(), 2, 7);
            let b = ColoringOracle::new(rule, 2, 7);
            for e in 0..g.size() {
                assert_eq!(a.color(e, g.records()), b.color(e, g.records()));
            }
        }
    }

    #[test]
    fn edge_free_red_keeps_red_class_edge_free() {
        let mut g =
            GenericStructure::new(AgeHandle::all_graphs(), 5, GrowthMode::Dovetail).unwrap();
        g.advance(80).unwrap();
        let oracle = ColoringOracle::new(OracleRule::EdgeFreeRed, 2, 0);
        let reds: Vec<usize> = (0..g.size())
            .filter(|&e| oracle.color(e, g.records()) == 0)
            .collect();
        for (i, &a) in reds.iter().enumerate() {
            for &b in &reds[i + 1..] {
                assert!(!g.snapshot().gaifman_adjacent(a, b), "red edge {a}-{b}");
            }
        }
        assert!(!reds.is_empty());
    }

    #[test]
    fn parse_round_trip() {
        for name in ["all-0", "all-1", "parity", "degree-2", "random", "edge-free-red"] {
            let rule = OracleRule::parse(name).unwrap();
            assert_eq!(rule.name(), name);
        }
        assert!(OracleRule::parse("nope").is_err());
    }
}
