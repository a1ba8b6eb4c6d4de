//! JSON file formats. Field order is fixed by struct declaration and all
//! collections serialise in canonical order, so parse → serialise is
//! byte-stable.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::structure::{FinStructure, RelSymbol, Signature};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationEntry {
    pub rel: String,
    pub tuple: Vec<usize>,
}

/// `{"signature":[{"name":"E","arity":2,"mode":"set"}],"elements":3,
///   "relations":[{"rel":"E","tuple":[0,1]}]}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StructureFile {
    pub signature: Vec<RelSymbol>,
    pub elements: usize,
    pub relations: Vec<RelationEntry>,
}

impl StructureFile {
    pub fn from_structure(s: &FinStructure) -> Self {
        StructureFile {
            signature: s.signature().symbols.clone(),
            elements: s.size(),
            relations: s
                .instances()
                .map(|inst| RelationEntry {
                    rel: s.signature().symbols[inst.rel].name.clone(),
                    tuple: inst.tuple.clone(),
                })
                .collect(),
        }
    }

    pub fn into_structure(self) -> Result<FinStructure> {
        let sig = Signature::new(self.signature)?;
        let mut s = FinStructure::empty(sig.clone(), self.elements);
        for entry in self.relations {
            let rel = sig
                .symbol_index(&entry.rel)
                .ok_or_else(|| Error::File(format!("unknown relation symbol {}", entry.rel)))?;
            s.insert(rel, entry.tuple)
                .map_err(|e| Error::File(e.to_string()))?;
        }
        Ok(s)
    }
}

pub fn structure_to_json(s: &FinStructure) -> String {
    serde_json::to_string_pretty(&StructureFile::from_structure(s)).expect("serialises")
}

pub fn structure_from_json(text: &str) -> Result<FinStructure> {
    let f: StructureFile = serde_json::from_str(text)?;
    f.into_structure()
}

/// `{"explicit":[…]}`, `{"schematic":{"kind":…}}`, or `{"empty":{…}}` for
/// the unconstrained age over a signature.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum BoundaryFile {
    #[serde(rename = "explicit")]
    Explicit(Vec<StructureFile>),
    #[serde(rename = "schematic")]
    Schematic(SchematicFile),
    #[serde(rename = "empty")]
    Empty { signature: Vec<RelSymbol> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SchematicFile {
    CompleteGraph { n: usize },
    IrreducibleKUniformMinN { k: usize, n: usize },
    IrreducibleKUniformExactlyN { k: usize, n: usize },
}

/// `{"sockel":[ids],"template":<structure with the slot as last element>}`
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TypeFile {
    pub sockel: Vec<usize>,
    pub template: StructureFile,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BundleFile {
    pub sockel: Vec<usize>,
    pub members: Vec<StructureFile>,
}

/// Sorts with order edges, a rank chain, sigma bitsets over the ground set,
/// rho indices and the co-smallness threshold.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MhoFile {
    pub ground: usize,
    pub sorts: usize,
    /// Pairs (x, y) meaning sort x ⊑ sort y; reflexive closure implied.
    pub order: Vec<(usize, usize)>,
    pub ranks: usize,
    /// Per sort, the elements of its sigma set.
    pub sigma: Vec<Vec<usize>>,
    /// Per sort, the rank index (0 = smallest).
    pub rho: Vec<usize>,
    pub threshold: usize,
}

/// Snapshot sidecar: the demand log entries needed to replay growth.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandLogFile {
    pub seed: u64,
    pub mode: String,
    pub entries: Vec<DemandLogEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DemandLogEntry {
    pub demand_id: u64,
    pub anchor: Vec<usize>,
    pub template: StructureFile,
    pub created: Vec<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::fixtures::*;

    #[test]
    fn structure_round_trip_is_byte_stable() {
        let tri = complete_graph(3);
        let text = structure_to_json(&tri);
        let back = structure_from_json(&text).unwrap();
        assert_eq!(back, tri);
        assert_eq!(structure_to_json(&back), text);
    }

    #[test]
    fn boundary_file_variants_parse() {
        let explicit = r#"{"explicit":[{"signature":[{"name":"E","arity":2,"mode":"set"}],"elements":3,"relations":[{"rel":"E","tuple":[0,1]},{"rel":"E","tuple":[0,2]},{"rel":"E","tuple":[1,2]}]}]}"#;
        let f: BoundaryFile = serde_json::from_str(explicit).unwrap();
        match f {
            BoundaryFile::Explicit(v) => assert_eq!(v.len(), 1),
            _ => panic!("expected explicit"),
        }
        let schematic =
            r#"{"schematic":{"kind":"irreducible_k_uniform_min_n","k":3,"n":5}}"#;
        let f: BoundaryFile = serde_json::from_str(schematic).unwrap();
        match f {
            BoundaryFile::Schematic(SchematicFile::IrreducibleKUniformMinN { k, n }) => {
                assert_eq!((k, n), (3, 5));
            }
            _ => panic!("expected schematic"),
        }
    }

    #[test]
    fn unknown_relation_symbol_is_a_file_error() {
        let text = r#"{"signature":[{"name":"E","arity":2,"mode":"set"}],"elements":2,"relations":[{"rel":"F","tuple":[0,1]}]}"#;
        assert!(structure_from_json(text).is_err());
    }
}
