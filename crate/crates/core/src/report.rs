//! Run configuration and command dispatch. The CLI is a thin wrapper over
//! `execute`; reports embed the exact config and a version tag so any run
//! can be replayed, and serialise canonically (timing fields aside).

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::age::{AgeHandle, BoundarySpec, SchematicRule};
use crate::error::{Error, Result};
use crate::files::{BoundaryFile, MhoFile, SchematicFile, StructureFile, TypeFile};
use crate::game::{
    monochromatic_construct, rado_dichotomy, weak_indivisibility_run, Budgets, GameConfig,
};
use crate::generic::{GenericStructure, GrowthMode};
use crate::mho::{check_invariants, constructive_set, largeness_dichotomy, MhoInstance};
use crate::oracle::{ColoringOracle, OracleRule};
use crate::partition::{build_pqr, classify, ClassifierVerdict, PqrClass};
use crate::structure::FinStructure;
use crate::types::RankCaps;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: String,
    /// Inline input payloads (file contents), keyed by role.
    #[serde(default)]
    pub inputs: std::collections::BTreeMap<String, String>,
    pub sockel_bound: usize,
    pub size_bound: usize,
    pub fragment_bound: usize,
    pub retry: usize,
    pub backtrack: usize,
    pub advance: usize,
    pub seed: u64,
    pub color: usize,
    pub target_len: usize,
    pub prefix: usize,
    pub steps: usize,
    pub oracle: String,
    pub mho_s: Vec<usize>,
    pub random_mode: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: String::new(),
            inputs: Default::default(),
            sockel_bound: 2,
            size_bound: 5,
            fragment_bound: 3,
            retry: 50,
            backtrack: 20,
            advance: 500,
            seed: 0,
            color: 0,
            target_len: 20,
            prefix: 60,
            steps: 60,
            oracle: "parity".into(),
            mho_s: Vec::new(),
            random_mode: false,
        }
    }
}

impl RunConfig {
    pub fn budgets(&self) -> Budgets {
        Budgets {
            retry: self.retry,
            backtrack: self.backtrack,
            advance: self.advance,
        }
    }

    pub fn caps(&self) -> RankCaps {
        RankCaps::default()
    }

    fn input(&self, role: &str) -> Result<&str> {
        self.inputs
            .get(role)
            .map(|s| s.as_str())
            .ok_or_else(|| Error::File(format!("missing {role} input")))
    }

    fn boundary(&self) -> Result<std::sync::Arc<AgeHandle>> {
        let text = self.input("boundary")?;
        let file: BoundaryFile = serde_json::from_str(text)?;
        let spec = match file {
            BoundaryFile::Explicit(members) => {
                let members: Result<Vec<FinStructure>> = members
                    .into_iter()
                    .map(|m| m.into_structure())
                    .collect();
                BoundarySpec::explicit(members?)?
            }
            BoundaryFile::Schematic(s) => BoundarySpec::Schematic {
                rule: match s {
                    SchematicFile::CompleteGraph { n } => SchematicRule::CompleteGraph { n },
                    SchematicFile::IrreducibleKUniformMinN { k, n } => {
                        SchematicRule::IrreducibleKUniformMinN { k, n }
                    }
                    SchematicFile::IrreducibleKUniformExactlyN { k, n } => {
                        SchematicRule::IrreducibleKUniformExactlyN { k, n }
                    }
                },
            },
            BoundaryFile::Empty { signature } => {
                let sig = crate::structure::Signature::new(signature)?;
                return Ok(AgeHandle::unbounded(sig));
            }
        };
        AgeHandle::new(spec)
    }

    fn oracle(&self, arity: usize) -> Result<ColoringOracle> {
        let rule = if let Some(text) = self.inputs.get("oracle_script") {
            let colors: Vec<usize> = serde_json::from_str(text)?;
            OracleRule::Scripted { colors, default: 1 }
        } else {
            OracleRule::parse(&self.oracle)?
        };
        Ok(ColoringOracle::new(rule, arity, self.seed))
    }
}

/// Completion status, mapped by the CLI onto exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunStatus {
    Completed,
    InputError,
    BudgetExhausted,
}

pub struct RunOutput {
    pub report: String,
    pub status: RunStatus,
}

fn envelope(config: &RunConfig, started: Instant, result: serde_json::Value) -> String {
    let report = json!({
        "version": crate::VERSION_TAG,
        "config": config,
        "result": result,
        "timing_ms": started.elapsed().as_millis() as u64,
    });
    serde_json::to_string_pretty(&report).expect("serialisable")
}

/// Dispatch one command. Input payloads ride inside the config so a report
/// embeds everything needed to replay it.
pub fn execute(config: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    let result: serde_json::Value = match config.command.as_str() {
        "classify" => {
            let age = config.boundary()?;
            let report = classify(&age, config.sockel_bound, config.size_bound, &config.caps())?;
            serde_json::to_value(&report)?
        }
        "types" => {
            let age = config.boundary()?;
            let census = crate::partition::type_census(&age, config.sockel_bound)?;
            let members = age.enumerate_up_to(config.size_bound)?;
            let caps = config.caps();
            let vectors: Vec<Vec<bool>> = census
                .iter()
                .map(|t| crate::types::rank_vector(&age, t, &members, &caps))
                .collect::<Result<_>>()?;
            let mut distinct = vectors.clone();
            distinct.sort();
            distinct.dedup();
            let chain = distinct
                .iter()
                .all(|a| distinct.iter().all(|b| pointwise_leq(a, b) || pointwise_leq(b, a)));
            json!({
                "type_classes": census.iter().map(StructureFile::from_structure).collect::<Vec<_>>(),
                "rank_vectors": vectors,
                "observed_ranks": distinct.len(),
                "linear_at_bound": chain,
                "members_compared": members.len(),
            })
        }
        "sample" => {
            let age = config.boundary()?;
            let mode = if config.random_mode {
                GrowthMode::Random
            } else {
                GrowthMode::Dovetail
            };
            let mut g = GenericStructure::new(age, config.seed, mode)?;
            g.advance(config.steps)?;
            let sidecar = crate::files::DemandLogFile {
                seed: config.seed,
                mode: if config.random_mode {
                    "random".into()
                } else {
                    "dovetail".into()
                },
                entries: g
                    .log()
                    .iter()
                    .map(|e| crate::files::DemandLogEntry {
                        demand_id: e.demand_id,
                        anchor: e.anchor.clone(),
                        template: StructureFile::from_structure(&e.template),
                        created: vec![e.created],
                    })
                    .collect(),
            };
            json!({
                "snapshot": StructureFile::from_structure(g.snapshot()),
                "demand_log": serde_json::to_value(&sidecar)?,
            })
        }
        "game" => {
            let age = config.boundary()?;
            let mut g = GenericStructure::new(age, config.seed, GrowthMode::Dovetail)?;
            let oracle = config.oracle(2)?;
            let mut game_config = GameConfig::new(config.color, config.target_len);
            game_config.budgets = config.budgets();
            game_config.refinement_bound = config.fragment_bound.min(2);
            let result = monochromatic_construct(&mut g, &oracle, game_config, None)?;
            serde_json::to_value(&result)?
        }
        "dichotomy" => {
            let age = AgeHandle::all_graphs();
            let mut g = GenericStructure::new(age, config.seed, GrowthMode::Dovetail)?;
            let oracle = config.oracle(2)?;
            let out = rado_dichotomy(&mut g, &oracle, config.target_len, config.budgets())?;
            serde_json::to_value(&out)?
        }
        "weak" => {
            let age = config.boundary()?;
            let missing: StructureFile = serde_json::from_str(config.input("missing")?)?;
            let missing = missing.into_structure()?;
            let mut g = GenericStructure::new(age, config.seed, GrowthMode::Dovetail)?;
            let oracle = config.oracle(2)?;
            let out = weak_indivisibility_run(
                &mut g,
                &oracle,
                &missing,
                config.color,
                config.target_len,
                config.budgets(),
            )?;
            serde_json::to_value(&out)?
        }
        "divide" => {
            let age = config.boundary()?;
            let caps = config.caps();
            let class_report =
                classify(&age, config.sockel_bound, config.size_bound, &caps)?;
            let (t, s) = match &class_report.verdict {
                ClassifierVerdict::Divisible {
                    witness_t,
                    witness_s,
                    ..
                } => (
                    witness_t.clone().into_structure()?,
                    witness_s.clone().into_structure()?,
                ),
                _ => {
                    let t: TypeFile = serde_json::from_str(config.input("type_t")?)?;
                    let s: TypeFile = serde_json::from_str(config.input("type_s")?)?;
                    (t.template.into_structure()?, s.template.into_structure()?)
                }
            };
            let mut g = GenericStructure::new(age, config.seed, GrowthMode::Dovetail)?;
            g.grow_to(config.prefix)?;
            let part = build_pqr(&g, &t, &s, config.prefix, config.sockel_bound.min(3))?;
            let q_class: BTreeSet<usize> =
                part.class_elements(PqrClass::Q).into_iter().collect();
            let p_class: BTreeSet<usize> =
                part.class_elements(PqrClass::P).into_iter().collect();
            let probe_len = 6.min(config.prefix);
            let probe_set: BTreeSet<usize> = (0..probe_len).collect();
            let (probe, _) = g.snapshot().induced(&probe_set)?;
            let (q_sub, _) = g.snapshot().induced(&q_class)?;
            let (p_sub, _) = g.snapshot().induced(&p_class)?;
            let embeds_q = crate::age::embeds(&probe, &q_sub);
            let embeds_p = crate::age::embeds(&probe, &p_sub);
            json!({
                "classifier": serde_json::to_value(&class_report)?,
                "partition": serde_json::to_value(&part)?,
                "p_size": p_class.len(),
                "q_size": q_class.len(),
                "r_size": part.class_elements(PqrClass::R).len(),
                "prefix_probe_len": probe_len,
                "prefix_embeds_into_q": embeds_q,
                "prefix_embeds_into_p": embeds_p,
            })
        }
        "mho" => {
            let inst = if let Some(text) = config.inputs.get("mho") {
                let file: MhoFile = serde_json::from_str(text)?;
                MhoInstance::from_file(&file)?
            } else {
                crate::mho::generate_instance(config.seed, 0)
            };
            let validation = inst.validate();
            let s: BTreeSet<usize> = if config.mho_s.is_empty() {
                (0..inst.ground).filter(|e| e % 2 == 0).collect()
            } else {
                config.mho_s.iter().copied().collect()
            };
            if validation != crate::mho::MhoValidation::Pass {
                json!({
                    "instance": inst.to_file(),
                    "validation": serde_json::to_value(&validation)?,
                })
            } else {
                let dichotomy = largeness_dichotomy(&inst, &s)?;
                let constructive = constructive_set(&inst, &s, &dichotomy)?;
                let inv = check_invariants(&inst, &s);
                json!({
                    "instance": inst.to_file(),
                    "validation": serde_json::to_value(&validation)?,
                    "s": s.iter().copied().collect::<Vec<_>>(),
                    "dichotomy": serde_json::to_value(&dichotomy)?,
                    "constructive": serde_json::to_value(&constructive)?,
                    "invariants": {
                        "labelled_closure": inv.labelled_closure,
                        "rank_monotone": inv.rank_monotone,
                        "big_phi_implies_phi": inv.big_phi_implies_phi,
                        "label_zero_implies_phi": inv.label_zero_implies_phi,
                    },
                })
            }
        }
        "export-dot" => {
            let s: StructureFile = serde_json::from_str(config.input("structure")?)?;
            let s = s.into_structure()?;
            json!({ "dot": s.to_dot() })
        }
        other => return Err(Error::File(format!("unknown command {other}"))),
    };
    Ok(RunOutput {
        report: envelope(config, started, result),
        status: RunStatus::Completed,
    })
}

fn pointwise_leq(a: &[bool], b: &[bool]) -> bool {
    a.iter().zip(b).all(|(&x, &y)| !x || y)
}

/// Strip volatile timing fields for byte comparison of replayed reports.
pub fn strip_timing(report: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(report).expect("valid report JSON");
    fn walk(v: &mut serde_json::Value) {
        match v {
            serde_json::Value::Object(map) => {
                map.remove("timing_ms");
                for (_, child) in map.iter_mut() {
                    walk(child);
                }
            }
            serde_json::Value::Array(items) => {
                for child in items.iter_mut() {
                    walk(child);
                }
            }
            _ => {}
        }
    }
    walk(&mut v);
    serde_json::to_string_pretty(&v).expect("serialisable")
}
