//! Form scripts: building successors of a type by sums, free extensions and
//! bracketed joins, with an audit trace of the consumed parameter sets.
//!
//! Applying a script is pure given its operands; the script records enough
//! to replay the construction. Every formed successor is a melding
//! successor of its base, which `type_melding_probe` checks at a bound.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generic::{ElementFilter, FixingQuery, GenericStructure};
use crate::structure::combinations;
use crate::types::{RankHandle, TypeDescriptor};

#[derive(Debug, Clone)]
pub enum FormStep {
    /// Sum with a disjoint-sockel operand in free position.
    Plus(TypeDescriptor),
    /// Free extension by a fresh element set.
    Free(Vec<usize>),
    /// Open a bracket; the matching Close joins against the interior.
    Open,
    /// Join the interior-built successor with a partner over the open-time
    /// sockel plus a fresh set.
    Close(TypeDescriptor),
}

impl FormStep {
    fn symbol(&self) -> char {
        match self {
            FormStep::Plus(_) => '+',
            FormStep::Free(_) => '>',
            FormStep::Open => '[',
            FormStep::Close(_) => ']',
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FormScript {
    pub steps: Vec<FormStep>,
}

impl FormScript {
    pub fn new(steps: Vec<FormStep>) -> Self {
        FormScript { steps }
    }

    pub fn symbols(&self) -> String {
        self.steps.iter().map(|s| s.symbol()).collect()
    }

    /// Bracket matching and non-empty interiors.
    pub fn validate_shape(&self) -> Result<()> {
        let mut depth = 0usize;
        let mut last_open_at: Vec<usize> = Vec::new();
        for (i, step) in self.steps.iter().enumerate() {
            match step {
                FormStep::Open => {
                    depth += 1;
                    last_open_at.push(i);
                }
                FormStep::Close(_) => {
                    if depth == 0 {
                        return Err(Error::Precondition("unmatched closing bracket".into()));
                    }
                    let open = last_open_at.pop().unwrap();
                    if i == open + 1 {
                        return Err(Error::Precondition("empty bracket interior".into()));
                    }
                    depth -= 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(Error::Precondition("unmatched opening bracket".into()));
        }
        Ok(())
    }
}

/// Audit record: the symbol sequence and, per symbol, the element set the
/// step consumed (the form-preserving assignment).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FormTrace {
    pub symbols: String,
    pub consumed: Vec<Vec<usize>>,
}

/// Apply a form script to a base type, returning the formed successor and
/// the audit trace. Consumed sets must be pairwise disjoint and disjoint
/// from the base sockel.
pub fn apply_form(
    g: &GenericStructure,
    base: &TypeDescriptor,
    script: &FormScript,
) -> Result<(TypeDescriptor, FormTrace)> {
    script.validate_shape()?;
    let mut current = base.clone();
    let mut used: BTreeSet<usize> = base.sockel_set();
    let mut consumed: Vec<Vec<usize>> = Vec::new();
    // Stack of (current at open time, index of the Open's consumed slot).
    let mut open_stack: Vec<(TypeDescriptor, usize)> = Vec::new();

    let claim = |set: &BTreeSet<usize>, used: &mut BTreeSet<usize>| -> Result<()> {
        for &e in set {
            if used.contains(&e) {
                return Err(Error::Precondition(format!(
                    "element {e} consumed twice in the form script"
                )));
            }
            used.insert(e);
        }
        Ok(())
    };

    for step in &script.steps {
        match step {
            FormStep::Plus(operand) => {
                let new: BTreeSet<usize> = operand.sockel_set();
                claim(&new, &mut used)?;
                current = current.sum(g, operand)?;
                consumed.push(new.into_iter().collect());
            }
            FormStep::Free(e) => {
                let set: BTreeSet<usize> = e.iter().copied().collect();
                claim(&set, &mut used)?;
                current = current.free_successor(g, &set)?;
                consumed.push(set.into_iter().collect());
            }
            FormStep::Open => {
                open_stack.push((current.clone(), consumed.len()));
                consumed.push(Vec::new());
            }
            FormStep::Close(partner) => {
                let (at_open, open_slot) = open_stack
                    .pop()
                    .ok_or_else(|| Error::Precondition("unmatched closing bracket".into()))?;
                let open_sockel = at_open.sockel_set();
                let restricted = partner.restrict(&open_sockel)?;
                if !restricted.same_type(&at_open) {
                    return Err(Error::Precondition(
                        "bracket partner is not a successor of the open-time type".into(),
                    ));
                }
                let new: BTreeSet<usize> = partner
                    .sockel_set()
                    .difference(&open_sockel)
                    .copied()
                    .collect();
                claim(&new, &mut used)?;
                current = current.join(g, partner)?;
                let set: Vec<usize> = new.into_iter().collect();
                consumed[open_slot] = set.clone();
                consumed.push(set);
            }
        }
    }
    Ok((
        current,
        FormTrace {
            symbols: script.symbols(),
            consumed,
        },
    ))
}

/// Probe the melding property of `succ` over `base`: every realised
/// fragment of `base`'s typeset (≤ fragment_bound, drawn from a window)
/// whose structure lies in `succ`'s rank must move into `succ`'s typeset
/// while fixing `base`'s sockel.
pub fn type_melding_probe(
    g: &mut GenericStructure,
    base: &TypeDescriptor,
    succ: &TypeDescriptor,
    fragment_bound: usize,
) -> Result<crate::bundle::ProbeOutcome> {
    let rank = RankHandle::new(succ.template().clone());
    let succ_sockel = succ.sockel_set();
    let pool: Vec<usize> = base
        .realized(g.snapshot())
        .into_iter()
        .filter(|e| !succ_sockel.contains(e))
        .take(8)
        .collect();
    let mut checked = 0usize;
    for size in 1..=fragment_bound.min(pool.len()) {
        for domain in combinations(&pool, size) {
            let set: BTreeSet<usize> = domain.iter().copied().collect();
            let (sub, _) = g.snapshot().induced(&set)?;
            if !rank.contains(g.age(), &sub)? {
                continue;
            }
            checked += 1;
            let q = FixingQuery::new(base.sockel().to_vec(), domain.clone())
                .with_all_filters(ElementFilter::Typeset(succ.clone()));
            if g.exists_fixing(&q, true)?.is_none() {
                return Ok(crate::bundle::ProbeOutcome::Counterexample {
                    assignment: crate::bundle::ConformAssignment {
                        assigned: vec![0; domain.len()],
                        domain,
                    },
                    fragment_bound,
                });
            }
        }
    }
    Ok(crate::bundle::ProbeOutcome::Pass {
        checked,
        fragment_bound,
    })
}

/// Generate a random form script of at most `max_len` symbols over fresh
/// operands, apply it to `base`, and return script, result and trace.
/// Operand sockels are realised as fresh free elements, so every step's
/// free-position precondition holds by construction.
pub fn random_form_script(
    g: &mut GenericStructure,
    base: &TypeDescriptor,
    max_len: usize,
    rng: &mut impl rand::Rng,
) -> Result<(FormScript, TypeDescriptor, FormTrace)> {
    // Pick a symbol shape: brackets need 3 symbols ([, interior, ]).
    let shapes: Vec<&str> = match max_len {
        0 => vec![""],
        1 => vec!["+", ">"],
        2 => vec!["+", ">", "++", "+>", ">+", ">>"],
        _ => vec![
            "+", ">", "++", "+>", ">+", ">>", "[+]", "[>]", "+++", "++>", "+>+", ">++", ">>+",
            ">+>", "+>>", ">>>",
        ],
    };
    let shape = shapes[rng.random_range(0..shapes.len())];
    let mut steps = Vec::new();
    let mut current = base.clone();
    let mut open_state: Option<TypeDescriptor> = None;
    for ch in shape.chars() {
        match ch {
            '+' => {
                // Fresh free elements carrying a random small age type.
                let count = 1 + rng.random_range(0..2usize);
                let fresh = realize_free_elements(g, count)?;
                let sockel: BTreeSet<usize> = fresh.iter().copied().collect();
                let operand = random_type_over(g, &sockel, rng)?;
                current = current.sum(g, &operand)?;
                steps.push(FormStep::Plus(operand));
            }
            '>' => {
                let count = 1 + rng.random_range(0..2usize);
                let fresh = realize_free_elements(g, count)?;
                let set: BTreeSet<usize> = fresh.iter().copied().collect();
                current = current.free_successor(g, &set)?;
                steps.push(FormStep::Free(fresh));
            }
            '[' => {
                open_state = Some(current.clone());
                steps.push(FormStep::Open);
            }
            ']' => {
                let at_open = open_state.take().expect("shape is well bracketed");
                let fresh = realize_free_elements(g, 1)?;
                let partners = crate::bundle::x_successors_of_member(g, &at_open, fresh[0])?;
                let partner = partners[rng.random_range(0..partners.len())].clone();
                current = current.join(g, &partner)?;
                steps.push(FormStep::Close(partner));
            }
            _ => unreachable!(),
        }
    }
    let script = FormScript::new(steps);
    // Re-apply for the audit trace; application is pure given operands.
    let (result, trace) = apply_form(g, base, &script)?;
    debug_assert!(result.same_type(&current));
    Ok((script, result, trace))
}

fn realize_free_elements(g: &mut GenericStructure, count: usize) -> Result<Vec<usize>> {
    let vertex = g
        .age()
        .enumerate(1)?
        .first()
        .cloned()
        .ok_or_else(|| Error::Precondition("empty age".into()))?;
    let mut out = Vec::new();
    for _ in 0..count {
        let map = g.realize_extension(&crate::generic::ExtensionRequest {
            a: vertex.clone(),
            anchored: vec![],
        })?;
        out.push(map[0]);
    }
    Ok(out)
}

fn random_type_over(
    g: &GenericStructure,
    sockel: &BTreeSet<usize>,
    rng: &mut impl rand::Rng,
) -> Result<TypeDescriptor> {
    let all = crate::types::types_over(g, sockel)?;
    Ok(all[rng.random_range(0..all.len())].clone())
}
