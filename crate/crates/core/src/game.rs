//! The monochromatic-copy game: embed the enumeration prefix of the generic
//! structure into one colour class, tracking a refinement bundle over the
//! image, with budgets and backtracking in place of the limit argument's
//! constructive set.
//!
//! Bundles over the image are kept windowed: only the types of the still
//! unplaced enumeration elements are materialised (the full bundle over an
//! n-element sockel is exponential). The step invariant — the tracked
//! bundle refines the windowed type bundle at the configured bound — is
//! checked after every accepted candidate.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::bundle::{is_refinement, x_continuation, x_successors_of_member, Bundle};
use crate::error::{Error, Result};
use crate::files::{StructureFile, TypeFile};
use crate::generic::GenericStructure;
use crate::oracle::ColoringOracle;
use crate::partition::{classify, ClassifierVerdict};
use crate::search::verify_morphism;
use crate::structure::FinStructure;
use crate::types::{rank_vector, RankCaps, TypeDescriptor};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Budgets {
    pub retry: usize,
    pub backtrack: usize,
    pub advance: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            retry: 50,
            backtrack: 20,
            advance: 500,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct GameConfig {
    pub color: usize,
    pub target_len: usize,
    pub budgets: Budgets,
    /// Fragment bound for the per-step refinement invariant.
    pub refinement_bound: usize,
    /// Size bound for rank vectors steering the star targets.
    pub rank_bound: usize,
}

impl GameConfig {
    pub fn new(color: usize, target_len: usize) -> Self {
        GameConfig {
            color,
            target_len,
            budgets: Budgets::default(),
            refinement_bound: 2,
            rank_bound: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum TraceEvent {
    Accept {
        step: usize,
        candidate: usize,
        retries: usize,
        bundle_size: usize,
    },
    Backtrack {
        to_step: usize,
    },
    Advance {
        steps: usize,
    },
    Obstruction {
        step: usize,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObstructionReport {
    pub step: usize,
    /// The type whose realised typeset stayed monochromatic in the other
    /// colour.
    pub obstruction: TypeFile,
    pub other_colored_realized: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GameSuccess {
    pub color: usize,
    /// Image of enumeration element i.
    pub map: Vec<usize>,
    pub embedding_verified: bool,
    pub colors_verified: bool,
    pub trace: Vec<TraceEvent>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum GameResult {
    Success(GameSuccess),
    Obstructed {
        report: ObstructionReport,
        counter: Option<Box<GameResult>>,
        trace: Vec<TraceEvent>,
    },
    Inconclusive {
        reason: String,
        trace: Vec<TraceEvent>,
    },
}

impl GameResult {
    pub fn succeeded(&self) -> bool {
        matches!(self, GameResult::Success(_))
    }

    /// Success directly or through the counter-run.
    pub fn resolved(&self) -> bool {
        match self {
            GameResult::Success(_) => true,
            GameResult::Obstructed { counter, .. } => {
                counter.as_deref().is_some_and(GameResult::resolved)
            }
            GameResult::Inconclusive { .. } => false,
        }
    }
}

/// The type of enumeration element `u` over the image prefix, relabelled
/// through the embedding: sockel = image, slot relations mirror u's
/// relations to the enumerated prefix.
fn relabelled_type(
    g: &GenericStructure,
    prefix: &[usize],
    image: &[usize],
    u: usize,
) -> Result<TypeDescriptor> {
    let snap = g.snapshot();
    let mut sorted_image: Vec<usize> = image.to_vec();
    sorted_image.sort_unstable();
    let image_set: BTreeSet<usize> = sorted_image.iter().copied().collect();
    let (base, order) = snap.induced(&image_set)?;
    let star = sorted_image.len();
    let mut template = FinStructure::empty(snap.signature().clone(), star + 1);
    for inst in base.instances() {
        template.insert(inst.rel, inst.tuple.clone())?;
    }
    // Slot relations: u's relations to the prefix, u_i ↦ x_i.
    for inst in snap.incident(u) {
        let mut ok = true;
        let tuple: Vec<usize> = inst
            .tuple
            .iter()
            .map(|&e| {
                if e == u {
                    star
                } else if let Some(i) = prefix.iter().position(|&p| p == e) {
                    let x = image[i];
                    order.iter().position(|&o| o == x).unwrap()
                } else {
                    ok = false;
                    0
                }
            })
            .collect();
        if ok {
            template.insert(inst.rel, tuple)?;
        }
    }
    Ok(TypeDescriptor::from_parts(sorted_image, template))
}

/// Merge two one-point templates over possibly different sockels into the
/// type realised by a point lying in both typesets, or None when the
/// templates disagree on the shared sockel or the merge leaves the age.
fn joint_type(
    g: &GenericStructure,
    t: &TypeDescriptor,
    confine: &TypeDescriptor,
) -> Result<Option<TypeDescriptor>> {
    let shared: BTreeSet<usize> = t
        .sockel_set()
        .intersection(&confine.sockel_set())
        .copied()
        .collect();
    if !t.restrict(&shared)?.same_type(&confine.restrict(&shared)?) {
        return Ok(None);
    }
    let union: BTreeSet<usize> = t
        .sockel_set()
        .union(&confine.sockel_set())
        .copied()
        .collect();
    let sockel: Vec<usize> = union.iter().copied().collect();
    let (base, order) = g.snapshot().induced(&union)?;
    let star = sockel.len();
    let mut template = FinStructure::empty(base.signature().clone(), star + 1);
    for inst in base.instances() {
        template.insert(inst.rel, inst.tuple.clone())?;
    }
    for part in [t, confine] {
        let old_star = part.template().size() - 1;
        for inst in part.template().instances() {
            if inst.tuple.contains(&old_star) {
                let tuple: Vec<usize> = inst
                    .tuple
                    .iter()
                    .map(|&e| {
                        if e == old_star {
                            star
                        } else {
                            let elem = part.sockel()[e];
                            order.iter().position(|&o| o == elem).unwrap()
                        }
                    })
                    .collect();
                template.insert(inst.rel, tuple)?;
            }
        }
    }
    if !g.age().contains(&template)? {
        return Ok(None);
    }
    Ok(Some(TypeDescriptor::from_parts(sockel, template)))
}

/// Realise one fresh member of the typeset (joined with the confinement
/// type when given). Returns None when the joint template leaves the age.
pub fn realize_typeset_member(
    g: &mut GenericStructure,
    t: &TypeDescriptor,
    confine: Option<&TypeDescriptor>,
) -> Result<Option<usize>> {
    realize_typeset_member_variant(g, t, confine, 0)
}

/// Variant 0 is the canonical free realisation. Higher variants enrich the
/// fresh element with one extra instance towards an element outside the
/// sockel — typeset membership only constrains relations to the sockel, so
/// the enriched element still realises the type, but adversaries keyed to
/// attachment records see different creations.
pub fn realize_typeset_member_variant(
    g: &mut GenericStructure,
    t: &TypeDescriptor,
    confine: Option<&TypeDescriptor>,
    variant: usize,
) -> Result<Option<usize>> {
    let joint = match confine {
        Some(c) => match joint_type(g, t, c)? {
            Some(j) => j,
            None => return Ok(None),
        },
        None => t.clone(),
    };
    let star = joint.template().size() - 1;
    if variant == 0 {
        let anchored: Vec<(usize, usize)> = joint
            .sockel()
            .iter()
            .enumerate()
            .map(|(i, &e)| (i, e))
            .collect();
        let map = g.realize_extension(&crate::generic::ExtensionRequest {
            a: joint.template().clone(),
            anchored,
        })?;
        return Ok(Some(map[star]));
    }
    // Enumerate enrichments deterministically: outside elements ascending,
    // candidate instances through the fresh slot and that element.
    let mut remaining = variant - 1;
    for v in 0..g.size() {
        if joint.sockel().contains(&v) {
            continue;
        }
        // Joint base: sockel ∪ {v}; slot takes the template relations plus
        // one instance towards v.
        let mut base: Vec<usize> = joint.sockel().to_vec();
        base.push(v);
        base.sort_unstable();
        let v_pos = base.iter().position(|&x| x == v).unwrap();
        let slot = base.len();
        let set: std::collections::BTreeSet<usize> = base.iter().copied().collect();
        let (base_sub, order) = g.snapshot().induced(&set)?;
        let mut enriched = FinStructure::empty(base_sub.signature().clone(), slot + 1);
        for inst in base_sub.instances() {
            enriched.insert(inst.rel, inst.tuple.clone())?;
        }
        for inst in joint.template().instances() {
            if inst.tuple.contains(&star) {
                let tuple: Vec<usize> = inst
                    .tuple
                    .iter()
                    .map(|&e| {
                        if e == star {
                            slot
                        } else {
                            let elem = joint.sockel()[e];
                            order.iter().position(|&o| o == elem).unwrap()
                        }
                    })
                    .collect();
                enriched.insert(inst.rel, tuple)?;
            }
        }
        let candidates: Vec<(usize, Vec<usize>)> =
            crate::age::candidate_tuples_with(g.snapshot().signature(), slot + 1, slot)
                .into_iter()
                .filter(|(_, tuple)| tuple.contains(&v_pos))
                .filter(|(rel, tuple)| !enriched.contains(*rel, tuple.clone()))
                .collect();
        for (rel, tuple) in candidates {
            let mut trial = enriched.clone();
            trial.insert(rel, tuple)?;
            if !g.age().contains(&trial)? {
                continue;
            }
            if remaining > 0 {
                remaining -= 1;
                continue;
            }
            let anchored: Vec<(usize, usize)> =
                base.iter().enumerate().map(|(i, &e)| (i, e)).collect();
            let map = g.realize_extension(&crate::generic::ExtensionRequest {
                a: trial,
                anchored,
            })?;
            return Ok(Some(map[slot]));
        }
    }
    Ok(None)
}

struct StepFrame {
    /// Windowed base bundle and its refinement at this step.
    c_members: Vec<TypeDescriptor>,
    b_members: Vec<TypeDescriptor>,
    /// How many acceptable candidates to skip when (re)playing this step.
    skip: usize,
}

struct GameState<'a> {
    g: &'a mut GenericStructure,
    oracle: &'a ColoringOracle,
    config: GameConfig,
    confine: Option<TypeDescriptor>,
    trace: Vec<TraceEvent>,
    advances_left: usize,
    backtracks_left: usize,
    census: Vec<FinStructure>,
    census_vectors: Vec<Vec<bool>>,
}

impl<'a> GameState<'a> {
    fn color_of(&self, e: usize) -> usize {
        self.oracle.color(e, self.g.records())
    }

    /// Distinct types of the unplaced enumeration elements over the image.
    fn window(
        &self,
        prefix: &[usize],
        image: &[usize],
        upcoming: &[usize],
    ) -> Result<Vec<TypeDescriptor>> {
        let placed = &prefix[..image.len()];
        let mut out: Vec<TypeDescriptor> = Vec::new();
        for &u in upcoming {
            let t = relabelled_type(self.g, placed, image, u)?;
            if !out.iter().any(|x| x.same_type(&t)) {
                out.push(t);
            }
        }
        Ok(out)
    }

    /// Candidate images for the current step: realised members of the
    /// typeset in id order first, then fresh realisations, all checked
    /// against the oracle colour. `skip` acceptable candidates are
    /// discarded (the backtracking alternative counter).
    fn pick_candidate(
        &mut self,
        zbar: &TypeDescriptor,
        used: &BTreeSet<usize>,
        skip: usize,
    ) -> Result<Option<(usize, usize)>> {
        let mut found = 0usize;
        let mut retries = 0usize;
        let snap_size = self.g.size();
        for y in 0..snap_size {
            if used.contains(&y) {
                continue;
            }
            if !zbar.contains(self.g.snapshot(), y) {
                continue;
            }
            if let Some(c) = &self.confine {
                if !c.contains(self.g.snapshot(), y) {
                    continue;
                }
            }
            if self.color_of(y) != self.config.color {
                continue;
            }
            if found == skip {
                return Ok(Some((y, retries)));
            }
            found += 1;
        }
        for variant in 0..self.config.budgets.retry {
            retries += 1;
            let fresh =
                realize_typeset_member_variant(self.g, zbar, self.confine.as_ref(), variant)?;
            let Some(y) = fresh else {
                if variant == 0 {
                    return Ok(None);
                }
                break;
            };
            if self.color_of(y) == self.config.color {
                if found == skip {
                    return Ok(Some((y, retries)));
                }
                found += 1;
            }
        }
        Ok(None)
    }

    /// Per tracked member, the distinct ranks of its successors over a
    /// probe element of the matched typeset, each given by the smallest
    /// census template with that rank vector at the bound.
    fn star_targets(
        &mut self,
        b_members: &[TypeDescriptor],
        probe: usize,
        caps: &RankCaps,
    ) -> Result<Vec<Vec<FinStructure>>> {
        let members = self.g.age().enumerate_up_to(self.config.rank_bound)?;
        if self.census.is_empty() {
            self.census = crate::partition::type_census(self.g.age(), 2)?;
            self.census_vectors = self
                .census
                .iter()
                .map(|t| rank_vector(self.g.age(), t, &members, caps))
                .collect::<Result<_>>()?;
        }
        let mut targets = Vec::new();
        for b in b_members {
            let succs = x_successors_of_member(self.g, b, probe)?;
            let mut seen: Vec<(Vec<bool>, FinStructure)> = Vec::new();
            for s in succs {
                let v = rank_vector(self.g.age(), s.template(), &members, caps)?;
                if seen.iter().any(|(w, _)| *w == v) {
                    continue;
                }
                // Smallest census template with the same rank vector; fall
                // back to the successor's own template.
                let rep = self
                    .census_vectors
                    .iter()
                    .position(|w| *w == v)
                    .map(|i| self.census[i].clone())
                    .unwrap_or_else(|| s.template().clone());
                seen.push((v, rep));
            }
            targets.push(seen.into_iter().map(|(_, s)| s).collect());
        }
        Ok(targets)
    }

    fn run(&mut self, allow_counter: bool) -> Result<GameResult> {
        let l = self.config.target_len;
        self.g.grow_to(l)?;
        let prefix: Vec<usize> = (0..l).collect();
        let caps = RankCaps::default();

        let mut frames: Vec<StepFrame> = Vec::new();
        let mut image: Vec<usize> = Vec::new();
        // Initial windowed bundles over the empty sockel.
        let c0 = self.window(&prefix, &image, &prefix)?;
        frames.push(StepFrame {
            c_members: c0.clone(),
            b_members: c0,
            skip: 0,
        });

        loop {
            let n = image.len();
            if n >= l {
                break;
            }
            let frame_c = frames.last().unwrap().c_members.clone();
            let frame_b = frames.last().unwrap().b_members.clone();
            let skip = frames.last().unwrap().skip;
            let u_n = prefix[n];
            let t_n = relabelled_type(self.g, &prefix[..n], &image, u_n)?;
            let k = frame_c
                .iter()
                .position(|c| c.same_type(&t_n))
                .expect("window covers every unplaced element");
            let z = frame_b[k].clone();

            // Build the star successor steering all tracked members, and
            // take the free extension of the matched member as the
            // candidate typeset. Binary signatures skip the machinery:
            // every successor melds, so the tracked bundle carries over
            // without star partners.
            let binary = self.g.age().signature().is_binary();
            let (zbar, star_bundle, star_pred) = if binary {
                (z.clone(), None, Vec::new())
            } else {
                // A probe element of σ(z): realised or fresh.
                let probe = match z
                    .realized(self.g.snapshot())
                    .into_iter()
                    .find(|y| !image.contains(y))
                {
                    Some(y) => y,
                    None => match realize_typeset_member(self.g, &z, None)? {
                        Some(y) => y,
                        None => {
                            return Ok(GameResult::Inconclusive {
                                reason: format!("cannot realise the step-{n} typeset"),
                                trace: self.trace.clone(),
                            })
                        }
                    },
                };
                let targets = self.star_targets(&frame_b, probe, &caps)?;
                let base = Bundle::new(frame_b.clone())?;
                let (star, plan) = crate::bundle::build_star_successor(
                    self.g,
                    &base,
                    &targets,
                    self.config.rank_bound,
                )?;
                let e: BTreeSet<usize> = star
                    .sockel()
                    .iter()
                    .copied()
                    .filter(|s| !base.sockel().contains(s))
                    .collect();
                let zbar = if e.is_empty() {
                    z.clone()
                } else {
                    z.free_successor(self.g, &e)?
                };
                (zbar, Some(star), plan.predecessor)
            };

            let used: BTreeSet<usize> = image.iter().copied().collect();
            match self.pick_candidate(&zbar, &used, skip)? {
                Some((x_n, retries)) => {
                    image.push(x_n);
                    let upcoming = &prefix[n + 1..];
                    if upcoming.is_empty() {
                        self.trace.push(TraceEvent::Accept {
                            step: n,
                            candidate: x_n,
                            retries,
                            bundle_size: 0,
                        });
                        break;
                    }
                    // Continuation: select fibre members refining the
                    // windowed successor bundle, then join with the star
                    // members of matching rank.
                    let c_next = self.window(&prefix, &image, upcoming)?;
                    let b_next = self.continue_bundle(
                        &frame_c,
                        &frame_b,
                        star_bundle.as_ref(),
                        &star_pred,
                        x_n,
                        &c_next,
                        &caps,
                    )?;
                    match b_next {
                        Some(b_next) => {
                            self.trace.push(TraceEvent::Accept {
                                step: n,
                                candidate: x_n,
                                retries,
                                bundle_size: b_next.len(),
                            });
                            frames.push(StepFrame {
                                c_members: c_next,
                                b_members: b_next,
                                skip: 0,
                            });
                        }
                        None => {
                            // Continuation failed: treat like a dead
                            // candidate and move to the next alternative.
                            image.pop();
                            frames.last_mut().unwrap().skip += 1;
                        }
                    }
                }
                None => {
                    // Try advancing the scheduler once before giving up on
                    // the step.
                    if self.advances_left >= 25 {
                        self.advances_left -= 25;
                        self.g.advance(25)?;
                        self.trace.push(TraceEvent::Advance { steps: 25 });
                        if let Some((x_n, retries)) = self.pick_candidate(&zbar, &used, skip)? {
                            image.push(x_n);
                            let upcoming = &prefix[n + 1..];
                            if upcoming.is_empty() {
                                self.trace.push(TraceEvent::Accept {
                                    step: n,
                                    candidate: x_n,
                                    retries,
                                    bundle_size: 0,
                                });
                                break;
                            }
                            let c_next = self.window(&prefix, &image, upcoming)?;
                            if let Some(b_next) = self.continue_bundle(
                                &frame_c,
                                &frame_b,
                                star_bundle.as_ref(),
                                &star_pred,
                                x_n,
                                &c_next,
                                &caps,
                            )? {
                                self.trace.push(TraceEvent::Accept {
                                    step: n,
                                    candidate: x_n,
                                    retries,
                                    bundle_size: b_next.len(),
                                });
                                frames.push(StepFrame {
                                    c_members: c_next,
                                    b_members: b_next,
                                    skip: 0,
                                });
                                continue;
                            }
                            image.pop();
                            frames.last_mut().unwrap().skip += 1;
                            continue;
                        }
                    }
                    // Obstruction at this step: back off or report.
                    self.trace.push(TraceEvent::Obstruction { step: n });
                    if self.backtracks_left > 0 && frames.len() > 1 {
                        self.backtracks_left -= 1;
                        frames.pop();
                        image.pop();
                        frames.last_mut().unwrap().skip += 1;
                        self.trace.push(TraceEvent::Backtrack {
                            to_step: image.len(),
                        });
                        continue;
                    }
                    let other = 1 - self.config.color % 2;
                    let realized_other = zbar
                        .realized(self.g.snapshot())
                        .into_iter()
                        .filter(|&y| self.color_of(y) == other)
                        .count();
                    let report = ObstructionReport {
                        step: n,
                        obstruction: TypeFile {
                            sockel: zbar.sockel().to_vec(),
                            template: StructureFile::from_structure(zbar.template()),
                        },
                        other_colored_realized: realized_other,
                    };
                    let counter = if allow_counter {
                        // Mirror the dichotomy argument: build the other
                        // colour inside the obstruction typeset when its
                        // rank is full at the bound, otherwise run
                        // unconfined.
                        let members = self.g.age().enumerate_up_to(self.config.rank_bound)?;
                        let v =
                            rank_vector(self.g.age(), zbar.template(), &members, &caps)?;
                        let confine = if v.iter().all(|&b| b) {
                            Some(zbar.clone())
                        } else {
                            None
                        };
                        let mut counter_state = GameState {
                            g: self.g,
                            oracle: self.oracle,
                            config: GameConfig {
                                color: other,
                                ..self.config
                            },
                            confine,
                            trace: Vec::new(),
                            advances_left: self.config.budgets.advance,
                            backtracks_left: self.config.budgets.backtrack,
                            census: Vec::new(),
                            census_vectors: Vec::new(),
                        };
                        Some(Box::new(counter_state.run(false)?))
                    } else {
                        None
                    };
                    return Ok(GameResult::Obstructed {
                        report,
                        counter,
                        trace: self.trace.clone(),
                    });
                }
            }
        }

        // Verify the embedding and the colours independently.
        let prefix_set: BTreeSet<usize> = prefix.iter().copied().collect();
        let image_set: BTreeSet<usize> = image.iter().copied().collect();
        let (src, src_order) = self.g.snapshot().induced(&prefix_set)?;
        let (dst, dst_order) = self.g.snapshot().induced(&image_set)?;
        let map_vec: Vec<usize> = src_order
            .iter()
            .map(|&u| {
                let i = prefix.iter().position(|&p| p == u).unwrap();
                dst_order.iter().position(|&d| d == image[i]).unwrap()
            })
            .collect();
        let embedding_verified =
            verify_morphism(&src, &dst, &map_vec, crate::search::MorphKind::Embedding)
                && verify_morphism(&src, &dst, &map_vec, crate::search::MorphKind::Iso);
        let colors_verified = image.iter().all(|&x| self.color_of(x) == self.config.color);
        Ok(GameResult::Success(GameSuccess {
            color: self.config.color,
            map: image,
            embedding_verified,
            colors_verified,
            trace: self.trace.clone(),
        }))
    }

    /// After accepting x_n: continuation selection inside the tracked
    /// bundle's successors, agreement join against the star bundle, and the
    /// refinement invariant at the bound. None means this candidate cannot
    /// carry the bundle forward.
    #[allow(clippy::too_many_arguments)]
    fn continue_bundle(
        &mut self,
        frame_c: &[TypeDescriptor],
        frame_b: &[TypeDescriptor],
        star: Option<&Bundle>,
        star_pred: &[usize],
        x_n: usize,
        c_next: &[TypeDescriptor],
        caps: &RankCaps,
    ) -> Result<Option<Vec<TypeDescriptor>>> {
        let b_bundle = Bundle::new(frame_b.to_vec())?;
        let mut b_next = Vec::new();
        if let Some(star) = star {
            let c_bundle = Bundle::new(frame_c.to_vec())?;
            let continuation = match x_continuation(
                self.g,
                &c_bundle,
                &b_bundle,
                x_n,
                self.config.refinement_bound,
            ) {
                Ok(c) => c,
                Err(Error::Budget(_)) => return Ok(None),
                Err(e) => return Err(e),
            };
            let members = self.g.age().enumerate_up_to(self.config.rank_bound)?;
            for target in c_next {
                // The continuation member matching this windowed type.
                let sel = continuation.members().iter().find(|x| {
                    x.restrict(&target.sockel_set())
                        .map(|r| r.same_type(target))
                        .unwrap_or(false)
                });
                let Some(sel) = sel else { return Ok(None) };
                // Its star partner: same predecessor in the tracked bundle,
                // equal rank at the bound.
                let sel_pred = sel.restrict(&b_bundle.sockel_set())?;
                let pred_idx = frame_b
                    .iter()
                    .position(|b| b.same_type(&sel_pred))
                    .expect("continuation members restrict into the tracked bundle");
                let sel_vec = rank_vector(self.g.age(), sel.template(), &members, caps)?;
                let partner = star
                    .members()
                    .iter()
                    .enumerate()
                    .find(|(j, p)| {
                        star_pred[*j] == pred_idx
                            && rank_vector(self.g.age(), p.template(), &members, caps)
                                .map(|v| v == sel_vec)
                                .unwrap_or(false)
                    })
                    .map(|(_, p)| p.clone());
                let Some(partner) = partner else {
                    return Ok(None);
                };
                if !partner.in_free_position(self.g.snapshot(), sel)? {
                    return Ok(None);
                }
                let joined = partner.join(self.g, sel)?;
                b_next.push(joined);
            }
        } else {
            // Binary fast path: fibres are forced, successors meld.
            let _ = star_pred;
            let _ = caps;
            for target in c_next {
                let pred = target.restrict(&b_bundle.sockel_set().intersection(&target.sockel_set()).copied().collect())?;
                let pred_idx = frame_c
                    .iter()
                    .position(|c| c.same_type(&pred))
                    .expect("window covers predecessors");
                let b_member = &frame_b[pred_idx];
                let fibre: Vec<TypeDescriptor> =
                    x_successors_of_member(self.g, b_member, x_n)?
                        .into_iter()
                        .filter(|x| {
                            x.restrict(&target.sockel_set())
                                .map(|r| r.same_type(target))
                                .unwrap_or(false)
                        })
                        .collect();
                match fibre.into_iter().next() {
                    Some(m) => b_next.push(m),
                    None => return Ok(None),
                }
            }
        }
        // Step invariant: the new members restrict onto the windowed types
        // and the windowed refinement holds at the bound.
        let c_next_bundle = Bundle::new(c_next.to_vec())?;
        let b_probe: Vec<TypeDescriptor> = b_next.clone();
        let b_probe_bundle = match Bundle::new(b_probe) {
            Ok(b) => b,
            Err(_) => return Ok(None),
        };
        let outcome = is_refinement(
            self.g,
            &c_next_bundle,
            &b_probe_bundle,
            self.config.refinement_bound,
        )?;
        if !outcome.pass {
            return Ok(None);
        }
        Ok(Some(b_next))
    }
}

/// Run the game for one colour. Refuses ages the classifier marks
/// divisible or inconclusive.
pub fn monochromatic_construct(
    g: &mut GenericStructure,
    oracle: &ColoringOracle,
    config: GameConfig,
    confine: Option<TypeDescriptor>,
) -> Result<GameResult> {
    let caps = RankCaps::default();
    let verdict = classify(g.age(), 2, 4, &caps)?;
    match verdict.verdict {
        ClassifierVerdict::IndivisibleCertified { .. }
        | ClassifierVerdict::RankLinearEvidence { .. } => {}
        other => {
            return Err(Error::Precondition(format!(
                "game refused: classifier verdict {other:?}"
            )))
        }
    }
    let mut state = GameState {
        g,
        oracle,
        confine,
        trace: Vec::new(),
        advances_left: config.budgets.advance,
        backtracks_left: config.budgets.backtrack,
        config,
        census: Vec::new(),
        census_vectors: Vec::new(),
    };
    state.run(true)
}

/// Greedy two-colour dichotomy for the all-graphs age: try a red prefix
/// copy; on failure surface an unmet type over red with blue typeset and
/// build blue inside it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DichotomyOutcome {
    pub side: usize,
    pub map: Vec<usize>,
    pub embedding_verified: bool,
    pub colors_verified: bool,
    pub obstruction: Option<TypeFile>,
}

pub fn rado_dichotomy(
    g: &mut GenericStructure,
    oracle: &ColoringOracle,
    target_len: usize,
    budgets: Budgets,
) -> Result<DichotomyOutcome> {
    if !g.age().violation_monotone() || !g.age().signature().is_binary() {
        return Err(Error::Precondition(
            "dichotomy needs the age of all finite graphs".into(),
        ));
    }
    g.grow_to(target_len)?;
    if let Some(map) = greedy_colour(g, oracle, 0, target_len, &budgets, None)? {
        return Ok(finish_dichotomy(g, oracle, 0, map, None));
    }
    // Red failed: take the red class and surface a type with red sockel
    // whose realised typeset misses red.
    let red: BTreeSet<usize> = (0..g.size())
        .filter(|&e| oracle.color(e, g.records()) == 0)
        .collect();
    let unmet = g.verify_copy_prefix(&red, 1)?;
    let obstruction = unmet
        .iter()
        .find(|t| !t.realized(g.snapshot()).is_empty())
        .or_else(|| unmet.first())
        .cloned()
        .ok_or_else(|| Error::Budget("red run failed but no unmet type at bound 1".into()))?;
    let map = greedy_colour(g, oracle, 1, target_len, &budgets, Some(&obstruction))?
        .or({
            // The confinement may be too tight at desk scale; the blue run
            // without it still witnesses the dichotomy side.
            None
        });
    let map = match map {
        Some(m) => m,
        None => greedy_colour(g, oracle, 1, target_len, &budgets, None)?
            .ok_or_else(|| Error::Budget("both dichotomy sides exhausted".into()))?,
    };
    let obstruction_file = TypeFile {
        sockel: obstruction.sockel().to_vec(),
        template: StructureFile::from_structure(obstruction.template()),
    };
    Ok(finish_dichotomy(g, oracle, 1, map, Some(obstruction_file)))
}

fn finish_dichotomy(
    g: &GenericStructure,
    oracle: &ColoringOracle,
    side: usize,
    map: Vec<usize>,
    obstruction: Option<TypeFile>,
) -> DichotomyOutcome {
    let prefix: Vec<usize> = (0..map.len()).collect();
    let prefix_set: BTreeSet<usize> = prefix.iter().copied().collect();
    let image_set: BTreeSet<usize> = map.iter().copied().collect();
    let (src, src_order) = g.snapshot().induced(&prefix_set).expect("in range");
    let (dst, dst_order) = g.snapshot().induced(&image_set).expect("in range");
    let map_vec: Vec<usize> = src_order
        .iter()
        .map(|&u| dst_order.iter().position(|&d| d == map[u]).unwrap())
        .collect();
    let embedding_verified = verify_morphism(&src, &dst, &map_vec, crate::search::MorphKind::Iso);
    let colors_verified = map
        .iter()
        .all(|&x| oracle.color(x, g.records()) == side);
    DichotomyOutcome {
        side,
        map,
        embedding_verified,
        colors_verified,
        obstruction,
    }
}

/// Greedy monochromatic prefix embedding: pick any same-coloured element of
/// the step type's typeset (confined if asked), realising fresh candidates
/// as needed. Sound for single-rank ages where every typeset is full.
fn greedy_colour(
    g: &mut GenericStructure,
    oracle: &ColoringOracle,
    color: usize,
    target_len: usize,
    budgets: &Budgets,
    confine: Option<&TypeDescriptor>,
) -> Result<Option<Vec<usize>>> {
    let prefix: Vec<usize> = (0..target_len).collect();
    let mut image: Vec<usize> = Vec::new();
    for n in 0..target_len {
        let t_n = relabelled_type(g, &prefix[..n], &image, prefix[n])?;
        let used: BTreeSet<usize> = image.iter().copied().collect();
        let mut chosen: Option<usize> = None;
        for y in 0..g.size() {
            if used.contains(&y) || !t_n.contains(g.snapshot(), y) {
                continue;
            }
            if let Some(c) = confine {
                if !c.contains(g.snapshot(), y) {
                    continue;
                }
            }
            if oracle.color(y, g.records()) == color {
                chosen = Some(y);
                break;
            }
        }
        if chosen.is_none() {
            for variant in 0..budgets.retry {
                let fresh = realize_typeset_member_variant(g, &t_n, confine, variant)?;
                let Some(y) = fresh else { break };
                if oracle.color(y, g.records()) == color {
                    chosen = Some(y);
                    break;
                }
            }
        }
        match chosen {
            Some(y) => image.push(y),
            None => return Ok(None),
        }
    }
    Ok(Some(image))
}

/// Weak indivisibility: given that `missing` never embeds into the colour-c
/// class, the other colour carries a verified prefix copy. The assumption
/// is audited before and after the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum WeakRunOutcome {
    Success {
        color: usize,
        map: Vec<usize>,
        embedding_verified: bool,
        colors_verified: bool,
        audit_held: bool,
    },
    AuditFailure {
        color_missing: usize,
    },
    Inconclusive {
        reason: String,
    },
}

pub fn weak_indivisibility_run(
    g: &mut GenericStructure,
    oracle: &ColoringOracle,
    missing: &FinStructure,
    color_missing: usize,
    target_len: usize,
    budgets: Budgets,
) -> Result<WeakRunOutcome> {
    let audit = |g: &GenericStructure| -> Result<bool> {
        let class: BTreeSet<usize> = (0..g.size())
            .filter(|&e| oracle.color(e, g.records()) == color_missing)
            .collect();
        let (sub, _) = g.snapshot().induced(&class)?;
        Ok(!crate::age::embeds(missing, &sub))
    };
    if !audit(g)? {
        return Err(Error::Precondition(
            "audit failed before the run: the missing structure already embeds".into(),
        ));
    }
    let other = 1 - color_missing % 2;
    let mut config = GameConfig::new(other, target_len);
    config.budgets = budgets;
    let result = monochromatic_construct(g, oracle, config, None)?;
    let audit_held = audit(g)?;
    match result {
        GameResult::Success(s) => Ok(WeakRunOutcome::Success {
            color: s.color,
            map: s.map,
            embedding_verified: s.embedding_verified,
            colors_verified: s.colors_verified,
            audit_held,
        }),
        _ if !audit_held => Ok(WeakRunOutcome::AuditFailure { color_missing }),
        GameResult::Obstructed { .. } => Ok(WeakRunOutcome::Inconclusive {
            reason: "construction obstructed while the audit held".into(),
        }),
        GameResult::Inconclusive { reason, .. } => Ok(WeakRunOutcome::Inconclusive { reason }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::AgeHandle;
    use crate::generic::GrowthMode;
    use crate::oracle::OracleRule;

    fn rado(seed: u64) -> GenericStructure {
        GenericStructure::new(AgeHandle::all_graphs(), seed, GrowthMode::Dovetail).unwrap()
    }

    #[test]
    fn all_one_oracle_trivial_success() {
        let mut g = rado(1);
        let oracle = ColoringOracle::new(OracleRule::AllOne { color: 0 }, 2, 0);
        let config = GameConfig::new(0, 12);
        let result = monochromatic_construct(&mut g, &oracle, config, None).unwrap();
        match result {
            GameResult::Success(s) => {
                assert!(s.embedding_verified);
                assert!(s.colors_verified);
                assert_eq!(s.map.len(), 12);
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn parity_oracle_rado_success() {
        let mut g = rado(2);
        let oracle = ColoringOracle::new(OracleRule::CreationParity, 2, 0);
        let config = GameConfig::new(1, 10);
        let result = monochromatic_construct(&mut g, &oracle, config, None).unwrap();
        assert!(result.succeeded(), "{result:?}");
    }

    #[test]
    fn k3_free_parity_success_or_counter() {
        let age = AgeHandle::kn_free(3);
        let mut g = GenericStructure::new(age, 3, GrowthMode::Dovetail).unwrap();
        let oracle = ColoringOracle::new(OracleRule::CreationParity, 2, 0);
        let config = GameConfig::new(0, 8);
        let result = monochromatic_construct(&mut g, &oracle, config, None).unwrap();
        assert!(result.resolved(), "{result:?}");
    }

    #[test]
    fn divisible_age_is_refused() {
        let age = AgeHandle::unbounded(crate::structure::Signature::unary());
        let mut g = GenericStructure::new(age, 4, GrowthMode::Dovetail).unwrap();
        let oracle = ColoringOracle::new(OracleRule::AllOne { color: 0 }, 2, 0);
        let config = GameConfig::new(0, 5);
        assert!(monochromatic_construct(&mut g, &oracle, config, None).is_err());
    }

    #[test]
    fn dichotomy_all_red() {
        let mut g = rado(5);
        let oracle = ColoringOracle::new(OracleRule::AllOne { color: 0 }, 2, 0);
        let out = rado_dichotomy(&mut g, &oracle, 12, Budgets::default()).unwrap();
        assert_eq!(out.side, 0);
        assert!(out.embedding_verified && out.colors_verified);
    }

    #[test]
    fn dichotomy_red_first_three() {
        let mut g = rado(6);
        let oracle = ColoringOracle::new(
            OracleRule::Scripted {
                colors: vec![0, 0, 0],
                default: 1,
            },
            2,
            0,
        );
        let out = rado_dichotomy(&mut g, &oracle, 10, Budgets::default()).unwrap();
        assert_eq!(out.side, 1);
        assert!(out.embedding_verified && out.colors_verified);
        assert!(out.obstruction.is_some());
    }

    #[test]
    fn dichotomy_parity() {
        let mut g = rado(7);
        let oracle = ColoringOracle::new(OracleRule::CreationParity, 2, 0);
        let out = rado_dichotomy(&mut g, &oracle, 10, Budgets::default()).unwrap();
        assert!(out.embedding_verified && out.colors_verified);
    }

    #[test]
    fn weak_run_edge_free_red() {
        let mut g = rado(8);
        let oracle = ColoringOracle::new(OracleRule::EdgeFreeRed, 2, 0);
        let missing = crate::structure::fixtures::path_graph(2);
        let out =
            weak_indivisibility_run(&mut g, &oracle, &missing, 0, 10, Budgets::default())
                .unwrap();
        match out {
            WeakRunOutcome::Success {
                embedding_verified,
                colors_verified,
                audit_held,
                color,
                ..
            } => {
                assert!(embedding_verified && colors_verified && audit_held);
                assert_eq!(color, 1);
            }
            other => panic!("expected success, got {other:?}"),
        }
    }

    #[test]
    fn weak_run_all_blue_vertex() {
        let mut g = rado(9);
        let oracle = ColoringOracle::new(OracleRule::AllOne { color: 1 }, 2, 0);
        let missing = FinStructure::empty(crate::structure::Signature::graph(), 1);
        let out =
            weak_indivisibility_run(&mut g, &oracle, &missing, 0, 8, Budgets::default()).unwrap();
        assert!(matches!(out, WeakRunOutcome::Success { .. }));
    }

    #[test]
    fn stubborn_adversary_triggers_counter_run() {
        // All-red against a blue target: no candidate ever wins, the
        // obstruction report carries the starved typeset, and the
        // counter-run builds the red side instead.
        let mut g = rado(20);
        let oracle = ColoringOracle::new(OracleRule::AllOne { color: 0 }, 2, 0);
        let config = GameConfig::new(1, 8);
        let result = monochromatic_construct(&mut g, &oracle, config, None).unwrap();
        match result {
            GameResult::Obstructed {
                report, counter, ..
            } => {
                assert_eq!(report.step, 0);
                match counter.as_deref() {
                    Some(GameResult::Success(s)) => {
                        assert_eq!(s.color, 0);
                        assert!(s.embedding_verified && s.colors_verified);
                        assert_eq!(s.map.len(), 8);
                    }
                    other => panic!("counter-run should win red: {other:?}"),
                }
            }
            other => panic!("expected an obstruction: {other:?}"),
        }
    }

    #[test]
    fn replays_are_identical() {
        let run = |seed: u64| -> Vec<usize> {
            let mut g = rado(seed);
            let oracle = ColoringOracle::new(OracleRule::CreationParity, 2, 01);
            let config = GameConfig::new(0, 8);
            match monochromatic_construct(&mut g, &oracle, config, None).unwrap() {
                GameResult::Success(s) => s.map,
                other => panic!("{other:?}"),
            }
        };
        assert_eq!(run(11), run(11));
    }
}

#[cfg(test)]
mod hypergraph_tests {
    use super::*;
    use crate::age::{AgeHandle, BoundarySpec};
    use crate::generic::GrowthMode;
    use crate::oracle::OracleRule;

    #[test]
    fn three_uniform_game_runs_with_star_machinery() {
        // Single-rank 3-uniform age: the non-binary path builds stars and
        // joins rather than the binary shortcut.
        let spec = BoundarySpec::explicit(vec![
            crate::structure::fixtures::complete_k_uniform(3, 4),
        ])
        .unwrap();
        let age = AgeHandle::new(spec).unwrap();
        let mut g = GenericStructure::new(age, 21, GrowthMode::Dovetail).unwrap();
        let oracle = ColoringOracle::new(OracleRule::CreationParity, 2, 0);
        let mut config = GameConfig::new(0, 7);
        config.rank_bound = 3;
        let result = monochromatic_construct(&mut g, &oracle, config, None).unwrap();
        assert!(result.resolved(), "{result:?}");
    }
}
