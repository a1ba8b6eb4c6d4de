//! Bundles of same-sockel types and the machinery that grows them:
//! x-successor bundles, conform assignments, melding probes, refinements,
//! star successors, agreement joins, and x-continuations.
//!
//! Every melding or refinement verdict here is a bound-stamped probe: the
//! limit statements quantify over all finite sets, the probes fix a fragment
//! bound and a realised-element window and say so in their outcome.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::generic::{ElementFilter, FixingQuery, GenericStructure};
use crate::structure::{combinations, FinStructure};
use crate::types::{rank_compare, types_over, RankCaps, RankHandle, TypeDescriptor};

/// A finite set of pairwise-unequal types sharing a sockel.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bundle {
    sockel: Vec<usize>,
    members: Vec<TypeDescriptor>,
}

impl Bundle {
    pub fn new(members: Vec<TypeDescriptor>) -> Result<Self> {
        let sockel = members
            .first()
            .map(|t| t.sockel().to_vec())
            .ok_or_else(|| Error::Precondition("bundle needs at least one member".into()))?;
        for t in &members {
            if t.sockel() != sockel {
                return Err(Error::Precondition("bundle members must share the sockel".into()));
            }
        }
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                if a.same_type(b) {
                    return Err(Error::Precondition("bundle members must be distinct".into()));
                }
            }
        }
        Ok(Bundle { sockel, members })
    }

    /// All types over the given sockel.
    pub fn all_over(g: &GenericStructure, sockel: &BTreeSet<usize>) -> Result<Self> {
        Bundle::new(types_over(g, sockel)?)
    }

    pub fn sockel(&self) -> &[usize] {
        &self.sockel
    }

    pub fn sockel_set(&self) -> BTreeSet<usize> {
        self.sockel.iter().copied().collect()
    }

    pub fn members(&self) -> &[TypeDescriptor] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Union of realised member typesets, ascending.
    pub fn realized(&self, snap: &FinStructure) -> Vec<usize> {
        (0..snap.size())
            .filter(|&y| self.members.iter().any(|t| t.contains(snap, y)))
            .collect()
    }

    /// The unique member realised by y, if any (typesets are disjoint).
    pub fn member_of(&self, snap: &FinStructure, y: usize) -> Option<usize> {
        self.members.iter().position(|t| t.contains(snap, y))
    }

    /// Whether this bundle is a successor of `c`: sockel containment and
    /// every member restricts into `c`.
    pub fn is_successor_of(&self, c: &Bundle) -> bool {
        let c_set = c.sockel_set();
        if !c_set.iter().all(|s| self.sockel.contains(s)) {
            return false;
        }
        self.members.iter().all(|m| {
            m.restrict(&c_set)
                .map(|r| c.members.iter().any(|cm| cm.same_type(&r)))
                .unwrap_or(false)
        })
    }

    /// Index of the predecessor in `c` of each member, when `self` is a
    /// successor of `c`.
    pub fn predecessor_map(&self, c: &Bundle) -> Result<Vec<usize>> {
        let c_set = c.sockel_set();
        self.members
            .iter()
            .map(|m| {
                let r = m.restrict(&c_set)?;
                c.members
                    .iter()
                    .position(|cm| cm.same_type(&r))
                    .ok_or_else(|| {
                        Error::Precondition("member has no predecessor in the base bundle".into())
                    })
            })
            .collect()
    }
}

/// All {x}-successor types of `t`: templates extend `t` by the element x;
/// only tuples containing both the slot and x are free.
pub fn x_successors_of_member(
    g: &GenericStructure,
    t: &TypeDescriptor,
    x: usize,
) -> Result<Vec<TypeDescriptor>> {
    if t.sockel().contains(&x) {
        return Err(Error::Precondition("x already lies in the sockel".into()));
    }
    let mut sockel: Vec<usize> = t.sockel().to_vec();
    sockel.push(x);
    sockel.sort_unstable();
    let set: BTreeSet<usize> = sockel.iter().copied().collect();
    let (base, order) = g.snapshot().induced(&set)?;
    let star = sockel.len();
    let x_pos = order.iter().position(|&o| o == x).unwrap();
    // Fixed part: snapshot on the sockel plus t's slot relations.
    let mut fixed = FinStructure::empty(base.signature().clone(), star + 1);
    for inst in base.instances() {
        fixed.insert(inst.rel, inst.tuple.clone())?;
    }
    let old_star = t.template().size() - 1;
    for inst in t.template().instances() {
        if inst.tuple.contains(&old_star) {
            let tuple: Vec<usize> = inst
                .tuple
                .iter()
                .map(|&e| {
                    if e == old_star {
                        star
                    } else {
                        let elem = t.sockel()[e];
                        order.iter().position(|&o| o == elem).unwrap()
                    }
                })
                .collect();
            fixed.insert(inst.rel, tuple)?;
        }
    }
    // Free part: tuples containing both the slot and x.
    let candidates: Vec<(usize, Vec<usize>)> =
        crate::age::candidate_tuples_with(base.signature(), star + 1, star)
            .into_iter()
            .filter(|(_, tuple)| tuple.contains(&x_pos))
            .collect();
    let mut out = Vec::new();
    for mask in 0u64..(1 << candidates.len()) {
        let mut template = fixed.clone();
        for (i, (rel, tuple)) in candidates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                template.insert(*rel, tuple.clone())?;
            }
        }
        if g.age().contains(&template)? {
            out.push(TypeDescriptor::from_parts(sockel.clone(), template));
        }
    }
    Ok(out)
}

/// The x-successor of a bundle: all {x}-successors of all members.
pub fn x_successor_bundle(g: &GenericStructure, b: &Bundle, x: usize) -> Result<Bundle> {
    if b.member_of(g.snapshot(), x).is_none() {
        return Err(Error::Precondition(
            "x must realise some member of the bundle".into(),
        ));
    }
    let mut members = Vec::new();
    for t in b.members() {
        members.extend(x_successors_of_member(g, t, x)?);
    }
    Bundle::new(members)
}

/// A conform assignment: a finite fragment of the base bundle's typeset
/// mapped to successor members, respecting predecessor typesets and ranks.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConformAssignment {
    pub domain: Vec<usize>,
    /// Per domain element, the index of the assigned successor member.
    pub assigned: Vec<usize>,
}

/// Outcome of a bound-stamped probe.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum ProbeOutcome {
    Pass {
        checked: usize,
        fragment_bound: usize,
    },
    Counterexample {
        assignment: ConformAssignment,
        fragment_bound: usize,
    },
}

impl ProbeOutcome {
    pub fn passed(&self) -> bool {
        matches!(self, ProbeOutcome::Pass { .. })
    }
}

/// Probe the melding property of successor bundle `b` over `c`: every
/// conform assignment of a fragment (≤ fragment_bound, drawn from a window
/// of realised typeset elements) must move into the assigned typesets while
/// fixing ι(c). At most `trials` assignments are tested.
pub fn melding_probe(
    g: &mut GenericStructure,
    c: &Bundle,
    b: &Bundle,
    fragment_bound: usize,
    trials: usize,
) -> Result<ProbeOutcome> {
    if !b.is_successor_of(c) {
        return Err(Error::Precondition("probe needs a successor bundle".into()));
    }
    let pred = b.predecessor_map(c)?;
    let ranks: Vec<RankHandle> = b
        .members()
        .iter()
        .map(|m| RankHandle::new(m.template().clone()))
        .collect();
    let b_sockel = b.sockel_set();
    let pool: Vec<usize> = c
        .realized(g.snapshot())
        .into_iter()
        .filter(|e| !b_sockel.contains(e))
        .take(8)
        .collect();
    let mut tested = 0usize;
    for size in 1..=fragment_bound.min(pool.len()) {
        for domain in combinations(&pool, size) {
            // All assignments consistent with predecessor typesets.
            let feasible: Vec<Vec<usize>> = domain
                .iter()
                .map(|&a| {
                    (0..b.len())
                        .filter(|&j| {
                            let p = &c.members()[pred[j]];
                            p.contains(g.snapshot(), a)
                        })
                        .collect()
                })
                .collect();
            let mut idx = vec![0usize; domain.len()];
            'assign: loop {
                if idx.iter().zip(&feasible).any(|(&i, f)| i >= f.len()) {
                    break 'assign;
                }
                let assigned: Vec<usize> =
                    idx.iter().zip(&feasible).map(|(&i, f)| f[i]).collect();
                // Rank condition per member fibre.
                let mut rank_ok = true;
                for j in 0..b.len() {
                    let fibre: BTreeSet<usize> = domain
                        .iter()
                        .zip(&assigned)
                        .filter(|(_, &aj)| aj == j)
                        .map(|(&a, _)| a)
                        .collect();
                    if fibre.is_empty() {
                        continue;
                    }
                    let (sub, _) = g.snapshot().induced(&fibre)?;
                    if !ranks[j].contains(g.age(), &sub)? {
                        rank_ok = false;
                        break;
                    }
                }
                if rank_ok {
                    tested += 1;
                    if tested > trials {
                        return Ok(ProbeOutcome::Pass {
                            checked: tested - 1,
                            fragment_bound,
                        });
                    }
                    let mut q = FixingQuery::new(c.sockel().to_vec(), domain.clone());
                    for (&a, &j) in domain.iter().zip(&assigned) {
                        q.filters
                            .insert(a, ElementFilter::Typeset(b.members()[j].clone()));
                    }
                    if g.exists_fixing(&q, true)?.is_none() {
                        return Ok(ProbeOutcome::Counterexample {
                            assignment: ConformAssignment { domain, assigned },
                            fragment_bound,
                        });
                    }
                }
                // Advance the assignment counter.
                let mut k = 0;
                loop {
                    if k == idx.len() {
                        break 'assign;
                    }
                    idx[k] += 1;
                    if idx[k] < feasible[k].len() {
                        break;
                    }
                    idx[k] = 0;
                    k += 1;
                }
            }
        }
    }
    Ok(ProbeOutcome::Pass {
        checked: tested,
        fragment_bound,
    })
}

/// Refinement check at a bound: successor, fragment placement into the
/// successor's typesets fixing ι(c), and bijectivity of the restriction map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RefinementOutcome {
    pub pass: bool,
    pub reason: Option<String>,
    pub checked_fragments: usize,
    pub bound: usize,
}

pub fn is_refinement(
    g: &mut GenericStructure,
    c: &Bundle,
    b: &Bundle,
    bound: usize,
) -> Result<RefinementOutcome> {
    if !b.is_successor_of(c) {
        return Ok(RefinementOutcome {
            pass: false,
            reason: Some("not a successor bundle".into()),
            checked_fragments: 0,
            bound,
        });
    }
    let pred = b.predecessor_map(c)?;
    // Bijection: each base member has exactly one successor.
    let mut seen = vec![0usize; c.len()];
    for &p in &pred {
        seen[p] += 1;
    }
    if seen.iter().any(|&n| n != 1) {
        return Ok(RefinementOutcome {
            pass: false,
            reason: Some("restriction map is not a bijection".into()),
            checked_fragments: 0,
            bound,
        });
    }
    let successor_of: BTreeMap<usize, usize> =
        pred.iter().enumerate().map(|(j, &p)| (p, j)).collect();
    let b_sockel = b.sockel_set();
    let pool: Vec<usize> = c
        .realized(g.snapshot())
        .into_iter()
        .filter(|e| !b_sockel.contains(e))
        .take(8)
        .collect();
    let mut checked = 0usize;
    for size in 1..=bound.min(pool.len()) {
        for domain in combinations(&pool, size) {
            let mut q = FixingQuery::new(c.sockel().to_vec(), domain.clone());
            for &a in &domain {
                let p = c
                    .member_of(g.snapshot(), a)
                    .expect("pool elements realise a member");
                let j = successor_of[&p];
                q.filters
                    .insert(a, ElementFilter::Typeset(b.members()[j].clone()));
            }
            checked += 1;
            if g.exists_fixing(&q, true)?.is_none() {
                return Ok(RefinementOutcome {
                    pass: false,
                    reason: Some(format!("fragment {domain:?} cannot be placed")),
                    checked_fragments: checked,
                    bound,
                });
            }
        }
    }
    Ok(RefinementOutcome {
        pass: true,
        reason: None,
        checked_fragments: checked,
        bound,
    })
}

/// Construction plan of a star successor: the member order and the star set
/// consumed by each member.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StarSuccessorPlan {
    /// Member indices in ascending star order.
    pub order: Vec<usize>,
    /// Star set per member (same indexing as the bundle members).
    pub star: Vec<Vec<usize>>,
    /// Predecessor index in the base bundle per member.
    pub predecessor: Vec<usize>,
}

/// Build a star successor of `c` realising the requested rank targets
/// (abstract one-point templates): per base member, one restriction member
/// per target — a free extension summed with a freshly realised copy of the
/// target — plus a free successor for targetless members.
pub fn build_star_successor(
    g: &mut GenericStructure,
    c: &Bundle,
    targets: &[Vec<FinStructure>],
    bound: usize,
) -> Result<(Bundle, StarSuccessorPlan)> {
    if targets.len() != c.len() {
        return Err(Error::Precondition(
            "one target list per base member required".into(),
        ));
    }
    let caps = RankCaps::default();
    // (member, star set, predecessor index), in construction order.
    let mut built: Vec<(TypeDescriptor, Vec<usize>, usize)> = Vec::new();
    let mut e_total: BTreeSet<usize> = BTreeSet::new();
    for (i, member_targets) in targets.iter().enumerate() {
        for target in member_targets {
            let d_prime = if e_total.is_empty() {
                c.members()[i].clone()
            } else {
                c.members()[i].free_successor(g, &e_total)?
            };
            let cmp = rank_compare(g.age(), target, d_prime.template(), bound, &caps)?;
            if !cmp.leq {
                return Err(Error::Precondition(
                    "target rank is not below the member's rank at the bound".into(),
                ));
            }
            let r = if target.size() == 1 {
                let rep = TypeDescriptor::from_parts(vec![], target.clone());
                d_prime.sum(g, &rep)?
            } else {
                let rep = crate::types::materialize_free_type(g, target)?;
                d_prime.sum(g, &rep)?
            };
            let f_new: Vec<usize> = r
                .sockel()
                .iter()
                .copied()
                .filter(|s| !d_prime.sockel().contains(s))
                .collect();
            let f_set: BTreeSet<usize> = f_new.iter().copied().collect();
            // Extend everything built so far by the fresh star set.
            if !f_set.is_empty() {
                for (m, _, _) in built.iter_mut() {
                    *m = m.free_successor(g, &f_set)?;
                }
            }
            built.push((r, f_new.clone(), i));
            e_total.extend(f_new);
        }
    }
    // Targetless members become free successors, star-less and last.
    for (i, member_targets) in targets.iter().enumerate() {
        if member_targets.is_empty() {
            let m = if e_total.is_empty() {
                c.members()[i].clone()
            } else {
                c.members()[i].free_successor(g, &e_total)?
            };
            built.push((m, Vec::new(), i));
        }
    }
    let members: Vec<TypeDescriptor> = built.iter().map(|(m, _, _)| m.clone()).collect();
    let plan = StarSuccessorPlan {
        order: (0..built.len()).collect(),
        star: built.iter().map(|(_, s, _)| s.clone()).collect(),
        predecessor: built.iter().map(|(_, _, p)| *p).collect(),
    };
    Ok((Bundle::new(members)?, plan))
}

/// Join each successor-bundle member with its agreed partner: member j of
/// `c_up` joins `b.members()[beta[j]]`. Partners must share the predecessor
/// over ι(c), have equal ranks at the bound, and be in free position.
pub fn agreement_join(
    g: &GenericStructure,
    b: &Bundle,
    c_up: &Bundle,
    c_sockel: &BTreeSet<usize>,
    beta: &[usize],
    bound: usize,
) -> Result<Bundle> {
    if beta.len() != c_up.len() {
        return Err(Error::Precondition("one partner per member required".into()));
    }
    let caps = RankCaps::default();
    let mut joined = Vec::new();
    for (j, d) in c_up.members().iter().enumerate() {
        let partner = b
            .members()
            .get(beta[j])
            .ok_or_else(|| Error::Precondition("partner index out of range".into()))?;
        let d_pred = d.restrict(c_sockel)?;
        let p_pred = partner.restrict(c_sockel)?;
        if !d_pred.same_type(&p_pred) {
            return Err(Error::Precondition(
                "agreement partners disagree below the base sockel".into(),
            ));
        }
        let cmp = rank_compare(g.age(), d.template(), partner.template(), bound, &caps)?;
        if !(cmp.leq && cmp.geq) {
            return Err(Error::Precondition(
                "agreement partners have different ranks at the bound".into(),
            ));
        }
        joined.push(partner.join(g, d)?);
    }
    Bundle::new(joined)
}

/// Select one type out of each fibre of b's z-successors over the members of
/// c_prime's z-successor bundle, so that the selection refines it at the
/// bound. Selections are searched in lexicographic order; the agreed rank
/// sets are verified per base member.
pub fn x_continuation(
    g: &mut GenericStructure,
    c_prime: &Bundle,
    b: &Bundle,
    z: usize,
    bound: usize,
) -> Result<Bundle> {
    if !b.is_successor_of(c_prime) {
        return Err(Error::Precondition(
            "continuation needs a successor bundle".into(),
        ));
    }
    let pred = b.predecessor_map(c_prime)?;
    let successor_of: BTreeMap<usize, usize> =
        pred.iter().enumerate().map(|(j, &p)| (p, j)).collect();
    let c_up = x_successor_bundle(g, c_prime, z)?;
    let mut c_up_sockel: BTreeSet<usize> = c_prime.sockel_set();
    c_up_sockel.insert(z);
    // Fibre per c_up member: z-successors of the matching b member that
    // restrict to it.
    let mut fibres: Vec<Vec<TypeDescriptor>> = Vec::new();
    for y in c_up.members() {
        let y_pred = y.restrict(&c_prime.sockel_set())?;
        let p = c_prime
            .members()
            .iter()
            .position(|cm| cm.same_type(&y_pred))
            .expect("member restricts into its own bundle");
        let b_member = &b.members()[successor_of[&p]];
        let fibre: Vec<TypeDescriptor> = x_successors_of_member(g, b_member, z)?
            .into_iter()
            .filter(|x| {
                x.restrict(&c_up_sockel)
                    .map(|r| r.same_type(y))
                    .unwrap_or(false)
            })
            .collect();
        if fibre.is_empty() {
            return Err(Error::Budget(format!(
                "empty continuation fibre over member with sockel {:?}",
                y.sockel()
            )));
        }
        fibres.push(fibre);
    }
    let caps = RankCaps::default();
    // Rank sets of the z-successor bundle per base member, for the agreed
    // rank statement.
    let mut idx = vec![0usize; fibres.len()];
    loop {
        let selection: Vec<TypeDescriptor> = idx
            .iter()
            .zip(&fibres)
            .map(|(&i, f)| f[i].clone())
            .collect();
        let candidate = Bundle::new(selection)?;
        let mut ok = rank_sets_agree(g, c_prime, &c_up, &candidate, bound, &caps)?;
        if ok {
            let outcome = is_refinement(g, &c_up, &candidate, bound)?;
            ok = outcome.pass;
        }
        if ok {
            return Ok(candidate);
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                return Err(Error::Budget(
                    "all continuation selections failed at the bound".into(),
                ));
            }
            idx[k] += 1;
            if idx[k] < fibres[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// For every base member C: the set of rank vectors over C's z-successors
/// equals the set over the selected continuation members descending from C.
fn rank_sets_agree(
    g: &GenericStructure,
    c_prime: &Bundle,
    c_up: &Bundle,
    candidate: &Bundle,
    bound: usize,
    caps: &RankCaps,
) -> Result<bool> {
    let members = g.age().enumerate_up_to(bound)?;
    let c_set = c_prime.sockel_set();
    for cm in c_prime.members() {
        let mut up_vectors: BTreeSet<Vec<bool>> = BTreeSet::new();
        for y in c_up.members() {
            if y.restrict(&c_set)?.same_type(cm) {
                up_vectors.insert(crate::types::rank_vector(
                    g.age(),
                    y.template(),
                    &members,
                    caps,
                )?);
            }
        }
        let mut sel_vectors: BTreeSet<Vec<bool>> = BTreeSet::new();
        for x in candidate.members() {
            if x.restrict(&c_set)?.same_type(cm) {
                sel_vectors.insert(crate::types::rank_vector(
                    g.age(),
                    x.template(),
                    &members,
                    caps,
                )?);
            }
        }
        if up_vectors != sel_vectors {
            return Ok(false);
        }
    }
    Ok(true)
}


#[cfg(test)]
mod melding_counterexample_tests {
    use super::*;
    use crate::age::{AgeHandle, BoundarySpec};
    use crate::generic::{ExtensionRequest, GenericStructure, GrowthMode};
    use crate::structure::{FinStructure, Mode, RelSymbol, Signature};
    use crate::types::{rank_contains, RankCaps};
    use std::sync::Arc;

    /// Graph edges plus blue and red 3-uniform hyperedges. Forbidden: a
    /// graph edge inside a blue edge, a blue and a red edge on the same
    /// vertex set, and the 4-vertex pattern of two blue edges over a common
    /// pair whose other endpoints form a graph edge — unless that pattern
    /// carries both red repairs, which the induced-substructure reading of
    /// the boundary grants automatically.
    fn mixed_sig() -> Arc<Signature> {
        Signature::new(vec![
            RelSymbol {
                name: "E".into(),
                arity: 2,
                mode: Mode::Set,
            },
            RelSymbol {
                name: "Bl".into(),
                arity: 3,
                mode: Mode::Set,
            },
            RelSymbol {
                name: "Rd".into(),
                arity: 3,
                mode: Mode::Set,
            },
        ])
        .unwrap()
    }

    fn mixed_age() -> Arc<AgeHandle> {
        let sig = mixed_sig();
        // Graph edge inside a blue edge.
        let mut edge_in_blue = FinStructure::empty(sig.clone(), 3);
        edge_in_blue.insert(1, vec![0, 1, 2]).unwrap();
        edge_in_blue.insert(0, vec![0, 1]).unwrap();
        // Blue and red on the same vertices.
        let mut blue_eq_red = FinStructure::empty(sig.clone(), 3);
        blue_eq_red.insert(1, vec![0, 1, 2]).unwrap();
        blue_eq_red.insert(2, vec![0, 1, 2]).unwrap();
        // Two blue edges over {0,1} with a graph edge {2,3}, no repairs.
        let mut m = FinStructure::empty(sig.clone(), 4);
        m.insert(1, vec![0, 1, 2]).unwrap();
        m.insert(1, vec![0, 1, 3]).unwrap();
        m.insert(0, vec![2, 3]).unwrap();
        AgeHandle::new(BoundarySpec::explicit(vec![edge_in_blue, blue_eq_red, m]).unwrap())
            .unwrap()
    }

    #[test]
    fn blue_type_successor_is_not_melding() {
        let age = mixed_age();
        assert!(age.free_amalgamation());
        let mut g = GenericStructure::new(age.clone(), 1, GrowthMode::Dovetail).unwrap();
        // Two free elements a, b and a blue-attached slot over them.
        let two = FinStructure::empty(g.snapshot().signature().clone(), 2);
        let ab = g
            .realize_extension(&ExtensionRequest {
                a: two,
                anchored: vec![],
            })
            .unwrap();
        let (a, b) = (ab[0], ab[1]);
        // Base bundle: the relation-free type over {b}.
        let base_type = TypeDescriptor::new(
            &g,
            vec![b],
            FinStructure::empty(g.snapshot().signature().clone(), 2),
        )
        .unwrap();
        let c = Bundle::new(vec![base_type]).unwrap();
        // Successor: the blue-edge type over {a, b}.
        let mut blue_template = FinStructure::empty(g.snapshot().signature().clone(), 3);
        blue_template.insert(1, vec![0, 1, 2]).unwrap();
        let blue_type = TypeDescriptor::new(&g, vec![a, b], blue_template).unwrap();
        let bundle = Bundle::new(vec![blue_type.clone()]).unwrap();
        assert!(bundle.is_successor_of(&c));

        // A graph edge does lie in the successor's rank: the witness needs
        // the two red repairs on mixed tuples, which the search finds.
        let mut e = FinStructure::empty(g.snapshot().signature().clone(), 2);
        e.insert(0, vec![0, 1]).unwrap();
        assert!(rank_contains(&age, blue_type.template(), &e, &RankCaps::default()).unwrap());

        // Realise a graph edge inside the base typeset, free of a and b.
        let mut edge = FinStructure::empty(g.snapshot().signature().clone(), 2);
        edge.insert(0, vec![0, 1]).unwrap();
        let uv = g
            .realize_extension(&ExtensionRequest {
                a: edge,
                anchored: vec![],
            })
            .unwrap();
        let (u, v) = (uv[0], uv[1]);
        assert!(c.members()[0].contains(g.snapshot(), u));
        assert!(c.members()[0].contains(g.snapshot(), v));

        // The edge fragment cannot move into the blue typeset while fixing
        // b: the image would need red repairs through b that the moved
        // fragment forbids.
        let outcome = melding_probe(&mut g, &c, &bundle, 2, 60).unwrap();
        match outcome {
            ProbeOutcome::Counterexample { assignment, .. } => {
                assert_eq!(assignment.domain.len(), 2, "the obstruction is the edge pair");
            }
            other => panic!("expected a counterexample, got {other:?}"),
        }
    }
}
