//! The lazily generated homogeneous structure: an append-only snapshot of
//! the countable limit, grown by a fair demand scheduler, with an
//! extension-property service and a stabiliser-style search oracle.
//!
//! Elements never change or disappear; creation order defines identity.
//! Every realisation attaches new elements by free amalgamation over their
//! anchor, which keeps the snapshot inside the age whenever the age has free
//! amalgamation.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::age::AgeHandle;
use crate::error::{Error, Result};
use crate::search::{search_morphisms, verify_morphism, MorphKind, SearchOpts};
use crate::structure::{FinStructure, Instance};
use crate::types::{extension_matches, TypeDescriptor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GrowthMode {
    /// Realise every demand freely, in a dovetailed enumeration of
    /// (sockel, template) pairs. The normative mode.
    Dovetail,
    /// Attach per template to the anchor, then sample extra relations to
    /// older elements uniformly, rejecting anything outside the age.
    Random,
}

/// What an element looked like at the moment it was created: its anchor and
/// the instances connecting it to older elements. Colouring adversaries see
/// exactly this.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AttachmentRecord {
    pub element: usize,
    pub anchor: Vec<usize>,
    pub instances: Vec<Instance>,
    pub demand_id: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct Demand {
    pub id: u64,
    pub anchor: Vec<usize>,
    /// One-point extension template over the anchor; new point last.
    pub template: FinStructure,
}

#[derive(Debug, Clone)]
pub struct LogEntry {
    pub demand_id: u64,
    pub anchor: Vec<usize>,
    pub template: FinStructure,
    pub created: usize,
}

/// An extension-property request: embed `a` into the snapshot fixing the
/// anchored elements pointwise.
#[derive(Debug, Clone)]
pub struct ExtensionRequest {
    pub a: FinStructure,
    /// Pairs (index in `a`, snapshot element).
    pub anchored: Vec<(usize, usize)>,
}

/// Admissibility constraint on the image of one mover in a [`FixingQuery`].
#[derive(Debug, Clone)]
pub enum ElementFilter {
    Any,
    /// Image must realise this type.
    Typeset(TypeDescriptor),
    /// Image must realise the type and avoid the listed elements.
    TypesetAvoiding(TypeDescriptor, BTreeSet<usize>),
    /// Image must lie in the given element set.
    In(BTreeSet<usize>),
    /// Image must avoid the given element set.
    NotIn(BTreeSet<usize>),
}

impl ElementFilter {
    pub fn matches(&self, snap: &FinStructure, y: usize) -> bool {
        match self {
            ElementFilter::Any => true,
            ElementFilter::Typeset(t) => t.contains(snap, y),
            ElementFilter::TypesetAvoiding(t, avoid) => {
                !avoid.contains(&y) && t.contains(snap, y)
            }
            ElementFilter::In(set) => set.contains(&y),
            ElementFilter::NotIn(set) => !set.contains(&y),
        }
    }

    /// The type the image must realise, when the filter declares one; fresh
    /// realisation follows these templates.
    fn declared_type(&self) -> Option<&TypeDescriptor> {
        match self {
            ElementFilter::Typeset(t) | ElementFilter::TypesetAvoiding(t, _) => Some(t),
            _ => None,
        }
    }
}

/// A stabiliser-style query: an embedding of the substructure induced on
/// `fixed ∪ movers` into the snapshot, fixing `fixed` pointwise, with each
/// mover's image passing its filter.
#[derive(Debug, Clone)]
pub struct FixingQuery {
    pub fixed: Vec<usize>,
    pub movers: Vec<usize>,
    pub filters: BTreeMap<usize, ElementFilter>,
}

impl FixingQuery {
    pub fn new(fixed: Vec<usize>, movers: Vec<usize>) -> Self {
        FixingQuery {
            fixed,
            movers,
            filters: BTreeMap::new(),
        }
    }

    pub fn with_filter(mut self, mover: usize, filter: ElementFilter) -> Self {
        self.filters.insert(mover, filter);
        self
    }

    pub fn with_all_filters(mut self, filter: ElementFilter) -> Self {
        for &m in &self.movers {
            self.filters.insert(m, filter.clone());
        }
        self
    }
}

pub struct GenericStructure {
    age: Arc<AgeHandle>,
    snapshot: FinStructure,
    records: Vec<AttachmentRecord>,
    queue: VecDeque<Demand>,
    subset_cursor: u64,
    next_demand_id: u64,
    seed: u64,
    mode: GrowthMode,
    log: Vec<LogEntry>,
}

impl GenericStructure {
    pub fn new(age: Arc<AgeHandle>, seed: u64, mode: GrowthMode) -> Result<Self> {
        if !age.free_amalgamation() {
            return Err(Error::Precondition(
                "generic structure needs a free amalgamation age".into(),
            ));
        }
        let sig = age.signature().clone();
        Ok(GenericStructure {
            age,
            snapshot: FinStructure::empty(sig, 0),
            records: Vec::new(),
            queue: VecDeque::new(),
            subset_cursor: 0,
            next_demand_id: 0,
            seed,
            mode,
            log: Vec::new(),
        })
    }

    pub fn age(&self) -> &Arc<AgeHandle> {
        &self.age
    }

    pub fn snapshot(&self) -> &FinStructure {
        &self.snapshot
    }

    pub fn size(&self) -> usize {
        self.snapshot.size()
    }

    pub fn record(&self, element: usize) -> &AttachmentRecord {
        &self.records[element]
    }

    pub fn records(&self) -> &[AttachmentRecord] {
        &self.records
    }

    pub fn log(&self) -> &[LogEntry] {
        &self.log
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn mode(&self) -> GrowthMode {
        self.mode
    }

    pub fn pending_demands(&self) -> usize {
        self.queue.len()
    }

    /// Pop and realise `steps` demands, auto-enqueuing new ones from the
    /// dovetailed (sockel, template) enumeration as the queue drains.
    pub fn advance(&mut self, steps: usize) -> Result<()> {
        for _ in 0..steps {
            self.fill_queue()?;
            let demand = self
                .queue
                .pop_front()
                .expect("fill_queue leaves the queue nonempty");
            self.realize_demand(demand)?;
        }
        Ok(())
    }

    /// Grow until the snapshot has at least `n` elements.
    pub fn grow_to(&mut self, n: usize) -> Result<()> {
        let mut guard = 0usize;
        while self.size() < n {
            self.advance(1)?;
            guard += 1;
            if guard > 200_000 {
                return Err(Error::Budget("grow_to stalled".into()));
            }
        }
        Ok(())
    }

    fn fill_queue(&mut self) -> Result<()> {
        let mut scanned = 0u64;
        while self.queue.is_empty() {
            let mask = self.subset_cursor;
            self.subset_cursor += 1;
            scanned += 1;
            if scanned > 2_000_000 {
                return Err(Error::Budget(
                    "demand generation stalled (empty age?)".into(),
                ));
            }
            let anchor: Vec<usize> = (0..64)
                .filter(|&b| mask & (1u64 << b) != 0)
                .map(|b| b as usize)
                .collect();
            // The snapshot grows at least one element per realised demand,
            // so valid masks stay far ahead of the cursor; skipping an
            // invalid one is a startup corner only.
            if anchor.iter().any(|&e| e >= self.size()) {
                continue;
            }
            let set: BTreeSet<usize> = anchor.iter().copied().collect();
            let (base, _) = self.snapshot.induced(&set)?;
            for template in self.age.one_point_extensions(&base)? {
                let id = self.next_demand_id;
                self.next_demand_id += 1;
                self.queue.push_back(Demand {
                    id,
                    anchor: anchor.clone(),
                    template,
                });
            }
        }
        Ok(())
    }

    fn realize_demand(&mut self, demand: Demand) -> Result<()> {
        let new = match self.mode {
            GrowthMode::Dovetail => self.attach_freely(&demand.anchor, &demand.template)?,
            GrowthMode::Random => self.attach_randomly(&demand)?,
        };
        self.records[new].demand_id = Some(demand.id);
        self.log.push(LogEntry {
            demand_id: demand.id,
            anchor: demand.anchor,
            template: demand.template,
            created: new,
        });
        Ok(())
    }

    /// Append one element attached to `anchor` exactly per `template`
    /// (anchor elements in ascending order match template elements 0..k,
    /// the new point is the template's last element).
    fn attach_freely(&mut self, anchor: &[usize], template: &FinStructure) -> Result<usize> {
        debug_assert_eq!(template.size(), anchor.len() + 1);
        let new = self.snapshot.grow(1).start;
        let star = template.size() - 1;
        let mut created = Vec::new();
        for inst in template.instances() {
            if inst.tuple.contains(&star) {
                let tuple: Vec<usize> = inst
                    .tuple
                    .iter()
                    .map(|&e| if e == star { new } else { anchor[e] })
                    .collect();
                self.snapshot.insert(inst.rel, tuple.clone())?;
                created.push(Instance {
                    rel: inst.rel,
                    tuple,
                });
            }
        }
        self.records.push(AttachmentRecord {
            element: new,
            anchor: anchor.to_vec(),
            instances: created,
            demand_id: None,
        });
        Ok(new)
    }

    /// Template relations to the anchor plus uniformly sampled relations to
    /// older elements, rejection-sampled against age membership.
    fn attach_randomly(&mut self, demand: &Demand) -> Result<usize> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ demand.id.wrapping_mul(0x9e3779b9));
        let new_index = self.size();
        let anchor_set: BTreeSet<usize> = demand.anchor.iter().copied().collect();
        let candidates: Vec<(usize, Vec<usize>)> =
            crate::age::candidate_tuples_with(self.snapshot.signature(), new_index + 1, new_index)
                .into_iter()
                .filter(|(_, tuple)| {
                    tuple
                        .iter()
                        .any(|&e| e != new_index && !anchor_set.contains(&e))
                })
                .collect();
        for _attempt in 0..32 {
            let mut trial = self.snapshot.clone();
            let new = trial.grow(1).start;
            let star = demand.template.size() - 1;
            let mut created = Vec::new();
            for inst in demand.template.instances() {
                if inst.tuple.contains(&star) {
                    let tuple: Vec<usize> = inst
                        .tuple
                        .iter()
                        .map(|&e| if e == star { new } else { demand.anchor[e] })
                        .collect();
                    trial.insert(inst.rel, tuple.clone())?;
                    created.push(Instance {
                        rel: inst.rel,
                        tuple,
                    });
                }
            }
            for (rel, tuple) in &candidates {
                if rng.random::<bool>() {
                    trial.insert(*rel, tuple.clone())?;
                    created.push(Instance {
                        rel: *rel,
                        tuple: tuple.clone(),
                    });
                }
            }
            if self.age.contains(&trial)? {
                self.snapshot = trial;
                self.records.push(AttachmentRecord {
                    element: new,
                    anchor: demand.anchor.clone(),
                    instances: created,
                    demand_id: None,
                });
                return Ok(new);
            }
        }
        // Rejection budget spent: fall back to the always-valid free attach.
        let anchor = demand.anchor.clone();
        let template = demand.template.clone();
        self.attach_freely(&anchor, &template)
    }

    /// Realise an extension request: new elements are appended for the
    /// non-anchored part of `a`, attached by free amalgamation over the
    /// anchored image. Returns the embedding of `a` into the snapshot.
    pub fn realize_extension(&mut self, req: &ExtensionRequest) -> Result<Vec<usize>> {
        if !self.age.contains(&req.a)? {
            return Err(Error::Precondition(
                "extension request is not an age member".into(),
            ));
        }
        let anchor_indices: BTreeSet<usize> = req.anchored.iter().map(|p| p.0).collect();
        let anchor_images: BTreeSet<usize> = req.anchored.iter().map(|p| p.1).collect();
        if anchor_indices.len() != req.anchored.len() || anchor_images.len() != req.anchored.len()
        {
            return Err(Error::Precondition("anchor is not injective".into()));
        }
        for &(i, y) in &req.anchored {
            if i >= req.a.size() {
                return Err(Error::OutOfRange {
                    index: i,
                    size: req.a.size(),
                });
            }
            if y >= self.size() {
                return Err(Error::OutOfRange {
                    index: y,
                    size: self.size(),
                });
            }
        }
        // The anchor must be an isomorphism of the anchored restriction onto
        // its image.
        let (sub_a, order_a) = req.a.induced(&anchor_indices)?;
        let (sub_s, order_s) = self.snapshot.induced(&anchor_images)?;
        let mut corr = vec![usize::MAX; sub_a.size()];
        for &(i, y) in &req.anchored {
            let ai = order_a.iter().position(|&x| x == i).unwrap();
            let si = order_s.iter().position(|&x| x == y).unwrap();
            corr[ai] = si;
        }
        if !verify_morphism(&sub_a, &sub_s, &corr, MorphKind::Iso) {
            return Err(Error::Precondition(
                "anchor is not an isomorphism onto its image".into(),
            ));
        }

        let fresh_indices: Vec<usize> = (0..req.a.size())
            .filter(|i| !anchor_indices.contains(i))
            .collect();
        let range = self.snapshot.grow(fresh_indices.len());
        let mut map = vec![usize::MAX; req.a.size()];
        for &(i, y) in &req.anchored {
            map[i] = y;
        }
        for (offset, &i) in fresh_indices.iter().enumerate() {
            map[i] = range.start + offset;
        }
        let mut per_fresh: BTreeMap<usize, Vec<Instance>> = BTreeMap::new();
        for inst in req.a.instances() {
            if inst.tuple.iter().any(|&e| !anchor_indices.contains(&e)) {
                let tuple: Vec<usize> = inst.tuple.iter().map(|&e| map[e]).collect();
                self.snapshot.insert(inst.rel, tuple.clone())?;
                let owner = *tuple.iter().filter(|&&e| e >= range.start).max().unwrap();
                per_fresh.entry(owner).or_default().push(Instance {
                    rel: inst.rel,
                    tuple,
                });
            }
        }
        for (offset, _) in fresh_indices.iter().enumerate() {
            let element = range.start + offset;
            self.records.push(AttachmentRecord {
                element,
                anchor: req.anchored.iter().map(|p| p.1).collect(),
                instances: per_fresh.remove(&element).unwrap_or_default(),
                demand_id: None,
            });
        }
        Ok(map)
    }

    /// Search the snapshot for an embedding answering the query; with
    /// `want_fresh`, fall back to realising fresh witnesses whose relations
    /// follow the filters' declared type templates. `None` means exhaustive
    /// failure at the current snapshot (plus the canonical fresh attempt,
    /// if allowed); the caller decides whether to advance and retry.
    pub fn exists_fixing(
        &mut self,
        q: &FixingQuery,
        want_fresh: bool,
    ) -> Result<Option<BTreeMap<usize, usize>>> {
        if let Some(m) = self.exists_fixing_now(q)? {
            return Ok(Some(m));
        }
        if want_fresh {
            return self.exists_fixing_fresh(q);
        }
        Ok(None)
    }

    /// Snapshot-only search, no realisation.
    pub fn exists_fixing_now(&self, q: &FixingQuery) -> Result<Option<BTreeMap<usize, usize>>> {
        let mut domain: BTreeSet<usize> = q.fixed.iter().copied().collect();
        for &m in &q.movers {
            if domain.contains(&m) {
                return Err(Error::Precondition("fixed and movers overlap".into()));
            }
            domain.insert(m);
        }
        let (pattern, order) = self.snapshot.induced(&domain)?;
        let fixed_pairs: Vec<(usize, usize)> = q
            .fixed
            .iter()
            .map(|&f| (order.iter().position(|&o| o == f).unwrap(), f))
            .collect();
        let snap = &self.snapshot;
        let allowed = |src: usize, dst: usize| -> bool {
            match q.filters.get(&order[src]) {
                Some(f) => f.matches(snap, dst),
                None => true,
            }
        };
        let opts = SearchOpts {
            limit: 1,
            fixed: &fixed_pairs,
            allowed: Some(&allowed),
        };
        let found = search_morphisms(&pattern, &self.snapshot, MorphKind::Embedding, opts);
        Ok(found.first().map(|m| {
            q.movers
                .iter()
                .map(|&mv| {
                    let idx = order.iter().position(|&o| o == mv).unwrap();
                    (mv, m.map[idx])
                })
                .collect()
        }))
    }

    /// Build a joint one-step extension placing a fresh witness for every
    /// mover: relations among movers and to `fixed` copy the originals,
    /// relations to a declared type's sockel follow its template, nothing
    /// else. Realised only if consistent and inside the age.
    fn exists_fixing_fresh(&mut self, q: &FixingQuery) -> Result<Option<BTreeMap<usize, usize>>> {
        // Filter sockels stay anchored even when they name movers: the old
        // element keeps its place while the mover gets a fresh slot.
        let mover_set: BTreeSet<usize> = q.movers.iter().copied().collect();
        let mut base: BTreeSet<usize> = q.fixed.iter().copied().collect();
        for &m in &q.movers {
            if let Some(t) = q.filters.get(&m).and_then(|f| f.declared_type()) {
                base.extend(t.sockel().iter().copied());
            }
        }
        let base_sorted: Vec<usize> = base.iter().copied().collect();
        let n_base = base_sorted.len();
        let n = n_base + q.movers.len();
        let pos_of_base = |e: usize| base_sorted.iter().position(|&b| b == e).unwrap();
        let slot_of_mover = |m: usize| n_base + q.movers.iter().position(|&x| x == m).unwrap();

        let mut joint = FinStructure::empty(self.snapshot.signature().clone(), n);
        // Existing structure on the base.
        let (base_sub, base_order) = self.snapshot.induced(&base)?;
        for inst in base_sub.instances() {
            let tuple: Vec<usize> = inst
                .tuple
                .iter()
                .map(|&e| pos_of_base(base_order[e]))
                .collect();
            joint.insert(inst.rel, tuple)?;
        }
        // Mover relations among themselves and to the fixed part.
        let fixed_set: BTreeSet<usize> = q.fixed.iter().copied().collect();
        let mut emb_domain: BTreeSet<usize> = fixed_set.clone();
        emb_domain.extend(q.movers.iter().copied());
        let (emb_sub, emb_order) = self.snapshot.induced(&emb_domain)?;
        for inst in emb_sub.instances() {
            if inst
                .tuple
                .iter()
                .any(|&e| mover_set.contains(&emb_order[e]))
            {
                let tuple: Vec<usize> = inst
                    .tuple
                    .iter()
                    .map(|&e| {
                        let orig = emb_order[e];
                        if mover_set.contains(&orig) {
                            slot_of_mover(orig)
                        } else {
                            pos_of_base(orig)
                        }
                    })
                    .collect();
                joint.insert(inst.rel, tuple)?;
            }
        }
        // Declared type templates.
        for &m in &q.movers {
            if let Some(t) = q.filters.get(&m).and_then(|f| f.declared_type()) {
                let star = t.template().size() - 1;
                for inst in t.template().instances() {
                    if inst.tuple.contains(&star) {
                        let tuple: Vec<usize> = inst
                            .tuple
                            .iter()
                            .map(|&e| {
                                if e == star {
                                    slot_of_mover(m)
                                } else {
                                    pos_of_base(t.sockel()[e])
                                }
                            })
                            .collect();
                        joint.insert(inst.rel, tuple)?;
                    }
                }
            }
        }
        // Consistency: each declared template region must induce exactly the
        // template, and the embedding region exactly the original. Colliding
        // requirements surface as extra instances and fail these checks.
        for &m in &q.movers {
            if let Some(t) = q.filters.get(&m).and_then(|f| f.declared_type()) {
                let mut region: BTreeSet<usize> =
                    t.sockel().iter().map(|&s| pos_of_base(s)).collect();
                region.insert(slot_of_mover(m));
                let (got, order) = joint.induced(&region)?;
                let star_slot = slot_of_mover(m);
                let relabel: Vec<usize> = order
                    .iter()
                    .map(|&slot| {
                        if slot == star_slot {
                            t.template().size() - 1
                        } else {
                            t.sockel()
                                .iter()
                                .position(|&s| s == base_sorted[slot])
                                .unwrap()
                        }
                    })
                    .collect();
                if !verify_morphism(&got, t.template(), &relabel, MorphKind::Iso) {
                    return Ok(None);
                }
            }
        }
        {
            let mut region: BTreeSet<usize> =
                fixed_set.iter().map(|&f| pos_of_base(f)).collect();
            for &m in &q.movers {
                region.insert(slot_of_mover(m));
            }
            let (got, order) = joint.induced(&region)?;
            let relabel: Vec<usize> = order
                .iter()
                .map(|&slot| {
                    let orig = if slot >= n_base {
                        q.movers[slot - n_base]
                    } else {
                        base_sorted[slot]
                    };
                    emb_order.iter().position(|&o| o == orig).unwrap()
                })
                .collect();
            if !verify_morphism(&got, &emb_sub, &relabel, MorphKind::Iso) {
                return Ok(None);
            }
        }
        if !self.age.contains(&joint)? {
            return Ok(None);
        }
        let anchored: Vec<(usize, usize)> = base_sorted
            .iter()
            .enumerate()
            .map(|(i, &e)| (i, e))
            .collect();
        let map = self.realize_extension(&ExtensionRequest { a: joint, anchored })?;
        let mut out = BTreeMap::new();
        for (i, &m) in q.movers.iter().enumerate() {
            let fresh = map[n_base + i];
            if let Some(f) = q.filters.get(&m) {
                if !f.matches(&self.snapshot, fresh) {
                    return Ok(None);
                }
            }
            out.insert(m, fresh);
        }
        Ok(Some(out))
    }

    /// For every sockel F ⊆ candidate with |F| ≤ bound and every age-valid
    /// one-point extension over F, report the types whose typeset misses
    /// `candidate` in the current snapshot. Empty means no violation
    /// detected at this bound; it is a necessary check, not a proof.
    pub fn verify_copy_prefix(
        &self,
        candidate: &BTreeSet<usize>,
        bound: usize,
    ) -> Result<Vec<TypeDescriptor>> {
        for &e in candidate {
            if e >= self.size() {
                return Err(Error::OutOfRange {
                    index: e,
                    size: self.size(),
                });
            }
        }
        let elems: Vec<usize> = candidate.iter().copied().collect();
        let mut unmet = Vec::new();
        for f_size in 0..=bound {
            if f_size > elems.len() {
                break;
            }
            for sockel in crate::structure::combinations(&elems, f_size) {
                let set: BTreeSet<usize> = sockel.iter().copied().collect();
                let (base, _) = self.snapshot.induced(&set)?;
                for template in self.age.one_point_extensions(&base)? {
                    let met = elems.iter().any(|&y| {
                        !set.contains(&y)
                            && extension_matches(&self.snapshot, &sockel, y, &template)
                    });
                    if !met {
                        unmet.push(TypeDescriptor::from_parts(sockel.clone(), template));
                    }
                }
            }
        }
        Ok(unmet)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::AgeHandle;
    use crate::structure::fixtures::*;
    use crate::structure::Signature;

    fn rado(seed: u64) -> GenericStructure {
        GenericStructure::new(AgeHandle::all_graphs(), seed, GrowthMode::Dovetail).unwrap()
    }

    fn adjacent_type(g: &GenericStructure, v: usize) -> TypeDescriptor {
        let mut template = FinStructure::empty(g.snapshot().signature().clone(), 2);
        template.insert(0, vec![0, 1]).unwrap();
        TypeDescriptor::new(g, vec![v], template).unwrap()
    }

    #[test]
    fn advance_zero_is_identity() {
        let mut g = rado(1);
        g.advance(0).unwrap();
        assert_eq!(g.size(), 0);
    }

    #[test]
    fn determinism_same_seed_same_log() {
        let mut a = rado(7);
        let mut b = rado(7);
        a.advance(40).unwrap();
        b.advance(40).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
        assert_eq!(a.log().len(), b.log().len());
        for (x, y) in a.log().iter().zip(b.log()) {
            assert_eq!(x.demand_id, y.demand_id);
            assert_eq!(x.anchor, y.anchor);
            assert_eq!(x.created, y.created);
            assert_eq!(x.template, y.template);
        }
    }

    #[test]
    fn random_mode_is_deterministic_and_in_age() {
        let age = AgeHandle::kn_free(3);
        let mut a = GenericStructure::new(age.clone(), 11, GrowthMode::Random).unwrap();
        let mut b = GenericStructure::new(age.clone(), 11, GrowthMode::Random).unwrap();
        a.advance(25).unwrap();
        b.advance(25).unwrap();
        assert_eq!(a.snapshot(), b.snapshot());
        assert!(age.contains(a.snapshot()).unwrap());
    }

    #[test]
    fn rado_realises_common_neighbour_and_non_neighbour() {
        let mut g = rado(3);
        g.advance(80).unwrap();
        let snap = g.snapshot();
        let mut found = false;
        'outer: for a in 0..snap.size() {
            for b in a + 1..snap.size() {
                let common_n = (0..snap.size()).any(|y| {
                    y != a && y != b && snap.gaifman_adjacent(a, y) && snap.gaifman_adjacent(b, y)
                });
                let common_non = (0..snap.size()).any(|y| {
                    y != a && y != b && !snap.gaifman_adjacent(a, y) && !snap.gaifman_adjacent(b, y)
                });
                if common_n && common_non {
                    found = true;
                    break 'outer;
                }
            }
        }
        assert!(found);
    }

    #[test]
    fn snapshot_stays_in_age_spot_check() {
        let age = AgeHandle::kn_free(3);
        let mut g = GenericStructure::new(age.clone(), 5, GrowthMode::Dovetail).unwrap();
        g.advance(60).unwrap();
        let n = g.size();
        for start in 0..n.saturating_sub(5) {
            let subset: BTreeSet<usize> = (start..start + 5).collect();
            let (sub, _) = g.snapshot().induced(&subset).unwrap();
            assert!(age.contains(&sub).unwrap());
        }
    }

    #[test]
    fn realize_extension_free_attach() {
        let mut g = rado(9);
        g.advance(5).unwrap();
        let mut a = FinStructure::empty(Signature::graph(), 2);
        a.insert(0, vec![0, 1]).unwrap();
        let req = ExtensionRequest {
            a,
            anchored: vec![(0, 0)],
        };
        let before = g.size();
        let map = g.realize_extension(&req).unwrap();
        assert_eq!(g.size(), before + 1);
        assert_eq!(map[0], 0);
        let new = map[1];
        assert!(g.snapshot().gaifman_adjacent(0, new));
        for old in 1..before {
            assert!(!g.snapshot().gaifman_adjacent(old, new));
        }
    }

    #[test]
    fn realize_extension_rejects_non_member() {
        let age = AgeHandle::kn_free(3);
        let mut g = GenericStructure::new(age, 2, GrowthMode::Dovetail).unwrap();
        g.advance(10).unwrap();
        let snap = g.snapshot().clone();
        let (a, b) = (0..snap.size())
            .flat_map(|x| (x + 1..snap.size()).map(move |y| (x, y)))
            .find(|&(x, y)| snap.gaifman_adjacent(x, y))
            .expect("some edge realised");
        let req = ExtensionRequest {
            a: complete_graph(3),
            anchored: vec![(0, a), (1, b)],
        };
        assert!(g.realize_extension(&req).is_err());
    }

    #[test]
    fn realize_extension_disjoint_path() {
        let mut g = rado(4);
        g.advance(3).unwrap();
        let before = g.size();
        let req = ExtensionRequest {
            a: path_graph(3),
            anchored: vec![],
        };
        let map = g.realize_extension(&req).unwrap();
        assert_eq!(g.size(), before + 3);
        assert!(g.snapshot().gaifman_adjacent(map[0], map[1]));
        assert!(g.snapshot().gaifman_adjacent(map[1], map[2]));
        assert!(!g.snapshot().gaifman_adjacent(map[0], map[2]));
        for old in 0..before {
            for &new in &map {
                assert!(!g.snapshot().gaifman_adjacent(old, new));
            }
        }
    }

    #[test]
    fn exists_fixing_identity_when_present() {
        let mut g = rado(6);
        g.advance(40).unwrap();
        let snap = g.snapshot().clone();
        let (a, b) = (0..snap.size())
            .flat_map(|x| (x + 1..snap.size()).map(move |y| (x, y)))
            .find(|&(x, y)| snap.gaifman_adjacent(x, y))
            .unwrap();
        let q = FixingQuery::new(vec![], vec![a, b])
            .with_filter(a, ElementFilter::In([a].into()))
            .with_filter(b, ElementFilter::In([b].into()));
        let m = g.exists_fixing(&q, false).unwrap().unwrap();
        assert_eq!(m[&a], a);
        assert_eq!(m[&b], b);
    }

    #[test]
    fn exists_fixing_no_common_neighbour_in_triangle_free() {
        let age = AgeHandle::kn_free(3);
        let mut g = GenericStructure::new(age, 8, GrowthMode::Dovetail).unwrap();
        g.advance(40).unwrap();
        let snap = g.snapshot().clone();
        let (a, b) = (0..snap.size())
            .flat_map(|x| (x + 1..snap.size()).map(move |y| (x, y)))
            .find(|&(x, y)| snap.gaifman_adjacent(x, y))
            .unwrap();
        let adj_both: BTreeSet<usize> = (0..snap.size())
            .filter(|&y| {
                y != a && y != b && snap.gaifman_adjacent(a, y) && snap.gaifman_adjacent(b, y)
            })
            .collect();
        assert!(adj_both.is_empty());
        let witness = (0..snap.size()).find(|&y| y != a && y != b).unwrap();
        let q = FixingQuery::new(vec![a, b], vec![witness])
            .with_filter(witness, ElementFilter::In(adj_both));
        assert!(g.exists_fixing(&q, false).unwrap().is_none());
    }

    #[test]
    fn exists_fixing_fresh_realises_typeset_member() {
        let mut g = rado(10);
        g.advance(20).unwrap();
        let t = adjacent_type(&g, 0);
        let realised: BTreeSet<usize> = (0..g.size())
            .filter(|&y| y != 0 && t.contains(g.snapshot(), y))
            .collect();
        let mover = (1..g.size())
            .find(|&y| !g.snapshot().gaifman_adjacent(0, y))
            .unwrap();
        let q = FixingQuery::new(vec![], vec![mover]).with_filter(
            mover,
            ElementFilter::TypesetAvoiding(t.clone(), realised.clone()),
        );
        let m = g.exists_fixing(&q, true).unwrap().unwrap();
        let img = m[&mover];
        assert!(!realised.contains(&img));
        assert!(t.contains(g.snapshot(), img));
    }

    #[test]
    fn verify_copy_prefix_settled_prefix_has_no_unmet_demands() {
        // Once the scheduler has worked through every (sockel, template)
        // demand over {0..3}, the whole snapshot meets all demands whose
        // sockel lies in that prefix.
        let mut g = rado(12);
        g.advance(150).unwrap();
        let all: BTreeSet<usize> = (0..g.size()).collect();
        let mut unmet = g.verify_copy_prefix(&all, 1).unwrap();
        unmet.retain(|t| t.sockel().iter().all(|&s| s < 4));
        assert!(unmet.is_empty(), "unmet: {unmet:?}");
    }

    #[test]
    fn verify_copy_prefix_empty_candidate_reports_vertex_demand() {
        let mut g = rado(13);
        g.advance(3).unwrap();
        let unmet = g.verify_copy_prefix(&BTreeSet::new(), 0).unwrap();
        assert!(!unmet.is_empty());
        assert!(unmet.iter().all(|t| t.sockel().is_empty()));
    }

    #[test]
    fn verify_copy_prefix_detects_stripped_neighbourhood() {
        let mut g = rado(14);
        g.advance(90).unwrap();
        let snap = g.snapshot().clone();
        let candidate: BTreeSet<usize> = (0..snap.size())
            .filter(|&y| y == 0 || !snap.gaifman_adjacent(0, y))
            .collect();
        let unmet = g.verify_copy_prefix(&candidate, 1).unwrap();
        assert!(unmet
            .iter()
            .any(|t| t.sockel() == [0] && t.template().instance_count() == 1));
    }

    #[test]
    fn fairness_every_demand_eventually_realised() {
        let mut g = rado(15);
        g.advance(30).unwrap();
        let pending = g.pending_demands();
        let watermark = g.log().last().unwrap().demand_id;
        g.advance(pending + 1).unwrap();
        let realised: BTreeSet<u64> = g.log().iter().map(|e| e.demand_id).collect();
        for id in 0..=watermark {
            assert!(realised.contains(&id), "demand {id} not realised");
        }
    }
}
