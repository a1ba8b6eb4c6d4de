//! Types over a generic structure and their rank calculus.
//!
//! A type is a sockel (finite element set of the snapshot) together with a
//! one-point extension template. Two types over the same sockel are equal
//! exactly when their templates coincide as labelled structures — in the
//! homogeneous limit this matches orbit equality under the sockel's
//! stabiliser. Ranks are ages of typesets, handled as membership oracles
//! with size-bounded caches; every comparison reports its bound.

use std::collections::BTreeSet;
use std::sync::RwLock;

use serde::{Deserialize, Serialize};

use crate::age::AgeHandle;
use crate::canon::IsoClassMap;
use crate::error::{Error, Result};
use crate::generic::GenericStructure;
use crate::structure::{arrangements, combinations, FinStructure, Mode};

/// A type ⟨F|x⟩: the sockel F as snapshot elements (ascending) plus a
/// template on |F|+1 elements whose last element is the extension slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TypeDescriptor {
    sockel: Vec<usize>,
    template: FinStructure,
}

impl TypeDescriptor {
    /// Validated constructor: the template's sockel part must equal the
    /// snapshot's restriction to the sockel, and the template must be an
    /// age member.
    pub fn new(
        g: &GenericStructure,
        mut sockel: Vec<usize>,
        template: FinStructure,
    ) -> Result<Self> {
        sockel.sort_unstable();
        sockel.dedup();
        if template.size() != sockel.len() + 1 {
            return Err(Error::Precondition(
                "template size must be sockel size + 1".into(),
            ));
        }
        let set: BTreeSet<usize> = sockel.iter().copied().collect();
        let (base, _) = g.snapshot().induced(&set)?;
        let star = template.size() - 1;
        let all_but_star: BTreeSet<usize> = (0..star).collect();
        let (template_base, _) = template.induced(&all_but_star)?;
        if template_base != base {
            return Err(Error::Precondition(
                "template disagrees with the snapshot on the sockel".into(),
            ));
        }
        if !g.age().contains(&template)? {
            return Err(Error::Precondition("template is not an age member".into()));
        }
        Ok(TypeDescriptor { sockel, template })
    }

    /// Unvalidated constructor for internal use.
    pub fn from_parts(sockel: Vec<usize>, template: FinStructure) -> Self {
        TypeDescriptor { sockel, template }
    }

    pub fn sockel(&self) -> &[usize] {
        &self.sockel
    }

    pub fn sockel_set(&self) -> BTreeSet<usize> {
        self.sockel.iter().copied().collect()
    }

    pub fn template(&self) -> &FinStructure {
        &self.template
    }

    /// Typeset membership: y realises this type in the snapshot.
    pub fn contains(&self, snap: &FinStructure, y: usize) -> bool {
        if self.sockel.contains(&y) || y >= snap.size() {
            return false;
        }
        extension_matches(snap, &self.sockel, y, &self.template)
    }

    /// Snapshot elements realising the type, ascending.
    pub fn realized(&self, snap: &FinStructure) -> Vec<usize> {
        (0..snap.size())
            .filter(|&y| self.contains(snap, y))
            .collect()
    }

    /// Equality of types: same sockel, same template.
    pub fn same_type(&self, other: &TypeDescriptor) -> bool {
        self.sockel == other.sockel && self.template == other.template
    }

    /// Successor relation: our sockel contains the predecessor's and
    /// restricting to it gives the predecessor back.
    pub fn is_successor_of(&self, pred: &TypeDescriptor) -> bool {
        let pred_set = pred.sockel_set();
        if !pred_set.iter().all(|s| self.sockel.contains(s)) {
            return false;
        }
        match self.restrict_positions(&pred_set) {
            Ok(r) => r.same_type(pred),
            Err(_) => false,
        }
    }

    /// The predecessor over E ⊆ sockel.
    pub fn restrict(&self, e: &BTreeSet<usize>) -> Result<TypeDescriptor> {
        if !e.iter().all(|x| self.sockel.contains(x)) {
            return Err(Error::Precondition("restriction set not in sockel".into()));
        }
        self.restrict_positions(e)
    }

    fn restrict_positions(&self, e: &BTreeSet<usize>) -> Result<TypeDescriptor> {
        let star = self.template.size() - 1;
        let mut keep: BTreeSet<usize> = self
            .sockel
            .iter()
            .enumerate()
            .filter(|(_, s)| e.contains(s))
            .map(|(i, _)| i)
            .collect();
        keep.insert(star);
        let (template, _) = self.template.induced(&keep)?;
        let sockel: Vec<usize> = self
            .sockel
            .iter()
            .copied()
            .filter(|s| e.contains(s))
            .collect();
        Ok(TypeDescriptor { sockel, template })
    }

    /// The unique free E-successor: sockel grows by E, the slot gains no
    /// relations towards E.
    pub fn free_successor(
        &self,
        g: &GenericStructure,
        e: &BTreeSet<usize>,
    ) -> Result<TypeDescriptor> {
        if e.is_empty() {
            return Ok(self.clone());
        }
        if e.iter().any(|x| self.sockel.contains(x)) {
            return Err(Error::Precondition(
                "free extension set must avoid the sockel".into(),
            ));
        }
        let mut new_sockel: Vec<usize> = self.sockel.clone();
        new_sockel.extend(e.iter().copied());
        new_sockel.sort_unstable();
        let set: BTreeSet<usize> = new_sockel.iter().copied().collect();
        let (base, order) = g.snapshot().induced(&set)?;
        let star = new_sockel.len();
        let mut template = FinStructure::empty(base.signature().clone(), star + 1);
        for inst in base.instances() {
            template.insert(inst.rel, inst.tuple.clone())?;
        }
        let old_star = self.template.size() - 1;
        for inst in self.template.instances() {
            if inst.tuple.contains(&old_star) {
                let tuple: Vec<usize> = inst
                    .tuple
                    .iter()
                    .map(|&x| {
                        if x == old_star {
                            star
                        } else {
                            let elem = self.sockel[x];
                            order.iter().position(|&o| o == elem).unwrap()
                        }
                    })
                    .collect();
                template.insert(inst.rel, tuple)?;
            }
        }
        TypeDescriptor::new(g, new_sockel, template)
    }

    /// Compatibility over the sockel intersection plus no snapshot relations
    /// across the sockel differences.
    pub fn in_free_position(&self, snap: &FinStructure, other: &TypeDescriptor) -> Result<bool> {
        let mine = self.sockel_set();
        let theirs = other.sockel_set();
        let shared: BTreeSet<usize> = mine.intersection(&theirs).copied().collect();
        let a = self.restrict(&shared)?;
        let b = other.restrict(&shared)?;
        if !a.same_type(&b) {
            return Ok(false);
        }
        for &x in mine.difference(&theirs) {
            for &y in theirs.difference(&mine) {
                if snap.gaifman_adjacent(x, y) {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// The join: the slot realises both operands, nothing across the sides.
    pub fn join(&self, g: &GenericStructure, other: &TypeDescriptor) -> Result<TypeDescriptor> {
        if !self.in_free_position(g.snapshot(), other)? {
            return Err(Error::Precondition("operands not in free position".into()));
        }
        let mut new_sockel: Vec<usize> = self
            .sockel_set()
            .union(&other.sockel_set())
            .copied()
            .collect();
        new_sockel.sort_unstable();
        let set: BTreeSet<usize> = new_sockel.iter().copied().collect();
        let (base, order) = g.snapshot().induced(&set)?;
        let star = new_sockel.len();
        let mut template = FinStructure::empty(base.signature().clone(), star + 1);
        for inst in base.instances() {
            template.insert(inst.rel, inst.tuple.clone())?;
        }
        for t in [self, other] {
            let old_star = t.template.size() - 1;
            for inst in t.template.instances() {
                if inst.tuple.contains(&old_star) {
                    let tuple: Vec<usize> = inst
                        .tuple
                        .iter()
                        .map(|&x| {
                            if x == old_star {
                                star
                            } else {
                                let elem = t.sockel[x];
                                order.iter().position(|&o| o == elem).unwrap()
                            }
                        })
                        .collect();
                    template.insert(inst.rel, tuple)?;
                }
            }
        }
        // For a free amalgamation age the joint template is a member; a
        // failure here is an internal inconsistency, reported as an error.
        TypeDescriptor::new(g, new_sockel, template)
    }

    /// Disjoint-sockel join.
    pub fn sum(&self, g: &GenericStructure, other: &TypeDescriptor) -> Result<TypeDescriptor> {
        if self
            .sockel_set()
            .intersection(&other.sockel_set())
            .next()
            .is_some()
        {
            return Err(Error::Precondition("sum needs disjoint sockels".into()));
        }
        self.join(g, other)
    }

    /// The image type under a verified map of the sockel, given as
    /// (sockel element → image element) pairs in sockel order.
    pub fn image(&self, g: &GenericStructure, f: &[(usize, usize)]) -> Result<TypeDescriptor> {
        if f.len() != self.sockel.len()
            || f.iter().zip(&self.sockel).any(|(&(src, _), &s)| src != s)
        {
            return Err(Error::Precondition(
                "map must cover exactly the sockel".into(),
            ));
        }
        let image: Vec<usize> = f.iter().map(|p| p.1).collect();
        let mut image_sorted = image.clone();
        image_sorted.sort_unstable();
        image_sorted.dedup();
        if image_sorted.len() != image.len() {
            return Err(Error::Precondition("map is not injective".into()));
        }
        let src_set = self.sockel_set();
        let dst_set: BTreeSet<usize> = image.iter().copied().collect();
        let (src_sub, src_order) = g.snapshot().induced(&src_set)?;
        let (dst_sub, dst_order) = g.snapshot().induced(&dst_set)?;
        let relabel: Vec<usize> = src_order
            .iter()
            .map(|&s| {
                let img = f.iter().find(|p| p.0 == s).unwrap().1;
                dst_order.iter().position(|&d| d == img).unwrap()
            })
            .collect();
        if !crate::search::verify_morphism(
            &src_sub,
            &dst_sub,
            &relabel,
            crate::search::MorphKind::Iso,
        ) {
            return Err(Error::Precondition(
                "map is not an isomorphism of the sockel restrictions".into(),
            ));
        }
        let star = self.template.size() - 1;
        let mut template = FinStructure::empty(self.template.signature().clone(), star + 1);
        for inst in self.template.instances() {
            let tuple: Vec<usize> = inst
                .tuple
                .iter()
                .map(|&x| {
                    if x == star {
                        star
                    } else {
                        let img = f[x].1;
                        image_sorted.iter().position(|&d| d == img).unwrap()
                    }
                })
                .collect();
            template.insert(inst.rel, tuple)?;
        }
        TypeDescriptor::new(g, image_sorted, template)
    }

    /// Free type over a sockel: the slot has no relations to the sockel and
    /// carries the first 1-element age class.
    pub fn free_type(g: &GenericStructure, sockel: &BTreeSet<usize>) -> Result<TypeDescriptor> {
        let (base, _) = g.snapshot().induced(sockel)?;
        let star = sockel.len();
        let vertex_classes = g.age().enumerate(1)?;
        let vertex = vertex_classes
            .first()
            .ok_or_else(|| Error::Precondition("age has no 1-element members".into()))?;
        let mut template = FinStructure::empty(base.signature().clone(), star + 1);
        for inst in base.instances() {
            template.insert(inst.rel, inst.tuple.clone())?;
        }
        for inst in vertex.instances() {
            let tuple: Vec<usize> = inst.tuple.iter().map(|_| star).collect();
            template.insert(inst.rel, tuple)?;
        }
        TypeDescriptor::new(g, sockel.iter().copied().collect(), template)
    }

    /// Whether the slot is free of the sockel (no shared tuples).
    pub fn is_free(&self) -> bool {
        let star = self.template.size() - 1;
        !self
            .template
            .instances()
            .any(|i| i.tuple.contains(&star) && i.tuple.len() > 1)
    }
}

/// Does y extend the sockel exactly per `template` (sockel ascending maps to
/// 0..k, y to the last element)?
pub fn extension_matches(
    snap: &FinStructure,
    sockel: &[usize],
    y: usize,
    template: &FinStructure,
) -> bool {
    debug_assert!(sockel.windows(2).all(|w| w[0] < w[1]));
    let star = template.size() - 1;
    debug_assert_eq!(sockel.len(), star);
    let mut domain: BTreeSet<usize> = sockel.iter().copied().collect();
    domain.insert(y);
    let (sub, order) = match snap.induced(&domain) {
        Ok(v) => v,
        Err(_) => return false,
    };
    if sub.instance_count() != template.instance_count() {
        return false;
    }
    let relabel: Vec<usize> = order
        .iter()
        .map(|&o| {
            if o == y {
                star
            } else {
                sockel.iter().position(|&s| s == o).unwrap()
            }
        })
        .collect();
    for inst in sub.instances() {
        let mut tuple: Vec<usize> = inst.tuple.iter().map(|&e| relabel[e]).collect();
        if template.signature().symbols[inst.rel].mode == Mode::Set {
            tuple.sort_unstable();
        }
        if !template.contains(inst.rel, tuple) {
            return false;
        }
    }
    true
}

/// All pairwise-unequal types over the given sockel whose templates are age
/// members. Finite because the signature is.
pub fn types_over(g: &GenericStructure, sockel: &BTreeSet<usize>) -> Result<Vec<TypeDescriptor>> {
    let (base, _) = g.snapshot().induced(sockel)?;
    let sockel_vec: Vec<usize> = sockel.iter().copied().collect();
    Ok(g.age()
        .one_point_extensions(&base)?
        .into_iter()
        .map(|template| TypeDescriptor::from_parts(sockel_vec.clone(), template))
        .collect())
}

/// Caps for the rank membership search.
#[derive(Debug, Clone, Copy)]
pub struct RankCaps {
    /// Maximum number of undecided mixed tuples.
    pub max_mixed: usize,
    /// Maximum number of candidate instance sets examined.
    pub leaf_budget: usize,
}

impl Default for RankCaps {
    fn default() -> Self {
        RankCaps {
            max_mixed: 20,
            leaf_budget: 200_000,
        }
    }
}

/// Candidate instances on tuples meeting the A-part in ≥ 2 entries and the
/// F-part in ≥ 1 entry. Everything else is forced by the sockel, the
/// structure `a`, or the type template.
pub fn mixed_candidate_tuples(
    sig: &crate::structure::Signature,
    f: usize,
    a_size: usize,
) -> Vec<(usize, Vec<usize>)> {
    let n = f + a_size;
    let all: Vec<usize> = (0..n).collect();
    let mut out = Vec::new();
    for (rel, sym) in sig.symbols.iter().enumerate() {
        if sym.arity > n {
            continue;
        }
        let tuples: Vec<Vec<usize>> = match sym.mode {
            Mode::Set => combinations(&all, sym.arity),
            Mode::Ordered => arrangements(&all, sym.arity),
        };
        for tuple in tuples {
            let in_a = tuple.iter().filter(|&&e| e >= f).count();
            let in_f = tuple.len() - in_a;
            if in_a >= 2 && in_f >= 1 {
                out.push((rel, tuple));
            }
        }
    }
    out.sort();
    out
}

/// Rank membership: does the typeset of the type with this template embed a
/// copy of `a`? Decided by searching for an age-member witness M on
/// F ⊔ A whose F-part is the sockel structure, whose A-part is `a`, and in
/// which every A-element realises the template over F; only instances on
/// mixed tuples are free. For boundaries where violations are monotone in
/// added instances the instance-free witness is optimal and the search
/// collapses to one membership check.
pub fn rank_contains(
    age: &AgeHandle,
    template: &FinStructure,
    a: &FinStructure,
    caps: &RankCaps,
) -> Result<bool> {
    if a.signature() != age.signature() {
        return Err(Error::SignatureMismatch("rank query signature".into()));
    }
    if !age.contains(a)? {
        return Err(Error::Precondition("rank query needs an age member".into()));
    }
    let f = template.size() - 1;
    // The slot's unary profile is forced onto every element of a; if some
    // element disagrees, no witness exists.
    for (rel, sym) in age.signature().symbols.iter().enumerate() {
        if sym.arity == 1 {
            let slot_flag = template.contains(rel, vec![f]);
            for v in 0..a.size() {
                if a.contains(rel, vec![v]) != slot_flag {
                    return Ok(false);
                }
            }
        }
    }
    let n = f + a.size();
    let mut m0 = FinStructure::empty(age.signature().clone(), n);
    // Sockel part.
    for inst in template.instances() {
        if !inst.tuple.contains(&f) {
            m0.insert(inst.rel, inst.tuple.clone())?;
        }
    }
    // The copy of a.
    for inst in a.instances() {
        let tuple: Vec<usize> = inst.tuple.iter().map(|&e| e + f).collect();
        m0.insert(inst.rel, tuple)?;
    }
    // Every a-element attaches to the sockel per the template.
    for v in 0..a.size() {
        for inst in template.instances() {
            if inst.tuple.contains(&f) {
                let tuple: Vec<usize> = inst
                    .tuple
                    .iter()
                    .map(|&e| if e == f { f + v } else { e })
                    .collect();
                m0.insert(inst.rel, tuple)?;
            }
        }
    }
    if age.contains(&m0)? {
        return Ok(true);
    }
    let mixed = mixed_candidate_tuples(age.signature(), f, a.size());
    if mixed.is_empty() || age.violation_monotone() {
        return Ok(false);
    }
    if mixed.len() > caps.max_mixed {
        return Err(Error::CapExceeded(mixed.len(), caps.max_mixed));
    }
    let total = 1u64 << mixed.len();
    if total > caps.leaf_budget as u64 {
        return Err(Error::Budget(format!(
            "rank witness search over {total} instance sets"
        )));
    }
    for mask in 1..total {
        let mut m = m0.clone();
        for (i, (rel, tuple)) in mixed.iter().enumerate() {
            if mask & (1 << i) != 0 {
                m.insert(*rel, tuple.clone())?;
            }
        }
        if age.contains(&m)? {
            return Ok(true);
        }
    }
    Ok(false)
}

/// Rank membership oracle with an iso-keyed cache, per owning type.
pub struct RankHandle {
    template: FinStructure,
    cache: RwLock<IsoClassMap<bool>>,
    caps: RankCaps,
}

impl RankHandle {
    pub fn new(template: FinStructure) -> Self {
        RankHandle {
            template,
            cache: RwLock::new(IsoClassMap::new()),
            caps: RankCaps::default(),
        }
    }

    pub fn template(&self) -> &FinStructure {
        &self.template
    }

    pub fn contains(&self, age: &AgeHandle, a: &FinStructure) -> Result<bool> {
        if let Some(&v) = self.cache.read().unwrap().get(a) {
            return Ok(v);
        }
        let v = rank_contains(age, &self.template, a, &self.caps)?;
        self.cache.write().unwrap().insert_if_new(a.clone(), v);
        Ok(v)
    }
}

/// Rank membership bits of one template over a member list, in order.
pub fn rank_vector(
    age: &AgeHandle,
    template: &FinStructure,
    members: &[FinStructure],
    caps: &RankCaps,
) -> Result<Vec<bool>> {
    crate::par::map_collect(members, |a| rank_contains(age, template, a, caps))
        .into_iter()
        .collect()
}

/// Bound-relative comparison of two ranks with separating witnesses.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RankComparison {
    pub leq: bool,
    pub geq: bool,
    /// Member in the first rank but not the second, if any.
    pub witness_ts: Option<crate::files::StructureFile>,
    /// Member in the second rank but not the first, if any.
    pub witness_st: Option<crate::files::StructureFile>,
    pub bound: usize,
}

pub fn rank_compare(
    age: &AgeHandle,
    t_template: &FinStructure,
    s_template: &FinStructure,
    bound: usize,
    caps: &RankCaps,
) -> Result<RankComparison> {
    let members = age.enumerate_up_to(bound)?;
    let tv = rank_vector(age, t_template, &members, caps)?;
    let sv = rank_vector(age, s_template, &members, caps)?;
    let mut witness_ts = None;
    let mut witness_st = None;
    for (i, a) in members.iter().enumerate() {
        if tv[i] && !sv[i] && witness_ts.is_none() {
            witness_ts = Some(crate::files::StructureFile::from_structure(a));
        }
        if sv[i] && !tv[i] && witness_st.is_none() {
            witness_st = Some(crate::files::StructureFile::from_structure(a));
        }
    }
    Ok(RankComparison {
        leq: witness_ts.is_none(),
        geq: witness_st.is_none(),
        witness_ts,
        witness_st,
        bound,
    })
}

/// Realise a fresh, relation-free copy of an abstract one-point template's
/// sockel and return the type it carries over those fresh elements. The
/// copy is in free position with everything already present.
pub fn materialize_free_type(
    g: &mut GenericStructure,
    template: &FinStructure,
) -> Result<TypeDescriptor> {
    let star = template.size() - 1;
    let keep: BTreeSet<usize> = (0..star).collect();
    let (sockel_structure, _) = template.induced(&keep)?;
    let map = g.realize_extension(&crate::generic::ExtensionRequest {
        a: sockel_structure,
        anchored: vec![],
    })?;
    // Fresh ids ascend with template positions, so the template relabels
    // by position identity.
    let mut relabelled = FinStructure::empty(template.signature().clone(), star + 1);
    for inst in template.instances() {
        relabelled.insert(inst.rel, inst.tuple.clone())?;
    }
    TypeDescriptor::new(g, map, relabelled)
}

/// Relocate a copy of `target`'s sockel into the free typeset over `t`'s
/// sockel and return `t + relocated-target`: a successor of `t` whose rank
/// at the bound equals the target's. The relocated copy is realised fresh,
/// which places it in free position with the whole snapshot.
pub fn restrict_to_rank(
    g: &mut GenericStructure,
    t: &TypeDescriptor,
    target: &TypeDescriptor,
    bound: usize,
    caps: &RankCaps,
) -> Result<TypeDescriptor> {
    let cmp = rank_compare(g.age(), target.template(), t.template(), bound, caps)?;
    if !cmp.leq {
        return Err(Error::Precondition(
            "target rank is not below the type's rank at the bound".into(),
        ));
    }
    if target.sockel().is_empty() {
        return t.sum(g, target);
    }
    let relocated = materialize_free_type(g, target.template())?;
    t.sum(g, &relocated)
}
