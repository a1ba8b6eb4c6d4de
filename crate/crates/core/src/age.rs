//! Boundary-defined ages: membership, normalisation, free-amalgamation
//! certification, size-bounded enumeration, and the boundary-level analyses
//! feeding the indivisibility certificates.
//!
//! An age is the class of finite structures embedding no boundary member.
//! Schematic boundaries are intensionally infinite; every check against them
//! declares the size cap it used.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, RwLock};

use serde::{Deserialize, Serialize};

use crate::canon::{dedup_iso, IsoClassMap};
use crate::error::{Error, Result};
use crate::search::{embeds_into, search_morphisms, verify_morphism, MorphKind, SearchOpts};
use crate::structure::{arrangements, combinations, fixtures, FinStructure, Mode, Signature};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SchematicRule {
    /// Boundary {K_n} over the graph signature.
    CompleteGraph { n: usize },
    /// All irreducible k-uniform hypergraphs on at least n vertices.
    IrreducibleKUniformMinN { k: usize, n: usize },
    /// All irreducible k-uniform hypergraphs on exactly n vertices.
    IrreducibleKUniformExactlyN { k: usize, n: usize },
}

/// Explicit or schematic set of forbidden structures.
#[derive(Clone)]
pub enum BoundarySpec {
    Explicit {
        sig: Arc<Signature>,
        members: Vec<FinStructure>,
    },
    Schematic {
        rule: SchematicRule,
    },
    /// Plug-in predicate deciding boundary membership. Not representable in
    /// boundary files; available to library callers only.
    Custom {
        sig: Arc<Signature>,
        name: String,
        is_member: Arc<dyn Fn(&FinStructure) -> bool + Send + Sync>,
    },
}

impl fmt::Debug for BoundarySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BoundarySpec::Explicit { members, .. } => {
                write!(f, "Explicit({} members)", members.len())
            }
            BoundarySpec::Schematic { rule } => write!(f, "Schematic({rule:?})"),
            BoundarySpec::Custom { name, .. } => write!(f, "Custom({name})"),
        }
    }
}

impl BoundarySpec {
    pub fn explicit(members: Vec<FinStructure>) -> Result<Self> {
        let sig = members
            .first()
            .map(|m| m.signature().clone())
            .ok_or_else(|| Error::Precondition("explicit boundary needs ≥1 member".into()))?;
        if members.iter().any(|m| m.signature() != &sig) {
            return Err(Error::SignatureMismatch(
                "boundary members over different signatures".into(),
            ));
        }
        Ok(BoundarySpec::Explicit { sig, members })
    }

    pub fn signature(&self) -> Arc<Signature> {
        match self {
            BoundarySpec::Explicit { sig, .. } => sig.clone(),
            BoundarySpec::Schematic { rule } => match rule {
                SchematicRule::CompleteGraph { .. } => Signature::graph(),
                SchematicRule::IrreducibleKUniformMinN { k, .. }
                | SchematicRule::IrreducibleKUniformExactlyN { k, .. } => Signature::k_uniform(*k),
            },
            BoundarySpec::Custom { sig, .. } => sig.clone(),
        }
    }
}

/// Normalise a boundary: explicit members are iso-deduplicated and reduced to
/// an antichain under embedding; the flag reports whether every (generated,
/// up to `cap` for non-explicit rules) member is irreducible, which is
/// exactly the free-amalgamation criterion.
pub fn normalize_boundary(spec: BoundarySpec, cap: usize) -> Result<(BoundarySpec, bool)> {
    match spec {
        BoundarySpec::Explicit { sig, members } => {
            let mut members = dedup_iso(members);
            members.sort_by_key(sort_key);
            // Antichain: drop any member some other member embeds into.
            let mut keep: Vec<FinStructure> = Vec::new();
            'outer: for (i, m) in members.iter().enumerate() {
                for (j, other) in members.iter().enumerate() {
                    if i != j && other.size() <= m.size() && embeds_into(other, m) {
                        // Keep the smaller obstruction; `m` is redundant.
                        if other.size() < m.size() || j < i {
                            continue 'outer;
                        }
                    }
                }
                keep.push(m.clone());
            }
            let flag = keep.iter().all(|m| m.is_irreducible());
            Ok((BoundarySpec::Explicit { sig, members: keep }, flag))
        }
        BoundarySpec::Schematic { rule } => {
            // Rule-level: every generated member is irreducible by
            // construction (complete graphs, irreducible hypergraphs).
            Ok((BoundarySpec::Schematic { rule }, true))
        }
        BoundarySpec::Custom {
            sig,
            name,
            is_member,
        } => {
            let mut flag = true;
            for size in 1..=cap {
                for s in enumerate_structures(&sig, size, 64_000)? {
                    if is_member(&s) && !s.is_irreducible() {
                        flag = false;
                    }
                }
            }
            Ok((
                BoundarySpec::Custom {
                    sig,
                    name,
                    is_member,
                },
                flag,
            ))
        }
    }
}

/// Age handle: membership oracle plus caches of boundary members and
/// iso-class representatives by size. Caches are single-writer/multi-reader.
pub struct AgeHandle {
    sig: Arc<Signature>,
    boundary: BoundarySpec,
    free_amalgamation: bool,
    enumeration_cap: usize,
    members_by_size: RwLock<Vec<Option<Arc<Vec<FinStructure>>>>>,
    boundary_by_size: RwLock<Vec<Option<Arc<Vec<FinStructure>>>>>,
}

impl fmt::Debug for AgeHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "AgeHandle({:?}, free_amalgamation={})",
            self.boundary, self.free_amalgamation
        )
    }
}

pub const DEFAULT_ENUMERATION_CAP: usize = 8;
const NORMALIZE_CAP: usize = 6;

impl AgeHandle {
    pub fn new(spec: BoundarySpec) -> Result<Arc<Self>> {
        let (boundary, flag) = normalize_boundary(spec, NORMALIZE_CAP)?;
        Ok(Arc::new(AgeHandle {
            sig: boundary.signature(),
            boundary,
            free_amalgamation: flag,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            members_by_size: RwLock::new(Vec::new()),
            boundary_by_size: RwLock::new(Vec::new()),
        }))
    }

    /// Age of all finite simple graphs (empty boundary).
    pub fn all_graphs() -> Arc<Self> {
        Self::unbounded(Signature::graph())
    }

    /// Graphs with boundary {K_n}.
    pub fn kn_free(n: usize) -> Arc<Self> {
        Self::new(BoundarySpec::Schematic {
            rule: SchematicRule::CompleteGraph { n },
        })
        .expect("valid")
    }

    /// Age over an arbitrary signature with empty boundary.
    pub fn unbounded(sig: Arc<Signature>) -> Arc<Self> {
        Self::new(BoundarySpec::Custom {
            sig,
            name: "none".into(),
            is_member: Arc::new(|_| false),
        })
        .expect("valid")
    }

    pub fn signature(&self) -> &Arc<Signature> {
        &self.sig
    }

    pub fn boundary(&self) -> &BoundarySpec {
        &self.boundary
    }

    pub fn free_amalgamation(&self) -> bool {
        self.free_amalgamation
    }

    pub fn enumeration_cap(&self) -> usize {
        self.enumeration_cap
    }

    /// Whether adding instances inside a violating region can never repair
    /// the violation. Holds for the schematic rules (irreducibility only
    /// grows with instances) and for empty boundaries; assumed false for
    /// other explicit and custom boundaries.
    pub fn violation_monotone(&self) -> bool {
        match &self.boundary {
            BoundarySpec::Schematic { .. } => true,
            BoundarySpec::Explicit { members, .. } => members.is_empty(),
            BoundarySpec::Custom { name, .. } => name == "none",
        }
    }

    /// Membership: no boundary member (of size ≤ |a|) embeds into `a`.
    pub fn contains(&self, a: &FinStructure) -> Result<bool> {
        if a.signature() != &self.sig {
            return Err(Error::SignatureMismatch(
                "structure signature differs from the age's".into(),
            ));
        }
        match &self.boundary {
            BoundarySpec::Explicit { members, .. } => Ok(members
                .iter()
                .filter(|m| m.size() <= a.size())
                .all(|m| !embeds_into(m, a))),
            BoundarySpec::Schematic { rule } => Ok(match *rule {
                SchematicRule::CompleteGraph { n } => !has_clique(a, n),
                SchematicRule::IrreducibleKUniformMinN { n, .. } => {
                    !has_irreducible_subset_at_least(a, n)
                }
                SchematicRule::IrreducibleKUniformExactlyN { n, .. } => {
                    !has_irreducible_subset_exactly(a, n)
                }
            }),
            BoundarySpec::Custom { name, is_member, .. } => {
                if name == "none" {
                    return Ok(true);
                }
                let all: Vec<usize> = (0..a.size()).collect();
                for size in 1..=a.size() {
                    for combo in combinations(&all, size) {
                        let subset: BTreeSet<usize> = combo.into_iter().collect();
                        let (sub, _) = a.induced(&subset)?;
                        if is_member(&sub) {
                            return Ok(false);
                        }
                    }
                }
                Ok(true)
            }
        }
    }

    /// Boundary members of exactly `size`, one per iso class.
    pub fn boundary_members(&self, size: usize) -> Result<Arc<Vec<FinStructure>>> {
        if let Some(Some(cached)) = self.boundary_by_size.read().unwrap().get(size) {
            return Ok(cached.clone());
        }
        let members: Vec<FinStructure> = match &self.boundary {
            BoundarySpec::Explicit { members, .. } => members
                .iter()
                .filter(|m| m.size() == size)
                .cloned()
                .collect(),
            BoundarySpec::Schematic { rule } => match *rule {
                SchematicRule::CompleteGraph { n } => {
                    if size == n {
                        vec![fixtures::complete_graph(n)]
                    } else {
                        Vec::new()
                    }
                }
                SchematicRule::IrreducibleKUniformMinN { k, n } => {
                    if size >= n {
                        irreducible_k_uniform(k, size)?
                    } else {
                        Vec::new()
                    }
                }
                SchematicRule::IrreducibleKUniformExactlyN { k, n } => {
                    if size == n {
                        irreducible_k_uniform(k, size)?
                    } else {
                        Vec::new()
                    }
                }
            },
            BoundarySpec::Custom { sig, is_member, .. } => {
                enumerate_structures(sig, size, 64_000)?
                    .into_iter()
                    .filter(|s| is_member(s))
                    .collect()
            }
        };
        let members = Arc::new(members);
        let mut cache = self.boundary_by_size.write().unwrap();
        if cache.len() <= size {
            cache.resize(size + 1, None);
        }
        cache[size] = Some(members.clone());
        Ok(members)
    }

    /// One representative per isomorphism class of age members with exactly
    /// `n` elements, by extending the (n-1)-representatives one element at a
    /// time and pruning by membership.
    pub fn enumerate(&self, n: usize) -> Result<Arc<Vec<FinStructure>>> {
        if n > self.enumeration_cap {
            return Err(Error::CapExceeded(n, self.enumeration_cap));
        }
        if let Some(Some(cached)) = self.members_by_size.read().unwrap().get(n) {
            return Ok(cached.clone());
        }
        let reps: Vec<FinStructure> = if n == 0 {
            vec![FinStructure::empty(self.sig.clone(), 0)]
        } else {
            let prev = self.enumerate(n - 1)?;
            let mut seen: IsoClassMap<()> = IsoClassMap::new();
            let mut out = Vec::new();
            for base in prev.iter() {
                for ext in extensions_of(base) {
                    if self.contains(&ext)? && seen.insert_if_new(ext.clone(), ()) {
                        out.push(ext);
                    }
                }
            }
            out
        };
        let reps = Arc::new(reps);
        let mut cache = self.members_by_size.write().unwrap();
        if cache.len() <= n {
            cache.resize(n + 1, None);
        }
        cache[n] = Some(reps.clone());
        Ok(reps)
    }

    /// All age members with size in `1..=n`, concatenated by size.
    pub fn enumerate_up_to(&self, n: usize) -> Result<Vec<FinStructure>> {
        let mut out = Vec::new();
        for s in 1..=n {
            out.extend(self.enumerate(s)?.iter().cloned());
        }
        Ok(out)
    }

    /// All one-point extension templates of `base` that are age members.
    /// The new point is the last element; templates are distinct as labelled
    /// structures (no iso-dedup: over a fixed sockel, distinct labellings
    /// are distinct types).
    pub fn one_point_extensions(&self, base: &FinStructure) -> Result<Vec<FinStructure>> {
        let mut out = Vec::new();
        for ext in extensions_of(base) {
            if self.contains(&ext)? {
                out.push(ext);
            }
        }
        Ok(out)
    }
}

fn sort_key(s: &FinStructure) -> (usize, usize, Vec<crate::structure::Instance>) {
    (
        s.size(),
        s.instance_count(),
        s.instances().cloned().collect(),
    )
}

fn has_clique(a: &FinStructure, n: usize) -> bool {
    if n == 0 {
        return true;
    }
    if a.size() < n {
        return false;
    }
    let all: Vec<usize> = (0..a.size()).collect();
    combinations(&all, n).into_iter().any(|combo| {
        combo
            .iter()
            .enumerate()
            .all(|(i, &x)| combo[i + 1..].iter().all(|&y| a.gaifman_adjacent(x, y)))
    })
}

fn has_irreducible_subset_at_least(a: &FinStructure, n: usize) -> bool {
    let all: Vec<usize> = (0..a.size()).collect();
    for size in n..=a.size() {
        for combo in combinations(&all, size) {
            let subset: BTreeSet<usize> = combo.into_iter().collect();
            let (sub, _) = a.induced(&subset).expect("in range");
            if sub.is_irreducible() {
                return true;
            }
        }
    }
    false
}

fn has_irreducible_subset_exactly(a: &FinStructure, n: usize) -> bool {
    if a.size() < n {
        return false;
    }
    let all: Vec<usize> = (0..a.size()).collect();
    for combo in combinations(&all, n) {
        let subset: BTreeSet<usize> = combo.into_iter().collect();
        let (sub, _) = a.induced(&subset).expect("in range");
        if sub.is_irreducible() {
            return true;
        }
    }
    false
}

/// All candidate instances involving element `new` in a structure of size
/// `size`, in canonical order.
pub fn candidate_tuples_with(sig: &Signature, size: usize, new: usize) -> Vec<(usize, Vec<usize>)> {
    let others: Vec<usize> = (0..size).filter(|&e| e != new).collect();
    let mut out = Vec::new();
    for (rel, sym) in sig.symbols.iter().enumerate() {
        if sym.arity > size {
            continue;
        }
        match sym.mode {
            Mode::Set => {
                for mut combo in combinations(&others, sym.arity - 1) {
                    combo.push(new);
                    combo.sort_unstable();
                    out.push((rel, combo));
                }
            }
            Mode::Ordered => {
                for arr in arrangements(&others, sym.arity - 1) {
                    for pos in 0..sym.arity {
                        let mut tuple = arr.clone();
                        tuple.insert(pos, new);
                        out.push((rel, tuple));
                    }
                }
            }
        }
    }
    out.sort();
    out.dedup();
    out
}

/// Every structure obtained from `base` by adding one element and any set of
/// instances involving it, instance-free extension first.
pub fn extensions_of(base: &FinStructure) -> Vec<FinStructure> {
    let size = base.size() + 1;
    let new = size - 1;
    let candidates = candidate_tuples_with(base.signature(), size, new);
    assert!(
        candidates.len() < 63,
        "one-point extension space too large to enumerate"
    );
    let mut out = Vec::new();
    for mask in 0u64..(1u64 << candidates.len()) {
        let mut s = FinStructure::empty(base.signature().clone(), size);
        for inst in base.instances() {
            s.insert(inst.rel, inst.tuple.clone()).unwrap();
        }
        for (i, (rel, tuple)) in candidates.iter().enumerate() {
            if mask & (1 << i) != 0 {
                s.insert(*rel, tuple.clone()).unwrap();
            }
        }
        out.push(s);
    }
    out
}

/// One representative per isomorphism class of all structures over `sig`
/// with exactly `n` elements. `budget` caps the labelled candidates
/// examined.
pub fn enumerate_structures(
    sig: &Arc<Signature>,
    n: usize,
    budget: usize,
) -> Result<Vec<FinStructure>> {
    let mut reps = vec![FinStructure::empty(sig.clone(), 0)];
    let mut examined = 0usize;
    for _ in 0..n {
        let mut seen: IsoClassMap<()> = IsoClassMap::new();
        let mut next = Vec::new();
        for base in &reps {
            for ext in extensions_of(base) {
                examined += 1;
                if examined > budget {
                    return Err(Error::Budget(format!(
                        "structure enumeration over {budget} candidates"
                    )));
                }
                if seen.insert_if_new(ext.clone(), ()) {
                    next.push(ext);
                }
            }
        }
        reps = next;
    }
    Ok(reps)
}

/// Irreducible k-uniform hypergraphs with exactly `size` vertices, one per
/// iso class.
fn irreducible_k_uniform(k: usize, size: usize) -> Result<Vec<FinStructure>> {
    let sig = Signature::k_uniform(k);
    Ok(enumerate_structures(&sig, size, 2_000_000)?
        .into_iter()
        .filter(|s| s.is_irreducible())
        .collect())
}

/// Per-boundary-member analysis: the generalised clique number, the type
/// conform subsets, and 3-section completeness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryAnalysis {
    pub omega: usize,
    pub conformal_sets: Vec<BTreeSet<usize>>,
    pub three_gaifman_complete: bool,
}

/// A set A is type conform in `b` when |A| ≥ 2, the complement is nonempty,
/// and any two of its elements are swappable by an isomorphism fixing the
/// complement pointwise.
pub fn boundary_analysis(b: &FinStructure) -> BoundaryAnalysis {
    let all: Vec<usize> = (0..b.size()).collect();
    let mut conformal = Vec::new();
    for size in 2..b.size().max(1) {
        for combo in combinations(&all, size) {
            let a: BTreeSet<usize> = combo.iter().copied().collect();
            if is_conformal(b, &a) {
                conformal.push(a);
            }
        }
    }
    BoundaryAnalysis {
        omega: b.omega(),
        conformal_sets: conformal,
        three_gaifman_complete: b.is_3_irreducible(),
    }
}

pub fn is_conformal(b: &FinStructure, a: &BTreeSet<usize>) -> bool {
    if a.len() < 2 || a.len() >= b.size() {
        return false;
    }
    let rest: BTreeSet<usize> = (0..b.size()).filter(|e| !a.contains(e)).collect();
    let elems: Vec<usize> = a.iter().copied().collect();
    for (i, &x) in elems.iter().enumerate() {
        for &y in &elems[i + 1..] {
            if !swap_iso_fixing_rest(b, &rest, x, y) {
                return false;
            }
        }
    }
    true
}

/// Is the map fixing `rest` pointwise and sending x to y an isomorphism of
/// the induced structures on rest∪{x} and rest∪{y}?
fn swap_iso_fixing_rest(b: &FinStructure, rest: &BTreeSet<usize>, x: usize, y: usize) -> bool {
    let mut left: BTreeSet<usize> = rest.clone();
    left.insert(x);
    let mut right: BTreeSet<usize> = rest.clone();
    right.insert(y);
    let (m1, order1) = b.induced(&left).expect("in range");
    let (m2, order2) = b.induced(&right).expect("in range");
    let mut map = vec![usize::MAX; m1.size()];
    for (i1, &orig) in order1.iter().enumerate() {
        let target = if orig == x { y } else { orig };
        let i2 = order2.iter().position(|&o| o == target).expect("present");
        map[i1] = i2;
    }
    verify_morphism(&m1, &m2, &map, MorphKind::Iso)
}

/// A certificate that the rank order of the age's generic structure has
/// exactly one class, hence the structure is indivisible. Absence of a
/// certificate is never treated as a refutation.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct SingleRankCertificate {
    /// Which of the four sufficient conditions fired (1-4).
    pub item: u8,
    pub checked_members: usize,
    /// Size cap used for non-explicit boundaries, if any.
    pub cap: Option<usize>,
}

/// Run the four single-rank checks over all boundary members up to
/// `size_cap` (explicit boundaries are checked in full and report no cap).
pub fn certify_single_rank(
    age: &AgeHandle,
    size_cap: usize,
) -> Result<Option<SingleRankCertificate>> {
    let explicit = matches!(age.boundary(), BoundarySpec::Explicit { .. });
    if let BoundarySpec::Explicit { members, .. } = age.boundary() {
        let top = members.iter().map(|m| m.size()).max().unwrap_or(0);
        if top > size_cap {
            return Err(Error::CapExceeded(top, size_cap));
        }
    }
    let mut members = Vec::new();
    for size in 1..=size_cap {
        members.extend(age.boundary_members(size)?.iter().cloned());
    }
    let cap = if explicit { None } else { Some(size_cap) };
    let checked = members.len();
    let analyses: Vec<BoundaryAnalysis> = members.iter().map(boundary_analysis).collect();

    // Item (1): every member has ≤ 2 elements or a complete 3-section.
    if members
        .iter()
        .all(|m| m.size() <= 2 || m.is_3_irreducible())
    {
        return Ok(Some(SingleRankCertificate {
            item: 1,
            checked_members: checked,
            cap,
        }));
    }
    // Item (2): no member has a type conform set.
    if analyses.iter().all(|an| an.conformal_sets.is_empty()) {
        return Ok(Some(SingleRankCertificate {
            item: 2,
            checked_members: checked,
            cap,
        }));
    }
    // Item (3): every conform set has a 3-section edge with two elements
    // inside and one outside.
    let item3 = members.iter().zip(&analyses).all(|(m, an)| {
        if m.size() < 3 {
            return true;
        }
        let triples = m.gaifman(3);
        an.conformal_sets
            .iter()
            .all(|a| mixed_triples(m.size(), a).iter().any(|t| triples.contains(t)))
    });
    if item3 {
        return Ok(Some(SingleRankCertificate {
            item: 3,
            checked_members: checked,
            cap,
        }));
    }
    // Item (4): dually, every conform set has a mixed triple missing from
    // the 3-section. The witness construction covers mixed triples with
    // fresh instances, so it needs a symbol of arity ≥ 3 in the signature.
    if age.signature().max_arity() >= 3 {
        let item4 = members.iter().zip(&analyses).all(|(m, an)| {
            if m.size() < 3 {
                return true;
            }
            let triples = m.gaifman(3);
            an.conformal_sets
                .iter()
                .all(|a| mixed_triples(m.size(), a).iter().any(|t| !triples.contains(t)))
        });
        if item4 {
            return Ok(Some(SingleRankCertificate {
                item: 4,
                checked_members: checked,
                cap,
            }));
        }
    }
    Ok(None)
}

/// Triples {a,b,c} with {a,b} ⊆ A and c outside A, ascending.
fn mixed_triples(size: usize, a: &BTreeSet<usize>) -> Vec<Vec<usize>> {
    let inside: Vec<usize> = a.iter().copied().collect();
    let outside: Vec<usize> = (0..size).filter(|e| !a.contains(e)).collect();
    let mut out = Vec::new();
    for pair in combinations(&inside, 2) {
        for &c in &outside {
            let mut t = vec![pair[0], pair[1], c];
            t.sort_unstable();
            out.push(t);
        }
    }
    out
}

/// The length of the linear rank order when the boundary's shape pins it
/// down: {K_n} gives n-1, the min-n hypergraph rule gives n-k+1.
pub fn rule_chain_length(age: &AgeHandle) -> Option<usize> {
    match age.boundary() {
        BoundarySpec::Schematic { rule } => match *rule {
            SchematicRule::CompleteGraph { n } if n >= 2 => Some(n - 1),
            SchematicRule::IrreducibleKUniformMinN { k, n } if n > k && k >= 2 => Some(n - k + 1),
            _ => None,
        },
        BoundarySpec::Explicit { members, .. } => {
            if members.len() == 1 {
                let m = &members[0];
                let n = m.size();
                if n >= 2
                    && m.signature().is_binary()
                    && m.signature().symbols.len() == 1
                    && crate::search::is_isomorphic(m, &fixtures::complete_graph(n))
                {
                    return Some(n - 1);
                }
            }
            None
        }
        _ => None,
    }
}

/// Whether `pattern` has an induced copy inside `host`.
pub fn embeds(pattern: &FinStructure, host: &FinStructure) -> bool {
    !search_morphisms(pattern, host, MorphKind::Embedding, SearchOpts::first()).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::fixtures::*;

    #[test]
    fn normalize_drops_redundant_member() {
        let spec = BoundarySpec::explicit(vec![complete_graph(3), complete_graph(4)]).unwrap();
        let (normal, flag) = normalize_boundary(spec, 6).unwrap();
        match normal {
            BoundarySpec::Explicit { members, .. } => {
                assert_eq!(members.len(), 1);
                assert_eq!(members[0].size(), 3);
            }
            _ => panic!("explicit expected"),
        }
        assert!(flag);
    }

    #[test]
    fn normalize_flags_reducible_member() {
        let spec = BoundarySpec::explicit(vec![path_graph(3)]).unwrap();
        let (_, flag) = normalize_boundary(spec, 6).unwrap();
        assert!(!flag);
    }

    #[test]
    fn schematic_min_n_is_free_amalgamation() {
        let age = AgeHandle::new(BoundarySpec::Schematic {
            rule: SchematicRule::IrreducibleKUniformMinN { k: 3, n: 5 },
        })
        .unwrap();
        assert!(age.free_amalgamation());
    }

    #[test]
    fn k3_membership() {
        let age = AgeHandle::kn_free(3);
        assert!(!age.contains(&complete_graph(3)).unwrap());
        assert!(age.contains(&cycle_graph(5)).unwrap());
        let rado = AgeHandle::all_graphs();
        assert!(rado.contains(&complete_graph(3)).unwrap());
    }

    #[test]
    fn signature_mismatch_is_an_error() {
        let age = AgeHandle::kn_free(3);
        assert!(age.contains(&single_edge(3)).is_err());
    }

    #[test]
    fn enumerate_graphs_n3() {
        // Empty boundary: 4 classes on 3 vertices (0..3 edges).
        let rado = AgeHandle::all_graphs();
        assert_eq!(rado.enumerate(3).unwrap().len(), 4);
        // Forbidding the triangle leaves 3 classes.
        let k3 = AgeHandle::kn_free(3);
        assert_eq!(k3.enumerate(3).unwrap().len(), 3);
        assert_eq!(k3.enumerate(1).unwrap().len(), 1);
    }

    #[test]
    fn enumerate_cap_errors() {
        let age = AgeHandle::kn_free(3);
        assert!(age.enumerate(DEFAULT_ENUMERATION_CAP + 1).is_err());
    }

    #[test]
    fn downward_closure_sample() {
        let age = AgeHandle::kn_free(4);
        for size in 2..=4 {
            for rep in age.enumerate(size).unwrap().iter() {
                let all: Vec<usize> = (0..rep.size()).collect();
                for sub in combinations(&all, size - 1) {
                    let subset: BTreeSet<usize> = sub.into_iter().collect();
                    let (s, _) = rep.induced(&subset).unwrap();
                    assert!(age.contains(&s).unwrap());
                }
            }
        }
    }

    #[test]
    fn boundary_analysis_k4() {
        let an = boundary_analysis(&complete_graph(4));
        assert_eq!(an.omega, 4);
        // Every 2- and 3-subset is conformal: C(4,2)+C(4,3) = 10.
        assert_eq!(an.conformal_sets.len(), 10);
        assert!(!an.three_gaifman_complete);
    }

    #[test]
    fn boundary_analysis_c5() {
        let an = boundary_analysis(&cycle_graph(5));
        assert_eq!(an.omega, 2);
    }

    #[test]
    fn boundary_analysis_five_vertex_hypergraph() {
        let an = boundary_analysis(&five_vertex_four_edge());
        assert_eq!(an.omega, 5);
    }

    #[test]
    fn single_rank_certificates() {
        // Complete 3-uniform hypergraph on 4 vertices: item (1).
        let spec = BoundarySpec::explicit(vec![complete_k_uniform(3, 4)]).unwrap();
        let age = AgeHandle::new(spec).unwrap();
        let cert = certify_single_rank(&age, 6).unwrap().unwrap();
        assert_eq!(cert.item, 1);

        // {K3}: 2-subsets conformal, no covered mixed triple, arity 2: none.
        let k3 = AgeHandle::kn_free(3);
        assert!(certify_single_rank(&k3, 6).unwrap().is_none());

        // Empty boundary: no members, item (1) vacuously.
        let rado = AgeHandle::all_graphs();
        let cert = certify_single_rank(&rado, 4).unwrap().unwrap();
        assert_eq!(cert.item, 1);
    }

    #[test]
    fn rule_chain_lengths() {
        assert_eq!(rule_chain_length(&AgeHandle::kn_free(5)), Some(4));
        let minn = AgeHandle::new(BoundarySpec::Schematic {
            rule: SchematicRule::IrreducibleKUniformMinN { k: 3, n: 5 },
        })
        .unwrap();
        assert_eq!(rule_chain_length(&minn), Some(3));
        let explicit_k4 =
            AgeHandle::new(BoundarySpec::explicit(vec![complete_graph(4)]).unwrap()).unwrap();
        assert_eq!(rule_chain_length(&explicit_k4), Some(3));
    }

    #[test]
    fn min_n_generated_members_are_irreducible_antichain() {
        let age = AgeHandle::new(BoundarySpec::Schematic {
            rule: SchematicRule::IrreducibleKUniformMinN { k: 3, n: 5 },
        })
        .unwrap();
        let at5 = age.boundary_members(5).unwrap();
        assert!(!at5.is_empty());
        for m in at5.iter() {
            assert!(m.is_irreducible());
            assert!(m.size() >= 5);
        }
        for (i, m) in at5.iter().enumerate() {
            for (j, other) in at5.iter().enumerate() {
                if i != j {
                    assert!(!embeds(m, other));
                }
            }
        }
    }

    #[test]
    fn normalize_preserves_membership_small() {
        // Before/after equivalence on all graphs up to size 4.
        let raw = vec![complete_graph(4), complete_graph(3), complete_graph(3)];
        let age = AgeHandle::new(BoundarySpec::explicit(raw.clone()).unwrap()).unwrap();
        let sig = Signature::graph();
        for size in 1..=6 {
            for s in enumerate_structures(&sig, size, 60_000).unwrap() {
                let manual = raw
                    .iter()
                    .filter(|m| m.size() <= s.size())
                    .all(|m| !embeds(m, &s));
                assert_eq!(age.contains(&s).unwrap(), manual);
            }
        }
    }
}
