//! Divisibility machinery: the lexicographic P/Q/R partition, n-age
//! indivisibility searches, bundle colouring selection, neutral copies, and
//! the classifier tying rank comparison to certificates.

use std::collections::BTreeSet;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::age::{certify_single_rank, rule_chain_length, AgeHandle, SingleRankCertificate};
use crate::bundle::Bundle;
use crate::error::{Error, Result};
use crate::files::StructureFile;
use crate::generic::{ElementFilter, FixingQuery, GenericStructure};
use crate::search::{search_morphisms, MorphKind, SearchOpts};
use crate::structure::{combinations, FinStructure};
use crate::types::{rank_contains, rank_vector, RankCaps, TypeDescriptor};

/// Lexicographic order on finite element sets: x below y when the largest
/// element of the symmetric difference lies in y. Equal sets compare false.
pub fn lex_less(x: &BTreeSet<usize>, y: &BTreeSet<usize>) -> bool {
    match x.symmetric_difference(y).max() {
        None => false,
        Some(m) => y.contains(m),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PqrClass {
    P,
    Q,
    R,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PqrPartition {
    pub t: StructureFile,
    pub s: StructureFile,
    pub assignment: Vec<PqrClass>,
    pub prefix: usize,
    pub sockel_cap: usize,
}

impl PqrPartition {
    pub fn class_elements(&self, class: PqrClass) -> Vec<usize> {
        self.assignment
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == class)
            .map(|(e, _)| e)
            .collect()
    }
}

/// All sockel candidates below `n` with at most `cap` elements, ascending in
/// the lexicographic set order (which coincides with lexicographic order of
/// the descending element sequences).
fn sockels_below(n: usize, cap: usize) -> Vec<BTreeSet<usize>> {
    let pool: Vec<usize> = (0..n).collect();
    let mut all: Vec<(Vec<usize>, BTreeSet<usize>)> = Vec::new();
    for size in 0..=cap.min(n) {
        for combo in combinations(&pool, size) {
            let set: BTreeSet<usize> = combo.iter().copied().collect();
            let mut key: Vec<usize> = combo;
            key.reverse();
            all.push((key, set));
        }
    }
    all.sort();
    all.into_iter().map(|(_, s)| s).collect()
}

/// Does `sockel ∪ {n}` induce a copy of the template with n as the slot (the
/// sockel may be matched by any isomorphism)?
fn realizes_template(
    snap: &FinStructure,
    sockel: &BTreeSet<usize>,
    n: usize,
    template: &FinStructure,
) -> bool {
    if sockel.len() + 1 != template.size() || sockel.contains(&n) {
        return false;
    }
    let mut domain = sockel.clone();
    domain.insert(n);
    let (sub, order) = match snap.induced(&domain) {
        Ok(v) => v,
        Err(_) => return false,
    };
    let n_pos = order.iter().position(|&o| o == n).unwrap();
    let star = template.size() - 1;
    let fixed = [(star, n_pos)];
    let opts = SearchOpts {
        limit: 1,
        fixed: &fixed,
        allowed: None,
    };
    !search_morphisms(template, &sub, MorphKind::Iso, opts).is_empty()
}

/// The lexicographically least sockel below n realising the template.
fn least_realizer(
    snap: &FinStructure,
    n: usize,
    template: &FinStructure,
    cap: usize,
) -> Option<BTreeSet<usize>> {
    sockels_below(n, cap)
        .into_iter()
        .find(|f| realizes_template(snap, f, n, template))
}

/// Partition the element prefix by which of the two types is realised first
/// in the lexicographic sockel order: P when the least t-sockel strictly
/// precedes every s-sockel, Q symmetrically, R otherwise.
pub fn build_pqr(
    g: &GenericStructure,
    t_template: &FinStructure,
    s_template: &FinStructure,
    prefix: usize,
    sockel_cap: usize,
) -> Result<PqrPartition> {
    if prefix > g.size() {
        return Err(Error::Precondition(format!(
            "prefix {prefix} exceeds snapshot size {}",
            g.size()
        )));
    }
    if sockel_cap > 3 {
        return Err(Error::CapExceeded(sockel_cap, 3));
    }
    let snap = g.snapshot();
    let mut assignment = Vec::with_capacity(prefix);
    for n in 0..prefix {
        let ft = least_realizer(snap, n, t_template, sockel_cap);
        let fs = least_realizer(snap, n, s_template, sockel_cap);
        let class = match (ft, fs) {
            (Some(a), Some(b)) => {
                if lex_less(&a, &b) {
                    PqrClass::P
                } else if lex_less(&b, &a) {
                    PqrClass::Q
                } else {
                    PqrClass::R
                }
            }
            (Some(_), None) => PqrClass::P,
            (None, Some(_)) => PqrClass::Q,
            (None, None) => PqrClass::R,
        };
        assignment.push(class);
    }
    Ok(PqrPartition {
        t: StructureFile::from_structure(t_template),
        s: StructureFile::from_structure(s_template),
        assignment,
        prefix,
        sockel_cap,
    })
}

/// Definition-level recheck of one element's class, quantifying over all
/// realising sockels rather than taking least representatives.
pub fn pqr_recheck(
    g: &GenericStructure,
    part: &PqrPartition,
    n: usize,
) -> Result<PqrClass> {
    let t = part.t.clone().into_structure()?;
    let s = part.s.clone().into_structure()?;
    let snap = g.snapshot();
    let t_socks: Vec<BTreeSet<usize>> = sockels_below(n, part.sockel_cap)
        .into_iter()
        .filter(|f| realizes_template(snap, f, n, &t))
        .collect();
    let s_socks: Vec<BTreeSet<usize>> = sockels_below(n, part.sockel_cap)
        .into_iter()
        .filter(|f| realizes_template(snap, f, n, &s))
        .collect();
    let in_p = t_socks
        .iter()
        .any(|f| s_socks.iter().all(|e| lex_less(f, e)));
    let in_q = s_socks
        .iter()
        .any(|e| t_socks.iter().all(|f| lex_less(e, f)));
    Ok(if in_p {
        PqrClass::P
    } else if in_q {
        PqrClass::Q
    } else {
        PqrClass::R
    })
}

/// Search for an age member B such that every partition of its elements
/// into `parts` classes leaves `a` embeddable in some class. Returns the
/// first (smallest, canonical order) verified B, or None at the cap.
pub fn n_age_indivisible_search(
    age: &AgeHandle,
    a: &FinStructure,
    parts: usize,
    b_cap: usize,
) -> Result<Option<FinStructure>> {
    if !age.contains(a)? {
        return Err(Error::Precondition("pattern must be an age member".into()));
    }
    for size in a.size()..=b_cap {
        let budget = (parts as u64).saturating_pow(size as u32);
        if budget > 2_000_000 {
            return Err(Error::Budget(format!(
                "partition enumeration {parts}^{size}"
            )));
        }
        for b in age.enumerate(size)?.iter() {
            if !crate::age::embeds(a, b) {
                continue;
            }
            let mut all_good = true;
            let mut assign = vec![0usize; size];
            'parts: loop {
                // Check: some class embeds a.
                let mut hit = false;
                for class in 0..parts {
                    let subset: BTreeSet<usize> = (0..size)
                        .filter(|&e| assign[e] == class)
                        .collect();
                    if subset.len() >= a.size() {
                        let (sub, _) = b.induced(&subset)?;
                        if crate::age::embeds(a, &sub) {
                            hit = true;
                            break;
                        }
                    }
                }
                if !hit {
                    all_good = false;
                    break 'parts;
                }
                let mut k = 0;
                loop {
                    if k == size {
                        break 'parts;
                    }
                    assign[k] += 1;
                    if assign[k] < parts {
                        break;
                    }
                    assign[k] = 0;
                    k += 1;
                }
            }
            if all_good {
                return Ok(Some(b.clone()));
            }
        }
    }
    Ok(None)
}

/// Outcome of a colouring selection search.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectOutcome {
    pub epsilon: Option<Vec<usize>>,
    pub fragment_bound: usize,
    pub fragments_checked: usize,
}

/// Search for a class selection ε (one class per member) such that every
/// realised fragment of the bundle's typeset (≤ fragment_bound, from a
/// window) places into the union of the selected classes while fixing the
/// sockel. Exhaustion is bound-stamped evidence, never a disproof.
pub fn bundle_colouring_select(
    g: &GenericStructure,
    b: &Bundle,
    classes: &[Vec<BTreeSet<usize>>],
    fragment_bound: usize,
    pool_window: usize,
) -> Result<SelectOutcome> {
    if classes.len() != b.len() {
        return Err(Error::Precondition(
            "one class list per bundle member required".into(),
        ));
    }
    // Classes must partition each member's realised typeset.
    for (j, t) in b.members().iter().enumerate() {
        let realised: BTreeSet<usize> = t.realized(g.snapshot()).into_iter().collect();
        let mut union: BTreeSet<usize> = BTreeSet::new();
        let mut total = 0usize;
        for c in &classes[j] {
            total += c.len();
            union.extend(c.iter().copied());
        }
        if union != realised || total != union.len() {
            return Err(Error::Precondition(format!(
                "classes of member {j} do not partition its realised typeset"
            )));
        }
    }
    let pool: Vec<usize> = b
        .realized(g.snapshot())
        .into_iter()
        .take(pool_window)
        .collect();
    let mut idx = vec![0usize; b.len()];
    let mut checked_total = 0usize;
    'eps: loop {
        if idx.iter().zip(classes).all(|(&i, c)| i < c.len()) {
            let p_eps: BTreeSet<usize> = idx
                .iter()
                .zip(classes)
                .flat_map(|(&i, c)| c[i].iter().copied())
                .collect();
            let mut ok = true;
            'frag: for size in 1..=fragment_bound.min(pool.len()) {
                for domain in combinations(&pool, size) {
                    checked_total += 1;
                    let q = FixingQuery::new(b.sockel().to_vec(), domain.clone())
                        .with_all_filters(ElementFilter::In(p_eps.clone()));
                    if g.exists_fixing_now(&q)?.is_none() {
                        ok = false;
                        break 'frag;
                    }
                }
            }
            if ok {
                return Ok(SelectOutcome {
                    epsilon: Some(idx),
                    fragment_bound,
                    fragments_checked: checked_total,
                });
            }
        }
        let mut k = 0;
        loop {
            if k == idx.len() {
                break 'eps;
            }
            idx[k] += 1;
            if idx[k] < classes[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
    Ok(SelectOutcome {
        epsilon: None,
        fragment_bound,
        fragments_checked: checked_total,
    })
}

/// Build `count` fresh elements tracking the first `count` realised typeset
/// elements of the bundle, each free of the tracked prefix: the built list
/// is in free position to the enumeration prefix and realises the same
/// types step by step.
pub fn neutral_copy(
    g: &mut GenericStructure,
    b: &Bundle,
    count: usize,
) -> Result<Vec<usize>> {
    let u: Vec<usize> = b.realized(g.snapshot()).into_iter().take(count).collect();
    if u.len() < count {
        return Err(Error::Precondition(
            "not enough realised typeset elements".into(),
        ));
    }
    let mut v: Vec<usize> = Vec::new();
    for i in 0..count {
        // Base region: sockel, the built prefix, and the tracked prefix.
        let mut base: BTreeSet<usize> = b.sockel_set();
        base.extend(v.iter().copied());
        base.extend(u.iter().take(i + 1).copied());
        let base_sorted: Vec<usize> = base.iter().copied().collect();
        let pos = |e: usize| base_sorted.iter().position(|&x| x == e).unwrap();
        let n = base_sorted.len();
        let (sub, order) = g.snapshot().induced(&base)?;
        let mut a = FinStructure::empty(g.snapshot().signature().clone(), n + 1);
        for inst in sub.instances() {
            let tuple: Vec<usize> = inst.tuple.iter().map(|&e| pos(order[e])).collect();
            a.insert(inst.rel, tuple)?;
        }
        // The new point mirrors u_i: relations to the sockel as u_i has,
        // and to v_j as u_i has to u_j; none to the tracked prefix.
        for inst in g.snapshot().incident(u[i]).to_vec() {
            let mut ok = true;
            let tuple: Vec<usize> = inst
                .tuple
                .iter()
                .map(|&e| {
                    if e == u[i] {
                        n
                    } else if b.sockel().contains(&e) {
                        pos(e)
                    } else if let Some(j) = u.iter().take(i).position(|&x| x == e) {
                        pos(v[j])
                    } else {
                        ok = false;
                        0
                    }
                })
                .collect();
            if ok {
                a.insert(inst.rel, tuple)?;
            }
        }
        let anchored: Vec<(usize, usize)> = base_sorted
            .iter()
            .enumerate()
            .map(|(k, &e)| (k, e))
            .collect();
        let map = g.realize_extension(&crate::generic::ExtensionRequest { a, anchored })?;
        v.push(map[n]);
    }
    Ok(v)
}

/// Verify the built copy prefix is in free position to the tracked prefix
/// and that every joint successor typeset intersection is realisable.
pub fn neutral_copy_audit(
    g: &mut GenericStructure,
    b: &Bundle,
    u: &[usize],
    v: &[usize],
    t: &TypeDescriptor,
    bound: usize,
) -> Result<bool> {
    for &x in v {
        for &y in u {
            if g.snapshot().gaifman_adjacent(x, y) {
                return Ok(false);
            }
        }
    }
    // For successors over small subsets of the built copy, the joint
    // typeset with t must be realisable.
    for size in 1..=bound.min(v.len()) {
        for e in combinations(v, size) {
            let mut sockel: BTreeSet<usize> = b.sockel_set();
            sockel.extend(e.iter().copied());
            for s_type in crate::types::types_over(g, &sockel)? {
                // Only successors of the member t descends from matter.
                let restricted = s_type.restrict(&b.sockel_set())?;
                let t_restricted = t.restrict(&b.sockel_set())?;
                if !restricted.same_type(&t_restricted) {
                    continue;
                }
                if !t.in_free_position(g.snapshot(), &s_type)? {
                    continue;
                }
                let joint = t.join(g, &s_type)?;
                let probe = (0..g.size()).find(|&y| !joint.sockel().contains(&y));
                let Some(mover) = probe else { continue };
                let q = FixingQuery::new(vec![], vec![mover])
                    .with_filter(mover, ElementFilter::Typeset(joint.clone()));
                if g.exists_fixing(&q, true)?.is_none() {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "kebab-case")]
pub enum ClassifierVerdict {
    Divisible {
        witness_t: StructureFile,
        witness_s: StructureFile,
        separator_ts: StructureFile,
        separator_st: StructureFile,
        reverified: bool,
    },
    IndivisibleCertified {
        certificate: String,
        chain_length: usize,
        single_rank: Option<SingleRankCertificate>,
    },
    RankLinearEvidence {
        observed_chain: usize,
    },
    Inconclusive {
        reason: String,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassifierReport {
    #[serde(flatten)]
    pub verdict: ClassifierVerdict,
    pub sockel_bound: usize,
    pub size_bound: usize,
    pub type_classes: usize,
    pub members_compared: usize,
    pub observed_rank_count: usize,
    pub timing_ms: u128,
}

/// One representative per isomorphism class (with a distinguished slot) of
/// types with sockel size ≤ bound.
pub fn type_census(age: &AgeHandle, sockel_bound: usize) -> Result<Vec<FinStructure>> {
    let mut census: Vec<FinStructure> = Vec::new();
    for f in 0..=sockel_bound {
        for rep in age.enumerate(f)?.iter() {
            for ext in age.one_point_extensions(rep)? {
                let star = ext.size() - 1;
                let duplicate = census.iter().any(|t| {
                    t.size() == ext.size() && {
                        let fixed = [(star, star)];
                        let opts = SearchOpts {
                            limit: 1,
                            fixed: &fixed,
                            allowed: None,
                        };
                        !search_morphisms(t, &ext, MorphKind::Iso, opts).is_empty()
                    }
                });
                if !duplicate {
                    census.push(ext);
                }
            }
        }
    }
    Ok(census)
}

/// The headline classifier: enumerate type classes, compare ranks pairwise
/// at the bound, report a divisibility witness pair or a certificate, or
/// honest bound-stamped evidence of rank linearity.
pub fn classify(
    age: &AgeHandle,
    sockel_bound: usize,
    size_bound: usize,
    caps: &RankCaps,
) -> Result<ClassifierReport> {
    let start = Instant::now();
    let report = |verdict: ClassifierVerdict,
                      type_classes: usize,
                      members: usize,
                      observed: usize|
     -> ClassifierReport {
        ClassifierReport {
            verdict,
            sockel_bound,
            size_bound,
            type_classes,
            members_compared: members,
            observed_rank_count: observed,
            timing_ms: start.elapsed().as_millis(),
        }
    };
    if !age.free_amalgamation() {
        return Ok(report(
            ClassifierVerdict::Inconclusive {
                reason: "boundary is not certified free-amalgamation".into(),
            },
            0,
            0,
            0,
        ));
    }
    let census = type_census(age, sockel_bound)?;
    let members = age.enumerate_up_to(size_bound)?;
    let vectors: Vec<Vec<bool>> = crate::par::map_collect(&census, |t| {
        rank_vector(age, t, &members, caps)
    })
    .into_iter()
    .collect::<Result<_>>()?;
    let mut distinct: Vec<Vec<bool>> = vectors.clone();
    distinct.sort();
    distinct.dedup();
    let observed = distinct.len();

    // Scan pairs for incomparability.
    for i in 0..census.len() {
        for j in i + 1..census.len() {
            let vi = &vectors[i];
            let vj = &vectors[j];
            let wi = (0..members.len()).find(|&k| vi[k] && !vj[k]);
            let wj = (0..members.len()).find(|&k| vj[k] && !vi[k]);
            if let (Some(a), Some(b)) = (wi, wj) {
                // Re-verify the witnesses through the membership oracle.
                let reverified = rank_contains(age, &census[i], &members[a], caps)?
                    && !rank_contains(age, &census[j], &members[a], caps)?
                    && rank_contains(age, &census[j], &members[b], caps)?
                    && !rank_contains(age, &census[i], &members[b], caps)?;
                return Ok(report(
                    ClassifierVerdict::Divisible {
                        witness_t: StructureFile::from_structure(&census[i]),
                        witness_s: StructureFile::from_structure(&census[j]),
                        separator_ts: StructureFile::from_structure(&members[a]),
                        separator_st: StructureFile::from_structure(&members[b]),
                        reverified,
                    },
                    census.len(),
                    members.len(),
                    observed,
                ));
            }
        }
    }

    // Certificates.
    if let Some(cert) = certify_single_rank(age, size_bound.max(5))? {
        return Ok(report(
            ClassifierVerdict::IndivisibleCertified {
                certificate: format!("single-rank item ({})", cert.item),
                chain_length: 1,
                single_rank: Some(cert),
            },
            census.len(),
            members.len(),
            observed,
        ));
    }
    if let Some(chain) = rule_chain_length(age) {
        return Ok(report(
            ClassifierVerdict::IndivisibleCertified {
                certificate: "forbidden-clique chain rule".into(),
                chain_length: chain,
                single_rank: None,
            },
            census.len(),
            members.len(),
            observed,
        ));
    }
    Ok(report(
        ClassifierVerdict::RankLinearEvidence {
            observed_chain: observed,
        },
        census.len(),
        members.len(),
        observed,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::age::BoundarySpec;
    use crate::generic::GrowthMode;
    use crate::structure::fixtures::*;
    use crate::structure::Signature;

    #[test]
    fn lex_less_examples() {
        let s = |v: &[usize]| v.iter().copied().collect::<BTreeSet<usize>>();
        assert!(lex_less(&s(&[0, 1]), &s(&[2])));
        assert!(!lex_less(&s(&[3]), &s(&[0, 1])));
        assert!(!lex_less(&s(&[1, 2]), &s(&[1, 2])));
    }

    #[test]
    fn lex_less_strict_total_order_small() {
        // Antisymmetry and totality over all subsets of {0..6}.
        let mut subsets: Vec<BTreeSet<usize>> = Vec::new();
        for mask in 0u32..(1 << 7) {
            subsets.push((0..7).filter(|&b| mask & (1 << b) != 0).collect());
        }
        for x in &subsets {
            for y in &subsets {
                if x == y {
                    assert!(!lex_less(x, y));
                } else {
                    assert_ne!(lex_less(x, y), lex_less(y, x));
                }
            }
        }
        // Transitivity on a sample.
        for x in subsets.iter().step_by(5) {
            for y in subsets.iter().step_by(7) {
                for z in subsets.iter().step_by(11) {
                    if lex_less(x, y) && lex_less(y, z) {
                        assert!(lex_less(x, z));
                    }
                }
            }
        }
    }

    fn unary_generic(seed: u64) -> GenericStructure {
        let age = AgeHandle::unbounded(Signature::unary());
        let mut g = GenericStructure::new(age, seed, GrowthMode::Dovetail).unwrap();
        g.grow_to(24).unwrap();
        g
    }

    #[test]
    fn pqr_on_unary_age_is_two_classes() {
        let g = unary_generic(1);
        // t: the flagged 1-type; s: the unflagged one. Sockels are empty.
        let mut t = FinStructure::empty(Signature::unary(), 1);
        t.insert(0, vec![0]).unwrap();
        let s = FinStructure::empty(Signature::unary(), 1);
        let part = build_pqr(&g, &t, &s, 20, 2).unwrap();
        for (e, class) in part.assignment.iter().enumerate() {
            let flagged = g.snapshot().contains(0, vec![e]);
            match class {
                PqrClass::P => assert!(flagged),
                PqrClass::Q => assert!(!flagged),
                PqrClass::R => panic!("unary types leave no R class"),
            }
        }
        assert!(part.class_elements(PqrClass::P).len() > 0);
        assert!(part.class_elements(PqrClass::Q).len() > 0);
    }

    #[test]
    fn pqr_equal_types_have_empty_p_and_q() {
        let g = unary_generic(2);
        let mut t = FinStructure::empty(Signature::unary(), 1);
        t.insert(0, vec![0]).unwrap();
        let part = build_pqr(&g, &t.clone(), &t, 20, 2).unwrap();
        assert!(part.class_elements(PqrClass::P).is_empty());
        assert!(part.class_elements(PqrClass::Q).is_empty());
    }

    #[test]
    fn pqr_recheck_agrees() {
        let age = AgeHandle::all_graphs();
        let mut g = GenericStructure::new(age, 3, GrowthMode::Dovetail).unwrap();
        g.grow_to(30).unwrap();
        let mut t = FinStructure::empty(Signature::graph(), 2);
        t.insert(0, vec![0, 1]).unwrap();
        let s = FinStructure::empty(Signature::graph(), 2);
        let part = build_pqr(&g, &t, &s, 30, 2).unwrap();
        for n in 0..part.prefix {
            assert_eq!(pqr_recheck(&g, &part, n).unwrap(), part.assignment[n]);
        }
    }

    #[test]
    fn pigeonhole_vertex_search() {
        // Parts may be empty, so a single vertex already satisfies the
        // property: whichever part holds it embeds the vertex.
        let age = AgeHandle::all_graphs();
        let vertex = FinStructure::empty(Signature::graph(), 1);
        let b = n_age_indivisible_search(&age, &vertex, 2, 4)
            .unwrap()
            .unwrap();
        assert_eq!(b.size(), 1);
    }

    #[test]
    fn edge_search_finds_triangle() {
        let age = AgeHandle::all_graphs();
        let edge = path_graph(2);
        let b = n_age_indivisible_search(&age, &edge, 2, 5)
            .unwrap()
            .unwrap();
        // The least graph whose every 2-partition has a monochromatic-part
        // edge is the triangle.
        assert_eq!(b.size(), 3);
        assert!(crate::search::is_isomorphic(&b, &complete_graph(3)));
    }

    #[test]
    fn search_rejects_non_member_pattern() {
        let age = AgeHandle::kn_free(3);
        assert!(n_age_indivisible_search(&age, &complete_graph(3), 2, 5).is_err());
    }

    #[test]
    fn classify_k3_free_certified_chain_two() {
        let age = AgeHandle::kn_free(3);
        let caps = RankCaps::default();
        let report = classify(&age, 2, 4, &caps).unwrap();
        match &report.verdict {
            ClassifierVerdict::IndivisibleCertified { chain_length, .. } => {
                assert_eq!(*chain_length, 2);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
        assert_eq!(report.observed_rank_count, 2);
    }

    #[test]
    fn classify_unary_divisible() {
        let age = AgeHandle::unbounded(Signature::unary());
        let caps = RankCaps::default();
        let report = classify(&age, 1, 3, &caps).unwrap();
        match &report.verdict {
            ClassifierVerdict::Divisible { reverified, .. } => assert!(reverified),
            v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn classify_two_colour_triangle_free_divisible() {
        // Two edge colours, both triangle-free, no doubled edge: the two
        // edge types over a vertex have incomparable ranks.
        let sig = Signature::two_edge_colours();
        let r_triangle = {
            let mut s = FinStructure::empty(sig.clone(), 3);
            s.insert(0, vec![0, 1]).unwrap();
            s.insert(0, vec![0, 2]).unwrap();
            s.insert(0, vec![1, 2]).unwrap();
            s
        };
        let b_triangle = {
            let mut s = FinStructure::empty(sig.clone(), 3);
            s.insert(1, vec![0, 1]).unwrap();
            s.insert(1, vec![0, 2]).unwrap();
            s.insert(1, vec![1, 2]).unwrap();
            s
        };
        let double_edge = {
            let mut s = FinStructure::empty(sig.clone(), 2);
            s.insert(0, vec![0, 1]).unwrap();
            s.insert(1, vec![0, 1]).unwrap();
            s
        };
        let age = AgeHandle::new(
            BoundarySpec::explicit(vec![r_triangle, b_triangle, double_edge]).unwrap(),
        )
        .unwrap();
        assert!(age.free_amalgamation());
        let caps = RankCaps::default();
        let report = classify(&age, 1, 3, &caps).unwrap();
        match &report.verdict {
            ClassifierVerdict::Divisible {
                reverified,
                separator_ts,
                separator_st,
                ..
            } => {
                assert!(reverified);
                // Separators are a single edge of each colour.
                assert_eq!(separator_ts.elements, 2);
                assert_eq!(separator_st.elements, 2);
            }
            v => panic!("unexpected verdict {v:?}"),
        }
    }

    #[test]
    fn classify_refuses_reducible_boundary() {
        let age =
            AgeHandle::new(BoundarySpec::explicit(vec![path_graph(3)]).unwrap()).unwrap();
        let caps = RankCaps::default();
        let report = classify(&age, 1, 3, &caps).unwrap();
        assert!(matches!(
            report.verdict,
            ClassifierVerdict::Inconclusive { .. }
        ));
    }

    #[test]
    fn bundle_select_single_member_single_class() {
        let age = AgeHandle::all_graphs();
        let mut g = GenericStructure::new(age, 4, GrowthMode::Dovetail).unwrap();
        g.advance(40).unwrap();
        let mut t = FinStructure::empty(Signature::graph(), 2);
        t.insert(0, vec![0, 1]).unwrap();
        let td = TypeDescriptor::new(&g, vec![0], t).unwrap();
        let b = Bundle::new(vec![td.clone()]).unwrap();
        let realised: BTreeSet<usize> = td.realized(g.snapshot()).into_iter().collect();
        let classes = vec![vec![realised]];
        let out = bundle_colouring_select(&g, &b, &classes, 2, 6).unwrap();
        assert_eq!(out.epsilon, Some(vec![0]));
    }

    #[test]
    fn neutral_copy_zero_is_empty() {
        let age = AgeHandle::all_graphs();
        let mut g = GenericStructure::new(age, 5, GrowthMode::Dovetail).unwrap();
        g.advance(20).unwrap();
        let b = Bundle::all_over(&g, &[0].into()).unwrap();
        let v = neutral_copy(&mut g, &b, 0).unwrap();
        assert!(v.is_empty());
    }

    #[test]
    fn neutral_copy_is_free_of_prefix_and_tracks_types() {
        let age = AgeHandle::all_graphs();
        let mut g = GenericStructure::new(age, 6, GrowthMode::Dovetail).unwrap();
        g.advance(60).unwrap();
        let b = Bundle::all_over(&g, &[0].into()).unwrap();
        let u: Vec<usize> = b.realized(g.snapshot()).into_iter().take(5).collect();
        let v = neutral_copy(&mut g, &b, 5).unwrap();
        assert_eq!(v.len(), 5);
        for &x in &v {
            for &y in &u {
                assert!(!g.snapshot().gaifman_adjacent(x, y));
            }
        }
        // v_i realises the same member as u_i.
        for i in 0..5 {
            assert_eq!(
                b.member_of(g.snapshot(), u[i]),
                b.member_of(g.snapshot(), v[i])
            );
        }
        // Mutual relations mirror the tracked prefix.
        for i in 0..5 {
            for j in 0..i {
                assert_eq!(
                    g.snapshot().gaifman_adjacent(u[i], u[j]),
                    g.snapshot().gaifman_adjacent(v[i], v[j])
                );
            }
        }
    }
}

#[cfg(test)]
mod neutrality_tests {
    use super::*;
    use crate::age::AgeHandle;
    use crate::generic::GrowthMode;
    use crate::structure::Signature;

    #[test]
    fn neutral_copy_passes_the_joint_typeset_audit() {
        let age = AgeHandle::all_graphs();
        let mut g = GenericStructure::new(age, 9, GrowthMode::Dovetail).unwrap();
        g.advance(80).unwrap();
        let b = Bundle::all_over(&g, &[0].into()).unwrap();
        let u: Vec<usize> = b.realized(g.snapshot()).into_iter().take(5).collect();
        let v = neutral_copy(&mut g, &b, 5).unwrap();
        // A successor of the first member over a realised typeset element.
        let member = b.members()[b.member_of(g.snapshot(), u[0]).unwrap()].clone();
        let mut sockel = b.sockel_set();
        sockel.insert(u[0]);
        let t = crate::types::types_over(&g, &sockel)
            .unwrap()
            .into_iter()
            .find(|s| s.is_successor_of(&member))
            .unwrap();
        assert!(neutral_copy_audit(&mut g, &b, &u, &v, &t, 2).unwrap());
    }
}
