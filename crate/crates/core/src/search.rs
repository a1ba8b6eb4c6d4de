//! Backtracking search for monomorphisms, embeddings and isomorphisms
//! between finite structures, plus a definition-level verifier kept
//! independent of the search path.

use serde::{Deserialize, Serialize};

use crate::structure::{FinStructure, Instance, Mode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MorphKind {
    /// Injective, preserves instances.
    Mono,
    /// Monomorphism that also reflects instances on its image.
    Embedding,
    /// Surjective embedding.
    Iso,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Morphism {
    pub kind: MorphKind,
    /// Image of each source element.
    pub map: Vec<usize>,
}

/// Search constraints: a partial map that any result must extend, and an
/// optional per-pair admissibility filter on (source element, candidate
/// image).
#[derive(Default)]
pub struct SearchOpts<'a> {
    pub limit: usize,
    pub fixed: &'a [(usize, usize)],
    pub allowed: Option<&'a (dyn Fn(usize, usize) -> bool + Sync)>,
}

impl<'a> SearchOpts<'a> {
    pub fn first() -> Self {
        SearchOpts {
            limit: 1,
            fixed: &[],
            allowed: None,
        }
    }

    pub fn all() -> Self {
        SearchOpts {
            limit: usize::MAX,
            fixed: &[],
            allowed: None,
        }
    }
}

struct State<'a> {
    src: &'a FinStructure,
    dst: &'a FinStructure,
    kind: MorphKind,
    map: Vec<usize>,
    inv: Vec<usize>,
    src_by_elem: Vec<Vec<&'a Instance>>,
    dst_by_elem: Vec<Vec<&'a Instance>>,
    out: Vec<Morphism>,
    limit: usize,
}

const UNSET: usize = usize::MAX;

/// Up to `opts.limit` morphisms of `kind` from `src` to `dst`, extending
/// `opts.fixed`, images passing `opts.allowed`. Results come in
/// lexicographic order of the map; an empty result means the exhaustive
/// search found none.
pub fn search_morphisms(
    src: &FinStructure,
    dst: &FinStructure,
    kind: MorphKind,
    opts: SearchOpts<'_>,
) -> Vec<Morphism> {
    if opts.limit == 0 || src.signature() != dst.signature() {
        return Vec::new();
    }
    if src.size() > dst.size() {
        return Vec::new();
    }
    if kind == MorphKind::Iso && src.size() != dst.size() {
        return Vec::new();
    }

    fn index(s: &FinStructure) -> Vec<Vec<&Instance>> {
        let mut v: Vec<Vec<&Instance>> = vec![Vec::new(); s.size()];
        for inst in s.instances() {
            for &e in &inst.tuple {
                v[e].push(inst);
            }
        }
        v
    }

    let mut st = State {
        src,
        dst,
        kind,
        map: vec![UNSET; src.size()],
        inv: vec![UNSET; dst.size()],
        src_by_elem: index(src),
        dst_by_elem: index(dst),
        out: Vec::new(),
        limit: opts.limit,
    };

    for &(s, t) in opts.fixed {
        if s >= src.size() || t >= dst.size() {
            return Vec::new();
        }
        if st.map[s] != UNSET && st.map[s] != t {
            return Vec::new();
        }
        if st.inv[t] != UNSET && st.inv[t] != s {
            return Vec::new();
        }
        st.map[s] = t;
        st.inv[t] = s;
    }
    // Fixed pairs must themselves be consistent.
    for &(s, _) in opts.fixed {
        if !consistent(&st, s) {
            return Vec::new();
        }
    }

    extend(&mut st, 0, &opts);
    st.out
}

fn extend(st: &mut State<'_>, next: usize, opts: &SearchOpts<'_>) {
    if st.out.len() >= st.limit {
        return;
    }
    let mut s = next;
    while s < st.map.len() && st.map[s] != UNSET {
        s += 1;
    }
    if s == st.map.len() {
        if st.kind == MorphKind::Iso && st.inv.iter().any(|&x| x == UNSET) {
            return;
        }
        st.out.push(Morphism {
            kind: st.kind,
            map: st.map.clone(),
        });
        return;
    }
    for t in 0..st.inv.len() {
        if st.inv[t] != UNSET {
            continue;
        }
        if let Some(f) = opts.allowed {
            if !f(s, t) {
                continue;
            }
        }
        st.map[s] = t;
        st.inv[t] = s;
        if consistent(st, s) {
            extend(st, s + 1, opts);
        }
        st.map[s] = UNSET;
        st.inv[t] = UNSET;
        if st.out.len() >= st.limit {
            return;
        }
    }
}

/// Incremental consistency after assigning source element `s`: every fully
/// mapped source instance through `s` must land in the target, and for
/// embeddings every target instance through `map[s]` inside the image must
/// pull back.
fn consistent(st: &State<'_>, s: usize) -> bool {
    let t = st.map[s];
    for inst in &st.src_by_elem[s] {
        if inst.tuple.iter().all(|&e| st.map[e] != UNSET) {
            let mapped: Vec<usize> = inst.tuple.iter().map(|&e| st.map[e]).collect();
            if !contains_mode(st.dst, inst.rel, mapped) {
                return false;
            }
        }
    }
    if st.kind != MorphKind::Mono {
        for inst in &st.dst_by_elem[t] {
            if inst.tuple.iter().all(|&e| st.inv[e] != UNSET) {
                let pulled: Vec<usize> = inst.tuple.iter().map(|&e| st.inv[e]).collect();
                if !contains_mode(st.src, inst.rel, pulled) {
                    return false;
                }
            }
        }
    }
    true
}

fn contains_mode(s: &FinStructure, rel: usize, mut tuple: Vec<usize>) -> bool {
    if s.signature().symbols[rel].mode == Mode::Set {
        tuple.sort_unstable();
    }
    s.contains_instance(&Instance { rel, tuple })
}

/// Definition-level check that `map` is a morphism of the requested kind.
/// Loops over every instance on both sides; independent of the search.
pub fn verify_morphism(
    src: &FinStructure,
    dst: &FinStructure,
    map: &[usize],
    kind: MorphKind,
) -> bool {
    if src.signature() != dst.signature() || map.len() != src.size() {
        return false;
    }
    if map.iter().any(|&t| t >= dst.size()) {
        return false;
    }
    let mut seen = vec![false; dst.size()];
    for &t in map {
        if seen[t] {
            return false;
        }
        seen[t] = true;
    }
    for inst in src.instances() {
        let mapped: Vec<usize> = inst.tuple.iter().map(|&e| map[e]).collect();
        if !contains_mode(dst, inst.rel, mapped) {
            return false;
        }
    }
    if kind != MorphKind::Mono {
        let mut inv = vec![UNSET; dst.size()];
        for (s, &t) in map.iter().enumerate() {
            inv[t] = s;
        }
        for inst in dst.instances() {
            if inst.tuple.iter().all(|&e| inv[e] != UNSET) {
                let pulled: Vec<usize> = inst.tuple.iter().map(|&e| inv[e]).collect();
                if !contains_mode(src, inst.rel, pulled) {
                    return false;
                }
            }
        }
    }
    if kind == MorphKind::Iso && !seen.iter().all(|&b| b) {
        return false;
    }
    true
}

pub fn is_isomorphic(a: &FinStructure, b: &FinStructure) -> bool {
    if a.size() != b.size() || a.instance_count() != b.instance_count() {
        return false;
    }
    if crate::canon::iso_hash(a) != crate::canon::iso_hash(b) {
        return false;
    }
    !search_morphisms(a, b, MorphKind::Iso, SearchOpts::first()).is_empty()
}

/// Whether `pattern` embeds into `host` (induced copy on some subset).
pub fn embeds_into(pattern: &FinStructure, host: &FinStructure) -> bool {
    !search_morphisms(pattern, host, MorphKind::Embedding, SearchOpts::first()).is_empty()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structure::fixtures::*;
    use crate::structure::{FinStructure, Signature};

    #[test]
    fn edge_into_triangle_has_six_embeddings() {
        let edge = path_graph(2);
        let tri = complete_graph(3);
        let found = search_morphisms(&edge, &tri, MorphKind::Embedding, SearchOpts::all());
        assert_eq!(found.len(), 6);
        for m in &found {
            assert!(verify_morphism(&edge, &tri, &m.map, MorphKind::Embedding));
        }
        // Deterministic lexicographic order, least first.
        assert_eq!(found[0].map, vec![0, 1]);
    }

    #[test]
    fn no_triangle_in_path() {
        let tri = complete_graph(3);
        let path = path_graph(3);
        assert!(search_morphisms(&tri, &path, MorphKind::Mono, SearchOpts::first()).is_empty());
    }

    #[test]
    fn identity_constraint_gives_identity_iso() {
        let p = path_graph(3);
        let fixed = [(0usize, 0usize), (1, 1), (2, 2)];
        let opts = SearchOpts {
            limit: 10,
            fixed: &fixed,
            allowed: None,
        };
        let found = search_morphisms(&p, &p, MorphKind::Iso, opts);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].map, vec![0, 1, 2]);
    }

    #[test]
    fn mono_need_not_reflect() {
        // A non-edge maps into an edge as a mono but not as an embedding.
        let none = FinStructure::empty(Signature::graph(), 2);
        let edge = path_graph(2);
        assert!(!search_morphisms(&none, &edge, MorphKind::Mono, SearchOpts::first()).is_empty());
        assert!(
            search_morphisms(&none, &edge, MorphKind::Embedding, SearchOpts::first()).is_empty()
        );
    }

    #[test]
    fn allowed_filter_restricts_images() {
        let v = FinStructure::empty(Signature::graph(), 1);
        let tri = complete_graph(3);
        let allow = |_s: usize, t: usize| t == 2;
        let opts = SearchOpts {
            limit: 10,
            fixed: &[],
            allowed: Some(&allow),
        };
        let found = search_morphisms(&v, &tri, MorphKind::Embedding, opts);
        assert_eq!(found.len(), 1);
        assert_eq!(found[0].map, vec![2]);
    }

    #[test]
    fn iso_respects_hypergraph_mode() {
        let a = complete_k_uniform(3, 4);
        let b = complete_k_uniform(3, 4);
        assert!(is_isomorphic(&a, &b));
        let mut c = complete_k_uniform(3, 4);
        // c with one edge removed is not isomorphic.
        let inst = c.instances().next().unwrap().clone();
        let mut d = FinStructure::empty(c.signature().clone(), 4);
        for i in c.instances() {
            if *i != inst {
                d.insert(i.rel, i.tuple.clone()).unwrap();
            }
        }
        c = d;
        assert!(!is_isomorphic(&a, &c));
    }

    #[test]
    fn brute_force_iso_agreement_small_graphs() {
        // isIsomorphic agrees with a brute-force permutation check.
        use crate::structure::arrangements;
        let samples = vec![
            path_graph(4),
            cycle_graph(4),
            complete_graph(4),
            path_graph(3),
            cycle_graph(6),
            path_graph(6),
            complete_graph(6),
        ];
        for a in &samples {
            for b in &samples {
                let n = a.size();
                let mut brute = false;
                if n == b.size() {
                    let all: Vec<usize> = (0..n).collect();
                    for perm in arrangements(&all, n) {
                        if verify_morphism(a, b, &perm, MorphKind::Iso) {
                            brute = true;
                            break;
                        }
                    }
                }
                assert_eq!(is_isomorphic(a, b), brute);
            }
        }
    }
}

#[cfg(test)]
mod mixed_signature_tests {
    use super::*;
    use crate::structure::{FinStructure, Mode, RelSymbol, Signature};

    /// Random-ish structures over a signature mixing arities and modes:
    /// every found morphism passes the definition-level verifier.
    #[test]
    fn searched_morphisms_verify_over_mixed_signatures() {
        let sig = Signature::new(vec![
            RelSymbol {
                name: "O".into(),
                arity: 2,
                mode: Mode::Ordered,
            },
            RelSymbol {
                name: "H".into(),
                arity: 3,
                mode: Mode::Set,
            },
            RelSymbol {
                name: "P".into(),
                arity: 1,
                mode: Mode::Set,
            },
        ])
        .unwrap();
        let mut state = 0x9e3779b97f4a7c15u64;
        let mut next = || {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            state
        };
        let mut samples = Vec::new();
        for _ in 0..12 {
            let n = 2 + (next() % 5) as usize;
            let mut s = FinStructure::empty(sig.clone(), n);
            for _ in 0..(next() % 8) {
                let rel = (next() % 3) as usize;
                let arity = sig.symbols[rel].arity;
                if arity > n {
                    continue;
                }
                let mut tuple: Vec<usize> = Vec::new();
                while tuple.len() < arity {
                    let e = (next() % n as u64) as usize;
                    if !tuple.contains(&e) {
                        tuple.push(e);
                    }
                }
                s.insert(rel, tuple).unwrap();
            }
            samples.push(s);
        }
        for a in &samples {
            for b in &samples {
                for kind in [MorphKind::Mono, MorphKind::Embedding, MorphKind::Iso] {
                    for m in search_morphisms(a, b, kind, SearchOpts { limit: 4, ..SearchOpts::first() }) {
                        assert!(
                            verify_morphism(a, b, &m.map, kind),
                            "{kind:?} from {a} to {b} fails the verifier"
                        );
                    }
                }
            }
        }
    }
}
