//! Ordered graphs carrying node-indexed partial automorphisms, and the
//! membership checkers for the three strictness levels: the base class (all
//! structural clauses), the no-return class (no composite map moves an
//! element back onto itself), and the uniform class (every element's
//! applicable-word set matches a member of the parameter family).

use crate::error::{Error, Result};
use crate::rel::RelStruct;
use crate::report::{ClauseReport, Verdict};
use crate::twinship::{solves, TwinshipParam};
use crate::words::{
    eval_word, is_formally_reduced, Letter, MapFamily, PartialMap, Sign, Word,
};
use std::collections::{BTreeMap, BTreeSet, VecDeque};

#[derive(Debug, Clone)]
pub struct OrgStructure {
    pub rel: RelStruct,
    pub maps: MapFamily,
    pub frontier: BTreeSet<usize>,
}

impl OrgStructure {
    pub fn new(rel: RelStruct, maps: MapFamily, frontier: BTreeSet<usize>) -> Result<OrgStructure> {
        for node in maps.nodes().collect::<Vec<_>>() {
            for (a, b) in maps.positive(node).pairs() {
                rel.check_element(a)?;
                rel.check_element(b)?;
            }
        }
        for &a in &frontier {
            rel.check_element(a)?;
        }
        Ok(OrgStructure { rel, maps, frontier })
    }

    pub fn len(&self) -> usize {
        self.rel.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rel.is_empty()
    }

    pub fn non_frontier(&self) -> Vec<usize> {
        (0..self.len()).filter(|a| !self.frontier.contains(a)).collect()
    }

    /// Induced substructure on `keep` (renumbered in the given order): both
    /// relations restricted, map pairs kept only when both endpoints survive,
    /// frontier intersected.
    pub fn restrict(&self, keep: &[usize]) -> Result<OrgStructure> {
        let rel = self.rel.restrict(keep)?;
        let back: BTreeMap<usize, usize> =
            keep.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        if back.len() != keep.len() {
            return Err(Error::Input("restriction set has repeats".into()));
        }
        let mut pos = BTreeMap::new();
        for node in self.maps.nodes() {
            let mut pairs = vec![];
            for (a, b) in self.maps.positive(node).pairs() {
                if let (Some(&ra), Some(&rb)) = (back.get(&a), back.get(&b)) {
                    pairs.push((ra, rb));
                }
            }
            if !pairs.is_empty() {
                pos.insert(node, PartialMap::from_pairs(&pairs)?);
            }
        }
        let frontier = self
            .frontier
            .iter()
            .filter_map(|a| back.get(a).copied())
            .collect();
        OrgStructure::new(rel, MapFamily::from_positive(pos), frontier)
    }
}

fn check_indexing(j: &OrgStructure, p: &TwinshipParam) -> Result<()> {
    for node in j.maps.nodes() {
        p.poset.check_element(node)?;
    }
    Ok(())
}

fn all_letters(p: &TwinshipParam) -> Vec<Letter> {
    p.poset
        .elements()
        .flat_map(|n| [Letter::new(n, Sign::Plus), Letter::new(n, Sign::Minus)])
        .collect()
}

/// Equivalence closure of all map pairs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EClosure {
    pub class_of: Vec<usize>,
    pub classes: Vec<BTreeSet<usize>>,
}

impl EClosure {
    pub fn same(&self, a: usize, b: usize) -> bool {
        self.class_of[a] == self.class_of[b]
    }
}

pub fn e_closure(j: &OrgStructure) -> EClosure {
    let n = j.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for node in j.maps.nodes().collect::<Vec<_>>() {
        for (a, b) in j.maps.positive(node).pairs() {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra != rb {
                parent[ra.max(rb)] = ra.min(rb);
            }
        }
    }
    let mut roots: BTreeMap<usize, usize> = BTreeMap::new();
    let mut classes: Vec<BTreeSet<usize>> = vec![];
    let mut class_of = vec![0; n];
    for x in 0..n {
        let r = find(&mut parent, x);
        let id = *roots.entry(r).or_insert_with(|| {
            classes.push(BTreeSet::new());
            classes.len() - 1
        });
        classes[id].insert(x);
        class_of[x] = id;
    }
    EClosure { class_of, classes }
}

/// Base-class membership report.
///
/// Clause ids follow the definition layout: `A` linear order, `B` each
/// single map a partial automorphism, `B.a` the inverse convention, `B.b`
/// the applicable-node set of every non-frontier element lies in the family,
/// `B.c` composites up to length 2 are partial automorphisms, `B.d` maps grow
/// along the node order, `B.e` edge transfer across two maps with compatible
/// nodes, `C` edges form a graph, `D` the equivalence closure (informational).
pub fn check_k0(j: &OrgStructure, p: &TwinshipParam) -> Result<ClauseReport> {
    check_indexing(j, p)?;
    let mut rep = ClauseReport::new();
    let n = j.len();

    if j.rel.is_linear_order() {
        rep.pass("A", "order is linear");
    } else {
        rep.fail("A", "order is not a linear order");
    }

    let preserves = |f: &PartialMap| -> Option<(usize, usize)> {
        for (a, fa) in f.pairs() {
            for (b, fb) in f.pairs() {
                if j.rel.lt(a, b) != j.rel.lt(fa, fb) || j.rel.edge(a, b) != j.rel.edge(fa, fb) {
                    return Some((a, b));
                }
            }
        }
        None
    };
    let mut b_fail = None;
    for node in p.poset.elements() {
        if let Some((a, b)) = preserves(&j.maps.positive(node)) {
            b_fail = Some(format!("map at node {node} breaks order or edges on ({a}, {b})"));
            break;
        }
    }
    match b_fail {
        Some(msg) => rep.fail("B", msg),
        None => rep.pass("B", "every positive map preserves order and edges both ways"),
    }

    rep.pass(
        "B.a",
        "negative maps are the inverses of the positive maps by construction",
    );

    let mut bb_fail = None;
    'bb: for &a in j.non_frontier().iter() {
        for sign in [Sign::Plus, Sign::Minus] {
            let applicable: BTreeSet<usize> = p
                .poset
                .elements()
                .filter(|&nd| j.maps.map(Letter::new(nd, sign)).contains_source(a))
                .collect();
            if !p.family.iter().any(|d| *d == applicable) {
                bb_fail = Some(format!(
                    "applicable nodes of element {a} at sign {} form no member: {applicable:?}",
                    if sign == Sign::Plus { "+1" } else { "-1" },
                ));
                break 'bb;
            }
        }
    }
    match bb_fail {
        Some(msg) => rep.fail("B.b", msg),
        None => rep.pass("B.b", "applicable-node sets of non-frontier elements all lie in the family"),
    }

    // Composites of two letters; longer words reduce to this by induction
    // once each letter map is a partial automorphism.
    let letters = all_letters(p);
    let mut bc_fail = None;
    'bc: for &l1 in &letters {
        for &l2 in &letters {
            if l1.clashes_with(l2) {
                continue;
            }
            let f = j.maps.map(l1).compose_after(&j.maps.map(l2));
            if let Some((a, b)) = preserves(&f) {
                bc_fail = Some(format!(
                    "composite of ({},{:?}) after ({},{:?}) breaks order or edges on ({a}, {b})",
                    l1.node, l1.sign, l2.node, l2.sign
                ));
                break 'bc;
            }
        }
    }
    match bc_fail {
        Some(msg) => rep.fail("B.c", msg),
        None => rep.pass(
            "B.c",
            "length-2 composites are partial automorphisms; longer words follow inductively",
        ),
    }

    let mut bd_fail = None;
    'bd: for eta in p.poset.elements() {
        for nu in p.poset.elements() {
            if p.poset.le(eta, nu)
                && !j.maps.positive(eta).is_subset_of(&j.maps.positive(nu))
            {
                bd_fail = Some(format!("map at node {eta} is not contained in map at node {nu}"));
                break 'bd;
            }
        }
    }
    match bd_fail {
        Some(msg) => rep.fail("B.d", msg),
        None => rep.pass("B.d", "maps grow along the node order"),
    }

    let mut be_fail = None;
    'be: for sign in [Sign::Plus, Sign::Minus] {
        for eta in p.poset.elements() {
            for nu in p.poset.elements() {
                if !p.poset.compatible(eta, nu) {
                    continue;
                }
                let f1 = j.maps.map(Letter::new(eta, sign));
                let f2 = j.maps.map(Letter::new(nu, sign));
                for (s1, t1) in f1.pairs() {
                    for (s2, t2) in f2.pairs() {
                        if j.rel.edge(s1, s2) != j.rel.edge(t1, t2) {
                            be_fail = Some(format!(
                                "edge fact on ({s1}, {s2}) not transferred to ({t1}, {t2}) by nodes {eta}, {nu}"
                            ));
                            break 'be;
                        }
                    }
                }
            }
        }
    }
    match be_fail {
        Some(msg) => rep.fail("B.e", msg),
        None => rep.pass("B.e", "edges transfer across map pairs with compatible nodes"),
    }

    if j.rel.is_graph() {
        rep.pass("C", "edges are irreflexive and symmetric");
    } else {
        rep.fail("C", "edges are not an irreflexive symmetric relation");
    }

    let classes = e_closure(j).classes.len();
    rep.push(
        "D",
        Verdict::Pass,
        format!("equivalence closure of the map pairs has {classes} classes on {n} elements"),
    );

    Ok(rep)
}

/// One reachable composite map, keyed by the letter at the front of its
/// representative word (the one applied last).
#[derive(Debug, Clone)]
pub struct AtlasState {
    pub map: PartialMap,
    pub head: Letter,
    pub word: Word,
}

/// All distinct nonempty composite maps of formally reduced words, found by
/// breadth-first search. Words extend by prepending, so the new letter is
/// applied after everything already in the word, and the reducedness
/// constraint compares it to the current head.
#[derive(Debug, Clone)]
pub struct GroupoidAtlas {
    pub states: Vec<AtlasState>,
}

pub fn build_atlas(j: &OrgStructure, p: &TwinshipParam, cap: usize) -> Result<GroupoidAtlas> {
    check_indexing(j, p)?;
    let letters = all_letters(p);
    let mut states: Vec<AtlasState> = vec![];
    let mut seen: BTreeSet<(PartialMap, Letter)> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    let push = |m: PartialMap,
                    head: Letter,
                    word: Word,
                    states: &mut Vec<AtlasState>,
                    seen: &mut BTreeSet<(PartialMap, Letter)>,
                    queue: &mut VecDeque<usize>|
     -> Result<()> {
        if m.is_empty() || !seen.insert((m.clone(), head)) {
            return Ok(());
        }
        if states.len() >= cap {
            return Err(Error::AtlasCapExceeded { cap });
        }
        states.push(AtlasState { map: m, head, word });
        queue.push_back(states.len() - 1);
        Ok(())
    };

    for &l in &letters {
        let m = j.maps.map(l);
        push(m, l, Word(vec![l]), &mut states, &mut seen, &mut queue)?;
    }
    while let Some(i) = queue.pop_front() {
        let (base_map, base_head, base_word) =
            (states[i].map.clone(), states[i].head, states[i].word.clone());
        for &l in &letters {
            if l.clashes_with(base_head) {
                continue;
            }
            let m = j.maps.map(l).compose_after(&base_map);
            push(m, l, base_word.prepend(l), &mut states, &mut seen, &mut queue)?;
        }
    }
    Ok(GroupoidAtlas { states })
}

/// No-return check: true when no formally reduced word of positive length
/// fixes an element. The witness is a shortest offending word with its fixed
/// element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct K1Check {
    pub holds: bool,
    pub witness: Option<(Word, usize)>,
}

pub fn check_k1(j: &OrgStructure, p: &TwinshipParam, cap: usize) -> Result<K1Check> {
    let atlas = build_atlas(j, p, cap)?;
    for st in &atlas.states {
        if let Some((a, _)) = st.map.pairs().find(|&(a, b)| a == b) {
            return Ok(K1Check {
                holds: false,
                witness: Some((st.word.clone(), a)),
            });
        }
    }
    Ok(K1Check {
        holds: true,
        witness: None,
    })
}

/// Reference implementation of the no-return check: enumerate every formally
/// reduced word up to `max_len` and evaluate it on every element.
pub fn k1_violation_naive(
    j: &OrgStructure,
    p: &TwinshipParam,
    max_len: usize,
) -> Result<Option<(Word, usize)>> {
    check_indexing(j, p)?;
    let letters = all_letters(p);
    let mut layer: Vec<Word> = vec![Word::empty()];
    for _ in 0..max_len {
        let mut next = vec![];
        for w in &layer {
            for &l in &letters {
                match w.head() {
                    Some(h) if l.clashes_with(h) => continue,
                    _ => {}
                }
                let ext = w.prepend(l);
                for a in 0..j.len() {
                    if eval_word(&j.maps, &ext, a) == Some(a) {
                        return Ok(Some((ext, a)));
                    }
                }
                next.push(ext);
            }
        }
        layer = next;
    }
    Ok(None)
}

/// Reachable evaluation state of words applied to one start element.
#[derive(Debug, Clone)]
pub struct OmegaState {
    pub element: usize,
    pub head: Letter,
    pub word: Word,
}

/// Membership oracle for the set of formally reduced words applicable at a
/// start element, together with its finite description: every reachable
/// (element, front letter) state.
#[derive(Debug, Clone)]
pub struct OmegaOracle {
    pub start: usize,
    pub states: Vec<OmegaState>,
}

impl OmegaOracle {
    pub fn contains(&self, j: &OrgStructure, o: &Word) -> bool {
        is_formally_reduced(o) && eval_word(&j.maps, o, self.start).is_some()
    }
}

pub fn omega_s(j: &OrgStructure, p: &TwinshipParam, s: usize, cap: usize) -> Result<OmegaOracle> {
    check_indexing(j, p)?;
    j.rel.check_element(s)?;
    let letters = all_letters(p);
    let mut states: Vec<OmegaState> = vec![];
    let mut seen: BTreeSet<(usize, Letter)> = BTreeSet::new();
    let mut queue: VecDeque<usize> = VecDeque::new();

    for &l in &letters {
        if let Some(e) = j.maps.apply(l, s) {
            if seen.insert((e, l)) {
                if states.len() >= cap {
                    return Err(Error::AtlasCapExceeded { cap });
                }
                states.push(OmegaState { element: e, head: l, word: Word(vec![l]) });
                queue.push_back(states.len() - 1);
            }
        }
    }
    while let Some(i) = queue.pop_front() {
        let (element, head, word) = (states[i].element, states[i].head, states[i].word.clone());
        for &l in &letters {
            if l.clashes_with(head) {
                continue;
            }
            if let Some(e) = j.maps.apply(l, element) {
                if seen.insert((e, l)) {
                    if states.len() >= cap {
                        return Err(Error::AtlasCapExceeded { cap });
                    }
                    states.push(OmegaState { element: e, head: l, word: word.prepend(l) });
                    queue.push_back(states.len() - 1);
                }
            }
        }
    }
    Ok(OmegaOracle { start: s, states })
}

/// Does the applicable-word set at `s` equal the all-letters-in-`d` word set,
/// away from the frontier? Returns a witness word on mismatch: a word on one
/// side only. At frontier elements both demands are suspended (missing
/// extensions there are truncation artifacts), but the walk continues through
/// them.
pub fn omega_mismatch_witness(
    j: &OrgStructure,
    p: &TwinshipParam,
    s: usize,
    d: &BTreeSet<usize>,
    cap: usize,
) -> Result<Option<Word>> {
    check_indexing(j, p)?;
    j.rel.check_element(s)?;
    let letters = all_letters(p);
    let mut seen: BTreeSet<(usize, Option<Letter>)> = BTreeSet::new();
    let mut queue: VecDeque<(usize, Option<Letter>, Word)> = VecDeque::new();
    seen.insert((s, None));
    queue.push_back((s, None, Word::empty()));

    while let Some((element, head, word)) = queue.pop_front() {
        let at_frontier = j.frontier.contains(&element);
        for &l in &letters {
            if let Some(h) = head {
                if l.clashes_with(h) {
                    continue;
                }
            }
            let image = j.maps.apply(l, element);
            if !at_frontier {
                let should = d.contains(&l.node);
                if should != image.is_some() {
                    return Ok(Some(word.prepend(l)));
                }
            }
            if let Some(e) = image {
                if seen.insert((e, Some(l))) {
                    if seen.len() > cap {
                        return Err(Error::AtlasCapExceeded { cap });
                    }
                    queue.push_back((e, Some(l), word.prepend(l)));
                }
            }
        }
    }
    Ok(None)
}

/// Uniform-class report: clause `A` matches every non-frontier element's
/// applicable-word set with some member of the family; clause `B` (existence
/// of minimal words below any applicable word) holds automatically over a
/// finite node poset.
pub fn check_k2(j: &OrgStructure, p: &TwinshipParam, cap: usize) -> Result<ClauseReport> {
    check_indexing(j, p)?;
    let mut rep = ClauseReport::new();
    let mut fail = None;
    let mut matched = 0usize;
    'elems: for &s in j.non_frontier().iter() {
        for d in &p.family {
            if omega_mismatch_witness(j, p, s, d, cap)?.is_none() {
                matched += 1;
                continue 'elems;
            }
        }
        let detail = match p.family.first() {
            None => format!("element {s}: family is empty"),
            Some(d0) => {
                let w = omega_mismatch_witness(j, p, s, d0, cap)?.unwrap();
                format!("element {s} matches no member; member 0 differs at {w}")
            }
        };
        fail = Some(detail);
        break;
    }
    match fail {
        Some(msg) => rep.fail("A", msg),
        None => rep.pass(
            "A",
            format!("all {matched} non-frontier elements match a member of the family"),
        ),
    }
    rep.pass(
        "B",
        "minimal applicable words exist below any word: the node poset is finite, hence well-founded",
    );
    Ok(rep)
}

/// Is every element's reachable set (under single letters in both signs) the
/// whole universe? Single-letter moves suffice: dropping an adjacent
/// cancelling pair from a word never shrinks where it is defined, so shortest
/// reaching words are formally reduced anyway.
pub fn is_orbit_generated(j: &OrgStructure, p: &TwinshipParam) -> Result<bool> {
    check_indexing(j, p)?;
    let n = j.len();
    if n == 0 {
        return Ok(true);
    }
    let mut adj: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for node in j.maps.nodes().collect::<Vec<_>>() {
        for (a, b) in j.maps.positive(node).pairs() {
            adj[a].insert(b);
            adj[b].insert(a);
        }
    }
    for s in 0..n {
        let mut seen = vec![false; n];
        seen[s] = true;
        let mut queue = VecDeque::from([s]);
        let mut count = 1;
        while let Some(x) = queue.pop_front() {
            for &y in &adj[x] {
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    queue.push_back(y);
                }
            }
        }
        if count != n {
            return Ok(false);
        }
    }
    Ok(true)
}

/// The union map of a solving set with its four proof-step assertions.
#[derive(Debug, Clone)]
pub struct GenericMapOutcome {
    pub map: PartialMap,
    pub report: ClauseReport,
}

/// Union of the positive maps over `g`. Errors when two maps genuinely
/// disagree (shared source with different targets, or shared target with
/// different sources); everything else is reported clause by clause:
/// `well-defined`, `automorphism` (order and edges both ways), `domain` and
/// `range` (both cover the non-frontier elements).
pub fn generic_map(
    j: &OrgStructure,
    p: &TwinshipParam,
    g: &BTreeSet<usize>,
) -> Result<GenericMapOutcome> {
    check_indexing(j, p)?;
    for &eta in g {
        p.poset.check_element(eta)?;
    }
    let mut rep = ClauseReport::new();
    if solves(p, g)? {
        rep.pass("solution", "the set is directed and meets every member");
    } else {
        rep.fail("solution", "the set does not solve the parameter");
    }

    let mut fwd: BTreeMap<usize, usize> = BTreeMap::new();
    let mut back: BTreeMap<usize, usize> = BTreeMap::new();
    for &eta in g {
        for (a, b) in j.maps.positive(eta).pairs() {
            if let Some(&prev) = fwd.get(&a) {
                if prev != b {
                    return Err(Error::Inconsistent { element: a, first: prev, second: b });
                }
                continue;
            }
            if let Some(&src) = back.get(&b) {
                if src != a {
                    return Err(Error::Inconsistent { element: b, first: src, second: a });
                }
            }
            fwd.insert(a, b);
            back.insert(b, a);
        }
    }
    let map = PartialMap::from_pairs(&fwd.iter().map(|(&a, &b)| (a, b)).collect::<Vec<_>>())?;
    rep.pass(
        "well-defined",
        format!("union of {} maps is a partial injection on {} sources", g.len(), map.len()),
    );

    let mut auto_fail = None;
    'auto: for (a, fa) in map.pairs() {
        for (b, fb) in map.pairs() {
            if j.rel.lt(a, b) != j.rel.lt(fa, fb) || j.rel.edge(a, b) != j.rel.edge(fa, fb) {
                auto_fail = Some(format!("order or edge fact differs between ({a}, {b}) and ({fa}, {fb})"));
                break 'auto;
            }
        }
    }
    match auto_fail {
        Some(msg) => rep.fail("automorphism", msg),
        None => rep.pass("automorphism", "order and edges preserved in both directions"),
    }

    let missing_dom: Vec<usize> = j
        .non_frontier()
        .into_iter()
        .filter(|&a| !map.contains_source(a))
        .collect();
    if missing_dom.is_empty() {
        rep.pass("domain", "domain covers every non-frontier element");
    } else {
        rep.fail("domain", format!("non-frontier elements outside the domain: {missing_dom:?}"));
    }
    let range: BTreeSet<usize> = map.range().collect();
    let missing_rng: Vec<usize> = j
        .non_frontier()
        .into_iter()
        .filter(|a| !range.contains(a))
        .collect();
    if missing_rng.is_empty() {
        rep.pass("range", "range covers every non-frontier element");
    } else {
        rep.fail("range", format!("non-frontier elements outside the range: {missing_rng:?}"));
    }

    Ok(GenericMapOutcome { map, report: rep })
}

/// How block elements are linearly ordered. `Shortlex` is the plain default;
/// `Invariant` orders words so that left multiplication preserves the order,
/// which is what makes the block maps order isomorphisms where defined.
/// Shortlex cannot do that: the empty word is its minimum, yet one map sends
/// some word down to the empty word while sending the empty word up.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OrderRule {
    #[default]
    Shortlex,
    Invariant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EdgeRule {
    #[default]
    Empty,
}

/// All formally reduced words over the nodes of `d` (both signs) of length at
/// most `depth`, in generation order: empty word first, then by length.
pub fn reduced_words_over(d: &BTreeSet<usize>, depth: usize) -> Vec<Word> {
    let letters: Vec<Letter> = d
        .iter()
        .flat_map(|&n| [Letter::new(n, Sign::Plus), Letter::new(n, Sign::Minus)])
        .collect();
    let mut words: Vec<Word> = vec![Word::empty()];
    let mut layer: Vec<Word> = vec![Word::empty()];
    for _ in 0..depth {
        let mut next = vec![];
        for w in &layer {
            for &l in &letters {
                match w.head() {
                    Some(h) if l.clashes_with(h) => continue,
                    _ => {}
                }
                next.push(w.prepend(l));
            }
        }
        words.extend(next.iter().cloned());
        layer = next;
    }
    words
}

/// Sparse noncommutative polynomial: monomial (degree, generator sequence)
/// to coefficient, truncated at a fixed total degree.
type Series = BTreeMap<(usize, Vec<usize>), i64>;

fn series_mul(a: &Series, b: &Series, trunc: usize) -> Series {
    let mut out = Series::new();
    for ((da, ma), ca) in a {
        for ((db, mb), cb) in b {
            if da + db > trunc {
                continue;
            }
            let key = (da + db, ma.iter().chain(mb.iter()).copied().collect::<Vec<_>>());
            let v = out.entry(key.clone()).or_insert(0);
            *v += ca * cb;
            if *v == 0 {
                out.remove(&key);
            }
        }
    }
    out
}

fn letter_series(gen: usize, sign: Sign, trunc: usize) -> Series {
    // A positive letter maps to 1 + X; its inverse to the alternating
    // geometric series 1 - X + X^2 - ...
    let mut s = Series::new();
    for k in 0..=trunc {
        let coeff = match sign {
            Sign::Plus if k > 1 => break,
            Sign::Plus => 1,
            Sign::Minus => (-1i64).pow(k as u32),
        };
        s.insert((k, vec![gen; k]), coeff);
    }
    s
}

fn word_series(w: &Word, gens: &BTreeMap<usize, usize>, trunc: usize) -> Series {
    let mut s = Series::from([((0, vec![]), 1)]);
    for l in w.letters() {
        s = series_mul(&s, &letter_series(gens[&l.node], l.sign, trunc), trunc);
    }
    s
}

/// Compares by the coefficient at the first monomial where the two series
/// differ; absent monomials count as zero. Multiplying both sides on the left
/// by a common series with constant term 1 changes neither the first
/// differing monomial nor the direction of the difference, which is exactly
/// the invariance the block order needs.
fn series_cmp(a: &Series, b: &Series) -> std::cmp::Ordering {
    let mut ia = a.iter().peekable();
    let mut ib = b.iter().peekable();
    loop {
        match (ia.peek(), ib.peek()) {
            (None, None) => return std::cmp::Ordering::Equal,
            (Some((_, &ca)), None) => {
                if ca != 0 {
                    return ca.cmp(&0);
                }
                ia.next();
            }
            (None, Some((_, &cb))) => {
                if cb != 0 {
                    return 0.cmp(&cb);
                }
                ib.next();
            }
            (Some((ka, &ca)), Some((kb, &cb))) => match ka.cmp(kb) {
                std::cmp::Ordering::Less => {
                    if ca != 0 {
                        return ca.cmp(&0);
                    }
                    ia.next();
                }
                std::cmp::Ordering::Greater => {
                    if cb != 0 {
                        return 0.cmp(&cb);
                    }
                    ib.next();
                }
                std::cmp::Ordering::Equal => {
                    if ca != cb {
                        return ca.cmp(&cb);
                    }
                    ia.next();
                    ib.next();
                }
            },
        }
    }
}

/// A canonical block: its structure, the word standing behind each element,
/// and the seed (the empty word).
#[derive(Debug, Clone)]
pub struct Block {
    pub structure: OrgStructure,
    pub words: Vec<Word>,
    pub seed: usize,
}

/// Builds the free block over one member of the family: the universe is all
/// formally reduced words over member-nodes with both signs up to the depth,
/// a node's positive map acts by free left multiplication (cancel a leading
/// inverse letter, otherwise prepend while room remains), full-depth words
/// form the frontier, and edges start empty. Element ids follow the chosen
/// order rule, so the linear order is id order either way; only `Invariant`
/// makes the maps order-preserving.
pub fn build_block(
    p: &TwinshipParam,
    d_index: usize,
    depth: usize,
    order: OrderRule,
    _edges: EdgeRule,
) -> Result<Block> {
    let d = p
        .family
        .get(d_index)
        .ok_or_else(|| Error::Input(format!("family has no member {d_index}")))?;
    let mut words = reduced_words_over(d, depth);
    match order {
        OrderRule::Shortlex => words.sort_by(|a, b| a.shortlex_cmp(b)),
        OrderRule::Invariant => {
            let gens: BTreeMap<usize, usize> =
                d.iter().enumerate().map(|(i, &n)| (n, i)).collect();
            let trunc = 2 * depth + 2;
            let keys: BTreeMap<Word, Series> = words
                .iter()
                .map(|w| (w.clone(), word_series(w, &gens, trunc)))
                .collect();
            words.sort_by(|a, b| series_cmp(&keys[a], &keys[b]));
            // Distinct reduced words always separate at low degree at these
            // depths; a collision would mean the truncation is too coarse.
            for pair in words.windows(2) {
                if series_cmp(&keys[&pair[0]], &keys[&pair[1]]) == std::cmp::Ordering::Equal {
                    return Err(Error::Input(format!(
                        "series truncation {trunc} cannot separate words {} and {}",
                        pair[0], pair[1]
                    )));
                }
            }
        }
    }
    let id: BTreeMap<&Word, usize> = words.iter().enumerate().map(|(i, w)| (w, i)).collect();

    let mut pos: BTreeMap<usize, PartialMap> = BTreeMap::new();
    for &eta in d.iter() {
        let mut pairs = vec![];
        for (i, w) in words.iter().enumerate() {
            let target = match w.head() {
                Some(h) if h == Letter::new(eta, Sign::Minus) => Some(w.tail()),
                _ if w.len() < depth => Some(w.prepend(Letter::new(eta, Sign::Plus))),
                _ => None,
            };
            if let Some(t) = target {
                pairs.push((i, id[&t]));
            }
        }
        pos.insert(eta, PartialMap::from_pairs(&pairs)?);
    }

    let frontier: BTreeSet<usize> = words
        .iter()
        .enumerate()
        .filter(|(_, w)| w.len() == depth)
        .map(|(i, _)| i)
        .collect();
    let rel = RelStruct::linear(words.len());
    let structure = OrgStructure::new(rel, MapFamily::from_positive(pos), frontier)?;
    let seed = words.iter().position(|w| w.is_empty()).unwrap();
    Ok(Block { structure, words, seed })
}
