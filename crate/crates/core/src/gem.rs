//! Blueprint-driven model fragments over ordered-graph index structures: free
//! term algebras, qf-type blueprints, skeleton realization, representation
//! checks, and order/independence witnesses.

use crate::error::{Error, Result};
use crate::formula::QfFormula;
use crate::rel::{all_tuples, qf_type, QfType, RelStruct};
use std::collections::BTreeMap;
use std::fmt::Write as _;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FuncSym {
    pub name: String,
    pub arity: usize,
}

/// Free algebra over numbered generators with a finite signature and a depth
/// bound; the term universe is finite and enumerated level by level.
#[derive(Debug, Clone)]
pub struct FreeTermAlgebra {
    pub generators: usize,
    pub signature: Vec<FuncSym>,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Gen(usize),
    App(usize, Vec<Term>),
}

impl Term {
    pub fn depth(&self) -> usize {
        match self {
            Term::Gen(_) => 0,
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
        }
    }
}

pub fn term_display(alg: &FreeTermAlgebra, t: &Term) -> String {
    match t {
        Term::Gen(i) => format!("s{i}"),
        Term::App(f, args) => {
            let mut out = String::new();
            let name = alg
                .signature
                .get(*f)
                .map(|s| s.name.as_str())
                .unwrap_or("?");
            let _ = write!(out, "{name}(");
            for (i, a) in args.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                out.push_str(&term_display(alg, a));
            }
            out.push(')');
            out
        }
    }
}

/// All terms of depth at most the bound, sorted by depth then structurally.
/// Level d holds exactly the applications whose deepest argument has depth
/// d - 1, so nothing is produced twice.
pub fn enumerate_terms(alg: &FreeTermAlgebra) -> Vec<Term> {
    let mut all: Vec<Term> = (0..alg.generators).map(Term::Gen).collect();
    let mut below: Vec<Term> = all.clone();
    for d in 1..=alg.depth {
        let mut level = vec![];
        for (f, sym) in alg.signature.iter().enumerate() {
            let mut stack: Vec<Vec<Term>> = vec![vec![]];
            for _ in 0..sym.arity {
                let mut next = vec![];
                for partial in &stack {
                    for t in &below {
                        let mut p = partial.clone();
                        p.push(t.clone());
                        next.push(p);
                    }
                }
                stack = next;
            }
            for args in stack {
                if sym.arity > 0 && args.iter().map(Term::depth).max() == Some(d - 1) {
                    level.push(Term::App(f, args));
                } else if sym.arity == 0 && d == 1 {
                    level.push(Term::App(f, vec![]));
                }
            }
        }
        all.extend(level.iter().cloned());
        below.extend(level);
    }
    all.sort_by(|a, b| a.depth().cmp(&b.depth()).then_with(|| a.cmp(b)));
    all.dedup();
    all
}

/// Assigns each realized index pair type an output pair type; `Identity`
/// copies the index structure onto the skeleton verbatim. Skeleton arity is
/// fixed at one element per index element.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Blueprint {
    Identity,
    Table(BTreeMap<QfType, QfType>),
}

fn describe_type(t: &QfType) -> String {
    let bit = |v: &[bool], i: usize, j: usize| v[i * t.arity + j];
    if t.arity != 2 {
        return format!("arity-{} type", t.arity);
    }
    let mut parts = vec![];
    if bit(&t.eq, 0, 1) {
        parts.push("0=1".to_string());
    }
    for (name, v) in [("lt", &t.lt), ("edge", &t.edge)] {
        for (i, j) in [(0, 1), (1, 0)] {
            if bit(v, i, j) {
                parts.push(format!("{name}({i},{j})"));
            }
        }
    }
    if parts.is_empty() {
        parts.push("no facts".to_string());
    }
    parts.join(", ")
}

fn transpose2(t: &QfType) -> QfType {
    let flip = |v: &[bool]| vec![v[3], v[2], v[1], v[0]];
    QfType {
        arity: 2,
        eq: flip(&t.eq),
        lt: flip(&t.lt),
        edge: flip(&t.edge),
    }
}

/// An output pair type must keep the two skeleton elements distinct and
/// assert no self-facts; anything else cannot be realized.
fn check_output_type(out: &QfType) -> Result<()> {
    if out.arity != 2 {
        return Err(Error::BlueprintInconsistent(format!(
            "output type has arity {}, expected 2",
            out.arity
        )));
    }
    if out.eq != vec![true, false, false, true] {
        return Err(Error::BlueprintInconsistent(format!(
            "output type must keep skeleton elements distinct: {}",
            describe_type(out)
        )));
    }
    for v in [&out.lt, &out.edge] {
        if v[0] || v[3] {
            return Err(Error::BlueprintInconsistent(format!(
                "output type asserts a self-fact: {}",
                describe_type(out)
            )));
        }
    }
    Ok(())
}

/// Index structure with its realized skeleton; one skeleton element per index
/// element, atomic facts induced by the blueprint.
#[derive(Debug, Clone)]
pub struct GemFragment {
    pub index: RelStruct,
    pub skeleton: RelStruct,
}

/// Realizes the blueprint over the index structure. Table blueprints must be
/// defined on every off-diagonal pair type the index realizes, and the types
/// assigned to a pair and its flip must describe the same four cells.
pub fn gem_realize(index: &RelStruct, phi: &Blueprint) -> Result<GemFragment> {
    let table = match phi {
        Blueprint::Identity => {
            return Ok(GemFragment {
                index: index.clone(),
                skeleton: index.clone(),
            })
        }
        Blueprint::Table(table) => table,
    };
    let n = index.len();
    let mut skeleton = RelStruct::new(n, &[], &[])?;
    for s in 0..n {
        for t in 0..n {
            if s == t {
                continue;
            }
            let tp = qf_type(index, &[s, t])?;
            let out = table.get(&tp).ok_or_else(|| {
                Error::BlueprintUndefined(format!("pair type not in table: {}", describe_type(&tp)))
            })?;
            check_output_type(out)?;
            let tp_flip = qf_type(index, &[t, s])?;
            let out_flip = table.get(&tp_flip).ok_or_else(|| {
                Error::BlueprintUndefined(format!(
                    "pair type not in table: {}",
                    describe_type(&tp_flip)
                ))
            })?;
            if *out_flip != transpose2(out) {
                return Err(Error::BlueprintInconsistent(format!(
                    "types assigned to a pair and its flip disagree: {} vs {}",
                    describe_type(out),
                    describe_type(out_flip)
                )));
            }
            skeleton.set_lt(s, t, out.lt[1]);
            skeleton.set_edge(s, t, out.edge[1]);
        }
    }
    Ok(GemFragment {
        index: index.clone(),
        skeleton,
    })
}

/// First pair of equal-index-type tuples whose skeleton types differ, if any,
/// over all tuples of arity up to the bound.
pub fn indiscernibility_witness(
    frag: &GemFragment,
    max_arity: usize,
) -> Result<Option<(Vec<usize>, Vec<usize>)>> {
    for arity in 1..=max_arity {
        let mut groups: BTreeMap<QfType, (Vec<usize>, QfType)> = BTreeMap::new();
        for tuple in all_tuples(frag.index.len(), arity) {
            let itp = qf_type(&frag.index, &tuple)?;
            let stp = qf_type(&frag.skeleton, &tuple)?;
            match groups.get(&itp) {
                None => {
                    groups.insert(itp, (tuple, stp));
                }
                Some((first, first_stp)) => {
                    if *first_stp != stp {
                        return Ok(Some((first.clone(), tuple)));
                    }
                }
            }
        }
    }
    Ok(None)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IndexRel {
    Lt,
    Edge,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RepresentsOutcome {
    pub holds: bool,
    /// True when there were no samples, so the equivalence held vacuously.
    pub vacuous: bool,
    /// (sample index, tuple) where the equivalence first failed.
    pub counterexample: Option<(usize, Vec<usize>)>,
}

/// Does the formula, read in each realized skeleton, define exactly the index
/// relation? Checked on every ordered pair of every sample.
pub fn check_represents(
    phi: &Blueprint,
    formula: &QfFormula,
    rel: IndexRel,
    samples: &[RelStruct],
) -> Result<RepresentsOutcome> {
    if formula.min_arity() > 2 {
        return Err(Error::Input(format!(
            "formula mentions position {}, but the relation is binary",
            formula.min_arity() - 1
        )));
    }
    for (si, sample) in samples.iter().enumerate() {
        let frag = gem_realize(sample, phi)?;
        for s in 0..sample.len() {
            for t in 0..sample.len() {
                let in_index = match rel {
                    IndexRel::Lt => sample.lt(s, t),
                    IndexRel::Edge => sample.edge(s, t),
                };
                let in_skeleton = formula.eval(&frag.skeleton, &[s, t])?;
                if in_index != in_skeleton {
                    return Ok(RepresentsOutcome {
                        holds: false,
                        vacuous: false,
                        counterexample: Some((si, vec![s, t])),
                    });
                }
            }
        }
    }
    Ok(RepresentsOutcome {
        holds: true,
        vacuous: samples.is_empty(),
        counterexample: None,
    })
}

fn assignment_search(
    m: &RelStruct,
    formula: &QfFormula,
    k: usize,
    count: usize,
    demand: &dyn Fn(usize, usize) -> bool,
) -> Result<Option<Vec<Vec<usize>>>> {
    if formula.min_arity() > 2 * k {
        return Err(Error::Input(format!(
            "formula mentions position {}, but tuples give only {} slots",
            formula.min_arity() - 1,
            2 * k
        )));
    }
    let candidates = all_tuples(m.len(), k);
    let mut chosen: Vec<Vec<usize>> = vec![];
    fn step(
        m: &RelStruct,
        formula: &QfFormula,
        candidates: &[Vec<usize>],
        count: usize,
        demand: &dyn Fn(usize, usize) -> bool,
        chosen: &mut Vec<Vec<usize>>,
    ) -> Result<bool> {
        if chosen.len() == count {
            return Ok(true);
        }
        let beta = chosen.len();
        'cand: for cand in candidates {
            if chosen.iter().any(|c| c == cand) {
                continue;
            }
            for (alpha, prev) in chosen.iter().enumerate() {
                let mut fwd = prev.clone();
                fwd.extend_from_slice(cand);
                if formula.eval(m, &fwd)? != demand(alpha, beta) {
                    continue 'cand;
                }
                let mut bwd = cand.clone();
                bwd.extend_from_slice(prev);
                if formula.eval(m, &bwd)? != demand(beta, alpha) {
                    continue 'cand;
                }
            }
            chosen.push(cand.clone());
            if step(m, formula, candidates, count, demand, chosen)? {
                return Ok(true);
            }
            chosen.pop();
        }
        Ok(false)
    }
    if step(m, formula, &candidates, count, demand, &mut chosen)? {
        Ok(Some(chosen))
    } else {
        Ok(None)
    }
}

/// Exhaustively searches for pairwise distinct k-tuples whose formula pattern
/// copies the target graph: the formula holds on tuples alpha, beta exactly
/// when the graph has that edge.
pub fn independence_witness(
    m: &RelStruct,
    formula: &QfFormula,
    k: usize,
    target: &RelStruct,
) -> Result<Option<Vec<Vec<usize>>>> {
    let g = target.clone();
    assignment_search(m, formula, k, target.len(), &|a, b| g.edge(a, b))
}

/// Exhaustively searches for pairwise distinct k-tuples on which the formula
/// holds exactly in increasing position order.
pub fn order_witness(
    m: &RelStruct,
    formula: &QfFormula,
    k: usize,
    len: usize,
) -> Result<Option<Vec<Vec<usize>>>> {
    assignment_search(m, formula, k, len, &|a, b| a < b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel::{complete, half_graph, path};

    fn unary_alg() -> FreeTermAlgebra {
        FreeTermAlgebra {
            generators: 2,
            signature: vec![FuncSym { name: "F".into(), arity: 1 }],
            depth: 1,
        }
    }

    #[test]
    fn term_enumeration_counts() {
        assert_eq!(enumerate_terms(&unary_alg()).len(), 4);

        let depth0 = FreeTermAlgebra { depth: 0, ..unary_alg() };
        let terms = enumerate_terms(&depth0);
        assert_eq!(terms, vec![Term::Gen(0), Term::Gen(1)]);

        let binary = FreeTermAlgebra {
            generators: 1,
            signature: vec![FuncSym { name: "F".into(), arity: 2 }],
            depth: 1,
        };
        let terms = enumerate_terms(&binary);
        assert_eq!(terms.len(), 2);
        assert_eq!(term_display(&binary, &terms[1]), "F(s0,s0)");

        // Depth 2 over the unary algebra adds F(F(s)) for each generator.
        let deep = FreeTermAlgebra { depth: 2, ..unary_alg() };
        assert_eq!(enumerate_terms(&deep).len(), 6);
    }

    /// Ordered path: linear order 0 < 1 < 2 with path edges.
    fn ordered_path() -> RelStruct {
        let mut m = path(3);
        for a in 0..3 {
            for b in (a + 1)..3 {
                m.set_lt(a, b, true);
            }
        }
        m
    }

    fn type_of(facts: impl Fn(&mut RelStruct)) -> QfType {
        let mut aux = RelStruct::new(2, &[], &[]).unwrap();
        facts(&mut aux);
        qf_type(&aux, &[0, 1]).unwrap()
    }

    #[test]
    fn identity_blueprint_copies_index() {
        let m = ordered_path();
        let frag = gem_realize(&m, &Blueprint::Identity).unwrap();
        assert_eq!(frag.skeleton.lt_pairs(), m.lt_pairs());
        assert_eq!(frag.skeleton.edge_pairs(), m.edge_pairs());
        assert!(indiscernibility_witness(&frag, 3).unwrap().is_none());
    }

    #[test]
    fn all_edges_blueprint_gives_complete_graph() {
        let m = ordered_path();
        let mut table = BTreeMap::new();
        let out = type_of(|aux| aux.set_edge_sym(0, 1, true));
        for s in 0..3 {
            for t in 0..3 {
                if s != t {
                    table.insert(qf_type(&m, &[s, t]).unwrap(), out.clone());
                }
            }
        }
        let frag = gem_realize(&m, &Blueprint::Table(table)).unwrap();
        assert!(frag.skeleton.is_graph());
        for s in 0..3 {
            for t in 0..3 {
                assert_eq!(frag.skeleton.edge(s, t), s != t);
                assert!(!frag.skeleton.lt(s, t));
            }
        }
        assert!(indiscernibility_witness(&frag, 3).unwrap().is_none());
    }

    #[test]
    fn missing_type_reported() {
        let m = ordered_path();
        let mut table = BTreeMap::new();
        let tp01 = qf_type(&m, &[0, 1]).unwrap();
        table.insert(tp01.clone(), tp01);
        assert!(matches!(
            gem_realize(&m, &Blueprint::Table(table)),
            Err(Error::BlueprintUndefined(_))
        ));
    }

    #[test]
    fn flip_conflict_reported() {
        let m = ordered_path();
        let mut table = BTreeMap::new();
        // Forward types get an edge, flipped types claim none.
        let edge_out = type_of(|aux| {
            aux.set_lt(0, 1, true);
            aux.set_edge_sym(0, 1, true);
        });
        let bare_out = type_of(|aux| aux.set_lt(1, 0, true));
        for s in 0..3 {
            for t in 0..3 {
                if s == t {
                    continue;
                }
                let tp = qf_type(&m, &[s, t]).unwrap();
                let out = if m.lt(s, t) { edge_out.clone() } else { bare_out.clone() };
                table.insert(tp, out);
            }
        }
        assert!(matches!(
            gem_realize(&m, &Blueprint::Table(table)),
            Err(Error::BlueprintInconsistent(_))
        ));
    }

    #[test]
    fn merging_output_rejected() {
        let m = ordered_path();
        let mut table = BTreeMap::new();
        let merged = QfType {
            arity: 2,
            eq: vec![true, true, true, true],
            lt: vec![false; 4],
            edge: vec![false; 4],
        };
        for s in 0..3 {
            for t in 0..3 {
                if s != t {
                    table.insert(qf_type(&m, &[s, t]).unwrap(), merged.clone());
                }
            }
        }
        assert!(matches!(
            gem_realize(&m, &Blueprint::Table(table)),
            Err(Error::BlueprintInconsistent(_))
        ));
    }

    #[test]
    fn represents_identity_edge() {
        let samples = vec![ordered_path(), complete(4), path(5)];
        let out = check_represents(
            &Blueprint::Identity,
            &QfFormula::Edge(0, 1),
            IndexRel::Edge,
            &samples,
        )
        .unwrap();
        assert!(out.holds && !out.vacuous);
    }

    #[test]
    fn represents_fails_on_negating_blueprint() {
        let m = ordered_path();
        let mut table = BTreeMap::new();
        for s in 0..3 {
            for t in 0..3 {
                if s == t {
                    continue;
                }
                let tp = qf_type(&m, &[s, t]).unwrap();
                let mut out = tp.clone();
                out.edge = out.edge.iter().map(|&b| !b).collect();
                out.edge[0] = false;
                out.edge[3] = false;
                table.insert(tp, out);
            }
        }
        let out = check_represents(
            &Blueprint::Table(table),
            &QfFormula::Edge(0, 1),
            IndexRel::Edge,
            &[m],
        )
        .unwrap();
        assert!(!out.holds);
        let (si, tuple) = out.counterexample.unwrap();
        assert_eq!(si, 0);
        assert_eq!(tuple.len(), 2);
    }

    #[test]
    fn represents_vacuous_without_samples() {
        let out = check_represents(
            &Blueprint::Identity,
            &QfFormula::Edge(0, 1),
            IndexRel::Edge,
            &[],
        )
        .unwrap();
        assert!(out.holds && out.vacuous);
    }

    #[test]
    fn independence_on_path_and_triangle() {
        let p3 = path(3);
        let non_edge = RelStruct::new(2, &[], &[]).unwrap();
        let w = independence_witness(&p3, &QfFormula::Edge(0, 1), 1, &non_edge)
            .unwrap()
            .unwrap();
        assert_eq!(w.len(), 2);
        assert!(!p3.edge(w[0][0], w[1][0]));

        let k3 = complete(3);
        assert!(independence_witness(&k3, &QfFormula::Edge(0, 1), 1, &non_edge)
            .unwrap()
            .is_none());
    }

    #[test]
    fn independence_with_rich_structure() {
        // 8 vertices: one isolated pair, one edge, enough for both 2-patterns.
        let mut m = RelStruct::new(8, &[], &[]).unwrap();
        m.set_edge_sym(0, 1, true);
        m.set_edge_sym(2, 3, true);
        for g in [
            RelStruct::new(2, &[], &[]).unwrap(),
            RelStruct::new(2, &[], &[(0, 1), (1, 0)]).unwrap(),
        ] {
            let w = independence_witness(&m, &QfFormula::Edge(0, 1), 1, &g)
                .unwrap()
                .unwrap();
            assert_eq!(m.edge(w[0][0], w[1][0]), g.edge(0, 1));
        }
    }

    #[test]
    fn order_witness_examples() {
        let line = RelStruct::linear(4);
        let w = order_witness(&line, &QfFormula::Lt(0, 1), 1, 3)
            .unwrap()
            .unwrap();
        assert!(line.lt(w[0][0], w[1][0]) && line.lt(w[1][0], w[2][0]));

        let empty = RelStruct::new(3, &[], &[]).unwrap();
        assert!(order_witness(&empty, &QfFormula::Edge(0, 1), 1, 2)
            .unwrap()
            .is_none());

        // Half-graph: pair tuples (left, right); the cross edge from the
        // earlier left part to the later right part holds exactly one way.
        let h = half_graph(3);
        let w = order_witness(&h, &QfFormula::Edge(0, 3), 2, 3)
            .unwrap()
            .unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    assert_eq!(h.edge(w[a][0], w[b][1]), a < b);
                }
            }
        }
    }
}
