//! Twinship parameters: a poset of conditions together with a family of
//! subsets that solutions must meet, a cardinal tag, and a frontier marking
//! where a finite instance was truncated.
//!
//! The frontier is the device that makes finite instances checkable at all:
//! density and the strict-cone demand are requirements about what happens
//! arbitrarily far up, so at the truncation boundary they are suspended
//! rather than reported as failures.

use crate::error::{Error, Result};
use crate::poset::{self, FinPoset};
use crate::report::{ClauseReport, Verdict};
use itertools::Itertools;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ThetaTag {
    Omega,
    Uncountable,
}

/// `(T, B, theta)` plus the truncation frontier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwinshipParam {
    pub poset: FinPoset,
    pub family: Vec<BTreeSet<usize>>,
    pub theta: ThetaTag,
    pub frontier: BTreeSet<usize>,
}

/// Validation switches. `verbatim` drops the frontier relaxation and checks
/// every clause at every element; `levels_demand` adds the optional per-level
/// requirement that some member of the family sits entirely at high levels.
#[derive(Debug, Clone, Copy, Default)]
pub struct ValidateOpts {
    pub verbatim: bool,
    pub levels_demand: bool,
}

/// Result of the strongness check: either no directed set solves the
/// parameter, or a solving principal down-set is returned as counter-witness.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StrongCheck {
    pub strong: bool,
    pub witness: Option<BTreeSet<usize>>,
}

impl TwinshipParam {
    pub fn new(
        poset: FinPoset,
        family: Vec<BTreeSet<usize>>,
        theta: ThetaTag,
        frontier: BTreeSet<usize>,
    ) -> Result<TwinshipParam> {
        for d in &family {
            for &x in d {
                poset.check_element(x)?;
            }
        }
        for &x in &frontier {
            poset.check_element(x)?;
        }
        Ok(TwinshipParam {
            poset,
            family,
            theta,
            frontier,
        })
    }

    pub fn is_tree_like(&self) -> bool {
        self.poset.is_tree_like()
    }

    fn non_frontier(&self) -> Vec<usize> {
        self.poset
            .elements()
            .filter(|a| !self.frontier.contains(a))
            .collect()
    }

    /// Elements whose strict upper cone is nonempty and lies entirely in the
    /// frontier. Upward-looking clauses are suspended there too: such an
    /// element sees nothing but the truncation boundary above itself.
    fn effective_frontier_only_above(&self, a: usize) -> bool {
        let uppers: Vec<usize> = self
            .poset
            .elements()
            .filter(|&b| self.poset.lt(a, b))
            .collect();
        !uppers.is_empty() && uppers.iter().all(|b| self.frontier.contains(b))
    }
}

/// Per-clause check of the parameter conditions.
///
/// (A) requires unambiguous meets: no pair may have two or more maximal lower
/// bounds; pairs without any common lower bound pass. (B) is a symbolic
/// regularity condition with no finite content and always passes. (C.a)
/// requires every member of the family to be dense at non-frontier elements
/// and the family to be directed downward: each pairwise intersection must
/// contain a member. (C.b) requires the strict cone `{v : a < v or a # v}` of
/// each checked element to contain a member. (C.c) applies only under the
/// uncountable tag and requires the intersection of the whole family to
/// contain a member.
pub fn validate_param(p: &TwinshipParam, opts: ValidateOpts) -> ClauseReport {
    let mut rep = ClauseReport::new();
    let t = &p.poset;

    // (A)
    if !t.is_partial_order() {
        rep.fail("A", "relation is not antisymmetric");
    } else {
        let mut bad = None;
        'outer: for a in t.elements() {
            for b in t.elements().filter(|&b| b > a) {
                let mlb = poset::maximal_lower_bounds(t, a, b);
                if mlb.len() >= 2 {
                    bad = Some((a, b, mlb.len()));
                    break 'outer;
                }
            }
        }
        match bad {
            Some((a, b, k)) => rep.fail(
                "A",
                format!("pair ({}, {}) has {k} maximal lower bounds", t.label(a), t.label(b)),
            ),
            None => rep.pass("A", "every pair has at most one maximal lower bound"),
        }
    }

    // (B)
    let tag = match p.theta {
        ThetaTag::Omega => "omega",
        ThetaTag::Uncountable => "uncountable",
    };
    rep.push(
        "B",
        Verdict::Pass,
        format!("theta tag `{tag}` taken as a regular cardinal; nothing to compute"),
    );

    // (C.a): density of each member off the frontier, downward directedness of
    // the family.
    let check_at: BTreeSet<usize> = if opts.verbatim {
        t.elements().collect()
    } else {
        p.non_frontier().into_iter().collect()
    };
    let mut ca_fail = None;
    for (i, d) in p.family.iter().enumerate() {
        if !poset::is_dense_at(t, d, &check_at).expect("ids checked at construction") {
            let a = check_at
                .iter()
                .find(|&&a| !d.iter().any(|&q| t.le(a, q)))
                .copied()
                .unwrap();
            ca_fail = Some(format!(
                "member {i} has no element above {}",
                t.label(a)
            ));
            break;
        }
    }
    if ca_fail.is_none() {
        'pairs: for (i, d1) in p.family.iter().enumerate() {
            for (j, d2) in p.family.iter().enumerate().skip(i) {
                let inter: BTreeSet<usize> = d1.intersection(d2).copied().collect();
                if !p.family.iter().any(|d| d.is_subset(&inter)) {
                    ca_fail = Some(format!(
                        "intersection of members {i} and {j} contains no member"
                    ));
                    break 'pairs;
                }
            }
        }
    }
    match ca_fail {
        Some(msg) => rep.fail("C.a", msg),
        None => rep.pass(
            "C.a",
            format!(
                "{} members dense at {} checked elements; pairwise intersections contain members",
                p.family.len(),
                check_at.len()
            ),
        ),
    }

    // (C.b): the strict cone of each checked element contains a member.
    let mut cb_fail = None;
    let mut cb_checked = 0usize;
    for a in t.elements() {
        if !opts.verbatim {
            if p.frontier.contains(&a) || p.effective_frontier_only_above(a) {
                continue;
            }
        }
        cb_checked += 1;
        let cone: BTreeSet<usize> = t
            .elements()
            .filter(|&v| t.lt(a, v) || t.incompatible(a, v))
            .collect();
        if !p.family.iter().any(|d| d.is_subset(&cone)) {
            cb_fail = Some(format!(
                "strict cone of {} contains no member of the family",
                t.label(a)
            ));
            break;
        }
    }
    match cb_fail {
        Some(msg) => rep.fail("C.b", msg),
        None if cb_checked == 0 => rep.push(
            "C.b",
            Verdict::Degenerate("no element left to check after frontier exclusion".into()),
            String::new(),
        ),
        None => rep.pass("C.b", format!("strict cones of {cb_checked} elements each contain a member")),
    }

    // (C.c): whole-family intersection contains a member, uncountable tag only.
    match p.theta {
        ThetaTag::Omega => rep.push(
            "C.c",
            Verdict::Skipped("only applies under the uncountable tag".into()),
            String::new(),
        ),
        ThetaTag::Uncountable => {
            if p.family.is_empty() {
                rep.fail("C.c", "family is empty; the total intersection contains no member");
            } else {
                let mut total: BTreeSet<usize> = p.family[0].clone();
                for d in &p.family[1..] {
                    total = total.intersection(d).copied().collect();
                }
                if p.family.iter().any(|d| d.is_subset(&total)) {
                    rep.pass("C.c", "total intersection contains a member");
                } else {
                    rep.fail("C.c", "total intersection contains no member");
                }
            }
        }
    }

    // Optional extra demand: for every level some member lives wholly at or
    // above that level. Off by default.
    if opts.levels_demand {
        let max_level = t.elements().map(|a| t.level(a)).max().unwrap_or(0);
        let mut d_fail = None;
        for eps in 0..=max_level {
            if !p
                .family
                .iter()
                .any(|d| !d.is_empty() && d.iter().all(|&x| t.level(x) >= eps))
            {
                d_fail = Some(format!("no member lies entirely at level >= {eps}"));
                break;
            }
        }
        match d_fail {
            Some(msg) => rep.fail("D", msg),
            None => rep.pass("D", format!("levels 0..={max_level} each dominated by a member")),
        }
    }

    rep
}

/// `G` solves the parameter when it is directed and meets every member of the
/// family.
pub fn solves(p: &TwinshipParam, g: &BTreeSet<usize>) -> Result<bool> {
    if !poset::is_directed(&p.poset, g)? {
        return Ok(false);
    }
    Ok(p.family.iter().all(|d| !d.is_disjoint(g)))
}

/// A parameter is strong when no directed subset meets every member of the
/// family. Finitely, any nonempty directed set is contained in the principal
/// down-set of its maximum, so scanning `down(m)` over all `m` is exhaustive;
/// the empty set only matters when the family itself is empty.
pub fn is_strong(p: &TwinshipParam) -> StrongCheck {
    if p.family.is_empty() {
        return StrongCheck {
            strong: false,
            witness: Some(BTreeSet::new()),
        };
    }
    for m in p.poset.elements() {
        let down = p.poset.down_set(m);
        if p.family.iter().all(|d| !d.is_disjoint(&down)) {
            return StrongCheck {
                strong: false,
                witness: Some(down),
            };
        }
    }
    StrongCheck {
        strong: true,
        witness: None,
    }
}

/// A forcing notion with a tree of possible generic prefixes: each condition
/// forces some longest prefix, monotonically, and every tree node is forced by
/// at least one condition.
#[derive(Debug, Clone)]
pub struct ForcingExample {
    pub lam: usize,
    pub theta: ThetaTag,
    pub tree: crate::poset::SeqTree,
    pub conditions: FinPoset,
    /// Condition id to tree node id: the longest prefix that condition forces.
    pub name: Vec<usize>,
}

impl ForcingExample {
    pub fn new(
        lam: usize,
        theta: ThetaTag,
        tree: crate::poset::SeqTree,
        conditions: FinPoset,
        name: Vec<usize>,
    ) -> Result<ForcingExample> {
        if lam < 2 {
            return Err(Error::Input(format!("alphabet size must be >= 2, got {lam}")));
        }
        if name.len() != conditions.len() {
            return Err(Error::Input(format!(
                "name map covers {} conditions, poset has {}",
                name.len(),
                conditions.len()
            )));
        }
        let tp = tree.poset();
        for &nu in &name {
            tp.check_element(nu)?;
        }
        for p in conditions.elements() {
            for q in conditions.elements() {
                if conditions.le(p, q) && !tp.le(name[p], name[q]) {
                    return Err(Error::Input(format!(
                        "name map is not monotone at conditions {p} <= {q}"
                    )));
                }
            }
        }
        for nu in tp.elements() {
            if !name.iter().any(|&f| tp.le(nu, f)) {
                return Err(Error::Input(format!(
                    "tree node {} is forced by no condition",
                    tp.label(nu)
                )));
            }
        }
        Ok(ForcingExample {
            lam,
            theta,
            tree,
            conditions,
            name,
        })
    }
}

/// Output of `derive_from_forcing`; `truncated` reports that the enumeration
/// hit the cap and the family may be incomplete.
#[derive(Debug, Clone)]
pub struct DerivedParam {
    pub param: TwinshipParam,
    pub truncated: bool,
}

/// Builds a parameter from a forcing example. The family collects, for every
/// maximal antichain `I` of the condition poset and every choice `f` of a
/// forced prefix per member of `I`, the union of the upward cones of the
/// chosen prefixes; it is then closed under pairwise intersection. The cap
/// bounds both the antichain enumeration and the number of `(I, f)` pairs
/// expanded.
pub fn derive_from_forcing(m: &ForcingExample, antichain_cap: usize) -> Result<DerivedParam> {
    let tp = m.tree.poset();
    let (antichains, mut truncated) = poset::maximal_antichains(&m.conditions, antichain_cap);

    let mut family: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    let mut pairs_seen = 0usize;
    'outer: for i in &antichains {
        let members: Vec<usize> = i.iter().copied().collect();
        let choices: Vec<Vec<usize>> = members
            .iter()
            .map(|&p| tp.down_set(m.name[p]).into_iter().collect())
            .collect();
        for f in choices.into_iter().multi_cartesian_product() {
            if pairs_seen >= antichain_cap {
                truncated = true;
                break 'outer;
            }
            pairs_seen += 1;
            let mut d: BTreeSet<usize> = BTreeSet::new();
            for &nu in &f {
                d.extend(tp.up_set(nu));
            }
            family.insert(d);
        }
    }

    // Close under pairwise intersection. Intersections of unions of upward
    // cones are again unions of upward cones, so this terminates quickly.
    loop {
        let snapshot: Vec<BTreeSet<usize>> = family.iter().cloned().collect();
        let before = family.len();
        for (a, d1) in snapshot.iter().enumerate() {
            for d2 in snapshot.iter().skip(a + 1) {
                if family.len() >= antichain_cap.max(snapshot.len()) + antichain_cap {
                    truncated = true;
                    break;
                }
                family.insert(d1.intersection(d2).copied().collect());
            }
        }
        if family.len() == before {
            break;
        }
    }

    let frontier = tp.maximal_elements();
    let param = TwinshipParam::new(tp.clone(), family.into_iter().collect(), m.theta, frontier)?;
    Ok(DerivedParam { param, truncated })
}

/// Output of the well-founding transform, keeping the node sequences so
/// callers can map elements of the new poset back to the old one.
#[derive(Debug, Clone)]
pub struct TransformedParam {
    pub param: TwinshipParam,
    /// Element id in the new poset to the increasing sequence it stands for.
    pub sequences: Vec<Vec<usize>>,
}

/// Replaces the poset by the poset of nonempty strictly increasing sequences
/// whose first entry is at or above `r`, ordered by initial segment. Each
/// member `D` of the family becomes the set of sequences meeting `D`; the
/// frontier becomes the set of sequences ending in a frontier element. The
/// result is always tree-like: common lower bounds of two sequences are their
/// common prefixes.
pub fn wellfound_transform(p: &TwinshipParam, r: usize) -> Result<TransformedParam> {
    let t = &p.poset;
    t.check_element(r)?;

    let starts: Vec<usize> = t.elements().filter(|&a| t.le(r, a)).collect();
    let mut sequences: Vec<Vec<usize>> = vec![];
    let mut stack: Vec<Vec<usize>> = starts.iter().map(|&a| vec![a]).collect();
    while let Some(seq) = stack.pop() {
        let last = *seq.last().unwrap();
        for b in t.elements().filter(|&b| t.lt(last, b)) {
            let mut ext = seq.clone();
            ext.push(b);
            stack.push(ext);
        }
        sequences.push(seq);
    }
    sequences.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));

    let index: BTreeMap<&[usize], usize> = sequences
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_slice(), i))
        .collect();
    let mut le_pairs: Vec<(usize, usize)> = vec![];
    for (i, s) in sequences.iter().enumerate() {
        for cut in 1..s.len() {
            let j = index[&s[..cut]];
            le_pairs.push((j, i));
        }
    }
    let labels: Vec<String> = sequences
        .iter()
        .map(|s| format!("[{}]", s.iter().map(|&a| t.label(a)).join(",")))
        .collect();
    let (new_poset, _) = FinPoset::from_pairs(sequences.len(), &le_pairs)?;
    let new_poset = new_poset.with_labels(labels)?;

    let mut seen: BTreeSet<BTreeSet<usize>> = BTreeSet::new();
    let mut new_family: Vec<BTreeSet<usize>> = vec![];
    for d in &p.family {
        let image: BTreeSet<usize> = sequences
            .iter()
            .enumerate()
            .filter(|(_, s)| s.iter().any(|a| d.contains(a)))
            .map(|(i, _)| i)
            .collect();
        if seen.insert(image.clone()) {
            new_family.push(image);
        }
    }

    let new_frontier: BTreeSet<usize> = sequences
        .iter()
        .enumerate()
        .filter(|(_, s)| p.frontier.contains(s.last().unwrap()))
        .map(|(i, _)| i)
        .collect();

    let param = TwinshipParam::new(new_poset, new_family, p.theta, new_frontier)?;
    Ok(TransformedParam { param, sequences })
}
