//! Finite quasiorders and posets with the forcing-style conventions used
//! throughout the crate: `p <= q` means `q` carries more information, a set is
//! dense when every element has an upper bound inside it, and an antichain is a
//! set of pairwise incompatible elements.

use crate::error::{Error, Result};
use std::collections::BTreeSet;

/// Hard cap on universe size. Relation matrices are dense `Vec<bool>`, so
/// anything past this is outside the intended desk scale.
pub const MAX_ELEMENTS: usize = 64;

/// Finite reflexive transitive relation on `0..n`, optionally antisymmetric.
/// Labels are carried for I/O only; all algorithms speak element ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FinPoset {
    n: usize,
    le: Vec<bool>,
    labels: Vec<String>,
    antisymmetric: bool,
}

/// What the loader had to add to the raw `le` pairs to reach a quasiorder.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClosureReport {
    pub added_reflexive: usize,
    pub added_transitive: usize,
}

impl FinPoset {
    /// Builds from an arbitrary pair list, applying reflexive and transitive
    /// closure. The report says how many pairs closure added.
    pub fn from_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<(FinPoset, ClosureReport)> {
        if n > MAX_ELEMENTS {
            return Err(Error::Input(format!(
                "universe size {n} exceeds cap {MAX_ELEMENTS}"
            )));
        }
        let mut le = vec![false; n * n];
        for &(a, b) in pairs {
            if a >= n {
                return Err(Error::InvalidElement(a));
            }
            if b >= n {
                return Err(Error::InvalidElement(b));
            }
            le[a * n + b] = true;
        }
        let mut report = ClosureReport::default();
        for i in 0..n {
            if !le[i * n + i] {
                le[i * n + i] = true;
                report.added_reflexive += 1;
            }
        }
        // Floyd-Warshall style closure; counts only genuinely new pairs.
        for k in 0..n {
            for i in 0..n {
                if !le[i * n + k] {
                    continue;
                }
                for j in 0..n {
                    if le[k * n + j] && !le[i * n + j] {
                        le[i * n + j] = true;
                        report.added_transitive += 1;
                    }
                }
            }
        }
        let mut p = FinPoset {
            n,
            le,
            labels: (0..n).map(|i| i.to_string()).collect(),
            antisymmetric: true,
        };
        p.antisymmetric = p.compute_antisymmetric();
        Ok((p, report))
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<FinPoset> {
        if labels.len() != self.n {
            return Err(Error::Input(format!(
                "expected {} labels, got {}",
                self.n,
                labels.len()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    fn compute_antisymmetric(&self) -> bool {
        for a in 0..self.n {
            for b in 0..a {
                if self.le(a, b) && self.le(b, a) {
                    return false;
                }
            }
        }
        true
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn elements(&self) -> impl Iterator<Item = usize> {
        0..self.n
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, a: usize) -> &str {
        &self.labels[a]
    }

    pub fn find_label(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// True when the relation is antisymmetric, i.e. a partial order proper.
    pub fn is_partial_order(&self) -> bool {
        self.antisymmetric
    }

    #[inline]
    pub fn le(&self, a: usize, b: usize) -> bool {
        self.le[a * self.n + b]
    }

    #[inline]
    pub fn lt(&self, a: usize, b: usize) -> bool {
        self.le(a, b) && !self.le(b, a)
    }

    pub fn check_element(&self, a: usize) -> Result<()> {
        if a < self.n {
            Ok(())
        } else {
            Err(Error::InvalidElement(a))
        }
    }

    /// Common upper bound exists. Every element is compatible with itself.
    pub fn compatible(&self, a: usize, b: usize) -> bool {
        (0..self.n).any(|c| self.le(a, c) && self.le(b, c))
    }

    /// No common upper bound.
    pub fn incompatible(&self, a: usize, b: usize) -> bool {
        !self.compatible(a, b)
    }

    pub fn comparable(&self, a: usize, b: usize) -> bool {
        self.le(a, b) || self.le(b, a)
    }

    /// `{x : x <= a}`, the maximal directed set with top `a`.
    pub fn down_set(&self, a: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&x| self.le(x, a)).collect()
    }

    /// `{x : a <= x}`.
    pub fn up_set(&self, a: usize) -> BTreeSet<usize> {
        (0..self.n).filter(|&x| self.le(a, x)).collect()
    }

    pub fn maximal_elements(&self) -> BTreeSet<usize> {
        (0..self.n).filter(|&a| !(0..self.n).any(|b| self.lt(a, b))).collect()
    }

    /// Longest strict chain strictly below `a` (so minimal elements sit at level 0).
    pub fn level(&self, a: usize) -> usize {
        let mut memo = vec![usize::MAX; self.n];
        self.level_memo(a, &mut memo)
    }

    fn level_memo(&self, a: usize, memo: &mut Vec<usize>) -> usize {
        if memo[a] != usize::MAX {
            return memo[a];
        }
        memo[a] = 0; // cycle guard for quasiorders
        let mut best = 0;
        for b in 0..self.n {
            if self.lt(b, a) {
                best = best.max(1 + self.level_memo(b, memo));
            }
        }
        memo[a] = best;
        best
    }

    /// Tree-like: the predecessors of every element form a chain.
    pub fn is_tree_like(&self) -> bool {
        for a in 0..self.n {
            let below: Vec<usize> = (0..self.n).filter(|&x| self.lt(x, a)).collect();
            for (i, &x) in below.iter().enumerate() {
                for &y in &below[i + 1..] {
                    if !self.comparable(x, y) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Restricts to a subset, relabelling elements by their position in `keep`
    /// (ascending). Returns the restriction and the old-id list.
    pub fn restrict(&self, keep: &BTreeSet<usize>) -> Result<(FinPoset, Vec<usize>)> {
        let ids: Vec<usize> = keep.iter().copied().collect();
        for &a in &ids {
            self.check_element(a)?;
        }
        let m = ids.len();
        let mut le = vec![false; m * m];
        for (i, &a) in ids.iter().enumerate() {
            for (j, &b) in ids.iter().enumerate() {
                le[i * m + j] = self.le(a, b);
            }
        }
        let labels = ids.iter().map(|&a| self.labels[a].clone()).collect();
        let mut p = FinPoset {
            n: m,
            le,
            labels,
            antisymmetric: true,
        };
        p.antisymmetric = p.compute_antisymmetric();
        Ok((p, ids))
    }
}

/// Is `d` dense: every element has an upper bound in `d`?
pub fn is_dense(p: &FinPoset, d: &BTreeSet<usize>) -> Result<bool> {
    for &x in d {
        p.check_element(x)?;
    }
    Ok(p.elements().all(|a| d.iter().any(|&q| p.le(a, q))))
}

/// Density relative to a checked set: only elements of `at` need upper bounds in `d`.
pub fn is_dense_at(p: &FinPoset, d: &BTreeSet<usize>, at: &BTreeSet<usize>) -> Result<bool> {
    for &x in d.iter().chain(at.iter()) {
        p.check_element(x)?;
    }
    Ok(at.iter().all(|&a| d.iter().any(|&q| p.le(a, q))))
}

/// Is `g` directed: every two members have a common upper bound inside `g`?
/// The empty set is directed.
pub fn is_directed(p: &FinPoset, g: &BTreeSet<usize>) -> Result<bool> {
    for &x in g {
        p.check_element(x)?;
    }
    for &a in g {
        for &b in g {
            if a < b && !g.iter().any(|&c| p.le(a, c) && p.le(b, c)) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Unique greatest lower bound of `a` and `b` if it exists, `None` when the two
/// have no common lower bound at all. Two or more maximal lower bounds are an
/// error: the naming convention treats the meet as a function.
pub fn meet(p: &FinPoset, a: usize, b: usize) -> Result<Option<usize>> {
    p.check_element(a)?;
    p.check_element(b)?;
    if !p.is_partial_order() {
        return Err(Error::RequiresPartialOrder);
    }
    let lower: Vec<usize> = p
        .elements()
        .filter(|&x| p.le(x, a) && p.le(x, b))
        .collect();
    let maximal: Vec<usize> = lower
        .iter()
        .copied()
        .filter(|&x| !lower.iter().any(|&y| p.lt(x, y)))
        .collect();
    match maximal.len() {
        0 => Ok(None),
        1 => Ok(Some(maximal[0])),
        count => Err(Error::NonUniqueMaximalLowerBound { a, b, count }),
    }
}

/// All maximal lower bounds of the pair, for callers that tolerate ambiguity.
pub fn maximal_lower_bounds(p: &FinPoset, a: usize, b: usize) -> Vec<usize> {
    let lower: Vec<usize> = p
        .elements()
        .filter(|&x| p.le(x, a) && p.le(x, b))
        .collect();
    lower
        .iter()
        .copied()
        .filter(|&x| !lower.iter().any(|&y| p.lt(x, y)))
        .collect()
}

/// Maximal antichains: pairwise incompatible sets such that every element of
/// the poset is compatible with some member. Enumerated up to `cap`; the flag
/// reports truncation.
pub fn maximal_antichains(p: &FinPoset, cap: usize) -> (Vec<BTreeSet<usize>>, bool) {
    // Maximal antichains are exactly the inclusion-maximal independent sets of
    // the compatibility graph (ignoring the diagonal), enumerated by branching
    // on the lowest unresolved element.
    let n = p.len();
    let mut out = vec![];
    let mut truncated = false;
    let mut current: Vec<usize> = vec![];
    fn rec(
        p: &FinPoset,
        next: usize,
        current: &mut Vec<usize>,
        out: &mut Vec<BTreeSet<usize>>,
        truncated: &mut bool,
        cap: usize,
    ) {
        if *truncated {
            return;
        }
        let n = p.len();
        if next == n {
            // current is an antichain; keep it only if maximal.
            let maximal = (0..n).all(|q| current.iter().any(|&a| p.compatible(a, q)));
            if maximal {
                if out.len() >= cap {
                    *truncated = true;
                } else {
                    out.push(current.iter().copied().collect());
                }
            }
            return;
        }
        // Branch: include `next` if it stays an antichain, then exclude it.
        if current.iter().all(|&a| p.incompatible(a, next)) {
            current.push(next);
            rec(p, next + 1, current, out, truncated, cap);
            current.pop();
        }
        // Excluding is only fruitful if `next` can still be covered later or
        // is compatible with something already chosen; maximality is checked
        // at the leaves, so just recurse.
        rec(p, next + 1, current, out, truncated, cap);
    }
    if n == 0 {
        return (vec![BTreeSet::new()], false);
    }
    rec(p, 0, &mut current, &mut out, &mut truncated, cap);
    out.sort();
    out.dedup();
    (out, truncated)
}

/// Classification of an antichain member by the shape of its upper cone.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConeClass {
    /// The elements above `p` form a directed set.
    DirectedAbove,
    /// No element above `p` has a directed upper cone. Requires infinite
    /// branching below every extension, so it cannot occur on a finite poset;
    /// kept so certificates read the same at every scale.
    NoDirectedAbove,
}

/// A maximal antichain in which every member's upper cone is classified.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AntichainCert {
    pub members: Vec<(usize, ConeClass)>,
}

impl AntichainCert {
    pub fn member_set(&self) -> BTreeSet<usize> {
        self.members.iter().map(|&(a, _)| a).collect()
    }
}

fn up_cone_directed(p: &FinPoset, a: usize) -> bool {
    let up = p.up_set(a);
    // A cone is directed iff every two members have a common upper bound in it;
    // upper bounds of cone members are already in the cone.
    up.iter()
        .all(|&x| up.iter().all(|&y| x >= y || (0..p.len()).any(|c| p.le(x, c) && p.le(y, c))))
}

/// Splits the poset along a maximal antichain of elements that are either
/// trivial (directed upper cone) or past all hope of directedness; greedy over
/// the candidate set, which is dense, so the result is maximal in the whole poset.
pub fn z14_decompose(p: &FinPoset) -> AntichainCert {
    let n = p.len();
    let directed_above: Vec<bool> = (0..n).map(|a| up_cone_directed(p, a)).collect();
    let candidate: Vec<bool> = (0..n)
        .map(|a| {
            directed_above[a] || !(0..n).any(|q| p.le(a, q) && directed_above[q])
        })
        .collect();
    let mut chosen: Vec<usize> = vec![];
    for a in 0..n {
        if candidate[a] && chosen.iter().all(|&b| p.incompatible(a, b)) {
            chosen.push(a);
        }
    }
    AntichainCert {
        members: chosen
            .into_iter()
            .map(|a| {
                let class = if directed_above[a] {
                    ConeClass::DirectedAbove
                } else {
                    ConeClass::NoDirectedAbove
                };
                (a, class)
            })
            .collect(),
    }
}

/// Full binary-style sequence tree: all sequences over `0..lambda` of length
/// `< depth`, ordered by strict initial segment. Node ids follow breadth-first
/// order, so the root (empty sequence) is id 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqTree {
    pub lambda: usize,
    pub depth: usize,
    nodes: Vec<Vec<usize>>,
    poset: FinPoset,
}

fn seq_label(seq: &[usize]) -> String {
    if seq.iter().all(|&d| d < 10) {
        seq.iter().map(|d| d.to_string()).collect()
    } else {
        seq.iter()
            .map(|d| d.to_string())
            .collect::<Vec<_>>()
            .join(".")
    }
}

impl SeqTree {
    pub fn new(lambda: usize, depth: usize) -> Result<SeqTree> {
        if lambda == 0 || depth == 0 {
            return Err(Error::Input("sequence tree needs lambda >= 1, depth >= 1".into()));
        }
        let mut nodes: Vec<Vec<usize>> = vec![vec![]];
        let mut frontier = vec![vec![]];
        for _ in 1..depth {
            let mut next = vec![];
            for seq in &frontier {
                for d in 0..lambda {
                    let mut child = seq.clone();
                    child.push(d);
                    next.push(child);
                }
            }
            nodes.extend(next.iter().cloned());
            frontier = next;
        }
        if nodes.len() > MAX_ELEMENTS {
            return Err(Error::Input(format!(
                "sequence tree has {} nodes, cap is {MAX_ELEMENTS}",
                nodes.len()
            )));
        }
        let n = nodes.len();
        let mut pairs = vec![];
        for (i, a) in nodes.iter().enumerate() {
            for (j, b) in nodes.iter().enumerate() {
                if a.len() < b.len() && b[..a.len()] == a[..] {
                    pairs.push((i, j));
                }
            }
        }
        let (poset, _) = FinPoset::from_pairs(n, &pairs)?;
        let labels = nodes.iter().map(|s| seq_label(s)).collect();
        let poset = poset.with_labels(labels)?;
        Ok(SeqTree {
            lambda,
            depth,
            nodes,
            poset,
        })
    }

    pub fn poset(&self) -> &FinPoset {
        &self.poset
    }

    pub fn node_seq(&self, id: usize) -> &[usize] {
        &self.nodes[id]
    }

    pub fn node_len(&self, id: usize) -> usize {
        self.nodes[id].len()
    }

    /// Ids of all nodes of the given length.
    pub fn level_set(&self, len: usize) -> BTreeSet<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].len() == len)
            .collect()
    }

    /// Ids of all nodes of length >= `len`.
    pub fn min_length_set(&self, len: usize) -> BTreeSet<usize> {
        (0..self.nodes.len())
            .filter(|&i| self.nodes[i].len() >= len)
            .collect()
    }

    /// The branch through `digits`, cut to tree depth: all its initial
    /// segments present in the tree, a directed set.
    pub fn branch(&self, digits: &[usize]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for take in 0..self.depth {
            if take > digits.len() {
                break;
            }
            let prefix = &digits[..take.min(digits.len())];
            if let Some(i) = self.nodes.iter().position(|s| s == prefix) {
                out.insert(i);
            }
        }
        out
    }
}
