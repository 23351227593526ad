//! Finite structures with one binary order relation and one binary edge
//! relation. Both relations are stored as raw matrices: whether they must be a
//! linear order or a symmetric graph depends on the class being checked, so
//! the checks are predicates here rather than construction invariants.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelStruct {
    n: usize,
    lt: Vec<bool>,
    edge: Vec<bool>,
}

impl RelStruct {
    pub fn new(n: usize, lt_pairs: &[(usize, usize)], edge_pairs: &[(usize, usize)]) -> Result<RelStruct> {
        let mut s = RelStruct {
            n,
            lt: vec![false; n * n],
            edge: vec![false; n * n],
        };
        for &(a, b) in lt_pairs {
            s.check_element(a)?;
            s.check_element(b)?;
            s.lt[a * n + b] = true;
        }
        for &(a, b) in edge_pairs {
            s.check_element(a)?;
            s.check_element(b)?;
            s.edge[a * n + b] = true;
        }
        Ok(s)
    }

    /// Natural linear order on `0..n`, no edges.
    pub fn linear(n: usize) -> RelStruct {
        let mut lt = vec![false; n * n];
        for a in 0..n {
            for b in a + 1..n {
                lt[a * n + b] = true;
            }
        }
        RelStruct {
            n,
            lt,
            edge: vec![false; n * n],
        }
    }

    /// Linear order given as a ranking: `order[i]` is the element in position
    /// `i` from the bottom.
    pub fn from_ranking(order: &[usize], edge_pairs: &[(usize, usize)]) -> Result<RelStruct> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &a in order {
            if a >= n {
                return Err(Error::InvalidElement(a));
            }
            if seen[a] {
                return Err(Error::Input(format!("element {a} listed twice in order")));
            }
            seen[a] = true;
        }
        let mut s = RelStruct::new(n, &[], edge_pairs)?;
        for i in 0..n {
            for j in i + 1..n {
                s.lt[order[i] * n + order[j]] = true;
            }
        }
        Ok(s)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn check_element(&self, a: usize) -> Result<()> {
        if a < self.n {
            Ok(())
        } else {
            Err(Error::InvalidElement(a))
        }
    }

    pub fn lt(&self, a: usize, b: usize) -> bool {
        self.lt[a * self.n + b]
    }

    pub fn edge(&self, a: usize, b: usize) -> bool {
        self.edge[a * self.n + b]
    }

    pub fn set_edge(&mut self, a: usize, b: usize, val: bool) {
        self.edge[a * self.n + b] = val;
    }

    pub fn set_edge_sym(&mut self, a: usize, b: usize, val: bool) {
        self.edge[a * self.n + b] = val;
        self.edge[b * self.n + a] = val;
    }

    pub fn set_lt(&mut self, a: usize, b: usize, val: bool) {
        self.lt[a * self.n + b] = val;
    }

    pub fn lt_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| (0..self.n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.lt(a, b))
            .collect()
    }

    pub fn edge_pairs(&self) -> Vec<(usize, usize)> {
        (0..self.n)
            .flat_map(|a| (0..self.n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.edge(a, b))
            .collect()
    }

    /// Irreflexive, transitive, and total on distinct pairs.
    pub fn is_linear_order(&self) -> bool {
        for a in 0..self.n {
            if self.lt(a, a) {
                return false;
            }
            for b in 0..self.n {
                if a != b && self.lt(a, b) == self.lt(b, a) {
                    return false;
                }
                for c in 0..self.n {
                    if self.lt(a, b) && self.lt(b, c) && !self.lt(a, c) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Edges irreflexive and symmetric.
    pub fn is_graph(&self) -> bool {
        for a in 0..self.n {
            if self.edge(a, a) {
                return false;
            }
            for b in 0..self.n {
                if self.edge(a, b) != self.edge(b, a) {
                    return false;
                }
            }
        }
        true
    }

    /// Ranking of the elements when the order is linear.
    pub fn ranking(&self) -> Option<Vec<usize>> {
        if !self.is_linear_order() {
            return None;
        }
        let mut out: Vec<usize> = (0..self.n).collect();
        out.sort_by(|&a, &b| {
            if self.lt(a, b) {
                std::cmp::Ordering::Less
            } else if self.lt(b, a) {
                std::cmp::Ordering::Greater
            } else {
                std::cmp::Ordering::Equal
            }
        });
        Some(out)
    }

    /// Induced substructure on `keep`, renumbered in the given order.
    pub fn restrict(&self, keep: &[usize]) -> Result<RelStruct> {
        for &a in keep {
            self.check_element(a)?;
        }
        let m = keep.len();
        let mut s = RelStruct {
            n: m,
            lt: vec![false; m * m],
            edge: vec![false; m * m],
        };
        for (i, &a) in keep.iter().enumerate() {
            for (j, &b) in keep.iter().enumerate() {
                s.lt[i * m + j] = self.lt(a, b);
                s.edge[i * m + j] = self.edge(a, b);
            }
        }
        Ok(s)
    }
}

/// Canonical quantifier-free type of a tuple: equality, order, and edge facts
/// as position-indexed matrices. Equal types mean the tuples satisfy exactly
/// the same atomic formulas in their structures.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct QfType {
    pub arity: usize,
    pub eq: Vec<bool>,
    pub lt: Vec<bool>,
    pub edge: Vec<bool>,
}

pub fn qf_type(s: &RelStruct, tuple: &[usize]) -> Result<QfType> {
    for &a in tuple {
        s.check_element(a)?;
    }
    let m = tuple.len();
    let mut t = QfType {
        arity: m,
        eq: vec![false; m * m],
        lt: vec![false; m * m],
        edge: vec![false; m * m],
    };
    for i in 0..m {
        for j in 0..m {
            t.eq[i * m + j] = tuple[i] == tuple[j];
            t.lt[i * m + j] = s.lt(tuple[i], tuple[j]);
            t.edge[i * m + j] = s.edge(tuple[i], tuple[j]);
        }
    }
    Ok(t)
}

/// Do the given pairs extend to a consistent partial isomorphism fragment?
/// Checks order and edge agreement in both directions plus injectivity and
/// functionality.
pub fn is_partial_iso(m1: &RelStruct, m2: &RelStruct, pairs: &[(usize, usize)]) -> Result<bool> {
    for &(a, b) in pairs {
        m1.check_element(a)?;
        m2.check_element(b)?;
    }
    for (i, &(a, fa)) in pairs.iter().enumerate() {
        for &(b, fb) in &pairs[i..] {
            if (a == b) != (fa == fb) {
                return Ok(false);
            }
            if m1.lt(a, b) != m2.lt(fa, fb)
                || m1.lt(b, a) != m2.lt(fb, fa)
                || m1.edge(a, b) != m2.edge(fa, fb)
                || m1.edge(b, a) != m2.edge(fb, fa)
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Exhaustive backtracking isomorphism search. Returns the image vector
/// indexed by elements of `m1`, or `None` when sizes differ or no isomorphism
/// exists. The budget bounds the number of search nodes visited.
pub fn search_isomorphism(
    m1: &RelStruct,
    m2: &RelStruct,
    budget: usize,
) -> Result<Option<Vec<usize>>> {
    if m1.len() != m2.len() {
        return Ok(None);
    }
    let n = m1.len();
    let mut image: Vec<usize> = vec![];
    let mut used = vec![false; n];
    let mut nodes = 0usize;

    fn rec(
        m1: &RelStruct,
        m2: &RelStruct,
        image: &mut Vec<usize>,
        used: &mut Vec<bool>,
        nodes: &mut usize,
        budget: usize,
    ) -> Result<Option<Vec<usize>>> {
        let a = image.len();
        if a == m1.len() {
            return Ok(Some(image.clone()));
        }
        for b in 0..m2.len() {
            if used[b] {
                continue;
            }
            *nodes += 1;
            if *nodes > budget {
                return Err(Error::SearchBudgetExceeded { budget });
            }
            let consistent = (0..a).all(|x| {
                m1.lt(x, a) == m2.lt(image[x], b)
                    && m1.lt(a, x) == m2.lt(b, image[x])
                    && m1.edge(x, a) == m2.edge(image[x], b)
                    && m1.edge(a, x) == m2.edge(b, image[x])
            }) && m1.lt(a, a) == m2.lt(b, b)
                && m1.edge(a, a) == m2.edge(b, b);
            if !consistent {
                continue;
            }
            image.push(b);
            used[b] = true;
            if let Some(found) = rec(m1, m2, image, used, nodes, budget)? {
                return Ok(Some(found));
            }
            image.pop();
            used[b] = false;
        }
        Ok(None)
    }

    rec(m1, m2, &mut image, &mut used, &mut nodes, budget)
}

/// All tuples of the given arity over `0..n`, with repetition.
pub fn all_tuples(n: usize, arity: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..arity {
        out = out
            .into_iter()
            .flat_map(|t| {
                (0..n).map(move |x| {
                    let mut u = t.clone();
                    u.push(x);
                    u
                })
            })
            .collect();
    }
    out
}

/// All strictly increasing index sequences of the given length drawn from
/// `0..n`.
pub fn increasing_tuples(n: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![];
    let mut cur = vec![];
    fn rec(n: usize, len: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == len {
            out.push(cur.clone());
            return;
        }
        for x in start..n {
            cur.push(x);
            rec(n, len, x + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, len, 0, &mut cur, &mut out);
    out
}

/// Path graph on `n` vertices under the natural order.
pub fn path(n: usize) -> RelStruct {
    let mut s = RelStruct::linear(n);
    for a in 0..n.saturating_sub(1) {
        s.set_edge_sym(a, a + 1, true);
    }
    s
}

/// Complete graph on `n` vertices under the natural order.
pub fn complete(n: usize) -> RelStruct {
    let mut s = RelStruct::linear(n);
    for a in 0..n {
        for b in a + 1..n {
            s.set_edge_sym(a, b, true);
        }
    }
    s
}

/// Half-graph: vertices `0..n` are the left side, `n..2n` the right side,
/// with an edge between left `i` and right `n + j` exactly when `i < j`.
pub fn half_graph(n: usize) -> RelStruct {
    let mut s = RelStruct::linear(2 * n);
    for i in 0..n {
        for j in 0..n {
            if i < j {
                s.set_edge_sym(i, n + j, true);
            }
        }
    }
    s
}

/// Enumerates every symmetric irreflexive edge set on `n` vertices over the
/// natural order. 2^(n choose 2) structures; keep `n` small.
pub fn all_graphs(n: usize) -> Vec<RelStruct> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
        .collect();
    let m = pairs.len();
    (0..1usize << m)
        .map(|mask| {
            let mut s = RelStruct::linear(n);
            for (k, &(a, b)) in pairs.iter().enumerate() {
                if mask >> k & 1 == 1 {
                    s.set_edge_sym(a, b, true);
                }
            }
            s
        })
        .collect()
}

/// The set of elements named by a ranking position map, useful when tests
/// need deterministic tuple supports.
pub fn support(tuples: &[Vec<usize>]) -> BTreeSet<usize> {
    tuples.iter().flatten().copied().collect()
}
