//! Entangledness of tuple families, the pair-coloring property behind it, and
//! the strict unembeddability micro-oracle.

use crate::error::{Error, Result};
use crate::formula::{ordered_edge, ordered_nonedge, QfFormula};
use crate::org::{build_atlas, OrgStructure};
use crate::rel::{all_tuples, qf_type, RelStruct};
use crate::twinship::TwinshipParam;
use itertools::Itertools;
use std::collections::{BTreeMap, BTreeSet};

/// Equal-length tuples, each without repetition, with pairwise disjoint
/// supports.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TupleFamily {
    pub tuples: Vec<Vec<usize>>,
    eps: usize,
}

impl TupleFamily {
    pub fn new(tuples: Vec<Vec<usize>>) -> Result<TupleFamily> {
        let eps = tuples.first().map_or(0, |t| t.len());
        let mut support: BTreeSet<usize> = BTreeSet::new();
        for t in &tuples {
            if t.len() != eps {
                return Err(Error::Input("tuples must share one length".into()));
            }
            let set: BTreeSet<usize> = t.iter().copied().collect();
            if set.len() != t.len() {
                return Err(Error::Input(format!("tuple {t:?} repeats an element")));
            }
            if set.iter().any(|a| support.contains(a)) {
                return Err(Error::Input(format!(
                    "tuple {t:?} shares elements with an earlier tuple"
                )));
            }
            support.extend(set);
        }
        Ok(TupleFamily { tuples, eps })
    }

    pub fn eps(&self) -> usize {
        self.eps
    }

    pub fn len(&self) -> usize {
        self.tuples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tuples.is_empty()
    }
}

pub type Cell = (usize, usize);

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EntangledOutcome {
    pub entangled: bool,
    /// First admissible pattern no index pair realizes.
    pub failing: Option<BTreeSet<Cell>>,
    /// How many patterns were actually demanded.
    pub checked: usize,
}

fn edge_pattern(g: &RelStruct, a: &[usize], b: &[usize]) -> BTreeSet<Cell> {
    let mut out = BTreeSet::new();
    for (z, &az) in a.iter().enumerate() {
        for (x, &bx) in b.iter().enumerate() {
            if g.edge(az, bx) {
                out.insert((z, x));
            }
        }
    }
    out
}

fn all_cells(eps: usize) -> Vec<Cell> {
    (0..eps).cartesian_product(0..eps).collect()
}

fn check_patterns(
    g: &RelStruct,
    fam: &TupleFamily,
    constraints: &[(Cell, Cell)],
) -> Result<EntangledOutcome> {
    for t in &fam.tuples {
        for &a in t {
            g.check_element(a)?;
        }
    }
    let mut realized: BTreeSet<BTreeSet<Cell>> = BTreeSet::new();
    for (i, a) in fam.tuples.iter().enumerate() {
        for b in fam.tuples.iter().skip(i + 1) {
            realized.insert(edge_pattern(g, a, b));
        }
    }
    let cells = all_cells(fam.eps());
    let mut checked = 0;
    for mask in 0u64..(1u64 << cells.len()) {
        let x: BTreeSet<Cell> = cells
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, &c)| c)
            .collect();
        if constraints
            .iter()
            .any(|(c1, c2)| x.contains(c1) != x.contains(c2))
        {
            continue;
        }
        checked += 1;
        if !realized.contains(&x) {
            return Ok(EntangledOutcome {
                entangled: false,
                failing: Some(x),
                checked,
            });
        }
    }
    Ok(EntangledOutcome {
        entangled: true,
        failing: None,
        checked,
    })
}

/// Clause check for graphs: every pattern of cross edges must be realized by
/// some index pair, exactly.
pub fn graph_entangled(g: &RelStruct, fam: &TupleFamily) -> Result<EntangledOutcome> {
    check_patterns(g, fam, &[])
}

/// Clause check for map-carrying structures. Validates the two uniformity
/// demands on the family first: every composite map moves slots the same way
/// in every tuple, and the order pattern between two tuples does not depend
/// on which index pair is taken. Patterns are then demanded only for sets
/// respecting the composite-map linkage: cells whose coordinates are tied by
/// a map must enter or leave together.
pub fn org_entangled(
    j: &OrgStructure,
    p: &TwinshipParam,
    fam: &TupleFamily,
    cap: usize,
) -> Result<EntangledOutcome> {
    for t in &fam.tuples {
        for &a in t {
            j.rel.check_element(a)?;
        }
    }
    let eps = fam.eps();
    let atlas = build_atlas(j, p, cap)?;

    let slot_pattern = |map: &crate::words::PartialMap, tuple: &[usize]| -> BTreeSet<Cell> {
        let mut out = BTreeSet::new();
        for (z, &az) in tuple.iter().enumerate() {
            if let Some(img) = map.get(az) {
                if let Some(x) = tuple.iter().position(|&b| b == img) {
                    out.insert((z, x));
                }
            }
        }
        out
    };

    let mut constraints: Vec<(Cell, Cell)> = vec![];
    for st in &atlas.states {
        let mut first: Option<BTreeSet<Cell>> = None;
        for t in &fam.tuples {
            let pat = slot_pattern(&st.map, t);
            match &first {
                None => first = Some(pat),
                Some(f) => {
                    if *f != pat {
                        return Err(Error::FamilyViolatesUniformity {
                            clause: format!(
                                "(d): word {} moves slots {:?} in one tuple but {:?} in another",
                                st.word, f, pat
                            ),
                        });
                    }
                }
            }
        }
        if let Some(pat) = first {
            for &(z1, x1) in &pat {
                for &(z2, x2) in &pat {
                    constraints.push(((z1, z2), (x1, x2)));
                }
            }
        }
    }

    // Order pattern of the concatenated pair, within-tuple facts included,
    // so a tuple ordered differently from its peers is a violation too.
    let mut order_pat: Option<BTreeSet<Cell>> = None;
    for (i, a) in fam.tuples.iter().enumerate() {
        for b in fam.tuples.iter().skip(i + 1) {
            let joint: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
            let mut pat = BTreeSet::new();
            for z in 0..2 * eps {
                for x in 0..2 * eps {
                    if j.rel.lt(joint[z], joint[x]) {
                        pat.insert((z, x));
                    }
                }
            }
            match &order_pat {
                None => order_pat = Some(pat),
                Some(f) => {
                    if *f != pat {
                        return Err(Error::FamilyViolatesUniformity {
                            clause: "(e): order pattern differs between index pairs".into(),
                        });
                    }
                }
            }
        }
    }

    check_patterns(&j.rel, fam, &constraints)
}

/// Symmetric total coloring of the unordered pairs of `0..lambda`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub lambda: usize,
    colors: BTreeMap<(usize, usize), usize>,
}

impl Coloring {
    pub fn new(lambda: usize, pairs: &[((usize, usize), usize)]) -> Result<Coloring> {
        let mut colors = BTreeMap::new();
        for &((i, j), c) in pairs {
            if i >= lambda || j >= lambda {
                return Err(Error::InvalidElement(i.max(j)));
            }
            if i == j {
                return Err(Error::Input(format!("pair ({i},{j}) is not a pair")));
            }
            let key = (i.min(j), i.max(j));
            if let Some(&prev) = colors.get(&key) {
                if prev != c {
                    return Err(Error::Input(format!(
                        "pair {key:?} colored twice: {prev} and {c}"
                    )));
                }
            }
            colors.insert(key, c);
        }
        for i in 0..lambda {
            for j in (i + 1)..lambda {
                if !colors.contains_key(&(i, j)) {
                    return Err(Error::Input(format!("pair ({i},{j}) has no color")));
                }
            }
        }
        Ok(Coloring { lambda, colors })
    }

    pub fn from_fn(lambda: usize, f: impl Fn(usize, usize) -> usize) -> Coloring {
        let mut colors = BTreeMap::new();
        for i in 0..lambda {
            for j in (i + 1)..lambda {
                colors.insert((i, j), f(i, j));
            }
        }
        Coloring { lambda, colors }
    }

    pub fn get(&self, i: usize, j: usize) -> usize {
        self.colors[&(i.min(j), i.max(j))]
    }

    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), usize)> + '_ {
        self.colors.iter().map(|(&k, &v)| (k, v))
    }
}

/// The five-cycle two-coloring: cycle edges one color, chords the other.
pub fn pentagon_coloring() -> Coloring {
    Coloring::from_fn(5, |i, j| {
        let d = (j - i) % 5;
        usize::from(d == 1 || d == 4)
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Pr0Outcome {
    pub holds: bool,
    /// (blocks, target table in row-major order) that no index pair realizes.
    pub counterexample: Option<(Vec<Vec<usize>>, Vec<usize>)>,
}

/// Does every separated family of `m` disjoint increasing `n`-blocks realize
/// every color table on some index pair? Separated means each block ends
/// before the next begins, so a family is just a sorted choice of `m * n`
/// points split consecutively.
pub fn pr0_check(c: &Coloring, n: usize, m: usize, mu: usize) -> Result<Pr0Outcome> {
    if n == 0 {
        return Err(Error::Input("blocks must be nonempty".into()));
    }
    if mu == 0 {
        return Err(Error::Input("at least one color is required".into()));
    }
    for ((i, j), col) in c.pairs() {
        if col >= mu {
            return Err(Error::Input(format!(
                "pair ({i},{j}) uses color {col}, outside 0..{mu}"
            )));
        }
    }
    let tables: Vec<Vec<usize>> = std::iter::repeat(0..mu)
        .take(n * n)
        .multi_cartesian_product()
        .collect();
    for points in (0..c.lambda).combinations(m * n) {
        let blocks: Vec<Vec<usize>> = points.chunks(n).map(|ch| ch.to_vec()).collect();
        for h in &tables {
            let mut found = false;
            'pairs: for a in 0..m {
                for b in (a + 1)..m {
                    let ok = (0..n).all(|k| {
                        (0..n).all(|l| c.get(blocks[a][k], blocks[b][l]) == h[k * n + l])
                    });
                    if ok {
                        found = true;
                        break 'pairs;
                    }
                }
            }
            if !found {
                return Ok(Pr0Outcome {
                    holds: false,
                    counterexample: Some((blocks, h.clone())),
                });
            }
        }
    }
    Ok(Pr0Outcome {
        holds: true,
        counterexample: None,
    })
}

/// Opaque term shape: a name and the number of argument slots.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermShape {
    pub name: String,
    pub eps: usize,
}

/// A pair of guard formulas with the tuple length they speak about.
#[derive(Debug, Clone)]
pub struct GammaPair {
    pub eps: usize,
    pub p1: QfFormula,
    pub p2: QfFormula,
}

/// The canonical guard pair: ascending edge against ascending non-edge.
pub fn gamma_org() -> Vec<GammaPair> {
    vec![GammaPair {
        eps: 2,
        p1: ordered_edge(),
        p2: ordered_nonedge(),
    }]
}

/// One assignment choice per element: which shape and which argument tuple.
pub type Assignment = Vec<(usize, Vec<usize>)>;

#[derive(Debug, Clone)]
pub struct UnembedOutcome {
    pub unembeddable: bool,
    /// An assignment that separates every guard pair, when one exists.
    pub escape: Option<Assignment>,
}

fn collapse_exists(
    i: &RelStruct,
    j: &RelStruct,
    assignment: &Assignment,
    gamma: &[GammaPair],
) -> Result<bool> {
    for pair in gamma {
        let tuples = all_tuples(i.len(), pair.eps);
        let mut sats1: Vec<&Vec<usize>> = vec![];
        let mut sats2: Vec<&Vec<usize>> = vec![];
        for t in &tuples {
            if pair.p1.eval(i, t)? {
                sats1.push(t);
            }
            if pair.p2.eval(i, t)? {
                sats2.push(t);
            }
        }
        for s1 in &sats1 {
            for s2 in &sats2 {
                if s1
                    .iter()
                    .zip(s2.iter())
                    .any(|(&a, &b)| assignment[a].0 != assignment[b].0)
                {
                    continue;
                }
                let concat = |s: &[usize]| -> Vec<usize> {
                    s.iter().flat_map(|&a| assignment[a].1.clone()).collect()
                };
                if qf_type(j, &concat(s1))? == qf_type(j, &concat(s2))? {
                    return Ok(true);
                }
            }
        }
    }
    Ok(false)
}

/// Strict unembeddability: every way of assigning each element a shaped term
/// over the target must collapse some guard pair, mapping an instance of one
/// guard and an instance of the other to argument tuples of equal type.
/// Argument tuples are required to be strictly increasing in the target
/// order.
pub fn unembeddable_oracle(
    i: &RelStruct,
    j: &RelStruct,
    sigma: &[TermShape],
    gamma: &[GammaPair],
    budget: usize,
) -> Result<UnembedOutcome> {
    if sigma.is_empty() {
        return Err(Error::Input("at least one term shape is required".into()));
    }
    let mut per_element: Vec<(usize, Vec<usize>)> = vec![];
    for (ix, shape) in sigma.iter().enumerate() {
        for t in all_tuples(j.len(), shape.eps) {
            let increasing = t.windows(2).all(|w| j.lt(w[0], w[1]));
            if increasing {
                per_element.push((ix, t));
            }
        }
    }
    if per_element.is_empty() {
        return Err(Error::Input(
            "no admissible term over the target structure".into(),
        ));
    }
    let mut spent = 0usize;
    let choices: Vec<&(usize, Vec<usize>)> = per_element.iter().collect();
    let assignments = std::iter::repeat(choices.iter())
        .take(i.len())
        .multi_cartesian_product()
        .pad_using(1, |_| vec![]);
    for picked in assignments {
        spent += 1;
        if spent > budget {
            return Err(Error::SearchBudgetExceeded { budget });
        }
        let assignment: Assignment = picked.iter().map(|c| (**c).clone()).collect();
        if !collapse_exists(i, j, &assignment, gamma)? {
            return Ok(UnembedOutcome {
                unembeddable: false,
                escape: Some(assignment),
            });
        }
    }
    Ok(UnembedOutcome {
        unembeddable: true,
        escape: None,
    })
}
