//! Quantifier-free indiscernibility, staged isomorphism games, and farness
//! checks between structures.

use crate::error::{Error, Result};
use crate::formula::QfFormula;
use crate::poset::FinPoset;
use crate::rel::{all_tuples, qf_type, QfType, RelStruct};
use crate::words::PartialMap;
use itertools::Itertools;
use std::collections::{BTreeMap, BTreeSet};

/// Increasing chain of subuniverses whose union is the whole structure.
#[derive(Debug, Clone)]
pub struct Filtration {
    pub structure: RelStruct,
    pub stages: Vec<BTreeSet<usize>>,
}

impl Filtration {
    pub fn new(structure: RelStruct, stages: Vec<BTreeSet<usize>>) -> Result<Filtration> {
        for stage in &stages {
            for &a in stage {
                structure.check_element(a)?;
            }
        }
        for w in stages.windows(2) {
            if !w[0].is_subset(&w[1]) {
                return Err(Error::Input("stages must be increasing".into()));
            }
        }
        let union: BTreeSet<usize> = stages.iter().flatten().copied().collect();
        if union.len() != structure.len() {
            return Err(Error::Input("stages must cover the whole universe".into()));
        }
        Ok(Filtration { structure, stages })
    }

    /// Stages holding the first `c` elements for each count in the list.
    pub fn by_prefix_sizes(structure: RelStruct, counts: &[usize]) -> Result<Filtration> {
        let stages = counts.iter().map(|&c| (0..c).collect()).collect();
        Filtration::new(structure, stages)
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }
}

/// Are all increasing-index concatenations of each arity up to the bound of
/// equal quantifier-free type?
pub fn is_qf_indiscernible(
    i: &RelStruct,
    tuples: &[Vec<usize>],
    max_arity: usize,
) -> Result<bool> {
    if let Some(first) = tuples.first() {
        if tuples.iter().any(|t| t.len() != first.len()) {
            return Err(Error::Input("tuples must share one length".into()));
        }
    }
    for m in 1..=max_arity.min(tuples.len()) {
        let mut expected: Option<QfType> = None;
        for sel in (0..tuples.len()).combinations(m) {
            let concat: Vec<usize> = sel.iter().flat_map(|&ix| tuples[ix].clone()).collect();
            let tp = qf_type(i, &concat)?;
            match &expected {
                None => expected = Some(tp),
                Some(e) => {
                    if *e != tp {
                        return Ok(false);
                    }
                }
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Winner {
    Iso,
    Anti,
}

/// Depth-one certificate for the winner: a stage no response survives, or one
/// surviving response per possible opening stage.
#[derive(Debug, Clone)]
pub enum Opening {
    AntiStage(usize),
    IsoResponses(Vec<(usize, PartialMap)>),
    None,
}

#[derive(Debug, Clone)]
pub struct GameSolution {
    pub winner: Winner,
    pub opening: Opening,
}

struct GameCtx<'a> {
    mfil: &'a Filtration,
    nfil: &'a Filtration,
    budget: usize,
    spent: usize,
}

impl GameCtx<'_> {
    fn charge(&mut self) -> Result<()> {
        self.spent += 1;
        if self.spent > self.budget {
            return Err(Error::SearchBudgetExceeded { budget: self.budget });
        }
        Ok(())
    }

    /// Every bijection between the two stage sets that extends `f` and
    /// preserves order and edges both ways.
    fn stage_isos(&mut self, alpha: usize, f: &PartialMap) -> Result<Vec<PartialMap>> {
        let ms: Vec<usize> = self.mfil.stages[alpha].iter().copied().collect();
        let ns = &self.nfil.stages[alpha];
        if ms.len() != ns.len() {
            return Ok(vec![]);
        }
        let todo: Vec<usize> = ms.iter().copied().filter(|a| f.get(*a).is_none()).collect();
        let mut out = vec![];
        let mut cur = f.clone();
        self.place(&todo, 0, ns, &mut cur, &mut out)?;
        Ok(out)
    }

    fn place(
        &mut self,
        todo: &[usize],
        i: usize,
        ns: &BTreeSet<usize>,
        cur: &mut PartialMap,
        out: &mut Vec<PartialMap>,
    ) -> Result<()> {
        self.charge()?;
        if i == todo.len() {
            out.push(cur.clone());
            return Ok(());
        }
        let a = todo[i];
        let taken: BTreeSet<usize> = cur.range().collect();
        for &b in ns {
            if taken.contains(&b) {
                continue;
            }
            let m1 = &self.mfil.structure;
            let m2 = &self.nfil.structure;
            let fits = cur.pairs().all(|(x, y)| {
                m1.lt(a, x) == m2.lt(b, y)
                    && m1.lt(x, a) == m2.lt(y, b)
                    && m1.edge(a, x) == m2.edge(b, y)
                    && m1.edge(x, a) == m2.edge(y, b)
            }) && m1.lt(a, a) == m2.lt(b, b)
                && m1.edge(a, a) == m2.edge(b, b);
            if !fits {
                continue;
            }
            let mut next = cur.clone();
            next.insert(a, b)?;
            self.place(todo, i + 1, ns, &mut next, out)?;
        }
        Ok(())
    }

    fn iso_survives(
        &mut self,
        moves_left: usize,
        prev: Option<usize>,
        f: &PartialMap,
        memo: &mut BTreeMap<(usize, Option<usize>, PartialMap), bool>,
    ) -> Result<bool> {
        if moves_left == 0 {
            return Ok(true);
        }
        let key = (moves_left, prev, f.clone());
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        self.charge()?;
        let start = prev.map_or(0, |p| p + 1);
        let mut survives = true;
        for alpha in start..self.mfil.len() {
            let mut answered = false;
            for g in self.stage_isos(alpha, f)? {
                if self.iso_survives(moves_left - 1, Some(alpha), &g, memo)? {
                    answered = true;
                    break;
                }
            }
            if !answered {
                survives = false;
                break;
            }
        }
        memo.insert(key, survives);
        Ok(survives)
    }
}

/// Solves the staged isomorphism game by backward induction: the challenger
/// picks strictly increasing stages, the matcher answers with extending
/// stage isomorphisms, and a stuck challenger loses.
pub fn solve_iso_game(
    mfil: &Filtration,
    nfil: &Filtration,
    zeta: usize,
    budget: usize,
) -> Result<GameSolution> {
    if mfil.len() != nfil.len() {
        return Err(Error::Input("filtrations must have equal length".into()));
    }
    let mut ctx = GameCtx { mfil, nfil, budget, spent: 0 };
    let mut memo = BTreeMap::new();
    let empty = PartialMap::new();
    let survives = ctx.iso_survives(zeta, None, &empty, &mut memo)?;
    let opening = if zeta == 0 || mfil.is_empty() {
        Opening::None
    } else if survives {
        let mut responses = vec![];
        for alpha in 0..mfil.len() {
            for g in ctx.stage_isos(alpha, &empty)? {
                if ctx.iso_survives(zeta - 1, Some(alpha), &g, &mut memo)? {
                    responses.push((alpha, g));
                    break;
                }
            }
        }
        Opening::IsoResponses(responses)
    } else {
        let mut stage = None;
        for alpha in 0..mfil.len() {
            let mut answered = false;
            for g in ctx.stage_isos(alpha, &empty)? {
                if ctx.iso_survives(zeta - 1, Some(alpha), &g, &mut memo)? {
                    answered = true;
                    break;
                }
            }
            if !answered {
                stage = Some(alpha);
                break;
            }
        }
        match stage {
            Some(alpha) => Opening::AntiStage(alpha),
            None => Opening::None,
        }
    };
    Ok(GameSolution {
        winner: if survives { Winner::Iso } else { Winner::Anti },
        opening,
    })
}

/// Variant where the challenger must also climb a finite clock poset; the
/// game ends when no strictly larger clock node remains.
pub fn solve_tree_clock_game(
    mfil: &Filtration,
    nfil: &Filtration,
    clock: &FinPoset,
    budget: usize,
) -> Result<Winner> {
    if mfil.len() != nfil.len() {
        return Err(Error::Input("filtrations must have equal length".into()));
    }
    let mut ctx = GameCtx { mfil, nfil, budget, spent: 0 };
    let mut memo: BTreeMap<(Option<usize>, Option<usize>, PartialMap), bool> = BTreeMap::new();

    fn survives(
        ctx: &mut GameCtx<'_>,
        clock: &FinPoset,
        prev_stage: Option<usize>,
        prev_clock: Option<usize>,
        f: &PartialMap,
        memo: &mut BTreeMap<(Option<usize>, Option<usize>, PartialMap), bool>,
    ) -> Result<bool> {
        let key = (prev_stage, prev_clock, f.clone());
        if let Some(&v) = memo.get(&key) {
            return Ok(v);
        }
        ctx.charge()?;
        let start = prev_stage.map_or(0, |p| p + 1);
        let clock_moves: Vec<usize> = clock
            .elements()
            .filter(|&t| match prev_clock {
                None => true,
                Some(p) => clock.lt(p, t),
            })
            .collect();
        let mut ok = true;
        'moves: for alpha in start..ctx.mfil.len() {
            for &t in &clock_moves {
                let mut answered = false;
                for g in ctx.stage_isos(alpha, f)? {
                    if survives(ctx, clock, Some(alpha), Some(t), &g, memo)? {
                        answered = true;
                        break;
                    }
                }
                if !answered {
                    ok = false;
                    break 'moves;
                }
            }
        }
        memo.insert(key, ok);
        Ok(ok)
    }

    let empty = PartialMap::new();
    Ok(
        if survives(&mut ctx, clock, None, None, &empty, &mut memo)? {
            Winner::Iso
        } else {
            Winner::Anti
        },
    )
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FarOutcome {
    pub far: bool,
    pub degenerate: Option<String>,
}

/// Farness over a fixed witness list: for every index set of size at least
/// `u_min` and every reassignment of its tuples into the second structure,
/// some increasing selection sees the formula on one side and its negation on
/// the other.
pub fn is_far(
    m1: &RelStruct,
    m2: &RelStruct,
    phi: &QfFormula,
    n: usize,
    k: usize,
    witness: &[Vec<usize>],
    u_min: usize,
) -> Result<FarOutcome> {
    if phi.min_arity() > n * k {
        return Err(Error::Input(format!(
            "formula mentions position {}, but {} tuples of length {} give {} slots",
            phi.min_arity() - 1,
            n,
            k,
            n * k
        )));
    }
    for t in witness {
        if t.len() != k {
            return Err(Error::Input(format!(
                "witness tuple has length {}, expected {k}",
                t.len()
            )));
        }
        for &a in t {
            m1.check_element(a)?;
        }
    }
    let lam = witness.len();
    if n > lam {
        return Ok(FarOutcome {
            far: false,
            degenerate: Some(format!(
                "no selection of {n} indices exists among {lam} witness tuples"
            )),
        });
    }
    let degenerate = if u_min > lam {
        Some(format!(
            "no index set of size {u_min} exists among {lam} witness tuples"
        ))
    } else {
        None
    };
    let b_candidates = all_tuples(m2.len(), k);
    for u in (0..lam).powerset() {
        if u.len() < u_min {
            continue;
        }
        if u.is_empty() {
            // The empty index set carries the empty assignment, which admits
            // no selection and hence no flip.
            return Ok(FarOutcome { far: false, degenerate });
        }
        for bs in std::iter::repeat(b_candidates.iter())
            .take(u.len())
            .multi_cartesian_product()
        {
            let mut flipped = false;
            for sel in (0..u.len()).combinations(n) {
                let a_concat: Vec<usize> = sel
                    .iter()
                    .flat_map(|&j| witness[u[j]].clone())
                    .collect();
                let b_concat: Vec<usize> = sel.iter().flat_map(|&j| bs[j].clone()).collect();
                if phi.eval(m1, &a_concat)? != phi.eval(m2, &b_concat)? {
                    flipped = true;
                    break;
                }
            }
            if !flipped {
                return Ok(FarOutcome { far: false, degenerate });
            }
        }
    }
    Ok(FarOutcome { far: true, degenerate })
}

/// Multi-family farness: true when no choice of index sets admits an
/// assignment into the second structure preserving the formula on every
/// increasing selection within each family.
pub fn is_sigma_far(
    m1: &RelStruct,
    m2: &RelStruct,
    phi: &QfFormula,
    n: usize,
    k: usize,
    witnesses: &[Vec<Vec<usize>>],
    u_min: usize,
    budget: usize,
) -> Result<bool> {
    for fam in witnesses {
        for t in fam {
            if t.len() != k {
                return Err(Error::Input(format!(
                    "witness tuple has length {}, expected {k}",
                    t.len()
                )));
            }
            for &a in t {
                m1.check_element(a)?;
            }
        }
    }
    let mut spent = 0usize;
    let mut charge = |amount: usize| -> Result<()> {
        spent += amount;
        if spent > budget {
            Err(Error::SearchBudgetExceeded { budget })
        } else {
            Ok(())
        }
    };
    let b_candidates = all_tuples(m2.len(), k);
    let u_choices: Vec<Vec<Vec<usize>>> = witnesses
        .iter()
        .map(|fam| {
            (0..fam.len())
                .powerset()
                .filter(|u| u.len() >= u_min)
                .collect()
        })
        .collect();
    if u_choices.iter().any(|c| c.is_empty()) {
        // Some family admits no index set of the demanded size, so the
        // quantifier over choices is empty and nothing can obstruct.
        return Ok(true);
    }
    for choice in u_choices
        .iter()
        .map(|c| c.iter())
        .multi_cartesian_product()
        .pad_using(1, |_| vec![])
    {
        let slots: usize = choice.iter().map(|u| u.len()).sum();
        if slots == 0 {
            // Nothing selected: the empty assignment preserves vacuously.
            return Ok(false);
        }
        let mut preserved_exists = false;
        'assign: for bs in std::iter::repeat(b_candidates.iter())
            .take(slots)
            .multi_cartesian_product()
        {
            charge(1)?;
            let mut offset = 0;
            for (fam_ix, u) in choice.iter().enumerate() {
                let fam = &witnesses[fam_ix];
                if u.len() >= n {
                    for sel in (0..u.len()).combinations(n) {
                        let a_concat: Vec<usize> =
                            sel.iter().flat_map(|&j| fam[u[j]].clone()).collect();
                        let b_concat: Vec<usize> = sel
                            .iter()
                            .flat_map(|&j| bs[offset + j].clone())
                            .collect();
                        if phi.eval(m1, &a_concat)? != phi.eval(m2, &b_concat)? {
                            continue 'assign;
                        }
                    }
                }
                offset += u.len();
            }
            preserved_exists = true;
            break;
        }
        if preserved_exists {
            return Ok(false);
        }
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rel::{complete, path};

    const BUDGET: usize = 1_000_000;

    #[test]
    fn filtration_validation() {
        let m = path(3);
        assert!(Filtration::by_prefix_sizes(m.clone(), &[1, 2, 3]).is_ok());
        let shrink = vec![BTreeSet::from([0, 1]), BTreeSet::from([0])];
        assert!(Filtration::new(m.clone(), shrink).is_err());
        let partial = vec![BTreeSet::from([0, 1])];
        assert!(Filtration::new(m, partial).is_err());
    }

    #[test]
    fn indiscernibility_examples() {
        let edgeless = RelStruct::new(3, &[], &[]).unwrap();
        assert!(is_qf_indiscernible(&edgeless, &[vec![1], vec![1], vec![1]], 3).unwrap());

        let line = RelStruct::linear(3);
        assert!(is_qf_indiscernible(&line, &[vec![0], vec![1], vec![2]], 3).unwrap());

        let p3 = path(3);
        // 0-1 is an edge, 0-2 is not.
        assert!(!is_qf_indiscernible(&p3, &[vec![0], vec![1], vec![2]], 2).unwrap());
    }

    fn p3_filtration() -> Filtration {
        Filtration::by_prefix_sizes(path(3), &[1, 2, 3]).unwrap()
    }

    fn k3_filtration() -> Filtration {
        Filtration::by_prefix_sizes(complete(3), &[1, 2, 3]).unwrap()
    }

    #[test]
    fn identical_filtrations_favor_iso() {
        let f = p3_filtration();
        for zeta in 0..=2 {
            let sol = solve_iso_game(&f, &f, zeta, BUDGET).unwrap();
            assert_eq!(sol.winner, Winner::Iso, "zeta {zeta}");
        }
    }

    #[test]
    fn path_vs_triangle_anti_wins() {
        let sol = solve_iso_game(&p3_filtration(), &k3_filtration(), 1, BUDGET).unwrap();
        assert_eq!(sol.winner, Winner::Anti);
        // The winning opening is the whole-structure stage.
        match sol.opening {
            Opening::AntiStage(alpha) => assert_eq!(alpha, 2),
            ref other => panic!("expected a challenger stage, got {other:?}"),
        }
    }

    #[test]
    fn zero_moves_is_vacuous() {
        let sol = solve_iso_game(&p3_filtration(), &k3_filtration(), 0, BUDGET).unwrap();
        assert_eq!(sol.winner, Winner::Iso);
    }

    #[test]
    fn anti_win_is_monotone_in_moves() {
        for zeta in 1..=3 {
            let sol = solve_iso_game(&p3_filtration(), &k3_filtration(), zeta, BUDGET).unwrap();
            assert_eq!(sol.winner, Winner::Anti, "zeta {zeta}");
        }
    }

    #[test]
    fn budget_is_enforced() {
        assert!(matches!(
            solve_iso_game(&p3_filtration(), &k3_filtration(), 2, 3),
            Err(Error::SearchBudgetExceeded { budget: 3 })
        ));
    }

    #[test]
    fn empty_clock_is_an_iso_win() {
        let clock = FinPoset::from_pairs(0, &[]).unwrap().0;
        let w = solve_tree_clock_game(&p3_filtration(), &k3_filtration(), &clock, BUDGET).unwrap();
        assert_eq!(w, Winner::Iso);
    }

    #[test]
    fn single_node_clock_is_one_move() {
        let clock = FinPoset::from_pairs(1, &[]).unwrap().0;
        let w = solve_tree_clock_game(&p3_filtration(), &k3_filtration(), &clock, BUDGET).unwrap();
        assert_eq!(w, Winner::Anti);
        let w = solve_tree_clock_game(&p3_filtration(), &p3_filtration(), &clock, BUDGET).unwrap();
        assert_eq!(w, Winner::Iso);
    }

    #[test]
    fn chain_clock_matches_plain_game() {
        let pairs: Vec<(Filtration, Filtration)> = vec![
            (p3_filtration(), p3_filtration()),
            (p3_filtration(), k3_filtration()),
        ];
        for zeta in 1..=3 {
            let chain_edges: Vec<(usize, usize)> =
                (0..zeta - 1).map(|i| (i, i + 1)).collect();
            let clock = FinPoset::from_pairs(zeta, &chain_edges).unwrap().0;
            for (mf, nf) in &pairs {
                let plain = solve_iso_game(mf, nf, zeta, BUDGET).unwrap().winner;
                let clocked = solve_tree_clock_game(mf, nf, &clock, BUDGET).unwrap();
                assert_eq!(plain, clocked, "zeta {zeta}");
            }
        }
    }

    #[test]
    fn farness_examples() {
        let k3 = complete(3);
        let edgeless = RelStruct::new(3, &[], &[]).unwrap();
        let witness = vec![vec![0], vec![1], vec![2]];
        let phi = QfFormula::Edge(0, 1);
        let out = is_far(&k3, &edgeless, &phi, 2, 1, &witness, 2).unwrap();
        assert!(out.far && out.degenerate.is_none());

        let out = is_far(&k3, &k3, &phi, 2, 1, &witness, 2).unwrap();
        assert!(!out.far);

        let out = is_far(&k3, &edgeless, &phi, 4, 1, &witness, 2).unwrap();
        assert!(!out.far);
        assert!(out.degenerate.is_some());

        let out = is_far(&k3, &edgeless, &phi, 2, 1, &witness, 5).unwrap();
        assert!(out.far && out.degenerate.is_some());
    }

    #[test]
    fn self_farness_impossible() {
        for m in [path(3), complete(3), RelStruct::linear(4)] {
            let witness: Vec<Vec<usize>> = (0..m.len()).map(|a| vec![a]).collect();
            // Two slots are needed before the edge formula is well-typed.
            for n in 2..=4.min(witness.len()) {
                let out =
                    is_far(&m, &m, &QfFormula::Edge(0, 1), n, 1, &witness, witness.len()).unwrap();
                assert!(!out.far, "structure {m:?}, n {n}");
            }
        }
    }

    #[test]
    fn sigma_farness_examples() {
        let k3 = complete(3);
        let edgeless = RelStruct::new(3, &[], &[]).unwrap();
        let phi = QfFormula::Edge(0, 1);
        let fam = vec![vec![0], vec![1], vec![2]];

        // One family reproduces the plain farness verdict.
        assert!(is_sigma_far(&k3, &edgeless, &phi, 2, 1, &[fam.clone()], 2, BUDGET).unwrap());

        // No families: the empty assignment preserves everything.
        assert!(!is_sigma_far(&k3, &edgeless, &phi, 2, 1, &[], 2, BUDGET).unwrap());

        // The second structure contains a copy of the witness configuration.
        let mut k3_plus = RelStruct::new(4, &[], &[]).unwrap();
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    k3_plus.set_edge(a, b, true);
                }
            }
        }
        assert!(!is_sigma_far(&k3, &k3_plus, &phi, 2, 1, &[fam], 2, BUDGET).unwrap());
    }
}
