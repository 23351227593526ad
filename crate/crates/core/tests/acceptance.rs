//! Acceptance gate: one test per release criterion. Each prints a single
//! pass/fail line with its runtime, and the wall-clock limit is asserted in
//! code so a pathological slowdown fails the gate instead of passing quietly.

use std::collections::{BTreeMap, BTreeSet};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use twinforge::entangle::{
    graph_entangled, org_entangled, pentagon_coloring, pr0_check, Coloring, TupleFamily,
};
use twinforge::gem::Blueprint;
use twinforge::logic::{solve_iso_game, solve_tree_clock_game, Filtration, Winner};
use twinforge::org::{check_k1, generic_map, k1_violation_naive, OrgStructure};
use twinforge::pipeline::{
    assemble, verify_hypotheses_c11, verify_solution_isomorphism, AssembleOpts, TwinAssembly,
};
use twinforge::poset::{self, FinPoset, SeqTree};
use twinforge::rel::{all_graphs, complete, path, RelStruct};
use twinforge::report::ClauseReport;
use twinforge::twinship::{
    is_strong, solves, validate_param, wellfound_transform, ThetaTag, TwinshipParam, ValidateOpts,
};
use twinforge::words::{
    eval_word, is_formally_reduced, word_compatible, word_le, Letter, MapFamily, PartialMap, Sign,
    Word,
};
use twinforge::Error;

const BUDGET: usize = 1_000_000;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn criterion(n: usize, name: &str, limit: Duration, body: impl FnOnce() -> Result<(), String>) {
    let start = Instant::now();
    let outcome = body();
    let took = start.elapsed();
    match &outcome {
        Ok(()) => println!("criterion {n} ({name}): pass in {took:.2?}, limit {limit:?}"),
        Err(msg) => println!("criterion {n} ({name}): FAIL in {took:.2?}: {msg}"),
    }
    if let Err(msg) = outcome {
        panic!("criterion {n} ({name}): {msg}");
    }
    assert!(
        took <= limit,
        "criterion {n} ({name}) took {took:?}, over the {limit:?} limit"
    );
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn set(xs: &[usize]) -> BTreeSet<usize> {
    xs.iter().copied().collect()
}

fn poset_of(n: usize, pairs: &[(usize, usize)]) -> FinPoset {
    FinPoset::from_pairs(n, pairs).expect("well-formed pair list").0
}

fn param(t: FinPoset, family: Vec<BTreeSet<usize>>, frontier: BTreeSet<usize>) -> TwinshipParam {
    TwinshipParam::new(t, family, ThetaTag::Omega, frontier).expect("ids in range")
}

/// One node, one member, frontier on top.
fn single_eta() -> TwinshipParam {
    param(poset_of(1, &[]), vec![set(&[0])], set(&[0]))
}

/// Root 0 below leaves 1 and 2; members are the leaf antichain and one leaf.
fn fork_param() -> TwinshipParam {
    param(
        poset_of(3, &[(0, 1), (0, 2)]),
        vec![set(&[1, 2]), set(&[1])],
        set(&[1, 2]),
    )
}

/// Root 0 below leaves 1, 2, 3; single member on the leaf antichain.
fn wide_param() -> TwinshipParam {
    param(
        poset_of(4, &[(0, 1), (0, 2), (0, 3)]),
        vec![set(&[1, 2, 3])],
        set(&[1, 2, 3]),
    )
}

/// Two-element chain with the member and frontier at the top.
fn chain_param() -> TwinshipParam {
    param(poset_of(2, &[(0, 1)]), vec![set(&[1])], set(&[1]))
}

fn flat_param(k: usize) -> TwinshipParam {
    param(poset_of(k, &[]), vec![(0..k).collect()], BTreeSet::new())
}

fn assembly(
    p: &TwinshipParam,
    lam: usize,
    d_seq: &[usize],
    depth: usize,
    col: impl Fn(usize, usize) -> usize,
) -> TwinAssembly {
    let c = Coloring::from_fn(lam, col);
    assemble(p, lam, d_seq, &c, depth, &Blueprint::Identity, AssembleOpts::default())
        .expect("fixture assembles")
}

fn failing(rep: &ClauseReport) -> Vec<String> {
    rep.entries
        .iter()
        .filter(|e| !e.verdict.ok())
        .map(|e| e.id.clone())
        .collect()
}

/// Rebuilds the map family with the pair at `src` removed from `node`.
fn without_map_pair(j: &OrgStructure, node: usize, src: usize) -> OrgStructure {
    let mut pos: BTreeMap<usize, PartialMap> = BTreeMap::new();
    for n in j.maps.nodes().collect::<Vec<_>>() {
        let pm = j.maps.positive(n);
        let pairs: Vec<(usize, usize)> = if n == node {
            pm.pairs().filter(|&(a, _)| a != src).collect()
        } else {
            pm.pairs().collect()
        };
        pos.insert(n, PartialMap::from_pairs(&pairs).unwrap());
    }
    OrgStructure::new(j.rel.clone(), MapFamily::from_positive(pos), j.frontier.clone()).unwrap()
}

/// Rebuilds the map family with `pairs` installed as the map of `node`.
fn with_extra_map(j: &OrgStructure, node: usize, pairs: &[(usize, usize)]) -> OrgStructure {
    let mut pos: BTreeMap<usize, PartialMap> = BTreeMap::new();
    for n in j.maps.nodes().collect::<Vec<_>>() {
        pos.insert(n, j.maps.positive(n));
    }
    pos.insert(node, PartialMap::from_pairs(pairs).unwrap());
    OrgStructure::new(j.rel.clone(), MapFamily::from_positive(pos), j.frontier.clone()).unwrap()
}

/// First map pair whose node lies in `g`, so the pair takes part in the union.
fn map_pair_in(j: &OrgStructure, g: &BTreeSet<usize>) -> (usize, usize, usize) {
    for &node in g {
        let pm = j.maps.positive(node);
        let first = pm.pairs().next();
        if let Some((s, t)) = first {
            return (node, s, t);
        }
    }
    panic!("no map node inside the solving set");
}

/// Pair of a node in `g` whose source is off the frontier; prefers a pair
/// whose target is interior too, so both domain and range notice the removal.
fn interior_map_pair(j: &OrgStructure, g: &BTreeSet<usize>) -> (usize, usize, usize) {
    let mut fallback = None;
    for &node in g {
        let pm = j.maps.positive(node);
        for (s, t) in pm.pairs() {
            if j.frontier.contains(&s) {
                continue;
            }
            if !j.frontier.contains(&t) {
                return (node, s, t);
            }
            fallback.get_or_insert((node, s, t));
        }
    }
    fallback.expect("some interior source")
}

// ---------------------------------------------------------------------------
// 1. Generated triples: parameter, assembled structure, and a solving
//    principal down-set; the generic map report is clean, and one seeded
//    mutation per triple trips a named entry.
// ---------------------------------------------------------------------------

#[test]
fn criterion_1_generic_map_suite() {
    criterion(1, "generic map suite", Duration::from_secs(60), || {
        let mut produced = 0usize;
        let mut tripped: BTreeSet<String> = BTreeSet::new();
        for seed in 0..120u64 {
            let shape = (seed % 3) as usize;
            let (p, lam, d_seq, depth, g): (TwinshipParam, usize, Vec<usize>, usize, BTreeSet<usize>) =
                match shape {
                    0 => {
                        let depth = 1 + ((seed / 3) % 3) as usize;
                        let lam = 1 + ((seed / 9) % 2) as usize;
                        (single_eta(), lam, vec![0; lam], depth, set(&[0]))
                    }
                    1 => {
                        let depth = 1 + ((seed / 3) % 2) as usize;
                        (fork_param(), 2, vec![0, 1], depth, set(&[0, 1]))
                    }
                    _ => {
                        let lam = 2 + ((seed / 3) % 2) as usize;
                        (wide_param(), lam, vec![0; lam], 1, set(&[0, 2]))
                    }
                };
            let rep = validate_param(&p, ValidateOpts::default());
            ensure!(rep.all_ok(), "seed {seed}: parameter invalid:\n{rep}");
            ensure!(p.poset.len() <= 6, "seed {seed}: poset too large");
            let c = Coloring::from_fn(lam, |i, j| (i + j + seed as usize) % 2);
            let a = assemble(&p, lam, &d_seq, &c, depth, &Blueprint::Identity, AssembleOpts::default())
                .map_err(|e| format!("seed {seed}: assemble: {e}"))?;
            ensure!(a.j.len() <= 30, "seed {seed}: {} elements in the structure", a.j.len());
            ensure!(
                solves(&p, &g).unwrap(),
                "seed {seed}: chosen down-set does not solve"
            );
            let out = generic_map(&a.j, &p, &g).map_err(|e| format!("seed {seed}: generic map: {e}"))?;
            ensure!(out.report.all_ok(), "seed {seed}: clean run has failures:\n{}", out.report);
            produced += 1;

            // One seeded mutation per triple; the rotation covers every entry.
            let mut kind = (seed % 4) as usize;
            if kind == 1 && shape != 1 {
                kind = 0;
            }
            match kind {
                0 => {
                    let bad = if shape == 0 { BTreeSet::new() } else { set(&[0]) };
                    let out =
                        generic_map(&a.j, &p, &bad).map_err(|e| format!("seed {seed}: {e}"))?;
                    ensure!(
                        !out.report.get("solution").unwrap().verdict.ok(),
                        "seed {seed}: non-solving set accepted"
                    );
                    tripped.extend(failing(&out.report));
                }
                1 => {
                    // A second node in the set disagreeing on one source.
                    let (node, s, t) = map_pair_in(&a.j, &g);
                    let clash = if t == s { (s + 1) % a.j.len() } else { s };
                    let other = g
                        .iter()
                        .copied()
                        .find(|&n| n != node)
                        .expect("solving set has a second node");
                    let j2 = with_extra_map(&a.j, other, &[(s, clash)]);
                    match generic_map(&j2, &p, &g) {
                        Err(Error::Inconsistent { .. }) => {
                            tripped.insert("well-defined".into());
                        }
                        Err(e) => return Err(format!("seed {seed}: unexpected error: {e}")),
                        Ok(out) => {
                            return Err(format!(
                                "seed {seed}: conflicting union went unnoticed:\n{}",
                                out.report
                            ))
                        }
                    }
                }
                2 => {
                    let dom: Vec<usize> = out.map.pairs().map(|(a, _)| a).collect();
                    let mut flip = None;
                    'search: for (i, &u) in dom.iter().enumerate() {
                        for &v in &dom[i + 1..] {
                            if a.j.rel.lt(u, v) {
                                flip = Some((u, v));
                                break 'search;
                            }
                            if a.j.rel.lt(v, u) {
                                flip = Some((v, u));
                                break 'search;
                            }
                        }
                    }
                    let (u, v) = flip.expect("comparable pair in the domain");
                    let mut j2 = a.j.clone();
                    j2.rel.set_lt(u, v, false);
                    j2.rel.set_lt(v, u, true);
                    let out = generic_map(&j2, &p, &g).map_err(|e| format!("seed {seed}: {e}"))?;
                    ensure!(
                        !out.report.get("automorphism").unwrap().verdict.ok(),
                        "seed {seed}: order flip went unnoticed"
                    );
                    tripped.extend(failing(&out.report));
                }
                _ => {
                    let (node, s, _) = interior_map_pair(&a.j, &g);
                    let j2 = without_map_pair(&a.j, node, s);
                    let out = generic_map(&j2, &p, &g).map_err(|e| format!("seed {seed}: {e}"))?;
                    ensure!(
                        !out.report.get("domain").unwrap().verdict.ok(),
                        "seed {seed}: dropped pair went unnoticed"
                    );
                    tripped.extend(failing(&out.report));
                }
            }
        }
        ensure!(produced >= 100, "only {produced} clean triples generated");
        for id in ["solution", "well-defined", "automorphism", "domain", "range"] {
            ensure!(
                tripped.contains(id),
                "no mutation tripped the `{id}` entry; saw {tripped:?}"
            );
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 2. Parameters whose members are all dense are never strong, and the
//    returned witness is a solving principal down-set.
// ---------------------------------------------------------------------------

fn all_posets_upper(n: usize) -> Vec<FinPoset> {
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
    let mut seen = BTreeSet::new();
    let mut out = vec![];
    for mask in 0u32..1 << pairs.len() {
        let chosen: Vec<(usize, usize)> = pairs
            .iter()
            .enumerate()
            .filter(|&(i, _)| mask >> i & 1 == 1)
            .map(|(_, &p)| p)
            .collect();
        let p = poset_of(n, &chosen);
        let key: Vec<bool> = (0..n)
            .flat_map(|a| (0..n).map(|b| p.le(a, b)).collect::<Vec<_>>())
            .collect();
        if seen.insert(key) {
            out.push(p);
        }
    }
    out
}

fn dense_subsets(t: &FinPoset) -> Vec<BTreeSet<usize>> {
    let n = t.len();
    (1u32..1 << n)
        .map(|mask| (0..n).filter(|&i| mask >> i & 1 == 1).collect::<BTreeSet<usize>>())
        .filter(|d| poset::is_dense(t, d).unwrap())
        .collect()
}

fn random_dag_poset(r: &mut ChaCha8Rng, n: usize, density: f64) -> FinPoset {
    let mut pairs = vec![];
    for a in 0..n {
        for b in a + 1..n {
            if r.gen_bool(density) {
                pairs.push((a, b));
            }
        }
    }
    poset_of(n, &pairs)
}

fn check_not_strong(t: &FinPoset, family: Vec<BTreeSet<usize>>) -> Result<(), String> {
    let nonempty = !family.is_empty();
    let p = param(t.clone(), family, BTreeSet::new());
    let sc = is_strong(&p);
    ensure!(
        !sc.strong,
        "dense-member parameter on {} elements reported strong",
        t.len()
    );
    let w = sc.witness.ok_or("no witness returned")?;
    ensure!(solves(&p, &w).unwrap(), "witness does not solve the parameter");
    if nonempty {
        let m = *w.iter().max().ok_or("empty witness for a nonempty family")?;
        ensure!(w == p.poset.down_set(m), "witness is not a principal down-set");
    }
    Ok(())
}

#[test]
fn criterion_2_strongness_witness_sweep() {
    criterion(2, "strongness witness sweep", Duration::from_secs(10), || {
        let mut checked = 0usize;
        for n in 1..=4usize {
            for t in all_posets_upper(n) {
                let dense = dense_subsets(&t);
                let mut families: Vec<Vec<BTreeSet<usize>>> = vec![vec![]];
                if n <= 3 {
                    for mask in 1u32..1 << dense.len() {
                        families.push(
                            dense
                                .iter()
                                .enumerate()
                                .filter(|&(i, _)| mask >> i & 1 == 1)
                                .map(|(_, d)| d.clone())
                                .collect(),
                        );
                    }
                } else {
                    for i in 0..dense.len() {
                        families.push(vec![dense[i].clone()]);
                        for j in i + 1..dense.len() {
                            families.push(vec![dense[i].clone(), dense[j].clone()]);
                        }
                    }
                }
                for family in families {
                    check_not_strong(&t, family)?;
                    checked += 1;
                }
            }
        }
        let mut r = rng(2_001);
        for case in 0..500 {
            let n = r.gen_range(5..=8);
            let t = random_dag_poset(&mut r, n, 0.15 + 0.1 * (case % 4) as f64);
            let mut family: Vec<BTreeSet<usize>> = vec![(0..n).collect()];
            for _ in 0..20 {
                let mask: u32 = r.gen_range(1..1u32 << n);
                let d: BTreeSet<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                if poset::is_dense(&t, &d).unwrap() && !family.contains(&d) {
                    family.push(d);
                    if family.len() == 4 {
                        break;
                    }
                }
            }
            check_not_strong(&t, family)?;
            checked += 1;
        }
        // Strongness itself is reachable once a member fails density.
        let anti = poset_of(2, &[]);
        let sc = is_strong(&param(anti, vec![set(&[0]), set(&[1])], BTreeSet::new()));
        ensure!(sc.strong && sc.witness.is_none(), "incompatible members should be strong");
        ensure!(checked >= 1_000, "only {checked} parameters checked");
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 3. The atlas-based no-return check agrees with naive word enumeration up to
//    length 4; on universes of at most 4 elements any offending word contains
//    a contiguous offending subword of length at most 4, so the bound is
//    exact there.
// ---------------------------------------------------------------------------

fn all_partial_injections(n: usize) -> Vec<PartialMap> {
    fn go(n: usize, src: usize, used: u32, pairs: &mut Vec<(usize, usize)>, out: &mut Vec<PartialMap>) {
        if src == n {
            out.push(PartialMap::from_pairs(pairs).unwrap());
            return;
        }
        go(n, src + 1, used, pairs, out);
        for t in 0..n {
            if used >> t & 1 == 0 {
                pairs.push((src, t));
                go(n, src + 1, used | 1 << t, pairs, out);
                pairs.pop();
            }
        }
    }
    let mut out = vec![];
    go(n, 0, 0, &mut vec![], &mut out);
    out
}

fn k1_case(n: usize, fs: &[&PartialMap]) -> Result<(), String> {
    let mut pos = BTreeMap::new();
    for (i, f) in fs.iter().enumerate() {
        pos.insert(i, (*f).clone());
    }
    let j = OrgStructure::new(RelStruct::linear(n), MapFamily::from_positive(pos), BTreeSet::new())
        .unwrap();
    let p = flat_param(fs.len());
    let bfs = check_k1(&j, &p, 100_000).map_err(|e| format!("atlas: {e}"))?;
    let naive = k1_violation_naive(&j, &p, 4).map_err(|e| format!("naive: {e}"))?;
    ensure!(
        bfs.holds == naive.is_none(),
        "verdicts split on a {n}-element universe with {} maps: atlas {}, naive {:?}",
        fs.len(),
        bfs.holds,
        naive
    );
    if let Some((w, a)) = &bfs.witness {
        ensure!(is_formally_reduced(w), "witness word is not formally reduced");
        ensure!(
            eval_word(&j.maps, w, *a) == Some(*a),
            "witness word does not fix its element"
        );
    }
    Ok(())
}

#[test]
fn criterion_3_no_return_vs_naive() {
    criterion(3, "no-return check vs naive", Duration::from_secs(120), || {
        let mut cases = 0usize;
        for n in 1..=4usize {
            let injections = all_partial_injections(n);
            for f in &injections {
                k1_case(n, &[f])?;
                cases += 1;
            }
            for f in &injections {
                for g in &injections {
                    k1_case(n, &[f, g])?;
                    cases += 1;
                }
            }
        }
        let pools: Vec<Vec<PartialMap>> = (0..=4).map(all_partial_injections).collect();
        let mut r = rng(3_001);
        for _ in 0..10_000 {
            let n = r.gen_range(2..=4usize);
            let k = r.gen_range(3..=4usize);
            let fs: Vec<&PartialMap> =
                (0..k).map(|_| &pools[n][r.gen_range(0..pools[n].len())]).collect();
            k1_case(n, &fs)?;
            cases += 1;
        }
        ensure!(cases > 50_000, "only {cases} families checked");
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 4. The pentagon coloring has a pair of each color inside every triple of
//    points, and no 2-coloring on 6 points does: the brute-force mirror of
//    the classical two-color triangle bound.
// ---------------------------------------------------------------------------

#[test]
fn criterion_4_coloring_property() {
    criterion(4, "coloring property at five and six", Duration::from_secs(300), || {
        let pent = pr0_check(&pentagon_coloring(), 1, 3, 2).unwrap();
        ensure!(pent.holds, "pentagon coloring rejected: {:?}", pent.counterexample);

        let mut idx = [[0usize; 6]; 6];
        let mut k = 0;
        for i in 0..6 {
            for j in i + 1..6 {
                idx[i][j] = k;
                k += 1;
            }
        }
        for mask in 0u32..1 << 15 {
            let c = Coloring::from_fn(6, |i, j| ((mask >> idx[i][j]) & 1) as usize);
            let out = pr0_check(&c, 1, 3, 2).unwrap();
            ensure!(
                !out.holds,
                "coloring {mask:#017b} on six points satisfies the property"
            );
            ensure!(out.counterexample.is_some(), "failing coloring lacks a counterexample");
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 5. The well-founding transform of a valid parameter validates, is
//    tree-like, and never grows the family.
// ---------------------------------------------------------------------------

fn random_forest_poset(r: &mut ChaCha8Rng, n: usize) -> FinPoset {
    let mut pairs = vec![];
    for b in 1..n {
        if r.gen_bool(0.75) {
            pairs.push((r.gen_range(0..b), b));
        }
    }
    poset_of(n, &pairs)
}

#[test]
fn criterion_5_wellfounding_transform() {
    criterion(5, "well-founding transform", Duration::from_secs(30), || {
        let mut r = rng(5_001);
        for case in 0..200usize {
            let n = 1 + case % 6;
            let t = random_forest_poset(&mut r, n);
            let maximals = t.maximal_elements();
            // Maximal elements belong to every dense subset, so seeding the
            // family with them keeps directedness and the cone demands free.
            let mut family = vec![maximals.clone()];
            for _ in 0..2 {
                let mask: u32 = r.gen_range(1..1u32 << n);
                let d: BTreeSet<usize> = (0..n).filter(|&i| mask >> i & 1 == 1).collect();
                if poset::is_dense(&t, &d).unwrap() && !family.contains(&d) {
                    family.push(d);
                }
            }
            let input_len = family.len();
            let theta = if case % 2 == 0 { ThetaTag::Omega } else { ThetaTag::Uncountable };
            let p = TwinshipParam::new(t.clone(), family, theta, maximals).unwrap();
            let rep = validate_param(&p, ValidateOpts::default());
            ensure!(rep.all_ok(), "case {case}: input parameter invalid:\n{rep}");

            let root = r.gen_range(0..n);
            let tp = wellfound_transform(&p, root).map_err(|e| format!("case {case}: {e}"))?;
            let out = validate_param(&tp.param, ValidateOpts::default());
            ensure!(out.all_ok(), "case {case}: transformed parameter invalid:\n{out}");
            ensure!(tp.param.is_tree_like(), "case {case}: output poset is not tree-like");
            ensure!(
                tp.param.family.len() <= input_len,
                "case {case}: family grew from {input_len} to {}",
                tp.param.family.len()
            );
            ensure!(
                tp.param.poset.len() == tp.sequences.len(),
                "case {case}: sequence map out of step with the poset"
            );
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 6. Word-order laws over the depth-3 binary tree: the componentwise order is
//    a partial order on all words of length up to 3, and two words are
//    compatible exactly when a common upper bound exists.
// ---------------------------------------------------------------------------

#[test]
fn criterion_6_word_order_laws() {
    criterion(6, "word order laws", Duration::from_secs(30), || {
        let tree = SeqTree::new(2, 3).unwrap();
        let t = tree.poset().clone();
        ensure!(t.len() == 7, "expected the 7-node binary tree, got {}", t.len());
        let letters: Vec<Letter> = (0..t.len())
            .flat_map(|v| [Letter::new(v, Sign::Plus), Letter::new(v, Sign::Minus)])
            .collect();

        let mut words: Vec<Word> = vec![Word::empty()];
        let mut layer = vec![Word::empty()];
        for _ in 0..3 {
            let mut next = vec![];
            for w in &layer {
                for &l in &letters {
                    next.push(w.prepend(l));
                }
            }
            words.extend(next.iter().cloned());
            layer = next;
        }
        let m = words.len();
        ensure!(m == 2955, "expected 2955 words, got {m}");

        let blocks = (m + 63) / 64;
        let mut uppers: Vec<Vec<u64>> = vec![vec![0u64; blocks]; m];
        for i in 0..m {
            for k in 0..m {
                if word_le(&t, &words[i], &words[k]).unwrap() {
                    uppers[i][k / 64] |= 1u64 << (k % 64);
                }
            }
        }

        for i in 0..m {
            ensure!(uppers[i][i / 64] >> (i % 64) & 1 == 1, "word {i} is not below itself");
        }
        for i in 0..m {
            for b in 0..blocks {
                let mut bits = uppers[i][b];
                while bits != 0 {
                    let k = b * 64 + bits.trailing_zeros() as usize;
                    bits &= bits - 1;
                    if k != i && uppers[k][i / 64] >> (i % 64) & 1 == 1 {
                        return Err(format!("distinct words {i} and {k} sit below each other"));
                    }
                    // Everything above k must already be above i.
                    for bb in 0..blocks {
                        if uppers[k][bb] & !uppers[i][bb] != 0 {
                            return Err(format!("order is not transitive through {i} <= {k}"));
                        }
                    }
                }
            }
        }
        for i in 0..m {
            for k in i..m {
                let claimed = word_compatible(&t, &words[i], &words[k]).unwrap();
                let has_upper = (0..blocks).any(|b| uppers[i][b] & uppers[k][b] != 0);
                ensure!(
                    claimed == has_upper,
                    "compatibility split on words {i} and {k}: claimed {claimed}, upper bound {has_upper}"
                );
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 7. Pipeline end-to-end: small assemblies verify cleanly for every solving
//    principal down-set, and ten seeded mutations cover every clause checker.
// ---------------------------------------------------------------------------

fn failing_after(a: &TwinAssembly, g: &BTreeSet<usize>) -> Result<BTreeSet<String>, String> {
    let mut ids = BTreeSet::new();
    match verify_hypotheses_c11(a) {
        Ok(rep) => ids.extend(failing(&rep)),
        Err(e) => return Err(format!("hypotheses checker errored: {e}")),
    }
    match verify_solution_isomorphism(a, g) {
        Ok(rep) => ids.extend(failing(&rep).into_iter().map(|i| format!("sol:{i}"))),
        Err(Error::NotASolution) => {
            ids.insert("sol:solution".into());
        }
        Err(Error::Inconsistent { .. }) => {
            ids.insert("sol:well-defined".into());
        }
        Err(e) => return Err(format!("solution checker errored: {e}")),
    }
    Ok(ids)
}

#[test]
fn criterion_7_pipeline_end_to_end() {
    criterion(7, "pipeline end-to-end", Duration::from_secs(120), || {
        let runs: Vec<(TwinshipParam, usize, Vec<usize>, usize)> = vec![
            (single_eta(), 2, vec![0, 0], 1),
            (single_eta(), 2, vec![0, 0], 2),
            (single_eta(), 2, vec![0, 0], 3),
            (chain_param(), 2, vec![0, 0], 2),
            (fork_param(), 2, vec![0, 1], 2),
            (fork_param(), 3, vec![0, 1, 0], 2),
            (wide_param(), 3, vec![0, 0, 0], 1),
        ];
        for (run, (p, lam, d_seq, depth)) in runs.iter().enumerate() {
            let a = assembly(p, *lam, d_seq, *depth, |i, j| (i + j) % 2);
            let hyp = verify_hypotheses_c11(&a).map_err(|e| format!("run {run}: {e}"))?;
            ensure!(hyp.all_ok(), "run {run}: hypotheses not met:\n{hyp}");
            let mut found = 0;
            for top in 0..p.poset.len() {
                let g = p.poset.down_set(top);
                if !solves(p, &g).unwrap() {
                    continue;
                }
                found += 1;
                let sol = verify_solution_isomorphism(&a, &g)
                    .map_err(|e| format!("run {run}, top {top}: {e}"))?;
                ensure!(sol.all_ok(), "run {run}, top {top}: solution check failed:\n{sol}");
            }
            ensure!(found >= 1, "run {run}: no solving principal down-set");
        }

        // Ten seeded mutations against the three-block fixture (plus the
        // chain fixture for the union conflict, which needs two applicable
        // nodes below one solving set).
        let base = assembly(&fork_param(), 3, &[0, 1, 0], 2, |i, j| (i + j) % 2);
        let g0 = base.param.poset.down_set(1);
        ensure!(solves(&base.param, &g0).unwrap(), "fixture down-set must solve");
        let mut coverage: BTreeSet<String> = BTreeSet::new();
        let mut mutations = 0usize;

        // 1: drop a map pair with an interior odd-translate source.
        {
            let mut a = base.clone();
            let mut pick = None;
            'outer: for nd in a.j.maps.nodes().collect::<Vec<_>>() {
                let pm = a.j.maps.positive(nd);
                for (s, t) in pm.pairs() {
                    if a.x1.contains(&s)
                        && !a.j.frontier.contains(&s)
                        && !a.j.frontier.contains(&t)
                    {
                        pick = Some((nd, s));
                        break 'outer;
                    }
                }
            }
            let (node, s) = pick.expect("interior odd source");
            a.j = without_map_pair(&a.j, node, s);
            let ids = failing_after(&a, &g0)?;
            for want in ["a", "sol:domain", "sol:range", "sol:ii"] {
                ensure!(ids.contains(want), "mutation 1 missed `{want}`; saw {ids:?}");
            }
            coverage.extend(ids);
            mutations += 1;
        }
        // 2: remove one block seed from the transversal.
        {
            let mut a = base.clone();
            let s1 = a.seeds()[1];
            a.x.remove(&s1);
            let ids = failing_after(&a, &g0)?;
            for want in ["c", "d"] {
                ensure!(ids.contains(want), "mutation 2 missed `{want}`; saw {ids:?}");
            }
            coverage.extend(ids);
            mutations += 1;
        }
        // 3: move one element across the parity split.
        {
            let mut a = base.clone();
            let e = *a.x1.iter().next().unwrap();
            a.x1.remove(&e);
            a.x2.insert(e);
            let ids = failing_after(&a, &g0)?;
            ensure!(ids.contains("e"), "mutation 3 missed `e`; saw {ids:?}");
            coverage.extend(ids);
            mutations += 1;
        }
        // 4: overwrite one stored fragment with the other.
        {
            let mut a = base.clone();
            a.m1 = a.m2.clone();
            let ids = failing_after(&a, &g0)?;
            ensure!(ids.contains("g"), "mutation 4 missed `g`; saw {ids:?}");
            coverage.extend(ids);
            mutations += 1;
        }
        // 5: add an edge inside a block; assembled edges only join blocks.
        {
            let mut a = base.clone();
            let (u, v) = (a.offsets[0] + 1, a.offsets[0] + 2);
            a.j.rel.set_edge_sym(u, v, true);
            let ids = failing_after(&a, &g0)?;
            ensure!(ids.contains("h"), "mutation 5 missed `h`; saw {ids:?}");
            coverage.extend(ids);
            mutations += 1;
        }
        // 6: make a foreign node applicable at the single-generator block's
        // seed, so no seed realizes that member any more.
        {
            let mut a = base.clone();
            let s1 = a.seeds()[1];
            a.j = with_extra_map(&a.j, 2, &{
                let pm = a.j.maps.positive(2);
                let mut pairs: Vec<(usize, usize)> = pm.pairs().collect();
                pairs.push((s1, s1 + 1));
                pairs
            });
            let ids = failing_after(&a, &g0)?;
            ensure!(ids.contains("f"), "mutation 6 missed `f`; saw {ids:?}");
            coverage.extend(ids);
            mutations += 1;
        }
        // 7: flip the order between two cross-block translates.
        {
            let mut a = base.clone();
            let (u, v) = {
                let mut it = None;
                for &u in a.x1.iter().filter(|&&u| a.block_of(u) == 0) {
                    for &v in a.x1.iter().filter(|&&v| a.block_of(v) == 1) {
                        if a.j.rel.lt(u, v) {
                            it = Some((u, v));
                            break;
                        }
                    }
                    if it.is_some() {
                        break;
                    }
                }
                it.expect("ordered cross-block pair")
            };
            a.j.rel.set_lt(u, v, false);
            a.j.rel.set_lt(v, u, true);
            let ids = failing_after(&a, &g0)?;
            for want in ["i", "sol:automorphism", "sol:i"] {
                ensure!(ids.contains(want), "mutation 7 missed `{want}`; saw {ids:?}");
            }
            coverage.extend(ids);
            mutations += 1;
        }
        // 8: scramble the internal order of one of two same-member blocks.
        {
            let mut a = base.clone();
            let w1 = Word(vec![Letter::new(1, Sign::Minus)]);
            let w2 = Word(vec![Letter::new(2, Sign::Minus)]);
            let i1 = a.offsets[2] + a.blocks[2].words.iter().position(|w| *w == w1).unwrap();
            let i2 = a.offsets[2] + a.blocks[2].words.iter().position(|w| *w == w2).unwrap();
            let (u, v) = if a.j.rel.lt(i1, i2) { (i1, i2) } else { (i2, i1) };
            a.j.rel.set_lt(u, v, false);
            a.j.rel.set_lt(v, u, true);
            let ids = failing_after(&a, &g0)?;
            ensure!(ids.contains("j"), "mutation 8 missed `j`; saw {ids:?}");
            coverage.extend(ids);
            mutations += 1;
        }
        // 9: hand the verifier a non-solving set.
        {
            let bad = set(&[0]);
            ensure!(!solves(&base.param, &bad).unwrap(), "mutated set must not solve");
            let ids = failing_after(&base, &bad)?;
            ensure!(ids.contains("sol:solution"), "mutation 9 missed `sol:solution`; saw {ids:?}");
            coverage.extend(ids);
            mutations += 1;
        }
        // 10: two nodes of one solving set disagreeing on a source.
        {
            let cbase = assembly(&chain_param(), 2, &[0, 0], 2, |_, _| 1);
            let gc = cbase.param.poset.down_set(1);
            ensure!(solves(&cbase.param, &gc).unwrap(), "chain down-set must solve");
            let mut a = cbase.clone();
            let (_, s, t) = map_pair_in(&a.j, &gc);
            let clash = if t == s { (s + 1) % a.j.len() } else { s };
            a.j = with_extra_map(&a.j, 0, &[(s, clash)]);
            let ids = failing_after(&a, &gc)?;
            ensure!(
                ids.contains("sol:well-defined"),
                "mutation 10 missed `sol:well-defined`; saw {ids:?}"
            );
            coverage.extend(ids);
            mutations += 1;
        }

        ensure!(mutations == 10, "expected 10 mutations, ran {mutations}");
        for want in [
            "a",
            "c",
            "d",
            "e",
            "f",
            "g",
            "h",
            "i",
            "j",
            "sol:solution",
            "sol:well-defined",
            "sol:automorphism",
            "sol:domain",
            "sol:range",
            "sol:i",
            "sol:ii",
        ] {
            ensure!(
                coverage.contains(want),
                "no mutation tripped `{want}`; coverage {coverage:?}"
            );
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 8. Entangledness: the clause check on plain graphs agrees with a direct
//    pair scan for singleton tuples, and the map-carrying check collapses to
//    the plain one when there are no maps.
// ---------------------------------------------------------------------------

#[test]
fn criterion_8_entangledness_oracles() {
    criterion(8, "entangledness oracles", Duration::from_secs(60), || {
        let mut checked = 0usize;
        for n in 1..=6usize {
            let fam = TupleFamily::new((0..n).map(|v| vec![v]).collect()).unwrap();
            for g in all_graphs(n) {
                let out = graph_entangled(&g, &fam).map_err(|e| format!("{e}"))?;
                let mut edge_pair = false;
                let mut nonedge_pair = false;
                for a in 0..n {
                    for b in a + 1..n {
                        if g.edge(a, b) {
                            edge_pair = true;
                        } else {
                            nonedge_pair = true;
                        }
                    }
                }
                ensure!(
                    out.entangled == (edge_pair && nonedge_pair),
                    "pair-scan oracle split on a {n}-vertex graph: {} vs {}",
                    out.entangled,
                    edge_pair && nonedge_pair
                );
                checked += 1;
            }
        }
        ensure!(checked == 33_867, "expected every graph up to 6 vertices, saw {checked}");

        let p = flat_param(1);
        for n in 1..=4usize {
            let fam = TupleFamily::new((0..n).map(|v| vec![v]).collect()).unwrap();
            for g in all_graphs(n) {
                let j =
                    OrgStructure::new(g.clone(), MapFamily::default(), BTreeSet::new()).unwrap();
                let with_maps = org_entangled(&j, &p, &fam, BUDGET).map_err(|e| format!("{e}"))?;
                let plain = graph_entangled(&g, &fam).unwrap();
                ensure!(
                    with_maps.entangled == plain.entangled,
                    "map-free reduction split on a {n}-vertex graph"
                );
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// 9. Game engine: the matcher wins on any filtration played against itself,
//    the challenger separates the 3-path from the triangle, and a chain clock
//    is interchangeable with a round count.
// ---------------------------------------------------------------------------

fn chain_poset(k: usize) -> FinPoset {
    let pairs: Vec<(usize, usize)> = (1..k).map(|i| (i - 1, i)).collect();
    poset_of(k, &pairs)
}

fn random_graph(r: &mut ChaCha8Rng, n: usize) -> RelStruct {
    let mut g = RelStruct::linear(n);
    for a in 0..n {
        for b in a + 1..n {
            if r.gen_bool(0.5) {
                g.set_edge_sym(a, b, true);
            }
        }
    }
    g
}

#[test]
fn criterion_9_game_engine() {
    criterion(9, "game engine", Duration::from_secs(30), || {
        let mut r = rng(9_001);
        for case in 0..50usize {
            let n = r.gen_range(2..=6usize);
            let g = random_graph(&mut r, n);
            let stage_count = r.gen_range(1..=3.min(n));
            let mut sizes: Vec<usize> = vec![n];
            while sizes.len() < stage_count {
                let s = r.gen_range(1..n);
                if !sizes.contains(&s) {
                    sizes.push(s);
                }
            }
            sizes.sort_unstable();
            let f = Filtration::by_prefix_sizes(g, &sizes).unwrap();
            let zeta = r.gen_range(1..=f.len());
            let sol = solve_iso_game(&f, &f, zeta, BUDGET).map_err(|e| format!("case {case}: {e}"))?;
            ensure!(
                sol.winner == Winner::Iso,
                "case {case}: matcher lost a self-filtration at {zeta} rounds"
            );
            let w = solve_tree_clock_game(&f, &f, &chain_poset(zeta), BUDGET)
                .map_err(|e| format!("case {case}: {e}"))?;
            ensure!(w == sol.winner, "case {case}: chain clock disagrees with {zeta} rounds");
        }

        let m = Filtration::by_prefix_sizes(path(3), &[2, 3]).unwrap();
        let k = Filtration::by_prefix_sizes(complete(3), &[2, 3]).unwrap();
        for zeta in 1..=2usize {
            let sol = solve_iso_game(&m, &k, zeta, BUDGET).map_err(|e| format!("{e}"))?;
            ensure!(
                sol.winner == Winner::Anti,
                "path vs triangle should separate at {zeta} rounds"
            );
            let w = solve_tree_clock_game(&m, &k, &chain_poset(zeta), BUDGET)
                .map_err(|e| format!("{e}"))?;
            ensure!(w == Winner::Anti, "chain clock misses the separation at {zeta} rounds");
        }
        Ok(())
    });
}
