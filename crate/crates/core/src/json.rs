//! Canonical JSON readers and writers for the file formats the command line
//! speaks. Emission is canonical: fixed key order, collections sorted, ids
//! rendered as strings where the format allows labels. Parsing what was
//! emitted reproduces the bytes exactly.

use crate::entangle::Coloring;
use crate::error::{Error, Result};
use crate::gem::Blueprint;
use crate::org::OrgStructure;
use crate::pipeline::{assemble, AssembleOpts, TwinAssembly};
use crate::poset::{ClosureReport, FinPoset};
use crate::rel::QfType;
use crate::rel::RelStruct;
use crate::twinship::{ThetaTag, TwinshipParam};
use crate::words::{Letter, MapFamily, PartialMap, Sign, Word};
use crate::org::OrderRule;
use serde_json::{Map, Value};
use std::collections::{BTreeMap, BTreeSet};

pub fn parse_json(s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| Error::Input(format!("malformed json: {e}")))
}

/// Canonical rendering: two-space pretty print plus a trailing newline.
pub fn render(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("value rendering cannot fail");
    s.push('\n');
    s
}

fn obj(entries: Vec<(&str, Value)>) -> Value {
    let mut m = Map::new();
    for (k, v) in entries {
        m.insert(k.to_string(), v);
    }
    Value::Object(m)
}

fn get<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key)
        .ok_or_else(|| Error::Input(format!("missing key {key:?}")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64()
        .map(|x| x as usize)
        .ok_or_else(|| Error::Input(format!("{what} must be a nonnegative integer")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array()
        .ok_or_else(|| Error::Input(format!("{what} must be an array")))
}

fn usize_list(v: &Value, what: &str) -> Result<Vec<usize>> {
    as_array(v, what)?.iter().map(|x| as_usize(x, what)).collect()
}

fn usize_pairs(v: &Value, what: &str) -> Result<Vec<(usize, usize)>> {
    as_array(v, what)?
        .iter()
        .map(|p| {
            let arr = as_array(p, what)?;
            if arr.len() != 2 {
                return Err(Error::Input(format!("{what} entries must be pairs")));
            }
            Ok((as_usize(&arr[0], what)?, as_usize(&arr[1], what)?))
        })
        .collect()
}

fn id_list(ids: impl IntoIterator<Item = usize>) -> Value {
    Value::Array(ids.into_iter().map(|x| Value::from(x as u64)).collect())
}

fn pair_list(pairs: impl IntoIterator<Item = (usize, usize)>) -> Value {
    Value::Array(
        pairs
            .into_iter()
            .map(|(a, b)| Value::Array(vec![Value::from(a as u64), Value::from(b as u64)]))
            .collect(),
    )
}

/// Node named by id or by label against an optional poset.
fn resolve_node(v: &Value, poset: Option<&FinPoset>) -> Result<usize> {
    if let Some(x) = v.as_u64() {
        return Ok(x as usize);
    }
    let s = v
        .as_str()
        .ok_or_else(|| Error::Input("node must be an id or a label".into()))?;
    if let Ok(x) = s.parse::<usize>() {
        return Ok(x);
    }
    poset
        .and_then(|p| p.find_label(s))
        .ok_or_else(|| Error::Input(format!("unknown node {s:?}")))
}

pub fn poset_to_value(p: &FinPoset) -> Value {
    let mut le = Vec::new();
    for a in p.elements() {
        for b in p.elements() {
            if a != b && p.le(a, b) {
                le.push((a, b));
            }
        }
    }
    obj(vec![
        (
            "elements",
            Value::Array(p.labels().iter().map(|l| Value::from(l.as_str())).collect()),
        ),
        ("le", pair_list(le)),
    ])
}

pub fn poset_from_value(v: &Value) -> Result<(FinPoset, ClosureReport)> {
    let elems = as_array(get(v, "elements")?, "elements")?;
    let labels: Vec<String> = elems
        .iter()
        .map(|e| {
            if let Some(x) = e.as_u64() {
                Ok(x.to_string())
            } else {
                e.as_str()
                    .map(str::to_string)
                    .ok_or_else(|| Error::Input("elements must be ids or labels".into()))
            }
        })
        .collect::<Result<_>>()?;
    let pairs = usize_pairs(get(v, "le")?, "le")?;
    let (p, report) = FinPoset::from_pairs(labels.len(), &pairs)?;
    Ok((p.with_labels(labels)?, report))
}

pub fn param_to_value(p: &TwinshipParam) -> Value {
    let theta = match p.theta {
        ThetaTag::Omega => "omega",
        ThetaTag::Uncountable => "uncountable",
    };
    obj(vec![
        ("poset", poset_to_value(&p.poset)),
        (
            "B",
            Value::Array(p.family.iter().map(|d| id_list(d.iter().copied())).collect()),
        ),
        ("theta", Value::from(theta)),
        ("frontier", id_list(p.frontier.iter().copied())),
    ])
}

pub fn param_from_value(v: &Value) -> Result<TwinshipParam> {
    let (poset, _) = poset_from_value(get(v, "poset")?)?;
    let family: Vec<BTreeSet<usize>> = as_array(get(v, "B")?, "B")?
        .iter()
        .map(|d| usize_list(d, "B member").map(|ids| ids.into_iter().collect()))
        .collect::<Result<_>>()?;
    let theta = match get(v, "theta")?.as_str() {
        Some("omega") => ThetaTag::Omega,
        Some("uncountable") => ThetaTag::Uncountable,
        _ => return Err(Error::Input("theta must be \"omega\" or \"uncountable\"".into())),
    };
    let frontier: BTreeSet<usize> = usize_list(get(v, "frontier")?, "frontier")?
        .into_iter()
        .collect();
    TwinshipParam::new(poset, family, theta, frontier)
}

/// Structures serialize with their ascending element order, so the linear
/// order must really be linear.
pub fn structure_to_value(j: &OrgStructure) -> Result<Value> {
    let order = j
        .rel
        .ranking()
        .ok_or_else(|| Error::Input("structure order is not linear".into()))?;
    let edges: BTreeSet<(usize, usize)> = j
        .rel
        .edge_pairs()
        .into_iter()
        .map(|(a, b)| (a.min(b), a.max(b)))
        .collect();
    let mut maps = Map::new();
    for node in j.maps.nodes() {
        let pairs: Vec<(usize, usize)> = j.maps.positive(node).pairs().collect();
        maps.insert(node.to_string(), pair_list(pairs));
    }
    Ok(obj(vec![
        ("n", Value::from(j.len() as u64)),
        ("order", id_list(order)),
        ("edges", pair_list(edges)),
        ("maps", Value::Object(maps)),
        ("frontier", id_list(j.frontier.iter().copied())),
    ]))
}

pub fn structure_from_value(v: &Value, poset: Option<&FinPoset>) -> Result<OrgStructure> {
    let n = as_usize(get(v, "n")?, "n")?;
    let order = usize_list(get(v, "order")?, "order")?;
    if order.len() != n {
        return Err(Error::Input(format!(
            "order lists {} of {n} elements",
            order.len()
        )));
    }
    let mut rel = RelStruct::from_ranking(&order, &[])?;
    for (a, b) in usize_pairs(get(v, "edges")?, "edges")? {
        rel.check_element(a)?;
        rel.check_element(b)?;
        rel.set_edge_sym(a, b, true);
    }
    let maps_v = get(v, "maps")?
        .as_object()
        .ok_or_else(|| Error::Input("maps must be an object".into()))?;
    let mut pos = BTreeMap::new();
    for (key, pairs_v) in maps_v {
        let node = resolve_node(&Value::from(key.as_str()), poset)?;
        let pairs = usize_pairs(pairs_v, "map pairs")?;
        for &(a, b) in &pairs {
            rel.check_element(a)?;
            rel.check_element(b)?;
        }
        pos.insert(node, PartialMap::from_pairs(&pairs)?);
    }
    let frontier: BTreeSet<usize> = usize_list(get(v, "frontier")?, "frontier")?
        .into_iter()
        .collect();
    OrgStructure::new(rel, MapFamily::from_positive(pos), frontier)
}

pub fn word_to_value(w: &Word) -> Value {
    Value::Array(
        w.letters()
            .iter()
            .map(|l| {
                let sign = match l.sign {
                    Sign::Plus => 1i64,
                    Sign::Minus => -1i64,
                };
                Value::Array(vec![Value::from(l.node.to_string()), Value::from(sign)])
            })
            .collect(),
    )
}

pub fn word_from_value(v: &Value, poset: Option<&FinPoset>) -> Result<Word> {
    let mut letters = Vec::new();
    for entry in as_array(v, "word")? {
        let arr = as_array(entry, "word letter")?;
        if arr.len() != 2 {
            return Err(Error::Input("word letters must be [node, sign] pairs".into()));
        }
        let node = resolve_node(&arr[0], poset)?;
        let sign = match arr[1].as_i64() {
            Some(1) => Sign::Plus,
            Some(-1) => Sign::Minus,
            _ => return Err(Error::Input("letter sign must be 1 or -1".into())),
        };
        letters.push(Letter::new(node, sign));
    }
    Ok(Word(letters))
}

pub fn coloring_to_value(c: &Coloring) -> Value {
    let mut pairs = Map::new();
    for i in 0..c.lambda {
        for j in i + 1..c.lambda {
            pairs.insert(format!("{i},{j}"), Value::from(c.get(i, j) as u64));
        }
    }
    obj(vec![
        ("lambda", Value::from(c.lambda as u64)),
        ("pairs", Value::Object(pairs)),
    ])
}

pub fn coloring_from_value(v: &Value) -> Result<Coloring> {
    let lambda = as_usize(get(v, "lambda")?, "lambda")?;
    let pairs_v = get(v, "pairs")?
        .as_object()
        .ok_or_else(|| Error::Input("pairs must be an object".into()))?;
    let mut pairs = Vec::new();
    for (key, col) in pairs_v {
        let (i, j) = key
            .split_once(',')
            .ok_or_else(|| Error::Input(format!("pair key {key:?} is not \"i,j\"")))?;
        let i: usize = i
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("bad pair key {key:?}")))?;
        let j: usize = j
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("bad pair key {key:?}")))?;
        pairs.push(((i, j), as_usize(col, "color")?));
    }
    Coloring::new(lambda, &pairs)
}

pub fn blueprint_to_value(b: &Blueprint) -> Value {
    match b {
        Blueprint::Identity => Value::from("identity"),
        Blueprint::Table(t) => Value::Array(
            t.iter()
                .map(|(input, output)| {
                    Value::Array(vec![
                        serde_json::to_value(input).expect("type rendering cannot fail"),
                        serde_json::to_value(output).expect("type rendering cannot fail"),
                    ])
                })
                .collect(),
        ),
    }
}

pub fn blueprint_from_value(v: &Value) -> Result<Blueprint> {
    if v.as_str() == Some("identity") {
        return Ok(Blueprint::Identity);
    }
    let mut table = BTreeMap::new();
    for entry in as_array(v, "blueprint")? {
        let arr = as_array(entry, "blueprint entry")?;
        if arr.len() != 2 {
            return Err(Error::Input("blueprint entries must be [input, output] pairs".into()));
        }
        let input: QfType = serde_json::from_value(arr[0].clone())
            .map_err(|e| Error::Input(format!("bad input type: {e}")))?;
        let output: QfType = serde_json::from_value(arr[1].clone())
            .map_err(|e| Error::Input(format!("bad output type: {e}")))?;
        table.insert(input, output);
    }
    Ok(Blueprint::Table(table))
}

pub fn forcing_to_value(m: &crate::twinship::ForcingExample) -> Value {
    let theta = match m.theta {
        ThetaTag::Omega => "omega",
        ThetaTag::Uncountable => "uncountable",
    };
    obj(vec![
        ("lam", Value::from(m.lam as u64)),
        ("theta", Value::from(theta)),
        ("depth", Value::from(m.tree.depth as u64)),
        ("conditions", poset_to_value(&m.conditions)),
        ("name", id_list(m.name.iter().copied())),
    ])
}

pub fn forcing_from_value(v: &Value) -> Result<crate::twinship::ForcingExample> {
    let lam = as_usize(get(v, "lam")?, "lam")?;
    let theta = match get(v, "theta")?.as_str() {
        Some("omega") => ThetaTag::Omega,
        Some("uncountable") => ThetaTag::Uncountable,
        _ => return Err(Error::Input("theta must be \"omega\" or \"uncountable\"".into())),
    };
    let depth = as_usize(get(v, "depth")?, "depth")?;
    let tree = crate::poset::SeqTree::new(lam, depth)?;
    let (conditions, _) = poset_from_value(get(v, "conditions")?)?;
    let name = usize_list(get(v, "name")?, "name")?;
    crate::twinship::ForcingExample::new(lam, theta, tree, conditions, name)
}

/// Full reproducibility bundle: the assembly inputs plus the structure and
/// distinguished sets they produced.
pub fn assembly_to_value(a: &TwinAssembly) -> Result<Value> {
    let order = match a.opts.order {
        OrderRule::Shortlex => "shortlex",
        OrderRule::Invariant => "invariant",
    };
    let y_blocks = match &a.opts.y_blocks {
        None => Value::Null,
        Some(bs) => id_list(bs.iter().copied()),
    };
    Ok(obj(vec![
        ("param", param_to_value(&a.param)),
        ("lam", Value::from(a.lam as u64)),
        ("d_seq", id_list(a.d_seq.iter().copied())),
        ("coloring", coloring_to_value(&a.coloring)),
        ("depth", Value::from(a.depth as u64)),
        ("blueprint", blueprint_to_value(&a.blueprint)),
        ("order", Value::from(order)),
        ("y_blocks", y_blocks),
        ("structure", structure_to_value(&a.j)?),
        ("x", id_list(a.x.iter().copied())),
        ("x1", id_list(a.x1.iter().copied())),
        ("x2", id_list(a.x2.iter().copied())),
        ("y", id_list(a.y.iter().copied())),
        ("z", id_list(a.z.iter().copied())),
    ]))
}

/// Rebuilds the assembly from the bundled inputs and demands that the stored
/// structure and sets match the rebuild, so a stale or edited bundle is
/// rejected rather than trusted.
pub fn assembly_from_value(v: &Value) -> Result<TwinAssembly> {
    let param = param_from_value(get(v, "param")?)?;
    let lam = as_usize(get(v, "lam")?, "lam")?;
    let d_seq = usize_list(get(v, "d_seq")?, "d_seq")?;
    let coloring = coloring_from_value(get(v, "coloring")?)?;
    let depth = as_usize(get(v, "depth")?, "depth")?;
    let blueprint = blueprint_from_value(get(v, "blueprint")?)?;
    let order = match get(v, "order")?.as_str() {
        Some("shortlex") => OrderRule::Shortlex,
        Some("invariant") => OrderRule::Invariant,
        _ => return Err(Error::Input("order must be \"shortlex\" or \"invariant\"".into())),
    };
    let y_blocks = match get(v, "y_blocks")? {
        Value::Null => None,
        other => Some(usize_list(other, "y_blocks")?.into_iter().collect()),
    };
    let opts = AssembleOpts {
        order,
        y_blocks,
        ..AssembleOpts::default()
    };
    let a = assemble(&param, lam, &d_seq, &coloring, depth, &blueprint, opts)?;
    let same_sets = |key: &str, want: &BTreeSet<usize>| -> Result<bool> {
        let got: BTreeSet<usize> = usize_list(get(v, key)?, key)?.into_iter().collect();
        Ok(&got == want)
    };
    let stored = get(v, "structure")?;
    if structure_to_value(&a.j)? != *stored
        || !same_sets("x", &a.x)?
        || !same_sets("x1", &a.x1)?
        || !same_sets("x2", &a.x2)?
        || !same_sets("y", &a.y)?
        || !same_sets("z", &a.z)?
    {
        return Err(Error::Input(
            "assembly bundle does not reproduce from its inputs".into(),
        ));
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::entangle::pentagon_coloring;
    use crate::gem::gem_realize;
    use crate::pipeline::verify_hypotheses_c11;
    use crate::poset::SeqTree;
    use crate::rel::qf_type;

    fn roundtrip(s: &str, reparse: impl Fn(&Value) -> Value) -> (String, String) {
        let v1 = parse_json(s).unwrap();
        let out1 = render(&reparse(&v1));
        let v2 = parse_json(&out1).unwrap();
        let out2 = render(&reparse(&v2));
        (out1, out2)
    }

    #[test]
    fn poset_roundtrip_is_stable() {
        let raw = r#"{ "elements": [0, 1, 2], "le": [[0, 1], [0, 2]] }"#;
        let (a, b) = roundtrip(raw, |v| poset_to_value(&poset_from_value(v).unwrap().0));
        assert_eq!(a, b);
        let (p, rep) = poset_from_value(&parse_json(raw).unwrap()).unwrap();
        assert_eq!(p.len(), 3);
        assert_eq!(rep.added_reflexive, 3);
    }

    #[test]
    fn structure_roundtrip_matches_spec_shape() {
        let raw = r#"{
            "n": 5,
            "order": [0, 1, 2, 3, 4],
            "edges": [[0, 2]],
            "maps": {"1": [[0, 1]]},
            "frontier": [4]
        }"#;
        let (a, b) = roundtrip(raw, |v| {
            structure_to_value(&structure_from_value(v, None).unwrap()).unwrap()
        });
        assert_eq!(a, b);
        let j = structure_from_value(&parse_json(raw).unwrap(), None).unwrap();
        assert_eq!(j.len(), 5);
        assert!(j.rel.edge(2, 0));
        assert_eq!(j.maps.positive(1).get(0), Some(1));
        assert!(j.frontier.contains(&4));
    }

    #[test]
    fn map_keys_resolve_against_labels() {
        let tree = SeqTree::new(2, 2).unwrap();
        let raw = r#"{
            "n": 2, "order": [0, 1], "edges": [],
            "maps": {"0": [[0, 1]]}, "frontier": []
        }"#;
        let j = structure_from_value(&parse_json(raw).unwrap(), Some(tree.poset())).unwrap();
        assert_eq!(j.maps.positive(0).get(0), Some(1));
        let bad = r#"{
            "n": 2, "order": [0, 1], "edges": [],
            "maps": {"missing": [[0, 1]]}, "frontier": []
        }"#;
        assert!(structure_from_value(&parse_json(bad).unwrap(), Some(tree.poset())).is_err());
    }

    #[test]
    fn word_roundtrip() {
        let raw = r#"[["0", 1], ["1", -1]]"#;
        let w = word_from_value(&parse_json(raw).unwrap(), None).unwrap();
        assert_eq!(w.len(), 2);
        assert_eq!(w.letters()[1].sign, Sign::Minus);
        let out = render(&word_to_value(&w));
        let w2 = word_from_value(&parse_json(&out).unwrap(), None).unwrap();
        assert_eq!(w, w2);
    }

    #[test]
    fn coloring_roundtrip_covers_all_pairs() {
        let c = pentagon_coloring();
        let out = render(&coloring_to_value(&c));
        let c2 = coloring_from_value(&parse_json(&out).unwrap()).unwrap();
        for i in 0..c.lambda {
            for j in i + 1..c.lambda {
                assert_eq!(c.get(i, j), c2.get(i, j));
            }
        }
        assert_eq!(out, render(&coloring_to_value(&c2)));
    }

    #[test]
    fn blueprint_identity_and_table_roundtrip() {
        assert!(matches!(
            blueprint_from_value(&parse_json("\"identity\"").unwrap()).unwrap(),
            Blueprint::Identity
        ));
        let g = RelStruct::linear(2);
        let up = qf_type(&g, &[0, 1]).unwrap();
        let down = qf_type(&g, &[1, 0]).unwrap();
        let bp = Blueprint::Table(BTreeMap::from([
            (up.clone(), up),
            (down.clone(), down),
        ]));
        let out = render(&blueprint_to_value(&bp));
        let bp2 = blueprint_from_value(&parse_json(&out).unwrap()).unwrap();
        assert_eq!(out, render(&blueprint_to_value(&bp2)));
        gem_realize(&g, &bp2).unwrap();
    }

    #[test]
    fn param_roundtrip() {
        let tree = SeqTree::new(2, 2).unwrap();
        let p = TwinshipParam::new(
            tree.poset().clone(),
            vec![tree.level_set(1)],
            ThetaTag::Omega,
            tree.level_set(1),
        )
        .unwrap();
        let out = render(&param_to_value(&p));
        let p2 = param_from_value(&parse_json(&out).unwrap()).unwrap();
        assert_eq!(p, p2);
        assert_eq!(out, render(&param_to_value(&p2)));
    }

    #[test]
    fn forcing_roundtrip() {
        let tree = SeqTree::new(2, 2).unwrap();
        let (conds, _) = FinPoset::from_pairs(3, &[(0, 1), (0, 2)]).unwrap();
        let m = crate::twinship::ForcingExample::new(
            2,
            ThetaTag::Omega,
            tree,
            conds,
            vec![0, 1, 2],
        )
        .unwrap();
        let out = render(&forcing_to_value(&m));
        let m2 = forcing_from_value(&parse_json(&out).unwrap()).unwrap();
        assert_eq!(out, render(&forcing_to_value(&m2)));
    }

    #[test]
    fn assembly_bundle_reproduces() {
        let (t, _) = FinPoset::from_pairs(1, &[]).unwrap();
        let p = TwinshipParam::new(
            t,
            vec![BTreeSet::from([0])],
            ThetaTag::Omega,
            BTreeSet::from([0]),
        )
        .unwrap();
        let c = Coloring::from_fn(2, |_, _| 1);
        let a = assemble(
            &p,
            2,
            &[0, 0],
            &c,
            2,
            &Blueprint::Identity,
            AssembleOpts::default(),
        )
        .unwrap();
        let out = render(&assembly_to_value(&a).unwrap());
        let a2 = assembly_from_value(&parse_json(&out).unwrap()).unwrap();
        assert_eq!(render(&assembly_to_value(&a2).unwrap()), out);
        assert!(verify_hypotheses_c11(&a2).unwrap().all_ok());

        // A tampered bundle must be rejected.
        let mut v = parse_json(&out).unwrap();
        v["x1"] = serde_json::json!([0]);
        assert!(assembly_from_value(&v).is_err());
    }
}
