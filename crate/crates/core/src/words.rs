//! Words over signed poset nodes and their action by partial injections.
//!
//! A word `o = <(eta_0, i_0), ..., (eta_{k-1}, i_{k-1})>` acts by composing the
//! single-letter maps with the last letter applied first:
//! `F_o(a) = F_{eta_0,i_0}(... F_{eta_{k-1},i_{k-1}}(a) ...)`. Words are plain
//! values; nothing here reduces or normalizes them behind the caller's back.

use crate::error::{Error, Result};
use crate::poset::{self, FinPoset};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }

    pub fn from_i64(v: i64) -> Result<Sign> {
        match v {
            1 => Ok(Sign::Plus),
            -1 => Ok(Sign::Minus),
            other => Err(Error::Input(format!("sign must be 1 or -1, got {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub node: usize,
    pub sign: Sign,
}

impl Letter {
    pub fn new(node: usize, sign: Sign) -> Letter {
        Letter { node, sign }
    }

    pub fn inverse(self) -> Letter {
        Letter {
            node: self.node,
            sign: self.sign.flip(),
        }
    }

    /// Two adjacent letters break formal reducedness exactly when they share a
    /// node but not a sign.
    pub fn clashes_with(self, other: Letter) -> bool {
        self.node == other.node && self.sign != other.sign
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Word(pub Vec<Letter>);

impl Word {
    pub fn empty() -> Word {
        Word(vec![])
    }

    pub fn from_letters(letters: &[(usize, i8)]) -> Word {
        Word(
            letters
                .iter()
                .map(|&(node, s)| Letter {
                    node,
                    sign: if s >= 0 { Sign::Plus } else { Sign::Minus },
                })
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    /// First letter, the one applied last.
    pub fn head(&self) -> Option<Letter> {
        self.0.first().copied()
    }

    /// New word with `l` at the front; the extra letter acts after the rest.
    pub fn prepend(&self, l: Letter) -> Word {
        let mut v = Vec::with_capacity(self.len() + 1);
        v.push(l);
        v.extend_from_slice(&self.0);
        Word(v)
    }

    pub fn tail(&self) -> Word {
        Word(self.0[1..].to_vec())
    }

    pub fn sign_pattern(&self) -> Vec<Sign> {
        self.0.iter().map(|l| l.sign).collect()
    }

    /// Shortlex with letters compared by (node, sign); used as the canonical
    /// order wherever word universes need one.
    pub fn shortlex_cmp(&self, other: &Word) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "<")?;
        for (i, l) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            let s = if l.sign == Sign::Plus { "+" } else { "-" };
            write!(f, "({}{})", l.node, s)?;
        }
        write!(f, ">")
    }
}

/// No two adjacent letters share a node with opposite signs.
pub fn is_formally_reduced(o: &Word) -> bool {
    o.0.windows(2).all(|w| !w[0].clashes_with(w[1]))
}

/// Finite partial injection on `0..n`.
#[derive(Debug, Clone, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PartialMap {
    fwd: BTreeMap<usize, usize>,
}

impl PartialMap {
    pub fn new() -> PartialMap {
        PartialMap::default()
    }

    pub fn from_pairs(pairs: &[(usize, usize)]) -> Result<PartialMap> {
        let mut fwd = BTreeMap::new();
        let mut seen_targets = BTreeMap::new();
        for &(a, b) in pairs {
            if let Some(&prev) = fwd.get(&a) {
                if prev != b {
                    return Err(Error::Inconsistent {
                        element: a,
                        first: prev,
                        second: b,
                    });
                }
                continue;
            }
            if let Some(&src) = seen_targets.get(&b) {
                if src != a {
                    return Err(Error::Input(format!(
                        "pairs are not injective: {src} and {a} both map to {b}"
                    )));
                }
            }
            fwd.insert(a, b);
            seen_targets.insert(b, a);
        }
        Ok(PartialMap { fwd })
    }

    pub fn insert(&mut self, a: usize, b: usize) -> Result<()> {
        if let Some(&prev) = self.fwd.get(&a) {
            if prev != b {
                return Err(Error::Inconsistent {
                    element: a,
                    first: prev,
                    second: b,
                });
            }
            return Ok(());
        }
        if self.fwd.values().any(|&t| t == b) {
            return Err(Error::Input(format!("target {b} already taken")));
        }
        self.fwd.insert(a, b);
        Ok(())
    }

    pub fn get(&self, a: usize) -> Option<usize> {
        self.fwd.get(&a).copied()
    }

    pub fn contains_source(&self, a: usize) -> bool {
        self.fwd.contains_key(&a)
    }

    pub fn len(&self) -> usize {
        self.fwd.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fwd.is_empty()
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.fwd.iter().map(|(&a, &b)| (a, b))
    }

    pub fn domain(&self) -> impl Iterator<Item = usize> + '_ {
        self.fwd.keys().copied()
    }

    pub fn range(&self) -> impl Iterator<Item = usize> + '_ {
        self.fwd.values().copied()
    }

    pub fn inverse(&self) -> PartialMap {
        PartialMap {
            fwd: self.fwd.iter().map(|(&a, &b)| (b, a)).collect(),
        }
    }

    /// `self` after `other`: `(self . other)(a) = self(other(a))`.
    pub fn compose_after(&self, other: &PartialMap) -> PartialMap {
        let mut fwd = BTreeMap::new();
        for (a, b) in other.pairs() {
            if let Some(c) = self.get(b) {
                fwd.insert(a, c);
            }
        }
        PartialMap { fwd }
    }

    pub fn is_subset_of(&self, other: &PartialMap) -> bool {
        self.pairs().all(|(a, b)| other.get(a) == Some(b))
    }

    /// Union of two maps if the result is still a partial injection.
    pub fn union(&self, other: &PartialMap) -> Result<PartialMap> {
        let mut out = self.clone();
        for (a, b) in other.pairs() {
            match out.fwd.get(&a) {
                Some(&prev) if prev != b => {
                    return Err(Error::Inconsistent {
                        element: a,
                        first: prev,
                        second: b,
                    })
                }
                Some(_) => continue,
                None => {
                    out.fwd.insert(a, b);
                }
            }
        }
        Ok(out)
    }
}

/// Per-node positive maps; the negative direction is the inverse. Families
/// constructed from both directions are checked against the inverse convention.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct MapFamily {
    pos: BTreeMap<usize, PartialMap>,
}

impl MapFamily {
    pub fn from_positive(pos: BTreeMap<usize, PartialMap>) -> MapFamily {
        MapFamily { pos }
    }

    /// Builds from explicit maps in both directions, verifying that each
    /// negative map inverts its positive mate.
    pub fn from_both(
        pos: BTreeMap<usize, PartialMap>,
        neg: BTreeMap<usize, PartialMap>,
    ) -> Result<MapFamily> {
        for (&node, np) in &neg {
            let expected = pos.get(&node).cloned().unwrap_or_default().inverse();
            if *np != expected {
                return Err(Error::InverseMismatch { node });
            }
        }
        for (&node, pp) in &pos {
            if !pp.is_empty() && !neg.contains_key(&node) {
                return Err(Error::InverseMismatch { node });
            }
        }
        Ok(MapFamily { pos })
    }

    pub fn positive(&self, node: usize) -> PartialMap {
        self.pos.get(&node).cloned().unwrap_or_default()
    }

    pub fn nodes(&self) -> impl Iterator<Item = usize> + '_ {
        self.pos.keys().copied()
    }

    pub fn map(&self, l: Letter) -> PartialMap {
        let m = self.positive(l.node);
        match l.sign {
            Sign::Plus => m,
            Sign::Minus => m.inverse(),
        }
    }

    pub fn apply(&self, l: Letter, a: usize) -> Option<usize> {
        self.map(l).get(a)
    }
}

/// Applies a word to `a`, last letter first; `None` when the composite is
/// undefined at `a`.
pub fn eval_word(maps: &MapFamily, o: &Word, a: usize) -> Option<usize> {
    let mut cur = a;
    for l in o.0.iter().rev() {
        cur = maps.apply(*l, cur)?;
    }
    Some(cur)
}

/// The trace `<a_0, ..., a_k>` with `a_k = a` and `a_l` the image of `a_{l+1}`
/// under letter `l`; index 0 holds the final value.
pub fn orbit(maps: &MapFamily, o: &Word, a: usize) -> Option<Vec<usize>> {
    let k = o.len();
    let mut out = vec![0; k + 1];
    out[k] = a;
    for l in (0..k).rev() {
        out[l] = maps.apply(o.0[l], out[l + 1])?;
    }
    Some(out)
}

/// All trace entries pairwise distinct.
pub fn is_reduced_orbit(orbit: &[usize]) -> bool {
    orbit
        .iter()
        .enumerate()
        .all(|(i, &x)| !orbit[i + 1..].contains(&x))
}

/// Componentwise order on words: equal lengths, equal sign patterns, and each
/// node below its mate in `t`.
pub fn word_le(t: &FinPoset, o1: &Word, o2: &Word) -> Result<bool> {
    for l in o1.0.iter().chain(o2.0.iter()) {
        t.check_element(l.node)?;
    }
    if o1.len() != o2.len() {
        return Ok(false);
    }
    Ok(o1
        .0
        .iter()
        .zip(o2.0.iter())
        .all(|(a, b)| a.sign == b.sign && t.le(a.node, b.node)))
}

/// Characterization of compatibility in the word order: equal lengths, equal
/// signs, and componentwise compatible nodes.
pub fn word_compatible(t: &FinPoset, o1: &Word, o2: &Word) -> Result<bool> {
    for l in o1.0.iter().chain(o2.0.iter()) {
        t.check_element(l.node)?;
    }
    if o1.len() != o2.len() {
        return Ok(false);
    }
    Ok(o1
        .0
        .iter()
        .zip(o2.0.iter())
        .all(|(a, b)| a.sign == b.sign && t.compatible(a.node, b.node)))
}

/// Componentwise node meet with the shared sign pattern. Errors when lengths or
/// signs differ (no common lower bound exists then) or when some position has
/// no unique node meet.
pub fn word_meet(t: &FinPoset, o1: &Word, o2: &Word) -> Result<Word> {
    if o1.len() != o2.len() {
        return Err(Error::Incomparable);
    }
    let mut letters = Vec::with_capacity(o1.len());
    for (pos, (a, b)) in o1.0.iter().zip(o2.0.iter()).enumerate() {
        if a.sign != b.sign {
            return Err(Error::Incomparable);
        }
        match poset::meet(t, a.node, b.node)? {
            Some(m) => letters.push(Letter::new(m, a.sign)),
            None => return Err(Error::NoNodeMeet { position: pos }),
        }
    }
    Ok(Word(letters))
}
