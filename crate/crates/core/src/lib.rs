//! Finite-scale workbench for twinned structures. The crate covers twinship
//! parameters over finite posets, orbit algebras of partial injections
//! indexed by signed poset nodes, ordered-graph classes with node-indexed
//! partial automorphisms, entangledness and coloring checks, staged
//! isomorphism games, blueprint fragments, and the end-to-end twin assembly,
//! all sized so that brute-force oracles can confirm every claim.

pub mod entangle;
pub mod error;
pub mod formula;
pub mod gem;
pub mod json;
pub mod logic;
pub mod org;
pub mod pipeline;
pub mod poset;
pub mod rel;
pub mod report;
pub mod twinship;
pub mod words;

pub use error::{Error, Result};
