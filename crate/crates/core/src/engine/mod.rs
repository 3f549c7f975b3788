//! Two-state cellular automata on the pentagrid: rule tables, configurations,
//! synchronous stepping and front tracking.

mod config;
mod dense;
mod rules;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grid::GridError;

pub use config::{canonical_key, front_update, front_word, step, ConfigError, ConfigKey, Configuration, FrontInfo, FrontWord};
pub use dense::{DiscTopology, Simulator, MAX_DENSE_RADIUS};
pub use rules::{is_rotation_invariant, parse_rule_set, parse_rules, rotation_closure, Rule, RuleError, RuleSet};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error("circle 0 has no circular word")]
    NoWordOnCentral,
    #[error("disc radius {0} exceeds the dense simulator limit {MAX_DENSE_RADIUS}")]
    RadiusTooLarge(u32),
}

/// Cell state. `W` is the quiescent state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub enum CellState {
    #[default]
    W,
    B,
}

impl CellState {
    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'W' => Some(CellState::W),
            'B' => Some(CellState::B),
            _ => None,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            CellState::W => 'W',
            CellState::B => 'B',
        }
    }

    fn bit(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CellState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_char())
    }
}

/// A cell's own state together with its neighbours' states in side order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Context {
    pub me: CellState,
    pub nbrs: [CellState; 5],
}

impl Context {
    pub const COUNT: usize = 64;

    pub fn new(me: CellState, nbrs: [CellState; 5]) -> Self {
        Context { me, nbrs }
    }

    /// Parses the two fields `W BWWWW`.
    pub fn parse(me: &str, nbrs: &str) -> Option<Self> {
        let mut it = me.chars();
        let me = CellState::from_char(it.next()?)?;
        if it.next().is_some() {
            return None;
        }
        let states: Vec<CellState> = nbrs.chars().map(CellState::from_char).collect::<Option<_>>()?;
        Some(Context { me, nbrs: states.try_into().ok()? })
    }

    /// Packs the context as `me n1 n2 n3 n4 n5`, most significant bit first.
    pub fn index(self) -> usize {
        self.nbrs.iter().fold(self.me.bit(), |acc, s| acc << 1 | s.bit())
    }

    pub fn from_index(i: usize) -> Self {
        assert!(i < Self::COUNT);
        let bit = |k: usize| if i >> k & 1 == 1 { CellState::B } else { CellState::W };
        Context { me: bit(5), nbrs: [bit(4), bit(3), bit(2), bit(1), bit(0)] }
    }

    pub fn all() -> impl Iterator<Item = Context> {
        (0..Self::COUNT).map(Self::from_index)
    }

    /// Neighbour word shifted by `k` sides: side `i` now reads side `i + k`.
    pub fn rotate(self, k: usize) -> Self {
        let mut nbrs = self.nbrs;
        nbrs.rotate_left(k % 5);
        Context { me: self.me, nbrs }
    }

    pub fn quiescent() -> Self {
        Context { me: CellState::W, nbrs: [CellState::W; 5] }
    }
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ", self.me)?;
        self.nbrs.iter().try_for_each(|s| write!(f, "{s}"))
    }
}

/// A total two-state rule table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RuleTable {
    out: [CellState; Context::COUNT],
}

impl RuleTable {
    /// Table built from an output per context. The quiescent rule is not
    /// checked here; see [`RuleTable::has_quiescent_rule`].
    pub fn from_fn(mut f: impl FnMut(Context) -> CellState) -> Self {
        RuleTable { out: std::array::from_fn(|i| f(Context::from_index(i))) }
    }

    /// Every cell keeps its state.
    pub fn identity() -> Self {
        Self::from_fn(|c| c.me)
    }

    pub fn get(&self, c: Context) -> CellState {
        self.out[c.index()]
    }

    pub fn set(&mut self, c: Context, s: CellState) {
        self.out[c.index()] = s;
    }

    pub(crate) fn by_index(&self, i: usize) -> CellState {
        self.out[i]
    }

    pub fn has_quiescent_rule(&self) -> bool {
        self.get(Context::quiescent()) == CellState::W
    }

    /// The 64 rule lines in index order, in the rule-file syntax.
    pub fn to_text(&self) -> String {
        Context::all().map(|c| format!("{c} -> {}\n", self.get(c))).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use CellState::{B, W};

    #[test]
    fn context_index_round_trip() {
        for i in 0..Context::COUNT {
            assert_eq!(Context::from_index(i).index(), i);
        }
        assert_eq!(Context::quiescent().index(), 0);
        assert_eq!(Context::new(W, [B, W, W, W, W]).index(), 0b010000);
        assert_eq!(Context::new(B, [W, W, W, W, B]).index(), 0b100001);
    }

    #[test]
    fn context_text() {
        let c = Context::parse("W", "BWWWW").unwrap();
        assert_eq!(c.to_string(), "W BWWWW");
        assert_eq!(c.rotate(1).to_string(), "W WWWWB");
        assert_eq!(c.rotate(5), c);
        for bad in [("X", "BWWWW"), ("W", "BWWW"), ("WW", "BWWWW"), ("W", "BWWWWW"), ("W", "BWGWW")] {
            assert_eq!(Context::parse(bad.0, bad.1), None, "{bad:?}");
        }
    }
}
