//! Sparse configurations, synchronous stepping and the front.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{CellState, Context, EngineError, RuleTable};
use crate::grid::{self, TileCoord};

/// The finite set of B cells at some time.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Configuration {
    pub cells: BTreeSet<TileCoord>,
    pub time: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {msg}")]
pub struct ConfigError {
    pub line: usize,
    pub msg: String,
}

impl Configuration {
    pub fn from_cells(cells: impl IntoIterator<Item = TileCoord>) -> Self {
        Configuration { cells: cells.into_iter().collect(), time: 0 }
    }

    /// Parses one tile per line; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cells = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let t: TileCoord = body.parse().map_err(|e| ConfigError { line, msg: format!("{e}") })?;
            if !cells.insert(t) {
                return Err(ConfigError { line, msg: format!("tile {t} is listed twice") });
            }
        }
        Ok(Configuration { cells, time: 0 })
    }

    pub fn to_text(&self) -> String {
        self.cells.iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn contains(&self, t: TileCoord) -> bool {
        self.cells.contains(&t)
    }

    pub fn state(&self, t: TileCoord) -> CellState {
        if self.contains(t) {
            CellState::B
        } else {
            CellState::W
        }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Largest circle holding a B cell; 0 when empty.
    pub fn border(&self) -> Result<u32, EngineError> {
        self.cells.iter().try_fold(0, |acc, &t| Ok(acc.max(grid::circle_of(t)?)))
    }

    /// The configuration turned by `k` sectors.
    pub fn rotate(&self, k: u8) -> Self {
        Configuration { cells: self.cells.iter().map(|t| t.rotate(k)).collect(), time: self.time }
    }

    /// Context of tile `t`.
    pub fn context(&self, t: TileCoord) -> Result<Context, EngineError> {
        let nbrs = grid::neighbors(t)?;
        Ok(Context::new(self.state(t), nbrs.map(|n| self.state(n))))
    }
}

/// Identity of a configuration's B-set, time excluded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConfigKey(Vec<TileCoord>);

pub fn canonical_key(c: &Configuration) -> ConfigKey {
    ConfigKey(c.cells.iter().copied().collect())
}

/// One synchronous update. Only B cells and their neighbours can change,
/// since an all-W context maps to W.
pub fn step(table: &RuleTable, c: &Configuration) -> Result<Configuration, EngineError> {
    let mut candidates = c.cells.clone();
    for &t in &c.cells {
        candidates.extend(grid::neighbors(t)?);
    }
    let mut cells = BTreeSet::new();
    for t in candidates {
        if table.get(c.context(t)?) == CellState::B {
            cells.insert(t);
        }
    }
    Ok(Configuration { cells, time: c.time + 1 })
}

/// States along one circle, read from `(1, first node of the level)` onward.
/// Only the B positions are stored.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FrontWord {
    circle: u32,
    len: u64,
    black: BTreeSet<u64>,
}

impl FrontWord {
    /// A word over an arbitrary circular sequence (not tied to a circle).
    pub fn from_states(states: &[CellState]) -> Self {
        FrontWord {
            circle: 0,
            len: states.len() as u64,
            black: states.iter().enumerate().filter(|(_, s)| **s == CellState::B).map(|(i, _)| i as u64).collect(),
        }
    }

    pub fn circle(&self) -> u32 {
        self.circle
    }

    pub(crate) fn set_circle(&mut self, circle: u32) {
        self.circle = circle;
    }

    pub fn len(&self) -> u64 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// State at circular position `pos` (taken modulo the length).
    pub fn get(&self, pos: u64) -> CellState {
        if self.black.contains(&(pos % self.len)) {
            CellState::B
        } else {
            CellState::W
        }
    }

    /// Positions holding B, ascending.
    pub fn black_positions(&self) -> &BTreeSet<u64> {
        &self.black
    }

    pub fn count_black(&self) -> u64 {
        self.black.len() as u64
    }

    pub fn all_black(&self) -> bool {
        self.black.len() as u64 == self.len
    }
}

impl fmt::Display for FrontWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        (0..self.len).try_for_each(|p| write!(f, "{}", self.get(p)))
    }
}

pub fn front_word(c: &Configuration, n: u32) -> Result<FrontWord, EngineError> {
    if n == 0 {
        return Err(EngineError::NoWordOnCentral);
    }
    let len = grid::circle_size(n)?;
    let mut black = BTreeSet::new();
    for &t in &c.cells {
        let (circle, pos) = grid::circle_position(t)?;
        if circle == n {
            black.insert(pos);
        }
    }
    Ok(FrontWord { circle: n, len, black })
}

/// The front index `N_t` (smallest disc holding every configuration so far)
/// and the word on that circle; no word when the front is the central tile.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrontInfo {
    pub n: u32,
    pub word: Option<FrontWord>,
}

pub fn front_update(prev: Option<&FrontInfo>, c: &Configuration) -> Result<FrontInfo, EngineError> {
    let n = prev.map_or(0, |p| p.n).max(c.border()?);
    let word = if n == 0 { None } else { Some(front_word(c, n)?) };
    Ok(FrontInfo { n, word })
}
