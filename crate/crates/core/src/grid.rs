//! Tile addressing over the five sectors plus the central tile, circle order,
//! and side-numbered adjacency.
//!
//! A tile is either the central tile or `(sector, node)`, where `node` numbers
//! the tile inside that sector's Fibonacci tree. Tree level `k` lies on the
//! Fibonacci circle `F_{k+1}`. Along each circle the tiles are ordered sector by
//! sector, each sector contributing its tree level left to right.
//!
//! Side numbering: side 1 faces the father (the central tile for sector roots).
//! A black node's side 2 faces the circle predecessor of its father. The sons
//! come next, left to right, and the last side faces the black son of the
//! circle successor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fib::{self, f, FibError, NodeKind, MAX_LEVEL};

pub const SECTORS: u8 = 5;

/// Largest circle whose tiles are all addressable.
pub const MAX_CIRCLE: u32 = MAX_LEVEL + 1;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GridError {
    #[error(transparent)]
    Fib(#[from] FibError),
    #[error("sector {0} is outside 1..=5")]
    BadSector(u8),
    #[error("the central tile has no circle order")]
    CentralHasNoCircleOrder,
    #[error("circle {0} is outside the supported range 0..={MAX_CIRCLE}")]
    CircleOutOfRange(u32),
    #[error("position {pos} is outside circle {circle}")]
    PositionOutOfRange { circle: u32, pos: u64 },
    #[error("tiles {0} and {1} are not adjacent")]
    NotAdjacent(TileCoord, TileCoord),
    #[error("cannot parse tile `{0}`")]
    Parse(String),
}

/// Address of a tile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum TileCoord {
    Central,
    Node { sector: u8, node: u64 },
}

impl TileCoord {
    /// A non-central tile, validated.
    pub fn new(sector: u8, node: u64) -> Result<Self, GridError> {
        if !(1..=SECTORS).contains(&sector) {
            return Err(GridError::BadSector(sector));
        }
        fib::level_of(node)?;
        Ok(TileCoord::Node { sector, node })
    }

    /// Sector root `(sector, 1)`.
    pub fn root(sector: u8) -> Self {
        debug_assert!((1..=SECTORS).contains(&sector));
        TileCoord::Node { sector, node: 1 }
    }

    pub fn sector(self) -> Option<u8> {
        match self {
            TileCoord::Central => None,
            TileCoord::Node { sector, .. } => Some(sector),
        }
    }

    /// Rotates by `k` sectors (`s -> s + k mod 5`), keeping the node number.
    pub fn rotate(self, k: u8) -> Self {
        match self {
            TileCoord::Central => TileCoord::Central,
            TileCoord::Node { sector, node } => TileCoord::Node {
                sector: (sector - 1 + k % SECTORS) % SECTORS + 1,
                node,
            },
        }
    }
}

impl fmt::Display for TileCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TileCoord::Central => f.write_str("C"),
            TileCoord::Node { sector, node } => write!(f, "{sector}:{node}"),
        }
    }
}

impl FromStr for TileCoord {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "C" {
            return Ok(TileCoord::Central);
        }
        let bad = || GridError::Parse(s.to_owned());
        let (sector, node) = s.split_once(':').ok_or_else(bad)?;
        let digits = |t: &str| !t.is_empty() && t.bytes().all(|b| b.is_ascii_digit());
        if !digits(sector) || !digits(node) {
            return Err(bad());
        }
        let sector = sector.parse::<u8>().map_err(|_| bad())?;
        let node = node.parse::<u64>().map_err(|_| bad())?;
        TileCoord::new(sector, node)
    }
}

impl From<TileCoord> for String {
    fn from(t: TileCoord) -> String {
        t.to_string()
    }
}

impl TryFrom<String> for TileCoord {
    type Error = GridError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

/// Distance from the central tile.
pub fn circle_of(t: TileCoord) -> Result<u32, GridError> {
    match t {
        TileCoord::Central => Ok(0),
        TileCoord::Node { node, .. } => Ok(fib::level_of(node)? + 1),
    }
}

/// `|F_n|`: 1 for the central tile, `5 f_{2n-1}` otherwise.
pub fn circle_size(n: u32) -> Result<u64, GridError> {
    match n {
        0 => Ok(1),
        n if n <= MAX_CIRCLE => Ok(5 * f(2 * n as usize - 1)),
        n => Err(GridError::CircleOutOfRange(n)),
    }
}

/// Circle index and 0-based position along the circle.
pub fn circle_position(t: TileCoord) -> Result<(u32, u64), GridError> {
    match t {
        TileCoord::Central => Ok((0, 0)),
        TileCoord::Node { sector, node } => {
            let level = fib::level_of(node)?;
            let span = fib::level_len(level);
            let pos = (sector as u64 - 1) * span + (node - fib::level_first(level));
            Ok((level + 1, pos))
        }
    }
}

/// Inverse of [`circle_position`].
pub fn tile_at(circle: u32, pos: u64) -> Result<TileCoord, GridError> {
    let size = circle_size(circle)?;
    if pos >= size {
        return Err(GridError::PositionOutOfRange { circle, pos });
    }
    if circle == 0 {
        return Ok(TileCoord::Central);
    }
    let level = circle - 1;
    let span = fib::level_len(level);
    Ok(TileCoord::Node {
        sector: (pos / span) as u8 + 1,
        node: fib::level_first(level) + pos % span,
    })
}

/// Next tile along the same circle.
pub fn circle_succ(t: TileCoord) -> Result<TileCoord, GridError> {
    circle_shift(t, 1)
}

/// Previous tile along the same circle.
pub fn circle_pred(t: TileCoord) -> Result<TileCoord, GridError> {
    circle_shift(t, -1)
}

fn circle_shift(t: TileCoord, by: i64) -> Result<TileCoord, GridError> {
    if t == TileCoord::Central {
        return Err(GridError::CentralHasNoCircleOrder);
    }
    let (circle, pos) = circle_position(t)?;
    let size = circle_size(circle)?;
    let pos = (pos as i128 + by as i128).rem_euclid(size as i128) as u64;
    tile_at(circle, pos)
}

fn black_son(t: TileCoord) -> Result<TileCoord, GridError> {
    match t {
        TileCoord::Central => unreachable!("the central tile is not a tree node"),
        TileCoord::Node { sector, node } => {
            let sons = fib::sons(node)?;
            Ok(TileCoord::Node { sector, node: sons[0] })
        }
    }
}

/// The five neighbours of `t`, indexed by side (`result[i]` is side `i + 1`).
pub fn neighbors(t: TileCoord) -> Result<[TileCoord; 5], GridError> {
    let (sector, node) = match t {
        TileCoord::Central => return Ok([1, 2, 3, 4, 5].map(TileCoord::root)),
        TileCoord::Node { sector, node } => (sector, node),
    };
    let place = fib::place(node)?;
    let on_tree = |n: u64| TileCoord::Node { sector, node: n };
    let sons: Vec<TileCoord> = fib::sons(node)?.into_iter().map(on_tree).collect();
    let last = black_son(circle_succ(t)?)?;
    let up = match fib::father(node)? {
        Some(dad) => on_tree(dad),
        None => TileCoord::Central,
    };
    Ok(match place.kind {
        NodeKind::White => [up, sons[0], sons[1], sons[2], last],
        NodeKind::Black => [up, circle_pred(up)?, sons[0], sons[1], last],
    })
}

/// Side of `a` (1..=5) shared with `b`.
pub fn side_between(a: TileCoord, b: TileCoord) -> Result<u8, GridError> {
    neighbors(a)?
        .iter()
        .position(|&n| n == b)
        .map(|i| i as u8 + 1)
        .ok_or(GridError::NotAdjacent(a, b))
}

/// Kind of the tree node under `t`; the central tile has none.
pub fn kind_of_tile(t: TileCoord) -> Result<Option<NodeKind>, GridError> {
    match t {
        TileCoord::Central => Ok(None),
        TileCoord::Node { node, .. } => Ok(Some(fib::kind_of(node)?)),
    }
}

/// All tiles of `F_n` in circle order.
pub fn circle_tiles(n: u32) -> Result<impl Iterator<Item = TileCoord>, GridError> {
    let size = circle_size(n)?;
    Ok((0..size).map(move |pos| tile_at(n, pos).expect("position within circle")))
}

/// All tiles of `D_n`, circle by circle.
pub fn disc_tiles(n: u32) -> Result<Vec<TileCoord>, GridError> {
    let mut out = Vec::new();
    for k in 0..=n {
        out.extend(circle_tiles(k)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::{HashMap, HashSet, VecDeque};

    fn t(s: &str) -> TileCoord {
        s.parse().unwrap()
    }

    #[test]
    fn tile_syntax() {
        assert_eq!(t("C"), TileCoord::Central);
        assert_eq!(t("1:8"), TileCoord::Node { sector: 1, node: 8 });
        assert_eq!(t("5:1").to_string(), "5:1");
        for bad in ["", "c", " 1:8", "1:8 ", "1: 8", "6:1", "0:1", "1:0", "1:-3", "1:", ":1", "1:2:3"] {
            assert!(bad.parse::<TileCoord>().is_err(), "{bad:?}");
        }
    }

    #[test]
    fn circle_examples() {
        assert_eq!(circle_of(TileCoord::Central), Ok(0));
        assert_eq!(circle_of(t("1:1")), Ok(1));
        assert_eq!(circle_of(t("3:9")), Ok(3));
        assert_eq!(circle_size(1), Ok(5));
        assert_eq!(circle_size(2), Ok(15));
        assert_eq!(circle_size(3), Ok(40));
        assert_eq!(circle_size(MAX_CIRCLE + 1), Err(GridError::CircleOutOfRange(MAX_CIRCLE + 1)));
    }

    #[test]
    fn succ_pred_examples() {
        assert_eq!(circle_succ(t("1:1")), Ok(t("2:1")));
        assert_eq!(circle_succ(t("1:4")), Ok(t("2:2")));
        assert_eq!(circle_pred(t("1:2")), Ok(t("5:4")));
        assert_eq!(circle_succ(TileCoord::Central), Err(GridError::CentralHasNoCircleOrder));
    }

    #[test]
    fn neighbor_examples() {
        assert_eq!(
            neighbors(TileCoord::Central).unwrap(),
            [t("1:1"), t("2:1"), t("3:1"), t("4:1"), t("5:1")]
        );
        assert_eq!(neighbors(t("1:3")).unwrap(), [t("1:1"), t("1:7"), t("1:8"), t("1:9"), t("1:10")]);
        assert_eq!(neighbors(t("1:2")).unwrap(), [t("1:1"), t("5:1"), t("1:5"), t("1:6"), t("1:7")]);
        assert_eq!(neighbors(t("1:1")).unwrap(), [TileCoord::Central, t("1:2"), t("1:3"), t("1:4"), t("2:2")]);
    }

    #[test]
    fn side_examples() {
        assert_eq!(side_between(t("1:1"), TileCoord::Central), Ok(1));
        assert_eq!(side_between(TileCoord::Central, t("3:1")), Ok(3));
        assert_eq!(side_between(t("1:7"), t("1:2")), Ok(2));
        assert_eq!(side_between(t("1:7"), t("1:9")), Err(GridError::NotAdjacent(t("1:7"), t("1:9"))));
    }

    #[test]
    fn symmetry_and_degree_on_d8() {
        for a in disc_tiles(8).unwrap() {
            let nbrs = neighbors(a).unwrap();
            let distinct: HashSet<_> = nbrs.iter().collect();
            assert_eq!(distinct.len(), 5, "{a}");
            for b in nbrs {
                let back = neighbors(b).unwrap();
                assert_eq!(back.iter().filter(|&&x| x == a).count(), 1, "{a} -> {b}");
            }
        }
    }

    #[test]
    fn circle_discipline() {
        for a in disc_tiles(7).unwrap().into_iter().skip(1) {
            let n = circle_of(a).unwrap();
            let (mut up, mut down) = (0, 0);
            for b in neighbors(a).unwrap() {
                match circle_of(b).unwrap() {
                    m if m + 1 == n => up += 1,
                    m if m == n + 1 => down += 1,
                    m => panic!("{a} on F_{n} touches {b} on F_{m}"),
                }
            }
            let expected = match kind_of_tile(a).unwrap() {
                Some(NodeKind::Black) => (2, 3),
                _ => (1, 4),
            };
            assert_eq!((up, down), expected, "{a}");
        }
    }

    #[test]
    fn bfs_distances_match_circles() {
        let mut dist = HashMap::from([(TileCoord::Central, 0u32)]);
        let mut queue = VecDeque::from([TileCoord::Central]);
        while let Some(a) = queue.pop_front() {
            let d = dist[&a];
            if d == 6 {
                continue;
            }
            for b in neighbors(a).unwrap() {
                dist.entry(b).or_insert_with(|| {
                    queue.push_back(b);
                    d + 1
                });
            }
        }
        for n in 0..=6 {
            let frontier: HashSet<_> = dist.iter().filter(|(_, &d)| d == n).map(|(&k, _)| k).collect();
            let circle: HashSet<_> = circle_tiles(n).unwrap().collect();
            assert_eq!(frontier.len() as u64, circle_size(n).unwrap());
            assert_eq!(frontier, circle);
        }
    }

    #[test]
    fn circle_closure() {
        for n in 1..=6 {
            let start = tile_at(n, 0).unwrap();
            let size = circle_size(n).unwrap();
            let mut seen = HashSet::new();
            let mut cur = start;
            for _ in 0..size {
                assert!(seen.insert(cur));
                assert_eq!(circle_pred(circle_succ(cur).unwrap()), Ok(cur));
                cur = circle_succ(cur).unwrap();
            }
            assert_eq!(cur, start);
            assert_eq!(seen.len() as u64, size);
        }
    }

    #[test]
    fn positions_round_trip() {
        for a in disc_tiles(6).unwrap() {
            let (c, p) = circle_position(a).unwrap();
            assert_eq!(tile_at(c, p), Ok(a));
        }
    }

    #[test]
    fn rotation_preserves_adjacency() {
        for a in disc_tiles(5).unwrap().into_iter().skip(1) {
            let rotated: Vec<_> = neighbors(a).unwrap().iter().map(|n| n.rotate(1)).collect();
            assert_eq!(neighbors(a.rotate(1)).unwrap().to_vec(), rotated);
        }
        assert_eq!(t("5:7").rotate(1), t("1:7"));
        assert_eq!(t("2:7").rotate(4), t("1:7"));
    }
}
