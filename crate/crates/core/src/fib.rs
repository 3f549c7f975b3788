//! Fibonacci numeration and the per-sector Fibonacci tree.
//!
//! Every sector of the pentagrid is spanned by a tree generated from a white
//! root by the rules `B -> BW` and `W -> BWW`. Nodes are numbered from 1
//! level by level, left to right. The sequence used throughout is
//! `f_0 = f_1 = 1`, `f_{k+1} = f_k + f_{k-1}`, so level `n` of a white-rooted
//! tree holds `f_{2n+1}` nodes and starts at node number `f_{2n}`.
//!
//! All navigation is arithmetic: kinds and son ranges are found by descending
//! through the substitution instead of materializing levels.

use std::fmt;

use thiserror::Error;

/// Largest index `k` for which `f_k` fits in a `u64`.
pub const MAX_FIB_INDEX: usize = 92;

/// Deepest supported tree level. Node numbers on this level reach `f_90 - 1`,
/// and positions on the matching Fibonacci circle still fit in a `u64`.
pub const MAX_LEVEL: u32 = 44;

const FIB: [u64; MAX_FIB_INDEX + 1] = {
    let mut t = [1u64; MAX_FIB_INDEX + 1];
    let mut k = 2;
    while k <= MAX_FIB_INDEX {
        t[k] = t[k - 1] + t[k - 2];
        k += 1;
    }
    t
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FibError {
    #[error("Fibonacci index {0} exceeds the supported maximum {MAX_FIB_INDEX}")]
    IndexOutOfRange(usize),
    #[error("node number {0} is outside the supported range 1..={max}", max = last_node())]
    NodeOutOfRange(u64),
    #[error("sons of node {0} lie beyond the supported level {MAX_LEVEL}")]
    SonsOutOfRange(u64),
}

/// `f_k` with `f_0 = f_1 = 1`.
pub fn fib(k: usize) -> Result<u64, FibError> {
    FIB.get(k).copied().ok_or(FibError::IndexOutOfRange(k))
}

/// Table lookup for indices the caller has already bounded.
#[inline]
pub(crate) fn f(k: usize) -> u64 {
    FIB[k]
}

/// Kind of a node in the Fibonacci tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NodeKind {
    /// Two sons: black, white.
    Black,
    /// Three sons: black, white, white.
    White,
}

impl NodeKind {
    /// Number of sons.
    pub fn degree(self) -> u64 {
        match self {
            NodeKind::Black => 2,
            NodeKind::White => 3,
        }
    }

    /// Kinds of the sons, left to right.
    pub fn expansion(self) -> &'static [NodeKind] {
        match self {
            NodeKind::Black => &[NodeKind::Black, NodeKind::White],
            NodeKind::White => &[NodeKind::Black, NodeKind::White, NodeKind::White],
        }
    }

    /// Length of the level word `depth` levels below a node of this kind.
    fn level_len(self, depth: u32) -> u64 {
        match self {
            NodeKind::Black => f(2 * depth as usize),
            NodeKind::White => f(2 * depth as usize + 1),
        }
    }

    /// Number of black letters in that level word.
    fn level_blacks(self, depth: u32) -> u64 {
        match (self, depth) {
            (NodeKind::Black, 0) => 1,
            (NodeKind::White, 0) => 0,
            (NodeKind::Black, d) => f(2 * d as usize - 2),
            (NodeKind::White, d) => f(2 * d as usize - 1),
        }
    }
}

/// Where a node sits inside its tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NodePlace {
    pub level: u32,
    /// 0-based position within the level.
    pub offset: u64,
    pub kind: NodeKind,
    /// Black nodes strictly left of this one on the same level.
    pub blacks_before: u64,
}

/// Number of the first node on `level`.
pub fn level_first(level: u32) -> u64 {
    f(2 * level as usize)
}

/// Number of nodes on `level` of a white-rooted tree.
pub fn level_len(level: u32) -> u64 {
    f(2 * level as usize + 1)
}

/// Largest supported node number.
pub fn last_node() -> u64 {
    level_first(MAX_LEVEL + 1) - 1
}

fn check_node(node: u64) -> Result<(), FibError> {
    if node == 0 || node > last_node() {
        Err(FibError::NodeOutOfRange(node))
    } else {
        Ok(())
    }
}

/// Level of node `node` (root at level 0).
pub fn level_of(node: u64) -> Result<u32, FibError> {
    check_node(node)?;
    // first(n) = f_{2n}; find the last level whose first node is <= node.
    let level = (0..=MAX_LEVEL)
        .rev()
        .find(|&n| level_first(n) <= node)
        .expect("node >= 1 = level_first(0)");
    Ok(level)
}

/// Kind and black prefix count at `offset` of the level word `level`.
pub(crate) fn descend(level: u32, offset: u64) -> (NodeKind, u64) {
    let mut letter = NodeKind::White;
    let mut rest = offset;
    let mut blacks = 0;
    for depth in (0..level).rev() {
        let mut next = None;
        for &child in letter.expansion() {
            let len = child.level_len(depth);
            if rest < len {
                next = Some(child);
                break;
            }
            rest -= len;
            blacks += child.level_blacks(depth);
        }
        letter = next.expect("offset within level");
    }
    debug_assert_eq!(rest, 0);
    (letter, blacks)
}

/// Full placement of a node.
pub fn place(node: u64) -> Result<NodePlace, FibError> {
    let level = level_of(node)?;
    let offset = node - level_first(level);
    let (kind, blacks_before) = descend(level, offset);
    Ok(NodePlace { level, offset, kind, blacks_before })
}

/// Kind of node `node`.
pub fn kind_of(node: u64) -> Result<NodeKind, FibError> {
    Ok(place(node)?.kind)
}

/// Node number of the first son of the node at `place`.
fn first_son(node: u64, place: &NodePlace) -> Result<u64, FibError> {
    if place.level >= MAX_LEVEL {
        return Err(FibError::SonsOutOfRange(node));
    }
    // Each node before this one contributes 3 sons, minus one per black node.
    Ok(level_first(place.level + 1) + 3 * place.offset - place.blacks_before)
}

/// Sons of `node` in left-to-right order; the first is always the black son.
pub fn sons(node: u64) -> Result<Vec<u64>, FibError> {
    let p = place(node)?;
    let start = first_son(node, &p)?;
    Ok((start..start + p.kind.degree()).collect())
}

/// Father of `node`, or `None` for the root (whose father is the central tile).
pub fn father(node: u64) -> Result<Option<u64>, FibError> {
    let level = level_of(node)?;
    if level == 0 {
        return Ok(None);
    }
    let target = node - level_first(level);
    let up = level - 1;
    // Largest father offset whose son range starts at or before `target`.
    let son_start = |j: u64| 3 * j - descend(up, j).1;
    let (mut lo, mut hi) = (0u64, level_len(up) - 1);
    while lo < hi {
        let mid = lo + (hi - lo).div_ceil(2);
        if son_start(mid) <= target {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    Ok(Some(level_first(up) + lo))
}

/// The black son of a black node, the middle son of a white one.
pub fn preferred_son(node: u64) -> Result<u64, FibError> {
    let p = place(node)?;
    let start = first_son(node, &p)?;
    Ok(match p.kind {
        NodeKind::Black => start,
        NodeKind::White => start + 1,
    })
}

/// A Fibonacci numeral: digits over `f_1, f_2, ...`, most significant first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FibWord(String);

impl FibWord {
    /// Wraps a digit string, checking it is a valid normalized numeral.
    pub fn parse(digits: &str) -> Option<FibWord> {
        let ok = !digits.is_empty()
            && digits.len() <= MAX_FIB_INDEX
            && digits.starts_with('1')
            && digits.bytes().all(|b| b == b'0' || b == b'1')
            && !digits.contains("11");
        ok.then(|| FibWord(digits.to_owned()))
    }

    pub fn digits(&self) -> &str {
        &self.0
    }

    /// Sum of `digit * f_position`, positions counted from 1 at the right.
    pub fn value(&self) -> u64 {
        self.0
            .bytes()
            .rev()
            .enumerate()
            .filter(|&(_, b)| b == b'1')
            .map(|(i, _)| f(i + 1))
            .sum()
    }
}

impl fmt::Display for FibWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Greedy (Zeckendorf) representation of `n >= 1`.
pub fn fib_rep(n: u64) -> Option<FibWord> {
    if n == 0 {
        return None;
    }
    let top = (1..=MAX_FIB_INDEX).rev().find(|&k| f(k) <= n)?;
    let mut rest = n;
    let mut digits = String::with_capacity(top);
    for k in (1..=top).rev() {
        if f(k) <= rest {
            rest -= f(k);
            digits.push('1');
        } else {
            digits.push('0');
        }
    }
    debug_assert_eq!(rest, 0);
    Some(FibWord(digits))
}


#[cfg(test)]
mod tests {
    use super::oracle::ExpandedTree;
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fib_values() {
        assert_eq!(fib(0), Ok(1));
        assert_eq!(fib(1), Ok(1));
        assert_eq!(fib(7), Ok(21));
        assert_eq!(fib(92), Ok(12_200_160_415_121_876_738));
        assert_eq!(fib(93), Err(FibError::IndexOutOfRange(93)));
        assert!((2..=MAX_FIB_INDEX).all(|k| FIB[k] > FIB[k - 1]));
    }

    #[test]
    fn range_covers_f41() {
        assert!(last_node() >= fib(41).unwrap());
        assert!(level_of(last_node()).is_ok());
        assert_eq!(level_of(last_node() + 1), Err(FibError::NodeOutOfRange(last_node() + 1)));
        assert_eq!(level_of(0), Err(FibError::NodeOutOfRange(0)));
        assert_eq!(sons(last_node()), Err(FibError::SonsOutOfRange(last_node())));
    }

    #[test]
    fn level_examples() {
        assert_eq!(level_of(1), Ok(0));
        assert_eq!(level_of(4), Ok(1));
        assert_eq!(level_of(13), Ok(3));
    }

    #[test]
    fn kind_examples() {
        assert_eq!(kind_of(1), Ok(NodeKind::White));
        assert_eq!(kind_of(2), Ok(NodeKind::Black));
        assert_eq!(kind_of(8), Ok(NodeKind::White));
    }

    #[test]
    fn sons_and_father_examples() {
        assert_eq!(sons(1).unwrap(), vec![2, 3, 4]);
        assert_eq!(sons(2).unwrap(), vec![5, 6]);
        assert_eq!(sons(3).unwrap(), vec![7, 8, 9]);
        assert_eq!(father(1), Ok(None));
        assert_eq!(father(8), Ok(Some(3)));
        assert_eq!(father(13), Ok(Some(5)));
    }

    #[test]
    fn fib_rep_examples() {
        assert_eq!(fib_rep(1).unwrap().digits(), "1");
        assert_eq!(fib_rep(3).unwrap().digits(), "100");
        assert_eq!(fib_rep(8).unwrap().digits(), "10000");
        assert_eq!(fib_rep(0), None);
    }

    #[test]
    fn preferred_son_examples() {
        assert_eq!(preferred_son(1), Ok(3));
        assert_eq!(preferred_son(2), Ok(5));
        assert_eq!(preferred_son(3), Ok(8));
        assert_eq!(fib_rep(2).unwrap().digits(), "10");
        assert_eq!(fib_rep(5).unwrap().digits(), "1000");
    }

    #[test]
    fn level_sizes_match_expansion() {
        let tree = ExpandedTree::new(12);
        for (n, level) in tree.levels.iter().enumerate() {
            assert_eq!(level.len() as u64, fib(2 * n + 1).unwrap(), "level {n}");
            assert_eq!(level_len(n as u32), level.len() as u64);
        }
    }

    #[test]
    fn black_rooted_levels_have_f_2n_nodes() {
        let mut level = vec![NodeKind::Black];
        for n in 0..12 {
            assert_eq!(level.len() as u64, fib(2 * n).unwrap());
            level = level.iter().flat_map(|k| k.expansion().iter().copied()).collect();
        }
    }

    #[test]
    fn arithmetic_matches_expansion() {
        let tree = ExpandedTree::new(9);
        for (n, level) in tree.levels.iter().enumerate() {
            for (i, &kind) in level.iter().enumerate() {
                let node = tree.number(n, i);
                assert_eq!(tree.locate(node), (n, i));
                let p = place(node).unwrap();
                assert_eq!((p.level as usize, p.offset as usize, p.kind), (n, i, kind));
                let blacks = level[..i].iter().filter(|&&k| k == NodeKind::Black).count();
                assert_eq!(p.blacks_before as usize, blacks);
                if n > 0 {
                    let dad = tree.number(n - 1, tree.fathers[n][i]);
                    assert_eq!(father(node), Ok(Some(dad)), "father of {node}");
                }
            }
        }
    }

    #[test]
    fn father_of_sons_is_identity() {
        for node in 1..=10_000u64 {
            let level = level_of(node).unwrap();
            for s in sons(node).unwrap() {
                assert_eq!(father(s), Ok(Some(node)));
                assert_eq!(level_of(s), Ok(level + 1));
            }
        }
    }

    #[test]
    fn sons_enumerate_next_level_once() {
        for level in 0..8u32 {
            let first = level_first(level);
            let all: Vec<u64> = (first..first + level_len(level))
                .flat_map(|n| sons(n).unwrap())
                .collect();
            let next = level_first(level + 1);
            assert_eq!(all, (next..next + level_len(level + 1)).collect::<Vec<_>>());
        }
    }

    #[test]
    fn preferred_son_appends_00() {
        for node in 1..=10_000u64 {
            let son = preferred_son(node).unwrap();
            let expected = format!("{}00", fib_rep(node).unwrap());
            assert_eq!(fib_rep(son).unwrap().digits(), expected, "node {node}");
        }
    }

    #[test]
    fn fib_rep_round_trip() {
        for n in 1..=100_000u64 {
            let w = fib_rep(n).unwrap();
            assert_eq!(w.value(), n);
            assert!(!w.digits().contains("11"));
            assert_eq!(FibWord::parse(w.digits()).as_ref(), Some(&w));
        }
    }

    proptest! {
        #[test]
        fn deep_nodes_navigate(node in 1u64..fib(80).unwrap()) {
            let p = place(node).unwrap();
            let s = sons(node).unwrap();
            prop_assert_eq!(s.len() as u64, p.kind.degree());
            for son in s {
                prop_assert_eq!(father(son).unwrap(), Some(node));
            }
            let w = fib_rep(node).unwrap();
            prop_assert_eq!(w.value(), node);
            let pref = preferred_son(node).unwrap();
            let pref_rep = fib_rep(pref).unwrap();
            prop_assert_eq!(pref_rep.digits(), format!("{}00", w));
        }
    }
}
