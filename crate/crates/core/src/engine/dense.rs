//! Array-backed simulation over a precomputed disc.
//!
//! Tiles of `D_R` are indexed circle by circle in circle order, so the index
//! set of `D_r` is a prefix of that of `D_R` for `r <= R`. The neighbour table
//! is built level by level from the substitution `B -> BW`, `W -> BWW`, without
//! going through per-tile navigation.

use std::sync::{Arc, Mutex, OnceLock};

use super::{CellState, Configuration, EngineError, RuleTable};
use crate::fib::NodeKind;
use crate::grid::{self, TileCoord};

/// Largest disc radius the dense simulator will allocate (about 5.4 million
/// tiles).
pub const MAX_DENSE_RADIUS: u32 = 15;

/// Side-indexed neighbour table of `D_radius`. Neighbours outside the disc
/// point at the slot `len()`, which callers keep in state W.
#[derive(Debug, Clone)]
pub struct DiscTopology {
    radius: u32,
    /// `offsets[n]` is the index of the first tile of circle `n`; one extra
    /// entry closes the last circle.
    offsets: Vec<u32>,
    nbrs: Vec<[u32; 5]>,
}

impl DiscTopology {
    pub fn build(radius: u32) -> Result<Self, EngineError> {
        if radius > MAX_DENSE_RADIUS {
            return Err(EngineError::RadiusTooLarge(radius));
        }
        let mut offsets = vec![0u32, 1];
        for n in 1..=radius {
            let last = *offsets.last().expect("nonempty");
            offsets.push(last + grid::circle_size(n)? as u32);
        }
        let total = *offsets.last().expect("nonempty");
        let outside = total;
        let mut nbrs = Vec::with_capacity(total as usize);
        nbrs.push([1, 2, 3, 4, 5].map(|i| if radius >= 1 { i } else { outside }));

        // Per-sector kinds of the current level, and each node's father offset.
        let mut kinds = vec![NodeKind::White];
        let mut fathers = vec![0u32];
        let mut prev_span = 0u32;
        for n in 1..=radius {
            let span = kinds.len() as u32;
            let mut son_start = Vec::with_capacity(kinds.len() + 1);
            let mut acc = 0u32;
            for k in &kinds {
                son_start.push(acc);
                acc += k.degree() as u32;
            }
            let next_span = acc;
            let inner = |s: u32, i: u32| offsets[n as usize - 1] + s * prev_span + i;
            let outer = |s: u32, i: u32| {
                if n < radius {
                    offsets[n as usize + 1] + s * next_span + i
                } else {
                    outside
                }
            };
            let inner_size = 5 * prev_span;
            for s in 0..5u32 {
                for (i, &kind) in kinds.iter().enumerate() {
                    let i = i as u32;
                    let father = if n == 1 { 0 } else { inner(s, fathers[i as usize]) };
                    let sons = |j: u32| outer(s, son_start[i as usize] + j);
                    let (ss, si) = if i + 1 < span { (s, i + 1) } else { ((s + 1) % 5, 0) };
                    let last = outer(ss, son_start[si as usize]);
                    nbrs.push(match kind {
                        NodeKind::White => [father, sons(0), sons(1), sons(2), last],
                        NodeKind::Black => {
                            let pos = s * prev_span + fathers[i as usize];
                            let pred = offsets[n as usize - 1] + (pos + inner_size - 1) % inner_size;
                            [father, pred, sons(0), sons(1), last]
                        }
                    });
                }
            }
            let mut next_kinds = Vec::with_capacity(next_span as usize);
            let mut next_fathers = Vec::with_capacity(next_span as usize);
            for (i, k) in kinds.iter().enumerate() {
                for &son in k.expansion() {
                    next_kinds.push(son);
                    next_fathers.push(i as u32);
                }
            }
            kinds = next_kinds;
            fathers = next_fathers;
            prev_span = span;
        }
        debug_assert_eq!(nbrs.len(), total as usize);
        Ok(DiscTopology { radius, offsets, nbrs })
    }

    /// A topology covering at least `D_radius`, shared process-wide.
    pub fn shared(radius: u32) -> Result<Arc<Self>, EngineError> {
        static CACHE: OnceLock<Mutex<Option<Arc<DiscTopology>>>> = OnceLock::new();
        let mut slot = CACHE.get_or_init(|| Mutex::new(None)).lock().unwrap_or_else(|e| e.into_inner());
        if let Some(t) = slot.as_ref().filter(|t| t.radius >= radius) {
            return Ok(Arc::clone(t));
        }
        let built = Arc::new(Self::build(radius)?);
        *slot = Some(Arc::clone(&built));
        Ok(built)
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    /// Number of tiles in the disc.
    pub fn len(&self) -> usize {
        self.nbrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nbrs.is_empty()
    }

    /// Number of tiles in `D_n`, for `n <= radius`.
    pub fn disc_len(&self, n: u32) -> usize {
        self.offsets[n as usize + 1] as usize
    }

    /// Indices of the tiles of circle `n`, in circle order.
    pub fn circle_range(&self, n: u32) -> std::ops::Range<usize> {
        self.offsets[n as usize] as usize..self.offsets[n as usize + 1] as usize
    }

    pub fn neighbors(&self, index: usize) -> [u32; 5] {
        self.nbrs[index]
    }

    pub fn index_of(&self, t: TileCoord) -> Result<Option<usize>, EngineError> {
        let (circle, pos) = grid::circle_position(t)?;
        Ok((circle <= self.radius).then(|| self.offsets[circle as usize] as usize + pos as usize))
    }

    pub fn tile_at(&self, index: usize) -> Result<TileCoord, EngineError> {
        let circle = self.offsets.partition_point(|&o| o as usize <= index) - 1;
        Ok(grid::tile_at(circle as u32, (index - self.offsets[circle] as usize) as u64)?)
    }

    /// Circle holding `index`.
    pub fn circle_of_index(&self, index: usize) -> u32 {
        (self.offsets.partition_point(|&o| o as usize <= index) - 1) as u32
    }
}

/// Dense trajectory runner. Each step evaluates every tile of `D_{e+1}`, where
/// `e` is the outermost circle currently holding a B cell.
#[derive(Debug, Clone)]
pub struct Simulator {
    table: RuleTable,
    topo: Arc<DiscTopology>,
    cells: Vec<u8>,
    next: Vec<u8>,
    extent: Option<u32>,
    front: u32,
    time: u64,
}

impl Simulator {
    pub fn new(table: RuleTable, init: &Configuration) -> Result<Self, EngineError> {
        let border = init.border()?;
        let topo = DiscTopology::shared(border + 1)?;
        let mut sim = Simulator {
            table,
            cells: vec![0; topo.len() + 1],
            next: vec![0; topo.len() + 1],
            topo,
            extent: None,
            front: border,
            time: init.time,
        };
        for &t in &init.cells {
            let i = sim.topo.index_of(t)?.expect("topology covers the border");
            sim.cells[i] = 1;
        }
        sim.extent = (!init.is_empty()).then_some(border);
        Ok(sim)
    }

    /// Makes the simulator's disc cover at least `D_radius`.
    pub fn reserve(&mut self, radius: u32) -> Result<(), EngineError> {
        if self.topo.radius() < radius {
            self.topo = DiscTopology::shared(radius)?;
            // The old outside slot becomes an ordinary tile, still W.
            self.cells.resize(self.topo.len() + 1, 0);
            self.next.resize(self.topo.len() + 1, 0);
        }
        Ok(())
    }

    pub fn step(&mut self) -> Result<(), EngineError> {
        self.time += 1;
        let Some(extent) = self.extent else { return Ok(()) };
        let reach = extent + 1;
        self.reserve(reach)?;
        let end = self.topo.disc_len(reach);
        let outside = self.topo.len();
        debug_assert_eq!(self.cells[outside], 0);
        let cells = &self.cells;
        for (i, slot) in self.next[..end].iter_mut().enumerate() {
            let n = self.topo.nbrs[i];
            let ctx = (cells[i] as usize) << 5
                | (cells[n[0] as usize] as usize) << 4
                | (cells[n[1] as usize] as usize) << 3
                | (cells[n[2] as usize] as usize) << 2
                | (cells[n[3] as usize] as usize) << 1
                | cells[n[4] as usize] as usize;
            *slot = (self.table.by_index(ctx) == CellState::B) as u8;
        }
        std::mem::swap(&mut self.cells, &mut self.next);
        self.next[..end].fill(0);
        self.extent = (0..=reach).rev().find(|&c| self.cells[self.topo.circle_range(c)].contains(&1));
        if let Some(e) = self.extent {
            self.front = self.front.max(e);
        }
        Ok(())
    }

    /// Overwrites one cell, outside the rule. Meant for fault-injection tests.
    pub fn set_state(&mut self, t: TileCoord, s: CellState) -> Result<(), EngineError> {
        self.reserve(grid::circle_of(t)? + 1)?;
        let i = self.topo.index_of(t)?.expect("radius ensured");
        self.cells[i] = (s == CellState::B) as u8;
        let top = self.extent.unwrap_or(0).max(grid::circle_of(t)?);
        self.extent = (0..=top).rev().find(|&c| self.cells[self.topo.circle_range(c)].contains(&1));
        if let Some(e) = self.extent {
            self.front = self.front.max(e);
        }
        Ok(())
    }

    /// Cell states by tile index (1 for B), covering at least `D_{front+1}`.
    pub fn cells(&self) -> &[u8] {
        &self.cells[..self.topo.len()]
    }

    pub fn time(&self) -> u64 {
        self.time
    }

    /// The front index `N_t`.
    pub fn front(&self) -> u32 {
        self.front
    }

    /// Outermost circle holding a B cell, if any.
    pub fn extent(&self) -> Option<u32> {
        self.extent
    }

    /// Indices of B cells, ascending. Equal lists mean equal configurations.
    pub fn black_indices(&self) -> Vec<u32> {
        match self.extent {
            None => Vec::new(),
            Some(e) => {
                let end = self.topo.disc_len(e);
                (0..end as u32).filter(|&i| self.cells[i as usize] == 1).collect()
            }
        }
    }

    pub fn count_black(&self) -> usize {
        self.extent.map_or(0, |e| self.cells[..self.topo.disc_len(e)].iter().filter(|&&c| c == 1).count())
    }

    pub fn state(&self, t: TileCoord) -> Result<CellState, EngineError> {
        Ok(match self.topo.index_of(t)? {
            Some(i) if self.cells[i] == 1 => CellState::B,
            _ => CellState::W,
        })
    }

    pub fn configuration(&self) -> Result<Configuration, EngineError> {
        let cells = self.black_indices().into_iter().map(|i| self.topo.tile_at(i as usize)).collect::<Result<_, _>>()?;
        Ok(Configuration { cells, time: self.time })
    }

    pub fn topology(&self) -> &DiscTopology {
        &self.topo
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{step, Context};
    use proptest::prelude::*;
    use CellState::{B, W};

    #[test]
    fn topology_matches_grid_navigation() {
        let topo = DiscTopology::build(8).unwrap();
        let tiles = grid::disc_tiles(8).unwrap();
        assert_eq!(topo.len(), tiles.len());
        for (i, &t) in tiles.iter().enumerate() {
            assert_eq!(topo.index_of(t).unwrap(), Some(i));
            assert_eq!(topo.tile_at(i).unwrap(), t);
            let expected = grid::neighbors(t).unwrap();
            for (side, &n) in topo.neighbors(i).iter().enumerate() {
                if grid::circle_of(expected[side]).unwrap() <= 8 {
                    assert_eq!(topo.tile_at(n as usize).unwrap(), expected[side], "{t} side {}", side + 1);
                } else {
                    assert_eq!(n as usize, topo.len());
                }
            }
        }
    }

    #[test]
    fn discs_are_prefixes() {
        let small = DiscTopology::build(4).unwrap();
        let big = DiscTopology::build(6).unwrap();
        for i in 0..small.len() {
            for (a, b) in small.neighbors(i).iter().zip(big.neighbors(i)) {
                if (*a as usize) < small.len() {
                    assert_eq!(*a, b);
                }
            }
        }
        assert_eq!(big.disc_len(4), small.len());
    }

    #[test]
    fn radius_limit() {
        assert_eq!(DiscTopology::build(MAX_DENSE_RADIUS + 1).unwrap_err(), EngineError::RadiusTooLarge(MAX_DENSE_RADIUS + 1));
    }

    #[test]
    fn grows_past_initial_radius() {
        let bw = RuleTable::from_fn(|c| if c.me == B || c == Context::new(W, [B, W, W, W, W]) { B } else { W });
        let mut sim = Simulator::new(bw, &Configuration::from_cells([TileCoord::Central])).unwrap();
        for t in 1..=6 {
            sim.step().unwrap();
            assert_eq!(sim.front(), t);
        }
    }

    fn arb_case() -> impl Strategy<Value = (RuleTable, Configuration)> {
        let tiles = grid::disc_tiles(3).unwrap();
        (proptest::collection::vec(any::<bool>(), 64), proptest::sample::subsequence(tiles, 0..=12)).prop_map(|(bits, cells)| {
            let mut t = RuleTable::from_fn(|c| if bits[c.index()] { B } else { W });
            t.set(Context::quiescent(), W);
            (t, Configuration::from_cells(cells))
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn dense_agrees_with_sparse((table, init) in arb_case()) {
            let mut sim = Simulator::new(table, &init).unwrap();
            let mut cur = init;
            for _ in 0..3 {
                cur = step(&table, &cur).unwrap();
                sim.step().unwrap();
                prop_assert_eq!(sim.configuration().unwrap(), cur.clone());
            }
        }
    }
}
