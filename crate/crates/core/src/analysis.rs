//! Front behaviour when the front keeps advancing: circular pattern scans,
//! the white-son and forbidden-pattern checks, lines of `BW` patterns,
//! hereditary white nodes, and single-seed censuses.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decider::{classify, RuleClass};
use crate::engine::{CellState, Configuration, EngineError, FrontWord, RuleTable, Simulator};
use crate::fib::{self, FibError, NodeKind};
use crate::grid::{self, GridError, TileCoord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Grid(#[from] GridError),
    #[error(transparent)]
    Fib(#[from] FibError),
    #[error("the rules have {found}, this analysis needs {needed}")]
    Precondition { found: RuleClass, needed: &'static str },
    #[error("{0} is not a white node on circle 2 or beyond")]
    BadStart(TileCoord),
}

/// Circular occurrences of a pattern in a front word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatternReport {
    pub time: u64,
    pub circle: u32,
    pub pattern: String,
    pub positions: Vec<u64>,
}

fn pattern_text(pattern: &[CellState]) -> String {
    pattern.iter().map(|s| s.as_char()).collect()
}

/// All start positions where `pattern` reads circularly in `word`.
///
/// Patterns holding a B are anchored on the word's B positions, so the cost
/// follows the number of B cells rather than the circle length.
pub fn scan(word: &FrontWord, pattern: &[CellState]) -> PatternReport {
    let len = word.len();
    let matches = |start: u64| pattern.iter().enumerate().all(|(j, &s)| word.get(start + j as u64) == s);
    let positions: Vec<u64> = if pattern.is_empty() || pattern.len() as u64 > len {
        Vec::new()
    } else if let Some(first_b) = pattern.iter().position(|&s| s == CellState::B) {
        let starts: BTreeSet<u64> =
            word.black_positions().iter().map(|&b| (b + len - first_b as u64 % len) % len).collect();
        starts.into_iter().filter(|&s| matches(s)).collect()
    } else {
        (0..len).filter(|&s| matches(s)).collect()
    };
    PatternReport { time: 0, circle: word.circle(), pattern: pattern_text(pattern), positions }
}

/// Parses a pattern such as `WBW`.
pub fn parse_pattern(text: &str) -> Option<Vec<CellState>> {
    text.chars().map(CellState::from_char).collect()
}

fn require(table: &RuleTable, ok: impl Fn(RuleClass) -> bool, needed: &'static str) -> Result<(), AnalysisError> {
    let found = classify(table);
    if ok(found) {
        Ok(())
    } else {
        Err(AnalysisError::Precondition { found, needed })
    }
}

/// A white node on the front whose white son did not copy its state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WhiteSonViolation {
    pub time: u64,
    pub node: TileCoord,
    pub son: TileCoord,
    pub expected: CellState,
    pub found: CellState,
}

impl fmt::Display for WhiteSonViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "t={} node={} son={} expected={} found={}", self.time, self.node, self.son, self.expected, self.found)
    }
}

/// With `bw = B`: for every white node `ν` on the front at time `t`, both white
/// sons of `ν` hold at `t + 1` the state `ν` held at `t`. Returns every
/// exception for `t < horizon`.
pub fn check_lemma_whites(table: &RuleTable, init: &Configuration, horizon: u64) -> Result<Vec<WhiteSonViolation>, AnalysisError> {
    check_lemma_whites_with(table, init, horizon, |_| Ok(()))
}

/// As [`check_lemma_whites`], running `tamper` on the simulator after every
/// step.
pub fn check_lemma_whites_with(
    table: &RuleTable,
    init: &Configuration,
    horizon: u64,
    mut tamper: impl FnMut(&mut Simulator) -> Result<(), EngineError>,
) -> Result<Vec<WhiteSonViolation>, AnalysisError> {
    require(table, |c| c.bw == CellState::B, "bw = B")?;
    let mut sim = Simulator::new(*table, init)?;
    let mut out = Vec::new();
    for t in 0..horizon {
        let n = sim.front();
        sim.reserve(n + 1)?;
        // (node index, white son indices) for every white node on the front.
        let watch: Vec<(usize, [usize; 2])> = {
            let topo = sim.topology();
            if n == 0 {
                (1..=5).map(|root| (0, [root, root])).collect()
            } else {
                topo.circle_range(n)
                    .filter_map(|i| {
                        let nb = topo.neighbors(i);
                        // A black node's side 2 points back inward.
                        let white = nb[1] as usize >= topo.circle_range(n).end;
                        white.then(|| (i, [nb[2] as usize, nb[3] as usize]))
                    })
                    .collect()
            }
        };
        let before: Vec<u8> = watch.iter().map(|&(i, _)| sim.cells()[i]).collect();
        sim.step()?;
        tamper(&mut sim)?;
        for (&(i, sons), &was) in watch.iter().zip(&before) {
            for son in sons {
                let now = sim.cells()[son];
                if now != was {
                    let topo = sim.topology();
                    let state = |b: u8| if b == 1 { CellState::B } else { CellState::W };
                    out.push(WhiteSonViolation {
                        time: t,
                        node: topo.tile_at(i)?,
                        son: topo.tile_at(son)?,
                        expected: state(was),
                        found: state(now),
                    });
                }
            }
        }
    }
    out.dedup();
    Ok(out)
}

fn front_word_of(sim: &Simulator) -> FrontWord {
    let n = sim.front();
    let range = sim.topology().circle_range(n);
    let states: Vec<CellState> =
        sim.cells()[range].iter().map(|&b| if b == 1 { CellState::B } else { CellState::W }).collect();
    let mut word = FrontWord::from_states(&states);
    word.set_circle(n);
    word
}

/// With `(bw, wb, bb) = (B, B, W)`: the front never reads `WBW` or `BBBB` for
/// `3 <= t <= horizon`. Returns every occurrence found.
pub fn check_lemma_nofour(table: &RuleTable, init: &Configuration, horizon: u64) -> Result<Vec<PatternReport>, AnalysisError> {
    use CellState::{B, W};
    require(table, |c| c == RuleClass::new(B, B, W), "(bw, wb, bb) = (B, B, W)")?;
    let mut sim = Simulator::new(*table, init)?;
    let mut out = Vec::new();
    for t in 0..=horizon {
        if t >= 3 && sim.front() > 0 {
            let word = front_word_of(&sim);
            for pattern in [[W, B, W].as_slice(), &[B, B, B, B]] {
                let report = scan(&word, pattern);
                if !report.positions.is_empty() {
                    out.push(PatternReport { time: t, ..report });
                }
            }
        }
        if t < horizon {
            sim.step()?;
        }
    }
    Ok(out)
}

/// One point of a line of `BW` patterns: the B cell's circle position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinePoint {
    pub time: u64,
    pub circle: u32,
    pub position: u64,
}

/// A chain of isolated-B `BW` patterns, each B the black son of the previous
/// pattern's W cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BwLine {
    pub points: Vec<LinePoint>,
    /// Every point was an isolated B followed by W on its front.
    pub intact: bool,
}

impl BwLine {
    /// Number of generations followed.
    pub fn steps(&self) -> usize {
        self.points.len().saturating_sub(1)
    }
}

fn isolated_bw(word: &FrontWord, pos: u64) -> bool {
    let len = word.len();
    word.get(pos) == CellState::B && word.get(pos + 1) == CellState::W && word.get(pos + len - 1) == CellState::W
}

/// With `(bw, wb) = (W, B)`: starting from the first front (up to `horizon`)
/// that shows isolated-B `BW` patterns, follows each pattern's line up to time
/// `horizon`. Empty if no such pattern appears in time.
pub fn trace_bw_lines(table: &RuleTable, init: &Configuration, horizon: u64) -> Result<Vec<BwLine>, AnalysisError> {
    use CellState::{B, W};
    require(table, |c| c.bw == W && c.wb == B, "(bw, wb) = (W, B)")?;
    let mut sim = Simulator::new(*table, init)?;
    let mut lines: Vec<BwLine> = Vec::new();
    for t in 0..=horizon {
        let n = sim.front();
        if n > 0 {
            let word = front_word_of(&sim);
            if lines.is_empty() {
                lines = word
                    .black_positions()
                    .iter()
                    .filter(|&&p| isolated_bw(&word, p))
                    .map(|&position| BwLine { points: vec![LinePoint { time: t, circle: n, position }], intact: true })
                    .collect();
            } else {
                for line in lines.iter_mut().filter(|l| l.intact) {
                    let last = *line.points.last().expect("lines start with a point");
                    let w_cell = grid::tile_at(last.circle, (last.position + 1) % grid::circle_size(last.circle)?)?;
                    let sigma = first_son(w_cell)?;
                    let (circle, position) = grid::circle_position(sigma)?;
                    line.points.push(LinePoint { time: t, circle, position });
                    line.intact = circle == n && isolated_bw(&word, position);
                }
            }
        }
        if t < horizon {
            sim.step()?;
        }
    }
    Ok(lines)
}

fn first_son(t: TileCoord) -> Result<TileCoord, AnalysisError> {
    match t {
        TileCoord::Central => Ok(TileCoord::root(1)),
        TileCoord::Node { sector, node } => Ok(TileCoord::Node { sector, node: fib::sons(node)?[0] }),
    }
}

/// How a B cell got its state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Birth {
    /// B in the initial configuration.
    Initial,
    /// Turned B in the context `W BWWWW`.
    Bw,
    /// Turned B in the context `W WBWWW`.
    Wb,
    /// Turned B in the context `W BBWWW`.
    Bb,
    /// Turned B in any other context.
    Other,
}

/// One time step of a [`trace_births`] run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BirthFrame {
    pub time: u64,
    /// Index of the front: the outermost circle reached so far.
    pub front: u32,
    /// Every B cell with the context of its latest W to B change.
    pub births: BTreeMap<TileCoord, Birth>,
}

/// Runs `steps` steps and records which context made each B cell.
pub fn trace_births(table: &RuleTable, init: &Configuration, steps: u64) -> Result<Vec<BirthFrame>, AnalysisError> {
    let [bw, wb, bb] = RuleClass::contexts();
    let mut config = Configuration { time: 0, ..init.clone() };
    let mut births: BTreeMap<TileCoord, Birth> = config.cells.iter().map(|&t| (t, Birth::Initial)).collect();
    let mut front = config.border()?;
    let mut frames = vec![BirthFrame { time: 0, front, births: births.clone() }];
    for time in 1..=steps {
        let next = crate::engine::step(table, &config)?;
        let mut fresh = BTreeMap::new();
        for &t in &next.cells {
            let birth = match births.get(&t) {
                Some(&b) if config.contains(t) => b,
                _ => match config.context(t)? {
                    c if c == bw => Birth::Bw,
                    c if c == wb => Birth::Wb,
                    c if c == bb => Birth::Bb,
                    _ => Birth::Other,
                },
            };
            fresh.insert(t, birth);
        }
        births = fresh;
        config = next;
        if !config.is_empty() {
            front = front.max(config.border()?);
        }
        frames.push(BirthFrame { time, front, births: births.clone() });
    }
    Ok(frames)
}

/// Whether `node` is reached from the root through white sons of white nodes
/// only. The root itself is.
pub fn hereditary_white(node: u64) -> Result<bool, FibError> {
    let mut cur = node;
    loop {
        if cur == 1 {
            return Ok(true);
        }
        if fib::kind_of(cur)? != NodeKind::White {
            return Ok(false);
        }
        cur = fib::father(cur)?.expect("only the root has no father");
        if fib::kind_of(cur)? != NodeKind::White {
            return Ok(false);
        }
    }
}

/// Descendants of `start` at depth `k` reached through white sons only.
pub fn hereditary_white_descendants(start: TileCoord, k: u32) -> Result<BTreeSet<TileCoord>, AnalysisError> {
    let TileCoord::Node { sector, node } = start else { return Err(AnalysisError::BadStart(start)) };
    let mut layer = vec![node];
    for _ in 0..k {
        let mut next = Vec::new();
        for v in layer {
            if fib::kind_of(v)? == NodeKind::White {
                next.extend(fib::sons(v)?.into_iter().skip(1));
            }
        }
        layer = next;
    }
    Ok(layer.into_iter().map(|node| TileCoord::Node { sector, node }).collect())
}

/// The table a census row runs: the three front contexts set by `variant`,
/// every other cell keeping its state.
pub fn census_table(variant: RuleClass) -> RuleTable {
    let mut table = RuleTable::identity();
    let [bw, wb, bb] = RuleClass::contexts();
    table.set(bw, variant.bw);
    table.set(wb, variant.wb);
    table.set(bb, variant.bb);
    table
}

/// Summary of the front after `k` steps from a single B cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusReport {
    pub variant: RuleClass,
    pub start: TileCoord,
    pub k: u32,
    pub circle: u32,
    /// Number of B cells on the front.
    pub b_count: u64,
    /// Smallest and largest B position on the front, if any.
    pub arc: Option<(u64, u64)>,
    /// Maximal B runs with their bounding W cells, e.g. `WBBW`, and how often
    /// each occurs.
    pub blocks: BTreeMap<String, u64>,
    pub black: Vec<TileCoord>,
}

impl CensusReport {
    /// Number of positions from the first to the last B, inclusive.
    pub fn arc_width(&self) -> u64 {
        self.arc.map_or(0, |(a, b)| b - a + 1)
    }

    /// The front word over the arc, padded with one W on each side.
    pub fn arc_word(&self, positions: &BTreeSet<u64>) -> String {
        match self.arc {
            None => String::new(),
            Some((a, b)) => (a.saturating_sub(1)..=b + 1).map(|p| if positions.contains(&p) { 'B' } else { 'W' }).collect(),
        }
    }
}

/// Runs `variant` for `k` steps from `{start}` and reads the front.
pub fn census(variant: RuleClass, start: TileCoord, k: u32) -> Result<CensusReport, AnalysisError> {
    census_with(&census_table(variant), start, k)
}

/// As [`census`] with an explicit table, whose `bw` must be B.
pub fn census_with(table: &RuleTable, start: TileCoord, k: u32) -> Result<CensusReport, AnalysisError> {
    require(table, |c| c.bw == CellState::B, "bw = B")?;
    let n0 = grid::circle_of(start)?;
    if n0 < 2 || grid::kind_of_tile(start)? != Some(NodeKind::White) {
        return Err(AnalysisError::BadStart(start));
    }
    let mut sim = Simulator::new(*table, &Configuration::from_cells([start]))?;
    for _ in 0..k {
        sim.step()?;
    }
    let word = front_word_of(&sim);
    let positions = word.black_positions();
    let arc = positions.first().zip(positions.last()).map(|(a, b)| (*a, *b));
    let mut blocks = BTreeMap::new();
    let mut run = 0u64;
    for &p in positions {
        if positions.contains(&(p + 1)) {
            run += 1;
        } else {
            *blocks.entry(format!("W{}W", "B".repeat(run as usize + 1))).or_default() += 1;
            run = 0;
        }
    }
    let circle = word.circle();
    let black = positions.iter().map(|&p| grid::tile_at(circle, p)).collect::<Result<_, _>>()?;
    Ok(CensusReport {
        variant: classify(table),
        start,
        k,
        circle,
        b_count: word.count_black(),
        arc,
        blocks,
        black,
    })
}
