//! Seeded corpora of rule tables and configurations, cross-validation of the
//! decider against plain simulation, and the adjacency validation suites.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::decider::{self, classify, VerdictKind, ADVANCE_WINDOW};
use crate::engine::{rotation_closure, CellState, Configuration, Context, Rule, RuleTable, Simulator};
use crate::geometry::{self, GeomError};
use crate::grid::{self, GridError, TileCoord};

/// Stream of the ChaCha generator that draws configurations, so that tables
/// and configurations of one seed never share random words.
const CONFIG_STREAM: u64 = 1;

/// Radius, density and size cap of the default configuration corpus.
pub const CORPUS_RADIUS: u32 = 2;
pub const CORPUS_DENSITY: f64 = 1.0 / 3.0;
pub const CORPUS_MAX_CELLS: usize = 12;

/// Kind of rule tables a generator draws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableMode {
    /// Every context except the quiescent one gets an independent uniform output.
    Random,
    /// One uniform output per rotation orbit, the quiescent orbit mapping to W.
    Rotation,
}

/// Generator seeded deterministically from `seed`.
pub fn seeded(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn state<R: Rng>(rng: &mut R) -> CellState {
    if rng.gen_bool(0.5) {
        CellState::B
    } else {
        CellState::W
    }
}

/// A table with the quiescent rule and uniform outputs elsewhere.
pub fn random_table<R: Rng>(rng: &mut R) -> RuleTable {
    RuleTable::from_fn(|c| if c == Context::quiescent() { CellState::W } else { state(rng) })
}

/// The smallest-index context of each of the 16 rotation orbits.
pub fn orbit_representatives() -> Vec<Context> {
    Context::all().filter(|c| (1..5).all(|k| c.rotate(k).index() >= c.index())).collect()
}

fn random_orbit_rules<R: Rng>(rng: &mut R) -> Vec<Rule> {
    orbit_representatives()
        .into_iter()
        .map(|c| Rule::new(c, if c == Context::quiescent() { CellState::W } else { state(rng) }))
        .collect()
}

/// A rotation-invariant table drawn orbit by orbit.
pub fn random_invariant_table<R: Rng>(rng: &mut R) -> RuleTable {
    rotation_closure(&random_orbit_rules(rng)).expect("one rule per orbit never conflicts")
}

/// B cells drawn independently with probability `density` over `D_radius`,
/// redrawn until between 1 and `max_cells` cells are B.
pub fn random_config<R: Rng>(rng: &mut R, radius: u32, density: f64, max_cells: usize) -> Configuration {
    let disc = grid::disc_tiles(radius).expect("corpus radius is small");
    let max_cells = max_cells.clamp(1, disc.len());
    loop {
        let cells: Vec<TileCoord> = disc.iter().copied().filter(|_| rng.gen_bool(density)).collect();
        if (1..=max_cells).contains(&cells.len()) {
            return Configuration::from_cells(cells);
        }
    }
}

/// A configuration of the default corpus.
pub fn corpus_config<R: Rng>(rng: &mut R) -> Configuration {
    random_config(rng, CORPUS_RADIUS, CORPUS_DENSITY, CORPUS_MAX_CELLS)
}

/// The first `count` tables of `mode` for `seed`.
pub fn tables(mode: TableMode, seed: u64, count: usize) -> Vec<RuleTable> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|_| match mode {
            TableMode::Random => random_table(&mut rng),
            TableMode::Rotation => random_invariant_table(&mut rng),
        })
        .collect()
}

/// The first `count` corpus configurations for `seed`.
pub fn configs(seed: u64, count: usize) -> Vec<Configuration> {
    let mut rng = seeded(seed);
    rng.set_stream(CONFIG_STREAM);
    (0..count).map(|_| corpus_config(&mut rng)).collect()
}

/// Rule-file texts of [`tables`]. Rotation mode writes one rule per orbit
/// under the `closure: rotation` header.
pub fn gen_rules(mode: TableMode, seed: u64, count: usize) -> Vec<String> {
    let mut rng = seeded(seed);
    (0..count)
        .map(|i| {
            let mut text = format!("# {} table {i} of seed {seed}\n", mode_name(mode));
            match mode {
                TableMode::Random => text.push_str(&random_table(&mut rng).to_text()),
                TableMode::Rotation => {
                    text.push_str("closure: rotation\n");
                    for rule in random_orbit_rules(&mut rng) {
                        text.push_str(&format!("{} -> {}\n", rule.context, rule.out));
                    }
                }
            }
            text
        })
        .collect()
}

fn mode_name(mode: TableMode) -> &'static str {
    match mode {
        TableMode::Random => "random",
        TableMode::Rotation => "rotation-invariant",
    }
}

/// Settings of a cross-validation run over every (table, configuration) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossvalParams {
    pub seed: u64,
    pub tables: usize,
    pub configs: usize,
    /// Minimum length of the reference simulation of confined runs.
    pub horizon: u64,
    pub mode: TableMode,
}

/// A pair on which the decider and the simulation disagree, with enough to
/// replay it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Disagreement {
    pub table_index: usize,
    pub config_index: usize,
    pub rules: String,
    pub init: String,
    pub verdict: Option<String>,
    pub problem: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrossvalReport {
    pub params: CrossvalParams,
    pub pairs: usize,
    /// Pairs per verdict kind.
    pub verdicts: BTreeMap<String, usize>,
    /// Pairs per `(bw, wb, bb)` class of the table.
    pub classes: BTreeMap<String, usize>,
    pub disagreements: Vec<Disagreement>,
}

/// Verdict text of one pair, or the verdict (if any) and the problem found.
type PairOutcome = Result<String, (Option<String>, String)>;

/// Decides every pair, replays the verdict, and compares it with a reference
/// simulation. In rotation mode the specialised decider must agree, `bw = B`
/// must mean advance, and `bw = W` must keep the front within one circle of
/// where it started.
/// Pairs run in parallel; the report lists them in input order.
pub fn crossval(params: &CrossvalParams) -> CrossvalReport {
    let tables = tables(params.mode, params.seed, params.tables);
    let configs = configs(params.seed, params.configs);
    let outcomes: Vec<(String, PairOutcome)> = (0..tables.len() * configs.len())
        .into_par_iter()
        .map(|i| {
            let (table, init) = (&tables[i / configs.len()], &configs[i % configs.len()]);
            (classify(table).to_text(), check_pair(table, init, params.horizon, params.mode == TableMode::Rotation))
        })
        .collect();

    let mut report = CrossvalReport {
        params: *params,
        pairs: outcomes.len(),
        verdicts: BTreeMap::new(),
        classes: BTreeMap::new(),
        disagreements: Vec::new(),
    };
    for (i, (class, outcome)) in outcomes.into_iter().enumerate() {
        *report.classes.entry(class).or_default() += 1;
        match outcome {
            Ok(kind) => *report.verdicts.entry(kind).or_default() += 1,
            Err((verdict, problem)) => {
                let (ti, ci) = (i / configs.len(), i % configs.len());
                report.disagreements.push(Disagreement {
                    table_index: ti,
                    config_index: ci,
                    rules: tables[ti].to_text(),
                    init: configs[ci].to_text(),
                    verdict,
                    problem,
                });
            }
        }
    }
    report
}

/// Checks one pair; `Ok` holds the verdict kind's name, `Err` the verdict
/// record (if any) and what went wrong.
pub fn check_pair(table: &RuleTable, init: &Configuration, horizon: u64, rotation: bool) -> Result<String, (Option<String>, String)> {
    let verdict = decider::decide(table, init).map_err(|e| (None, format!("decide failed: {e}")))?;
    let record = verdict.kind.record();
    let fail = |problem: String| (Some(record.clone()), problem);
    if !decider::check_verdict(table, init, &verdict) {
        return Err(fail("the replay rejects the verdict".into()));
    }
    let front = reference(table, init, &verdict.kind, horizon).map_err(fail)?;
    if rotation {
        match decider::decide_rotation_invariant(table, init) {
            Ok(v) if v == verdict => {}
            Ok(v) => return Err(fail(format!("the rotation-invariant decider says {}", v.kind.record()))),
            Err(e) => return Err(fail(format!("the rotation-invariant decider failed: {e}"))),
        }
        let advances = matches!(verdict.kind, VerdictKind::FrontAdvance { .. });
        if (classify(table).bw == CellState::B) != advances {
            return Err(fail("bw and front advance disagree".into()));
        }
        if !advances && front.last > front.first + 1 {
            return Err(fail(format!("the front moved from circle {} to circle {}", front.first, front.last)));
        }
    }
    Ok(verdict_name(&verdict.kind).into())
}

fn verdict_name(kind: &VerdictKind) -> &'static str {
    match kind {
        VerdictKind::Halts { .. } => "halts",
        VerdictKind::Periodic { .. } => "periodic",
        VerdictKind::FrontAdvance { .. } => "front-advance",
    }
}

/// First and last front index seen by a reference run.
struct FrontSpan {
    first: u32,
    last: u32,
}

/// Simulates from `init` without the decider's reasoning: a confined run goes
/// until its first repeated configuration (at least `horizon` steps are
/// allowed), an advancing one through the growth window.
fn reference(table: &RuleTable, init: &Configuration, kind: &VerdictKind, horizon: u64) -> Result<FrontSpan, String> {
    let err = |e: crate::engine::EngineError| format!("reference simulation failed: {e}");
    let mut sim = Simulator::new(*table, &Configuration { time: 0, ..init.clone() }).map_err(err)?;
    let mut front = sim.extent().unwrap_or(0);
    let first = front;

    if let VerdictKind::FrontAdvance { t0, .. } = *kind {
        let mut fronts = vec![front];
        for _ in 0..t0 + ADVANCE_WINDOW {
            sim.step().map_err(err)?;
            front = front.max(sim.extent().unwrap_or(0));
            fronts.push(front);
        }
        return match (t0..t0 + ADVANCE_WINDOW).find(|&t| fronts[t as usize + 1] != fronts[t as usize] + 1) {
            Some(t) => Err(format!("front went from {} to {} at t = {t}", fronts[t as usize], fronts[t as usize + 1])),
            None => Ok(FrontSpan { first, last: front }),
        };
    }

    let needed = match *kind {
        VerdictKind::Halts { t } => t + 1,
        VerdictKind::Periodic { preperiod, period } => preperiod + period,
        VerdictKind::FrontAdvance { .. } => unreachable!("handled above"),
    };
    let mut seen: HashMap<Vec<u32>, u64> = HashMap::new();
    for t in 0..=horizon.max(needed) {
        let key = sim.black_indices();
        if let Some(&s) = seen.get(&key) {
            let ok = match *kind {
                VerdictKind::Halts { t: h } => s == h && t == h + 1,
                VerdictKind::Periodic { preperiod, period } => s == preperiod && t - s == period,
                VerdictKind::FrontAdvance { .. } => false,
            };
            return if ok {
                Ok(FrontSpan { first, last: front })
            } else {
                Err(format!("first repeat is configuration {s} at time {t}"))
            };
        }
        seen.insert(key, t);
        sim.step().map_err(err)?;
        front = front.max(sim.extent().unwrap_or(0));
    }
    Err(format!("no repeat within {} steps", horizon.max(needed)))
}

/// Outcome of one adjacency validation suite.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteResult {
    pub name: String,
    /// First counterexample, if the suite failed.
    pub failure: Option<String>,
}

impl SuiteResult {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// Runs the adjacency suites on `D_depth` with the library's neighbour map.
pub fn validate(depth: u32) -> Result<Vec<SuiteResult>, GeomError> {
    validate_with(depth, grid::neighbors)
}

/// Runs the suites against an arbitrary neighbour map: geometric oracle
/// equivalence, BFS distances, symmetry, and circle closure.
pub fn validate_with<F>(depth: u32, neighbors: F) -> Result<Vec<SuiteResult>, GeomError>
where
    F: Fn(TileCoord) -> Result<[TileCoord; 5], GridError>,
{
    if depth > geometry::MAX_DEPTH {
        return Err(GeomError::DepthTooLarge(depth));
    }
    let tiling = geometry::generate(depth)?;
    let oracle = match geometry::match_coordinates_with(&tiling, &neighbors) {
        Ok(_) => None,
        Err(GeomError::ModelMismatch(why)) => Some(why),
        Err(e) => return Err(e),
    };
    let suite = |name: &str, failure: Result<Option<String>, GridError>| SuiteResult {
        name: name.into(),
        failure: failure.unwrap_or_else(|e| Some(e.to_string())),
    };
    Ok(vec![
        SuiteResult { name: "oracle".into(), failure: oracle },
        suite("bfs", bfs_suite(depth, &neighbors)),
        suite("symmetry", symmetry_suite(depth, &neighbors)),
        suite("closure", closure_suite(depth, &neighbors)),
    ])
}

fn bfs_suite<F>(depth: u32, neighbors: &F) -> Result<Option<String>, GridError>
where
    F: Fn(TileCoord) -> Result<[TileCoord; 5], GridError>,
{
    let mut dist = BTreeMap::from([(TileCoord::Central, 0u32)]);
    let mut queue = VecDeque::from([TileCoord::Central]);
    while let Some(t) = queue.pop_front() {
        let d = dist[&t];
        if d == depth {
            continue;
        }
        for n in neighbors(t)? {
            if let std::collections::btree_map::Entry::Vacant(e) = dist.entry(n) {
                e.insert(d + 1);
                queue.push_back(n);
            }
        }
    }
    for n in 0..=depth {
        let circle: BTreeSet<TileCoord> = grid::circle_tiles(n)?.collect();
        let frontier: BTreeSet<TileCoord> = dist.iter().filter(|(_, &d)| d == n).map(|(t, _)| *t).collect();
        if let Some(t) = circle.symmetric_difference(&frontier).next() {
            let found = dist.get(t).map_or("unreached".to_string(), |d| format!("at distance {d}"));
            return Ok(Some(format!("{t} lies on circle {} but BFS finds it {found}", grid::circle_of(*t)?)));
        }
    }
    Ok(None)
}

fn symmetry_suite<F>(depth: u32, neighbors: &F) -> Result<Option<String>, GridError>
where
    F: Fn(TileCoord) -> Result<[TileCoord; 5], GridError>,
{
    for a in grid::disc_tiles(depth)? {
        for b in neighbors(a)? {
            if !neighbors(b)?.contains(&a) {
                return Ok(Some(format!("{a} lists {b} as a neighbour but {b} does not list {a}")));
            }
        }
    }
    Ok(None)
}

fn closure_suite<F>(depth: u32, neighbors: &F) -> Result<Option<String>, GridError>
where
    F: Fn(TileCoord) -> Result<[TileCoord; 5], GridError>,
{
    for n in 1..=depth {
        let start = grid::tile_at(n, 0)?;
        let mut t = start;
        for i in 0..grid::circle_size(n)? {
            if grid::circle_of(t)? != n || grid::circle_position(t)?.1 != i {
                return Ok(Some(format!("step {i} along circle {n} reaches {t}")));
            }
            let next = grid::circle_succ(t)?;
            if grid::circle_pred(next)? != t {
                return Ok(Some(format!("{t} and {next} are not each other's predecessor and successor")));
            }
            for m in neighbors(t)? {
                if grid::circle_of(m)?.abs_diff(n) > 1 {
                    return Ok(Some(format!("{t} on circle {n} is next to {m} on circle {}", grid::circle_of(m)?)));
                }
            }
            t = next;
        }
        if t != start {
            return Ok(Some(format!("circle {n} does not close: {} steps from {start} reach {t}", grid::circle_size(n)?)));
        }
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{is_rotation_invariant, parse_rules};

    #[test]
    fn sixteen_orbits() {
        let reps = orbit_representatives();
        assert_eq!(reps.len(), 16);
        let covered: BTreeSet<Context> = reps.iter().flat_map(|c| (0..5).map(move |k| c.rotate(k))).collect();
        assert_eq!(covered.len(), Context::COUNT);
    }

    #[test]
    fn generated_rules_parse_and_are_stable() {
        let texts = gen_rules(TableMode::Random, 1, 1000);
        for (text, table) in texts.iter().zip(tables(TableMode::Random, 1, 1000)) {
            assert_eq!(parse_rules(text), Ok(table));
        }
        assert_eq!(gen_rules(TableMode::Random, 1, 3), texts[..3]);
        assert_ne!(gen_rules(TableMode::Random, 2, 3), texts[..3]);

        for (text, table) in gen_rules(TableMode::Rotation, 7, 50).iter().zip(tables(TableMode::Rotation, 7, 50)) {
            let parsed = parse_rules(text).unwrap();
            assert!(is_rotation_invariant(&parsed));
            assert_eq!(parsed, table);
        }
    }

    #[test]
    fn corpus_configs_respect_bounds() {
        let inner = grid::disc_tiles(CORPUS_RADIUS).unwrap();
        for c in configs(3, 500) {
            assert!((1..=CORPUS_MAX_CELLS).contains(&c.len()));
            assert!(c.cells.iter().all(|t| inner.contains(t)));
        }
        assert_eq!(configs(3, 10), configs(3, 10));
    }

    #[test]
    fn empty_configuration_halts_at_once() {
        for table in tables(TableMode::Random, 5, 20) {
            let v = decider::decide(&table, &Configuration::default()).unwrap();
            assert_eq!(v.kind, VerdictKind::Halts { t: 0 });
            assert!(check_pair(&table, &Configuration::default(), 200, false).is_ok());
        }
    }

    #[test]
    fn small_crossval_is_clean_and_ordered() {
        let params = CrossvalParams { seed: 11, tables: 12, configs: 4, horizon: 200, mode: TableMode::Random };
        let report = crossval(&params);
        assert_eq!(report.pairs, 48);
        assert!(report.disagreements.is_empty(), "{:?}", report.disagreements);
        assert_eq!(report, crossval(&params));

        let params = CrossvalParams { mode: TableMode::Rotation, ..params };
        let report = crossval(&params);
        assert!(report.disagreements.is_empty(), "{:?}", report.disagreements);
    }

    #[test]
    fn replay_records_round_trip_through_json() {
        let d = Disagreement {
            table_index: 2,
            config_index: 5,
            rules: RuleTable::identity().to_text(),
            init: "C\n1:3\n".into(),
            verdict: Some("verdict=halts t=0 period=- reason=-".into()),
            problem: "example".into(),
        };
        let json = serde_json::to_string(&d).unwrap();
        assert_eq!(serde_json::from_str::<Disagreement>(&json).unwrap(), d);
        let v = decider::decide(&RuleTable::identity(), &Configuration::from_cells(["1:3".parse().unwrap()])).unwrap();
        let json = serde_json::to_string(&v).unwrap();
        assert!(json.contains("\"1:3\""), "{json}");
        assert_eq!(serde_json::from_str::<decider::Verdict>(&json).unwrap(), v);
    }

    #[test]
    fn reference_catches_a_wrong_verdict() {
        let kill = RuleTable::from_fn(|_| CellState::W);
        let init = Configuration::from_cells([TileCoord::Central]);
        assert!(reference(&kill, &init, &VerdictKind::Halts { t: 1 }, 200).is_ok());
        assert!(reference(&kill, &init, &VerdictKind::Halts { t: 2 }, 200).is_err());
        assert!(reference(&kill, &init, &VerdictKind::Periodic { preperiod: 1, period: 2 }, 200).is_err());
    }

    #[test]
    fn validation_passes_and_detects_corruption() {
        for depth in [0, 1, 4] {
            let suites = validate(depth).unwrap();
            assert!(suites.iter().all(SuiteResult::passed), "{suites:?}");
        }
        let a: TileCoord = "1:3".parse().unwrap();
        let b: TileCoord = "1:8".parse().unwrap();
        let broken = |t: TileCoord| {
            let mut n = grid::neighbors(t)?;
            if t == a {
                n[2] = "1:9".parse().unwrap();
            }
            Ok(n)
        };
        let suites = validate_with(4, broken).unwrap();
        let symmetry = suites.iter().find(|s| s.name == "symmetry").unwrap();
        assert!(symmetry.failure.as_deref().unwrap().contains(&format!("{b} lists {a}")));
        assert!(!suites[0].passed());
    }
}
