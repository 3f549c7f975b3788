//! `pentaca`: simulate, decide and analyse cellular automata on the pentagrid.
//!
//! Exit codes: 0 success (for `decide`, the automaton halts); 10 `decide`
//! found a run that never halts; 1 a check, validation or cross-validation
//! found a violation or the decider gave up; 2 bad input (arguments, rule
//! files, configuration files).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use clap::{Parser, Subcommand, ValueEnum};

use pentaca_core::analysis::{self, AnalysisError, Birth};
use pentaca_core::decider::{self, DecideError, RuleClass, VerdictKind};
use pentaca_core::engine::{parse_rules, CellState, Configuration, RuleTable, Simulator};
use pentaca_core::fib;
use pentaca_core::geometry::{self, Palette};
use pentaca_core::grid::{self, TileCoord};
use pentaca_core::harness::{self, CrossvalParams, TableMode};

const EXIT_VIOLATION: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NEVER_HALTS: u8 = 10;

#[derive(Parser)]
#[command(name = "pentaca", version, about = "Cellular automata on the pentagrid {5,4}")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a rule table from a configuration and report each step.
    Simulate {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long)]
        steps: u64,
        /// Write one SVG per time step into this directory.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
        /// Radius of the drawn disc.
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(0..=geometry::MAX_DEPTH as i64))]
        depth: u32,
        /// Write the last configuration to this file.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Colour B cells by the context that made them: blue `W BWWWW`,
        /// purple `W WBWWW`, green `W BBWWW`; W cells behind the front are pink.
        #[arg(long)]
        births: bool,
    },
    /// Decide whether the automaton halts from the configuration.
    Decide {
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        init: PathBuf,
        /// Use the procedure for rotation-invariant tables (rejects other tables).
        #[arg(long)]
        rotation_invariant: bool,
        /// Write the verdict and its witness trajectory as JSON.
        #[arg(long)]
        witness: Option<PathBuf>,
    },
    /// Grow the front from a single B cell and summarise it after k steps.
    Census {
        /// Outputs of the contexts `W BWWWW`, `W WBWWW`, `W BBWWW`, e.g. `B,B,W`.
        #[arg(long, value_parser = parse_variant)]
        variant: RuleClass,
        #[arg(long, default_value = "1:3")]
        start: TileCoord,
        #[arg(long, default_value_t = 8)]
        k: u32,
        /// Also print the front word over the B arc (long for large k).
        #[arg(long)]
        word: bool,
    },
    /// Check a front property along a trajectory.
    Check {
        #[arg(long, value_enum)]
        lemma: Lemma,
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        init: PathBuf,
        #[arg(long, default_value_t = 10)]
        horizon: u64,
    },
    /// Draw a configuration on the disc.
    Render {
        /// Configuration file; all tiles are W without one.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(0..=geometry::MAX_DEPTH as i64))]
        depth: u32,
        #[arg(long)]
        svg: PathBuf,
    },
    /// Certify the tree adjacency against the hyperbolic geometry.
    Validate {
        #[arg(long, default_value_t = 5, value_parser = clap::value_parser!(u32).range(0..=geometry::MAX_DEPTH as i64))]
        depth: u32,
        /// Neighbour overrides, one `<tile> <neighbour> <replacement>` per line,
        /// to check that the suites catch a broken adjacency.
        #[arg(long)]
        corrupt: Option<PathBuf>,
    },
    /// Write seeded random rule files.
    GenRules {
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        #[arg(long, env = "PENTACA_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Cross-check the decider against simulation on every pair of seeded
    /// random tables and configurations.
    Crossval {
        #[arg(long, env = "PENTACA_SEED", default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        tables: usize,
        #[arg(long, default_value_t = 10)]
        configs: usize,
        #[arg(long, default_value_t = 200)]
        horizon: u64,
        #[arg(long, value_enum, default_value_t = Mode::Random)]
        mode: Mode,
        /// Where to write disagreeing pairs as JSON.
        #[arg(long, default_value = "crossval-disagreements.json")]
        report: PathBuf,
    },
    /// Describe a tile: circle, kind, numeral and neighbours.
    Coord { tile: TileCoord },
}

#[derive(Clone, Copy, ValueEnum)]
enum Lemma {
    /// White sons of front white nodes copy their father (needs bw = B).
    Whites,
    /// No `WBW` and no `BBBB` on the front from t = 3 (needs B,B,W).
    Nofour,
    /// Lines of isolated `BW` patterns (needs bw = W, wb = B).
    Lines,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Random,
    Rotation,
}

impl From<Mode> for TableMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Random => TableMode::Random,
            Mode::Rotation => TableMode::Rotation,
        }
    }
}

/// An error blamed on the input, reported with exit code 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| InputError(e).into())
}

fn parse_variant(s: &str) -> std::result::Result<RuleClass, String> {
    let states: Vec<CellState> = s
        .split(',')
        .map(|p| {
            let p = p.trim();
            let mut chars = p.chars();
            match (chars.next().map(|c| c.to_ascii_uppercase()).and_then(CellState::from_char), chars.next()) {
                (Some(st), None) => Ok(st),
                _ => Err(format!("`{p}` is not W or B")),
            }
        })
        .collect::<std::result::Result<_, _>>()?;
    match states[..] {
        [bw, wb, bb] => Ok(RuleClass::new(bw, wb, bb)),
        _ => Err(format!("expected three states like `B,B,W`, got `{s}`")),
    }
}

fn read(path: &Path) -> Result<String> {
    input(fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())))
}

fn load_rules(path: &Path) -> Result<RuleTable> {
    let text = read(path)?;
    input(parse_rules(&text).with_context(|| format!("{}", path.display())))
}

fn load_config(path: &Path) -> Result<Configuration> {
    let text = read(path)?;
    input(Configuration::parse(&text).with_context(|| format!("{}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).with_context(|| format!("cannot write {}", path.display()))
}

fn simulate(rules: &Path, init: &Path, steps: u64, svg_dir: Option<&Path>, depth: u32, out: Option<&Path>) -> Result<ExitCode> {
    let table = load_rules(rules)?;
    let init = load_config(init)?;
    let mut sim = Simulator::new(table, &init)?;
    if let Some(dir) = svg_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let palette = Palette::default();
    let mut front = sim.extent().unwrap_or(0);
    for t in 0..=steps {
        if t > 0 {
            sim.step().with_context(|| format!("step {t}"))?;
            front = front.max(sim.extent().unwrap_or(0));
        }
        println!("t={t} black={} front={front}", sim.count_black());
        if let Some(dir) = svg_dir {
            let svg = geometry::render_svg(&sim.configuration()?, depth, &palette)?;
            write(&dir.join(format!("step_{t:04}.svg")), &svg)?;
        }
    }
    if let Some(out) = out {
        write(out, &sim.configuration()?.to_text())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn birth_colour(b: Birth) -> &'static str {
    match b {
        Birth::Initial => "#1b1b3a",
        Birth::Bw => "#2f6fdb",
        Birth::Wb => "#8e3fb0",
        Birth::Bb => "#2e9e4f",
        Birth::Other => "#666666",
    }
}

const BEHIND_FRONT: &str = "#f7d6de";

fn simulate_births(rules: &Path, init: &Path, steps: u64, svg_dir: Option<&Path>, depth: u32, out: Option<&Path>) -> Result<ExitCode> {
    let table = load_rules(rules)?;
    let init = load_config(init)?;
    let frames = analysis::trace_births(&table, &init, steps)?;
    if let Some(dir) = svg_dir {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    }
    let palette = Palette::default();
    for f in &frames {
        let mut tally: BTreeMap<Birth, usize> = BTreeMap::new();
        for &b in f.births.values() {
            *tally.entry(b).or_default() += 1;
        }
        let counts: String = tally.iter().fold(String::new(), |mut s, (b, n)| {
            let _ = write!(s, " {}={n}", format!("{b:?}").to_lowercase());
            s
        });
        println!("t={} black={} front={}{counts}", f.time, f.births.len(), f.front);
        if let Some(dir) = svg_dir {
            let svg = geometry::render_svg_with(depth, &palette.stroke, |t| match f.births.get(&t) {
                Some(&b) => birth_colour(b).to_string(),
                None if grid::circle_of(t).is_ok_and(|c| c < f.front) => BEHIND_FRONT.to_string(),
                None => palette.white.clone(),
            })?;
            write(&dir.join(format!("step_{:04}.svg", f.time)), &svg)?;
        }
    }
    if let (Some(out), Some(last)) = (out, frames.last()) {
        write(out, &Configuration::from_cells(last.births.keys().copied()).to_text())?;
    }
    Ok(ExitCode::SUCCESS)
}

fn decide(rules: &Path, init: &Path, rotation_invariant: bool, witness: Option<&Path>) -> Result<ExitCode> {
    let table = load_rules(rules)?;
    let init = load_config(init)?;
    let verdict = match if rotation_invariant {
        decider::decide_rotation_invariant(&table, &init)
    } else {
        decider::decide(&table, &init)
    } {
        Ok(v) => v,
        Err(DecideError::NotRotationInvariant) => return input(Err(DecideError::NotRotationInvariant.into())),
        Err(e) => {
            eprintln!("error: {e}");
            return Ok(ExitCode::from(EXIT_VIOLATION));
        }
    };
    println!("{}", verdict.kind.record());
    if let Some(path) = witness {
        write(path, &serde_json::to_string_pretty(&verdict)?)?;
    }
    Ok(match verdict.kind {
        VerdictKind::Halts { .. } => ExitCode::SUCCESS,
        _ => ExitCode::from(EXIT_NEVER_HALTS),
    })
}

fn analysis_input<T>(r: std::result::Result<T, AnalysisError>) -> Result<T> {
    match r {
        Err(e @ (AnalysisError::Precondition { .. } | AnalysisError::BadStart(_))) => input(Err(e.into())),
        other => Ok(other?),
    }
}

fn census(variant: RuleClass, start: TileCoord, k: u32, word: bool) -> Result<ExitCode> {
    let report = analysis_input(analysis::census(variant, start, k))?;
    let arc = report.arc.map_or("-".to_string(), |(a, b)| format!("{a}..{b}"));
    println!(
        "variant={} start={} k={} circle={} b_count={} arc={arc} width={}",
        variant.to_text(),
        start,
        k,
        report.circle,
        report.b_count,
        report.arc_width()
    );
    let blocks: Vec<String> = report.blocks.iter().map(|(b, n)| format!("{b}={n}")).collect();
    println!("blocks {}", blocks.join(" "));
    if word {
        let positions = report
            .black
            .iter()
            .map(|t| grid::circle_position(*t).map(|(_, p)| p))
            .collect::<std::result::Result<_, _>>()?;
        println!("word {}", report.arc_word(&positions));
    }
    Ok(ExitCode::SUCCESS)
}

fn check(lemma: Lemma, rules: &Path, init: &Path, horizon: u64) -> Result<ExitCode> {
    let table = load_rules(rules)?;
    let init = load_config(init)?;
    let violations = match lemma {
        Lemma::Whites => {
            let found = analysis_input(analysis::check_lemma_whites(&table, &init, horizon))?;
            for v in &found {
                println!("violation {v}");
            }
            found.len()
        }
        Lemma::Nofour => {
            let found = analysis_input(analysis::check_lemma_nofour(&table, &init, horizon))?;
            for r in &found {
                println!("violation t={} circle={} pattern={} positions={:?}", r.time, r.circle, r.pattern, r.positions);
            }
            found.iter().map(|r| r.positions.len()).sum()
        }
        Lemma::Lines => {
            let lines = analysis_input(analysis::trace_bw_lines(&table, &init, horizon))?;
            let mut broken = 0;
            for line in &lines {
                let start = line.points.first().map_or("-".to_string(), |p| format!("t={} circle={} position={}", p.time, p.circle, p.position));
                println!("line {start} steps={} intact={}", line.steps(), line.intact);
                broken += usize::from(!line.intact);
            }
            broken
        }
    };
    println!("violations={violations}");
    Ok(if violations == 0 { ExitCode::SUCCESS } else { ExitCode::from(EXIT_VIOLATION) })
}

fn render(config: Option<&Path>, depth: u32, svg: &Path) -> Result<ExitCode> {
    let config = match config {
        Some(path) => load_config(path)?,
        None => Configuration::default(),
    };
    write(svg, &geometry::render_svg(&config, depth, &Palette::default())?)?;
    Ok(ExitCode::SUCCESS)
}

fn parse_corruption(text: &str) -> Result<BTreeMap<(TileCoord, TileCoord), TileCoord>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tiles = body
            .split_whitespace()
            .map(str::parse::<TileCoord>)
            .collect::<std::result::Result<Vec<_>, _>>()
            .with_context(|| format!("line {}", i + 1))?;
        let [a, b, c] = tiles[..] else {
            bail!("line {}: expected `<tile> <neighbour> <replacement>`", i + 1);
        };
        out.insert((a, b), c);
    }
    Ok(out)
}

fn validate(depth: u32, corrupt: Option<&Path>) -> Result<ExitCode> {
    let overrides = match corrupt {
        Some(path) => input(parse_corruption(&read(path)?).with_context(|| format!("{}", path.display())))?,
        None => BTreeMap::new(),
    };
    let suites = harness::validate_with(depth, |t| {
        let mut n = grid::neighbors(t)?;
        for slot in n.iter_mut() {
            if let Some(&r) = overrides.get(&(t, *slot)) {
                *slot = r;
            }
        }
        Ok(n)
    })?;
    let mut failed = false;
    for s in &suites {
        match &s.failure {
            None => println!("{:<9} PASS", s.name),
            Some(why) => {
                failed = true;
                println!("{:<9} FAIL {why}", s.name);
            }
        }
    }
    Ok(if failed { ExitCode::from(EXIT_VIOLATION) } else { ExitCode::SUCCESS })
}

fn gen_rules(mode: Mode, seed: u64, count: usize, out: &Path) -> Result<ExitCode> {
    fs::create_dir_all(out).with_context(|| format!("cannot create {}", out.display()))?;
    for (i, text) in harness::gen_rules(mode.into(), seed, count).iter().enumerate() {
        let path = out.join(format!("rules_{i:04}.txt"));
        write(&path, text)?;
        println!("{}", path.display());
    }
    Ok(ExitCode::SUCCESS)
}

fn crossval(params: CrossvalParams, report_path: &Path) -> Result<ExitCode> {
    let report = harness::crossval(&params);
    let tally = |m: &BTreeMap<String, usize>| m.iter().fold(String::new(), |mut s, (k, v)| {
        let _ = write!(s, " {k}={v}");
        s
    });
    println!("pairs={}", report.pairs);
    println!("verdicts{}", tally(&report.verdicts));
    println!("classes{}", tally(&report.classes));
    println!("disagreements={}", report.disagreements.len());
    if report.disagreements.is_empty() {
        return Ok(ExitCode::SUCCESS);
    }
    for d in &report.disagreements {
        println!("table={} config={} verdict={} problem={}", d.table_index, d.config_index, d.verdict.as_deref().unwrap_or("-"), d.problem);
    }
    write(report_path, &serde_json::to_string_pretty(&report.disagreements)?)?;
    println!("written {}", report_path.display());
    Ok(ExitCode::from(EXIT_VIOLATION))
}

fn coord(tile: TileCoord) -> Result<ExitCode> {
    let (circle, position) = grid::circle_position(tile)?;
    let kind = match grid::kind_of_tile(tile)? {
        None => "central".to_string(),
        Some(k) => format!("{k:?}").to_lowercase(),
    };
    let numeral = match tile {
        TileCoord::Central => "-".to_string(),
        TileCoord::Node { node, .. } => fib::fib_rep(node).map_or("-".to_string(), |r| r.digits().to_string()),
    };
    let neighbors: Vec<String> = grid::neighbors(tile)?.iter().map(ToString::to_string).collect();
    println!("tile={tile} circle={circle} position={position} kind={kind} fib_rep={numeral}");
    println!("neighbors {}", neighbors.join(" "));
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate { rules, init, steps, svg_dir, depth, out, births: false } => {
            simulate(&rules, &init, steps, svg_dir.as_deref(), depth, out.as_deref())
        }
        Command::Simulate { rules, init, steps, svg_dir, depth, out, births: true } => {
            simulate_births(&rules, &init, steps, svg_dir.as_deref(), depth, out.as_deref())
        }
        Command::Decide { rules, init, rotation_invariant, witness } => decide(&rules, &init, rotation_invariant, witness.as_deref()),
        Command::Census { variant, start, k, word } => census(variant, start, k, word),
        Command::Check { lemma, rules, init, horizon } => check(lemma, &rules, &init, horizon),
        Command::Render { config, depth, svg } => render(config.as_deref(), depth, &svg),
        Command::Validate { depth, corrupt } => validate(depth, corrupt.as_deref()),
        Command::GenRules { mode, seed, count, out } => gen_rules(mode, seed, count, &out),
        Command::Crossval { seed, tables, configs, horizon, mode, report } => {
            crossval(CrossvalParams { seed, tables, configs, horizon, mode: mode.into() }, &report)
        }
        Command::Coord { tile } => coord(tile),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.is::<InputError>() {
                ExitCode::from(EXIT_INPUT)
            } else {
                ExitCode::from(EXIT_VIOLATION)
            }
        }
    }
}
