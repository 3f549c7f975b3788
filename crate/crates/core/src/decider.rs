//! Halting decision for two-state automata with a quiescent state, started
//! from a finite configuration.
//!
//! Only three contexts matter for the outcome: a white cell whose upper
//! neighbours read `B` then `W` (`bw`), `W` then `B` (`wb`), or `B` then `B`
//! (`bb`), all lower neighbours white. These are exactly the contexts a cell
//! just outside the current front can see.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::analysis::scan;
use crate::engine::{
    canonical_key, front_update, is_rotation_invariant, step, CellState, Configuration, Context, EngineError, RuleTable,
    Simulator,
};

/// Steps after which a silent simulation is reported as a defect.
pub const SAFETY_BOUND: u64 = 1_000_000;

/// Number of consecutive front advances a replay checks.
pub const ADVANCE_WINDOW: u64 = 11;

/// Outputs of the three contexts that drive the front.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RuleClass {
    pub bw: CellState,
    pub wb: CellState,
    pub bb: CellState,
}

impl RuleClass {
    pub fn new(bw: CellState, wb: CellState, bb: CellState) -> Self {
        RuleClass { bw, wb, bb }
    }

    /// The three contexts, in the order `bw`, `wb`, `bb`.
    pub fn contexts() -> [Context; 3] {
        use CellState::{B, W};
        [Context::new(W, [B, W, W, W, W]), Context::new(W, [W, B, W, W, W]), Context::new(W, [B, B, W, W, W])]
    }

    /// `B,B,W`-style text.
    pub fn to_text(self) -> String {
        format!("{},{},{}", self.bw, self.wb, self.bb)
    }
}

impl fmt::Display for RuleClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "bw={} wb={} bb={}", self.bw, self.wb, self.bb)
    }
}

pub fn classify(table: &RuleTable) -> RuleClass {
    let [bw, wb, bb] = RuleClass::contexts().map(|c| table.get(c));
    RuleClass { bw, wb, bb }
}

/// Why the front is known to advance forever.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AdvanceReason {
    /// `bw = B`: every front B cell turns its white sons B.
    RuleBW,
    /// `wb = B` and the front reads `BW` somewhere.
    FrontPatternBW,
    /// `wb = bb = B` and the front is entirely B.
    AllBlackWithBB,
}

impl AdvanceReason {
    pub fn name(self) -> &'static str {
        match self {
            AdvanceReason::RuleBW => "rule-bw",
            AdvanceReason::FrontPatternBW => "front-pattern-bw",
            AdvanceReason::AllBlackWithBB => "all-black-with-bb",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VerdictKind {
    /// `t` is the first time with `c_t = c_{t+1}`.
    Halts { t: u64 },
    /// `c_preperiod = c_{preperiod + period}`, `period >= 2`, both minimal.
    Periodic { preperiod: u64, period: u64 },
    /// The front index grows by one at every step from `t0` on.
    FrontAdvance { t0: u64, reason: AdvanceReason },
}

impl VerdictKind {
    pub fn halts(&self) -> bool {
        matches!(self, VerdictKind::Halts { .. })
    }

    /// `verdict=<kind> t=<..> period=<..> reason=<..>`.
    pub fn record(&self) -> String {
        match *self {
            VerdictKind::Halts { t } => format!("verdict=halts t={t} period=- reason=-"),
            VerdictKind::Periodic { preperiod, period } => {
                format!("verdict=periodic t={preperiod} period={period} reason=-")
            }
            VerdictKind::FrontAdvance { t0, reason } => {
                format!("verdict=front-advance t={t0} period=- reason={}", reason.name())
            }
        }
    }
}

impl fmt::Display for VerdictKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.record())
    }
}

/// A verdict and the trajectory prefix `c_0, c_1, ...` that supports it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub kind: VerdictKind,
    pub witness: Vec<Configuration>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DecideError {
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("no verdict after {0} steps; the configuration should have been confined")]
    SafetyBoundExceeded(u64),
    #[error("the rule table is not rotation invariant")]
    NotRotationInvariant,
}

/// Decides halting of `table` from `init`.
pub fn decide(table: &RuleTable, init: &Configuration) -> Result<Verdict, DecideError> {
    decide_inner(table, init, true, SAFETY_BOUND)
}

/// The same decision for rotation-invariant tables, where `bw` and `wb` share
/// an orbit and no front pattern needs watching.
pub fn decide_rotation_invariant(table: &RuleTable, init: &Configuration) -> Result<Verdict, DecideError> {
    if !is_rotation_invariant(table) {
        return Err(DecideError::NotRotationInvariant);
    }
    decide_inner(table, init, false, SAFETY_BOUND)
}

fn decide_inner(table: &RuleTable, init: &Configuration, monitors: bool, bound: u64) -> Result<Verdict, DecideError> {
    let init = Configuration { time: 0, ..init.clone() };
    if init.is_empty() {
        let next = Configuration { time: 1, ..init.clone() };
        return Ok(Verdict { kind: VerdictKind::Halts { t: 0 }, witness: vec![init, next] });
    }
    let class = classify(table);
    if class.bw == CellState::B {
        return Ok(Verdict {
            kind: VerdictKind::FrontAdvance { t0: 0, reason: AdvanceReason::RuleBW },
            witness: vec![init],
        });
    }

    let bw_pattern = [CellState::B, CellState::W];
    let mut seen = HashMap::new();
    let mut trajectory = vec![init];
    let mut front = front_update(None, &trajectory[0])?;
    for t in 0.. {
        let current = &trajectory[t as usize];
        if let Some(&s) = seen.get(&canonical_key(current)) {
            let kind = if t == s + 1 {
                VerdictKind::Halts { t: s }
            } else {
                VerdictKind::Periodic { preperiod: s, period: t - s }
            };
            return Ok(Verdict { kind, witness: trajectory });
        }
        seen.insert(canonical_key(current), t);

        if monitors && class.wb == CellState::B {
            if let Some(word) = &front.word {
                let reason = if !scan(word, &bw_pattern).positions.is_empty() {
                    Some(AdvanceReason::FrontPatternBW)
                } else if class.bb == CellState::B && word.all_black() {
                    Some(AdvanceReason::AllBlackWithBB)
                } else {
                    None
                };
                if let Some(reason) = reason {
                    return Ok(Verdict { kind: VerdictKind::FrontAdvance { t0: t, reason }, witness: trajectory });
                }
            }
        }

        if t >= bound {
            return Err(DecideError::SafetyBoundExceeded(t));
        }
        let next = step(table, current)?;
        front = front_update(Some(&front), &next)?;
        trajectory.push(next);
    }
    unreachable!("the loop only exits by returning")
}

/// Replays `verdict` on the dense simulator and checks its claim: the witness
/// is the true trajectory prefix, and the fixed point, cycle or front growth
/// it asserts is observed. Replays needing a disc beyond the simulator's
/// limit count as failures.
pub fn check_verdict(table: &RuleTable, init: &Configuration, verdict: &Verdict) -> bool {
    replay(table, init, verdict).unwrap_or(false)
}

fn replay(table: &RuleTable, init: &Configuration, verdict: &Verdict) -> Result<bool, EngineError> {
    let init = Configuration { time: 0, ..init.clone() };
    let mut sim = Simulator::new(*table, &init)?;
    let steps = match verdict.kind {
        VerdictKind::Halts { t } => t + 1,
        VerdictKind::Periodic { preperiod, period } => preperiod + period,
        VerdictKind::FrontAdvance { t0, .. } => t0 + ADVANCE_WINDOW,
    };
    let witness_len = match verdict.kind {
        VerdictKind::FrontAdvance { t0, .. } => t0 + 1,
        _ => steps + 1,
    };
    if verdict.witness.len() as u64 != witness_len {
        return Ok(false);
    }

    let mut keys = vec![sim.black_indices()];
    let mut fronts = vec![sim.front()];
    for t in 0..=steps {
        if let Some(w) = verdict.witness.get(t as usize) {
            if w.cells != sim.configuration()?.cells {
                return Ok(false);
            }
        }
        if t == steps {
            break;
        }
        sim.step()?;
        keys.push(sim.black_indices());
        fronts.push(sim.front());
    }

    let distinct = |upto: u64| keys[..upto as usize].iter().collect::<HashSet<_>>().len() as u64 == upto;
    Ok(match verdict.kind {
        VerdictKind::Halts { t } => distinct(t + 1) && keys[t as usize] == keys[t as usize + 1],
        VerdictKind::Periodic { preperiod: p, period: q } => {
            q >= 2 && distinct(p + q) && keys[p as usize] == keys[(p + q) as usize]
        }
        VerdictKind::FrontAdvance { t0, .. } => {
            (t0..t0 + ADVANCE_WINDOW).all(|t| fronts[t as usize + 1] == fronts[t as usize] + 1)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{rotation_closure, Rule};
    use crate::grid::TileCoord;
    use CellState::{B, W};

    fn cfg(tiles: &[&str]) -> Configuration {
        Configuration::from_cells(tiles.iter().map(|s| s.parse::<TileCoord>().unwrap()))
    }

    fn with(class: RuleClass, base: RuleTable) -> RuleTable {
        let mut t = base;
        let [a, b, c] = RuleClass::contexts();
        t.set(a, class.bw);
        t.set(b, class.wb);
        t.set(c, class.bb);
        t
    }

    #[test]
    fn classify_examples() {
        let bw = with(RuleClass::new(B, W, W), RuleTable::identity());
        assert_eq!(classify(&bw).bw, B);
        assert_eq!(classify(&RuleTable::from_fn(|_| W)), RuleClass::new(W, W, W));
        let closed = rotation_closure(&[Rule::new(RuleClass::contexts()[0], B)]).unwrap();
        let class = classify(&closed);
        assert_eq!((class.bw, class.wb), (B, B));
    }

    #[test]
    fn decide_examples() {
        let bw = with(RuleClass::new(B, W, W), RuleTable::identity());
        let v = decide(&bw, &cfg(&["C"])).unwrap();
        assert_eq!(v.kind, VerdictKind::FrontAdvance { t0: 0, reason: AdvanceReason::RuleBW });
        assert!(check_verdict(&bw, &cfg(&["C"]), &v));

        let kill = RuleTable::from_fn(|_| W);
        let v = decide(&kill, &cfg(&["C"])).unwrap();
        assert_eq!(v.kind, VerdictKind::Halts { t: 1 });
        assert!(check_verdict(&kill, &cfg(&["C"]), &v));

        let keep = RuleTable::from_fn(|c| c.me);
        let init = cfg(&["C", "1:1"]);
        let v = decide(&keep, &init).unwrap();
        assert_eq!(v.kind, VerdictKind::Halts { t: 0 });
        assert!(check_verdict(&keep, &init, &v));

        assert_eq!(decide(&bw, &Configuration::default()).unwrap().kind, VerdictKind::Halts { t: 0 });
    }

    #[test]
    fn periodic_verdicts_exist_and_check() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let tiles = crate::grid::disc_tiles(2).unwrap();
        let mut found = 0;
        for _ in 0..2000 {
            let mut table = RuleTable::from_fn(|_| if rng.gen_bool(0.5) { B } else { W });
            table.set(Context::quiescent(), W);
            table.set(RuleClass::contexts()[0], W);
            let init = Configuration::from_cells(tiles.iter().copied().filter(|_| rng.gen_bool(0.3)));
            let v = decide(&table, &init).unwrap();
            if let VerdictKind::Periodic { period, .. } = v.kind {
                assert!(period >= 2);
                assert!(check_verdict(&table, &init, &v), "{v:?}");
                found += 1;
            }
        }
        assert!(found > 0);
    }

    #[test]
    fn front_pattern_monitor_fires() {
        let table = with(RuleClass::new(W, B, W), RuleTable::identity());
        let init = cfg(&["1:3"]);
        let v = decide(&table, &init).unwrap();
        assert_eq!(v.kind, VerdictKind::FrontAdvance { t0: 0, reason: AdvanceReason::FrontPatternBW });
        assert!(check_verdict(&table, &init, &v));
    }

    #[test]
    fn all_black_monitor_fires() {
        let table = with(RuleClass::new(W, B, B), RuleTable::identity());
        let init = cfg(&["1:1", "2:1", "3:1", "4:1", "5:1"]);
        let v = decide(&table, &init).unwrap();
        assert_eq!(v.kind, VerdictKind::FrontAdvance { t0: 0, reason: AdvanceReason::AllBlackWithBB });
        assert!(check_verdict(&table, &init, &v));
    }

    #[test]
    fn forged_verdicts_fail() {
        let bw = with(RuleClass::new(B, W, W), RuleTable::identity());
        let init = cfg(&["1:3"]);
        let forged = Verdict { kind: VerdictKind::Halts { t: 0 }, witness: vec![init.clone(), init.clone()] };
        assert!(!check_verdict(&bw, &init, &forged));
        let keep = RuleTable::identity();
        let forged = Verdict {
            kind: VerdictKind::FrontAdvance { t0: 0, reason: AdvanceReason::RuleBW },
            witness: vec![init.clone()],
        };
        assert!(!check_verdict(&keep, &init, &forged));
        let wrong_witness = Verdict { kind: VerdictKind::Halts { t: 0 }, witness: vec![init.clone(), cfg(&["1:4"])] };
        assert!(!check_verdict(&keep, &init, &wrong_witness));
    }

    #[test]
    fn rotation_invariant_examples() {
        let closed = rotation_closure(&[Rule::new(RuleClass::contexts()[0], B)]).unwrap();
        let v = decide_rotation_invariant(&closed, &cfg(&["C"])).unwrap();
        assert!(matches!(v.kind, VerdictKind::FrontAdvance { .. }));

        let dying = RuleTable::from_fn(|_| W);
        let v = decide_rotation_invariant(&dying, &cfg(&["1:3"])).unwrap();
        assert!(v.kind.halts());
        assert_eq!(v.kind, decide(&dying, &cfg(&["1:3"])).unwrap().kind);

        let skew = with(RuleClass::new(B, W, W), RuleTable::identity());
        assert_eq!(decide_rotation_invariant(&skew, &cfg(&["C"])), Err(DecideError::NotRotationInvariant));
    }

    #[test]
    fn safety_bound_is_reported() {
        let shift = with(RuleClass::new(W, B, W), RuleTable::identity());
        // With the monitors off, the advancing front never repeats.
        let err = decide_inner(&shift, &cfg(&["1:3"]), false, 5).unwrap_err();
        assert_eq!(err, DecideError::SafetyBoundExceeded(5));
    }

    #[test]
    fn records() {
        assert_eq!(VerdictKind::Halts { t: 3 }.record(), "verdict=halts t=3 period=- reason=-");
        assert_eq!(VerdictKind::Periodic { preperiod: 1, period: 2 }.record(), "verdict=periodic t=1 period=2 reason=-");
        assert_eq!(
            VerdictKind::FrontAdvance { t0: 4, reason: AdvanceReason::AllBlackWithBB }.record(),
            "verdict=front-advance t=4 period=- reason=all-black-with-bb"
        );
    }
}
