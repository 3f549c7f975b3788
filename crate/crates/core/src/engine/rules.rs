//! Rule-file parsing, validation and rotation closure.
//!
//! A rule file holds lines `<self> <n1n2n3n4n5> -> <new>` over the states `W`
//! and `B`, `#` comments, and the optional headers `default: identity` (unlisted
//! contexts keep the cell's state) and `closure: rotation` (every rule also
//! applies to the circular rotations of its neighbour word).

use std::collections::BTreeMap;

use thiserror::Error;

use super::{CellState, Context, RuleTable};

/// One rule with the 1-based line it came from (0 when built in code).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rule {
    pub line: usize,
    pub context: Context,
    pub out: CellState,
}

impl Rule {
    pub fn new(context: Context, out: CellState) -> Self {
        Rule { line: 0, context, out }
    }
}

/// A possibly partial rule list with its headers.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RuleSet {
    pub rules: Vec<Rule>,
    pub default_identity: bool,
    pub closure_rotation: bool,
}

impl RuleSet {
    /// Validates the set into a total table.
    pub fn to_table(&self) -> Result<RuleTable, RuleError> {
        let mut seen: BTreeMap<Context, Rule> = BTreeMap::new();
        for &rule in &self.rules {
            match seen.get(&rule.context) {
                Some(prev) if prev.out != rule.out => {
                    return Err(RuleError::Determinism { context: rule.context, first_line: prev.line, second_line: rule.line })
                }
                Some(_) => {}
                None => {
                    seen.insert(rule.context, rule);
                }
            }
        }

        if self.closure_rotation {
            let explicit: Vec<Rule> = seen.values().copied().collect();
            for rule in explicit {
                for k in 1..5 {
                    let image = rule.context.rotate(k);
                    match seen.get(&image) {
                        Some(prev) if prev.out != rule.out => {
                            return Err(RuleError::RotationConflict { first: *prev, second: rule });
                        }
                        Some(_) => {}
                        None => {
                            seen.insert(image, Rule { context: image, ..rule });
                        }
                    }
                }
            }
        }

        match seen.get(&Context::quiescent()) {
            Some(rule) if rule.out != CellState::W => return Err(RuleError::QuiescentToB { line: rule.line }),
            None if !self.default_identity => return Err(RuleError::MissingQuiescent),
            _ => {}
        }

        if !self.default_identity && seen.len() < Context::COUNT {
            let first = Context::all().find(|c| !seen.contains_key(c)).expect("some context is missing");
            return Err(RuleError::Totality { missing: Context::COUNT - seen.len(), first });
        }

        Ok(RuleTable::from_fn(|c| seen.get(&c).map_or(c.me, |r| r.out)))
    }

    /// Every context of `table`, listed explicitly.
    pub fn from_table(table: &RuleTable) -> Self {
        RuleSet {
            rules: Context::all().map(|c| Rule::new(c, table.get(c))).collect(),
            ..RuleSet::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RuleError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: state `{state}` is not supported; only W and B are")]
    UnsupportedState { line: usize, state: char },
    #[error("context `{context}` is given conflicting outputs on lines {first_line} and {second_line}")]
    Determinism { context: Context, first_line: usize, second_line: usize },
    #[error(
        "rotations conflict: `{} -> {}` (line {}) against `{} -> {}` (line {})",
        first.context, first.out, first.line, second.context, second.out, second.line
    )]
    RotationConflict { first: Rule, second: Rule },
    #[error("the quiescent rule `W WWWWW -> W` is missing")]
    MissingQuiescent,
    #[error("line {line}: `W WWWWW` must map to W")]
    QuiescentToB { line: usize },
    #[error("{missing} contexts have no rule (first: `{first}`); add them or use `default: identity`")]
    Totality { missing: usize, first: Context },
}

/// Parses a rule file into its rule list and headers without validating it.
pub fn parse_rule_set(text: &str) -> Result<RuleSet, RuleError> {
    let mut set = RuleSet::default();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        if let Some((key, value)) = body.split_once(':') {
            match (key.trim(), value.trim()) {
                ("default", "identity") => set.default_identity = true,
                ("closure", "rotation") => set.closure_rotation = true,
                _ => return Err(RuleError::Syntax { line, msg: format!("unknown header `{body}`") }),
            }
            continue;
        }
        let fields: Vec<&str> = body.split_whitespace().collect();
        let [me, nbrs, "->", out] = fields[..] else {
            return Err(RuleError::Syntax { line, msg: format!("expected `<self> <n1..n5> -> <new>`, got `{body}`") });
        };
        for field in [me, nbrs, out] {
            if let Some(bad) = field.chars().find(|c| CellState::from_char(*c).is_none()) {
                return Err(if bad.is_alphanumeric() {
                    RuleError::UnsupportedState { line, state: bad }
                } else {
                    RuleError::Syntax { line, msg: format!("unexpected character `{bad}`") }
                });
            }
        }
        let context = Context::parse(me, nbrs)
            .ok_or_else(|| RuleError::Syntax { line, msg: "a context is one state and five neighbour states".into() })?;
        let out = match out.len() {
            1 => CellState::from_char(out.chars().next().expect("one char")).expect("checked above"),
            _ => return Err(RuleError::Syntax { line, msg: format!("`{out}` is not a single state") }),
        };
        set.rules.push(Rule { line, context, out });
    }
    Ok(set)
}

/// Parses and validates a rule file.
pub fn parse_rules(text: &str) -> Result<RuleTable, RuleError> {
    parse_rule_set(text)?.to_table()
}

/// Closes a partial rule list under rotation of the neighbour word. Contexts
/// left unlisted keep the cell's state.
pub fn rotation_closure(rules: &[Rule]) -> Result<RuleTable, RuleError> {
    RuleSet { rules: rules.to_vec(), default_identity: true, closure_rotation: true }.to_table()
}

/// Whether every context's output is constant on its rotation orbit.
pub fn is_rotation_invariant(table: &RuleTable) -> bool {
    Context::all().all(|c| table.get(c.rotate(1)) == table.get(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use CellState::{B, W};

    fn ctx(s: &str) -> Context {
        let (me, nbrs) = s.split_once(' ').unwrap();
        Context::parse(me, nbrs).unwrap()
    }

    #[test]
    fn explicit_table_round_trips() {
        let table = RuleTable::from_fn(|c| if c.index() % 3 == 0 { W } else { B });
        let mut table = table;
        table.set(Context::quiescent(), W);
        assert_eq!(parse_rules(&table.to_text()), Ok(table));
    }

    #[test]
    fn comments_blank_lines_and_headers() {
        let text = "# a comment\n\ndefault: identity   # trailing\nW BWWWW -> B\n  closure : rotation\n";
        let set = parse_rule_set(text).unwrap();
        assert!(set.default_identity && set.closure_rotation);
        assert_eq!(set.rules, vec![Rule { line: 4, context: ctx("W BWWWW"), out: B }]);
        let table = set.to_table().unwrap();
        assert_eq!(table.get(ctx("W WWWBW")), B);
        assert_eq!(table.get(ctx("B WWWWW")), B);
    }

    #[test]
    fn conflicting_duplicate_is_a_determinism_error() {
        let err = parse_rules("default: identity\nW BWWWW -> B\nW BWWWW -> W\n").unwrap_err();
        assert_eq!(err, RuleError::Determinism { context: ctx("W BWWWW"), first_line: 2, second_line: 3 });
        assert!(err.to_string().contains("lines 2 and 3"));
        assert!(parse_rules("default: identity\nW BWWWW -> B\nW BWWWW -> B\n").is_ok());
    }

    #[test]
    fn quiescence_errors() {
        assert_eq!(parse_rules("default: identity\nW WWWWW -> B\n"), Err(RuleError::QuiescentToB { line: 2 }));
        let mut lines = RuleTable::identity().to_text();
        lines = lines.lines().skip(1).map(|l| format!("{l}\n")).collect();
        assert_eq!(parse_rules(&lines), Err(RuleError::MissingQuiescent));
    }

    #[test]
    fn totality_without_default() {
        let err = parse_rules("W WWWWW -> W\nW BWWWW -> B\n").unwrap_err();
        assert_eq!(err, RuleError::Totality { missing: 62, first: ctx("W WWWWB") });
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        for (text, line) in [
            ("W WWWWW -> W\nW BWWW -> B\n", 2),
            ("W BWWWW => B\n", 1),
            ("W BWWWW -> BB\n", 1),
            ("colour: blue\n", 1),
            ("W BWWWW -> B extra\n", 1),
            ("W BW-WW -> B\n", 1),
        ] {
            match parse_rules(text) {
                Err(RuleError::Syntax { line: l, .. }) => assert_eq!(l, line, "{text:?}"),
                other => panic!("{text:?}: {other:?}"),
            }
        }
        assert_eq!(parse_rules("W BWRWW -> B\n"), Err(RuleError::UnsupportedState { line: 1, state: 'R' }));
    }

    #[test]
    fn closure_adds_rotations() {
        let table = rotation_closure(&[Rule::new(ctx("W BWWWW"), B)]).unwrap();
        assert_eq!(table.get(ctx("W WWWWB")), B);
        assert!(is_rotation_invariant(&table));
    }

    #[test]
    fn closure_conflict_names_both_rules() {
        let rules = [Rule { line: 1, context: ctx("W BWWWW"), out: B }, Rule { line: 2, context: ctx("W WWWBW"), out: W }];
        match rotation_closure(&rules) {
            Err(RuleError::RotationConflict { first, second }) => {
                let mut lines = [first.line, second.line];
                lines.sort();
                assert_eq!(lines, [1, 2]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn closure_is_idempotent() {
        let table = rotation_closure(&[Rule::new(ctx("W BBWWW"), B), Rule::new(ctx("B WWWWW"), W)]).unwrap();
        let again = rotation_closure(&RuleSet::from_table(&table).rules).unwrap();
        assert_eq!(again, table);
    }

    #[test]
    fn rotation_invariance_examples() {
        let mut t = RuleTable::identity();
        t.set(ctx("W BWWWW"), B);
        assert!(!is_rotation_invariant(&t));
        let w_except_b_identity = RuleTable::from_fn(|c| c.me);
        assert!(is_rotation_invariant(&w_except_b_identity));
        let all_w = RuleTable::from_fn(|_| W);
        assert!(is_rotation_invariant(&all_w));
    }
}
