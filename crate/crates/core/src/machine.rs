//! Machine description language, configuration model, and validation.
//!
//! A read-once Turing machine reads its input string left to right, one
//! symbol at a time, and only on transitions out of *sighted* states.
//! *Blind* states ignore the input entirely. The machine carries `k >= 1`
//! work tapes over a shared work alphabet whose first declared symbol is
//! the blank. Execution halts on entering the accept or reject state.
//!
//! Machines are immutable after construction and canonicalized: states are
//! sorted by name and rules by their rendered form, so `parse(serialize(m))
//! == m` holds for every valid machine.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

/// Index into a machine's input alphabet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct InputSym(pub u16);

/// Index into a machine's work alphabet. `WorkSym(0)` is always the blank.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct WorkSym(pub u16);

impl WorkSym {
    pub const BLANK: WorkSym = WorkSym(0);

    pub fn is_blank(self) -> bool {
        self.0 == 0
    }
}

/// Index into a machine's (sorted) state roster.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct StateId(pub u16);

/// 1-based rule identifier, assigned in canonical rule order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct RuleId(pub u32);

/// What a sighted rule sees on the input tape: a declared symbol or the
/// input blank that pads the string on the right (written `<` in files).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum InputCell {
    Sym(InputSym),
    Blank,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum StateKind {
    Sighted,
    Blind,
    Accept,
    Reject,
}

impl StateKind {
    pub fn is_halting(self) -> bool {
        matches!(self, StateKind::Accept | StateKind::Reject)
    }

    fn keyword(self) -> &'static str {
        match self {
            StateKind::Sighted => "sighted",
            StateKind::Blind => "blind",
            StateKind::Accept => "accept",
            StateKind::Reject => "reject",
        }
    }
}

/// Head movement on a work tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Move {
    Left,
    Stay,
    Right,
}

impl Move {
    pub fn delta(self) -> i64 {
        match self {
            Move::Left => -1,
            Move::Stay => 0,
            Move::Right => 1,
        }
    }

    pub fn flipped(self) -> Move {
        match self {
            Move::Left => Move::Right,
            Move::Stay => Move::Stay,
            Move::Right => Move::Left,
        }
    }

    fn letter(self) -> &'static str {
        match self {
            Move::Left => "L",
            Move::Stay => "S",
            Move::Right => "R",
        }
    }
}

/// Scan direction of the input head. Forward machines are the read-once
/// model proper; backward machines arise from rule inversion and retract
/// the input head on sighted steps instead of advancing it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Scan {
    Forward,
    Backward,
}

/// One transition. Sighted rules carry the input symbol they consume and
/// implicitly advance the input head; blind rules carry none and leave it
/// in place. Work effects are per tape: read under the head, write at the
/// same cell, then move.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Rule {
    pub source: StateId,
    /// `Some` iff the source state is sighted.
    pub input: Option<InputCell>,
    pub read: Vec<WorkSym>,
    pub target: StateId,
    pub write: Vec<WorkSym>,
    pub moves: Vec<Move>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateDecl {
    pub name: String,
    pub kind: StateKind,
}

/// An interned, ordered alphabet.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Alphabet {
    names: Vec<String>,
    index: HashMap<String, u16>,
}

impl Alphabet {
    fn new(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i as u16))
            .collect();
        Alphabet { names, index }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, idx: u16) -> &str {
        &self.names[idx as usize]
    }

    pub fn lookup(&self, name: &str) -> Option<u16> {
        self.index.get(name).copied()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// A validated read-once Turing machine.
///
/// Construction canonicalizes the representation and enforces the model
/// invariants: exactly one accept and one reject state with no outgoing
/// rules (forward machines), a declared start state, alphabet and state
/// referential integrity, and at most one rule per key.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Machine {
    name: String,
    input_alphabet: Alphabet,
    work_alphabet: Alphabet,
    tape_count: usize,
    scan: Scan,
    states: Vec<StateDecl>,
    start: StateId,
    accept: StateId,
    reject: StateId,
    rules: Vec<Rule>,
    /// Forward key -> rule index; populated for forward machines.
    rule_lookup: HashMap<u64, u32>,
    /// Backward machines: (source, input code) -> canonical rule indices.
    group_lookup: HashMap<(StateId, u16), Vec<u32>>,
    /// Rule indices grouped by target state, for reverse analyses.
    by_target: HashMap<StateId, Vec<u32>>,
    /// Whether each state's outgoing rules consume an input symbol.
    source_reads_input: Vec<bool>,
}

const INPUT_BLANK_TOKEN: &str = "<";

/// Line-anchored syntax error in a machine description document.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("parse error at line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

/// A violated machine invariant, kept structured so reports can enumerate
/// every violation at once.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub struct ValidationError {
    pub violations: Vec<Violation>,
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "validation failed:")?;
        for v in &self.violations {
            write!(f, "\n  - {v}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MachineDefError {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Validation(#[from] ValidationError),
}

fn err(violations: Vec<Violation>) -> ValidationError {
    ValidationError { violations }
}

fn viol(message: impl Into<String>) -> Violation {
    Violation {
        message: message.into(),
    }
}

/// Raw machine parts before invariant checking; what the parser produces
/// and what [`Machine::build`] consumes.
#[derive(Debug, Clone)]
pub struct MachineParts {
    pub name: String,
    pub input_alphabet: Vec<String>,
    pub work_alphabet: Vec<String>,
    pub tape_count: usize,
    pub scan: Scan,
    pub states: Vec<StateDecl>,
    pub start_state: String,
    pub rules: Vec<RawRule>,
}

/// A rule with names not yet resolved against the rosters.
#[derive(Debug, Clone)]
pub struct RawRule {
    pub source: String,
    /// `None` for blind rules; `Some(None)` means the input blank.
    pub input: Option<Option<String>>,
    pub read: Vec<String>,
    pub target: String,
    pub write: Vec<String>,
    pub moves: Vec<Move>,
    pub line: usize,
}

impl Machine {
    /// Checks every invariant, canonicalizes, and builds lookup tables.
    pub fn build(parts: MachineParts) -> Result<Machine, ValidationError> {
        let mut violations = Vec::new();

        if parts.name.is_empty() {
            violations.push(viol("machine name must not be empty"));
        }
        if parts.tape_count == 0 {
            violations.push(viol("tape count must be at least 1"));
        }
        if parts.input_alphabet.is_empty() {
            violations.push(viol("input alphabet must not be empty"));
        }
        if parts.work_alphabet.is_empty() {
            violations.push(viol("work alphabet must declare at least the blank"));
        }
        for sym in parts.input_alphabet.iter().chain(&parts.work_alphabet) {
            if sym == INPUT_BLANK_TOKEN {
                violations.push(viol(format!(
                    "symbol `{INPUT_BLANK_TOKEN}` is reserved for the input blank"
                )));
            }
        }
        let mut seen = HashSet::new();
        for sym in &parts.input_alphabet {
            if !seen.insert(sym.clone()) {
                violations.push(viol(format!("duplicate input symbol `{sym}`")));
            }
        }
        seen.clear();
        for sym in &parts.work_alphabet {
            if !seen.insert(sym.clone()) {
                violations.push(viol(format!("duplicate work symbol `{sym}`")));
            }
        }

        let mut states = parts.states.clone();
        states.sort_by(|a, b| a.name.cmp(&b.name));
        states.dedup_by(|a, b| {
            if a.name == b.name {
                // keep first; report below
                true
            } else {
                false
            }
        });
        {
            let mut names = HashSet::new();
            for s in &parts.states {
                if !names.insert(s.name.clone()) {
                    violations.push(viol(format!("duplicate state `{}`", s.name)));
                }
            }
        }

        let accepts: Vec<_> = states
            .iter()
            .filter(|s| s.kind == StateKind::Accept)
            .collect();
        let rejects: Vec<_> = states
            .iter()
            .filter(|s| s.kind == StateKind::Reject)
            .collect();
        if accepts.len() != 1 {
            violations.push(viol(format!(
                "machine must declare exactly one accept state, found {}",
                accepts.len()
            )));
        }
        if rejects.len() != 1 {
            violations.push(viol(format!(
                "machine must declare exactly one reject state, found {}",
                rejects.len()
            )));
        }

        let state_index: HashMap<&str, u16> = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.name.as_str(), i as u16))
            .collect();

        let start = match state_index.get(parts.start_state.as_str()) {
            Some(&i) => StateId(i),
            None => {
                violations.push(viol(format!(
                    "start state `{}` is not in the roster",
                    parts.start_state
                )));
                StateId(0)
            }
        };

        let input_alphabet = Alphabet::new(parts.input_alphabet);
        let work_alphabet = Alphabet::new(parts.work_alphabet);

        // Size limits keep rule keys packable into a u64.
        if states.len() > u16::MAX as usize - 2 {
            violations.push(viol("too many states"));
        }
        if input_alphabet.len() > u16::MAX as usize - 2 {
            violations.push(viol("input alphabet too large"));
        }
        let mut combos: u64 = 1;
        for _ in 0..parts.tape_count {
            combos = combos.saturating_mul(work_alphabet.len() as u64);
            if combos > u32::MAX as u64 {
                violations.push(viol(
                    "work alphabet and tape count too large: |phi|^k must fit in 32 bits",
                ));
                break;
            }
        }

        let mut rules = Vec::new();
        for raw in &parts.rules {
            let mut bad = false;
            let source = match state_index.get(raw.source.as_str()) {
                Some(&i) => StateId(i),
                None => {
                    violations.push(viol(format!(
                        "line {}: unknown state `{}`",
                        raw.line, raw.source
                    )));
                    bad = true;
                    StateId(0)
                }
            };
            let target = match state_index.get(raw.target.as_str()) {
                Some(&i) => StateId(i),
                None => {
                    violations.push(viol(format!(
                        "line {}: unknown state `{}`",
                        raw.line, raw.target
                    )));
                    bad = true;
                    StateId(0)
                }
            };
            let input = match &raw.input {
                None => None,
                Some(None) => Some(InputCell::Blank),
                Some(Some(sym)) => match input_alphabet.lookup(sym) {
                    Some(i) => Some(InputCell::Sym(InputSym(i))),
                    None => {
                        violations.push(viol(format!(
                            "line {}: symbol not in alphabet: input symbol `{sym}`",
                            raw.line
                        )));
                        bad = true;
                        None
                    }
                },
            };
            let mut resolve_work = |syms: &[String], what: &str, bad: &mut bool| -> Vec<WorkSym> {
                if syms.len() != parts.tape_count {
                    violations.push(viol(format!(
                        "line {}: {what} lists {} symbols for {} tapes",
                        raw.line,
                        syms.len(),
                        parts.tape_count
                    )));
                    *bad = true;
                    return vec![WorkSym::BLANK; parts.tape_count];
                }
                syms.iter()
                    .map(|s| match work_alphabet.lookup(s) {
                        Some(i) => WorkSym(i),
                        None => {
                            violations.push(viol(format!(
                                "line {}: symbol not in alphabet: work symbol `{s}`",
                                raw.line
                            )));
                            *bad = true;
                            WorkSym::BLANK
                        }
                    })
                    .collect()
            };
            let read = resolve_work(&raw.read, "read vector", &mut bad);
            let write = resolve_work(&raw.write, "write vector", &mut bad);
            if raw.moves.len() != parts.tape_count {
                violations.push(viol(format!(
                    "line {}: move vector lists {} moves for {} tapes",
                    raw.line,
                    raw.moves.len(),
                    parts.tape_count
                )));
                bad = true;
            }
            if bad {
                continue;
            }

            let kind = states[source.0 as usize].kind;
            // Halting states in backward machines carry outgoing rules (that
            // is where reversals begin), so their input-presence is governed
            // by group consistency instead of the declared kind.
            if !(parts.scan == Scan::Backward && kind.is_halting()) {
                match kind {
                    StateKind::Sighted if input.is_none() => {
                        violations.push(viol(format!(
                            "line {}: sighted state `{}` requires an input symbol in its rules",
                            raw.line, raw.source
                        )));
                        continue;
                    }
                    StateKind::Blind if input.is_some() => {
                        violations.push(viol(format!(
                            "line {}: blind state `{}` must not read an input symbol",
                            raw.line, raw.source
                        )));
                        continue;
                    }
                    _ => {}
                }
            }
            if parts.scan == Scan::Forward && kind.is_halting() {
                violations.push(viol(format!(
                    "line {}: halting state `{}` must have no outgoing rules",
                    raw.line, raw.source
                )));
                continue;
            }

            rules.push(Rule {
                source,
                input,
                read,
                target,
                write,
                moves: raw.moves.clone(),
            });
        }

        if parts.scan == Scan::Backward {
            // Dual invariant under rule inversion: the forward machine's
            // halting states had no outgoing rules, so their images — the
            // backward start and the reject state — have no incoming ones.
            // The accept-labeled state is where reversals end (by getting
            // stuck) and is entered freely.
            let reject_id = rejects
                .first()
                .and_then(|r| state_index.get(r.name.as_str()))
                .map(|&i| StateId(i));
            for r in &rules {
                if r.target == start || Some(r.target) == reject_id {
                    violations.push(viol(format!(
                        "backward machine: state `{}` must have no incoming rules",
                        states[r.target.0 as usize].name
                    )));
                }
            }
        }

        if !violations.is_empty() {
            return Err(err(violations));
        }

        let accept = StateId(state_index[accepts[0].name.as_str()]);
        let reject = StateId(state_index[rejects[0].name.as_str()]);

        let mut machine = Machine {
            name: parts.name,
            input_alphabet,
            work_alphabet,
            tape_count: parts.tape_count,
            scan: parts.scan,
            states,
            start,
            accept,
            reject,
            rules,
            rule_lookup: HashMap::new(),
            group_lookup: HashMap::new(),
            by_target: HashMap::new(),
            source_reads_input: Vec::new(),
        };
        let mut sorted_rules = std::mem::take(&mut machine.rules);
        sorted_rules.sort_by_cached_key(|r| render_rule(&machine, r));
        machine.rules = sorted_rules;

        // Determinism: at most one rule per key.
        let mut keys = HashMap::new();
        for (i, r) in machine.rules.iter().enumerate() {
            let key = machine.pack_key(r.source, r.input, &r.read);
            if let Some(prev) = keys.insert(key, i) {
                violations.push(viol(format!(
                    "duplicate rule for key: `{}` conflicts with `{}`",
                    render_rule(&machine, &machine.rules[i]),
                    render_rule(&machine, &machine.rules[prev]),
                )));
            }
        }
        if machine.scan == Scan::Backward {
            violations.extend(backward_determinism_violations(&machine));
        }
        if !violations.is_empty() {
            return Err(err(violations));
        }

        machine.rule_lookup = keys.into_iter().map(|(k, v)| (k, v as u32)).collect();
        let mut groups: HashMap<(StateId, u16), Vec<u32>> = HashMap::new();
        let mut by_target: HashMap<StateId, Vec<u32>> = HashMap::new();
        let mut reads_input = vec![false; machine.states.len()];
        for (i, r) in machine.rules.iter().enumerate() {
            groups
                .entry((r.source, input_code(r.input)))
                .or_default()
                .push(i as u32);
            by_target.entry(r.target).or_default().push(i as u32);
            if r.input.is_some() {
                reads_input[r.source.0 as usize] = true;
            }
        }
        machine.group_lookup = groups;
        machine.by_target = by_target;
        machine.source_reads_input = reads_input;
        Ok(machine)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn input_alphabet(&self) -> &Alphabet {
        &self.input_alphabet
    }

    pub fn work_alphabet(&self) -> &Alphabet {
        &self.work_alphabet
    }

    pub fn tape_count(&self) -> usize {
        self.tape_count
    }

    pub fn scan(&self) -> Scan {
        self.scan
    }

    pub fn states(&self) -> &[StateDecl] {
        &self.states
    }

    pub fn state_name(&self, id: StateId) -> &str {
        &self.states[id.0 as usize].name
    }

    pub fn state_kind(&self, id: StateId) -> StateKind {
        self.states[id.0 as usize].kind
    }

    pub fn state_by_name(&self, name: &str) -> Option<StateId> {
        self.states
            .iter()
            .position(|s| s.name == name)
            .map(|i| StateId(i as u16))
    }

    pub fn start_state(&self) -> StateId {
        self.start
    }

    pub fn accept_state(&self) -> StateId {
        self.accept
    }

    pub fn reject_state(&self) -> StateId {
        self.reject
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// 1-based identifier of a rule by canonical position.
    pub fn rule_id(&self, index: usize) -> RuleId {
        RuleId(index as u32 + 1)
    }

    pub fn rule_by_id(&self, id: RuleId) -> &Rule {
        &self.rules[(id.0 - 1) as usize]
    }

    pub fn rules_into(&self, target: StateId) -> &[u32] {
        self.by_target
            .get(&target)
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    pub fn rules_from_group(&self, source: StateId, input: Option<InputCell>) -> &[u32] {
        self.group_lookup
            .get(&(source, input_code(input)))
            .map(Vec::as_slice)
            .unwrap_or(&[])
    }

    /// Whether the state's outgoing rules consume an input symbol. For
    /// forward machines this matches the sighted kind; for backward
    /// machines it also covers halting-labeled states that reversals pass
    /// through.
    pub fn source_reads_input(&self, state: StateId) -> bool {
        self.source_reads_input[state.0 as usize]
    }

    fn pack_key(&self, source: StateId, input: Option<InputCell>, read: &[WorkSym]) -> u64 {
        let mut work: u64 = 0;
        for w in read {
            work = work * self.work_alphabet.len() as u64 + w.0 as u64;
        }
        ((source.0 as u64) << 48) | ((input_code(input) as u64) << 32) | work
    }

    /// Looks up the unique rule matching a forward key, if any.
    pub fn lookup_rule(
        &self,
        source: StateId,
        input: Option<InputCell>,
        read: &[WorkSym],
    ) -> Option<u32> {
        self.rule_lookup
            .get(&self.pack_key(source, input, read))
            .copied()
    }

    /// Parses a string of single-character symbol names into input symbols.
    pub fn encode_input(&self, text: &str) -> Result<Vec<InputSym>, InputAlphabetError> {
        text.chars()
            .enumerate()
            .map(|(i, c)| {
                self.input_alphabet
                    .lookup(&c.to_string())
                    .map(InputSym)
                    .ok_or(InputAlphabetError {
                        position: i + 1,
                        symbol: c.to_string(),
                    })
            })
            .collect()
    }

    pub fn decode_input(&self, syms: &[InputSym]) -> String {
        syms.iter()
            .map(|s| self.input_alphabet.name(s.0))
            .collect::<Vec<_>>()
            .join("")
    }
}

/// An input symbol outside the machine's alphabet, 1-based position.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
#[error("input symbol `{symbol}` at position {position} is not in the machine's alphabet")]
pub struct InputAlphabetError {
    pub position: usize,
    pub symbol: String,
}

fn input_code(input: Option<InputCell>) -> u16 {
    match input {
        None => 0,
        Some(InputCell::Blank) => 1,
        Some(InputCell::Sym(InputSym(i))) => i + 2,
    }
}

/// Backward machines decode a step by repeatedly un-moving the tapes on
/// which every surviving candidate rule agrees, reading those cells, and
/// narrowing the candidate set; the group must also agree on whether it
/// consumes an input symbol. This check rejects machines whose groups
/// cannot be narrowed to a single rule that way.
fn backward_determinism_violations(m: &Machine) -> Vec<Violation> {
    let mut violations = Vec::new();
    let mut by_source: HashMap<StateId, Vec<&Rule>> = HashMap::new();
    let mut groups: HashMap<(StateId, u16), Vec<&Rule>> = HashMap::new();
    for r in &m.rules {
        by_source.entry(r.source).or_default().push(r);
        groups
            .entry((r.source, input_code(r.input)))
            .or_default()
            .push(r);
    }
    for (state, rules) in &by_source {
        if rules.iter().any(|r| r.input.is_some()) && rules.iter().any(|r| r.input.is_none()) {
            violations.push(viol(format!(
                "backward machine: state `{}` mixes input-consuming and blind rules",
                m.state_name(*state)
            )));
        }
    }
    for ((state, _), rules) in groups {
        if !group_decodable(&rules, &mut vec![false; m.tape_count]) {
            violations.push(viol(format!(
                "backward machine: rules from `{}` on the same input symbol cannot be \
                 decoded by shared-move reads",
                m.state_name(state)
            )));
        }
    }
    violations
}

fn group_decodable(rules: &[&Rule], covered: &mut Vec<bool>) -> bool {
    if rules.len() <= 1 {
        return true;
    }
    let tapes = covered.len();
    let shared: Vec<usize> = (0..tapes)
        .filter(|&t| !covered[t] && rules.iter().all(|r| r.moves[t] == rules[0].moves[t]))
        .collect();
    if shared.is_empty() {
        return false;
    }
    let mut classes: HashMap<Vec<WorkSym>, Vec<&Rule>> = HashMap::new();
    for r in rules {
        let key: Vec<WorkSym> = shared.iter().map(|&t| r.read[t]).collect();
        classes.entry(key).or_default().push(r);
    }
    if classes.len() == 1 {
        return false;
    }
    for &t in &shared {
        covered[t] = true;
    }
    let ok = classes
        .values()
        .all(|class| group_decodable(class, covered));
    for &t in &shared {
        covered[t] = false;
    }
    ok
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

fn parse_err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

fn symbol_token_ok(tok: &str) -> bool {
    !tok.is_empty()
        && tok != "->"
        && tok != INPUT_BLANK_TOKEN
        && !tok.contains(['[', ']', '#'])
        && !tok.chars().any(char::is_whitespace)
}

/// Parses a machine description document.
///
/// Syntax violations come back as [`ParseError`] with the offending line;
/// semantic ones (alphabet membership, determinism, roster invariants) as
/// [`ValidationError`] via [`Machine::build`].
pub fn parse_machine(text: &str) -> Result<Machine, MachineDefError> {
    let parts = parse_parts(text)?;
    Ok(Machine::build(parts)?)
}

fn parse_parts(text: &str) -> Result<MachineParts, ParseError> {
    let mut name = None;
    let mut input_alphabet = None;
    let mut work_alphabet = None;
    let mut tape_count = None;
    let mut scan = Scan::Forward;
    let mut states = Vec::new();
    let mut start_state = None;
    let mut rules = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        match tokens[0] {
            "machine" => {
                if tokens.len() != 2 {
                    return Err(parse_err(lineno, "expected `machine <name>`"));
                }
                if name.replace(tokens[1].to_string()).is_some() {
                    return Err(parse_err(lineno, "duplicate `machine` line"));
                }
            }
            "input_alphabet:" => {
                let syms = parse_symbols(&tokens[1..], lineno)?;
                if input_alphabet.replace(syms).is_some() {
                    return Err(parse_err(lineno, "duplicate `input_alphabet:` line"));
                }
            }
            "work_alphabet:" => {
                let syms = parse_symbols(&tokens[1..], lineno)?;
                if work_alphabet.replace(syms).is_some() {
                    return Err(parse_err(lineno, "duplicate `work_alphabet:` line"));
                }
            }
            "tapes:" => {
                if tokens.len() != 2 {
                    return Err(parse_err(lineno, "expected `tapes: <count>`"));
                }
                let n: usize = tokens[1]
                    .parse()
                    .map_err(|_| parse_err(lineno, "tape count must be a positive integer"))?;
                if tape_count.replace(n).is_some() {
                    return Err(parse_err(lineno, "duplicate `tapes:` line"));
                }
            }
            "scan:" => {
                if tokens.len() != 2 {
                    return Err(parse_err(lineno, "expected `scan: forward|backward`"));
                }
                scan = match tokens[1] {
                    "forward" => Scan::Forward,
                    "backward" => Scan::Backward,
                    other => {
                        return Err(parse_err(
                            lineno,
                            format!("unknown scan direction `{other}`"),
                        ))
                    }
                };
            }
            "state" => {
                if tokens.len() < 3 || tokens.len() > 4 {
                    return Err(parse_err(
                        lineno,
                        "expected `state <name> <sighted|blind|accept|reject> [start]`",
                    ));
                }
                let kind = match tokens[2] {
                    "sighted" => StateKind::Sighted,
                    "blind" => StateKind::Blind,
                    "accept" => StateKind::Accept,
                    "reject" => StateKind::Reject,
                    other => {
                        return Err(parse_err(lineno, format!("unknown state kind `{other}`")))
                    }
                };
                if tokens.len() == 4 {
                    if tokens[3] != "start" {
                        return Err(parse_err(
                            lineno,
                            format!("unexpected token `{}` after state kind", tokens[3]),
                        ));
                    }
                    if start_state.replace(tokens[1].to_string()).is_some() {
                        return Err(parse_err(lineno, "multiple states marked `start`"));
                    }
                }
                states.push(StateDecl {
                    name: tokens[1].to_string(),
                    kind,
                });
            }
            "rule" => {
                rules.push(parse_rule(&tokens[1..], lineno)?);
            }
            other => {
                return Err(parse_err(lineno, format!("unknown directive `{other}`")));
            }
        }
    }

    let last = text.lines().count().max(1);
    let name = name.ok_or_else(|| parse_err(1, "missing `machine <name>` declaration"))?;
    Ok(MachineParts {
        name,
        input_alphabet: input_alphabet
            .ok_or_else(|| parse_err(last, "missing `input_alphabet:` line"))?,
        work_alphabet: work_alphabet
            .ok_or_else(|| parse_err(last, "missing `work_alphabet:` line"))?,
        tape_count: tape_count.ok_or_else(|| parse_err(last, "missing `tapes:` line"))?,
        scan,
        states,
        start_state: start_state.ok_or_else(|| parse_err(last, "no state marked `start`"))?,
        rules,
    })
}

fn parse_symbols(tokens: &[&str], lineno: usize) -> Result<Vec<String>, ParseError> {
    if tokens.is_empty() {
        return Err(parse_err(lineno, "alphabet must list at least one symbol"));
    }
    tokens
        .iter()
        .map(|t| {
            if symbol_token_ok(t) {
                Ok(t.to_string())
            } else {
                Err(parse_err(lineno, format!("invalid symbol token `{t}`")))
            }
        })
        .collect()
}

/// `rule SRC [INPUTSYM] [r1 .. rk] -> TGT [w1 .. wk] [m1 .. mk]`
fn parse_rule(tokens: &[&str], lineno: usize) -> Result<RawRule, ParseError> {
    let mut toks = tokens.iter().peekable();
    let source = toks
        .next()
        .ok_or_else(|| parse_err(lineno, "rule missing source state"))?
        .to_string();

    let input = match toks.peek() {
        Some(&&t) if !t.starts_with('[') => {
            toks.next();
            if t == INPUT_BLANK_TOKEN {
                Some(None)
            } else if symbol_token_ok(t) {
                Some(Some(t.to_string()))
            } else {
                return Err(parse_err(lineno, format!("invalid input symbol `{t}`")));
            }
        }
        _ => None,
    };

    let mut rest: Vec<&str> = toks.copied().collect();
    let read = take_bracket_group(&mut rest, lineno)?;
    if rest.first() != Some(&"->") {
        return Err(parse_err(lineno, "expected `->` after read vector"));
    }
    rest.remove(0);
    let target = rest
        .first()
        .copied()
        .ok_or_else(|| parse_err(lineno, "rule missing target state"))?
        .to_string();
    rest.remove(0);
    let write = take_bracket_group(&mut rest, lineno)?;
    let moves_raw = take_bracket_group(&mut rest, lineno)?;
    if !rest.is_empty() {
        return Err(parse_err(
            lineno,
            format!(
                "unexpected trailing tokens after rule: `{}`",
                rest.join(" ")
            ),
        ));
    }
    let moves = moves_raw
        .iter()
        .map(|m| match m.as_str() {
            "L" => Ok(Move::Left),
            "S" => Ok(Move::Stay),
            "R" => Ok(Move::Right),
            other => Err(parse_err(
                lineno,
                format!("invalid move `{other}` (expected L, S, or R)"),
            )),
        })
        .collect::<Result<Vec<_>, _>>()?;

    for s in read.iter().chain(&write) {
        if !symbol_token_ok(s) {
            return Err(parse_err(lineno, format!("invalid symbol token `{s}`")));
        }
    }

    Ok(RawRule {
        source,
        input,
        read,
        target,
        write,
        moves,
        line: lineno,
    })
}

/// Pops one `[a b c]` group off the front of the token list. The brackets
/// may be glued to the first/last element.
fn take_bracket_group(rest: &mut Vec<&str>, lineno: usize) -> Result<Vec<String>, ParseError> {
    let first = rest
        .first()
        .copied()
        .ok_or_else(|| parse_err(lineno, "expected `[...]` group"))?;
    if !first.starts_with('[') {
        return Err(parse_err(
            lineno,
            format!("expected `[...]` group, found `{first}`"),
        ));
    }
    let mut items = Vec::new();
    let mut closed = false;
    while let Some(tok) = rest.first().copied() {
        rest.remove(0);
        let mut t = tok;
        if items.is_empty() && t.starts_with('[') {
            t = &t[1..];
        }
        if t.ends_with(']') {
            t = &t[..t.len() - 1];
            closed = true;
        }
        if !t.is_empty() {
            items.push(t.to_string());
        }
        if closed {
            break;
        }
    }
    if !closed {
        return Err(parse_err(lineno, "unterminated `[...]` group"));
    }
    Ok(items)
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

fn render_input_cell(m: &Machine, cell: InputCell) -> String {
    match cell {
        InputCell::Blank => INPUT_BLANK_TOKEN.to_string(),
        InputCell::Sym(s) => m.input_alphabet.name(s.0).to_string(),
    }
}

fn render_work_group(m: &Machine, syms: &[WorkSym]) -> String {
    let names: Vec<&str> = syms.iter().map(|w| m.work_alphabet.name(w.0)).collect();
    format!("[{}]", names.join(" "))
}

fn render_moves(moves: &[Move]) -> String {
    let names: Vec<&str> = moves.iter().map(|mv| mv.letter()).collect();
    format!("[{}]", names.join(" "))
}

pub fn render_rule(m: &Machine, r: &Rule) -> String {
    let mut out = format!("rule {}", m.state_name(r.source));
    if let Some(cell) = r.input {
        out.push(' ');
        out.push_str(&render_input_cell(m, cell));
    }
    out.push(' ');
    out.push_str(&render_work_group(m, &r.read));
    out.push_str(" -> ");
    out.push_str(m.state_name(r.target));
    out.push(' ');
    out.push_str(&render_work_group(m, &r.write));
    out.push(' ');
    out.push_str(&render_moves(&r.moves));
    out
}

/// Canonical serialization: header, sorted states, sorted rules.
pub fn serialize_machine(m: &Machine) -> String {
    let mut out = String::new();
    out.push_str(&format!("machine {}\n", m.name));
    out.push_str(&format!(
        "input_alphabet: {}\n",
        m.input_alphabet.names().join(" ")
    ));
    out.push_str(&format!(
        "work_alphabet: {}\n",
        m.work_alphabet.names().join(" ")
    ));
    out.push_str(&format!("tapes: {}\n", m.tape_count));
    if m.scan == Scan::Backward {
        out.push_str("scan: backward\n");
    }
    for (i, s) in m.states.iter().enumerate() {
        out.push_str(&format!("state {} {}", s.name, s.kind.keyword()));
        if StateId(i as u16) == m.start {
            out.push_str(" start");
        }
        out.push('\n');
    }
    for r in &m.rules {
        out.push_str(&render_rule(m, r));
        out.push('\n');
    }
    out
}

// ---------------------------------------------------------------------------
// Configurations and dynamic parts
// ---------------------------------------------------------------------------

/// Outcome flag carried by a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Outcome {
    Running,
    Accepted,
    Rejected,
}

/// One work tape: finite contents with implicit blank extension, head at a
/// 1-based position. Contents are kept trimmed of trailing blanks so value
/// equality is canonical.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Tape {
    pub cells: Vec<WorkSym>,
    pub head: u32,
}

impl Tape {
    pub fn blank() -> Tape {
        Tape {
            cells: Vec::new(),
            head: 1,
        }
    }

    pub fn read(&self, pos: u32) -> WorkSym {
        debug_assert!(pos >= 1);
        self.cells
            .get(pos as usize - 1)
            .copied()
            .unwrap_or(WorkSym::BLANK)
    }

    pub fn write(&mut self, pos: u32, sym: WorkSym) {
        debug_assert!(pos >= 1);
        let idx = pos as usize - 1;
        if idx >= self.cells.len() {
            if sym.is_blank() {
                return;
            }
            self.cells.resize(idx + 1, WorkSym::BLANK);
        }
        self.cells[idx] = sym;
        self.trim();
    }

    fn trim(&mut self) {
        while self.cells.last() == Some(&WorkSym::BLANK) {
            self.cells.pop();
        }
    }

    pub fn non_blank_cells(&self) -> usize {
        self.cells.iter().filter(|c| !c.is_blank()).count()
    }
}

/// Full instantaneous description of a run, bound to one input string
/// (the input itself is passed alongside, never stored).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Configuration {
    pub state: StateId,
    pub input_head: u32,
    pub tapes: Vec<Tape>,
    pub outcome: Outcome,
}

impl Configuration {
    pub fn is_halted(&self) -> bool {
        self.outcome != Outcome::Running
    }
}

/// The configuration minus the input string: the unit of garbage
/// accounting. Trailing blanks are trimmed and heads retained, so equal
/// dynamic parts compare equal no matter how the source configurations
/// were padded.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DynamicPart {
    pub state: StateId,
    pub input_head: u32,
    pub tapes: Vec<Tape>,
}

/// Canonical projection of a configuration onto its dynamic part.
pub fn dynamic_part_of(config: &Configuration) -> DynamicPart {
    let mut tapes = config.tapes.clone();
    for t in &mut tapes {
        t.trim();
    }
    DynamicPart {
        state: config.state,
        input_head: config.input_head,
        tapes,
    }
}

/// The input position a dynamic part is about to read.
pub fn focus_of(dp: &DynamicPart) -> u32 {
    dp.input_head
}

/// Serializable view of a dynamic part with symbol and state names resolved.
#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct DynamicPartView {
    pub state: String,
    pub input_head: u32,
    pub tapes: Vec<TapeView>,
}

#[derive(Debug, Clone, Serialize, PartialEq, Eq)]
pub struct TapeView {
    pub cells: Vec<String>,
    pub head: u32,
}

impl DynamicPartView {
    pub fn new(m: &Machine, dp: &DynamicPart) -> Self {
        DynamicPartView {
            state: m.state_name(dp.state).to_string(),
            input_head: dp.input_head,
            tapes: dp
                .tapes
                .iter()
                .map(|t| TapeView {
                    cells: t
                        .cells
                        .iter()
                        .map(|c| m.work_alphabet.name(c.0).to_string())
                        .collect(),
                    head: t.head,
                })
                .collect(),
        }
    }
}

// ---------------------------------------------------------------------------
// Validation reports
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ValidateMode {
    Strict,
    Lenient,
}

/// Coverage and hygiene report for a parsed machine.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub machine: String,
    pub mode: ValidateMode,
    pub valid: bool,
    /// Transition keys with a rule, out of all keys the model admits.
    pub covered_keys: u64,
    pub total_keys: u64,
    pub missing: Vec<String>,
    pub duplicates: Vec<String>,
    pub unreachable_states: Vec<String>,
    pub warnings: Vec<String>,
}

/// Checks delta-totality and reports hygiene findings.
///
/// Strict mode errors when any key over (sighted x input-or-blank x Phi^k)
/// or (blind x Phi^k) lacks a rule; lenient mode reports the coverage and
/// warns. Undefined keys halt-reject at run time, which is a hidden
/// many-to-one hazard for reversibility accounting, hence the strict
/// default in the verification suites.
pub fn validate(
    machine: &Machine,
    mode: ValidateMode,
) -> Result<ValidationReport, ValidationError> {
    let k = machine.tape_count;
    let phi = machine.work_alphabet.len() as u64;
    let combos = phi.pow(k as u32);

    let mut missing = Vec::new();
    let mut covered: u64 = 0;
    let mut total: u64 = 0;

    let input_cells: Vec<Option<InputCell>> = std::iter::once(Some(InputCell::Blank))
        .chain((0..machine.input_alphabet.len() as u16).map(|i| Some(InputCell::Sym(InputSym(i)))))
        .collect();

    for (si, s) in machine.states.iter().enumerate() {
        let state = StateId(si as u16);
        let cells: &[Option<InputCell>] = match s.kind {
            StateKind::Sighted => &input_cells,
            StateKind::Blind => &[None],
            _ => continue,
        };
        for cell in cells {
            for combo in 0..combos {
                total += 1;
                let read = unpack_combo(combo, phi, k);
                if machine.lookup_rule(state, *cell, &read).is_some() {
                    covered += 1;
                } else {
                    let cell_txt = match cell {
                        None => String::new(),
                        Some(c) => format!("{}, ", render_input_cell(machine, *c)),
                    };
                    missing.push(format!(
                        "missing rule ({}, {}{})",
                        s.name,
                        cell_txt,
                        render_work_group(machine, &read)
                    ));
                }
            }
        }
    }

    let mut warnings = Vec::new();
    let unreachable = unreachable_states(machine);
    for s in &unreachable {
        warnings.push(format!("state `{s}` is unreachable from the start state"));
    }
    if machine.tape_count >= 2 && machine.scan == Scan::Forward {
        let out_tape = machine.tape_count - 1;
        for r in &machine.rules {
            if r.moves[out_tape] == Move::Left {
                warnings.push(format!(
                    "output tape head moves left in `{}`; designated output tapes are \
                     conventionally write-forward",
                    render_rule(machine, r)
                ));
            }
        }
    }
    if !missing.is_empty() && mode == ValidateMode::Lenient {
        warnings.push(format!(
            "transition function is partial ({covered}/{total} keys); undefined keys halt-reject"
        ));
    }

    if mode == ValidateMode::Strict && !missing.is_empty() {
        return Err(err(missing.into_iter().map(viol).collect()));
    }

    Ok(ValidationReport {
        machine: machine.name.clone(),
        mode,
        valid: true,
        covered_keys: covered,
        total_keys: total,
        missing,
        duplicates: Vec::new(),
        unreachable_states: unreachable,
        warnings,
    })
}

fn unpack_combo(mut combo: u64, phi: u64, k: usize) -> Vec<WorkSym> {
    let mut read = vec![WorkSym::BLANK; k];
    for i in (0..k).rev() {
        read[i] = WorkSym((combo % phi) as u16);
        combo /= phi;
    }
    read
}

fn unreachable_states(machine: &Machine) -> Vec<String> {
    let mut reachable = HashSet::new();
    let mut stack = vec![machine.start];
    while let Some(s) = stack.pop() {
        if !reachable.insert(s) {
            continue;
        }
        for r in machine.rules() {
            if r.source == s && !reachable.contains(&r.target) {
                stack.push(r.target);
            }
        }
    }
    machine
        .states
        .iter()
        .enumerate()
        .filter(|(i, _)| !reachable.contains(&StateId(*i as u16)))
        .map(|(_, s)| s.name.clone())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;

    #[test]
    fn parses_machine_n() {
        let m = corpus::machine_n();
        assert_eq!(m.name(), "N");
        assert_eq!(m.states().len(), 3);
        assert_eq!(m.rules().len(), 3);
        assert_eq!(
            m.input_alphabet().names(),
            &["a".to_string(), "b".to_string()]
        );
        assert_eq!(m.work_alphabet().len(), 1);
        assert_eq!(m.tape_count(), 1);
        let q0 = m.state_by_name("q0").unwrap();
        assert_eq!(m.state_kind(q0), StateKind::Sighted);
        assert_eq!(m.start_state(), q0);
    }

    #[test]
    fn empty_document_is_a_parse_error_at_line_1() {
        match parse_machine("") {
            Err(MachineDefError::Parse(e)) => assert_eq!(e.line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn undeclared_symbol_is_a_validation_error() {
        let text = "\
machine bad
input_alphabet: a b
work_alphabet: _
tapes: 1
state q0 sighted start
state acc accept
state rej reject
rule q0 c [_] -> acc [_] [S]
";
        match parse_machine(text) {
            Err(MachineDefError::Validation(e)) => {
                assert!(e
                    .violations
                    .iter()
                    .any(|v| v.message.contains("symbol not in alphabet")));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_rule_key_is_rejected() {
        let text = "\
machine dup
input_alphabet: a
work_alphabet: _
tapes: 1
state q0 sighted start
state acc accept
state rej reject
rule q0 a [_] -> acc [_] [S]
rule q0 a [_] -> rej [_] [S]
";
        match parse_machine(text) {
            Err(MachineDefError::Validation(e)) => {
                assert!(e
                    .violations
                    .iter()
                    .any(|v| v.message.contains("duplicate rule")));
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn halting_state_with_outgoing_rule_is_rejected() {
        let text = "\
machine bad
input_alphabet: a
work_alphabet: _
tapes: 1
state q0 sighted start
state acc accept
state rej reject
rule acc a [_] -> q0 [_] [S]
";
        assert!(matches!(
            parse_machine(text),
            Err(MachineDefError::Validation(_))
        ));
    }

    #[test]
    fn round_trip_is_canonical() {
        let m = corpus::machine_n();
        let text = serialize_machine(&m);
        let m2 = parse_machine(&text).unwrap();
        assert_eq!(m, m2);
        assert_eq!(serialize_machine(&m2), text);
    }

    #[test]
    fn validate_n_strict_covers_all_three_keys() {
        let m = corpus::machine_n();
        let report = validate(&m, ValidateMode::Strict).unwrap();
        assert!(report.valid);
        assert_eq!(report.covered_keys, 3);
        assert_eq!(report.total_keys, 3);
        assert!(report.missing.is_empty());
    }

    #[test]
    fn validate_strict_names_the_missing_key() {
        let text = "\
machine N
input_alphabet: a b
work_alphabet: _
tapes: 1
state q0 sighted start
state acc accept
state rej reject
rule q0 a [_] -> acc [_] [S]
rule q0 < [_] -> rej [_] [S]
";
        let m = parse_machine(text).unwrap();
        let e = validate(&m, ValidateMode::Strict).unwrap_err();
        assert!(e
            .violations
            .iter()
            .any(|v| v.message == "missing rule (q0, b, [_])"));
        let report = validate(&m, ValidateMode::Lenient).unwrap();
        assert!(report.valid);
        assert_eq!(report.covered_keys, 2);
        assert_eq!(report.total_keys, 3);
        assert!(!report.warnings.is_empty());
    }

    #[test]
    fn dynamic_part_trims_trailing_blanks() {
        let config = Configuration {
            state: StateId(0),
            input_head: 4,
            tapes: vec![Tape {
                cells: vec![WorkSym::BLANK, WorkSym::BLANK],
                head: 1,
            }],
            outcome: Outcome::Accepted,
        };
        let dp = dynamic_part_of(&config);
        assert!(dp.tapes[0].cells.is_empty());
        assert_eq!(dp.tapes[0].head, 1);
        assert_eq!(focus_of(&dp), 4);
    }

    #[test]
    fn dynamic_parts_differ_on_input_head() {
        let mk = |head| Configuration {
            state: StateId(1),
            input_head: head,
            tapes: vec![Tape::blank()],
            outcome: Outcome::Running,
        };
        assert_ne!(dynamic_part_of(&mk(2)), dynamic_part_of(&mk(3)));
    }
}
