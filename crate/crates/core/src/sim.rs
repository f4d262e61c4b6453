//! Step-exact execution of machines, trace production, and configuration
//! predecessor enumeration.
//!
//! All functions here are pure in their arguments; runs with identical
//! arguments produce identical results, traces included.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::machine::{
    dynamic_part_of, Configuration, InputAlphabetError, InputCell, InputSym, Machine, Move,
    Outcome, RuleId, Scan, StateKind, Tape,
};

/// Default step budget for `run`.
pub const DEFAULT_MAX_STEPS: u64 = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum RunOutcome {
    Accepted,
    Rejected,
    Timeout,
    /// Backward execution only: no rule applies and the machine is not at
    /// its accept-labeled state.
    Stuck,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceEntry {
    pub config: Configuration,
    /// Rule that produced this configuration; `None` for the initial entry
    /// and for implicit rejections on undefined keys.
    pub rule: Option<RuleId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub outcome: RunOutcome,
    pub final_config: Configuration,
    pub steps: u64,
    pub trace: Option<Vec<TraceEntry>>,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    InputAlphabet(#[from] InputAlphabetError),
    #[error("configuration is already halted")]
    Halted,
}

/// Start-of-run configuration: start state, input head at 1, all work
/// tapes blank with heads at 1.
pub fn initial_configuration(machine: &Machine, input: &[InputSym]) -> Configuration {
    let _ = input;
    let outcome = outcome_for(machine, machine.start_state());
    Configuration {
        state: machine.start_state(),
        input_head: 1,
        tapes: vec![Tape::blank(); machine.tape_count()],
        outcome,
    }
}

fn outcome_for(machine: &Machine, state: crate::machine::StateId) -> Outcome {
    if state == machine.accept_state() {
        Outcome::Accepted
    } else if state == machine.reject_state() {
        Outcome::Rejected
    } else {
        Outcome::Running
    }
}

/// Reads the input cell under a 1-based position; cells past the end of
/// the string hold the input blank.
pub fn input_cell_at(input: &[InputSym], pos: u32) -> InputCell {
    debug_assert!(pos >= 1);
    match input.get(pos as usize - 1) {
        Some(&s) => InputCell::Sym(s),
        None => InputCell::Blank,
    }
}

/// Applies one transition in place. Returns the applied rule, or `None`
/// when an undefined key forced a halt-reject in place.
///
/// Semantics per step: sighted states read the input cell under the head
/// and advance it by one, blind states ignore the input and leave the head
/// alone. Work writes land under the heads, then the heads move; a move
/// off the left end of any work tape turns the step into a rejection with
/// that head clamped at 1. Transitions into halting states still perform
/// their writes and head movements.
pub fn step_mut(
    machine: &Machine,
    config: &mut Configuration,
    input: &[InputSym],
) -> Result<Option<RuleId>, SimError> {
    match machine.scan() {
        Scan::Forward => {
            if config.is_halted() {
                return Err(SimError::Halted);
            }
            Ok(step_forward(machine, config, input))
        }
        // Backward execution ignores the halted flag: reversals start from
        // halted forward configurations and terminate by getting stuck.
        Scan::Backward => Ok(step_backward(machine, config, input)),
    }
}

/// Pure variant of [`step_mut`]: returns the successor configuration.
pub fn step(
    machine: &Machine,
    config: &Configuration,
    input: &[InputSym],
) -> Result<(Configuration, Option<RuleId>), SimError> {
    let mut next = config.clone();
    let rule = step_mut(machine, &mut next, input)?;
    Ok((next, rule))
}

fn step_forward(
    machine: &Machine,
    config: &mut Configuration,
    input: &[InputSym],
) -> Option<RuleId> {
    let kind = machine.state_kind(config.state);
    let read_input = match kind {
        StateKind::Sighted => Some(input_cell_at(input, config.input_head)),
        _ => None,
    };
    let read_work: Vec<_> = config.tapes.iter().map(|t| t.read(t.head)).collect();

    let Some(rule_idx) = machine.lookup_rule(config.state, read_input, &read_work) else {
        // Undefined key: halt-reject in place.
        config.state = machine.reject_state();
        config.outcome = Outcome::Rejected;
        return None;
    };
    let rule = &machine.rules()[rule_idx as usize];

    let mut clamped = false;
    for (tape, (&w, &mv)) in config
        .tapes
        .iter_mut()
        .zip(rule.write.iter().zip(rule.moves.iter()))
    {
        let head = tape.head;
        tape.write(head, w);
        let new_head = head as i64 + mv.delta();
        if new_head < 1 {
            clamped = true;
            tape.head = 1;
        } else {
            tape.head = new_head as u32;
        }
    }
    if kind == StateKind::Sighted {
        config.input_head += 1;
    }
    config.state = if clamped {
        machine.reject_state()
    } else {
        rule.target
    };
    config.outcome = outcome_for(machine, config.state);
    Some(machine.rule_id(rule_idx as usize))
}

/// Backward step: selects among the rules out of the current state by the
/// input symbol one cell to the left (when the group consumes input) and
/// by the work cells at progressively un-moved head positions, narrowing
/// the candidate set until a single rule remains; then restores that
/// rule's read vector and retracts the input head. Returns `None` when no
/// rule applies (the machine is stuck, which is how backward runs
/// terminate).
fn step_backward(
    machine: &Machine,
    config: &mut Configuration,
    input: &[InputSym],
) -> Option<RuleId> {
    let reads_input = machine.source_reads_input(config.state);
    let group_input = if reads_input {
        if config.input_head <= 1 {
            // Nothing left to un-consume.
            stuck(machine, config);
            return None;
        }
        Some(input_cell_at(input, config.input_head - 1))
    } else {
        None
    };
    let mut candidates: Vec<u32> = machine.rules_from_group(config.state, group_input).to_vec();
    if candidates.is_empty() {
        stuck(machine, config);
        return None;
    }

    // Iteratively un-move the tapes on which every surviving candidate
    // agrees, read those cells, and keep the candidates that match.
    let tapes = config.tapes.len();
    let mut new_heads: Vec<Option<u32>> = vec![None; tapes];
    while new_heads.iter().any(Option::is_none) {
        let shared: Vec<usize> = (0..tapes)
            .filter(|&t| {
                new_heads[t].is_none()
                    && candidates.iter().all(|&i| {
                        machine.rules()[i as usize].moves[t]
                            == machine.rules()[candidates[0] as usize].moves[t]
                    })
            })
            .collect();
        if shared.is_empty() {
            // Undecodable from this configuration; validation rules this
            // out for reachable reversals.
            stuck(machine, config);
            return None;
        }
        for &t in &shared {
            let mv = machine.rules()[candidates[0] as usize].moves[t];
            let h = config.tapes[t].head as i64 + mv.delta();
            if h < 1 {
                stuck(machine, config);
                return None;
            }
            new_heads[t] = Some(h as u32);
        }
        candidates.retain(|&i| {
            let rule = &machine.rules()[i as usize];
            shared
                .iter()
                .all(|&t| config.tapes[t].read(new_heads[t].unwrap()) == rule.read[t])
        });
        if candidates.is_empty() {
            stuck(machine, config);
            return None;
        }
        if candidates.len() == 1 {
            break;
        }
    }

    let rule_idx = candidates[0];
    let rule = &machine.rules()[rule_idx as usize];
    // Finish un-moving for the selected rule and verify its full read.
    for (t, slot) in new_heads.iter_mut().enumerate() {
        if slot.is_none() {
            let h = config.tapes[t].head as i64 + rule.moves[t].delta();
            if h < 1 {
                stuck(machine, config);
                return None;
            }
            *slot = Some(h as u32);
        }
        if config.tapes[t].read(slot.unwrap()) != rule.read[t] {
            stuck(machine, config);
            return None;
        }
    }
    for (t, tape) in config.tapes.iter_mut().enumerate() {
        let h = new_heads[t].unwrap();
        tape.head = h;
        tape.write(h, rule.write[t]);
    }
    if reads_input {
        config.input_head -= 1;
    }
    config.state = rule.target;
    config.outcome = Outcome::Running;
    Some(machine.rule_id(rule_idx as usize))
}

fn stuck(machine: &Machine, config: &mut Configuration) {
    config.outcome = if config.state == machine.accept_state() {
        Outcome::Accepted
    } else {
        Outcome::Rejected
    };
}

/// Runs a machine to halt or `max_steps`, optionally recording the trace.
///
/// Forward machines halt by entering the accept or reject state. Backward
/// machines halt when no rule applies: at the accept-labeled state that is
/// a completed reversal (`Accepted`), anywhere else it is reported as
/// `Stuck`.
pub fn run(machine: &Machine, input: &[InputSym], max_steps: u64, want_trace: bool) -> RunResult {
    run_from(
        machine,
        initial_configuration(machine, input),
        input,
        max_steps,
        want_trace,
    )
}

/// As [`run`], but from an arbitrary starting configuration.
pub fn run_from(
    machine: &Machine,
    start: Configuration,
    input: &[InputSym],
    max_steps: u64,
    want_trace: bool,
) -> RunResult {
    let mut config = start;
    let mut steps = 0u64;
    let mut trace = want_trace.then(|| {
        vec![TraceEntry {
            config: config.clone(),
            rule: None,
        }]
    });

    let outcome = loop {
        if machine.scan() == Scan::Forward && config.is_halted() {
            break match config.outcome {
                Outcome::Accepted => RunOutcome::Accepted,
                Outcome::Rejected => RunOutcome::Rejected,
                Outcome::Running => unreachable!(),
            };
        }
        if steps >= max_steps {
            break RunOutcome::Timeout;
        }
        match machine.scan() {
            Scan::Forward => {
                let rule = step_forward(machine, &mut config, input);
                steps += 1;
                if let Some(t) = trace.as_mut() {
                    t.push(TraceEntry {
                        config: config.clone(),
                        rule,
                    });
                }
            }
            Scan::Backward => match step_backward(machine, &mut config, input) {
                Some(rule) => {
                    steps += 1;
                    if let Some(t) = trace.as_mut() {
                        t.push(TraceEntry {
                            config: config.clone(),
                            rule: Some(rule),
                        });
                    }
                }
                None => {
                    break if config.state == machine.accept_state() {
                        RunOutcome::Accepted
                    } else {
                        RunOutcome::Stuck
                    };
                }
            },
        }
    };

    RunResult {
        outcome,
        final_config: config,
        steps,
        trace,
    }
}

/// Runs a machine on a text input, validating the alphabet first.
pub fn run_on_text(
    machine: &Machine,
    input: &str,
    max_steps: u64,
    want_trace: bool,
) -> Result<RunResult, InputAlphabetError> {
    let syms = machine.encode_input(input)?;
    Ok(run(machine, &syms, max_steps, want_trace))
}

/// Every configuration (over the same input) that steps to `config`,
/// including ones unreachable from any initial configuration.
///
/// Candidates come from three families, each verified by replaying
/// [`step`]: per rule, the un-moved/un-written preimage; per rule with a
/// left move, the preimage whose head was clamped at the left end; and,
/// when `config` is in the reject state, the in-place implicit rejections
/// of undefined keys.
pub fn predecessors(
    machine: &Machine,
    config: &Configuration,
    input: &[InputSym],
) -> BTreeSet<Configuration> {
    assert_eq!(
        machine.scan(),
        Scan::Forward,
        "predecessors are defined for forward machines"
    );
    let mut found = BTreeSet::new();

    for (idx, rule) in machine.rules().iter().enumerate() {
        let _ = idx;
        let source_kind = machine.state_kind(rule.source);
        let prev_input_head = match source_kind {
            StateKind::Sighted => {
                if config.input_head < 2 {
                    continue;
                }
                let h = config.input_head - 1;
                if Some(input_cell_at(input, h)) != rule.input {
                    continue;
                }
                h
            }
            _ => config.input_head,
        };

        // Per tape: the ordinary un-move, plus the clamped branch when the
        // rule moves left and the head sits at the wall.
        let mut head_options: Vec<Vec<u32>> = Vec::with_capacity(machine.tape_count());
        let mut feasible = true;
        for (tape, &mv) in config.tapes.iter().zip(rule.moves.iter()) {
            let mut opts = Vec::with_capacity(2);
            let normal = tape.head as i64 - mv.delta();
            if normal >= 1 {
                opts.push(normal as u32);
            }
            if mv == Move::Left && tape.head == 1 {
                opts.push(1);
            }
            if opts.is_empty() {
                feasible = false;
                break;
            }
            opts.dedup();
            head_options.push(opts);
        }
        if !feasible {
            continue;
        }

        for combo in cartesian(&head_options) {
            let mut candidate = config.clone();
            candidate.state = rule.source;
            candidate.input_head = prev_input_head;
            candidate.outcome = Outcome::Running;
            let mut ok = true;
            for (t, (&h, tape)) in combo.iter().zip(candidate.tapes.iter_mut()).enumerate() {
                // The written cell sits at the pre-move head position.
                if tape.read(h) != rule.write[t] {
                    ok = false;
                    break;
                }
                tape.write(h, rule.read[t]);
                tape.head = h;
            }
            if !ok {
                continue;
            }
            if let Ok((next, _)) = step(machine, &candidate, input) {
                if &next == config {
                    found.insert(candidate);
                }
            }
        }
    }

    // Implicit rejections: same configuration, any non-halting state whose
    // key is undefined.
    if config.state == machine.reject_state() {
        for (i, decl) in machine.states().iter().enumerate() {
            if decl.kind.is_halting() {
                continue;
            }
            let mut candidate = config.clone();
            candidate.state = crate::machine::StateId(i as u16);
            candidate.outcome = Outcome::Running;
            if let Ok((next, rule)) = step(machine, &candidate, input) {
                if rule.is_none() && &next == config {
                    found.insert(candidate);
                }
            }
        }
    }

    found
}

fn cartesian(options: &[Vec<u32>]) -> Vec<Vec<u32>> {
    let mut acc = vec![Vec::new()];
    for opts in options {
        let mut next = Vec::with_capacity(acc.len() * opts.len());
        for prefix in &acc {
            for &o in opts {
                let mut p = prefix.clone();
                p.push(o);
                next.push(p);
            }
        }
        acc = next;
    }
    acc
}

/// Enumerates all inputs of a given length in lexicographic order of the
/// declared alphabet.
pub fn inputs_of_length(machine: &Machine, len: usize) -> impl Iterator<Item = Vec<InputSym>> + '_ {
    let base = machine.input_alphabet().len() as u64;
    let total = base.checked_pow(len as u32).expect("input space too large");
    (0..total).map(move |index| input_by_index(machine, len, index))
}

/// The `index`-th input of a given length in lexicographic order.
pub fn input_by_index(machine: &Machine, len: usize, mut index: u64) -> Vec<InputSym> {
    let base = machine.input_alphabet().len() as u64;
    let mut out = vec![InputSym(0); len];
    for i in (0..len).rev() {
        out[i] = InputSym((index % base) as u16);
        index /= base;
    }
    out
}

/// JSON summary printed after a traced run.
#[derive(Debug, Clone, Serialize)]
pub struct RunSummary {
    pub outcome: RunOutcome,
    pub steps: u64,
    pub final_dp: crate::machine::DynamicPartView,
}

impl RunSummary {
    pub fn new(machine: &Machine, result: &RunResult) -> Self {
        RunSummary {
            outcome: result.outcome,
            steps: result.steps,
            final_dp: crate::machine::DynamicPartView::new(
                machine,
                &dynamic_part_of(&result.final_config),
            ),
        }
    }
}

/// One trace line: `step=<i> state=<q> ihead=<p> rule=<id> tapes=<canonical>`.
pub fn render_trace_line(machine: &Machine, index: usize, entry: &TraceEntry) -> String {
    let rule = match entry.rule {
        Some(id) => id.0.to_string(),
        None => "-".to_string(),
    };
    let mut tapes = String::new();
    for t in &entry.config.tapes {
        let cells: Vec<&str> = t
            .cells
            .iter()
            .map(|c| machine.work_alphabet().name(c.0))
            .collect();
        tapes.push_str(&format!("[{}|{}]", cells.join(" "), t.head));
    }
    format!(
        "step={index} state={} ihead={} rule={rule} tapes={tapes}",
        machine.state_name(entry.config.state),
        entry.config.input_head,
    )
}
