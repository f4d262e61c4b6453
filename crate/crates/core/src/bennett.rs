//! History-tape embedding, rule inversion, and the two-pass zero-garbage
//! pipeline.
//!
//! [`landauer_embed`] buys reversibility with memory: one fresh work tape
//! records which rule fired at every step, so the latest history cell
//! always determines the unique predecessor. [`invert_rules`] turns a
//! statically reversible machine into its reverse, emitted as a
//! `scan: backward` machine in the same description format.
//! [`read_twice_pipeline`] composes them into the five-stage schedule that
//! computes a function and hands back a machine with every auxiliary cell
//! blank: copy the input to a work tape, run the embedded machine forward,
//! copy the output onto a fresh blank tape, run the inverse to consume the
//! history, then erase the input copy cell-by-cell against a second input
//! pass.

use serde::Serialize;
use thiserror::Error;

use crate::machine::{
    dynamic_part_of, Configuration, Machine, MachineParts, Outcome, RawRule, Scan, StateDecl,
    StateKind, Tape, TapeView, WorkSym,
};
use crate::reversibility::{static_check, StaticVerdict};
use crate::sim::{self, RunOutcome};

pub const DEFAULT_ALPHABET_CAP: usize = 4096;

#[derive(Debug, Clone, Error)]
pub enum EmbedError {
    #[error("embedding needs {needed} work symbols, over the cap of {cap}")]
    AlphabetOverflow { needed: usize, cap: usize },
    #[error("only forward machines can be embedded")]
    NotForward,
    #[error("embedding is not representable: {0}")]
    Unrepresentable(String),
}

#[derive(Debug, Clone, Error)]
pub enum InvertError {
    #[error("machine `{machine}` is not statically reversible ({violations} violation(s))")]
    NotStaticallyReversible { machine: String, violations: usize },
    #[error("inverse is not representable: {0}")]
    Unrepresentable(String),
}

#[derive(Debug, Clone, Error)]
pub enum PipelineError {
    #[error("stage {stage}: step budget exhausted")]
    Timeout { stage: &'static str },
    #[error("stage {stage}: {detail}")]
    StageInvariant { stage: &'static str, detail: String },
    #[error("pipeline needs a function machine: {0}")]
    NotFunctionMachine(String),
    #[error(transparent)]
    Embed(#[from] EmbedError),
    #[error(transparent)]
    Invert(#[from] InvertError),
    #[error(transparent)]
    Input(#[from] crate::machine::InputAlphabetError),
}

fn machine_to_parts(m: &Machine) -> MachineParts {
    MachineParts {
        name: m.name().to_string(),
        input_alphabet: m.input_alphabet().names().to_vec(),
        work_alphabet: m.work_alphabet().names().to_vec(),
        tape_count: m.tape_count(),
        scan: m.scan(),
        states: m.states().to_vec(),
        start_state: m.state_name(m.start_state()).to_string(),
        rules: m
            .rules()
            .iter()
            .map(|r| RawRule {
                source: m.state_name(r.source).to_string(),
                input: r.input.map(|cell| match cell {
                    crate::machine::InputCell::Blank => None,
                    crate::machine::InputCell::Sym(s) => {
                        Some(m.input_alphabet().name(s.0).to_string())
                    }
                }),
                read: r
                    .read
                    .iter()
                    .map(|w| m.work_alphabet().name(w.0).to_string())
                    .collect(),
                target: m.state_name(r.target).to_string(),
                write: r
                    .write
                    .iter()
                    .map(|w| m.work_alphabet().name(w.0).to_string())
                    .collect(),
                moves: r.moves.clone(),
                line: 0,
            })
            .collect(),
    }
}

/// Picks a prefix such that `{prefix}1 .. {prefix}R` are all fresh in the
/// work alphabet.
fn history_symbols(m: &Machine, count: usize) -> Vec<String> {
    let mut prefix = "r".to_string();
    loop {
        let candidate: Vec<String> = (1..=count).map(|i| format!("{prefix}{i}")).collect();
        if candidate
            .iter()
            .all(|c| m.work_alphabet().lookup(c).is_none())
        {
            return candidate;
        }
        prefix.push('r');
    }
}

/// Adds a history tape that records the identifier of every applied rule.
///
/// The embedded machine has one extra work tape whose alphabet gains one
/// fresh symbol per rule; each rule writes its own symbol at the history
/// head and moves it right. Recognition behavior and all original tapes
/// are untouched, and the history cell left of the head always identifies
/// the applied rule, which is what makes every reachable configuration's
/// predecessor unique.
pub fn landauer_embed(machine: &Machine) -> Result<Machine, EmbedError> {
    landauer_embed_with_cap(machine, DEFAULT_ALPHABET_CAP)
}

pub fn landauer_embed_with_cap(machine: &Machine, cap: usize) -> Result<Machine, EmbedError> {
    if machine.scan() != Scan::Forward {
        return Err(EmbedError::NotForward);
    }
    let rule_count = machine.rules().len();
    let needed = machine.work_alphabet().len() + rule_count;
    if needed > cap {
        return Err(EmbedError::AlphabetOverflow { needed, cap });
    }

    let ids = history_symbols(machine, rule_count);
    let mut parts = machine_to_parts(machine);
    parts.name = format!("{}_emb", machine.name());
    parts.work_alphabet.extend(ids.iter().cloned());
    parts.tape_count += 1;
    for (rule, id) in parts.rules.iter_mut().zip(&ids) {
        rule.read.push(parts.work_alphabet[0].clone());
        rule.write.push(id.clone());
        rule.moves.push(crate::machine::Move::Right);
    }
    Machine::build(parts).map_err(|e| EmbedError::Unrepresentable(e.to_string()))
}

/// Builds the reverse machine: sources and targets swap, reads and writes
/// swap, moves are negated, and the scan direction flips so that sighted
/// inversions retract the input head. The start and accept roles swap too,
/// which makes the transformation an involution; backward execution begins
/// at the old accept state and is complete when it gets stuck at the
/// accept-labeled old start state.
pub fn invert_rules(machine: &Machine) -> Result<Machine, InvertError> {
    if machine.scan() == Scan::Forward {
        let report = static_check(machine);
        if report.verdict != StaticVerdict::StaticallyReversible {
            return Err(InvertError::NotStaticallyReversible {
                machine: machine.name().to_string(),
                violations: report.violations.len(),
            });
        }
    }

    let name = match machine.name().strip_suffix("_inv") {
        Some(base) if !base.is_empty() => base.to_string(),
        _ => format!("{}_inv", machine.name()),
    };

    let mut rules = Vec::new();
    for r in machine.rules() {
        rules.push(RawRule {
            source: machine.state_name(r.target).to_string(),
            input: r.input.map(|cell| match cell {
                crate::machine::InputCell::Blank => None,
                crate::machine::InputCell::Sym(s) => {
                    Some(machine.input_alphabet().name(s.0).to_string())
                }
            }),
            read: r
                .write
                .iter()
                .map(|w| machine.work_alphabet().name(w.0).to_string())
                .collect(),
            target: machine.state_name(r.source).to_string(),
            write: r
                .read
                .iter()
                .map(|w| machine.work_alphabet().name(w.0).to_string())
                .collect(),
            moves: r.moves.iter().map(|m| m.flipped()).collect(),
            line: 0,
        });
    }

    // Role swap: the old accept becomes the start, the old start becomes
    // the accept. Other states take their kind from their outgoing rules
    // in the reverse machine (consistent because the forward machine had
    // no mixed sighted/blind targets); states without any keep theirs.
    let old_start = machine.state_name(machine.start_state());
    let old_accept = machine.state_name(machine.accept_state());
    let old_reject = machine.state_name(machine.reject_state());
    let states = machine
        .states()
        .iter()
        .map(|s| {
            let kind = if s.name == *old_start {
                StateKind::Accept
            } else if s.name == *old_reject && s.name != *old_start {
                StateKind::Reject
            } else {
                let outgoing: Vec<_> = rules.iter().filter(|r| r.source == s.name).collect();
                if outgoing.is_empty() {
                    if s.name == *old_accept {
                        StateKind::Blind
                    } else {
                        s.kind
                    }
                } else if outgoing[0].input.is_some() {
                    StateKind::Sighted
                } else {
                    StateKind::Blind
                }
            };
            StateDecl {
                name: s.name.clone(),
                kind,
            }
        })
        .collect();

    let parts = MachineParts {
        name,
        input_alphabet: machine.input_alphabet().names().to_vec(),
        work_alphabet: machine.work_alphabet().names().to_vec(),
        tape_count: machine.tape_count(),
        scan: match machine.scan() {
            Scan::Forward => Scan::Backward,
            Scan::Backward => Scan::Forward,
        },
        states,
        start_state: old_accept.to_string(),
        rules,
    };
    Machine::build(parts).map_err(|e| InvertError::Unrepresentable(e.to_string()))
}

// ---------------------------------------------------------------------------
// Cleanliness accounting
// ---------------------------------------------------------------------------

/// What is left behind in a configuration: non-blank cells on non-output
/// tapes and head displacements from their home positions. A clean
/// configuration has zero garbage cells; the input head is reported
/// separately because residual information can hide in it even when every
/// cell is blank.
#[derive(Debug, Clone, Serialize)]
pub struct CleanlinessReport {
    pub garbage_cells: u64,
    pub garbage_cells_per_tape: Vec<u64>,
    /// Head offset from home per tape. Home is cell 1; the output tape,
    /// when designated, parks one cell past its content.
    pub head_displacements: Vec<i64>,
    pub input_head: u32,
    pub clean: bool,
}

pub fn cleanliness_report(config: &Configuration, output_tape: Option<usize>) -> CleanlinessReport {
    let mut per_tape = Vec::with_capacity(config.tapes.len());
    let mut displacements = Vec::with_capacity(config.tapes.len());
    for (i, tape) in config.tapes.iter().enumerate() {
        let is_output = Some(i) == output_tape;
        per_tape.push(if is_output {
            0
        } else {
            tape.non_blank_cells() as u64
        });
        let home = if is_output {
            tape.cells.len() as i64 + 1
        } else {
            1
        };
        displacements.push(tape.head as i64 - home);
    }
    let garbage: u64 = per_tape.iter().sum();
    let clean = garbage == 0 && displacements.iter().all(|&d| d == 0);
    CleanlinessReport {
        garbage_cells: garbage,
        garbage_cells_per_tape: per_tape,
        head_displacements: displacements,
        input_head: config.input_head,
        clean,
    }
}

// ---------------------------------------------------------------------------
// The five-stage pipeline
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct StageLog {
    pub stage: &'static str,
    pub steps: u64,
    /// Set on the erase stage: the single harness-level rewind of the
    /// input head between the uncompute and the second pass.
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub rewind_meta_step: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineResult {
    pub machine: String,
    pub input: String,
    pub output: String,
    pub stages: Vec<StageLog>,
    pub output_tape: TapeView,
    pub cleanliness: CleanlinessReport,
}

/// Snapshot of the moving parts the pipeline threads between stages; the
/// configurations all belong to the embedded machine.
pub struct PipelineTrace {
    pub embedded: Machine,
    pub inverse: Machine,
    pub post_copy: Configuration,
    pub post_forward: Configuration,
    pub post_backward: Configuration,
    pub final_config: Configuration,
}

fn log(stage: &'static str, steps: u64) -> StageLog {
    StageLog {
        stage,
        steps,
        rewind_meta_step: false,
    }
}

/// Runs the whole schedule and checks its invariants. The returned result
/// is serializable; [`read_twice_pipeline_traced`] also exposes the
/// intermediate configurations for finer-grained assertions.
pub fn read_twice_pipeline(
    machine: &Machine,
    input: &str,
    max_steps: u64,
) -> Result<PipelineResult, PipelineError> {
    read_twice_pipeline_traced(machine, input, max_steps).map(|(r, _)| r)
}

pub fn read_twice_pipeline_traced(
    machine: &Machine,
    input: &str,
    max_steps: u64,
) -> Result<(PipelineResult, PipelineTrace), PipelineError> {
    if machine.scan() != Scan::Forward {
        return Err(PipelineError::NotFunctionMachine(
            "machine must scan forward".to_string(),
        ));
    }
    if machine.tape_count() < 2 {
        return Err(PipelineError::NotFunctionMachine(
            "need at least an input-copy tape and an output tape".to_string(),
        ));
    }
    if let Some(s) = machine
        .states()
        .iter()
        .find(|s| s.kind == StateKind::Sighted)
    {
        return Err(PipelineError::NotFunctionMachine(format!(
            "state `{}` is sighted; function machines read only the copy on work tape 1",
            s.name
        )));
    }
    let input_syms = machine.encode_input(input)?;
    let copy_syms: Vec<WorkSym> = input_syms
        .iter()
        .map(|s| {
            machine
                .work_alphabet()
                .lookup(machine.input_alphabet().name(s.0))
                .map(WorkSym)
                .ok_or_else(|| {
                    PipelineError::NotFunctionMachine(format!(
                        "input symbol `{}` has no work-alphabet counterpart to copy onto tape 1",
                        machine.input_alphabet().name(s.0)
                    ))
                })
        })
        .collect::<Result<_, _>>()?;

    let embedded = landauer_embed(machine)?;
    let inverse = invert_rules(&embedded)?;
    let out_idx = machine.tape_count() - 1;
    let n = input_syms.len() as u64;
    let mut stages = Vec::with_capacity(5);

    // Stage 1: first input pass copies the string onto tape T, one sighted
    // copy step per symbol; the T head is then walked back home.
    let mut post_copy = sim::initial_configuration(&embedded, &input_syms);
    post_copy.input_head = n as u32 + 1;
    post_copy.tapes[0] = Tape {
        cells: copy_syms.clone(),
        head: 1,
    };
    stages.push(log("copy", n));

    // Stage 2: forward run of the embedding over the copy.
    let fwd = sim::run_from(&embedded, post_copy.clone(), &input_syms, max_steps, false);
    match fwd.outcome {
        RunOutcome::Accepted => {}
        RunOutcome::Timeout => return Err(PipelineError::Timeout { stage: "forward" }),
        other => {
            return Err(PipelineError::StageInvariant {
                stage: "forward",
                detail: format!("function machine ended {other:?} instead of accepting"),
            })
        }
    }
    stages.push(log("forward", fwd.steps));
    let post_forward = fwd.final_config.clone();

    // Stage 3: copy the output content onto a fresh blank tape, one step
    // per cell; copying onto blank cells is information-preserving.
    let output_cells = post_forward.tapes[out_idx].cells.clone();
    let fresh_output = Tape {
        head: output_cells.len() as u32 + 1,
        cells: output_cells.clone(),
    };
    stages.push(log("output-copy", output_cells.len() as u64));

    // Stage 4: backward run consumes the history and must land exactly on
    // the post-copy configuration.
    let bwd = sim::run_from(
        &inverse,
        post_forward.clone(),
        &input_syms,
        max_steps,
        false,
    );
    match bwd.outcome {
        RunOutcome::Accepted => {}
        RunOutcome::Timeout => return Err(PipelineError::Timeout { stage: "backward" }),
        other => {
            return Err(PipelineError::StageInvariant {
                stage: "backward",
                detail: format!("uncompute ended {other:?}"),
            })
        }
    }
    if dynamic_part_of(&bwd.final_config) != dynamic_part_of(&post_copy) {
        return Err(PipelineError::StageInvariant {
            stage: "backward",
            detail: "uncompute did not restore the post-copy configuration".to_string(),
        });
    }
    stages.push(log("backward", bwd.steps));
    let post_backward = bwd.final_config.clone();

    // Stage 5: one declared meta-step rewinds the input head, then the
    // second input pass erases T cell-by-cell against the matching input
    // symbol; the T head is walked back home afterwards.
    let mut final_config = post_backward.clone();
    final_config.input_head = 1;
    for (i, &expected) in copy_syms.iter().enumerate() {
        let pos = i as u32 + 1;
        let held = final_config.tapes[0].read(pos);
        if held != expected {
            return Err(PipelineError::StageInvariant {
                stage: "erase",
                detail: format!("tape T cell {pos} does not match the input symbol"),
            });
        }
        final_config.tapes[0].write(pos, WorkSym::BLANK);
        final_config.input_head = pos + 1;
    }
    final_config.input_head = n as u32 + 1;
    final_config.tapes[0].head = 1;
    final_config.outcome = Outcome::Running;
    stages.push(StageLog {
        stage: "erase",
        steps: n,
        rewind_meta_step: true,
    });

    let output = output_cells
        .iter()
        .map(|w| embedded.work_alphabet().name(w.0))
        .collect::<Vec<_>>()
        .join("");
    let cleanliness = cleanliness_report(&final_config, None);
    let result = PipelineResult {
        machine: machine.name().to_string(),
        input: input.to_string(),
        output,
        stages,
        output_tape: TapeView {
            cells: fresh_output
                .cells
                .iter()
                .map(|c| embedded.work_alphabet().name(c.0).to_string())
                .collect(),
            head: fresh_output.head,
        },
        cleanliness,
    };
    let trace = PipelineTrace {
        embedded,
        inverse,
        post_copy,
        post_forward,
        post_backward,
        final_config,
    };
    Ok((result, trace))
}

/// Direct simulation of a function machine: load the value onto work tape
/// 1, run the bare machine, read the output tape. This is the reference
/// route the pipeline is checked against.
pub fn direct_function_run(
    machine: &Machine,
    input: &str,
    max_steps: u64,
) -> Result<String, PipelineError> {
    let input_syms = machine.encode_input(input)?;
    let copy_syms: Vec<WorkSym> = input_syms
        .iter()
        .map(|s| {
            machine
                .work_alphabet()
                .lookup(machine.input_alphabet().name(s.0))
                .map(WorkSym)
                .ok_or_else(|| PipelineError::NotFunctionMachine("uncopyable symbol".to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut start = sim::initial_configuration(machine, &input_syms);
    start.tapes[0] = Tape {
        cells: copy_syms,
        head: 1,
    };
    let result = sim::run_from(machine, start, &input_syms, max_steps, false);
    match result.outcome {
        RunOutcome::Accepted => {}
        RunOutcome::Timeout => return Err(PipelineError::Timeout { stage: "direct" }),
        other => {
            return Err(PipelineError::StageInvariant {
                stage: "direct",
                detail: format!("direct run ended {other:?}"),
            })
        }
    }
    let out_idx = machine.tape_count() - 1;
    Ok(result.final_config.tapes[out_idx]
        .cells
        .iter()
        .map(|w| machine.work_alphabet().name(w.0))
        .collect::<Vec<_>>()
        .join(""))
}

/// Number of input symbols consumed by a run, handy as the "shutter close
/// step" and for trace symmetry assertions.
pub fn consumed_symbols(result: &sim::RunResult) -> u32 {
    result.final_config.input_head.saturating_sub(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::machine::serialize_machine;
    use crate::reversibility::{exhaustive_check, ExhaustiveVerdict};

    #[test]
    fn embed_n_grows_the_work_alphabet_by_one_symbol_per_rule() {
        let n = corpus::machine_n();
        let e = landauer_embed(&n).unwrap();
        assert_eq!(e.work_alphabet().len(), 4); // blank + 3 rule symbols
        assert_eq!(e.tape_count(), 2);
        assert_eq!(e.rules().len(), 3);
    }

    #[test]
    fn embedding_preserves_recognition_up_to_length_8() {
        for entry in corpus::corpus() {
            let machine = entry.machine();
            let e = landauer_embed(&machine).unwrap();
            let max_steps = if entry.halts { 10_000 } else { 40 };
            for len in 0..=8usize {
                for input in sim::inputs_of_length(&machine, len) {
                    let a = sim::run(&machine, &input, max_steps, false);
                    let b = sim::run(&e, &input, max_steps, false);
                    assert_eq!(
                        a.outcome,
                        b.outcome,
                        "input {:?}",
                        machine.decode_input(&input)
                    );
                    // Original tapes match; the history tape is extra.
                    assert_eq!(
                        a.final_config.tapes[..machine.tape_count()],
                        b.final_config.tapes[..machine.tape_count()]
                    );
                    assert_eq!(b.steps, a.steps);
                    // History length equals the step count, exactly.
                    assert_eq!(
                        b.final_config.tapes[machine.tape_count()].cells.len() as u64,
                        b.steps
                    );
                }
            }
        }
    }

    #[test]
    fn embedded_m_bad_is_reversible_at_bound_6() {
        let e = landauer_embed(&corpus::machine_m_bad()).unwrap();
        let report = exhaustive_check(&e, 6, 1000);
        assert_eq!(report.verdict, ExhaustiveVerdict::ReversibleUpToBound);
    }

    #[test]
    fn inverting_m_bad_fails() {
        assert!(matches!(
            invert_rules(&corpus::machine_m_bad()),
            Err(InvertError::NotStaticallyReversible { .. })
        ));
    }

    #[test]
    fn inverse_of_embedded_n_replays_bba_backwards() {
        let n = corpus::machine_n();
        let e = landauer_embed(&n).unwrap();
        let inv = invert_rules(&e).unwrap();
        let input = e.encode_input("bba").unwrap();
        let fwd = sim::run(&e, &input, 100, true);
        assert_eq!(fwd.outcome, RunOutcome::Accepted);
        let bwd = sim::run_from(&inv, fwd.final_config.clone(), &input, 100, true);
        assert_eq!(bwd.outcome, RunOutcome::Accepted);
        assert_eq!(bwd.steps, 3);
        let initial = sim::initial_configuration(&e, &input);
        assert_eq!(
            dynamic_part_of(&bwd.final_config),
            dynamic_part_of(&initial)
        );
        // And it replays the forward trace in reverse, state for state.
        let fwd_trace = fwd.trace.unwrap();
        let bwd_trace = bwd.trace.unwrap();
        for (f, b) in fwd_trace.iter().rev().zip(bwd_trace.iter()) {
            assert_eq!(dynamic_part_of(&f.config), dynamic_part_of(&b.config));
        }
    }

    #[test]
    fn invert_is_an_involution_on_statically_reversible_machines() {
        let machines = vec![
            corpus::machine_n(),
            corpus::machine_spin(),
            landauer_embed(&corpus::machine_n()).unwrap(),
            landauer_embed(&corpus::machine_m_bad()).unwrap(),
            landauer_embed(&corpus::machine_m_inc()).unwrap(),
            landauer_embed(&corpus::machine_m_parity()).unwrap(),
        ];
        for m in machines {
            let double = invert_rules(&invert_rules(&m).unwrap()).unwrap();
            assert_eq!(
                serialize_machine(&double),
                serialize_machine(&m),
                "involution failed for {}",
                m.name()
            );
        }
    }

    #[test]
    fn inverse_round_trips_through_the_description_format() {
        let inv = invert_rules(&landauer_embed(&corpus::machine_n()).unwrap()).unwrap();
        let text = serialize_machine(&inv);
        let reparsed = crate::machine::parse_machine(&text).unwrap();
        assert_eq!(reparsed, inv);
    }

    #[test]
    fn pipeline_increments_011_to_100_with_zero_garbage() {
        let m = corpus::machine_m_inc();
        let (result, trace) = read_twice_pipeline_traced(&m, "011", 100_000).unwrap();
        assert_eq!(result.output, "100");
        assert_eq!(result.cleanliness.garbage_cells, 0);
        assert!(result.cleanliness.clean);
        assert_eq!(result.stages.len(), 5);
        assert_eq!(result.stages[1].steps, result.stages[3].steps);
        assert!(result.stages[4].rewind_meta_step);
        assert_eq!(
            dynamic_part_of(&trace.post_backward),
            dynamic_part_of(&trace.post_copy)
        );
    }

    #[test]
    fn pipeline_handles_the_empty_input() {
        let m = corpus::machine_m_inc();
        let result = read_twice_pipeline(&m, "", 100_000).unwrap();
        assert_eq!(result.output, direct_function_run(&m, "", 100_000).unwrap());
        assert_eq!(result.output, "1");
        assert_eq!(result.cleanliness.garbage_cells, 0);
    }

    #[test]
    fn pipeline_parity_of_seven_as() {
        let m = corpus::machine_m_parity();
        let result = read_twice_pipeline(&m, "aaaaaaa", 100_000).unwrap();
        assert_eq!(result.output, "1");
        assert_eq!(result.cleanliness.garbage_cells, 0);
        assert_eq!(result.stages[1].steps, result.stages[3].steps);
    }

    #[test]
    fn post_forward_history_holds_one_cell_per_step() {
        let m = corpus::machine_m_inc();
        let (_, trace) = read_twice_pipeline_traced(&m, "011", 100_000).unwrap();
        let hist = &trace.post_forward.tapes[m.tape_count()];
        let fwd_steps = hist.cells.len() as u64;
        assert!(fwd_steps > 0);
        let report = cleanliness_report(&trace.post_forward, Some(m.tape_count() - 1));
        assert!(report.garbage_cells >= fwd_steps);
    }

    #[test]
    fn bare_n_leaves_no_cells_but_an_input_dependent_head() {
        let n = corpus::machine_n();
        let input = n.encode_input("bba").unwrap();
        let result = sim::run(&n, &input, 100, false);
        let report = cleanliness_report(&result.final_config, None);
        assert_eq!(report.garbage_cells, 0);
        assert_eq!(report.input_head, 4);
    }

    #[test]
    fn non_function_machines_are_refused() {
        let n = corpus::machine_n();
        assert!(matches!(
            read_twice_pipeline(&n, "ab", 1000),
            Err(PipelineError::NotFunctionMachine(_))
        ));
    }
}
