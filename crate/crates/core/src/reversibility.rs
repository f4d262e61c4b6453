//! Decides whether a machine is reversible: no configuration has more than
//! one predecessor.
//!
//! Two checkers with complementary guarantees. [`static_check`] is a sound
//! syntactic test over the transition table: a `statically-reversible`
//! verdict means no configuration anywhere, on any input, has two
//! predecessors; `undetermined` means nothing. [`exhaustive_check`] settles
//! the question at bounded scale by enumerating every input up to a length
//! bound and auditing the in-degree of every reachable configuration, with
//! predecessors drawn from the full configuration space.

use rayon::prelude::*;
use serde::Serialize;

use crate::machine::{
    render_rule, Configuration, DynamicPartView, InputCell, Machine, Rule, RuleId, Scan,
};
use crate::sim;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ViolationKind {
    /// A target receiving both a sighted and a blind rule.
    A,
    /// Two rules firable on the same fixed input cell with equal moves and
    /// equal writes: their preimages are distinct yet collide.
    B,
    /// Two rules firable on the same fixed input cell with different move
    /// vectors: the reverse cannot locate the written cells uniformly.
    C,
}

#[derive(Debug, Clone, Serialize)]
pub struct PairViolation {
    pub kind: ViolationKind,
    pub target: String,
    pub rules: (u32, u32),
    pub rendered: (String, String),
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StaticVerdict {
    StaticallyReversible,
    Undetermined,
}

#[derive(Debug, Clone, Serialize)]
pub struct StaticReport {
    pub machine: String,
    pub verdict: StaticVerdict,
    pub violations: Vec<PairViolation>,
}

/// Sound, incomplete syntactic reversibility test.
///
/// For each target state, every pair of incoming rules is examined:
/// mixing sighted and blind is a violation (A); two rules that can fire on
/// the same fixed input cell (both blind, or both sighted reading the same
/// symbol) must share a move vector (else C) and write distinct vectors
/// (else B). Sighted pairs on distinct input symbols can never fire at the
/// same cell of one fixed input, so they are always compatible.
pub fn static_check(machine: &Machine) -> StaticReport {
    assert_eq!(
        machine.scan(),
        Scan::Forward,
        "static_check applies to forward machines"
    );
    let mut violations = Vec::new();

    for (ti, _) in machine.states().iter().enumerate() {
        let target = crate::machine::StateId(ti as u16);
        let incoming = machine.rules_into(target);
        for (i, &ra) in incoming.iter().enumerate() {
            for &rb in &incoming[i + 1..] {
                let a = &machine.rules()[ra as usize];
                let b = &machine.rules()[rb as usize];
                if let Some(v) = pair_violation(machine, target, (ra, a), (rb, b)) {
                    violations.push(v);
                }
            }
        }
    }

    // A move off the left end reroutes the transition into the reject
    // state with the head clamped. Those variants are analyzed as phantom
    // reject-targeting rules so machines relying on left-end rejection are
    // never declared reversible.
    let reject = machine.reject_state();
    let mut phantoms: Vec<(u32, Rule)> = Vec::new();
    for (idx, r) in machine.rules().iter().enumerate() {
        let left_tapes: Vec<usize> = r
            .moves
            .iter()
            .enumerate()
            .filter(|(_, m)| **m == crate::machine::Move::Left)
            .map(|(t, _)| t)
            .collect();
        if left_tapes.is_empty() {
            continue;
        }
        if r.target == reject {
            violations.push(PairViolation {
                kind: ViolationKind::C,
                target: machine.state_name(reject).to_string(),
                rules: (idx as u32 + 1, idx as u32 + 1),
                rendered: (render_rule(machine, r), render_rule(machine, r)),
                note: "left-moving rejection: the clamped and un-clamped preimages both \
                       reject"
                    .to_string(),
            });
        }
        for mask in 1u32..(1 << left_tapes.len()) {
            let mut moves = r.moves.clone();
            for (bit, &t) in left_tapes.iter().enumerate() {
                if mask & (1 << bit) != 0 {
                    moves[t] = crate::machine::Move::Stay;
                }
            }
            phantoms.push((
                idx as u32,
                Rule {
                    source: r.source,
                    input: r.input,
                    read: r.read.clone(),
                    target: reject,
                    write: r.write.clone(),
                    moves,
                },
            ));
        }
    }
    let reject_rules = machine.rules_into(reject).to_vec();
    for (i, (base_a, pa)) in phantoms.iter().enumerate() {
        for &ri in &reject_rules {
            let real = &machine.rules()[ri as usize];
            if let Some(mut v) = pair_violation(machine, reject, (ri, real), (*base_a, pa)) {
                v.note.push_str(" (against a left-end clamp variant)");
                violations.push(v);
            }
        }
        for (base_b, pb) in &phantoms[i + 1..] {
            if let Some(mut v) = pair_violation(machine, reject, (*base_a, pa), (*base_b, pb)) {
                v.note.push_str(" (between left-end clamp variants)");
                violations.push(v);
            }
        }
    }

    StaticReport {
        machine: machine.name().to_string(),
        verdict: if violations.is_empty() {
            StaticVerdict::StaticallyReversible
        } else {
            StaticVerdict::Undetermined
        },
        violations,
    }
}

fn pair_violation(
    machine: &Machine,
    target: crate::machine::StateId,
    (ia, a): (u32, &Rule),
    (ib, b): (u32, &Rule),
) -> Option<PairViolation> {
    let a_sighted = a.input.is_some();
    let b_sighted = b.input.is_some();
    let mk = |kind, note: String| PairViolation {
        kind,
        target: machine.state_name(target).to_string(),
        rules: (ia + 1, ib + 1),
        rendered: (render_rule(machine, a), render_rule(machine, b)),
        note,
    };

    if a_sighted != b_sighted {
        return Some(mk(
            ViolationKind::A,
            "target receives both a sighted and a blind rule".to_string(),
        ));
    }
    // Both sighted on distinct symbols: the fixed input disambiguates.
    if a_sighted && a.input != b.input {
        return None;
    }
    // On tapes where the two rules move identically their written cells
    // coincide in the reverse view, so a differing write there separates
    // the preimages no matter what the other tapes do.
    let distinguished = a
        .moves
        .iter()
        .zip(&b.moves)
        .zip(a.write.iter().zip(&b.write))
        .any(|((ma, mb), (wa, wb))| ma == mb && wa != wb);
    if distinguished {
        return None;
    }
    if a.moves != b.moves {
        return Some(mk(
            ViolationKind::C,
            "same-key rules with different move vectors and no shared-move write to tell \
             them apart: ambiguous reverse head position"
                .to_string(),
        ));
    }
    Some(mk(
        ViolationKind::B,
        "same-key rules with identical writes: two distinct preimages collide".to_string(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExhaustiveVerdict {
    ReversibleUpToBound,
    Irreversible,
}

#[derive(Debug, Clone, Serialize)]
pub struct Counterexample {
    pub input: String,
    pub config: DynamicPartView,
    pub predecessors: Vec<DynamicPartView>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExhaustiveReport {
    pub machine: String,
    pub verdict: ExhaustiveVerdict,
    pub max_len: usize,
    pub max_steps: u64,
    pub configurations_checked: u64,
    pub counterexample: Option<Counterexample>,
    /// Inputs whose run hit the step budget; their explored prefix was
    /// still audited.
    pub timed_out_inputs: u64,
}

struct InputAudit {
    configurations_checked: u64,
    timed_out: bool,
    counterexample: Option<(Configuration, Vec<Configuration>)>,
}

/// Enumerates every input of length `<= max_len` (shorter first, then
/// lexicographic in the declared alphabet order) and audits the in-degree
/// of every configuration reachable within `max_steps`. The first
/// counterexample in (input order, trace order) is reported; it always
/// re-verifies through [`sim::step`].
pub fn exhaustive_check(machine: &Machine, max_len: usize, max_steps: u64) -> ExhaustiveReport {
    assert_eq!(
        machine.scan(),
        Scan::Forward,
        "exhaustive_check applies to forward machines"
    );

    let mut inputs = Vec::new();
    for len in 0..=max_len {
        inputs.extend(sim::inputs_of_length(machine, len));
    }

    let audits: Vec<InputAudit> = inputs
        .par_iter()
        .map(|input| audit_input(machine, input, max_steps))
        .collect();

    let mut checked = 0u64;
    let mut timeouts = 0u64;
    let mut counterexample = None;
    for (input, audit) in inputs.iter().zip(audits) {
        checked += audit.configurations_checked;
        if audit.timed_out {
            timeouts += 1;
        }
        if let Some((config, preds)) = audit.counterexample {
            counterexample = Some(Counterexample {
                input: machine.decode_input(input),
                config: DynamicPartView::new(machine, &crate::machine::dynamic_part_of(&config)),
                predecessors: preds
                    .iter()
                    .map(|p| DynamicPartView::new(machine, &crate::machine::dynamic_part_of(p)))
                    .collect(),
            });
            break;
        }
    }

    ExhaustiveReport {
        machine: machine.name().to_string(),
        verdict: if counterexample.is_some() {
            ExhaustiveVerdict::Irreversible
        } else {
            ExhaustiveVerdict::ReversibleUpToBound
        },
        max_len,
        max_steps,
        configurations_checked: checked,
        counterexample,
        timed_out_inputs: timeouts,
    }
}

fn audit_input(
    machine: &Machine,
    input: &[crate::machine::InputSym],
    max_steps: u64,
) -> InputAudit {
    let result = sim::run(machine, input, max_steps, true);
    let trace = result.trace.expect("trace requested");
    let mut seen = std::collections::HashSet::new();
    let mut checked = 0u64;
    let mut counterexample = None;

    for entry in &trace {
        if !seen.insert(entry.config.clone()) {
            continue;
        }
        checked += 1;
        let preds = sim::predecessors(machine, &entry.config, input);
        if preds.len() > 1 {
            counterexample = Some((entry.config.clone(), preds.into_iter().collect()));
            break;
        }
    }

    InputAudit {
        configurations_checked: checked,
        timed_out: result.outcome == sim::RunOutcome::Timeout,
        counterexample,
    }
}

/// Re-verifies a counterexample's predecessor set through [`sim::step`];
/// used by tests and by callers that want an independent confirmation.
pub fn verify_counterexample(
    machine: &Machine,
    input: &[crate::machine::InputSym],
    config: &Configuration,
    predecessors: &[Configuration],
) -> bool {
    predecessors.len() > 1
        && predecessors.iter().all(|p| {
            sim::step(machine, p, input)
                .map(|(next, _)| &next == config)
                .unwrap_or(false)
        })
}

/// Convenience used across the verification suites: find the rules of a
/// machine by (source name, input cell name) for assertions.
pub fn find_rule_id(
    machine: &Machine,
    source: &str,
    input: Option<&str>,
    read: &[&str],
) -> Option<RuleId> {
    let source = machine.state_by_name(source)?;
    let input = match input {
        None => None,
        Some("<") => Some(InputCell::Blank),
        Some(sym) => Some(InputCell::Sym(crate::machine::InputSym(
            machine.input_alphabet().lookup(sym)?,
        ))),
    };
    let read: Option<Vec<_>> = read
        .iter()
        .map(|s| {
            machine
                .work_alphabet()
                .lookup(s)
                .map(crate::machine::WorkSym)
        })
        .collect();
    machine
        .lookup_rule(source, input, &read?)
        .map(|i| machine.rule_id(i as usize))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus;
    use crate::machine::parse_machine;

    #[test]
    fn n_is_statically_reversible() {
        let report = static_check(&corpus::machine_n());
        assert_eq!(report.verdict, StaticVerdict::StaticallyReversible);
        assert!(report.violations.is_empty());
    }

    #[test]
    fn m_bad_has_the_planted_b_violation_on_q1() {
        let m = corpus::machine_m_bad();
        let report = static_check(&m);
        assert_eq!(report.verdict, StaticVerdict::Undetermined);
        let hit = report.violations.iter().find(|v| {
            v.kind == ViolationKind::B
                && v.target == "q1"
                && v.rendered.0.starts_with("rule q0 a")
                && v.rendered.1.starts_with("rule q1 a")
        });
        assert!(
            hit.is_some(),
            "expected the (q0,a)/(q1,a) collision into q1: {report:?}"
        );
    }

    #[test]
    fn mixed_sighted_blind_target_is_violation_a() {
        let text = "\
machine mixed
input_alphabet: a
work_alphabet: _ X
tapes: 1
state q0 sighted start
state q1 blind
state q2 sighted
state acc accept
state rej reject
rule q0 a [_] -> q2 [X] [S]
rule q1 [_] -> q2 [_] [S]
rule q2 a [X] -> acc [X] [S]
rule q2 a [_] -> acc [_] [S]
rule q2 < [X] -> rej [X] [S]
rule q2 < [_] -> rej [_] [S]
";
        let m = parse_machine(text).unwrap();
        let report = static_check(&m);
        assert!(report
            .violations
            .iter()
            .any(|v| v.kind == ViolationKind::A && v.target == "q2"));
    }

    #[test]
    fn exhaustive_check_clears_n() {
        let m = corpus::machine_n();
        let report = exhaustive_check(&m, 8, 1000);
        assert_eq!(report.verdict, ExhaustiveVerdict::ReversibleUpToBound);
        assert!(report.counterexample.is_none());
        assert!(report.configurations_checked > 0);
    }

    #[test]
    fn exhaustive_check_flags_m_bad_with_the_expected_witness() {
        let m = corpus::machine_m_bad();
        let report = exhaustive_check(&m, 2, 1000);
        assert_eq!(report.verdict, ExhaustiveVerdict::Irreversible);
        let cex = report.counterexample.expect("counterexample");
        assert_eq!(cex.input, "aa");
        assert_eq!(cex.config.state, "q1");
        assert_eq!(cex.config.input_head, 3);
        let preds: Vec<_> = cex
            .predecessors
            .iter()
            .map(|p| (p.state.as_str(), p.input_head))
            .collect();
        assert_eq!(preds, vec![("q0", 2), ("q1", 2)]);
    }

    #[test]
    fn spin_is_reversible_over_its_explored_prefix() {
        let m = corpus::machine_spin();
        let report = exhaustive_check(&m, 2, 100);
        assert_eq!(report.verdict, ExhaustiveVerdict::ReversibleUpToBound);
        assert!(report.timed_out_inputs > 0);
    }
}
