//! Round-trip and canonicalization properties over generated machines.

use proptest::prelude::*;
use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64Mcg;

use rotm_core::machine::{
    dynamic_part_of, parse_machine, serialize_machine, Configuration, Machine, MachineParts, Move,
    Outcome, RawRule, Scan, StateDecl, StateId, StateKind, Tape, WorkSym,
};

/// Deterministically builds a valid forward machine from a few size knobs
/// and a seed: random rule subsets over the full key space, random targets
/// and effects.
fn generate_machine(input_syms: usize, extra_work: usize, tapes: usize, seed: u64) -> Machine {
    let mut rng = Pcg64Mcg::seed_from_u64(seed);
    let input_alphabet: Vec<String> = ["a", "b", "c"][..input_syms]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut work_alphabet = vec!["_".to_string()];
    work_alphabet.extend(["X", "Y"][..extra_work].iter().map(|s| s.to_string()));

    let ordinary = 1 + (rng.next_u64() % 3) as usize;
    let mut states = Vec::new();
    for i in 0..ordinary {
        let kind = if rng.next_u64() % 2 == 0 {
            StateKind::Sighted
        } else {
            StateKind::Blind
        };
        states.push(StateDecl {
            name: format!("q{i}"),
            kind,
        });
    }
    states.push(StateDecl {
        name: "acc".to_string(),
        kind: StateKind::Accept,
    });
    states.push(StateDecl {
        name: "rej".to_string(),
        kind: StateKind::Reject,
    });
    let all_names: Vec<String> = states.iter().map(|s| s.name.clone()).collect();

    let mut combos = vec![vec![]];
    for _ in 0..tapes {
        let mut next = Vec::new();
        for c in &combos {
            for w in &work_alphabet {
                let mut c = c.clone();
                c.push(w.clone());
                next.push(c);
            }
        }
        combos = next;
    }

    let mut rules = Vec::new();
    for s in &states[..ordinary] {
        let inputs: Vec<Option<Option<String>>> = match s.kind {
            StateKind::Sighted => std::iter::once(Some(None))
                .chain(input_alphabet.iter().map(|i| Some(Some(i.clone()))))
                .collect(),
            _ => vec![None],
        };
        for input in inputs {
            for read in &combos {
                if rng.next_u64() % 10 >= 7 {
                    continue;
                }
                let target = all_names[(rng.next_u64() % all_names.len() as u64) as usize].clone();
                let write: Vec<String> = (0..tapes)
                    .map(|_| {
                        work_alphabet[(rng.next_u64() % work_alphabet.len() as u64) as usize]
                            .clone()
                    })
                    .collect();
                let moves: Vec<Move> = (0..tapes)
                    .map(|_| match rng.next_u64() % 3 {
                        0 => Move::Left,
                        1 => Move::Stay,
                        _ => Move::Right,
                    })
                    .collect();
                rules.push(RawRule {
                    source: s.name.clone(),
                    input: input.clone(),
                    read: read.clone(),
                    target,
                    write,
                    moves,
                    line: 0,
                });
            }
        }
    }

    let parts = MachineParts {
        name: format!("gen{seed}"),
        input_alphabet,
        work_alphabet,
        tape_count: tapes,
        scan: Scan::Forward,
        states,
        start_state: "q0".to_string(),
        rules,
    };
    Machine::build(parts).expect("generated parts are valid")
}

proptest! {
    #[test]
    fn parse_of_serialize_is_identity(
        input_syms in 1..=3usize,
        extra_work in 0..=2usize,
        tapes in 1..=2usize,
        seed in any::<u64>(),
    ) {
        let machine = generate_machine(input_syms, extra_work, tapes, seed);
        let text = serialize_machine(&machine);
        let reparsed = parse_machine(&text).unwrap();
        prop_assert_eq!(&reparsed, &machine);
        prop_assert_eq!(serialize_machine(&reparsed), text);
    }

    #[test]
    fn dynamic_part_ignores_trailing_blanks_and_is_idempotent(
        head in 1..6u32,
        input_head in 1..6u32,
        cells in proptest::collection::vec(0..3u16, 0..5),
        padding in 0..4usize,
    ) {
        let tape = Tape { cells: cells.iter().map(|&c| WorkSym(c)).collect(), head };
        let mut padded = tape.clone();
        padded.cells.extend(std::iter::repeat_n(WorkSym::BLANK, padding));
        let config = Configuration {
            state: StateId(0),
            input_head,
            tapes: vec![tape],
            outcome: Outcome::Running,
        };
        let config_padded = Configuration { tapes: vec![padded], ..config.clone() };
        let dp = dynamic_part_of(&config);
        prop_assert_eq!(&dynamic_part_of(&config_padded), &dp);
        // Re-projecting a configuration rebuilt from the part changes nothing.
        let rebuilt = Configuration {
            state: dp.state,
            input_head: dp.input_head,
            tapes: dp.tapes.clone(),
            outcome: Outcome::Running,
        };
        prop_assert_eq!(dynamic_part_of(&rebuilt), dp);
    }
}
