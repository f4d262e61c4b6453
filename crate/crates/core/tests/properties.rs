//! Cross-module invariants at desk scale. The full-corpus versions run in
//! the acceptance suite; these keep the core crate self-checking.

use rotm_core::bennett::{direct_function_run, landauer_embed, read_twice_pipeline};
use rotm_core::census::{final_dp_census, theorem2_family_check, DEFAULT_BUDGET};
use rotm_core::corpus;
use rotm_core::machine::{dynamic_part_of, focus_of, StateKind};
use rotm_core::reversibility::{exhaustive_check, static_check, ExhaustiveVerdict, StaticVerdict};
use rotm_core::sim;

#[test]
fn focus_advances_exactly_on_sighted_steps() {
    for entry in corpus::corpus() {
        let machine = entry.machine();
        let max_steps = if entry.halts { 1_000 } else { 40 };
        for len in 0..=4usize {
            for input in sim::inputs_of_length(&machine, len) {
                let result = sim::run(&machine, &input, max_steps, true);
                for pair in result.trace.unwrap().windows(2) {
                    let before = dynamic_part_of(&pair[0].config);
                    let after = dynamic_part_of(&pair[1].config);
                    let expected = match machine.state_kind(before.state) {
                        StateKind::Sighted => 1,
                        _ => 0,
                    };
                    assert_eq!(
                        focus_of(&after) - focus_of(&before),
                        expected,
                        "{} with input {:?}",
                        entry.name,
                        machine.decode_input(&input)
                    );
                }
            }
        }
    }
}

#[test]
fn dynamic_parts_are_input_independent() {
    // N halts in the same moving-parts state on any input whose first `a`
    // sits at the same position.
    let n = corpus::machine_n();
    let left = sim::run(&n, &n.encode_input("ab").unwrap(), 100, false);
    let right = sim::run(&n, &n.encode_input("aa").unwrap(), 100, false);
    assert_eq!(
        dynamic_part_of(&left.final_config),
        dynamic_part_of(&right.final_config)
    );
}

#[test]
#[allow(clippy::int_plus_one)] // the bound under test is literally n+1
fn census_lower_bound_holds_for_reversible_recognizers_at_small_n() {
    for machine in [
        corpus::machine_n(),
        landauer_embed(&corpus::machine_n()).unwrap(),
    ] {
        assert_eq!(
            exhaustive_check(&machine, 6, 1_000).verdict,
            ExhaustiveVerdict::ReversibleUpToBound
        );
        for n in 0..=6usize {
            let c = final_dp_census(&machine, n, 1_000, DEFAULT_BUDGET).unwrap();
            assert!(c.distinct >= n as u64 + 1, "{} at n = {n}", machine.name());
        }
        assert!(theorem2_family_check(&machine, 6, 1_000).unwrap().distinct);
    }
}

#[test]
fn irreversible_recognizer_compresses_below_the_bound() {
    // M_bad shares final parts across inputs; by length 4 its census drops
    // under n+1, which is exactly what the reversibility hypothesis rules
    // out.
    let m_bad = corpus::machine_m_bad();
    let c = final_dp_census(&m_bad, 6, 1_000, DEFAULT_BUDGET).unwrap();
    assert!(c.distinct < 7, "D(6) = {}", c.distinct);
}

#[test]
fn static_reversibility_is_sound_for_exhaustive_audits() {
    for entry in corpus::corpus() {
        let machine = entry.machine();
        let max_steps = if entry.halts { 1_000 } else { 60 };
        if static_check(&machine).verdict == StaticVerdict::StaticallyReversible {
            let report = exhaustive_check(&machine, 5, max_steps);
            assert_eq!(
                report.verdict,
                ExhaustiveVerdict::ReversibleUpToBound,
                "{}",
                entry.name
            );
        }
    }
}

#[test]
fn pipeline_agrees_with_direct_simulation_at_small_lengths() {
    for machine in [corpus::machine_m_inc(), corpus::machine_m_parity()] {
        for len in 0..=4usize {
            for input in sim::inputs_of_length(&machine, len) {
                let text = machine.decode_input(&input);
                let result = read_twice_pipeline(&machine, &text, 100_000).unwrap();
                let oracle = direct_function_run(&machine, &text, 100_000).unwrap();
                assert_eq!(result.output, oracle, "{} on {text:?}", machine.name());
                assert_eq!(result.cleanliness.garbage_cells, 0);
            }
        }
    }
}

#[test]
fn embedding_overflow_is_reported() {
    let n = corpus::machine_n();
    match rotm_core::bennett::landauer_embed_with_cap(&n, 2) {
        Err(rotm_core::bennett::EmbedError::AlphabetOverflow { needed, cap }) => {
            assert_eq!(needed, 4);
            assert_eq!(cap, 2);
        }
        other => panic!("expected overflow, got {other:?}"),
    }
}

#[test]
fn demon_threshold_extension_defaults_to_the_all_left_event() {
    use rotm_core::demon::{analytic_p, simulate_trials, ExperimentParams};
    // With left_fraction = 0.5 at N = 2 the per-step event probability is
    // P(Bin(2, 1/2) >= 1) = 3/4 instead of 1/4.
    let mut params = ExperimentParams::new(2, 1, 40_000, 3);
    let baseline = simulate_trials(&params).unwrap();
    let sigma = (0.25f64 * 0.75 / 40_000.0).sqrt();
    assert!((baseline.empirical_p - analytic_p(2, 1)).abs() <= 5.0 * sigma);

    params.left_fraction = Some(0.5);
    let relaxed = simulate_trials(&params).unwrap();
    assert!((relaxed.empirical_p - 0.75).abs() <= 5.0 * sigma);
}
