//! The container-and-shutter experiment: closed-form analytics, Monte
//! Carlo trials driven by a bundled read-once machine, and the second-law
//! ledger.
//!
//! A container holds `N` gas molecules; a device samples the macrostate at
//! `T` discrete times. The symbol `a` stands for "all molecules are in the
//! left half" (probability `2^-N` per step, independent across steps) and
//! `b` for anything else. The observation string drives a read-once
//! machine; the shutter latches closed at the machine's first accept,
//! trapping the gas and lowering the container's entropy by `N` bits.
//! Entropy is counted in bits throughout (no `k_B ln 2` conversion).
//!
//! Determinism contract: trial `i` of a run with seed `s` derives its own
//! generator from `splitmix64(s XOR (i * 0x9E3779B97F4A7C15))`, so results
//! are byte-identical for any parallelism level.

use std::collections::BTreeMap;

use rand_core::{RngCore, SeedableRng};
use rand_pcg::Pcg64Mcg;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::census::{self, CensusError};
use crate::machine::{serialize_machine, InputSym, Machine};
use crate::sim::{self, RunOutcome};
use crate::{bennett, corpus};

pub const DEFAULT_TV_BUDGET: u64 = 1 << 24;

#[derive(Debug, Clone, Error)]
pub enum DemonError {
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("total-variation summation over {required} terms exceeds the budget of {budget}")]
    Budget { required: u64, budget: u64 },
    #[error("shutter machine misbehaved on trial {trial}: input `{input}` {detail}")]
    MachineMisbehavior {
        trial: u64,
        input: String,
        detail: String,
    },
    #[error("shutter machine exceeded its step budget on trial {trial}")]
    MachineTimeout { trial: u64 },
    #[error(
        "no cost model for machine `{machine}` at input length {len}: the census budget is \
         exhausted and no validated closed form applies"
    )]
    NoCostModel { machine: String, len: u64 },
    #[error(transparent)]
    Census(#[from] CensusError),
}

// ---------------------------------------------------------------------------
// Closed-form analytics
// ---------------------------------------------------------------------------

/// Probability that at least one of `t` independent steps sees the
/// all-left event of probability `2^-n`: `1 - (1 - 2^-n)^t`.
///
/// Evaluated as `-expm1(t * ln1p(-2^-n))` for stability at large `n` and
/// `t`; the `t = 1` case returns `2^-n` exactly.
pub fn analytic_p(n_molecules: u32, t_steps: u64) -> f64 {
    let q = (-(n_molecules as f64)).exp2();
    if t_steps == 1 {
        return q;
    }
    -f64::exp_m1(t_steps as f64 * f64::ln_1p(-q))
}

/// Binary entropy in bits; 0 at the endpoints.
pub fn binary_entropy(p: f64) -> f64 {
    if p <= 0.0 || p >= 1.0 {
        return 0.0;
    }
    -p * p.log2() - (1.0 - p) * (1.0 - p).log2()
}

/// Expected entropy change of the container in bits: `-p * N`, plus the
/// variant that charges the binary-entropy mixing slack for not knowing
/// which macrostate resulted (at most one bit more).
pub fn expected_entropy_change(n_molecules: u32, t_steps: u64) -> (f64, f64) {
    let p = analytic_p(n_molecules, t_steps);
    let ds = -p * n_molecules as f64;
    (ds, ds + binary_entropy(p))
}

// ---------------------------------------------------------------------------
// Monte Carlo
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct ExperimentParams {
    /// N: molecules in the container.
    pub molecules: u32,
    /// T: observation steps per trial.
    pub steps: u64,
    pub trials: u64,
    pub seed: u64,
    /// Verify accept <-> contains-a against the membership predicate on
    /// every trial.
    pub cross_check: bool,
    /// Extension (not part of the modeled experiment): close on "at least
    /// this fraction of molecules left" instead of the all-left event.
    pub left_fraction: Option<f64>,
    /// Verbose gas model: sample each molecule's side per step instead of
    /// one Bernoulli draw per step. Statistically identical, much slower,
    /// and a different (still deterministic) random stream.
    pub sample_positions: bool,
    pub max_machine_steps: u64,
}

impl ExperimentParams {
    pub fn new(molecules: u32, steps: u64, trials: u64, seed: u64) -> Self {
        ExperimentParams {
            molecules,
            steps,
            trials,
            seed,
            cross_check: false,
            left_fraction: None,
            sample_positions: false,
            max_machine_steps: 0,
        }
    }

    fn machine_step_budget(&self) -> u64 {
        if self.max_machine_steps > 0 {
            self.max_machine_steps
        } else {
            16 * self.steps + 1024
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct DemonStats {
    pub molecules: u32,
    pub steps: u64,
    pub trials: u64,
    pub seed: u64,
    /// Fraction of trials whose observation string contains an `a`.
    pub empirical_p: f64,
    /// Bookkeeping identity: `-empirical_p * molecules`.
    pub mean_ds_bits: f64,
    pub trials_containing_a: u64,
    /// Trials where the machine accepted within the observation window.
    pub trials_closed: u64,
    /// Count of `a`s per trial -> number of trials.
    pub a_count_histogram: BTreeMap<u32, u64>,
    /// Step at which the shutter closed -> number of trials.
    pub close_step_histogram: BTreeMap<u64, u64>,
    pub trials_never_closed: u64,
}

pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The documented (seed, trial index) -> substream seed mix.
pub fn trial_seed(seed: u64, trial: u64) -> u64 {
    splitmix64(seed ^ trial.wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct TrialOutcome {
    contains_a: bool,
    a_count: u32,
    /// Input position consumed by the accepting transition, if any.
    close_step: Option<u64>,
}

/// Monte Carlo trials of the shutter experiment with the default machine N.
pub fn simulate_trials(params: &ExperimentParams) -> Result<DemonStats, DemonError> {
    simulate_trials_with(&corpus::machine_n(), params)
}

/// Monte Carlo trials with an explicit shutter machine. The machine is
/// expected to recognize the contains-an-`a` language over `{a, b}`
/// (asserted by the caller; `cross_check` verifies it per trial).
pub fn simulate_trials_with(
    machine: &Machine,
    params: &ExperimentParams,
) -> Result<DemonStats, DemonError> {
    if params.molecules == 0 || params.molecules > 60 {
        return Err(DemonError::InvalidParams(
            "molecules must be between 1 and 60".to_string(),
        ));
    }
    if params.steps == 0 || params.trials == 0 {
        return Err(DemonError::InvalidParams(
            "steps and trials must be positive".to_string(),
        ));
    }
    if let Some(f) = params.left_fraction {
        if !(0.0..=1.0).contains(&f) {
            return Err(DemonError::InvalidParams(
                "left_fraction must lie in [0, 1]".to_string(),
            ));
        }
    }
    let a = machine.input_alphabet().lookup("a");
    let b = machine.input_alphabet().lookup("b");
    let (Some(a), Some(b)) = (a, b) else {
        return Err(DemonError::InvalidParams(
            "shutter machine must use the alphabet {a, b}".to_string(),
        ));
    };
    let a = InputSym(a);
    let b = InputSym(b);

    // Threshold on a raw u64 draw. The all-left default is the exact
    // dyadic probability 2^-N; the fractional extension quantizes the
    // binomial tail to u64 resolution.
    let threshold: u128 = match params.left_fraction {
        None | Some(1.0) => 1u128 << (64 - params.molecules),
        Some(frac) => {
            let need = (frac * params.molecules as f64).ceil() as u32;
            let p = binomial_tail_at_least(params.molecules, need);
            (p * 2f64.powi(64)) as u128
        }
    };
    let need_left = params
        .left_fraction
        .map(|f| (f * params.molecules as f64).ceil() as u32)
        .unwrap_or(params.molecules);

    let outcomes: Vec<Result<TrialOutcome, DemonError>> = (0..params.trials)
        .into_par_iter()
        .map(|trial| run_trial(machine, params, trial, a, b, threshold, need_left))
        .collect();

    let mut stats = DemonStats {
        molecules: params.molecules,
        steps: params.steps,
        trials: params.trials,
        seed: params.seed,
        empirical_p: 0.0,
        mean_ds_bits: 0.0,
        trials_containing_a: 0,
        trials_closed: 0,
        a_count_histogram: BTreeMap::new(),
        close_step_histogram: BTreeMap::new(),
        trials_never_closed: 0,
    };
    for outcome in outcomes {
        let o = outcome?;
        if o.contains_a {
            stats.trials_containing_a += 1;
        }
        *stats.a_count_histogram.entry(o.a_count).or_insert(0) += 1;
        match o.close_step {
            Some(step) if step <= params.steps => {
                stats.trials_closed += 1;
                *stats.close_step_histogram.entry(step).or_insert(0) += 1;
            }
            _ => stats.trials_never_closed += 1,
        }
    }
    stats.empirical_p = stats.trials_containing_a as f64 / stats.trials as f64;
    stats.mean_ds_bits = -stats.empirical_p * params.molecules as f64;
    Ok(stats)
}

fn run_trial(
    machine: &Machine,
    params: &ExperimentParams,
    trial: u64,
    a: InputSym,
    b: InputSym,
    threshold: u128,
    need_left: u32,
) -> Result<TrialOutcome, DemonError> {
    let mut rng = Pcg64Mcg::seed_from_u64(trial_seed(params.seed, trial));
    let mut observation = Vec::with_capacity(params.steps as usize);
    let mut a_count = 0u32;
    for _ in 0..params.steps {
        let all_left = if params.sample_positions {
            let mut left = 0u32;
            let mut remaining = params.molecules;
            while remaining > 0 {
                let take = remaining.min(64);
                let bits = rng.next_u64();
                let mask = if take == 64 {
                    u64::MAX
                } else {
                    (1u64 << take) - 1
                };
                left += (bits & mask).count_ones();
                remaining -= take;
            }
            left >= need_left
        } else {
            (rng.next_u64() as u128) < threshold
        };
        if all_left {
            a_count += 1;
            observation.push(a);
        } else {
            observation.push(b);
        }
    }

    let result = sim::run(machine, &observation, params.machine_step_budget(), false);
    let contains_a = a_count > 0;
    let close_step = match result.outcome {
        RunOutcome::Accepted => Some(bennett::consumed_symbols(&result) as u64),
        RunOutcome::Timeout => return Err(DemonError::MachineTimeout { trial }),
        _ => None,
    };
    if params.cross_check {
        let accepted = result.outcome == RunOutcome::Accepted;
        if accepted != contains_a {
            return Err(DemonError::MachineMisbehavior {
                trial,
                input: machine.decode_input(&observation),
                detail: if contains_a {
                    "contains an a but was not accepted".to_string()
                } else {
                    "contains no a but was accepted".to_string()
                },
            });
        }
    }
    Ok(TrialOutcome {
        contains_a,
        a_count,
        close_step,
    })
}

fn binomial_tail_at_least(n: u32, k: u32) -> f64 {
    // P(Binomial(n, 1/2) >= k), exact summation.
    if k == 0 {
        return 1.0;
    }
    let mut coeff = 1.0f64; // C(n, 0)
    let mut sum = 0.0f64;
    for j in 0..=n {
        if j >= k {
            sum += coeff;
        }
        coeff = coeff * (n - j) as f64 / (j + 1) as f64;
    }
    sum * (-(n as f64)).exp2()
}

// ---------------------------------------------------------------------------
// Poisson comparison
// ---------------------------------------------------------------------------

/// Exact total-variation distance between `Binomial(T, 2^-N)` and
/// `Poisson(T * 2^-N)`, by direct summation over counts `0..=T` plus the
/// Poisson tail.
pub fn poisson_total_variation(
    n_molecules: u32,
    t_steps: u64,
    budget: u64,
) -> Result<f64, DemonError> {
    if n_molecules == 0 || t_steps == 0 {
        return Err(DemonError::InvalidParams(
            "molecules and steps must be positive".to_string(),
        ));
    }
    if t_steps > budget {
        return Err(DemonError::Budget {
            required: t_steps,
            budget,
        });
    }
    let q = (-(n_molecules as f64)).exp2();
    let lambda = t_steps as f64 * q;

    let mut binom = f64::exp(t_steps as f64 * f64::ln_1p(-q));
    let mut pois = f64::exp(-lambda);
    let mut pois_cdf = 0.0f64;
    let mut sum_abs = 0.0f64;
    for k in 0..=t_steps {
        sum_abs += (binom - pois).abs();
        pois_cdf += pois;
        let kf = k as f64;
        binom *= (t_steps as f64 - kf) / (kf + 1.0) * (q / (1.0 - q));
        pois *= lambda / (kf + 1.0);
    }
    let tail = (1.0 - pois_cdf).max(0.0);
    Ok(0.5 * (sum_abs + tail))
}

// ---------------------------------------------------------------------------
// Second-law ledger
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CostProvenance {
    Census,
    ClosedForm,
}

#[derive(Debug, Clone, Serialize)]
pub struct MagnitudeCheck {
    /// `p * N`, the expected entropy decrease in bits.
    pub p_times_n: f64,
    /// `log2(T) / 2`, the bound it should meet when `T = 2^N`.
    pub half_log2_t: f64,
    pub holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerReport {
    pub machine: String,
    pub molecules: u32,
    pub steps: u64,
    pub p: f64,
    #[serde(rename = "dS")]
    pub ds: f64,
    #[serde(rename = "Hb")]
    pub hb: f64,
    #[serde(rename = "H")]
    pub h: f64,
    #[serde(rename = "H_provenance")]
    pub h_provenance: CostProvenance,
    /// The second-law inequality: the container's expected entropy change
    /// may not undercut the negated machine cost.
    pub verdict: bool,
    /// Present when `T = 2^N`: the coarse `p*N >= log2(T)/2` bound.
    pub magnitude_check: Option<MagnitudeCheck>,
}

/// Computes the expected entropy change and the machine's thermodynamic
/// cost `H` at input length `T`, and checks `dS >= -H`.
///
/// `H` comes from a direct census when `|Sigma|^T` fits the budget;
/// otherwise a validated closed form is used for the bundled machine N
/// (`H = log2(T+1)`, the census value at every checkable length). The
/// provenance is always recorded.
pub fn second_law_ledger(
    machine: &Machine,
    molecules: u32,
    steps: u64,
    max_steps: u64,
    budget: u64,
) -> Result<LedgerReport, DemonError> {
    if molecules == 0 || steps == 0 {
        return Err(DemonError::InvalidParams(
            "molecules and steps must be positive".to_string(),
        ));
    }
    let p = analytic_p(molecules, steps);
    let ds = -p * molecules as f64;
    let hb = binary_entropy(p);

    let base = machine.input_alphabet().len() as u128;
    let space = base
        .checked_pow(steps.min(u32::MAX as u64) as u32)
        .unwrap_or(u128::MAX);
    let (h, provenance) = if steps <= usize::MAX as u64 && space <= budget as u128 {
        let census = census::final_dp_census(machine, steps as usize, max_steps, budget)?;
        (census.cost_bits, CostProvenance::Census)
    } else if serialize_machine(machine) == serialize_machine(&corpus::machine_n()) {
        (((steps + 1) as f64).log2(), CostProvenance::ClosedForm)
    } else {
        return Err(DemonError::NoCostModel {
            machine: machine.name().to_string(),
            len: steps,
        });
    };

    let magnitude_check = if steps == 1u64.checked_shl(molecules).unwrap_or(0) {
        let p_times_n = p * molecules as f64;
        let half_log2_t = (steps as f64).log2() / 2.0;
        Some(MagnitudeCheck {
            p_times_n,
            half_log2_t,
            holds: p_times_n >= half_log2_t,
        })
    } else {
        None
    };

    Ok(LedgerReport {
        machine: machine.name().to_string(),
        molecules,
        steps,
        p,
        ds,
        hb,
        h,
        h_provenance: provenance,
        verdict: ds >= -h,
        magnitude_check,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn analytic_p_at_t1_is_exactly_two_to_minus_n() {
        for n in 1..=30u32 {
            assert_eq!(analytic_p(n, 1), (-(n as f64)).exp2(), "n = {n}");
        }
    }

    #[test]
    fn analytic_p_10_1024_matches_the_iterated_product() {
        let p = analytic_p(10, 1024);
        // Independent route: multiply (1 - 2^-10) out 1024 times.
        let q = 2f64.powi(-10);
        let mut survival = 1.0f64;
        for _ in 0..1024 {
            survival *= 1.0 - q;
        }
        let p_iter = 1.0 - survival;
        assert!((p - p_iter).abs() < 1e-9, "p={p}, iterated={p_iter}");
        assert!((p - 0.6323003).abs() <= 1e-7);
    }

    #[test]
    fn analytic_p_approaches_1_minus_1_over_e() {
        let p = analytic_p(20, 1 << 20);
        assert!((p - (1.0 - (-1.0f64).exp())).abs() < 1e-6);
        for n in 1..=20u32 {
            assert!(analytic_p(n, 1 << n) > 0.5, "n = {n}");
        }
    }

    #[test]
    fn analytic_p_is_monotone() {
        // Strict monotonicity holds until p saturates at 1.0 in f64, so
        // the grid stays below that regime.
        for n in 1..=8u32 {
            for t in 1..32u64 {
                assert!(analytic_p(n, t + 1) > analytic_p(n, t));
                assert!(analytic_p(n + 1, t) < analytic_p(n, t));
            }
        }
    }

    #[test]
    fn entropy_change_at_10_1024() {
        let (ds, with_mixing) = expected_entropy_change(10, 1024);
        assert!((ds + 6.3230).abs() < 1e-3);
        let hb = with_mixing - ds;
        assert!((hb - 0.9490).abs() < 1e-3);
        assert!(hb <= 1.0);
    }

    #[test]
    fn entropy_change_at_t1_is_n_over_2_to_n() {
        for n in 1..=16u32 {
            let (ds, _) = expected_entropy_change(n, 1);
            assert_eq!(ds, -(n as f64) * (-(n as f64)).exp2());
        }
    }

    #[test]
    fn binary_entropy_peaks_at_one() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
    }

    #[test]
    fn trials_at_n1_t1_are_a_fair_coin() {
        let params = ExperimentParams::new(1, 1, 100_000, 7);
        let stats = simulate_trials(&params).unwrap();
        assert!(
            (stats.empirical_p - 0.5).abs() < 0.01,
            "p = {}",
            stats.empirical_p
        );
    }

    #[test]
    fn trials_match_the_analytic_probability() {
        let mut params = ExperimentParams::new(10, 1024, 100_000, 42);
        params.cross_check = true;
        let stats = simulate_trials(&params).unwrap();
        assert!(
            (stats.empirical_p - 0.6323).abs() <= 0.01,
            "p = {}",
            stats.empirical_p
        );
        assert_eq!(stats.mean_ds_bits, -stats.empirical_p * 10.0);
        assert_eq!(stats.trials_closed, stats.trials_containing_a);
        assert_eq!(
            stats.trials_never_closed + stats.trials_closed,
            stats.trials
        );
        let total: u64 = stats.a_count_histogram.values().sum();
        assert_eq!(total, stats.trials);
    }

    #[test]
    fn monte_carlo_agrees_within_four_sigma_at_fixed_seeds() {
        let trials = 20_000u64;
        let p = analytic_p(4, 16);
        let sigma = (p * (1.0 - p) / trials as f64).sqrt();
        for seed in [1u64, 2, 3] {
            let stats = simulate_trials(&ExperimentParams::new(4, 16, trials, seed)).unwrap();
            assert!(
                (stats.empirical_p - p).abs() <= 4.0 * sigma,
                "seed {seed}: {} vs {p}",
                stats.empirical_p
            );
        }
    }

    #[test]
    fn position_sampling_matches_the_bernoulli_path_statistically() {
        let mut params = ExperimentParams::new(3, 8, 20_000, 11);
        params.sample_positions = true;
        let stats = simulate_trials(&params).unwrap();
        let p = analytic_p(3, 8);
        let sigma = (p * (1.0 - p) / params.trials as f64).sqrt();
        assert!((stats.empirical_p - p).abs() <= 5.0 * sigma);
    }

    #[test]
    fn misbehaving_shutter_is_caught() {
        // N with the a-rule routed to rej rejects everything.
        let text = "\
machine never
input_alphabet: a b
work_alphabet: _
tapes: 1
state q0 sighted start
state acc accept
state rej reject
rule q0 a [_] -> rej [_] [S]
rule q0 b [_] -> q0 [_] [S]
rule q0 < [_] -> rej [_] [S]
";
        let m = crate::machine::parse_machine(text).unwrap();
        let mut params = ExperimentParams::new(1, 8, 64, 5);
        params.cross_check = true;
        assert!(matches!(
            simulate_trials_with(&m, &params),
            Err(DemonError::MachineMisbehavior { .. })
        ));
    }

    #[test]
    fn close_steps_match_first_a_positions_for_machine_n() {
        let params = ExperimentParams::new(2, 16, 2_000, 9);
        let stats = simulate_trials(&params).unwrap();
        for &step in stats.close_step_histogram.keys() {
            assert!((1..=16).contains(&step));
        }
    }

    #[test]
    fn tv_against_poisson_is_below_le_cam_at_10_1024() {
        let tv = poisson_total_variation(10, 1024, DEFAULT_TV_BUDGET).unwrap();
        assert!(tv <= 2f64.powi(-10), "tv = {tv}");
        assert!(tv > 0.0);
    }

    #[test]
    fn tv_at_t1_matches_the_two_term_formula() {
        let n = 6u32;
        let q = 2f64.powi(-(n as i32));
        let tv = poisson_total_variation(n, 1, DEFAULT_TV_BUDGET).unwrap();
        // Direct: counts 0 and 1 plus the Poisson tail above 1.
        let e = (-q).exp();
        let expected = 0.5 * (((1.0 - q) - e).abs() + (q - q * e).abs() + (1.0 - e - q * e));
        assert!((tv - expected).abs() < 1e-15);
    }

    #[test]
    fn tv_budget_is_enforced() {
        assert!(matches!(
            poisson_total_variation(10, 1 << 30, DEFAULT_TV_BUDGET),
            Err(DemonError::Budget { .. })
        ));
    }

    #[test]
    fn ledger_holds_at_10_1024() {
        let n = corpus::machine_n();
        let report = second_law_ledger(&n, 10, 1024, 10_000, census::DEFAULT_BUDGET).unwrap();
        assert!(report.verdict);
        assert_eq!(report.h_provenance, CostProvenance::ClosedForm);
        assert!((report.h - 1025f64.log2()).abs() < 1e-12);
        assert!((report.ds + 6.3230).abs() < 1e-3);
        let mag = report.magnitude_check.expect("T = 2^N");
        assert!(mag.holds);
        assert!((mag.half_log2_t - 5.0).abs() < 1e-12);
    }

    #[test]
    fn ledger_smallest_instance() {
        let n = corpus::machine_n();
        let report = second_law_ledger(&n, 1, 1, 10_000, census::DEFAULT_BUDGET).unwrap();
        assert_eq!(report.ds, -0.5);
        assert_eq!(report.h, 1.0);
        assert_eq!(report.h_provenance, CostProvenance::Census);
        assert!(report.verdict);
    }

    #[test]
    fn ledger_without_a_cost_model_errors() {
        let m = corpus::machine_m_bad();
        assert!(matches!(
            second_law_ledger(&m, 10, 1024, 10_000, census::DEFAULT_BUDGET),
            Err(DemonError::NoCostModel { .. })
        ));
    }
}
