//! Brute-force census of final dynamic parts.
//!
//! The thermodynamic cost of a machine at input length `n` is measured
//! operationally: run it on every input of that length, collect the
//! distinct dynamic parts it halts in, and take `log2` of their number —
//! the bits any encoding of the residue must spend on some input. The
//! census is deterministic and partition-independent: the input space is
//! split into contiguous index blocks whose per-block summaries merge by
//! count sums and witness-index minima.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::machine::{dynamic_part_of, DynamicPart, DynamicPartView, Machine};
use crate::sim::{self, RunOutcome};

/// Default cap on the number of inputs a census may enumerate.
pub const DEFAULT_BUDGET: u64 = 1 << 28;

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub dp: DynamicPartView,
    pub input: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusResult {
    pub machine: String,
    pub n: usize,
    /// Count of distinct final dynamic parts over all |Sigma|^n inputs.
    #[serde(rename = "D")]
    pub distinct: u64,
    /// log2 of `D`.
    pub cost_bits: f64,
    pub ceil_bits: u32,
    /// Lexicographically least input per distinct dynamic part, in
    /// first-seen order.
    pub witnesses: Vec<Witness>,
    pub timeouts: u64,
    /// Supplementary statistic: Shannon entropy of the final dynamic part
    /// distribution under uniform inputs. The headline cost is the
    /// worst-case `cost_bits`; this mean-case figure is reported for
    /// comparison only.
    pub mean_dp_entropy_bits: f64,
}

#[derive(Debug, Clone, Error)]
pub enum CensusError {
    #[error("census over {required} inputs exceeds the budget of {budget} (set ROTM_BUDGET to raise it)")]
    Budget { required: u128, budget: u64 },
    #[error("census invalid: {} input(s) timed out (partial results attached)", partial.timeouts)]
    Invalid { partial: Box<CensusResult> },
    #[error("machine's input alphabet lacks the symbols `a` and `b` required by the family check")]
    MissingFamilySymbols,
    #[error("family check invalid: input `{input}` timed out")]
    FamilyTimeout { input: String },
}

struct BlockSummary {
    dps: HashMap<DynamicPart, (u64, u64)>,
    timeouts: u64,
}

impl BlockSummary {
    fn empty() -> Self {
        BlockSummary {
            dps: HashMap::new(),
            timeouts: 0,
        }
    }

    fn merge(mut self, other: BlockSummary) -> BlockSummary {
        for (dp, (count, min_idx)) in other.dps {
            let entry = self.dps.entry(dp).or_insert((0, u64::MAX));
            entry.0 += count;
            entry.1 = entry.1.min(min_idx);
        }
        self.timeouts += other.timeouts;
        self
    }
}

/// Runs the machine on every input of length `n` and summarizes the set
/// of final dynamic parts. A single timeout invalidates the census (a
/// non-halting machine recognizes nothing); the partial summary rides
/// along in the error for debugging.
pub fn final_dp_census(
    machine: &Machine,
    n: usize,
    max_steps: u64,
    budget: u64,
) -> Result<CensusResult, CensusError> {
    let base = machine.input_alphabet().len() as u128;
    let required = base.checked_pow(n as u32).unwrap_or(u128::MAX);
    if required > budget as u128 {
        return Err(CensusError::Budget { required, budget });
    }
    let total = required as u64;

    let block = 4096u64;
    let blocks = total.div_ceil(block).max(1);
    let summary = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let lo = b * block;
            let hi = ((b + 1) * block).min(total);
            let mut acc = BlockSummary::empty();
            for index in lo..hi {
                let input = sim::input_by_index(machine, n, index);
                let result = sim::run(machine, &input, max_steps, false);
                if result.outcome == RunOutcome::Timeout {
                    acc.timeouts += 1;
                    continue;
                }
                let dp = dynamic_part_of(&result.final_config);
                let entry = acc.dps.entry(dp).or_insert((0, u64::MAX));
                entry.0 += 1;
                entry.1 = entry.1.min(index);
            }
            acc
        })
        .reduce(BlockSummary::empty, BlockSummary::merge);

    let result = summarize(machine, n, total, summary);
    if result.timeouts > 0 {
        return Err(CensusError::Invalid {
            partial: Box::new(result),
        });
    }
    Ok(result)
}

fn summarize(machine: &Machine, n: usize, total: u64, summary: BlockSummary) -> CensusResult {
    let distinct = summary.dps.len() as u64;
    let mut entries: Vec<(DynamicPart, (u64, u64))> = summary.dps.into_iter().collect();
    entries.sort_by_key(|(_, (_, min_idx))| *min_idx);

    let ran = total - summary.timeouts;
    let mut entropy = 0.0;
    if ran > 0 {
        for (_, (count, _)) in &entries {
            let p = *count as f64 / ran as f64;
            entropy -= p * p.log2();
        }
        if entries.len() == 1 {
            entropy = 0.0;
        }
    }

    let witnesses = entries
        .iter()
        .map(|(dp, (_, min_idx))| Witness {
            dp: DynamicPartView::new(machine, dp),
            input: machine.decode_input(&sim::input_by_index(machine, n, *min_idx)),
        })
        .collect();

    // An all-timeout partial has no parts at all; report zero cost rather
    // than log2(0).
    let cost_bits = if distinct == 0 {
        0.0
    } else {
        (distinct as f64).log2()
    };
    CensusResult {
        machine: machine.name().to_string(),
        n,
        distinct,
        cost_bits,
        ceil_bits: cost_bits.ceil() as u32,
        witnesses,
        timeouts: summary.timeouts,
        mean_dp_entropy_bits: entropy,
    }
}

/// Census at every length in `[n_from, n_to]`, for plotting against
/// `log2(n+1)`.
pub fn cost_curve(
    machine: &Machine,
    n_from: usize,
    n_to: usize,
    max_steps: u64,
    budget: u64,
) -> Result<Vec<CensusResult>, CensusError> {
    (n_from..=n_to)
        .map(|n| final_dp_census(machine, n, max_steps, budget))
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyMember {
    pub input: String,
    pub dp: DynamicPartView,
}

#[derive(Debug, Clone, Serialize)]
pub struct FamilyCheck {
    pub machine: String,
    pub n: usize,
    /// Whether the n+1 final dynamic parts are pairwise distinct.
    pub distinct: bool,
    pub members: Vec<FamilyMember>,
}

/// Runs the n+1 inputs `b^i a^(n-i)` and reports whether their final
/// dynamic parts are pairwise distinct. For a reversible recognizer of
/// the contains-an-`a` language they must be; an irreversible one is free
/// to merge them.
pub fn theorem2_family_check(
    machine: &Machine,
    n: usize,
    max_steps: u64,
) -> Result<FamilyCheck, CensusError> {
    let a = machine.input_alphabet().lookup("a");
    let b = machine.input_alphabet().lookup("b");
    let (Some(a), Some(b)) = (a, b) else {
        return Err(CensusError::MissingFamilySymbols);
    };
    let a = crate::machine::InputSym(a);
    let b = crate::machine::InputSym(b);

    let mut members = Vec::with_capacity(n + 1);
    let mut dps = Vec::with_capacity(n + 1);
    for i in 0..=n {
        let mut input = vec![b; i];
        input.extend(std::iter::repeat_n(a, n - i));
        let result = sim::run(machine, &input, max_steps, false);
        if result.outcome == RunOutcome::Timeout {
            return Err(CensusError::FamilyTimeout {
                input: machine.decode_input(&input),
            });
        }
        let dp = dynamic_part_of(&result.final_config);
        members.push(FamilyMember {
            input: machine.decode_input(&input),
            dp: DynamicPartView::new(machine, &dp),
        });
        dps.push(dp);
    }
    let mut sorted = dps.clone();
    sorted.sort();
    sorted.dedup();
    Ok(FamilyCheck {
        machine: machine.name().to_string(),
        n,
        distinct: sorted.len() == dps.len(),
        members,
    })
}

/// CSV rows (`n,D,cost_bits,ceil_bits,timeouts`) for a cost curve.
pub fn curve_csv(rows: &[CensusResult]) -> String {
    let mut out = String::from("n,D,cost_bits,ceil_bits,timeouts\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            r.n, r.distinct, r.cost_bits, r.ceil_bits, r.timeouts
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bennett::landauer_embed;
    use crate::corpus;

    #[test]
    fn census_of_n_at_length_3() {
        let m = corpus::machine_n();
        let c = final_dp_census(&m, 3, 1000, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.distinct, 4);
        assert_eq!(c.cost_bits, 2.0);
        assert_eq!(c.timeouts, 0);
        let inputs: Vec<&str> = c.witnesses.iter().map(|w| w.input.as_str()).collect();
        assert_eq!(inputs, vec!["aaa", "baa", "bba", "bbb"]);
    }

    #[test]
    fn census_of_n_at_length_1() {
        let m = corpus::machine_n();
        let c = final_dp_census(&m, 1, 1000, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.distinct, 2);
        assert_eq!(c.cost_bits, 1.0);
        let acc = c.witnesses.iter().find(|w| w.input == "a").unwrap();
        assert_eq!((acc.dp.state.as_str(), acc.dp.input_head), ("acc", 2));
        let rej = c.witnesses.iter().find(|w| w.input == "b").unwrap();
        assert_eq!((rej.dp.state.as_str(), rej.dp.input_head), ("rej", 3));
    }

    #[test]
    fn embedded_m_bad_has_a_full_transcript_census() {
        let e = landauer_embed(&corpus::machine_m_bad()).unwrap();
        let c = final_dp_census(&e, 4, 1000, DEFAULT_BUDGET).unwrap();
        assert_eq!(c.distinct, 16);
        assert_eq!(c.cost_bits, 4.0);
    }

    #[test]
    fn cost_curve_of_n_matches_n_plus_1() {
        let m = corpus::machine_n();
        let rows = cost_curve(&m, 1, 10, 1000, DEFAULT_BUDGET).unwrap();
        for r in &rows {
            assert_eq!(r.distinct, r.n as u64 + 1);
            assert_eq!(r.cost_bits, ((r.n + 1) as f64).log2());
        }
    }

    #[test]
    fn embedded_n_keeps_the_logarithmic_curve() {
        // N's history transcript is determined by where the first `a`
        // sits, so embedding does not inflate the count.
        let e = landauer_embed(&corpus::machine_n()).unwrap();
        let rows = cost_curve(&e, 1, 10, 1000, DEFAULT_BUDGET).unwrap();
        for r in &rows {
            assert_eq!(r.distinct, r.n as u64 + 1);
        }
    }

    #[test]
    fn embedded_m_bad_pays_linear_cost() {
        // M_bad scans everything, so its history transcript reveals every
        // input symbol: the worst case the compression bound allows.
        let e = landauer_embed(&corpus::machine_m_bad()).unwrap();
        let rows = cost_curve(&e, 1, 10, 1000, DEFAULT_BUDGET).unwrap();
        for r in &rows {
            assert_eq!(r.distinct, 1u64 << r.n);
            assert_eq!(r.cost_bits, r.n as f64);
        }
    }

    #[test]
    fn budget_is_enforced() {
        let m = corpus::machine_n();
        assert!(matches!(
            final_dp_census(&m, 40, 1000, DEFAULT_BUDGET),
            Err(CensusError::Budget { .. })
        ));
    }

    #[test]
    fn timeouts_invalidate_the_census() {
        let m = corpus::machine_spin();
        match final_dp_census(&m, 1, 100, DEFAULT_BUDGET) {
            Err(CensusError::Invalid { partial }) => {
                assert_eq!(partial.timeouts, 2);
            }
            other => panic!("expected invalid census, got {other:?}"),
        }
    }

    #[test]
    fn family_check_distinguishes_n_and_merges_m_bad() {
        let n = corpus::machine_n();
        let check = theorem2_family_check(&n, 5, 1000).unwrap();
        assert!(check.distinct);
        assert_eq!(check.members.len(), 6);

        let m_bad = corpus::machine_m_bad();
        let check = theorem2_family_check(&m_bad, 5, 1000).unwrap();
        assert!(!check.distinct);
    }

    #[test]
    fn family_dps_are_a_subset_of_the_census_dps() {
        let m = corpus::machine_n();
        let census = final_dp_census(&m, 5, 1000, DEFAULT_BUDGET).unwrap();
        let family = theorem2_family_check(&m, 5, 1000).unwrap();
        for member in &family.members {
            assert!(census.witnesses.iter().any(|w| w.dp == member.dp));
        }
    }

    #[test]
    fn entropy_is_between_zero_and_cost_bits() {
        let m = corpus::machine_n();
        let c = final_dp_census(&m, 6, 1000, DEFAULT_BUDGET).unwrap();
        assert!(c.mean_dp_entropy_bits > 0.0);
        assert!(c.mean_dp_entropy_bits <= c.cost_bits + 1e-12);
    }
}
