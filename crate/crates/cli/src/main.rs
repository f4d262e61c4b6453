//! `rotm` — command-line laboratory for read-once Turing machines.
//!
//! One subcommand per operation, machine files in the line-oriented
//! description format, JSON on stdout and diagnostics on stderr. Exit
//! codes: 0 success / property holds, 2 usage error, 3 property fails
//! (invalid machine, irreversible, census invalid, ledger violated),
//! 4 budget exceeded. `ROTM_BUDGET` overrides the enumeration guard.
//! Identical invocations produce byte-identical stdout regardless of
//! `--jobs`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use rotm_core::machine::{parse_machine, serialize_machine, Machine, ValidateMode};
use rotm_core::reversibility::ExhaustiveVerdict;
use rotm_core::{bennett, census, corpus, demon, reversibility, sim};

const EXIT_OK: u8 = 0;
const EXIT_USAGE: u8 = 2;
const EXIT_PROPERTY: u8 = 3;
const EXIT_BUDGET: u8 = 4;

#[derive(Parser)]
#[command(name = "rotm", version, about = "Read-once Turing machine laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct JobsArg {
    /// Worker threads; affects wall time only, never output bytes.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Check a machine description against the model invariants.
    Validate {
        file: PathBuf,
        /// Require a total transition function.
        #[arg(long)]
        strict: bool,
    },
    /// Simulate a machine on an input string.
    Run {
        file: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = sim::DEFAULT_MAX_STEPS)]
        max_steps: u64,
        /// Print one line per step before the JSON summary.
        #[arg(long)]
        trace: bool,
    },
    /// Decide reversibility, syntactically and/or by bounded enumeration.
    Verify {
        file: PathBuf,
        /// Run the syntactic transition-table check (the default).
        #[arg(long = "static")]
        static_check: bool,
        /// Enumerate all inputs up to --max-len and audit every reachable
        /// configuration's in-degree.
        #[arg(long)]
        exhaustive: bool,
        #[arg(long, default_value_t = 4)]
        max_len: usize,
        #[arg(long, default_value_t = 10_000)]
        max_steps: u64,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Count distinct final dynamic parts over all inputs of a length.
    Census {
        file: PathBuf,
        /// Single input length.
        #[arg(long, conflicts_with = "range")]
        len: Option<usize>,
        /// Inclusive length range `A..B`.
        #[arg(long)]
        range: Option<String>,
        #[arg(long, default_value_t = sim::DEFAULT_MAX_STEPS)]
        max_steps: u64,
        /// Emit `n,D,cost_bits,ceil_bits,timeouts` rows instead of JSON.
        #[arg(long)]
        csv: bool,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Run the b^i a^(n-i) family and check the final parts are distinct.
    Family {
        file: PathBuf,
        #[arg(long)]
        len: usize,
        #[arg(long, default_value_t = sim::DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
    /// Add a history tape that records every applied rule.
    Embed {
        file: PathBuf,
        /// Output path for the embedded machine (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Reverse a statically reversible machine's rules.
    Invert {
        file: PathBuf,
        /// Output path for the inverse machine (stdout when absent).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compute a function with the five-stage garbage-free schedule.
    Pipeline {
        file: PathBuf,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = sim::DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
    /// Monte Carlo trials of the shutter experiment.
    Demon {
        #[arg(long)]
        molecules: u32,
        #[arg(long)]
        steps: u64,
        #[arg(long)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Shutter machine (default: the bundled machine N).
        #[arg(long)]
        machine: Option<PathBuf>,
        /// Verify accept <-> contains-a on every trial.
        #[arg(long)]
        cross_check: bool,
        /// Extension: close on this fraction of molecules left instead of
        /// the all-left event.
        #[arg(long)]
        left_fraction: Option<f64>,
        /// Sample each molecule's side instead of one draw per step.
        #[arg(long)]
        sample_positions: bool,
        /// Write the a-count histogram as CSV to this path.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[command(flatten)]
        jobs: JobsArg,
    },
    /// Second-law ledger: expected entropy change against machine cost.
    Ledger {
        #[arg(long)]
        molecules: u32,
        #[arg(long)]
        steps: u64,
        /// Shutter machine (default: the bundled machine N).
        #[arg(long)]
        machine: Option<PathBuf>,
        #[arg(long, default_value_t = sim::DEFAULT_MAX_STEPS)]
        max_steps: u64,
    },
}

fn budget() -> u64 {
    std::env::var("ROTM_BUDGET")
        .ok()
        .and_then(|v| v.parse().ok())
        .unwrap_or(census::DEFAULT_BUDGET)
}

fn load_machine(path: &Path) -> Result<Machine, u8> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("rotm: cannot read {}: {e}", path.display());
            return Err(EXIT_USAGE);
        }
    };
    match parse_machine(&text) {
        Ok(m) => Ok(m),
        Err(e) => {
            eprintln!("rotm: {}: {e}", path.display());
            Err(EXIT_PROPERTY)
        }
    }
}

fn load_shutter(path: &Option<PathBuf>) -> Result<Machine, u8> {
    match path {
        Some(p) => load_machine(p),
        None => Ok(corpus::machine_n()),
    }
}

fn emit<T: Serialize>(value: &T) {
    println!(
        "{}",
        serde_json::to_string_pretty(value).expect("serializable output")
    );
}

fn with_jobs<T>(jobs: &JobsArg, f: impl FnOnce() -> T + Send) -> T
where
    T: Send,
{
    if jobs.jobs == 0 {
        f()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs.jobs)
            .build()
            .expect("thread pool");
        pool.install(f)
    }
}

#[derive(Serialize)]
struct VerifyOutput {
    #[serde(rename = "static", skip_serializing_if = "Option::is_none")]
    static_report: Option<rotm_core::reversibility::StaticReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    exhaustive: Option<rotm_core::reversibility::ExhaustiveReport>,
}

#[derive(Serialize)]
struct CensusFailure<'a> {
    error: String,
    partial: &'a census::CensusResult,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    ExitCode::from(dispatch(cli.command))
}

fn dispatch(command: Command) -> u8 {
    match command {
        Command::Validate { file, strict } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            let mode = if strict {
                ValidateMode::Strict
            } else {
                ValidateMode::Lenient
            };
            match rotm_core::machine::validate(&machine, mode) {
                Ok(report) => {
                    emit(&report);
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("rotm: {}: {e}", file.display());
                    EXIT_PROPERTY
                }
            }
        }

        Command::Run {
            file,
            input,
            max_steps,
            trace,
        } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            match sim::run_on_text(&machine, &input, max_steps, trace) {
                Ok(result) => {
                    if let Some(entries) = &result.trace {
                        for (i, entry) in entries.iter().enumerate() {
                            println!("{}", sim::render_trace_line(&machine, i, entry));
                        }
                    }
                    emit(&sim::RunSummary::new(&machine, &result));
                    EXIT_OK
                }
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Verify {
            file,
            static_check,
            exhaustive,
            max_len,
            max_steps,
            jobs,
        } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            if machine.scan() != rotm_core::machine::Scan::Forward {
                eprintln!("rotm: verify applies to forward machines");
                return EXIT_USAGE;
            }
            if exhaustive {
                let base = machine.input_alphabet().len() as u128;
                let space: u128 = (0..=max_len as u32)
                    .map(|l| base.checked_pow(l).unwrap_or(u128::MAX))
                    .fold(0u128, u128::saturating_add);
                if space > budget() as u128 {
                    eprintln!(
                        "rotm: exhaustive check over {space} inputs exceeds the budget of {}",
                        budget()
                    );
                    return EXIT_BUDGET;
                }
            }
            let want_static = static_check || !exhaustive;
            let static_report = want_static.then(|| reversibility::static_check(&machine));
            let exhaustive_report = exhaustive.then(|| {
                with_jobs(&jobs, || {
                    reversibility::exhaustive_check(&machine, max_len, max_steps)
                })
            });
            let code = match &exhaustive_report {
                Some(r) if r.verdict == ExhaustiveVerdict::Irreversible => EXIT_PROPERTY,
                _ => EXIT_OK,
            };
            emit(&VerifyOutput {
                static_report,
                exhaustive: exhaustive_report,
            });
            code
        }

        Command::Census {
            file,
            len,
            range,
            max_steps,
            csv,
            jobs,
        } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            if machine.scan() != rotm_core::machine::Scan::Forward {
                eprintln!("rotm: census applies to forward machines");
                return EXIT_USAGE;
            }
            if let Err(e) = rotm_core::machine::validate(&machine, ValidateMode::Strict) {
                eprintln!(
                    "rotm: warning: `{}` is not total; undefined keys halt-reject ({} gap(s))",
                    machine.name(),
                    e.violations.len()
                );
            }
            let (from, to) = match (len, &range) {
                (Some(n), None) => (n, n),
                (None, Some(r)) => match parse_range(r) {
                    Some(pair) => pair,
                    None => {
                        eprintln!("rotm: --range expects `A..B` with A <= B");
                        return EXIT_USAGE;
                    }
                },
                _ => {
                    eprintln!("rotm: census needs exactly one of --len or --range");
                    return EXIT_USAGE;
                }
            };
            let outcome = with_jobs(&jobs, || {
                census::cost_curve(&machine, from, to, max_steps, budget())
            });
            match outcome {
                Ok(rows) => {
                    if csv {
                        print!("{}", census::curve_csv(&rows));
                    } else if len.is_some() {
                        emit(&rows[0]);
                    } else {
                        emit(&rows);
                    }
                    EXIT_OK
                }
                Err(census::CensusError::Budget { required, budget }) => {
                    eprintln!("rotm: census over {required} inputs exceeds the budget of {budget}");
                    EXIT_BUDGET
                }
                Err(census::CensusError::Invalid { partial }) => {
                    emit(&CensusFailure {
                        error: format!("{} input(s) timed out; census invalid", partial.timeouts),
                        partial: &partial,
                    });
                    eprintln!(
                        "rotm: census invalid: non-halting inputs at length {}",
                        partial.n
                    );
                    EXIT_PROPERTY
                }
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Family {
            file,
            len,
            max_steps,
        } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            match census::theorem2_family_check(&machine, len, max_steps) {
                Ok(check) => {
                    let code = if check.distinct {
                        EXIT_OK
                    } else {
                        EXIT_PROPERTY
                    };
                    emit(&check);
                    code
                }
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Embed { file, output } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            match bennett::landauer_embed(&machine) {
                Ok(embedded) => write_machine(&embedded, output.as_deref()),
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Invert { file, output } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            match bennett::invert_rules(&machine) {
                Ok(inverse) => write_machine(&inverse, output.as_deref()),
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Pipeline {
            file,
            input,
            max_steps,
        } => {
            let machine = match load_machine(&file) {
                Ok(m) => m,
                Err(code) => return code,
            };
            match bennett::read_twice_pipeline(&machine, &input, max_steps) {
                Ok(result) => {
                    emit(&result);
                    EXIT_OK
                }
                Err(bennett::PipelineError::NotFunctionMachine(msg)) => {
                    eprintln!("rotm: {msg}");
                    EXIT_USAGE
                }
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Demon {
            molecules,
            steps,
            trials,
            seed,
            machine,
            cross_check,
            left_fraction,
            sample_positions,
            csv,
            jobs,
        } => {
            let shutter = match load_shutter(&machine) {
                Ok(m) => m,
                Err(code) => return code,
            };
            let mut params = demon::ExperimentParams::new(molecules, steps, trials, seed);
            params.cross_check = cross_check;
            params.left_fraction = left_fraction;
            params.sample_positions = sample_positions;
            let outcome = with_jobs(&jobs, || demon::simulate_trials_with(&shutter, &params));
            match outcome {
                Ok(stats) => {
                    if let Some(path) = csv {
                        let mut rows = String::from("a_count,trials\n");
                        for (count, n) in &stats.a_count_histogram {
                            rows.push_str(&format!("{count},{n}\n"));
                        }
                        if let Err(e) = std::fs::write(&path, rows) {
                            eprintln!("rotm: cannot write {}: {e}", path.display());
                            return EXIT_USAGE;
                        }
                    }
                    emit(&stats);
                    EXIT_OK
                }
                Err(demon::DemonError::InvalidParams(msg)) => {
                    eprintln!("rotm: {msg}");
                    EXIT_USAGE
                }
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }

        Command::Ledger {
            molecules,
            steps,
            machine,
            max_steps,
        } => {
            let shutter = match load_shutter(&machine) {
                Ok(m) => m,
                Err(code) => return code,
            };
            match demon::second_law_ledger(&shutter, molecules, steps, max_steps, budget()) {
                Ok(report) => {
                    let code = if report.verdict {
                        EXIT_OK
                    } else {
                        EXIT_PROPERTY
                    };
                    emit(&report);
                    code
                }
                Err(demon::DemonError::InvalidParams(msg)) => {
                    eprintln!("rotm: {msg}");
                    EXIT_USAGE
                }
                Err(e @ demon::DemonError::NoCostModel { .. }) => {
                    eprintln!("rotm: {e}");
                    EXIT_USAGE
                }
                Err(e) => {
                    eprintln!("rotm: {e}");
                    EXIT_PROPERTY
                }
            }
        }
    }
}

fn parse_range(text: &str) -> Option<(usize, usize)> {
    let (a, b) = text.split_once("..")?;
    let from: usize = a.trim().parse().ok()?;
    let to: usize = b.trim().parse().ok()?;
    (from <= to).then_some((from, to))
}

fn write_machine(machine: &Machine, output: Option<&Path>) -> u8 {
    let text = serialize_machine(machine);
    match output {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                eprintln!("rotm: cannot write {}: {e}", path.display());
                return EXIT_USAGE;
            }
            EXIT_OK
        }
        None => {
            print!("{text}");
            EXIT_OK
        }
    }
}
