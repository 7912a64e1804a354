//! Command-line front end.
//!
//! Exit statuses: 0 valid / satisfiable / no countermodel found, 1 invalid /
//! unsatisfiable / countermodel found, 2 resource or budget limit, 64 usage
//! or formula syntax error, 65 bad model file contents, 66 unreadable file,
//! 70 internal inconsistency.

use std::io::{Read, Write};
use std::path::PathBuf;

use clap::{Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::formula::{parse, Formula, SourceFormula};
use crate::model::{KripkeModel, Mode};
use crate::oracle::{self, SearchBounds, SearchOutcome, Target, Verification};
use crate::tableau::{self, SatMode, TableauConfig, TableauError, Verdict};
use crate::translate::TranslationKind;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_LIMIT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_DATA: i32 = 65;
pub const EXIT_NO_INPUT: i32 = 66;
pub const EXIT_INTERNAL: i32 = 70;
/// The reader closed stdout early, as a shell reports death by SIGPIPE.
pub const EXIT_BROKEN_PIPE: i32 = 141;

#[derive(Debug, Parser)]
#[command(name = "paragodel", version, about = "Prover, model checker and model search for paraconsistent Gödel modal logic")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Decide validity with the constraint tableau.
    Prove {
        /// Formula text; read from stdin when omitted or `-`.
        formula: Option<String>,
        #[arg(long, default_value = "strong")]
        mode: Mode,
        /// Write the rule-application transcript to this file.
        #[arg(long)]
        transcript: Option<PathBuf>,
        /// Largest number of constraints on a branch.
        #[arg(long)]
        max_states: Option<usize>,
        /// Largest number of worlds on a branch.
        #[arg(long)]
        max_worlds: Option<usize>,
    },
    /// Evaluate a formula at a world of a JSON model.
    Eval {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        world: String,
        formula: Option<String>,
    },
    /// Decide satisfiability with the constraint tableau.
    Sat {
        formula: Option<String>,
        #[arg(long, default_value = "pos1")]
        mode: SatMode,
    },
    /// Bounded brute-force countermodel search.
    Oracle {
        formula: Option<String>,
        #[arg(long, default_value = "strong")]
        mode: Mode,
        #[arg(long)]
        max_worlds: Option<usize>,
        /// Values range over multiples of 1/GRID.
        #[arg(long, default_value_t = 2)]
        grid: u32,
        /// Both relations crisp.
        #[arg(long)]
        crisp: bool,
        /// R⁻ crisp, R⁺ fuzzy.
        #[arg(long)]
        crisp_minus: bool,
        /// R⁺ = R⁻.
        #[arg(long)]
        mono: bool,
        #[arg(long, default_value_t = oracle::DEFAULT_BUDGET)]
        budget: u64,
        /// Write `index | model-hash | verdict` lines to this file.
        #[arg(long)]
        transcript: Option<PathBuf>,
    },
    /// Translate a box/diamond formula (`box`/`dia` read as □/◇).
    Translate {
        #[arg(long)]
        kind: TranslationKind,
        formula: Option<String>,
    },
    /// Report frame properties of a JSON model.
    Frames {
        #[arg(long)]
        model: PathBuf,
    },
    /// Compare tableau verdicts with the oracle on seeded random formulas.
    Crosscheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        count: usize,
        /// Largest formula size.
        #[arg(long, default_value_t = 8)]
        size: usize,
        #[arg(long, default_value = "strong")]
        mode: Mode,
    },
}

/// A failure with its exit status and message.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

fn fail(code: i32, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

fn formula_text(arg: Option<String>) -> Result<String, Failure> {
    match arg.as_deref() {
        None | Some("-") => {
            let mut s = String::new();
            std::io::stdin()
                .read_to_string(&mut s)
                .map_err(|e| fail(EXIT_NO_INPUT, format!("cannot read stdin: {e}")))?;
            Ok(s.trim().to_string())
        }
        Some(s) => Ok(s.to_string()),
    }
}

fn read_formula(arg: Option<String>) -> Result<Formula, Failure> {
    let text = formula_text(arg)?;
    parse(&text).map_err(|e| fail(EXIT_USAGE, e.to_string()))
}

fn read_model(path: &PathBuf) -> Result<KripkeModel, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_NO_INPUT, format!("cannot read {}: {e}", path.display())))?;
    KripkeModel::from_json(&text).map_err(|e| fail(EXIT_DATA, format!("{}: {e}", path.display())))
}

fn write_lines(path: &PathBuf, lines: &[String]) -> Result<(), Failure> {
    let mut text = lines.join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| fail(EXIT_NO_INPUT, format!("cannot write {}: {e}", path.display())))
}

fn tableau_failure(e: TableauError) -> Failure {
    match e {
        TableauError::ResourceLimit(_) => fail(EXIT_LIMIT, format!("RESOURCE LIMIT: {e}")),
        TableauError::RealisationFailure(_) => fail(EXIT_INTERNAL, e.to_string()),
    }
}

/// Runs a parsed command, writing the report to `out`.
pub fn execute(cmd: Command, out: &mut dyn Write) -> Result<i32, Failure> {
    let io = |e: std::io::Error| match e.kind() {
        std::io::ErrorKind::BrokenPipe => fail(EXIT_BROKEN_PIPE, String::new()),
        _ => fail(EXIT_INTERNAL, e.to_string()),
    };
    match cmd {
        Command::Prove { formula, mode, transcript, max_states, max_worlds } => {
            let phi = read_formula(formula)?;
            let mut config = TableauConfig { record_transcript: transcript.is_some(), ..Default::default() };
            if let Some(n) = max_states {
                config.max_constraints = n;
            }
            if let Some(n) = max_worlds {
                config.max_worlds = n;
            }
            let proof = tableau::prove_with(&phi, mode, &config).map_err(tableau_failure)?;
            if let Some(path) = &transcript {
                write_lines(path, &proof.transcript)?;
            }
            match proof.verdict {
                Verdict::Proved => {
                    writeln!(out, "VALID").map_err(io)?;
                    Ok(EXIT_OK)
                }
                Verdict::Countermodel(cm) => {
                    writeln!(out, "INVALID").map_err(io)?;
                    writeln!(out, "witness: {} coordinate {} value {}", cm.world, cm.coord, cm.value).map_err(io)?;
                    writeln!(out, "{}", cm.model.to_json()).map_err(io)?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Eval { model, world, formula } => {
            let phi = read_formula(formula)?;
            let m = read_model(&model)?;
            let v = m.eval(&world, &phi).map_err(|e| fail(EXIT_DATA, e.to_string()))?;
            writeln!(out, "{v}").map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Sat { formula, mode } => {
            let phi = read_formula(formula)?;
            let r = tableau::decide_sat(&phi, mode).map_err(tableau_failure)?;
            match r.model {
                Some((m, w)) if r.satisfiable => {
                    writeln!(out, "SAT").map_err(io)?;
                    writeln!(out, "world: {w}").map_err(io)?;
                    writeln!(out, "{}", m.to_json()).map_err(io)?;
                    Ok(EXIT_OK)
                }
                _ => {
                    writeln!(out, "UNSAT").map_err(io)?;
                    Ok(EXIT_NEGATIVE)
                }
            }
        }
        Command::Oracle { formula, mode, max_worlds, grid, crisp, crisp_minus, mono, budget, transcript } => {
            let phi = read_formula(formula)?;
            let mut b = SearchBounds::for_formula(&phi);
            if let Some(n) = max_worlds {
                b.max_worlds = n;
            }
            b.grid_denominator = grid;
            b.crisp_only = crisp;
            b.crisp_minus_only = crisp_minus;
            b.mono_relational_only = mono;
            b.budget = budget;
            let s = oracle::search(&phi, Target::Violation(mode), &b, transcript.is_some()).map_err(|e| match e {
                oracle::OracleError::InvalidBounds(_) => fail(EXIT_USAGE, e.to_string()),
                oracle::OracleError::Inconsistent(_) => fail(EXIT_INTERNAL, e.to_string()),
            })?;
            if let Some(path) = &transcript {
                write_lines(path, &s.transcript)?;
            }
            let bounds = format!("worlds <= {}, grid 1/{}", b.max_worlds, b.grid_denominator);
            match s.outcome {
                SearchOutcome::Found(hit) => {
                    writeln!(out, "COUNTERMODEL ({bounds})").map_err(io)?;
                    writeln!(out, "index: {} witness: {} value {}", hit.index, hit.world, hit.value).map_err(io)?;
                    writeln!(out, "{}", hit.model.to_json()).map_err(io)?;
                    Ok(EXIT_NEGATIVE)
                }
                SearchOutcome::NotFound { models } => {
                    writeln!(out, "NONE ({bounds}, {models} models)").map_err(io)?;
                    Ok(EXIT_OK)
                }
                SearchOutcome::BudgetExceeded { required, budget } => {
                    writeln!(out, "BUDGET EXCEEDED ({bounds}, {required} models > budget {budget})").map_err(io)?;
                    Ok(EXIT_LIMIT)
                }
            }
        }
        Command::Translate { kind, formula } => {
            let phi = read_formula(formula)?;
            let src = SourceFormula::try_from(&phi).map_err(|e| fail(EXIT_USAGE, e.to_string()))?;
            writeln!(out, "{}", kind.apply(&src)).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Frames { model } => {
            let m = read_model(&model)?;
            let p = m.frame_predicates();
            writeln!(out, "crisp_plus: {}", p.crisp_plus).map_err(io)?;
            writeln!(out, "crisp_minus: {}", p.crisp_minus).map_err(io)?;
            writeln!(out, "mono_relational: {}", p.mono_relational).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Crosscheck { seed, count, size, mode } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut proved, mut refuted, mut discrepancies, mut inconclusive) = (0, 0, 0, 0);
            for i in 0..count {
                let n = 1 + i % size.max(1);
                let phi = oracle::random_formula(&mut rng, n, &["p", "q"]);
                let v = tableau::prove(&phi, mode).map_err(tableau_failure)?;
                if v.is_proved() {
                    proved += 1;
                } else {
                    refuted += 1;
                }
                let b = SearchBounds { max_worlds: 2, ..SearchBounds::for_formula(&phi) };
                match oracle::check_verdict(&phi, mode, &v, &b).map_err(|e| fail(EXIT_INTERNAL, e.to_string()))? {
                    Verification::Confirmed => {}
                    Verification::Inconclusive => inconclusive += 1,
                    Verification::Discrepancy => {
                        discrepancies += 1;
                        writeln!(out, "DISCREPANCY: {phi}").map_err(io)?;
                    }
                }
            }
            writeln!(out, "formulas: {count}").map_err(io)?;
            writeln!(out, "proved: {proved}").map_err(io)?;
            writeln!(out, "refuted: {refuted}").map_err(io)?;
            writeln!(out, "inconclusive: {inconclusive}").map_err(io)?;
            writeln!(out, "discrepancies: {discrepancies}").map_err(io)?;
            Ok(if discrepancies == 0 { EXIT_OK } else { EXIT_NEGATIVE })
        }
    }
}

/// Parses `args` (including the program name), runs the command against
/// stdout and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli.command, &mut lock) {
        Ok(code) => code,
        Err(f) => {
            let _ = lock.flush();
            if !f.message.is_empty() {
                eprintln!("{}", f.message);
            }
            f.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cmd(args: &[&str]) -> (i32, String) {
        let cli = Cli::try_parse_from(std::iter::once("paragodel").chain(args.iter().copied())).unwrap();
        let mut out = Vec::new();
        let code = match execute(cli.command, &mut out) {
            Ok(c) => c,
            Err(f) => f.code,
        };
        (code, String::from_utf8(out).unwrap())
    }

    #[test]
    fn prove_and_translate() {
        assert_eq!(run_cmd(&["prove", "p -> p", "--mode", "strong"]), (0, "VALID\n".into()));
        let (code, out) = run_cmd(&["prove", "neg box p -> box neg p", "--mode", "neg"]);
        assert_eq!(code, 1);
        assert!(out.starts_with("INVALID\n"));
        assert_eq!(run_cmd(&["translate", "--kind", "partial", "box p"]), (0, "box (1 -< (1 -< p))\n".into()));
        assert_eq!(run_cmd(&["prove", "p &"]).0, EXIT_USAGE);
        assert_eq!(run_cmd(&["prove", "box p -> p", "--max-states", "1"]).0, EXIT_LIMIT);
    }

    #[test]
    fn sat_and_oracle() {
        let (code, out) = run_cmd(&["sat", "p & neg p", "--mode", "pos1"]);
        assert_eq!(code, 0);
        assert!(out.starts_with("SAT\n"));
        assert_eq!(run_cmd(&["sat", "~ box (p | ~p)", "--mode", "pos1"]).0, 1);
        assert_eq!(run_cmd(&["oracle", "p -> p"]).0, 0);
        assert_eq!(run_cmd(&["oracle", "box p -> p", "--budget", "3"]).0, EXIT_LIMIT);
        assert_eq!(run_cmd(&["oracle", "dia (p | q) <-> (dia p | dia q)", "--max-worlds", "2"]).0, 1);
    }

    #[test]
    fn crosscheck_is_deterministic() {
        let a = run_cmd(&["crosscheck", "--seed", "3", "--count", "20", "--size", "6"]);
        assert_eq!(a, run_cmd(&["crosscheck", "--seed", "3", "--count", "20", "--size", "6"]));
        assert_eq!(a.0, 0);
        assert!(a.1.contains("discrepancies: 0"));
    }
}
