use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use clerical::corpus::{check_entry_with, load_corpus, write_summary, CheckConfig};
use clerical::eval::{run_with_restarts, Diagnostic, EvalConfig, DEFAULT_PRECISION, DEFAULT_PRECISION_CAP};
use clerical::numerics::Precision;
use clerical::oracle::denote_program;
use clerical::parser::parse_file;
use clerical::syntax::{pretty_program, Program};
use clerical::typecheck::{elaborate, TypedProgram};

/// Exit codes.
mod code {
    pub const OK: u8 = 0;
    pub const INTERNAL: u8 = 1;
    pub const STATIC: u8 = 2;
    pub const FRAGMENT: u8 = 3;
    pub const DEADLOCK: u8 = 4;
    pub const FUEL: u8 = 5;
    pub const PRECISION_CAP: u8 = 6;
    pub const PROPERTY: u8 = 7;
}

#[derive(Parser)]
#[command(name = "clerical", version, about = "Interpreter for the Clerical exact real language")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate a program, raising the working precision until the result
    /// is known to the requested number of digits.
    Run {
        file: PathBuf,
        /// Decimal digits printed for real results.
        #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u32).range(1..))]
        digits: u32,
        /// Initial working precision in bits.
        #[arg(long, default_value_t = DEFAULT_PRECISION, value_parser = clap::value_parser!(u64).range(2..))]
        precision: u64,
        /// Working precision at which to give up.
        #[arg(long, default_value_t = DEFAULT_PRECISION_CAP, value_parser = clap::value_parser!(u64).range(2..))]
        max_precision: u64,
        /// Maximum condition evaluations per loop instance.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: Option<u64>,
        /// Shuffle the order in which case guards are polled.
        #[arg(long)]
        seed: Option<u64>,
        /// Steps each guard may take before the next one is scheduled.
        #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
        guard_budget: u64,
    },
    /// Typecheck a program and print the type of its main expression.
    Check { file: PathBuf },
    /// Print the exact denotation of a program without limits.
    Denote {
        file: PathBuf,
        /// Unrollings of every loop.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        fuel: u64,
    },
    /// Pretty-print the parsed program.
    Parse { file: PathBuf },
    /// Check the bundled example programs against their properties.
    Corpus {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 12, value_parser = clap::value_parser!(u32).range(1..))]
        digits: u32,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write one `name<TAB>pass|fail<TAB>samples` line per entry here.
        #[arg(long)]
        summary: Option<PathBuf>,
        /// Check only the named entries.
        entries: Vec<String>,
    },
}

fn parse(file: &Path) -> Result<Program, u8> {
    parse_file(file).map_err(|e| {
        eprintln!("error: {e}");
        code::STATIC
    })
}

fn typed(file: &Path) -> Result<TypedProgram, u8> {
    let program = parse(file)?;
    elaborate(&program).map_err(|e| {
        eprintln!("error: {e}");
        code::STATIC
    })
}

fn diagnostic_code(d: &Diagnostic) -> u8 {
    match d {
        Diagnostic::Deadlock { .. } => code::DEADLOCK,
        Diagnostic::FuelExhausted { .. } => code::FUEL,
        Diagnostic::PrecisionCap { .. } => code::PRECISION_CAP,
        Diagnostic::Fault { .. } => code::INTERNAL,
    }
}

fn execute(cli: Cli) -> Result<(), u8> {
    match cli.command {
        Command::Run {
            file,
            digits,
            precision,
            max_precision,
            fuel,
            seed,
            guard_budget,
        } => {
            let program = typed(&file)?;
            let cfg = EvalConfig {
                precision: Precision::new(precision),
                guard_step_budget: guard_budget as usize,
                fuel,
                scheduler_seed: seed,
                ..EvalConfig::default()
            };
            match run_with_restarts(&program, digits, &cfg, max_precision.max(precision)) {
                Ok(r) => {
                    println!("{}", r.text);
                    Ok(())
                }
                Err(d) => {
                    eprintln!("error: {d}");
                    Err(diagnostic_code(&d))
                }
            }
        }
        Command::Check { file } => {
            let program = typed(&file)?;
            println!("TYPE: {}", program.main_type());
            Ok(())
        }
        Command::Denote { file, fuel } => {
            let program = typed(&file)?;
            match denote_program(&program, fuel) {
                Ok(d) => {
                    println!("{d}");
                    Ok(())
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    Err(code::FRAGMENT)
                }
            }
        }
        Command::Parse { file } => {
            let program = parse(&file)?;
            print!("{}", pretty_program(&program));
            Ok(())
        }
        Command::Corpus {
            trials,
            digits,
            seed,
            summary,
            entries,
        } => {
            let cfg = CheckConfig {
                trials,
                digits,
                seed,
                ..CheckConfig::default()
            };
            let selected: Vec<_> = load_corpus()
                .into_iter()
                .filter(|e| entries.is_empty() || entries.iter().any(|n| n == e.name))
                .collect();
            if let Some(unknown) = entries.iter().find(|n| !selected.iter().any(|e| e.name == n.as_str())) {
                eprintln!("error: no corpus entry named `{unknown}`");
                return Err(code::STATIC);
            }
            let reports: Vec<_> = selected
                .iter()
                .map(|e| {
                    let r = check_entry_with(e, &cfg);
                    println!("{r}");
                    r
                })
                .collect();
            if let Some(path) = summary {
                write_summary(&reports, &path).map_err(|e| {
                    eprintln!("error: cannot write {}: {e}", path.display());
                    code::INTERNAL
                })?;
            }
            if reports.iter().all(|r| r.passed()) {
                Ok(())
            } else {
                Err(code::PROPERTY)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::from(code::OK),
        Err(c) => ExitCode::from(c),
    }
}
