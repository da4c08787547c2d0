use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use freiman_core::{GroupSpec, Rational};

mod args;
mod commands;
mod report;
mod setfile;
mod suite;

/// Covering, energy-decrement and structure computations on finite abelian
/// groups.
#[derive(Parser, Debug)]
#[command(name = "freiman", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Statistical and Ruzsa covers of a set, or a covering sweep over
    /// generated families when only --group is given.
    Cover(Flags),
    /// Energy-decrement iteration on the indicator of a set.
    Chang(Flags),
    /// Large spectrum of a set's indicator and its annihilator.
    Spectrum(Flags),
    /// End-to-end structure pipeline with every intermediate check.
    Pipeline(Flags),
    /// Property suite over generated families in a group.
    VerifyLemmas(Flags),
    /// Emit a generated set file.
    Gen(Flags),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Random,
    Subgroup,
    CosetUnion,
    Independent,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Random => "random",
            Family::Subgroup => "subgroup",
            Family::CosetUnion => "coset-union",
            Family::Independent => "independent",
        }
    }
}

#[derive(Args, Debug, Clone)]
pub struct Flags {
    /// Group as `m1xm2x...` or `p^n`, e.g. `2x2x4`, `2^5`.
    #[arg(long, value_parser = args::parse_group)]
    group: Option<GroupSpec>,
    /// JSON set file.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Covering parameter as `p/q`.
    #[arg(long, value_parser = args::parse_rational)]
    delta: Option<Rational>,
    /// Spectrum threshold as `p/q`.
    #[arg(long, value_parser = args::parse_rational)]
    epsilon: Option<Rational>,
    /// Invariance threshold as `p/q`.
    #[arg(long, value_parser = args::parse_rational)]
    kappa: Option<Rational>,
    /// Required witness density as `p/q`.
    #[arg(long, value_parser = args::parse_rational)]
    eta: Option<Rational>,
    /// Maximum number of decrement steps.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Largest set searched exhaustively for Petridis subsets.
    #[arg(long)]
    cap: Option<usize>,
    /// Instances per family for sweeps and the property suite.
    #[arg(long)]
    count: Option<usize>,
    /// Family for `gen`.
    #[arg(long, value_enum)]
    family: Option<Family>,
    /// Set size for the random family.
    #[arg(long)]
    size: Option<usize>,
}

/// Exit status classes.
#[derive(Debug)]
pub enum Failure {
    /// Bad flags or input; exit 2.
    Input(String),
    /// A verification failed or an internal invariant broke; exit 3.
    Verify(String),
}

impl From<freiman_core::Error> for Failure {
    fn from(e: freiman_core::Error) -> Self {
        use freiman_core::Error as E;
        match e {
            E::Internal(_) | E::CheckFailed { .. } => Failure::Verify(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, flags) = match &cli.command {
        Command::Cover(f) => ("cover", f),
        Command::Chang(f) => ("chang", f),
        Command::Spectrum(f) => ("spectrum", f),
        Command::Pipeline(f) => ("pipeline", f),
        Command::VerifyLemmas(f) => ("verify-lemmas", f),
        Command::Gen(f) => ("gen", f),
    };
    match commands::run(name, flags) {
        Ok(0) => ExitCode::SUCCESS,
        Ok(failed) => {
            eprintln!("freiman {name}: {failed} check(s) failed");
            ExitCode::from(3)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("freiman {name}: error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Verify(msg)) => {
            eprintln!("freiman {name}: verification failed: {msg}");
            ExitCode::from(3)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use freiman_core::Error;

    #[test]
    fn core_errors_map_to_exit_classes() {
        let verify = [
            Error::Internal("x".into()),
            Error::CheckFailed { name: "n".into(), trail: "t".into() },
        ];
        for e in verify {
            assert!(matches!(Failure::from(e), Failure::Verify(_)));
        }
        let input = [
            Error::Domain("x".into()),
            Error::Precondition("x".into()),
            Error::LimitExceeded("x".into()),
            Error::SpecMismatch,
            Error::InvalidModulus(1),
        ];
        for e in input {
            assert!(matches!(Failure::from(e), Failure::Input(_)));
        }
    }
}
