//! `cfikit` command-line front end.
//!
//! Exit codes: 0 ok, 1 usage or parse error, 2 model failure, 3 the
//! counterfactual does not flip the class, 4 the counterfactual is reducible.

mod commands;
pub mod report;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use commands::{cmd_chart, cmd_explain, cmd_oracle, cmd_validate};
pub use report::{CfiReport, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_MODEL: i32 = 2;
pub const EXIT_NO_FLIP: i32 = 3;
pub const EXIT_REDUCIBLE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "cfikit", version, about = "Importance values and charts for counterfactual explanations")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute greedy and/or CounterShapley importances and write a JSON report.
    Explain(ExplainArgs),
    /// Render SVG charts from a report.
    Chart(ChartArgs),
    /// Check class flip and irreducibility; print the validation report.
    Validate(CaseArgs),
    /// Compare CounterShapley values against the permutation-enumeration oracle.
    Oracle(CaseArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CaseArgs {
    #[arg(long)]
    pub factual: PathBuf,
    #[arg(long)]
    pub counterfactual: PathBuf,
    /// linear:PATH | table:PATH | tree:PATH | exec:COMMANDLINE
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    #[arg(long, default_value_t = 0.0)]
    pub epsilon: f64,
    /// Largest delta the coalition enumeration accepts.
    #[arg(long, default_value_t = cfikit::countershapley::DEFAULT_MAX_K)]
    pub max_k: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Greedy,
    Countershapley,
    Both,
}

impl Method {
    pub fn greedy(self) -> bool {
        matches!(self, Method::Greedy | Method::Both)
    }

    pub fn countershapley(self) -> bool {
        matches!(self, Method::Countershapley | Method::Both)
    }
}

#[derive(Debug, Clone, Args)]
pub struct ExplainArgs {
    #[command(flatten)]
    pub case: CaseArgs,
    #[arg(long, value_enum, default_value_t = Method::Both)]
    pub method: Method,
    /// Let the greedy run read scores from the coalition map instead of the model.
    #[arg(long)]
    pub share_cache: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ChartType {
    Greedy,
    Countershapley,
    Constellation,
    All,
}

#[derive(Debug, Clone, Args)]
pub struct ChartArgs {
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long = "type", value_enum)]
    pub chart_type: ChartType,
    /// SVG file, or for `--type all` a directory (or a `.svg` path used as a name stem).
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub style: Option<PathBuf>,
}

/// A failed command: exit code plus a diagnostic for stderr.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }
}

impl From<cfikit::Error> for CliError {
    fn from(e: cfikit::Error) -> Self {
        let code = if e.is_model_failure() { EXIT_MODEL } else { EXIT_USAGE };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

/// Parses `args` (program name first) and runs the command; returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let result = match &cli.command {
        Command::Explain(a) => cmd_explain(a),
        Command::Chart(a) => cmd_chart(a),
        Command::Validate(a) => cmd_validate(a),
        Command::Oracle(a) => cmd_oracle(a),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("cfikit: {}", e.message);
            e.code
        }
    }
}
