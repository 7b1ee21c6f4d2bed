use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use elq::harness::{self, BenchStrategy, Config, HarnessError, Scenario, Severity, Workload, CSV_HEADER};
use elq::resize::Strategy;

const EXIT_DIAGNOSTICS: u8 = 1;
const EXIT_INPUT: u8 = 2;

#[derive(Parser)]
#[command(name = "elq", version, about = "Run, benchmark and validate element-query pages")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scenario against a page and write the settled report.
    Run {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        css: PathBuf,
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_enum, default_value_t = Detector::Scroll)]
        strategy: Detector,
        #[arg(long, default_value_t = elq::elq::MAX_SETTLE_ROUNDS)]
        max_settle: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Count layouts for a synthetic workload. Lists are comma separated.
    Bench {
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        workload: String,
        #[arg(long, value_delimiter = ',', required = true)]
        strategy: Vec<String>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check a page and stylesheet without writing anything.
    Validate {
        #[arg(long)]
        doc: PathBuf,
        #[arg(long)]
        css: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Detector {
    Scroll,
    Object,
}

impl From<Detector> for Strategy {
    fn from(d: Detector) -> Self {
        match d {
            Detector::Scroll => Strategy::Scroll,
            Detector::Object => Strategy::Object,
        }
    }
}

enum Failure {
    Input(String),
    Diagnostics(String),
}

impl From<HarnessError> for Failure {
    fn from(e: HarnessError) -> Self {
        if e.is_input_error() {
            Failure::Input(e.to_string())
        } else {
            Failure::Diagnostics(e.to_string())
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn run(
    doc: &Path,
    css: &Path,
    scenario: &Path,
    strategy: Detector,
    max_settle: usize,
    out: &Path,
) -> Result<bool, Failure> {
    let (doc, css) = (read(doc)?, read(css)?);
    let scenario = Scenario::parse(&read(scenario)?)?;
    let config = Config { strategy: strategy.into(), max_settle_rounds: max_settle, ..Config::default() };
    let report = harness::run(&doc, &css, &scenario, &config)?;
    write(out, &report.to_canonical_json())?;
    for w in &report.warnings {
        eprintln!("warning {}: {}", w.code, w.message);
    }
    Ok(report.warnings.is_empty())
}

fn bench(n: &[usize], workload: &str, strategies: &[String], out: &Path) -> Result<bool, Failure> {
    let workload: Workload = workload.parse()?;
    let strategies = strategies.iter().map(|s| s.parse::<BenchStrategy>()).collect::<Result<Vec<_>, _>>()?;
    let cases: Vec<_> = n.iter().flat_map(|n| strategies.iter().map(move |s| (*n, workload, *s))).collect();
    let mut csv = format!("{CSV_HEADER}\n");
    for row in harness::sweep(&cases) {
        csv.push_str(&row?.csv_line());
        csv.push('\n');
    }
    write(out, &csv)?;
    Ok(true)
}

fn validate(doc: &Path, css: &Path) -> Result<bool, Failure> {
    let diagnostics = harness::validate(&read(doc)?, &read(css)?)?;
    for d in &diagnostics {
        println!("{d}");
    }
    Ok(!diagnostics.iter().any(|d| d.severity == Severity::Error))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Run { doc, css, scenario, strategy, max_settle, out } => {
            run(doc, css, scenario, *strategy, *max_settle, out)
        }
        Command::Bench { n, workload, strategy, out } => bench(n, workload, strategy, out),
        Command::Validate { doc, css } => validate(doc, css),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(EXIT_DIAGNOSTICS),
        Err(Failure::Diagnostics(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_DIAGNOSTICS)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_INPUT)
        }
    }
}
