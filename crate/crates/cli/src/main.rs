//! `limhodge`: validate strata data and compute limiting mixed Hodge
//! structures from the command line.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use limhodge::limitpage::{analyze, Analysis};
use limhodge::report::{self, Format};
use limhodge::strata::{fixture_cycle_of_p1, fixture_product_p1, fixture_projective_space, StrataDatum, StrataError};

const EXIT_INPUT: u8 = 1;
const EXIT_CHECK: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "limhodge", version, about = "Limiting mixed Hodge structures from strata data")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Table, global = true)]
    format: OutputFormat,
    /// Exit with status 2 when any check fails.
    #[arg(long, global = true)]
    strict: bool,
    /// Include page contents and differentials; for other commands the page
    /// dumps go to standard error.
    #[arg(long, global = true)]
    dump: bool,
    /// Write the report (or fixture) to this path instead of standard output.
    #[arg(short = 'o', long = "output", global = true)]
    output: Option<PathBuf>,
    /// Which page to show for `e1` and `e2`.
    #[arg(long, value_enum, default_value_t = Page::A, global = true)]
    page: Page,
    /// Caps the number of worker threads.
    #[arg(long, env = "LIMHODGE_THREADS", hide_env_values = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check the strata datum against the structural axioms.
    Validate { input: PathBuf },
    /// Dimensions and differentials of the E1 page.
    E1 { input: PathBuf },
    /// Dimensions of the E2 page.
    E2 { input: PathBuf },
    /// Weight and Hodge numbers of the limit, with N and l.
    Mhs { input: PathBuf },
    /// Polarization verdicts.
    Polarize { input: PathBuf },
    /// The comparison map between the two pages on E2.
    Compare { input: PathBuf },
    /// Write a built-in fixture.
    Fixture {
        #[arg(value_enum)]
        kind: FixtureKind,
        /// Number of lines in the cycle.
        #[arg(long, default_value_t = 3)]
        components: usize,
        /// Dimension of the projective space.
        #[arg(long, default_value_t = 2)]
        dim: usize,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutputFormat {
    Json,
    Table,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Page {
    #[value(name = "A")]
    A,
    #[value(name = "K")]
    K,
    #[value(name = "both")]
    Both,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum FixtureKind {
    /// A cycle of projective lines, n = 1.
    Cycle,
    /// A single smooth projective space.
    Projective,
    /// A cycle of lines times a line, n = 2.
    Product,
}

/// A failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<StrataError> for Failure {
    fn from(e: StrataError) -> Self {
        let code = if matches!(e, StrataError::Io { .. }) { EXIT_IO } else { EXIT_INPUT };
        Failure { code, message: e.to_string() }
    }
}

fn input_error(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_INPUT, message: message.into() }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure { code: EXIT_IO, message: format!("writing {}: {e}", p.display()) }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn render(fmt: Format, json: impl FnOnce() -> String, table: impl FnOnce() -> String) -> String {
    match fmt {
        Format::Json => json(),
        Format::Table => table(),
    }
}

fn pages(cli: &Cli, s: &StrataDatum, an: &Analysis, dump: bool) -> String {
    let fmt = format_of(cli);
    let mut chosen = Vec::new();
    if cli.page != Page::K {
        chosen.push(report::page_report(s, &an.limit.e1_a, &an.limit.e2_a, dump));
    }
    if cli.page != Page::A {
        chosen.push(report::page_report(s, &an.comparison.e1_k, &an.comparison.e2_k, dump));
    }
    match fmt {
        Format::Json => report::to_json(&chosen),
        Format::Table => chosen.iter().map(report::page_table).collect::<Vec<_>>().join("\n"),
    }
}

fn format_of(cli: &Cli) -> Format {
    match cli.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Table => Format::Table,
    }
}

fn load(path: &Path) -> Result<StrataDatum, Failure> {
    Ok(StrataDatum::load(path)?)
}

fn run_analysis(s: &StrataDatum) -> Result<Analysis, Failure> {
    analyze(s).map_err(|e| input_error(e.to_string()))
}

/// Exit status for a computed report: failures only matter under `--strict`.
fn verdict(cli: &Cli, passed: bool) -> u8 {
    if cli.strict && !passed {
        EXIT_CHECK
    } else {
        0
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    let fmt = format_of(cli);
    match &cli.command {
        Command::Fixture { kind, components, dim } => {
            let s = match kind {
                FixtureKind::Cycle => fixture_cycle_of_p1(*components)?,
                FixtureKind::Projective => fixture_projective_space(*dim)?,
                FixtureKind::Product => fixture_product_p1(&fixture_cycle_of_p1(*components)?),
            };
            emit(&cli.output, &s.to_json())?;
            Ok(0)
        }
        Command::Validate { input } => {
            let s = load(input)?;
            let v = limhodge::validate(&s)?;
            let r = report::validate_report(&s, &v);
            emit(&cli.output, &render(fmt, || report::to_json(&r), || report::validate_table(&r)))?;
            Ok(if r.passed { 0 } else { EXIT_INPUT })
        }
        Command::E1 { input } | Command::E2 { input } => {
            let s = load(input)?;
            let an = run_analysis(&s)?;
            let dump = cli.dump;
            emit(&cli.output, &pages(cli, &s, &an, dump))?;
            let page_checks = an.limit.checks.iter().chain(&an.comparison.checks).all(|c| c.passed);
            Ok(verdict(cli, page_checks))
        }
        Command::Mhs { input } => {
            let s = load(input)?;
            let an = run_analysis(&s)?;
            dump_pages(cli, &s, &an);
            let r = report::mhs_report(&s, &an);
            emit(&cli.output, &render(fmt, || report::to_json(&r), || report::mhs_table(&r)))?;
            Ok(verdict(cli, r.passed && an.validation.passed()))
        }
        Command::Polarize { input } => {
            let s = load(input)?;
            let an = run_analysis(&s)?;
            dump_pages(cli, &s, &an);
            let r = report::polarize_report(&s, &an);
            emit(&cli.output, &render(fmt, || report::to_json(&r), || report::polarize_table(&r)))?;
            if cli.strict && !r.passed {
                for c in r.checks.iter().filter(|c| !c.passed) {
                    eprintln!("failed: {}: {}", c.name, c.witness.as_deref().unwrap_or("no witness"));
                }
            }
            Ok(verdict(cli, r.passed))
        }
        Command::Compare { input } => {
            let s = load(input)?;
            let an = run_analysis(&s)?;
            dump_pages(cli, &s, &an);
            let r = report::compare_report(&s, &an);
            emit(&cli.output, &render(fmt, || report::to_json(&r), || report::compare_table(&r)))?;
            Ok(verdict(cli, r.passed))
        }
    }
}

fn dump_pages(cli: &Cli, s: &StrataDatum, an: &Analysis) {
    if cli.dump {
        let both = [
            report::page_report(s, &an.limit.e1_a, &an.limit.e2_a, true),
            report::page_report(s, &an.comparison.e1_k, &an.comparison.e2_k, true),
        ];
        eprint!("{}", report::to_json(&both));
    }
}

fn main() -> ExitCode {
    // usage errors are input errors; status 2 is reserved for failed checks
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if let Some(n) = cli.threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            eprintln!("error: LIMHODGE_THREADS must be a positive integer");
            return ExitCode::from(EXIT_INPUT);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
