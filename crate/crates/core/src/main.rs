use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use acc_kit::bench::{default_corpus, run_bench};
use acc_kit::pipeline::{
    analyze_source, certify_package, check_package, domain_kind, CertifyRequest, CheckRequest, PipelineError,
};
use acc_kit::{CertKind, Strategy};

#[derive(Parser)]
#[command(
    name = "acc",
    version,
    about = "Certify and check abstraction-carrying logic programs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Target {
    /// Entry call pattern, e.g. `rectoy(N,M):(int,term)` or `rectoy/2:(int,term)`
    #[arg(long = "entry", required = true)]
    entries: Vec<String>,
    #[arg(long, default_value = "types-v1")]
    domain: String,
    #[arg(long, default_value = "textual-fifo")]
    strategy: String,
}

#[derive(Subcommand)]
enum Command {
    /// Print the answer table of a program
    Analyze {
        program: PathBuf,
        #[command(flatten)]
        target: Target,
    },
    /// Produce a package holding the program and its certificate
    Certify {
        program: PathBuf,
        #[command(flatten)]
        target: Target,
        /// Policy file (.apol)
        #[arg(long)]
        policy: PathBuf,
        #[arg(long, conflicts_with = "reduced")]
        full: bool,
        #[arg(long)]
        reduced: bool,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Check a package against a policy
    Check {
        package: PathBuf,
        #[arg(long)]
        policy: PathBuf,
        /// Check under this strategy instead of the certificate's
        #[arg(long)]
        strategy: Option<String>,
        /// Entry points the certificate must cover
        #[arg(long = "entry")]
        entries: Vec<String>,
    },
    /// Compare full and reduced certificates over a corpus
    Bench {
        /// Corpus directory; defaults to $ACC_KIT_CORPUS or the bundled corpus
        corpus: Option<PathBuf>,
        /// Comma-separated strategy ids; defaults to all
        #[arg(long, value_delimiter = ',')]
        strategies: Vec<String>,
        #[arg(long, default_value = "types-v1")]
        domain: String,
        /// Write the rows as CSV to this file
        #[arg(long)]
        csv: Option<PathBuf>,
        /// Leave out wall-clock columns; weight the overall row by arcs
        #[arg(long)]
        no_timing: bool,
    },
}

enum Failure {
    Pipeline(PipelineError),
    Io(PathBuf, std::io::Error),
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        Failure::Pipeline(e)
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn read_text(path: &Path) -> Result<String, Failure> {
    String::from_utf8(read(path)?).map_err(|_| {
        Failure::Io(
            path.to_path_buf(),
            std::io::Error::new(std::io::ErrorKind::InvalidData, "not UTF-8"),
        )
    })
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), Failure> {
    std::fs::write(path, bytes).map_err(|e| Failure::Io(path.to_path_buf(), e))
}

fn run(cli: Cli) -> Result<u8, Failure> {
    match cli.command {
        Command::Analyze { program, target } => {
            let source = read_text(&program)?;
            let dump = analyze_source(&source, domain_kind(&target.domain)?, &target.entries, &target.strategy)?;
            print!("{dump}");
            Ok(0)
        }
        Command::Certify {
            program,
            target,
            policy,
            full,
            reduced: _,
            output,
        } => {
            let source = read_text(&program)?;
            let policy_bytes = read(&policy)?;
            let kind = if full { CertKind::Full } else { CertKind::Reduced };
            let out = certify_package(&CertifyRequest {
                source: &source,
                domain: domain_kind(&target.domain)?,
                entries: &target.entries,
                policy: &policy_bytes,
                strategy: &target.strategy,
                kind,
                policy_ref: policy.file_name().map(|n| n.to_string_lossy().into_owned()),
            })?;
            write(&output, &out.package)?;
            println!(
                "certified {} {kind} certificate: {} entries, {} bytes",
                output.display(),
                out.size.entries,
                out.size.bytes
            );
            Ok(0)
        }
        Command::Check {
            package,
            policy,
            strategy,
            entries,
        } => {
            let pkg = read(&package)?;
            let policy = read(&policy)?;
            let req = CheckRequest {
                strategy: strategy.as_deref(),
                entries: (!entries.is_empty()).then_some(entries.as_slice()),
            };
            let out = check_package(&pkg, &policy, &req)?;
            print!("{}", out.report);
            Ok(out.exit_code() as u8)
        }
        Command::Bench {
            corpus,
            strategies,
            domain,
            csv,
            no_timing,
        } => {
            let domain = domain_kind(&domain)?;
            let strategies = if strategies.is_empty() {
                Strategy::all()
            } else {
                strategies
                    .iter()
                    .map(|s| Strategy::from_id(s).map_err(PipelineError::from))
                    .collect::<Result<Vec<_>, _>>()?
            };
            let dir = corpus.unwrap_or_else(default_corpus);
            let table = run_bench(&dir, domain, &strategies).map_err(|e| Failure::Io(dir.clone(), e))?;
            print!("{}", table.to_text(!no_timing));
            if let Some(path) = csv {
                write(&path, table.to_csv(!no_timing).as_bytes())?;
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(Failure::Pipeline(e)) => {
            eprintln!("acc: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
        Err(Failure::Io(path, e)) => {
            eprintln!("acc: {}: {e}", path.display());
            ExitCode::from(2)
        }
    }
}
