//! Command line front end for the relation engine: lattice spec ingestion,
//! pipeline orchestration, and machine- plus human-readable reports.
//!
//! Every subcommand takes a [`LatticeSpec`], either from a JSON file or by
//! builtin name, prints a text report to stdout, and optionally writes the
//! same data as JSON. Reports are deterministic: two runs on the same spec
//! produce byte-identical JSON.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use theta_relations::lattice::LatticeError;
use theta_relations::p0search::P0SearchError;
use theta_relations::relations::RelationsError;

pub mod commands;
pub mod report;
pub mod spec;

pub use spec::{LatticeSpec, ResolvedSpec};

/// Process exit codes: 0 success, 2 input error, 3 search failure,
/// 4 verification failure.
#[derive(Debug)]
pub enum CliError {
    Input(String),
    Search(P0SearchError),
    Verification { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Input(_) => 2,
            CliError::Search(_) => 3,
            CliError::Verification { .. } => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => f.write_str(msg),
            CliError::Search(e) => write!(f, "index search failed: {e}"),
            CliError::Verification { failed, total } => {
                write!(f, "{failed} of {total} relations failed verification")
            }
        }
    }
}

impl std::error::Error for CliError {}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<RelationsError> for CliError {
    fn from(e: RelationsError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<P0SearchError> for CliError {
    fn from(e: P0SearchError) -> Self {
        CliError::Search(e)
    }
}

#[derive(Parser)]
#[command(
    name = "theta-relations",
    version,
    about = "Discover and certify linear relations among powers of lattice Jacobi theta series"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Print lattice invariants and the resolved representative lists.
    Info(CommonArgs),
    /// Search a separating multi-index set for the rescaled lattice.
    FindP0(CommonArgs),
    /// Run the full pipeline: representatives, index set, coefficient
    /// vectors, rank, relations.
    Relations(CommonArgs),
    /// Re-check the relations of a report against truncated q-expansions.
    Verify {
        #[command(flatten)]
        common: CommonArgs,
        /// A report produced by `relations`, or hand-written JSON with the
        /// same `relations` array.
        relations_file: PathBuf,
    },
}

#[derive(Args)]
pub struct CommonArgs {
    /// Path to a spec file, or a builtin name (d4, a2, a3, 2a2,
    /// disc15-cubes, disc15-fifth).
    #[arg(long)]
    pub spec: String,
    /// Also write the report as JSON to this path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Override the verification truncation (a rational, e.g. 10 or 21/2).
    #[arg(long)]
    pub trunc: Option<String>,
    /// Override the weight cap of the index search.
    #[arg(long)]
    pub max_sum: Option<u32>,
    /// Distribute the coefficient sweeps over this many threads.
    #[arg(long)]
    pub threads: Option<usize>,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Info(common) => {
            let resolved = resolve_from(&common)?;
            let report = commands::cmd_info(&resolved);
            emit(&report, report::render_info(&report), common.out.as_deref())
        }
        Command::FindP0(common) => {
            let resolved = resolve_from(&common)?;
            let report = commands::cmd_find_p0(&resolved)?;
            emit(&report, report::render_find_p0(&report), common.out.as_deref())
        }
        Command::Relations(common) => {
            let resolved = resolve_from(&common)?;
            let report = commands::cmd_relations(&resolved, common.threads.unwrap_or(1))?;
            emit(&report, report::render_relations(&report), common.out.as_deref())
        }
        Command::Verify {
            common,
            relations_file,
        } => {
            let resolved = resolve_from(&common)?;
            let text = std::fs::read_to_string(&relations_file).map_err(|e| {
                CliError::Input(format!("cannot read {}: {e}", relations_file.display()))
            })?;
            let report = commands::cmd_verify(&resolved, &text)?;
            emit(&report, report::render_verify(&report), common.out.as_deref())?;
            if report.failed > 0 {
                return Err(CliError::Verification {
                    failed: report.failed,
                    total: report.results.len(),
                });
            }
            Ok(())
        }
    }
}

fn resolve_from(common: &CommonArgs) -> Result<ResolvedSpec, CliError> {
    let spec = spec::load_spec(&common.spec)?;
    spec::resolve(&spec, common.trunc.as_deref(), common.max_sum)
}

fn emit<T: serde::Serialize>(
    report: &T,
    text: String,
    out: Option<&Path>,
) -> Result<(), CliError> {
    print!("{text}");
    if let Some(path) = out {
        let mut json = serde_json::to_vec_pretty(report)
            .map_err(|e| CliError::Input(format!("cannot serialize report: {e}")))?;
        json.push(b'\n');
        std::fs::write(path, json)
            .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display())))?;
    }
    Ok(())
}
