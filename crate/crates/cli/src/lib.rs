//! The `chartsum` command line.
//!
//! [`run`] parses arguments, runs one subcommand and returns the process exit
//! code. Every subcommand that writes files also writes a manifest next to
//! its first output recording the resolved configuration, input and output
//! digests, the outcome and timing. Outputs are written only after the whole
//! run succeeded; a failed run leaves at most its manifest behind.

mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::Parser;
use serde_json::Value;

pub use args::{BackendKind, Cli, Command, GeneratorKind};
pub use commands::{CorpusStats, FileStats, corpus_stats};
pub use output::{FileDigest, Manifest, Status, Timing, manifest_path_for};

use output::{Clock, Staged};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_BACKEND: i32 = 3;

/// Why a run failed, which decides the exit code.
#[derive(Debug)]
pub enum Failure {
    Usage(anyhow::Error),
    Data(anyhow::Error),
    Backend(anyhow::Error),
}

impl Failure {
    pub fn usage(e: impl Into<anyhow::Error>) -> Self {
        Failure::Usage(e.into())
    }

    pub fn data(e: impl Into<anyhow::Error>) -> Self {
        Failure::Data(e.into())
    }

    pub fn backend(e: impl Into<anyhow::Error>) -> Self {
        Failure::Backend(e.into())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Data(_) => EXIT_DATA,
            Failure::Backend(_) => EXIT_BACKEND,
        }
    }

    pub fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Usage(e) | Failure::Data(e) | Failure::Backend(e) => e,
        }
    }
}

/// State of one subcommand run, filled in by the command and turned into
/// the manifest at the end.
pub(crate) struct Run {
    subcommand: &'static str,
    manifest_path: Option<PathBuf>,
    config: Value,
    inputs: Vec<FileDigest>,
    staged: Staged,
    summary: Option<Value>,
}

impl Run {
    fn new(subcommand: &'static str) -> Self {
        Run {
            subcommand,
            manifest_path: None,
            config: Value::Null,
            inputs: Vec::new(),
            staged: Staged::default(),
            summary: None,
        }
    }

    fn input(&mut self, path: &std::path::Path) -> Result<(), Failure> {
        self.inputs.extend(output::digest_input(path).map_err(Failure::data)?);
        Ok(())
    }
}

/// Runs the command line `argv` (including the program name) and returns
/// the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    execute(cli.command)
}

fn execute(command: Command) -> i32 {
    let clock = Clock::start();
    let mut run = Run::new(commands::name(&command));
    let result = commands::dispatch(command, &mut run);

    let outputs = run.staged.digests();
    let result = result.and_then(|()| std::mem::take(&mut run.staged).commit().map_err(Failure::data));
    let (status, exit_code, error, outputs) = match &result {
        Ok(()) => (Status::Ok, EXIT_OK, None, outputs),
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            (Status::Failed, f.exit_code(), Some(format!("{:#}", f.error())), Vec::new())
        }
    };
    let Some(path) = run.manifest_path.take() else { return exit_code };
    let manifest = Manifest {
        tool: output::TOOL,
        version: output::VERSION,
        subcommand: run.subcommand,
        status,
        exit_code,
        error,
        config: run.config,
        inputs: run.inputs,
        outputs,
        summary: if result.is_ok() { run.summary } else { None },
        timing: clock.timing(),
    };
    let mut bytes = serde_json::to_vec_pretty(&manifest).expect("manifest serializes");
    bytes.push(b'\n');
    if let Err(e) = output::write_atomic(&path, &bytes) {
        eprintln!("error: cannot write manifest: {e:#}");
        return if exit_code == EXIT_OK { EXIT_DATA } else { exit_code };
    }
    log::info!("manifest written to {}", path.display());
    exit_code
}
