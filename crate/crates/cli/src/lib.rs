//! Command-line front end: system files, command dispatch and report output.

pub mod args;
pub mod commands;
pub mod error;
pub mod system;

use std::io::Write;
use std::path::Path;

pub use args::{Cli, Command, Format};
pub use commands::{run, Outcome, Report, SCHEMA_VERSION};
pub use error::{CliError, CliResult};
pub use system::{load_system, LoadedSystem, SystemFile};

/// Writes through a temporary file in the destination directory, then renames it into place.
pub fn write_atomic(path: &Path, contents: &str) -> CliResult<()> {
    let io_err = |source| CliError::Io { path: path.to_path_buf(), source };
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err)?;
    tmp.write_all(contents.as_bytes()).map_err(io_err)?;
    tmp.persist(path).map_err(|e| io_err(e.error))?;
    Ok(())
}

/// Runs a parsed command line and writes its output.
pub fn execute(cli: &Cli) -> CliResult<()> {
    let cmd = &cli.command;
    let outcome = run(cmd)?;
    let io = commands::io_of(cmd);
    let text = outcome.render(io.format)?;
    match &io.output {
        Some(path) => write_atomic(path, &text),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: "<stdout>".into(), source })
        }
    }
}
