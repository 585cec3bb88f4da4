//! Command-line front end: configuration, experiment dispatch and
//! deterministic artifact output.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

use std::path::{Path, PathBuf};

pub use commands::{run_command, Command};
pub use config::{parse_config, to_canonical, Format, RunConfig};
pub use error::Failure;
pub use output::{write_atomic, Artifact, OUT_DIR_ENV};

/// Runs `cmd` and writes its artifact atomically; returns the output path.
pub fn execute(cmd: Command, cfg: &RunConfig, out_dir: Option<&Path>) -> Result<PathBuf, Failure> {
    let artifact = run_command(cmd, cfg)?;
    let text = artifact.render(cfg)?;
    let path = output::resolve_output(cfg, cmd.name(), out_dir);
    write_atomic(&path, &text)?;
    Ok(path)
}
