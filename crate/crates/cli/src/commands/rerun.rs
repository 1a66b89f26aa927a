use std::path::PathBuf;

use clap::Parser;

use crate::args::{Cli, Command, RerunArgs};
use crate::error::{invalid, CliError, CliResult};
use crate::manifest::RunManifest;

/// Arguments that repeat the run recorded in `m`, writing to `out`.
pub fn replay_argv(m: &RunManifest, out: &std::path::Path) -> Vec<String> {
    let mut argv = vec![env!("CARGO_PKG_NAME").to_string(), m.command.clone()];
    argv.extend(m.args.iter().cloned());
    argv.extend(["--out".to_string(), out.display().to_string()]);
    argv
}

pub fn run(a: &RerunArgs) -> CliResult<()> {
    let m = RunManifest::read(&a.manifest)?;
    if m.tool != env!("CARGO_PKG_NAME") {
        return invalid(format!("manifest was written by `{}`", m.tool));
    }
    if m.version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "note: manifest written by version {}, running {}",
            m.version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let out = match &a.out {
        Some(dir) => dir.clone(),
        None => match a.manifest.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
            _ => PathBuf::from("."),
        },
    };
    let cli = Cli::try_parse_from(replay_argv(&m, &out))
        .map_err(|e| CliError::Validation(format!("manifest arguments do not parse: {e}")))?;
    if matches!(cli.command, Command::Rerun(_)) {
        return invalid("a manifest cannot record a rerun");
    }
    crate::dispatch(cli.command)
}
