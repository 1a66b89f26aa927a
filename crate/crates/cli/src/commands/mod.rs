pub mod analyze;
pub mod monitor;
pub mod payoff;
pub mod rerun;
pub mod simulate;
pub mod sweep;

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use mz_core::params::rescale_to_unit_sigma;
use mz_core::transitions::{p_star_k, SnipingRegime};
use mz_core::GameParams;

use crate::args::OutArgs;
use crate::error::CliResult;

/// Creates the output directory if one was requested.
pub fn out_dir(out: &OutArgs) -> CliResult<Option<PathBuf>> {
    match &out.out {
        Some(dir) => {
            fs::create_dir_all(dir)?;
            Ok(Some(dir.clone()))
        }
        None => Ok(None),
    }
}

pub fn create(dir: &Path, name: &str) -> CliResult<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// `dir/name` when writing to a directory, stdout otherwise.
pub fn sink(dir: Option<&Path>, name: &str) -> CliResult<Box<dyn Write>> {
    match dir {
        Some(d) => Ok(Box::new(create(d, name)?)),
        None => Ok(Box::new(io::stdout().lock())),
    }
}

pub fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w)
}

/// Agreed sniping probability and spread: explicit values win, the rest come
/// from the equilibrium of `params` (which must have unit jump size).
pub fn agreed_strategy(
    params: &GameParams,
    p: Option<f64>,
    s: Option<f64>,
) -> CliResult<(f64, f64)> {
    if let (Some(p), Some(s)) = (p, s) {
        return Ok((p, s));
    }
    let r: SnipingRegime = p_star_k(params)?;
    Ok((
        p.unwrap_or(r.sniping_probability()),
        s.unwrap_or(r.s_star_k),
    ))
}

/// Parameters in jump-size units and the jump size.
pub fn unit_params(params: &GameParams) -> (GameParams, f64) {
    let r = rescale_to_unit_sigma(params);
    (r.params, r.scale)
}
