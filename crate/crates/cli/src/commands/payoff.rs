use mz_core::utility::write_payoff_table;

use super::{out_dir, sink, unit_params};
use crate::args::{params_argv, PayoffArgs};
use crate::error::CliResult;
use crate::manifest::RunManifest;

pub const OUTPUT: &str = "payoff_table.csv";

pub fn run(a: &PayoffArgs) -> CliResult<()> {
    let dir = out_dir(&a.out)?;
    let mut args = Vec::new();
    let mut resolved = None;
    match a.spread {
        Some(s) => {
            let params = a.params.resolve()?;
            let (unit, _) = unit_params(&params);
            write_payoff_table(sink(dir.as_deref(), OUTPUT)?, Some((&unit, s)))?;
            args = params_argv(&params);
            args.extend(["--spread".to_string(), s.to_string()]);
            resolved = Some(params);
        }
        None => write_payoff_table(sink(dir.as_deref(), OUTPUT)?, None)?,
    }
    if let Some(dir) = dir {
        let mut m = RunManifest::new("payoff-table", args);
        m.params = resolved.as_ref().map(Into::into);
        m.outputs = vec![OUTPUT.into()];
        m.write(&dir)?;
    }
    Ok(())
}
