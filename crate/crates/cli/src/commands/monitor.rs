use std::io::Write;
use std::path::Path;

use mz_core::detection::{
    monitor_stream, utility_distribution, write_trajectory_csv, MonitorReport,
};
use mz_core::race::Population;
use mz_core::simulator::{compliance_agents, Stages};
use mz_core::Error;
use serde::Deserialize;

use super::simulate::resolve_market;
use super::{agreed_strategy, csv_writer, out_dir, unit_params};
use crate::args::{params_argv, MonitorArgs};
use crate::error::{invalid, CliError, CliResult};
use crate::manifest::{PopulationRecord, RunManifest};

pub const TRAJECTORY: &str = "trajectory.csv";
pub const DECISION: &str = "decision.csv";

#[derive(Debug, Deserialize)]
struct StreamRecord {
    stage: u64,
    agent: usize,
    utility: f64,
}

/// Utilities of `agent` in file order, with the file's stage labels.
pub fn read_stream(path: &Path, agent: usize) -> CliResult<(Vec<f64>, Vec<u64>)> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| CliError::Runtime(format!("cannot read stream {}: {e}", path.display())))?;
    let mut utilities = Vec::new();
    let mut stages = Vec::new();
    for rec in rdr.deserialize() {
        let rec: StreamRecord =
            rec.map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        if rec.agent == agent {
            utilities.push(rec.utility);
            stages.push(rec.stage);
        }
    }
    if utilities.is_empty() {
        return Err(CliError::Runtime(format!(
            "{}: no rows for agent {agent}",
            path.display()
        )));
    }
    Ok((utilities, stages))
}

fn write_decision<W: Write>(w: W, r: &MonitorReport, observed: usize) -> CliResult<()> {
    let mut out = csv_writer(w);
    out.write_record([
        "verdict",
        "stopping_stage",
        "S",
        "lower",
        "upper",
        "observed",
    ])?;
    out.write_record([
        r.verdict.to_string(),
        r.stopping_stage.map(|t| t.to_string()).unwrap_or_default(),
        r.state.statistic.to_string(),
        r.state.a.to_string(),
        r.state.b.to_string(),
        observed.to_string(),
    ])?;
    out.flush()?;
    Ok(())
}

pub fn run(a: &MonitorArgs) -> CliResult<()> {
    let inline = a.stream.is_none();
    let (params, pop) = if inline {
        resolve_market(&a.params, a.ht, a.hd)?
    } else {
        let params = a.params.resolve()?;
        (params, Population::homogeneous(params.h())?)
    };
    let (unit, _) = unit_params(&params);
    let n = unit.h();
    if a.assumed_hd == 0 || a.assumed_hd >= n {
        return invalid(format!("assumed H_d must be between 1 and {}", n - 1));
    }
    let (p, s) = agreed_strategy(&unit, a.p, a.spread)?;
    let d0 = utility_distribution(&unit, p, &Population::homogeneous(n)?, s)?;
    let d1 = utility_distribution(
        &unit,
        p,
        &Population::new(n - a.assumed_hd, a.assumed_hd)?,
        s,
    )?;

    let (stream, labels) = match &a.stream {
        Some(path) => read_stream(path, a.agent)?,
        None => {
            if a.stages == 0 {
                return Err(Error::NoStages.into());
            }
            let agents = compliance_agents(&pop, p, s);
            let u: Vec<f64> = Stages::new(&agents, &unit, a.seed)?
                .take(a.stages as usize)
                .map(|o| o.utilities[0])
                .collect();
            let labels = (0..u.len() as u64).collect();
            (u, labels)
        }
    };
    let report = monitor_stream(&stream, &d0, &d1, a.err1, a.err2).map_err(|e| match e {
        // point at the stage label used in the stream
        Error::UnmatchedUtility { stage, value } => CliError::Runtime(format!(
            "stage {}: utility {value} matches no support point",
            labels[stage as usize - 1]
        )),
        other => other.into(),
    })?;

    println!("verdict        {}", report.verdict);
    match report.stopping_stage {
        Some(t) => println!("stopping_stage {t}"),
        None => println!("stopping_stage none ({} observations)", stream.len()),
    }
    println!("S              {}", report.state.statistic);
    println!("limits         [{}, {}]", report.state.a, report.state.b);

    if let Some(dir) = out_dir(&a.out)? {
        write_trajectory_csv(super::create(&dir, TRAJECTORY)?, &report.trajectory)?;
        write_decision(super::create(&dir, DECISION)?, &report, stream.len())?;
        let mut args = params_argv(&params);
        match &a.stream {
            Some(path) => {
                let abs = std::fs::canonicalize(path)?;
                args.extend([
                    "--stream".to_string(),
                    abs.display().to_string(),
                    "--agent".to_string(),
                    a.agent.to_string(),
                ]);
            }
            None => args.extend([
                "--ht".to_string(),
                pop.trustworthy().to_string(),
                "--hd".to_string(),
                pop.deceptive().to_string(),
                "--stages".to_string(),
                a.stages.to_string(),
                "--seed".to_string(),
                a.seed.to_string(),
            ]),
        }
        args.extend([
            "--assumed-hd".to_string(),
            a.assumed_hd.to_string(),
            "--p".to_string(),
            p.to_string(),
            "--spread".to_string(),
            s.to_string(),
            "--err1".to_string(),
            a.err1.to_string(),
            "--err2".to_string(),
            a.err2.to_string(),
        ]);
        let mut m = RunManifest::new("monitor", args);
        m.params = Some((&params).into());
        if inline {
            m.population = Some(PopulationRecord {
                trustworthy: pop.trustworthy(),
                deceptive: pop.deceptive(),
            });
            m.seeds = vec![a.seed];
        }
        m.outputs = vec![TRAJECTORY.into(), DECISION.into()];
        m.write(&dir)?;
    }
    Ok(())
}
