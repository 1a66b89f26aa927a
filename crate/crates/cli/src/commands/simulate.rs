use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use mz_core::race::Population;
use mz_core::simulator::{
    analytic_mean_utility, class_of, compliance_agents, run_repeated, run_stats, write_stream_csv,
    AgentClass, RunStats,
};
use mz_core::{GameParams, ParamSpec};
use rayon::prelude::*;

use super::{agreed_strategy, csv_writer, out_dir, sink, unit_params};
use crate::args::{params_argv, ParamArgs, SimulateArgs};
use crate::error::{invalid, CliResult};
use crate::manifest::{PopulationRecord, RunManifest};

pub const SUMMARY: &str = "summary.csv";

pub fn stream_file(seed: u64) -> String {
    format!("stream_seed{seed}.csv")
}

/// Resolves parameters and population, letting `H` default to `ht + hd`.
pub fn resolve_market(
    params: &ParamArgs,
    ht: Option<u32>,
    hd: u32,
) -> CliResult<(GameParams, Population)> {
    let mut spec: ParamSpec = params.spec()?;
    if spec.h.is_none() {
        if let Some(ht) = ht {
            spec.h = Some(ht + hd);
        }
    }
    let params = spec.resolve()?;
    let n = params.h();
    if hd >= n {
        return invalid(format!(
            "H_d = {hd} leaves no trustworthy agent among H = {n}"
        ));
    }
    let ht = ht.unwrap_or(n - hd);
    let pop = Population::new(ht, hd)?;
    if pop.total() != n {
        return invalid(format!("H_t + H_d = {} but H = {n}", pop.total()));
    }
    Ok((params, pop))
}

pub struct Campaign {
    pub params: GameParams,
    pub pop: Population,
    pub p: f64,
    pub s: f64,
    pub runs: Vec<RunStats>,
    pub analytic_trustworthy: f64,
    pub analytic_deceptive: Option<f64>,
}

impl Campaign {
    pub fn analytic(&self, class: AgentClass) -> Option<f64> {
        match class {
            AgentClass::Trustworthy => Some(self.analytic_trustworthy),
            AgentClass::Deceptive => self.analytic_deceptive,
        }
    }

    /// One row per seed and agent.
    pub fn write_summary<W: Write>(&self, w: W) -> CliResult<()> {
        let mut out = csv_writer(w);
        out.write_record([
            "seed",
            "agent",
            "class",
            "stages",
            "mean",
            "std_err",
            "analytic_mean",
            "race_wins",
            "mm_count",
        ])?;
        for r in &self.runs {
            for id in 0..self.pop.total() as usize {
                let class = class_of(&self.pop, id);
                out.write_record([
                    r.seed.to_string(),
                    id.to_string(),
                    class.code().to_string(),
                    r.stages.to_string(),
                    r.mean(id).to_string(),
                    r.std_err(id).to_string(),
                    self.analytic(class)
                        .map(|v| v.to_string())
                        .unwrap_or_default(),
                    r.race_wins[id].to_string(),
                    r.mm_count[id].to_string(),
                ])?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_report<W: Write>(&self, mut w: W) -> CliResult<()> {
        writeln!(w, "p = {}, s = {}", self.p, self.s)?;
        for r in &self.runs {
            for class in [AgentClass::Trustworthy, AgentClass::Deceptive] {
                let ids: Vec<usize> = (0..self.pop.total() as usize)
                    .filter(|&i| class_of(&self.pop, i) == class)
                    .collect();
                if ids.is_empty() {
                    continue;
                }
                let mean = ids.iter().map(|&i| r.mean(i)).sum::<f64>() / ids.len() as f64;
                writeln!(
                    w,
                    "seed {} {:<11} mean {:+.6} (analytic {:+.6})",
                    r.seed,
                    class.code(),
                    mean,
                    self.analytic(class).unwrap_or(f64::NAN)
                )?;
            }
        }
        Ok(())
    }
}

/// Runs every seed; when `streams` is set, each stream is written to
/// `streams/stream_seed<seed>.csv` as soon as its run finishes.
pub fn campaign(
    params: &GameParams,
    pop: &Population,
    p: f64,
    s: f64,
    n_stages: u64,
    seeds: &[u64],
    streams: Option<&Path>,
) -> CliResult<Campaign> {
    let (unit, _) = unit_params(params);
    let agents = compliance_agents(pop, p, s);
    let runs = seeds
        .par_iter()
        .map(|&seed| -> CliResult<RunStats> {
            match streams {
                Some(dir) => {
                    let run = run_repeated(&agents, &unit, n_stages, seed)?;
                    write_stream_csv(super::create(dir, &stream_file(seed))?, &run.stream)?;
                    Ok(run.stats)
                }
                None => Ok(run_stats(&agents, &unit, n_stages, seed)?),
            }
        })
        .collect::<CliResult<Vec<_>>>()?;
    let analytic_deceptive = if pop.deceptive() > 0 {
        Some(analytic_mean_utility(
            AgentClass::Deceptive,
            p,
            s,
            pop,
            &unit,
        )?)
    } else {
        None
    };
    Ok(Campaign {
        params: *params,
        pop: *pop,
        p,
        s,
        runs,
        analytic_trustworthy: analytic_mean_utility(AgentClass::Trustworthy, p, s, pop, &unit)?,
        analytic_deceptive,
    })
}

pub fn run(a: &SimulateArgs) -> CliResult<()> {
    let (params, pop) = resolve_market(&a.params, a.ht, a.hd)?;
    let (unit, _) = unit_params(&params);
    let (p, s) = agreed_strategy(&unit, a.p, a.spread)?;
    if a.seeds.iter().collect::<BTreeSet<_>>().len() != a.seeds.len() {
        return invalid("a seed is listed twice");
    }
    let dir = out_dir(&a.out)?;
    let streams = if a.summary_only { None } else { dir.as_deref() };
    let c = campaign(&params, &pop, p, s, a.stages, &a.seeds, streams)?;
    c.write_summary(sink(dir.as_deref(), SUMMARY)?)?;
    if let Some(dir) = dir {
        c.write_report(std::io::stdout().lock())?;
        let mut args = params_argv(&params);
        args.extend([
            "--ht".to_string(),
            pop.trustworthy().to_string(),
            "--hd".to_string(),
            pop.deceptive().to_string(),
            "--p".to_string(),
            p.to_string(),
            "--spread".to_string(),
            s.to_string(),
            "--stages".to_string(),
            a.stages.to_string(),
            "--seeds".to_string(),
            a.seeds
                .iter()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(","),
        ]);
        if a.summary_only {
            args.push("--summary-only".into());
        }
        let mut m = RunManifest::new("simulate", args);
        m.params = Some((&params).into());
        m.population = Some(PopulationRecord {
            trustworthy: pop.trustworthy(),
            deceptive: pop.deceptive(),
        });
        m.seeds = a.seeds.clone();
        if !a.summary_only {
            m.outputs
                .extend(a.seeds.iter().map(|&seed| stream_file(seed)));
        }
        m.outputs.push(SUMMARY.into());
        m.write(&dir)?;
    }
    Ok(())
}
