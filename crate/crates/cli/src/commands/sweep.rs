use std::io::Write;

use mz_core::race::{g, h, Population};
use mz_core::transitions::{
    classify, sweep_row, thresholds, u_star_of_p, write_sweep_csv, SweepRow,
};
use mz_core::utility::{endpoints, indifference};
use mz_core::{Error, GameParams, ParamSpec};
use rayon::prelude::*;

use super::{csv_writer, out_dir, sink, unit_params};
use crate::args::{spec_argv, SweepArgs, SweepVar};
use crate::error::{invalid, CliResult};
use crate::grid::parse_grid;
use crate::manifest::RunManifest;

pub const OUTPUT: &str = "sweep.csv";

/// Threshold and regime summary at one value of a model parameter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamRow {
    pub value: f64,
    pub gamma_k: f64,
    pub gamma_l: f64,
    pub row: SweepRow,
}

/// Indifference point at one sniping probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbRow {
    pub p: f64,
    pub mm_loses: f64,
    pub bandit_wins: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub s_star: f64,
    pub u_star: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepTable {
    Gamma(Vec<SweepRow>),
    Param(SweepVar, Vec<ParamRow>),
    Prob(Vec<ProbRow>),
}

impl SweepTable {
    pub fn len(&self) -> usize {
        match self {
            SweepTable::Gamma(r) => r.len(),
            SweepTable::Param(_, r) => r.len(),
            SweepTable::Prob(r) => r.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn write_csv<W: Write>(&self, w: W) -> CliResult<()> {
        match self {
            SweepTable::Gamma(rows) => write_sweep_csv(w, rows)?,
            SweepTable::Param(var, rows) => {
                let mut out = csv_writer(w);
                out.write_record([
                    var.name(),
                    "gamma_K",
                    "gamma_L",
                    "regime",
                    "p_star",
                    "s_star",
                    "u_sure",
                    "u_opt",
                ])?;
                for r in rows {
                    out.write_record([
                        r.value.to_string(),
                        r.gamma_k.to_string(),
                        r.gamma_l.to_string(),
                        r.row.kind.to_string(),
                        r.row.p_star.to_string(),
                        r.row.s_star.to_string(),
                        r.row.u_sure.to_string(),
                        r.row.u_opt.to_string(),
                    ])?;
                }
                out.flush()?;
            }
            SweepTable::Prob(rows) => {
                let mut out = csv_writer(w);
                out.write_record([
                    "p",
                    "mm_loses",
                    "bandit_wins_if_racing",
                    "A",
                    "B",
                    "C",
                    "D",
                    "s_star",
                    "u_star",
                ])?;
                for r in rows {
                    out.write_record(
                        // adding 0.0 turns -0 into 0
                        [
                            r.p,
                            r.mm_loses,
                            r.bandit_wins,
                            r.a,
                            r.b,
                            r.c,
                            r.d,
                            r.s_star,
                            r.u_star,
                        ]
                        .map(|v| (v + 0.0).to_string()),
                    )?;
                }
                out.flush()?;
            }
        }
        Ok(())
    }
}

/// Outcome of one grid point: a row, or a note explaining why it was skipped.
type Point<T> = Result<T, String>;

/// Runs the sweep. Grid points with invalid parameters are skipped and listed
/// in the returned notes; an empty result is an error.
pub fn sweep(
    var: SweepVar,
    grid: &[f64],
    spec: &ParamSpec,
) -> CliResult<(SweepTable, Vec<String>)> {
    let required = [
        ("H", spec.h.is_some(), SweepVar::H),
        ("alpha", spec.alpha.is_some(), SweepVar::Alpha),
        ("mu", spec.mu.is_some(), SweepVar::Mu),
        ("delta", spec.delta.is_some(), SweepVar::Delta),
        ("gamma", spec.gamma.is_some(), SweepVar::Gamma),
    ];
    for (name, present, swept) in required {
        if !present && swept != var {
            return invalid(format!("missing parameter `{name}`"));
        }
    }
    let (table, notes) = match var {
        SweepVar::Gamma => {
            let base = ParamSpec {
                gamma: Some(1.0),
                ..*spec
            }
            .resolve()?;
            let (unit, _) = unit_params(&base);
            let t = thresholds(&unit)?;
            let points: Vec<Point<mz_core::Result<SweepRow>>> = grid
                .par_iter()
                .map(|&gamma| match unit.with_gamma(gamma) {
                    Ok(pg) => Ok(sweep_row(&pg, &t)),
                    Err(e) => Err(e.to_string()),
                })
                .collect();
            let (rows, notes) = split(var, grid, points)?;
            (SweepTable::Gamma(rows), notes)
        }
        SweepVar::P => {
            let params = spec.resolve()?;
            let (unit, _) = unit_params(&params);
            let pop = Population::homogeneous(unit.h())?;
            let points: Vec<Point<mz_core::Result<ProbRow>>> = grid
                .par_iter()
                .map(|&p| {
                    if !(0.0..=1.0).contains(&p) {
                        return Err("p is outside [0, 1]".to_string());
                    }
                    Ok(prob_row(p, &pop, &unit))
                })
                .collect();
            let (rows, notes) = split(var, grid, points)?;
            (SweepTable::Prob(rows), notes)
        }
        _ => {
            let points: Vec<Point<mz_core::Result<ParamRow>>> = grid
                .par_iter()
                .map(
                    |&v| match with_value(spec, var, v).and_then(|s| s.resolve()) {
                        Ok(params) => Ok(param_row(v, &params)),
                        Err(e) => Err(e.to_string()),
                    },
                )
                .collect();
            let (rows, notes) = split(var, grid, points)?;
            (SweepTable::Param(var, rows), notes)
        }
    };
    if table.is_empty() {
        return invalid(format!(
            "empty effective grid: all {} points were skipped",
            grid.len()
        ));
    }
    Ok((table, notes))
}

/// Separates computed rows from notes on skipped points. Errors raised while
/// computing a valid point abort the sweep.
fn split<T>(
    var: SweepVar,
    grid: &[f64],
    points: Vec<Point<mz_core::Result<T>>>,
) -> CliResult<(Vec<T>, Vec<String>)> {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for (&v, pt) in grid.iter().zip(points) {
        match pt {
            Ok(r) => rows.push(r?),
            Err(why) => notes.push(format!("skipped {}={v}: {why}", var.name())),
        }
    }
    Ok((rows, notes))
}

fn with_value(spec: &ParamSpec, var: SweepVar, v: f64) -> mz_core::Result<ParamSpec> {
    let mut s = *spec;
    match var {
        SweepVar::Alpha => s.alpha = Some(v),
        SweepVar::Mu => s.mu = Some(v),
        SweepVar::Delta => s.delta = Some(v),
        SweepVar::Gamma => s.gamma = Some(v),
        SweepVar::H => {
            if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                return Err(Error::InvalidParams(format!(
                    "H = {v} is not a whole number"
                )));
            }
            s.h = Some(v as u32);
        }
        SweepVar::P => unreachable!("p is not a model parameter"),
    }
    Ok(s)
}

fn param_row(value: f64, params: &GameParams) -> mz_core::Result<ParamRow> {
    let (unit, _) = unit_params(params);
    let t = thresholds(&unit)?;
    let r = classify(&unit, &t)?;
    Ok(ParamRow {
        value,
        gamma_k: t.gamma_k,
        gamma_l: t.gamma_l,
        row: SweepRow {
            gamma: unit.gamma(),
            kind: r.kind,
            p_star: r.sniping_probability(),
            s_star: r.s_star_k,
            u_sure: u_star_of_p(1.0, &unit)?.u_star,
            u_opt: r.u_star_k,
        },
    })
}

fn prob_row(p: f64, pop: &Population, params: &GameParams) -> mz_core::Result<ProbRow> {
    let e = endpoints(p, pop, params)?;
    let ip = indifference(&e)?;
    Ok(ProbRow {
        p,
        mm_loses: h(p, params.h())?,
        bandit_wins: g(p, params.h())?,
        a: e.a,
        b: e.b,
        c: e.c,
        d: e.d,
        s_star: ip.s_star,
        u_star: ip.u_star,
    })
}

pub fn run(a: &SweepArgs) -> CliResult<()> {
    let grid = parse_grid(&a.grid)?;
    let spec = a.params.spec()?;
    let (table, notes) = sweep(a.var, &grid, &spec)?;
    for n in &notes {
        eprintln!("note: {n}");
    }
    let dir = out_dir(&a.out)?;
    table.write_csv(sink(dir.as_deref(), OUTPUT)?)?;
    if let Some(dir) = dir {
        let mut canonical = vec![
            "--var".to_string(),
            a.var.name().to_string(),
            "--grid".to_string(),
            a.grid.clone(),
        ];
        let mut fixed = spec;
        match a.var {
            SweepVar::Gamma => fixed.gamma = None,
            SweepVar::Alpha => fixed.alpha = None,
            SweepVar::Mu => fixed.mu = None,
            SweepVar::Delta => fixed.delta = None,
            SweepVar::H => fixed.h = None,
            SweepVar::P => {}
        }
        canonical.extend(spec_argv(&fixed));
        let mut m = RunManifest::new("sweep", canonical);
        if let Ok(p) = spec.resolve() {
            m.params = Some((&p).into());
        }
        m.outputs = vec![OUTPUT.into()];
        m.notes = notes;
        m.write(&dir)?;
    }
    Ok(())
}
