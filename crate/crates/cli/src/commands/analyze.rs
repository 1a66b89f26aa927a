use std::io::Write;

use mz_core::transitions::{classify, thresholds, u_star_of_p, RegimeKind};
use mz_core::utility::bandit_zero_crossing;
use mz_core::GameParams;

use super::{csv_writer, out_dir, unit_params};
use crate::args::{params_argv, AnalyzeArgs};
use crate::error::CliResult;
use crate::manifest::RunManifest;

pub const OUTPUT: &str = "analyze.csv";

/// Equilibrium summary of one parameter set. Spreads and utilities are in
/// units of the jump size; the `_abs` fields are in price units.
#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    pub params: GameParams,
    pub gamma_k: f64,
    pub gamma_l: f64,
    pub regime: RegimeKind,
    pub knife_edge: bool,
    pub p_star_k: f64,
    pub s_star_k: f64,
    pub u_star_k: f64,
    pub s_star_1: f64,
    pub u_star_1: f64,
    /// Spread above which a bandit expects to lose from sniping.
    pub s_bandit_zero: f64,
    pub s_star_k_abs: f64,
    pub u_star_k_abs: f64,
}

pub fn analyze(params: &GameParams) -> CliResult<Analysis> {
    let (unit, scale) = unit_params(params);
    let t = thresholds(&unit)?;
    let r = classify(&unit, &t)?;
    let sure = u_star_of_p(1.0, &unit)?;
    Ok(Analysis {
        params: *params,
        gamma_k: t.gamma_k,
        gamma_l: t.gamma_l,
        regime: r.kind,
        knife_edge: r.knife_edge,
        p_star_k: r.sniping_probability(),
        s_star_k: r.s_star_k,
        u_star_k: r.u_star_k,
        s_star_1: sure.s_star,
        u_star_1: sure.u_star,
        s_bandit_zero: bandit_zero_crossing(&unit),
        s_star_k_abs: r.s_star_k * scale,
        u_star_k_abs: r.u_star_k * scale,
    })
}

impl Analysis {
    fn fields(&self) -> Vec<(&'static str, String)> {
        let p = &self.params;
        vec![
            ("H", p.h().to_string()),
            ("alpha", p.alpha().to_string()),
            ("mu", p.mu().to_string()),
            ("delta", p.delta().to_string()),
            ("gamma", p.gamma().to_string()),
            ("sigma", p.sigma().to_string()),
            ("gamma_K", self.gamma_k.to_string()),
            ("gamma_L", self.gamma_l.to_string()),
            ("regime", self.regime.to_string()),
            ("knife_edge", self.knife_edge.to_string()),
            ("p_star_K", self.p_star_k.to_string()),
            ("s_star_K", self.s_star_k.to_string()),
            ("u_star_K", self.u_star_k.to_string()),
            ("s_star_1", self.s_star_1.to_string()),
            ("u_star_1", self.u_star_1.to_string()),
            ("s_bandit_zero", self.s_bandit_zero.to_string()),
            ("s_star_K_abs", self.s_star_k_abs.to_string()),
            ("u_star_K_abs", self.u_star_k_abs.to_string()),
        ]
    }

    pub fn write_report<W: Write>(&self, mut w: W) -> CliResult<()> {
        for (k, v) in self.fields() {
            writeln!(w, "{k:<14} {v}")?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, w: W) -> CliResult<()> {
        let fields = self.fields();
        let mut out = csv_writer(w);
        out.write_record(fields.iter().map(|(k, _)| *k))?;
        out.write_record(fields.iter().map(|(_, v)| v.as_str()))?;
        out.flush()?;
        Ok(())
    }
}

pub fn run(a: &AnalyzeArgs) -> CliResult<()> {
    let params = a.params.resolve()?;
    let report = analyze(&params)?;
    report.write_report(std::io::stdout().lock())?;
    if let Some(dir) = out_dir(&a.out)? {
        report.write_csv(super::create(&dir, OUTPUT)?)?;
        let mut m = RunManifest::new("analyze", params_argv(&params));
        m.params = Some((&params).into());
        m.outputs = vec![OUTPUT.into()];
        m.write(&dir)?;
    }
    Ok(())
}
