//! Risk-aversion thresholds and the optimal sniping probability.
//!
//! With homogeneous agents that all snipe with probability `p`, the indifference
//! utility is `u*(p) = N(p) / Q(p)` with `N = AD - BC` and `Q = A - C + D - B`.
//! Below `gamma_K` sure sniping (`p = 1`) maximizes it, between `gamma_K` and
//! `gamma_L` an interior `p` does, and above `gamma_L` nobody snipes.

use std::fmt;
use std::io::Write;

use log::warn;

use crate::error::{Error, Result};
use crate::numeric::{bisect, golden_section_max};
use crate::params::GameParams;
use crate::race::{self, Population};
use crate::utility::{endpoints, indifference, IndifferencePoint, UtilityEndpoints};

/// Tolerance on gamma roots.
pub const GAMMA_TOL: f64 = 1e-9;
/// Tolerance on the optimal sniping probability.
pub const P_TOL: f64 = 1e-6;
/// A gamma this close to a threshold is classified as sitting on it.
pub const THRESHOLD_SNAP: f64 = 1e-5;
const PRESCAN_POINTS: usize = 21;

fn homogeneous_endpoints(p: f64, params: &GameParams) -> Result<UtilityEndpoints> {
    endpoints(p, &Population::homogeneous(params.h())?, params)
}

/// Derivatives of the four endpoints with respect to `p` (homogeneous agents).
pub fn endpoint_slopes(p: f64, params: &GameParams) -> Result<UtilityEndpoints> {
    let d = params.derived();
    let hp = race::h_prime(p, params.h())?;
    let hf = params.h() as f64;
    let pg = hp / (hf - 1.0);
    Ok(UtilityEndpoints {
        a: d.m * d.beta * pg,
        b: -d.alpha_bar * d.q * d.beta * pg,
        c: -d.beta * (d.m * params.gamma() - d.mu_bar * d.q) * hp,
        d: -d.alpha_bar * d.beta * d.q * hp,
    })
}

pub fn u_star_of_p(p: f64, params: &GameParams) -> Result<IndifferencePoint> {
    indifference(&homogeneous_endpoints(p, params)?)
}

/// `N`, `Q` and their derivatives at `p`.
fn quotient_parts(p: f64, params: &GameParams) -> Result<(f64, f64, f64, f64)> {
    let e = homogeneous_endpoints(p, params)?;
    let s = endpoint_slopes(p, params)?;
    let n = e.a * e.d - e.b * e.c;
    let q = e.a - e.c + e.d - e.b;
    let dn = s.a * e.d + e.a * s.d - s.b * e.c - e.b * s.c;
    let dq = s.a - s.c + s.d - s.b;
    Ok((n, q, dn, dq))
}

pub fn du_star_dp(p: f64, params: &GameParams) -> Result<f64> {
    let (n, q, dn, dq) = quotient_parts(p, params)?;
    if q.abs() < crate::utility::PARALLEL_TOL {
        return Err(Error::ParallelLines(q.abs()));
    }
    Ok((dn * q - n * dq) / (q * q))
}

/// `N'(1) Q(1) - N(1) Q'(1)`, whose sign is that of `du*/dp` at `p = 1`.
pub fn k_of_gamma(params: &GameParams) -> Result<f64> {
    let (n, q, dn, dq) = quotient_parts(1.0, params)?;
    Ok(dn * q - n * dq)
}

/// `N'(0)`, whose sign is that of `du*/dp` at `p = 0`.
pub fn n_prime_at_zero(params: &GameParams) -> Result<f64> {
    let (_, _, dn, _) = quotient_parts(0.0, params)?;
    Ok(dn)
}

/// Closed-form upper threshold; independent of `H` and of the stored gamma.
pub fn gamma_l(params: &GameParams) -> f64 {
    let d = params.derived();
    let z = 1.0 + d.mu_bar - d.beta * (1.0 - d.mu_bar);
    1.0 + ((1.0 - d.mu_bar) * z / (d.alpha_bar * d.theta_bar)).sqrt()
}

/// Upper threshold found as the root of `N'(0)` in gamma.
pub fn gamma_l_numeric(params: &GameParams) -> Result<f64> {
    let mut hi = 2.0;
    while n_prime_at_zero(&params.with_gamma(hi)?)? > 0.0 {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NoBracket("N'(0) stays positive".into()));
        }
    }
    bisect(
        |g| n_prime_at_zero(&params.with_gamma(g)?),
        1.0,
        hi,
        GAMMA_TOL,
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaK {
    pub gamma: f64,
    /// Set when `K(1) <= 0`: probabilistic sniping is already optimal at gamma = 1.
    pub at_boundary: bool,
}

/// Lower threshold: the root of `K(gamma)` above 1.
pub fn gamma_k(params: &GameParams) -> Result<GammaK> {
    let k = |g: f64| k_of_gamma(&params.with_gamma(g)?);
    if k(1.0)? <= 0.0 {
        warn!("K(1) <= 0: probabilistic sniping is optimal already at gamma = 1");
        return Ok(GammaK {
            gamma: 1.0,
            at_boundary: true,
        });
    }
    let mut hi = 10.0 * gamma_l(params);
    let mut tries = 0;
    while k(hi)? >= 0.0 {
        hi *= 2.0;
        tries += 1;
        if tries > 40 {
            return Err(Error::NoBracket("K(gamma) stays nonnegative".into()));
        }
    }
    Ok(GammaK {
        gamma: bisect(k, 1.0, hi, GAMMA_TOL)?,
        at_boundary: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPair {
    pub gamma_k: f64,
    pub gamma_l: f64,
}

pub fn thresholds(params: &GameParams) -> Result<ThresholdPair> {
    Ok(ThresholdPair {
        gamma_k: gamma_k(params)?.gamma,
        gamma_l: gamma_l(params),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegimeKind {
    Sure,
    Probabilistic,
    NoSniping,
}

impl fmt::Display for RegimeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RegimeKind::Sure => "sure",
            RegimeKind::Probabilistic => "probabilistic",
            RegimeKind::NoSniping => "none",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SnipingRegime {
    pub kind: RegimeKind,
    /// Interior optimum; present only in the probabilistic regime.
    pub p_star: Option<f64>,
    pub u_star_k: f64,
    pub s_star_k: f64,
    /// Gamma sits on the sure/probabilistic threshold (within [`THRESHOLD_SNAP`]).
    pub knife_edge: bool,
    /// Every interior local maximum found by the pre-scan.
    pub candidates: Vec<f64>,
}

impl SnipingRegime {
    /// Sniping probability agents use in this regime.
    pub fn sniping_probability(&self) -> f64 {
        match self.kind {
            RegimeKind::Sure => 1.0,
            RegimeKind::NoSniping => 0.0,
            RegimeKind::Probabilistic => self.p_star.unwrap_or(1.0),
        }
    }
}

pub fn p_star_k(params: &GameParams) -> Result<SnipingRegime> {
    classify(params, &thresholds(params)?)
}

/// Classifies `params.gamma()` against precomputed thresholds.
pub fn classify(params: &GameParams, t: &ThresholdPair) -> Result<SnipingRegime> {
    let gamma = params.gamma();
    let knife_edge = (gamma - t.gamma_k).abs() <= THRESHOLD_SNAP;
    if gamma >= t.gamma_l - THRESHOLD_SNAP {
        let ip = u_star_of_p(0.0, params)?;
        return Ok(SnipingRegime {
            kind: RegimeKind::NoSniping,
            p_star: None,
            u_star_k: 0.0,
            s_star_k: ip.s_star,
            knife_edge: false,
            candidates: Vec::new(),
        });
    }
    if gamma <= t.gamma_k + THRESHOLD_SNAP {
        let ip = u_star_of_p(1.0, params)?;
        return Ok(SnipingRegime {
            kind: RegimeKind::Sure,
            p_star: None,
            u_star_k: ip.u_star,
            s_star_k: ip.s_star,
            knife_edge,
            candidates: Vec::new(),
        });
    }
    let (p, candidates) = maximize_u_star(params)?;
    let ip = u_star_of_p(p, params)?;
    Ok(SnipingRegime {
        kind: RegimeKind::Probabilistic,
        p_star: Some(p),
        u_star_k: ip.u_star,
        s_star_k: ip.s_star,
        knife_edge,
        candidates,
    })
}

/// Maximizes `u*(p)` on `[0, 1]`: derivative-sign pre-scan, then golden-section
/// search inside every bracket where the derivative turns from positive to
/// non-positive. Returns the best point and all interior candidates.
fn maximize_u_star(params: &GameParams) -> Result<(f64, Vec<f64>)> {
    let grid: Vec<f64> = (0..PRESCAN_POINTS)
        .map(|i| i as f64 / (PRESCAN_POINTS - 1) as f64)
        .collect();
    let slopes = grid
        .iter()
        .map(|&p| du_star_dp(p, params))
        .collect::<Result<Vec<_>>>()?;
    let u = |p: f64| u_star_of_p(p, params).map(|ip| ip.u_star);

    let mut candidates = Vec::new();
    for i in 0..PRESCAN_POINTS - 1 {
        if slopes[i] > 0.0 && slopes[i + 1] <= 0.0 {
            let (p, _) = golden_section_max(u, grid[i], grid[i + 1], P_TOL)?;
            candidates.push(p);
        }
    }
    if candidates.len() > 1 {
        warn!(
            "u*(p) has {} local maxima: {:?}",
            candidates.len(),
            candidates
        );
    }
    let mut best = (0.0, u(0.0)?);
    for &p in candidates.iter().chain([1.0].iter()) {
        let v = u(p)?;
        if v > best.1 {
            best = (p, v);
        }
    }
    Ok((best.0, candidates))
}

/// One row of a gamma sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub kind: RegimeKind,
    /// Sniping probability in use (1 for sure, 0 for none).
    pub p_star: f64,
    pub s_star: f64,
    /// Indifference utility under sure sniping.
    pub u_sure: f64,
    /// Indifference utility at the optimal sniping probability.
    pub u_opt: f64,
}

pub fn regime_sweep(gamma_grid: &[f64], params: &GameParams) -> Result<Vec<SweepRow>> {
    let t = thresholds(params)?;
    gamma_grid
        .iter()
        .map(|&gamma| {
            let pg = params.with_gamma(gamma)?;
            sweep_row(&pg, &t)
        })
        .collect()
}

pub fn sweep_row(params: &GameParams, t: &ThresholdPair) -> Result<SweepRow> {
    let r = classify(params, t)?;
    Ok(SweepRow {
        gamma: params.gamma(),
        kind: r.kind,
        p_star: r.sniping_probability(),
        s_star: r.s_star_k,
        u_sure: u_star_of_p(1.0, params)?.u_star,
        u_opt: r.u_star_k,
    })
}

pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["gamma", "regime", "p_star", "s_star", "u_sure", "u_opt"])?;
    for r in rows {
        out.write_record([
            r.gamma.to_string(),
            r.kind.to_string(),
            r.p_star.to_string(),
            r.s_star.to_string(),
            r.u_sure.to_string(),
            r.u_opt.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig7(gamma: f64) -> GameParams {
        GameParams::new(5, 0.45, 0.5, 0.5, gamma).unwrap()
    }

    #[test]
    fn u_star_at_zero() {
        let p = fig7(3.0);
        let e = homogeneous_endpoints(0.0, &p).unwrap();
        let ip = u_star_of_p(0.0, &p).unwrap();
        assert_eq!(ip.u_star, 0.0);
        assert!((ip.s_star - (-e.c / (e.d - e.c))).abs() < 1e-15);
    }

    #[test]
    fn gamma_l_matches_root() {
        let p = fig7(2.0);
        let closed = gamma_l(&p);
        assert!((closed - 7.8313).abs() < 5e-4, "{closed}");
        let numeric = gamma_l_numeric(&p).unwrap();
        assert!((closed - numeric).abs() < 1e-8);
    }

    #[test]
    fn gamma_l_symmetric_rates() {
        let p = GameParams::new(4, 0.4, 0.4, 0.5, 2.0).unwrap();
        let d = *p.derived();
        let z = 1.0 + d.mu_bar - (1.0 - d.mu_bar) / 2.0;
        let expect = 1.0 + ((1.0 - d.mu_bar) * z / (d.alpha_bar * d.theta_bar)).sqrt();
        assert!((gamma_l(&p) - expect).abs() < 1e-14);
        assert!((gamma_l_numeric(&p).unwrap() - expect).abs() < 1e-8);
    }

    #[test]
    fn k_sign_structure() {
        let p = fig7(1.0);
        assert!(k_of_gamma(&p).unwrap() > 0.0);
        let hi = 10.0 * gamma_l(&p);
        assert!(k_of_gamma(&p.with_gamma(hi).unwrap()).unwrap() < 0.0);
    }

    #[test]
    fn gamma_k_zeroes_slope() {
        let p = fig7(2.0);
        let gk = gamma_k(&p).unwrap();
        assert!(!gk.at_boundary);
        let at = p.with_gamma(gk.gamma).unwrap();
        assert!(du_star_dp(1.0, &at).unwrap().abs() < 1e-8);
        assert!(gk.gamma < gamma_l(&p));
    }

    #[test]
    fn fig7_regimes() {
        assert_eq!(p_star_k(&fig7(1.0)).unwrap().kind, RegimeKind::Sure);
        assert_eq!(p_star_k(&fig7(1.7575)).unwrap().kind, RegimeKind::Sure);
        let r = p_star_k(&fig7(3.5)).unwrap();
        assert_eq!(r.kind, RegimeKind::Probabilistic);
        let u1 = u_star_of_p(1.0, &fig7(3.5)).unwrap().u_star;
        assert!(r.u_star_k > u1 && u1 > 0.0);
        assert_eq!(r.candidates.len(), 1);
        assert_eq!(p_star_k(&fig7(7.8313)).unwrap().kind, RegimeKind::NoSniping);
        assert_eq!(p_star_k(&fig7(9.0)).unwrap().kind, RegimeKind::NoSniping);
    }

    #[test]
    fn knife_edge_flag() {
        let base = fig7(2.0);
        let gk = gamma_k(&base).unwrap().gamma;
        let r = p_star_k(&base.with_gamma(gk).unwrap()).unwrap();
        assert_eq!(r.kind, RegimeKind::Sure);
        assert!(r.knife_edge);
        let below = p_star_k(&base.with_gamma(gk - 1e-4).unwrap()).unwrap();
        let above = p_star_k(&base.with_gamma(gk + 1e-4).unwrap()).unwrap();
        assert_eq!(below.kind, RegimeKind::Sure);
        assert!(!below.knife_edge);
        assert_eq!(above.kind, RegimeKind::Probabilistic);
        let ps = above.p_star.unwrap();
        assert!(ps > 0.0 && ps < 1.0);
    }

    #[test]
    fn sweep_csv_shape() {
        let rows = regime_sweep(&[1.0, 3.5, 9.0], &fig7(1.0)).unwrap();
        assert_eq!(rows[0].kind, RegimeKind::Sure);
        assert_eq!(rows[2].kind, RegimeKind::NoSniping);
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("gamma,regime,p_star,s_star,u_sure,u_opt\n1,sure,1,"));
        assert_eq!(text.lines().count(), 4);
    }
}
