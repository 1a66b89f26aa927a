//! Primitive game parameters, derived shorthand quantities and parameter files.
//!
//! All downstream formulas are expressed in units of the jump size, so `sigma`
//! only matters for reporting.

use crate::error::{Error, Result};

pub const MIN_AGENTS: u32 = 3;

/// Validated primitive parameters. Construct with [`GameParams::new`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameParams {
    h: u32,
    alpha: f64,
    mu: f64,
    delta: f64,
    gamma: f64,
    sigma: f64,
    derived: DerivedParams,
}

/// Shorthand quantities every utility formula consumes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedParams {
    /// Half the expected number of news arrivals during the latency window.
    pub alpha_bar: f64,
    /// Half the expected number of liquidity-trader arrivals during the latency window.
    pub mu_bar: f64,
    /// Probability that the trigger event is news.
    pub beta: f64,
    /// Excess risk aversion, gamma - 1.
    pub q: f64,
    /// 1 - mu_bar.
    pub m: f64,
    /// Harmonic mean of alpha_bar and mu_bar.
    pub theta_bar: f64,
}

impl GameParams {
    /// Parameters in jump-size units (sigma = 1).
    pub fn new(h: u32, alpha: f64, mu: f64, delta: f64, gamma: f64) -> Result<Self> {
        Self::with_sigma(h, alpha, mu, delta, gamma, 1.0)
    }

    pub fn with_sigma(
        h: u32,
        alpha: f64,
        mu: f64,
        delta: f64,
        gamma: f64,
        sigma: f64,
    ) -> Result<Self> {
        if h < MIN_AGENTS {
            return Err(Error::InvalidParams(format!(
                "agent count H >= {MIN_AGENTS} violated: H = {h}"
            )));
        }
        for (name, v) in [
            ("alpha", alpha),
            ("mu", mu),
            ("delta", delta),
            ("sigma", sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParams(format!(
                    "positivity {name} > 0 violated: {name} = {v}"
                )));
            }
        }
        if !(gamma >= 1.0 && gamma.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "risk aversion gamma >= 1 violated: gamma = {gamma}"
            )));
        }
        let load = (alpha + mu) * delta;
        if load.is_nan() || load >= 1.0 {
            return Err(Error::InvalidParams(format!(
                "latency condition (α+μ)δ<1 violated: ({alpha}+{mu})·{delta} = {load}"
            )));
        }
        let alpha_bar = alpha * delta / 2.0;
        let mu_bar = mu * delta / 2.0;
        let derived = DerivedParams {
            alpha_bar,
            mu_bar,
            beta: alpha / (alpha + mu),
            q: gamma - 1.0,
            m: 1.0 - mu_bar,
            theta_bar: 2.0 * alpha_bar * mu_bar / (alpha_bar + mu_bar),
        };
        Ok(GameParams {
            h,
            alpha,
            mu,
            delta,
            gamma,
            sigma,
            derived,
        })
    }

    pub fn h(&self) -> u32 {
        self.h
    }
    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
    pub fn delta(&self) -> f64 {
        self.delta
    }
    pub fn gamma(&self) -> f64 {
        self.gamma
    }
    pub fn sigma(&self) -> f64 {
        self.sigma
    }
    pub fn derived(&self) -> &DerivedParams {
        &self.derived
    }

    pub fn with_gamma(&self, gamma: f64) -> Result<Self> {
        Self::with_sigma(self.h, self.alpha, self.mu, self.delta, gamma, self.sigma)
    }

    pub fn with_h(&self, h: u32) -> Result<Self> {
        Self::with_sigma(h, self.alpha, self.mu, self.delta, self.gamma, self.sigma)
    }
}

pub fn derive(params: &GameParams) -> DerivedParams {
    params.derived
}

/// Parameters moved to unit jump size, with the factor needed to express
/// spreads and utilities back in the original units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescaled {
    pub params: GameParams,
    pub scale: f64,
}

pub fn rescale_to_unit_sigma(params: &GameParams) -> Rescaled {
    let mut unit = *params;
    unit.sigma = 1.0;
    Rescaled {
        params: unit,
        scale: params.sigma,
    }
}

/// Partially specified parameters, as read from a file or from flags.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamSpec {
    pub h: Option<u32>,
    pub alpha: Option<f64>,
    pub mu: Option<f64>,
    pub delta: Option<f64>,
    pub gamma: Option<f64>,
    pub sigma: Option<f64>,
}

impl ParamSpec {
    /// Parses `key = value` lines; `#` starts a comment. Keys are
    /// `H`, `alpha`, `mu`, `delta`, `gamma` and `sigma`.
    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = ParamSpec::default();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let lineno = idx + 1;
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {lineno}: expected `key = value`")))?;
            let key = key.trim();
            let value = value.trim();
            let real = |v: &str| -> Result<f64> {
                v.parse::<f64>().map_err(|_| {
                    Error::Config(format!("line {lineno}: `{key}` is not a number: {v}"))
                })
            };
            let dup = || Error::Config(format!("line {lineno}: duplicate key `{key}`"));
            match key {
                "H" => {
                    let h = value.parse::<u32>().map_err(|_| {
                        Error::Config(format!(
                            "line {lineno}: `H` is not a non-negative integer: {value}"
                        ))
                    })?;
                    if spec.h.replace(h).is_some() {
                        return Err(dup());
                    }
                }
                "alpha" | "mu" | "delta" | "gamma" | "sigma" => {
                    let v = real(value)?;
                    let slot = match key {
                        "alpha" => &mut spec.alpha,
                        "mu" => &mut spec.mu,
                        "delta" => &mut spec.delta,
                        "gamma" => &mut spec.gamma,
                        _ => &mut spec.sigma,
                    };
                    if slot.replace(v).is_some() {
                        return Err(dup());
                    }
                }
                other => {
                    return Err(Error::Config(format!(
                        "line {lineno}: unknown key `{other}`"
                    )));
                }
            }
        }
        Ok(spec)
    }

    /// Values set in `top` win over values in `self`.
    pub fn overlay(self, top: &ParamSpec) -> ParamSpec {
        ParamSpec {
            h: top.h.or(self.h),
            alpha: top.alpha.or(self.alpha),
            mu: top.mu.or(self.mu),
            delta: top.delta.or(self.delta),
            gamma: top.gamma.or(self.gamma),
            sigma: top.sigma.or(self.sigma),
        }
    }

    /// Builds validated parameters; `sigma` defaults to 1, everything else is required.
    pub fn resolve(&self) -> Result<GameParams> {
        fn need<T>(v: Option<T>, name: &str) -> Result<T> {
            v.ok_or_else(|| Error::Config(format!("missing parameter `{name}`")))
        }
        GameParams::with_sigma(
            need(self.h, "H")?,
            need(self.alpha, "alpha")?,
            need(self.mu, "mu")?,
            need(self.delta, "delta")?,
            need(self.gamma, "gamma")?,
            self.sigma.unwrap_or(1.0),
        )
    }

    pub fn from_params(p: &GameParams) -> Self {
        ParamSpec {
            h: Some(p.h),
            alpha: Some(p.alpha),
            mu: Some(p.mu),
            delta: Some(p.delta),
            gamma: Some(p.gamma),
            sigma: Some(p.sigma),
        }
    }

    /// Renders the spec in the same format [`ParamSpec::parse`] reads.
    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        if let Some(h) = self.h {
            out.push_str(&format!("H = {h}\n"));
        }
        for (k, v) in [
            ("alpha", self.alpha),
            ("mu", self.mu),
            ("delta", self.delta),
            ("gamma", self.gamma),
            ("sigma", self.sigma),
        ] {
            if let Some(v) = v {
                out.push_str(&format!("{k} = {v}\n"));
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fig7_derived() {
        let p = GameParams::new(5, 0.45, 0.5, 0.5, 2.515).unwrap();
        let d = p.derived();
        assert!((d.alpha_bar - 0.1125).abs() < 1e-15);
        assert!((d.mu_bar - 0.125).abs() < 1e-15);
        assert!((d.beta - 9.0 / 19.0).abs() < 1e-15);
        assert!((d.m - 0.875).abs() < 1e-15);
        assert!((d.theta_bar - 2.0 * 0.1125 * 0.125 / 0.2375).abs() < 1e-15);
        assert!((d.q - 1.515).abs() < 1e-15);
    }

    #[test]
    fn symmetric_rates() {
        let p = GameParams::new(3, 0.4, 0.4, 0.7, 1.0).unwrap();
        let d = p.derived();
        assert_eq!(d.beta, 0.5);
        assert_eq!(d.q, 0.0);
        assert!((d.theta_bar - d.alpha_bar).abs() < 1e-15);
        assert!((d.theta_bar - d.mu_bar).abs() < 1e-15);
    }

    #[test]
    fn latency_violation_is_named() {
        let err = GameParams::new(3, 0.6, 0.6, 1.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("latency condition"), "{err}");
        // boundary is strict
        let err = GameParams::new(3, 0.5, 0.5, 1.0, 2.0).unwrap_err();
        assert!(err.to_string().contains("latency condition"));
    }

    #[test]
    fn other_violations() {
        assert!(GameParams::new(2, 0.1, 0.1, 0.1, 1.0)
            .unwrap_err()
            .to_string()
            .contains("H >= 3"));
        assert!(GameParams::new(3, 0.0, 0.1, 0.1, 1.0)
            .unwrap_err()
            .to_string()
            .contains("alpha"));
        assert!(GameParams::new(3, 0.1, -1.0, 0.1, 1.0)
            .unwrap_err()
            .to_string()
            .contains("mu"));
        assert!(GameParams::new(3, 0.1, 0.1, 0.1, 0.99)
            .unwrap_err()
            .to_string()
            .contains("gamma"));
    }

    #[test]
    fn rescale() {
        let p = GameParams::with_sigma(5, 0.45, 0.5, 0.5, 3.0, 2.0).unwrap();
        let r = rescale_to_unit_sigma(&p);
        assert_eq!(r.params.sigma(), 1.0);
        assert_eq!(r.scale, 2.0);
        assert_eq!(derive(&r.params), derive(&p));

        let p = GameParams::with_sigma(5, 0.45, 0.5, 0.5, 3.0, 0.5).unwrap();
        assert_eq!(rescale_to_unit_sigma(&p).scale, 0.5);

        let p = GameParams::new(5, 0.45, 0.5, 0.5, 3.0).unwrap();
        let r = rescale_to_unit_sigma(&p);
        assert_eq!(r.params, p);
        assert_eq!(r.scale, 1.0);
    }

    #[test]
    fn parse_and_overlay() {
        let text = "# fig 7\nH = 5\nalpha = 0.45\nmu=0.5\n delta = 0.5 # latency\ngamma = 3.5\n";
        let spec = ParamSpec::parse(text).unwrap();
        let p = spec.resolve().unwrap();
        assert_eq!(p.h(), 5);
        assert_eq!(p.sigma(), 1.0);

        let flags = ParamSpec {
            gamma: Some(2.0),
            ..Default::default()
        };
        assert_eq!(spec.overlay(&flags).resolve().unwrap().gamma(), 2.0);

        let round = ParamSpec::parse(&spec.to_config_string()).unwrap();
        assert_eq!(round, spec);
    }

    #[test]
    fn parse_errors() {
        let e = ParamSpec::parse("H = 5\nbeta = 0.3\n").unwrap_err();
        assert!(e.to_string().contains("unknown key `beta`"), "{e}");
        let e = ParamSpec::parse("H = 5\nH = 6\n").unwrap_err();
        assert!(e.to_string().contains("duplicate"));
        let e = ParamSpec::parse("alpha 0.3\n").unwrap_err();
        assert!(e.to_string().contains("line 1"));
        let e = ParamSpec::parse("H = 5\nalpha = .45\ndelta = .5\ngamma = 2\n")
            .unwrap()
            .resolve()
            .unwrap_err();
        assert!(e.to_string().contains("`mu`"), "{e}");
    }
}
