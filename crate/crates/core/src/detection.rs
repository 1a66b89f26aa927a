//! Per-stage utility distribution of a trustworthy agent and a Wald sequential
//! probability ratio test deciding whether every agent complies (H0) or some
//! agents always snipe (H1).

use std::fmt;
use std::io::Write;

use log::warn;

use crate::error::{check_unit, Error, Result};
use crate::params::GameParams;
use crate::race::{Population, RaceField};

/// The nine utilities an agent can receive in one stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    /// 0
    Zero,
    /// -gamma (2 - s): market maker sniped after two same-direction jumps.
    MmDoubleJump,
    /// s
    MmSpread,
    /// -gamma (1 - s)
    MmStale,
    /// 1 + s
    MmSpreadAndJump,
    /// 2 s
    MmBothSides,
    /// 2 - s
    SniperDoubleJump,
    /// 1 - s
    SniperJump,
    /// -gamma s: the sniper's position is reversed by opposite news.
    SniperReversal,
}

impl Outcome {
    pub const ALL: [Outcome; 9] = [
        Outcome::Zero,
        Outcome::MmDoubleJump,
        Outcome::MmSpread,
        Outcome::MmStale,
        Outcome::MmSpreadAndJump,
        Outcome::MmBothSides,
        Outcome::SniperDoubleJump,
        Outcome::SniperJump,
        Outcome::SniperReversal,
    ];

    pub fn value(self, s: f64, gamma: f64) -> f64 {
        match self {
            Outcome::Zero => 0.0,
            Outcome::MmDoubleJump => -gamma * (2.0 - s),
            Outcome::MmSpread => s,
            Outcome::MmStale => -gamma * (1.0 - s),
            Outcome::MmSpreadAndJump => 1.0 + s,
            Outcome::MmBothSides => 2.0 * s,
            Outcome::SniperDoubleJump => 2.0 - s,
            Outcome::SniperJump => 1.0 - s,
            Outcome::SniperReversal => -gamma * s,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Outcome::Zero => "0",
            Outcome::MmDoubleJump => "-gamma*(2-s)",
            Outcome::MmSpread => "s",
            Outcome::MmStale => "-gamma*(1-s)",
            Outcome::MmSpreadAndJump => "1+s",
            Outcome::MmBothSides => "2*s",
            Outcome::SniperDoubleJump => "2-s",
            Outcome::SniperJump => "1-s",
            Outcome::SniperReversal => "-gamma*s",
        }
    }
}

/// Probability of each [`Outcome`] (in [`Outcome::ALL`] order) for a focal agent
/// that races with probability `own_entry` as a bandit against `field`, whose
/// random members race with probability `p`.
pub fn outcome_probabilities_for(
    params: &GameParams,
    own_entry: f64,
    field: &RaceField,
    p: f64,
) -> Result<[f64; 9]> {
    check_unit("own_entry", own_entry)?;
    let d = params.derived();
    let (ab, mb, beta) = (d.alpha_bar, d.mu_bar, d.beta);
    let lose = field.mm_loses(p)?;
    let win = own_entry * field.wins_given_entry(p)?;
    let hf = params.h() as f64;
    let as_mm = 1.0 / hf;
    let as_bandit = (hf - 1.0) / hf;

    let mut out = [0.0; 9];
    out[0] = as_mm * beta * (1.0 - 2.0 * mb) * (1.0 - lose)
        + as_bandit * (1.0 - beta * win * (1.0 - mb));
    out[1] = as_mm * ab * beta * lose;
    out[2] = as_mm * (ab * beta * lose + (1.0 - beta) * (1.0 - 2.0 * ab - mb));
    out[3] = as_mm * (ab * (1.0 - beta) + beta * lose * (1.0 - 2.0 * ab - 2.0 * mb) + beta * mb);
    out[4] = as_mm * (beta * mb * (1.0 - lose) + ab * (1.0 - beta));
    out[5] = as_mm * mb * (beta * lose + 1.0 - beta);
    out[6] = as_bandit * ab * beta * win;
    out[7] = as_bandit * beta * win * (1.0 - 2.0 * ab - mb);
    out[8] = as_bandit * ab * beta * win;
    Ok(out)
}

/// Outcome probabilities for a trustworthy agent.
pub fn outcome_probabilities(params: &GameParams, p: f64, pop: &Population) -> Result<[f64; 9]> {
    if pop.total() != params.h() {
        return Err(Error::InvalidPopulation(format!(
            "H_t + H_d = {} but H = {}",
            pop.total(),
            params.h()
        )));
    }
    outcome_probabilities_for(params, p, &pop.trustworthy_field(), p)
}

/// Absolute tolerance when matching an observed utility to a support point.
pub const MATCH_TOL: f64 = 1e-9;

/// Distinct utility values with their probabilities. Outcomes whose values
/// coincide for the given `s` and `gamma` share one support point.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityDistribution {
    pub support: Vec<f64>,
    pub probs: Vec<f64>,
    /// Outcomes merged into each support point.
    pub outcomes: Vec<Vec<Outcome>>,
}

impl UtilityDistribution {
    pub fn from_outcomes(probs: &[f64; 9], s: f64, gamma: f64) -> Self {
        let mut dist = UtilityDistribution {
            support: Vec::new(),
            probs: Vec::new(),
            outcomes: Vec::new(),
        };
        for (o, &pr) in Outcome::ALL.iter().zip(probs) {
            let v = o.value(s, gamma);
            match dist.find(v) {
                Some(j) => {
                    dist.probs[j] += pr;
                    dist.outcomes[j].push(*o);
                }
                None => {
                    dist.support.push(v);
                    dist.probs.push(pr);
                    dist.outcomes.push(vec![*o]);
                }
            }
        }
        dist
    }

    /// Index of the support point within [`MATCH_TOL`] of `u`.
    pub fn find(&self, u: f64) -> Option<usize> {
        self.support
            .iter()
            .position(|&v| (v - u).abs() <= MATCH_TOL)
    }

    pub fn prob_of(&self, u: f64) -> Option<f64> {
        self.find(u).map(|j| self.probs[j])
    }
}

/// Per-stage utility distribution of a trustworthy agent when trustworthy
/// agents snipe with probability `p` and everyone posts spread `s`.
pub fn utility_distribution(
    params: &GameParams,
    p: f64,
    pop: &Population,
    s: f64,
) -> Result<UtilityDistribution> {
    check_unit("s", s)?;
    let probs = outcome_probabilities(params, p, pop)?;
    Ok(UtilityDistribution::from_outcomes(
        &probs,
        s,
        params.gamma(),
    ))
}

/// Wald thresholds `(a, b)` for type-I rate `err_i` and type-II rate `err_ii`.
pub fn sprt_thresholds(err_i: f64, err_ii: f64) -> Result<(f64, f64)> {
    for (name, v) in [("err_I", err_i), ("err_II", err_ii)] {
        if !(v > 0.0 && v < 0.5) {
            return Err(Error::OutOfDomain {
                name,
                value: v,
                range: "(0, 1/2)",
            });
        }
    }
    Ok((
        -((1.0 - err_i) / err_ii).ln(),
        ((1.0 - err_ii) / err_i).ln(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Continue,
    AcceptH0,
    RejectH0,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Continue => "continue",
            Decision::AcceptH0 => "accept_H0",
            Decision::RejectH0 => "reject_H0",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SprtState {
    pub statistic: f64,
    pub t: u64,
    pub a: f64,
    pub b: f64,
    pub decision: Decision,
}

impl SprtState {
    pub fn new(err_i: f64, err_ii: f64) -> Result<Self> {
        let (a, b) = sprt_thresholds(err_i, err_ii)?;
        Ok(SprtState {
            statistic: 0.0,
            t: 0,
            a,
            b,
            decision: Decision::Continue,
        })
    }
}

/// Folds one observation into the test. Returns the new state and the
/// log-likelihood ratio added. A decided state is returned unchanged.
pub fn sprt_step(
    state: SprtState,
    u: f64,
    dist0: &UtilityDistribution,
    dist1: &UtilityDistribution,
) -> Result<(SprtState, f64)> {
    if state.decision != Decision::Continue {
        return Ok((state, 0.0));
    }
    let stage = state.t + 1;
    let unmatched = || Error::UnmatchedUtility { stage, value: u };
    let p0 = dist0.prob_of(u).ok_or_else(unmatched)?;
    let p1 = dist1.prob_of(u).ok_or_else(unmatched)?;
    let llr = match (p0 > 0.0, p1 > 0.0) {
        (true, true) => (p1 / p0).ln(),
        (false, true) => {
            warn!("stage {stage}: utility {u} impossible under H0, rejecting");
            f64::INFINITY
        }
        (true, false) => {
            warn!("stage {stage}: utility {u} impossible under H1, accepting");
            f64::NEG_INFINITY
        }
        (false, false) => return Err(Error::ImpossibleOutcome { stage, value: u }),
    };
    let statistic = state.statistic + llr;
    let decision = if statistic < state.a {
        Decision::AcceptH0
    } else if statistic > state.b {
        Decision::RejectH0
    } else {
        Decision::Continue
    };
    Ok((
        SprtState {
            statistic,
            t: stage,
            decision,
            ..state
        },
        llr,
    ))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryPoint {
    pub stage: u64,
    pub utility: f64,
    pub log_ratio: f64,
    pub statistic: f64,
    pub decision: Decision,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    AcceptH0,
    RejectH0,
    Undecided,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::AcceptH0 => "accept_H0",
            Verdict::RejectH0 => "reject_H0",
            Verdict::Undecided => "undecided",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MonitorReport {
    pub verdict: Verdict,
    /// Stage at which the test stopped, if it did.
    pub stopping_stage: Option<u64>,
    pub state: SprtState,
    pub trajectory: Vec<TrajectoryPoint>,
}

/// Continues a test from `state` over `stream`, stopping at the first decision.
pub fn resume(
    mut state: SprtState,
    stream: &[f64],
    dist0: &UtilityDistribution,
    dist1: &UtilityDistribution,
) -> Result<(SprtState, Vec<TrajectoryPoint>)> {
    let mut trajectory = Vec::new();
    for &u in stream {
        if state.decision != Decision::Continue {
            break;
        }
        let (next, llr) = sprt_step(state, u, dist0, dist1)?;
        state = next;
        trajectory.push(TrajectoryPoint {
            stage: state.t,
            utility: u,
            log_ratio: llr,
            statistic: state.statistic,
            decision: state.decision,
        });
    }
    Ok((state, trajectory))
}

pub fn monitor_stream(
    stream: &[f64],
    dist0: &UtilityDistribution,
    dist1: &UtilityDistribution,
    err_i: f64,
    err_ii: f64,
) -> Result<MonitorReport> {
    if stream.is_empty() {
        return Err(Error::EmptyStream);
    }
    let (state, trajectory) = resume(SprtState::new(err_i, err_ii)?, stream, dist0, dist1)?;
    let verdict = match state.decision {
        Decision::Continue => Verdict::Undecided,
        Decision::AcceptH0 => Verdict::AcceptH0,
        Decision::RejectH0 => Verdict::RejectH0,
    };
    Ok(MonitorReport {
        verdict,
        stopping_stage: (verdict != Verdict::Undecided).then_some(state.t),
        state,
        trajectory,
    })
}

/// Writes `stage,utility,log_ratio,S,decision` rows.
pub fn write_trajectory_csv<W: Write>(w: W, trajectory: &[TrajectoryPoint]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["stage", "utility", "log_ratio", "S", "decision"])?;
    for pt in trajectory {
        out.write_record([
            pt.stage.to_string(),
            pt.utility.to_string(),
            pt.log_ratio.to_string(),
            pt.statistic.to_string(),
            pt.decision.to_string(),
        ])?;
    }
    out.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(p: [f64; 3]) -> UtilityDistribution {
        UtilityDistribution {
            support: vec![0.0, 0.5, -1.0],
            probs: p.to_vec(),
            outcomes: vec![
                vec![Outcome::Zero],
                vec![Outcome::MmSpread],
                vec![Outcome::MmStale],
            ],
        }
    }

    #[test]
    fn thresholds() {
        let (a, b) = sprt_thresholds(0.05, 0.05).unwrap();
        assert!((a + 19f64.ln()).abs() < 1e-15 && (b - 19f64.ln()).abs() < 1e-15);
        let (a, b) = sprt_thresholds(0.01, 0.10).unwrap();
        assert!((a + (0.99f64 / 0.10).ln()).abs() < 1e-15);
        assert!((b - (0.90f64 / 0.01).ln()).abs() < 1e-15);
        assert!((a - -2.293).abs() < 1e-3 && (b - 4.500).abs() < 1e-3);
        let (a, b) = sprt_thresholds(0.5 - 1e-9, 0.5 - 1e-9).unwrap();
        assert!(a < 0.0 && a > -1e-8 && b > 0.0 && b < 1e-8);
        assert!(sprt_thresholds(0.5, 0.1).is_err());
        assert!(sprt_thresholds(0.1, 0.0).is_err());
    }

    #[test]
    fn equal_probabilities_leave_statistic() {
        let d0 = toy([0.5, 0.3, 0.2]);
        let d1 = toy([0.4, 0.3, 0.3]);
        let s = SprtState::new(0.05, 0.05).unwrap();
        let (s2, llr) = sprt_step(s, 0.5, &d0, &d1).unwrap();
        assert_eq!(llr, 0.0);
        assert_eq!(s2.statistic, 0.0);
        assert_eq!(s2.t, 1);
    }

    #[test]
    fn constant_stream_stops_on_schedule() {
        let d0 = toy([0.5, 0.3, 0.2]);
        let d1 = toy([0.4, 0.3, 0.3]);
        let (_, b) = sprt_thresholds(0.05, 0.05).unwrap();
        let expect = (b / (0.3f64 / 0.2).ln()).ceil() as u64;
        let r = monitor_stream(&vec![-1.0; 100], &d0, &d1, 0.05, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::RejectH0);
        assert_eq!(r.stopping_stage, Some(expect));
        assert_eq!(r.trajectory.len() as u64, expect);
    }

    #[test]
    fn truncated_stream_is_undecided() {
        let d0 = toy([0.5, 0.3, 0.2]);
        let d1 = toy([0.4, 0.3, 0.3]);
        let r = monitor_stream(&[-1.0, 0.0, 0.5], &d0, &d1, 0.05, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::Undecided);
        assert_eq!(r.stopping_stage, None);
        assert_eq!(r.trajectory.len(), 3);
    }

    #[test]
    fn errors() {
        let d0 = toy([0.5, 0.3, 0.2]);
        let d1 = toy([0.4, 0.3, 0.3]);
        assert_eq!(
            monitor_stream(&[], &d0, &d1, 0.05, 0.05),
            Err(Error::EmptyStream)
        );
        let e = monitor_stream(&[0.0, 0.7], &d0, &d1, 0.05, 0.05).unwrap_err();
        assert_eq!(
            e,
            Error::UnmatchedUtility {
                stage: 2,
                value: 0.7
            }
        );
        let z = toy([0.0, 0.5, 0.5]);
        assert!(matches!(
            monitor_stream(&[0.0], &z, &z, 0.05, 0.05),
            Err(Error::ImpossibleOutcome { stage: 1, .. })
        ));
    }

    #[test]
    fn zero_probability_decides_immediately() {
        let d0 = toy([0.5, 0.5, 0.0]);
        let d1 = toy([0.4, 0.3, 0.3]);
        let r = monitor_stream(&[0.0, -1.0, 0.0], &d0, &d1, 0.05, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::RejectH0);
        assert_eq!(r.stopping_stage, Some(2));
        let r = monitor_stream(&[0.0, -1.0], &d1, &d0, 0.05, 0.05).unwrap();
        assert_eq!(r.verdict, Verdict::AcceptH0);
    }

    #[test]
    fn frozen_after_decision() {
        let d0 = toy([0.5, 0.5, 0.0]);
        let d1 = toy([0.4, 0.3, 0.3]);
        let s = SprtState::new(0.05, 0.05).unwrap();
        let (s, _) = sprt_step(s, -1.0, &d0, &d1).unwrap();
        assert_eq!(s.decision, Decision::RejectH0);
        let (s2, llr) = sprt_step(s, 0.0, &d0, &d1).unwrap();
        assert_eq!(s2, s);
        assert_eq!(llr, 0.0);
    }

    #[test]
    fn collisions_merge() {
        let params = GameParams::new(5, 0.45, 0.5, 0.5, 2.0).unwrap();
        let pop = Population::homogeneous(5).unwrap();
        // s = 1/2: 1+s = 2-s, s = 1-s and -gamma*s = -gamma*(1-s)
        let d = utility_distribution(&params, 0.5, &pop, 0.5).unwrap();
        assert_eq!(d.support.len(), 6);
        // s = 0: 0, s and -gamma*s coincide; 2s too
        let d = utility_distribution(&params, 0.5, &pop, 0.0).unwrap();
        assert!(d.support.len() < 9);
        let total: f64 = d.probs.iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn trajectory_csv() {
        let d0 = toy([0.5, 0.3, 0.2]);
        let d1 = toy([0.4, 0.3, 0.3]);
        let r = monitor_stream(&[0.5, -1.0], &d0, &d1, 0.05, 0.05).unwrap();
        let mut buf = Vec::new();
        write_trajectory_csv(&mut buf, &r.trajectory).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("stage,utility,log_ratio,S,decision\n1,0.5,0,0,continue\n2,-1,"));
    }
}
