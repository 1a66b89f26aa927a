//! Stage-game payoffs and the expected-utility lines of market maker and bandit.
//!
//! The market maker quotes a bid at `-s` and an ask at `+s` around a value of 0.
//! A trigger event (news or a liquidity trader) is followed within the latency
//! window by at most one further event. Negative payoffs are inflated by the
//! risk-aversion factor `gamma`.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{check_unit, Error, Result};
use crate::params::GameParams;
use crate::race::{self, Population, RaceField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Trigger {
    GoodNews,
    BadNews,
    LiquidityAsk,
    LiquidityBid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Followup {
    GoodNews,
    BadNews,
    LiquidityAsk,
    LiquidityBid,
    Nothing,
}

impl Trigger {
    pub const ALL: [Trigger; 4] = [
        Trigger::GoodNews,
        Trigger::BadNews,
        Trigger::LiquidityAsk,
        Trigger::LiquidityBid,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Trigger::GoodNews => "NG",
            Trigger::BadNews => "NB",
            Trigger::LiquidityAsk => "LA",
            Trigger::LiquidityBid => "LB",
        }
    }

    pub fn is_news(self) -> bool {
        matches!(self, Trigger::GoodNews | Trigger::BadNews)
    }
}

impl Followup {
    pub const ALL: [Followup; 5] = [
        Followup::GoodNews,
        Followup::BadNews,
        Followup::LiquidityAsk,
        Followup::LiquidityBid,
        Followup::Nothing,
    ];

    pub fn code(self) -> &'static str {
        match self {
            Followup::GoodNews => "NG",
            Followup::BadNews => "NB",
            Followup::LiquidityAsk => "LA",
            Followup::LiquidityBid => "LB",
            Followup::Nothing => "no",
        }
    }
}

/// A trigger event followed by what happened during the latency window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct EventCode {
    pub first: Trigger,
    pub second: Followup,
}

impl EventCode {
    pub const fn new(first: Trigger, second: Followup) -> Self {
        EventCode { first, second }
    }

    /// All 20 events in table order.
    pub fn all() -> impl Iterator<Item = EventCode> {
        Trigger::ALL
            .into_iter()
            .flat_map(|f| Followup::ALL.into_iter().map(move |s| EventCode::new(f, s)))
    }

    pub fn index(self) -> usize {
        let f = Trigger::ALL.iter().position(|&t| t == self.first).unwrap();
        let s = Followup::ALL
            .iter()
            .position(|&t| t == self.second)
            .unwrap();
        f * 5 + s
    }

    pub fn is_race(self) -> bool {
        self.first.is_news()
    }
}

impl fmt::Display for EventCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}-{}", self.first.code(), self.second.code())
    }
}

impl FromStr for EventCode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EventCode::all()
            .find(|e| e.to_string() == s)
            .ok_or_else(|| Error::Config(format!("unknown event code `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Role {
    MarketMaker,
    /// The bandit that won the race.
    Sniper,
    /// Any other bandit.
    Bandit,
}

impl Role {
    pub fn code(self) -> &'static str {
        match self {
            Role::MarketMaker => "mm",
            Role::Sniper => "sniper",
            Role::Bandit => "bandit",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RaceOutcome {
    MmWins,
    MmLoses,
    NoRace,
}

/// `one + s·x + gamma·y + gamma·s·z` with small integer coefficients.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Affine {
    pub one: f64,
    pub s: f64,
    pub gamma: f64,
    pub gamma_s: f64,
}

const fn lin(one: f64, s: f64, gamma: f64, gamma_s: f64) -> Affine {
    Affine {
        one,
        s,
        gamma,
        gamma_s,
    }
}

const ZERO: Affine = lin(0.0, 0.0, 0.0, 0.0);

impl Affine {
    pub fn eval(&self, s: f64, gamma: f64) -> f64 {
        self.one + self.s * s + gamma * (self.gamma + self.gamma_s * s)
    }
}

impl fmt::Display for Affine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms = [
            (self.one, ""),
            (self.s, "s"),
            (self.gamma, "gamma"),
            (self.gamma_s, "gamma*s"),
        ];
        let mut wrote = false;
        for (c, name) in terms {
            if c == 0.0 {
                continue;
            }
            let mag = c.abs();
            let sign = if c < 0.0 {
                "-"
            } else if wrote {
                "+"
            } else {
                ""
            };
            f.write_str(sign)?;
            if name.is_empty() {
                write!(f, "{mag}")?;
            } else if mag == 1.0 {
                f.write_str(name)?;
            } else {
                write!(f, "{mag}*{name}")?;
            }
            wrote = true;
        }
        if !wrote {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Utilities of one event. Bandits other than the sniper always get 0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageUtilitySpec {
    pub event: EventCode,
    pub mm_if_loses: Affine,
    pub sniper_if_mm_loses: Affine,
    pub mm_if_wins: Affine,
}

macro_rules! row {
    ($f:ident, $s:ident, $lose:expr, $snipe:expr, $win:expr) => {
        StageUtilitySpec {
            event: EventCode::new(Trigger::$f, Followup::$s),
            mm_if_loses: $lose,
            sniper_if_mm_loses: $snipe,
            mm_if_wins: $win,
        }
    };
}

// -gamma(2-s), -gamma(1-s), -gamma*s
const L2: Affine = lin(0.0, 0.0, -2.0, 1.0);
const L1: Affine = lin(0.0, 0.0, -1.0, 1.0);
const LS: Affine = lin(0.0, 0.0, 0.0, -1.0);
const S: Affine = lin(0.0, 1.0, 0.0, 0.0);
const S2: Affine = lin(0.0, 2.0, 0.0, 0.0);
const ONE_PLUS_S: Affine = lin(1.0, 1.0, 0.0, 0.0);
const ONE_MINUS_S: Affine = lin(1.0, -1.0, 0.0, 0.0);
const TWO_MINUS_S: Affine = lin(2.0, -1.0, 0.0, 0.0);

/// The payoff table in [`EventCode::all`] order.
pub const PAYOFF_TABLE: [StageUtilitySpec; 20] = [
    row!(GoodNews, GoodNews, L2, TWO_MINUS_S, ZERO),
    row!(GoodNews, BadNews, S, LS, ZERO),
    row!(GoodNews, LiquidityAsk, L1, ZERO, L1),
    row!(GoodNews, LiquidityBid, S2, ONE_MINUS_S, ONE_PLUS_S),
    row!(GoodNews, Nothing, L1, ONE_MINUS_S, ZERO),
    row!(BadNews, GoodNews, S, LS, ZERO),
    row!(BadNews, BadNews, L2, TWO_MINUS_S, ZERO),
    row!(BadNews, LiquidityAsk, S2, ONE_MINUS_S, ONE_PLUS_S),
    row!(BadNews, LiquidityBid, L1, ZERO, L1),
    row!(BadNews, Nothing, L1, ONE_MINUS_S, ZERO),
    row!(LiquidityAsk, GoodNews, L1, ZERO, L1),
    row!(LiquidityAsk, BadNews, ONE_PLUS_S, ZERO, ONE_PLUS_S),
    row!(LiquidityAsk, LiquidityAsk, S, ZERO, S),
    row!(LiquidityAsk, LiquidityBid, S2, ZERO, S2),
    row!(LiquidityAsk, Nothing, S, ZERO, S),
    row!(LiquidityBid, GoodNews, ONE_PLUS_S, ZERO, ONE_PLUS_S),
    row!(LiquidityBid, BadNews, L1, ZERO, L1),
    row!(LiquidityBid, LiquidityAsk, S2, ZERO, S2),
    row!(LiquidityBid, LiquidityBid, S, ZERO, S),
    row!(LiquidityBid, Nothing, S, ZERO, S),
];

pub fn payoff_spec(event: EventCode) -> &'static StageUtilitySpec {
    &PAYOFF_TABLE[event.index()]
}

fn inconsistent(event: EventCode, detail: impl Into<String>) -> Error {
    Error::InconsistentOutcome {
        event: event.to_string(),
        detail: detail.into(),
    }
}

/// Utility of an agent in the given role after `event`, with spread `s`.
pub fn event_utility(
    event: EventCode,
    role: Role,
    outcome: RaceOutcome,
    s: f64,
    params: &GameParams,
) -> Result<f64> {
    check_unit("s", s)?;
    match (event.is_race(), outcome) {
        (true, RaceOutcome::NoRace) => return Err(inconsistent(event, "outcome no_race")),
        (false, RaceOutcome::MmWins | RaceOutcome::MmLoses) => {
            return Err(inconsistent(event, "a race outcome"))
        }
        _ => {}
    }
    let spec = payoff_spec(event);
    let gamma = params.gamma();
    match (role, outcome) {
        (Role::MarketMaker, RaceOutcome::MmWins) => Ok(spec.mm_if_wins.eval(s, gamma)),
        (Role::MarketMaker, _) => Ok(spec.mm_if_loses.eval(s, gamma)),
        (Role::Sniper, RaceOutcome::MmLoses) => Ok(spec.sniper_if_mm_loses.eval(s, gamma)),
        (Role::Sniper, _) => Err(inconsistent(event, "a sniper without a lost race")),
        (Role::Bandit, _) => Ok(0.0),
    }
}

pub fn trigger_probability(t: Trigger, params: &GameParams) -> f64 {
    let beta = params.derived().beta;
    if t.is_news() {
        beta / 2.0
    } else {
        (1.0 - beta) / 2.0
    }
}

pub fn followup_probability(f: Followup, params: &GameParams) -> f64 {
    let d = params.derived();
    match f {
        Followup::GoodNews | Followup::BadNews => d.alpha_bar,
        Followup::LiquidityAsk | Followup::LiquidityBid => d.mu_bar,
        Followup::Nothing => 1.0 - 2.0 * (d.alpha_bar + d.mu_bar),
    }
}

pub fn event_probability(event: EventCode, params: &GameParams) -> f64 {
    trigger_probability(event.first, params) * followup_probability(event.second, params)
}

/// Values of the two expected-utility lines at `s = 0` and `s = 1`.
/// Bandit line: `a (1-s) + b s`; market-maker line: `c (1-s) + d s`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEndpoints {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

/// Endpoints for a focal agent that races with probability `own_entry` when a
/// bandit, facing the rivals in `field` who race with probability `p`.
pub fn agent_endpoints(
    params: &GameParams,
    own_entry: f64,
    field: &RaceField,
    p: f64,
) -> Result<UtilityEndpoints> {
    check_unit("own_entry", own_entry)?;
    let win = own_entry * field.wins_given_entry(p)?;
    let lose = field.mm_loses(p)?;
    Ok(endpoints_from(params, win, lose))
}

/// Endpoints given the focal agent's unconditional win probability as a
/// bandit and its loss probability as market maker.
fn endpoints_from(params: &GameParams, bandit_wins: f64, mm_loses: f64) -> UtilityEndpoints {
    let dp = params.derived();
    let (m, beta, q, ab, mb) = (dp.m, dp.beta, dp.q, dp.alpha_bar, dp.mu_bar);
    let gamma = params.gamma();
    UtilityEndpoints {
        a: m * beta * bandit_wins,
        b: -ab * q * beta * bandit_wins,
        c: -(q * dp.theta_bar + beta * (m * gamma - mb * q) * mm_loses),
        d: (1.0 + mb) - beta * (m + ab * q * mm_loses),
    }
}

fn check_population(pop: &Population, params: &GameParams) -> Result<()> {
    if pop.total() != params.h() {
        return Err(Error::InvalidPopulation(format!(
            "H_t + H_d = {} but H = {}",
            pop.total(),
            params.h()
        )));
    }
    Ok(())
}

/// Endpoints for a trustworthy agent when trustworthy agents race with
/// probability `p`.
pub fn endpoints(p: f64, pop: &Population, params: &GameParams) -> Result<UtilityEndpoints> {
    check_population(pop, params)?;
    if pop.deceptive() == 0 {
        let n = params.h();
        let bandit_wins = p * race::g(p, n)?;
        Ok(endpoints_from(params, bandit_wins, race::h(p, n)?))
    } else {
        agent_endpoints(params, p, &pop.trustworthy_field(), p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bandit,
    MarketMaker,
}

pub fn utility_line(e: &UtilityEndpoints, who: Side, s: f64) -> f64 {
    match who {
        Side::Bandit => e.a * (1.0 - s) + e.b * s,
        Side::MarketMaker => e.c * (1.0 - s) + e.d * s,
    }
}

/// Intersection of the bandit and market-maker lines.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IndifferencePoint {
    pub s_star: f64,
    pub u_star: f64,
    pub playable: bool,
}

pub const PARALLEL_TOL: f64 = 1e-12;

pub fn indifference(e: &UtilityEndpoints) -> Result<IndifferencePoint> {
    let q = (e.a - e.c) + (e.d - e.b);
    if q.abs() < PARALLEL_TOL {
        return Err(Error::ParallelLines(q.abs()));
    }
    let u_star = (e.a * e.d - e.b * e.c) / q;
    Ok(IndifferencePoint {
        s_star: (e.a - e.c) / q,
        u_star,
        playable: u_star > 0.0,
    })
}

/// Spread at which the bandit line crosses zero, `m / (m + alpha_bar q)`.
/// Independent of the sniping probability.
pub fn bandit_zero_crossing(params: &GameParams) -> f64 {
    let d = params.derived();
    d.m / (d.m + d.alpha_bar * d.q)
}

/// Writes the payoff table as CSV. Without `numeric` the cells are symbolic
/// expressions; with `(params, s)` they are evaluated.
pub fn write_payoff_table<W: Write>(w: W, numeric: Option<(&GameParams, f64)>) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record([
        "event",
        "prob_first",
        "prob_second",
        "u_mm_loses",
        "u_sniper",
        "u_mm_wins",
    ])?;
    for spec in PAYOFF_TABLE.iter() {
        let ev = spec.event;
        let row: [String; 6] = match numeric {
            None => {
                let first = if ev.first.is_news() {
                    "beta/2"
                } else {
                    "(1-beta)/2"
                };
                let second = match ev.second {
                    Followup::GoodNews | Followup::BadNews => "alpha_bar",
                    Followup::LiquidityAsk | Followup::LiquidityBid => "mu_bar",
                    Followup::Nothing => "1-2*(alpha_bar+mu_bar)",
                };
                [
                    ev.to_string(),
                    first.into(),
                    second.into(),
                    spec.mm_if_loses.to_string(),
                    spec.sniper_if_mm_loses.to_string(),
                    spec.mm_if_wins.to_string(),
                ]
            }
            Some((params, s)) => {
                check_unit("s", s)?;
                let g = params.gamma();
                [
                    ev.to_string(),
                    trigger_probability(ev.first, params).to_string(),
                    followup_probability(ev.second, params).to_string(),
                    spec.mm_if_loses.eval(s, g).to_string(),
                    spec.sniper_if_mm_loses.eval(s, g).to_string(),
                    spec.mm_if_wins.eval(s, g).to_string(),
                ]
            }
        };
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}
