//! Monte Carlo engine for the stage game and its repetition.
//!
//! Random numbers are consumed in a fixed order per stage, one `f64` or one
//! bounded integer each:
//! 1. market-maker selection among the minimal-spread posters (integer),
//! 2. trigger event (`f64`),
//! 3. second event (`f64`),
//! 4. on a news trigger, one entry draw (`f64`) per non-market-maker agent in id order,
//! 5. on a news trigger, the winner among entrants (integer).
//!
//! The generator is ChaCha8 seeded with `seed_from_u64(seed)`.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_unit, Error, Result};
use crate::params::GameParams;
use crate::race::Population;
use crate::utility::{
    agent_endpoints, endpoints, event_utility, EventCode, Followup, RaceOutcome, Role, Trigger,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AgentConfig {
    pub id: usize,
    /// Probability of joining a race as a bandit.
    pub strategy: f64,
    /// Posted spread.
    pub spread: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AgentClass {
    Trustworthy,
    Deceptive,
}

impl AgentClass {
    pub fn code(self) -> &'static str {
        match self {
            AgentClass::Trustworthy => "trustworthy",
            AgentClass::Deceptive => "deceptive",
        }
    }
}

/// Agents `0..H_t` are trustworthy and snipe with probability `p`; the
/// remaining `H_d` always snipe. Everyone posts spread `s`.
pub fn compliance_agents(pop: &Population, p: f64, s: f64) -> Vec<AgentConfig> {
    let ht = pop.trustworthy() as usize;
    (0..pop.total() as usize)
        .map(|id| AgentConfig {
            id,
            strategy: if id < ht { p } else { 1.0 },
            spread: s,
        })
        .collect()
}

pub fn class_of(pop: &Population, id: usize) -> AgentClass {
    if id < pop.trustworthy() as usize {
        AgentClass::Trustworthy
    } else {
        AgentClass::Deceptive
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageOutcome {
    pub event: EventCode,
    pub mm_id: usize,
    /// Ids of the agents that raced, in id order; empty without a race.
    pub race_entrants: Vec<usize>,
    pub winner: Option<usize>,
    pub utilities: Vec<f64>,
}

impl StageOutcome {
    pub fn race_outcome(&self) -> RaceOutcome {
        match self.winner {
            None => RaceOutcome::NoRace,
            Some(w) if w == self.mm_id => RaceOutcome::MmWins,
            Some(_) => RaceOutcome::MmLoses,
        }
    }

    pub fn role_of(&self, id: usize) -> Role {
        if id == self.mm_id {
            Role::MarketMaker
        } else if self.winner == Some(id) {
            Role::Sniper
        } else {
            Role::Bandit
        }
    }
}

fn validate_agents(agents: &[AgentConfig], params: &GameParams) -> Result<()> {
    if agents.len() != params.h() as usize {
        return Err(Error::InvalidPopulation(format!(
            "{} agents configured but H = {}",
            agents.len(),
            params.h()
        )));
    }
    for (i, a) in agents.iter().enumerate() {
        if a.id != i {
            return Err(Error::InvalidPopulation(format!(
                "agent at position {i} has id {}",
                a.id
            )));
        }
        check_unit("strategy", a.strategy)?;
        check_unit("spread", a.spread)?;
    }
    Ok(())
}

fn draw_trigger<R: Rng + ?Sized>(rng: &mut R, beta: f64) -> Trigger {
    let u: f64 = rng.random();
    if u < beta / 2.0 {
        Trigger::GoodNews
    } else if u < beta {
        Trigger::BadNews
    } else if u < beta + (1.0 - beta) / 2.0 {
        Trigger::LiquidityAsk
    } else {
        Trigger::LiquidityBid
    }
}

fn draw_followup<R: Rng + ?Sized>(rng: &mut R, alpha_bar: f64, mu_bar: f64) -> Followup {
    let u: f64 = rng.random();
    if u < alpha_bar {
        Followup::GoodNews
    } else if u < 2.0 * alpha_bar {
        Followup::BadNews
    } else if u < 2.0 * alpha_bar + mu_bar {
        Followup::LiquidityAsk
    } else if u < 2.0 * (alpha_bar + mu_bar) {
        Followup::LiquidityBid
    } else {
        Followup::Nothing
    }
}

/// Plays one stage. `agents` must be valid (see [`run_repeated`]); ids are
/// positions in the slice.
pub fn play_stage<R: Rng + ?Sized>(
    agents: &[AgentConfig],
    params: &GameParams,
    rng: &mut R,
) -> StageOutcome {
    let min_spread = agents
        .iter()
        .map(|a| a.spread)
        .fold(f64::INFINITY, f64::min);
    let posters: Vec<usize> = agents
        .iter()
        .filter(|a| a.spread == min_spread)
        .map(|a| a.id)
        .collect();
    let mm_id = posters[rng.random_range(0..posters.len())];
    let s = agents[mm_id].spread;

    let d = params.derived();
    let first = draw_trigger(rng, d.beta);
    let second = draw_followup(rng, d.alpha_bar, d.mu_bar);
    let event = EventCode::new(first, second);

    let mut race_entrants = Vec::new();
    let mut winner = None;
    if event.is_race() {
        for a in agents {
            if a.id == mm_id {
                race_entrants.push(a.id);
                continue;
            }
            let u: f64 = rng.random();
            if u < a.strategy {
                race_entrants.push(a.id);
            }
        }
        winner = Some(race_entrants[rng.random_range(0..race_entrants.len())]);
    }

    let mut outcome = StageOutcome {
        event,
        mm_id,
        race_entrants,
        winner,
        utilities: vec![0.0; agents.len()],
    };
    let result = outcome.race_outcome();
    outcome.utilities[mm_id] =
        event_utility(event, Role::MarketMaker, result, s, params).expect("consistent stage");
    if let (RaceOutcome::MmLoses, Some(w)) = (result, winner) {
        outcome.utilities[w] =
            event_utility(event, Role::Sniper, result, s, params).expect("consistent stage");
    }
    outcome
}

/// Per-agent aggregates of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunStats {
    pub cumulative: Vec<f64>,
    pub sum_sq: Vec<f64>,
    pub race_wins: Vec<u64>,
    pub mm_count: Vec<u64>,
    pub stages: u64,
    pub seed: u64,
}

impl RunStats {
    pub fn new(n_agents: usize, seed: u64) -> Self {
        RunStats {
            cumulative: vec![0.0; n_agents],
            sum_sq: vec![0.0; n_agents],
            race_wins: vec![0; n_agents],
            mm_count: vec![0; n_agents],
            stages: 0,
            seed,
        }
    }

    pub fn record(&mut self, o: &StageOutcome) {
        for (i, &u) in o.utilities.iter().enumerate() {
            self.cumulative[i] += u;
            self.sum_sq[i] += u * u;
        }
        if let Some(w) = o.winner {
            self.race_wins[w] += 1;
        }
        self.mm_count[o.mm_id] += 1;
        self.stages += 1;
    }

    pub fn mean(&self, id: usize) -> f64 {
        self.cumulative[id] / self.stages as f64
    }

    /// Standard error of the per-stage mean.
    pub fn std_err(&self, id: usize) -> f64 {
        let n = self.stages as f64;
        if self.stages < 2 {
            return f64::NAN;
        }
        let mean = self.mean(id);
        let var = (self.sum_sq[id] - n * mean * mean) / (n - 1.0);
        (var.max(0.0) / n).sqrt()
    }
}

/// Endless sequence of stages for one seed.
pub struct Stages<'a> {
    agents: &'a [AgentConfig],
    params: &'a GameParams,
    rng: ChaCha8Rng,
}

impl<'a> Stages<'a> {
    pub fn new(agents: &'a [AgentConfig], params: &'a GameParams, seed: u64) -> Result<Self> {
        validate_agents(agents, params)?;
        Ok(Stages {
            agents,
            params,
            rng: ChaCha8Rng::seed_from_u64(seed),
        })
    }
}

impl Iterator for Stages<'_> {
    type Item = StageOutcome;

    fn next(&mut self) -> Option<StageOutcome> {
        Some(play_stage(self.agents, self.params, &mut self.rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    pub stats: RunStats,
    pub stream: Vec<StageOutcome>,
}

pub fn run_repeated(
    agents: &[AgentConfig],
    params: &GameParams,
    n_stages: u64,
    seed: u64,
) -> Result<Run> {
    if n_stages == 0 {
        return Err(Error::NoStages);
    }
    let mut stats = RunStats::new(agents.len(), seed);
    let stream: Vec<StageOutcome> = Stages::new(agents, params, seed)?
        .take(n_stages as usize)
        .inspect(|o| stats.record(o))
        .collect();
    Ok(Run { stats, stream })
}

/// Aggregates only, without keeping the stream.
pub fn run_stats(
    agents: &[AgentConfig],
    params: &GameParams,
    n_stages: u64,
    seed: u64,
) -> Result<RunStats> {
    if n_stages == 0 {
        return Err(Error::NoStages);
    }
    let mut stats = RunStats::new(agents.len(), seed);
    for o in Stages::new(agents, params, seed)?.take(n_stages as usize) {
        stats.record(&o);
    }
    Ok(stats)
}

/// Expected per-stage utility of an agent of `class` when trustworthy agents
/// snipe with probability `p`, deceptive agents always snipe, and everyone
/// posts spread `s`. Each agent is market maker with probability `1/H`.
pub fn analytic_mean_utility(
    class: AgentClass,
    p: f64,
    s: f64,
    pop: &Population,
    params: &GameParams,
) -> Result<f64> {
    check_unit("s", s)?;
    let e = match class {
        AgentClass::Trustworthy => endpoints(p, pop, params)?,
        AgentClass::Deceptive => {
            let field = pop.deceptive_field().ok_or_else(|| {
                Error::InvalidPopulation("population has no deceptive agent".into())
            })?;
            if pop.total() != params.h() {
                return Err(Error::InvalidPopulation(format!(
                    "H_t + H_d = {} but H = {}",
                    pop.total(),
                    params.h()
                )));
            }
            agent_endpoints(params, 1.0, &field, p)?
        }
    };
    let hf = params.h() as f64;
    let mm = e.c * (1.0 - s) + e.d * s;
    let bandit = e.a * (1.0 - s) + e.b * s;
    Ok(mm / hf + (hf - 1.0) / hf * bandit)
}

/// Writes `stage,agent,role,event,utility` rows, one per agent per stage.
pub fn write_stream_csv<W: Write>(w: W, stream: &[StageOutcome]) -> Result<()> {
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    out.write_record(["stage", "agent", "role", "event", "utility"])?;
    for (t, o) in stream.iter().enumerate() {
        let event = o.event.to_string();
        for (id, u) in o.utilities.iter().enumerate() {
            out.write_record([
                t.to_string(),
                id.to_string(),
                o.role_of(id).code().to_string(),
                event.clone(),
                u.to_string(),
            ])?;
        }
    }
    out.flush()?;
    Ok(())
}
