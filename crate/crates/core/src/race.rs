//! Race-outcome probabilities.
//!
//! After a news trigger the market maker always races to cancel its stale quote
//! and every bandit joins with its sniping probability; the winner is uniform
//! among entrants. `h` is the probability that the market maker loses, `g` the
//! probability that a bandit who entered wins.
//!
//! The homogeneous functions use finite polynomials in `1 - p`, which are exact
//! at both ends of `[0, 1]` and free of the `0/0` in the textbook closed form.

use crate::error::{check_unit, Error, Result};

fn check_agents(h: u32) -> Result<()> {
    if h >= 2 {
        Ok(())
    } else {
        Err(Error::InvalidPopulation(format!(
            "race needs at least 2 agents, got {h}"
        )))
    }
}

/// Horner evaluation of `sum_j coef(j) x^j` for `j = 0..n`.
fn horner(n: u32, x: f64, coef: impl Fn(u32) -> f64) -> f64 {
    (0..n).rev().fold(0.0, |acc, j| acc * x + coef(j))
}

/// Probability that the market maker loses when each of the `H - 1` bandits races
/// with probability `p`: `((1-p)^H - (1 - Hp)) / (Hp)`, and 0 at `p = 0`.
pub fn h(p: f64, n_agents: u32) -> Result<f64> {
    check_unit("p", p)?;
    check_agents(n_agents)?;
    let hf = n_agents as f64;
    let w = horner(n_agents - 1, 1.0 - p, |j| (n_agents - 1 - j) as f64);
    Ok(p * w / hf)
}

pub fn h_prime(p: f64, n_agents: u32) -> Result<f64> {
    check_unit("p", p)?;
    check_agents(n_agents)?;
    let hf = n_agents as f64;
    let w = horner(n_agents - 1, 1.0 - p, |j| (j + 1) as f64);
    Ok(w / hf)
}

/// Probability that a bandit who entered the race wins it: `h(p) / ((H-1) p)`,
/// and 1/2 at `p = 0`.
pub fn g(p: f64, n_agents: u32) -> Result<f64> {
    check_unit("p", p)?;
    check_agents(n_agents)?;
    let hf = n_agents as f64;
    let w = horner(n_agents - 1, 1.0 - p, |j| (n_agents - 1 - j) as f64);
    Ok(w / (hf * (hf - 1.0)))
}

pub fn g_prime(p: f64, n_agents: u32) -> Result<f64> {
    check_unit("p", p)?;
    check_agents(n_agents)?;
    let hf = n_agents as f64;
    if n_agents < 3 {
        return Ok(0.0);
    }
    // sum_{j=1}^{H-2} j (H-1-j) (1-p)^{j-1}
    let w = horner(n_agents - 2, 1.0 - p, |i| {
        ((i + 1) * (n_agents - 2 - i)) as f64
    });
    Ok(-w / (hf * (hf - 1.0)))
}

/// Probability mass function of Bin(n, p).
pub fn binomial_pmf(n: u32, p: f64) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(n as usize + 1);
    let mut coef = 1.0;
    for k in 0..=n {
        pmf.push(coef * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32));
        coef = coef * (n - k) as f64 / (k + 1) as f64;
    }
    pmf
}

fn binomial_expectation(n: u32, p: f64, f: impl Fn(f64) -> f64) -> f64 {
    binomial_pmf(n, p)
        .iter()
        .enumerate()
        .map(|(k, w)| w * f(k as f64))
        .sum()
}

/// Split of the `H` agents into trustworthy agents (sniping with the agreed
/// probability) and deceptive agents (always sniping).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Population {
    trustworthy: u32,
    deceptive: u32,
}

impl Population {
    pub fn new(trustworthy: u32, deceptive: u32) -> Result<Self> {
        if trustworthy < 1 {
            return Err(Error::InvalidPopulation(
                "at least one trustworthy agent is required".into(),
            ));
        }
        let total = trustworthy + deceptive;
        if total < crate::params::MIN_AGENTS {
            return Err(Error::InvalidPopulation(format!(
                "H_t + H_d = {total} must be at least {}",
                crate::params::MIN_AGENTS
            )));
        }
        Ok(Population {
            trustworthy,
            deceptive,
        })
    }

    pub fn homogeneous(n_agents: u32) -> Result<Self> {
        Self::new(n_agents, 0)
    }

    pub fn trustworthy(&self) -> u32 {
        self.trustworthy
    }
    pub fn deceptive(&self) -> u32 {
        self.deceptive
    }
    pub fn total(&self) -> u32 {
        self.trustworthy + self.deceptive
    }

    /// Rivals seen by a trustworthy agent.
    pub fn trustworthy_field(&self) -> RaceField {
        RaceField {
            sure: self.deceptive,
            random: self.trustworthy - 1,
        }
    }

    /// Rivals seen by a deceptive agent, if there is one.
    pub fn deceptive_field(&self) -> Option<RaceField> {
        (self.deceptive > 0).then(|| RaceField {
            sure: self.deceptive - 1,
            random: self.trustworthy,
        })
    }
}

/// The other `sure + random` agents as seen by one focal agent: `sure` of them
/// always race, `random` race independently with probability `p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RaceField {
    pub sure: u32,
    pub random: u32,
}

impl RaceField {
    fn others(&self) -> f64 {
        (self.sure + self.random) as f64
    }

    /// Probability that the focal agent, as market maker, loses the race.
    pub fn mm_loses(&self, p: f64) -> Result<f64> {
        check_unit("p", p)?;
        let sure = self.sure as f64;
        Ok(binomial_expectation(self.random, p, |n| {
            (sure + n) / (1.0 + sure + n)
        }))
    }

    /// Probability that the focal agent, as a bandit that entered, wins.
    ///
    /// Conditions on the number `N` of random rivals that race; the market maker
    /// is uniform among the others and either is one of the `N`, one of the
    /// non-entering random rivals (who then still races), or a sure rival.
    pub fn wins_given_entry(&self, p: f64) -> Result<f64> {
        check_unit("p", p)?;
        if self.sure + self.random == 0 {
            return Err(Error::InvalidPopulation(
                "no rival to act as market maker".into(),
            ));
        }
        let sure = self.sure as f64;
        let random = self.random as f64;
        let e = binomial_expectation(self.random, p, |n| {
            n / (1.0 + n + sure) + (random - n) / (2.0 + n + sure) + sure / (1.0 + n + sure)
        });
        Ok(e / self.others())
    }

    /// Same quantity as [`RaceField::wins_given_entry`], conditioning first on the
    /// class of the market maker. Needs at least one random rival.
    pub fn wins_given_entry_split(&self, p: f64) -> Result<f64> {
        check_unit("p", p)?;
        if self.random == 0 {
            return Err(Error::InvalidPopulation(
                "split form needs at least one randomly racing rival".into(),
            ));
        }
        let sure = self.sure as f64;
        let others = self.others();
        let mm_random = binomial_expectation(self.random - 1, p, |n| 1.0 / (2.0 + sure + n));
        let mm_sure = binomial_expectation(self.random, p, |n| 1.0 / (1.0 + sure + n));
        Ok(self.random as f64 / others * mm_random + sure / others * mm_sure)
    }
}

/// Probability that a trustworthy market maker loses the race.
pub fn h_tm(p: f64, pop: &Population) -> Result<f64> {
    pop.trustworthy_field().mm_loses(p)
}

/// Probability that a trustworthy bandit who entered wins the race.
pub fn g_tb(p: f64, pop: &Population) -> Result<f64> {
    pop.trustworthy_field().wins_given_entry(p)
}

/// Cross-check form of [`g_tb`]; needs `H_t >= 2`.
pub fn g_tb_split(p: f64, pop: &Population) -> Result<f64> {
    pop.trustworthy_field().wins_given_entry_split(p)
}
