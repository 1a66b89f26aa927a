//! Reference implementations used only by tests. Everything here is computed
//! from first principles (explicit enumeration, quote mechanics) and shares no
//! code with the library's formulas.
#![allow(dead_code)]

use mz_core::utility::{EventCode, Followup, Trigger};

/// Probability of the subset encoded by `mask` when member `i` joins with
/// probability `probs[i]`.
fn subset_prob(mask: u32, probs: &[f64]) -> f64 {
    probs
        .iter()
        .enumerate()
        .map(|(i, &p)| if mask >> i & 1 == 1 { p } else { 1.0 - p })
        .product()
}

/// Market maker loses: enumerate which of the `n - 1` bandits race.
pub fn enum_h(p: f64, n: u32) -> f64 {
    let probs = vec![p; (n - 1) as usize];
    (0..1u32 << (n - 1))
        .map(|mask| {
            let k = mask.count_ones() as f64;
            subset_prob(mask, &probs) * k / (k + 1.0)
        })
        .sum()
}

/// A bandit that raced wins: enumerate which of the other `n - 2` bandits race.
pub fn enum_g(p: f64, n: u32) -> f64 {
    let probs = vec![p; (n - 2) as usize];
    (0..1u32 << (n - 2))
        .map(|mask| {
            let k = mask.count_ones() as f64;
            subset_prob(mask, &probs) / (k + 2.0)
        })
        .sum()
}

/// Entry probability of every agent: trustworthy first, deceptive last.
pub fn strategies(ht: u32, hd: u32, p: f64) -> Vec<f64> {
    (0..ht + hd).map(|i| if i < ht { p } else { 1.0 }).collect()
}

/// Agent 0 is market maker and loses the race.
pub fn enum_mm_loses(strat: &[f64]) -> f64 {
    let others = &strat[1..];
    (0..1u32 << others.len())
        .map(|mask| {
            let k = mask.count_ones() as f64;
            subset_prob(mask, others) * k / (k + 1.0)
        })
        .sum()
}

/// Agent 0, a bandit that raced, wins; the market maker is uniform among the others.
pub fn enum_bandit_wins(strat: &[f64]) -> f64 {
    let n = strat.len();
    let mut total = 0.0;
    for mm in 1..n {
        let rest: Vec<f64> = (1..n).filter(|&i| i != mm).map(|i| strat[i]).collect();
        for mask in 0..1u32 << rest.len() {
            let k = mask.count_ones() as f64;
            total += subset_prob(mask, &rest) / (k + 2.0) / (n - 1) as f64;
        }
    }
    total
}

/// Payoffs `(market maker, sniper)` after `event`, computed from the order book.
///
/// The market maker quotes bid `-s` and ask `+s` for one unit each around a value
/// of 0. News moves the value by one jump. A liquidity trader arriving during the
/// latency window reaches the book before the racers. A market maker that wins
/// the race cancels what is left of its quotes; a sniper that wins hits the
/// stale side if it is still there. Negative payoffs are multiplied by `gamma`.
pub fn book_payoffs(event: EventCode, mm_wins: bool, s: f64, gamma: f64) -> (f64, f64) {
    struct Book {
        value: f64,
        ask: bool,
        bid: bool,
        mm: (f64, f64),
        sniper: (f64, f64),
    }
    impl Book {
        fn lt_buys(&mut self, s: f64) {
            if self.ask {
                self.ask = false;
                self.mm.0 -= 1.0;
                self.mm.1 += s;
            }
        }
        fn lt_sells(&mut self, s: f64) {
            if self.bid {
                self.bid = false;
                self.mm.0 += 1.0;
                self.mm.1 += s;
            }
        }
    }
    let mut b = Book {
        value: 0.0,
        ask: true,
        bid: true,
        mm: (0.0, 0.0),
        sniper: (0.0, 0.0),
    };
    match event.first {
        Trigger::GoodNews => b.value += 1.0,
        Trigger::BadNews => b.value -= 1.0,
        Trigger::LiquidityAsk => b.lt_buys(s),
        Trigger::LiquidityBid => b.lt_sells(s),
    }
    match event.second {
        Followup::GoodNews => b.value += 1.0,
        Followup::BadNews => b.value -= 1.0,
        Followup::LiquidityAsk => b.lt_buys(s),
        Followup::LiquidityBid => b.lt_sells(s),
        Followup::Nothing => {}
    }
    if event.first.is_news() && !mm_wins {
        if event.first == Trigger::GoodNews && b.ask {
            b.ask = false;
            b.mm.0 -= 1.0;
            b.mm.1 += s;
            b.sniper.0 += 1.0;
            b.sniper.1 -= s;
        }
        if event.first == Trigger::BadNews && b.bid {
            b.bid = false;
            b.mm.0 += 1.0;
            b.mm.1 += s;
            b.sniper.0 -= 1.0;
            b.sniper.1 -= s;
        }
    }
    let utility = |(pos, cash): (f64, f64), value: f64| {
        let pay = pos * value + cash;
        if pay < 0.0 {
            gamma * pay
        } else {
            pay
        }
    };
    (utility(b.mm, b.value), utility(b.sniper, b.value))
}

pub fn trigger_prob(t: Trigger, beta: f64) -> f64 {
    if t.is_news() {
        beta / 2.0
    } else {
        (1.0 - beta) / 2.0
    }
}

pub fn followup_prob(f: Followup, ab: f64, mb: f64) -> f64 {
    match f {
        Followup::GoodNews | Followup::BadNews => ab,
        Followup::LiquidityAsk | Followup::LiquidityBid => mb,
        Followup::Nothing => 1.0 - 2.0 * (ab + mb),
    }
}

/// Adds `prob` to the support point at `value`, merging within 1e-9.
fn add_mass(dist: &mut Vec<(f64, f64)>, value: f64, prob: f64) {
    match dist.iter_mut().find(|(v, _)| (v - value).abs() <= 1e-9) {
        Some(slot) => slot.1 += prob,
        None => dist.push((value, prob)),
    }
}

/// Per-stage utility distribution of agent 0 by brute force over the market
/// maker's identity, the event, every entry subset of the non-market-makers and
/// the winner among entrants.
pub fn enum_focal_distribution(
    strat: &[f64],
    beta: f64,
    ab: f64,
    mb: f64,
    s: f64,
    gamma: f64,
) -> Vec<(f64, f64)> {
    let n = strat.len();
    let mut dist = Vec::new();
    for mm in 0..n {
        let p_mm = 1.0 / n as f64;
        let bandits: Vec<usize> = (0..n).filter(|&i| i != mm).collect();
        let bandit_probs: Vec<f64> = bandits.iter().map(|&i| strat[i]).collect();
        for event in EventCode::all() {
            let p_ev = trigger_prob(event.first, beta) * followup_prob(event.second, ab, mb);
            if !event.is_race() {
                let (u_mm, _) = book_payoffs(event, true, s, gamma);
                let u = if mm == 0 { u_mm } else { 0.0 };
                add_mass(&mut dist, u, p_mm * p_ev);
                continue;
            }
            for mask in 0..1u32 << bandits.len() {
                let p_sub = subset_prob(mask, &bandit_probs);
                let mut entrants = vec![mm];
                entrants.extend(
                    bandits
                        .iter()
                        .enumerate()
                        .filter(|(j, _)| mask >> j & 1 == 1)
                        .map(|(_, &i)| i),
                );
                let p_win = 1.0 / entrants.len() as f64;
                for &w in &entrants {
                    let (u_mm, u_sn) = book_payoffs(event, w == mm, s, gamma);
                    let u = if mm == 0 {
                        u_mm
                    } else if w == 0 {
                        u_sn
                    } else {
                        0.0
                    };
                    add_mass(&mut dist, u, p_mm * p_ev * p_sub * p_win);
                }
            }
        }
    }
    dist
}

/// Largest probability difference between two merged distributions, matching
/// support points within 1e-9; a point missing from one side counts in full.
pub fn max_dist_gap(a: &[(f64, f64)], b: &[(f64, f64)]) -> f64 {
    let lookup = |d: &[(f64, f64)], v: f64| {
        d.iter()
            .find(|(x, _)| (x - v).abs() <= 1e-9)
            .map(|(_, p)| *p)
            .unwrap_or(0.0)
    };
    a.iter()
        .map(|&(v, p)| (p - lookup(b, v)).abs())
        .chain(b.iter().map(|&(v, p)| (p - lookup(a, v)).abs()))
        .fold(0.0, f64::max)
}

/// Central finite difference with step `h`.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}
