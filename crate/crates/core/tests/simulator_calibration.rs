mod common;

use common::{followup_prob, trigger_prob};
use mz_core::race::{h_tm, Population};
use mz_core::simulator::{
    analytic_mean_utility, class_of, compliance_agents, run_repeated, run_stats, AgentClass, Stages,
};
use mz_core::utility::EventCode;
use mz_core::GameParams;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn fig7(gamma: f64) -> GameParams {
    GameParams::new(5, 0.45, 0.5, 0.5, gamma).unwrap()
}

#[test]
fn event_frequencies_pass_chi_square() {
    let params = fig7(3.5);
    let pop = Population::homogeneous(5).unwrap();
    let agents = compliance_agents(&pop, 0.3, 0.2);
    let n = 1_000_000usize;
    let mut counts = [0u64; 20];
    for o in Stages::new(&agents, &params, 11).unwrap().take(n) {
        counts[o.event.index()] += 1;
    }
    let d = params.derived();
    let mut chi2 = 0.0;
    let mut cells = 0;
    for e in EventCode::all() {
        let pr = trigger_prob(e.first, d.beta) * followup_prob(e.second, d.alpha_bar, d.mu_bar);
        let expected = pr * n as f64;
        let obs = counts[e.index()] as f64;
        let se = (n as f64 * pr * (1.0 - pr)).sqrt();
        assert!(
            (obs - expected).abs() < 4.0 * se,
            "{e}: {obs} vs {expected}"
        );
        if pr > 0.0 {
            chi2 += (obs - expected).powi(2) / expected;
            cells += 1;
        }
    }
    let critical = ChiSquared::new((cells - 1) as f64)
        .unwrap()
        .inverse_cdf(0.999);
    assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
}

#[test]
fn entry_and_race_loss_frequencies() {
    let params = GameParams::new(6, 0.45, 0.3, 0.5, 3.0).unwrap();
    let pop = Population::new(4, 2).unwrap();
    let p = 0.35;
    let agents = compliance_agents(&pop, p, 0.3);
    let mut offered = [0u64; 6];
    let mut entered = [0u64; 6];
    let (mut races, mut lost) = (0u64, 0u64);
    for o in Stages::new(&agents, &params, 5).unwrap().take(400_000) {
        if !o.event.is_race() {
            assert!(o.race_entrants.is_empty() && o.winner.is_none());
            continue;
        }
        races += 1;
        if o.winner != Some(o.mm_id) {
            lost += 1;
        }
        for i in 0..6 {
            if i != o.mm_id {
                offered[i] += 1;
                if o.race_entrants.contains(&i) {
                    entered[i] += 1;
                }
            }
        }
    }
    for i in 0..6 {
        let freq = entered[i] as f64 / offered[i] as f64;
        match class_of(&pop, i) {
            AgentClass::Trustworthy => {
                let se = (p * (1.0 - p) / offered[i] as f64).sqrt();
                assert!((freq - p).abs() < 4.0 * se, "agent {i}: {freq}");
            }
            AgentClass::Deceptive => assert_eq!(freq, 1.0),
        }
    }
    // The market maker is uniform over all six agents, so average the loss
    // probability over a trustworthy and a deceptive market maker.
    let strat = common::strategies(4, 2, p);
    let exact = (0..6)
        .map(|mm| {
            let mut rest = strat.clone();
            rest.remove(mm);
            let mut s = vec![0.0];
            s.extend(rest);
            common::enum_mm_loses(&s)
        })
        .sum::<f64>()
        / 6.0;
    let freq = lost as f64 / races as f64;
    let se = (exact * (1.0 - exact) / races as f64).sqrt();
    assert!((freq - exact).abs() < 4.0 * se, "{freq} vs {exact}");
}

#[test]
fn homogeneous_loss_frequency_matches_closed_form() {
    let params = fig7(3.5);
    let pop = Population::homogeneous(5).unwrap();
    let p = 0.29;
    let agents = compliance_agents(&pop, p, 0.2);
    let (mut races, mut lost) = (0u64, 0u64);
    for o in Stages::new(&agents, &params, 3).unwrap().take(300_000) {
        if o.event.is_race() {
            races += 1;
            lost += u64::from(o.winner != Some(o.mm_id));
        }
    }
    let exact = h_tm(p, &pop).unwrap();
    let freq = lost as f64 / races as f64;
    let se = (exact * (1.0 - exact) / races as f64).sqrt();
    assert!((freq - exact).abs() < 4.0 * se, "{freq} vs {exact}");
}

#[test]
fn homogeneous_means_match_analytic() {
    let params = fig7(3.5);
    let pop = Population::homogeneous(5).unwrap();
    let (p, s) = (0.29, 0.17);
    let stats = run_stats(&compliance_agents(&pop, p, s), &params, 1_000_000, 21).unwrap();
    let exact = analytic_mean_utility(AgentClass::Trustworthy, p, s, &pop, &params).unwrap();
    for i in 0..5 {
        let (m, se) = (stats.mean(i), stats.std_err(i));
        assert!(
            (m - exact).abs() < 3.0 * se,
            "agent {i}: {m} vs {exact} (se {se})"
        );
    }
}

#[test]
fn mixed_means_match_analytic() {
    let params = GameParams::new(5, 0.45, 0.3, 0.5, 3.0).unwrap();
    let pop = Population::new(4, 1).unwrap();
    let (p, s) = (0.2, 0.25);
    let stats = run_stats(&compliance_agents(&pop, p, s), &params, 1_000_000, 12).unwrap();
    let honest = analytic_mean_utility(AgentClass::Trustworthy, p, s, &pop, &params).unwrap();
    let deceptive = analytic_mean_utility(AgentClass::Deceptive, p, s, &pop, &params).unwrap();
    for i in 0..5 {
        let exact = if i < 4 { honest } else { deceptive };
        let (m, se) = (stats.mean(i), stats.std_err(i));
        assert!(
            (m - exact).abs() < 3.0 * se,
            "agent {i}: {m} vs {exact} (se {se})"
        );
    }
    assert!(deceptive > honest, "{deceptive} vs {honest}");
    assert!(stats.mean(4) > stats.mean(0));
}

#[test]
fn same_seed_same_stream() {
    let params = fig7(3.0);
    let pop = Population::new(3, 2).unwrap();
    let agents = compliance_agents(&pop, 0.4, 0.3);
    let a = run_repeated(&agents, &params, 2_000, 99).unwrap();
    let b = run_repeated(&agents, &params, 2_000, 99).unwrap();
    let c = run_repeated(&agents, &params, 2_000, 100).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.stream, c.stream);
    for i in 0..5 {
        let total: f64 = a.stream.iter().map(|o| o.utilities[i]).sum();
        assert!((total - a.stats.cumulative[i]).abs() < 1e-9);
    }
    let stats = run_stats(&agents, &params, 2_000, 99).unwrap();
    assert_eq!(stats, a.stats);
}

#[test]
fn stage_payments_follow_roles() {
    let params = fig7(2.0);
    let pop = Population::new(3, 2).unwrap();
    let agents = compliance_agents(&pop, 0.5, 0.4);
    for o in Stages::new(&agents, &params, 1).unwrap().take(50_000) {
        let paid: Vec<usize> = (0..5).filter(|&i| o.utilities[i] != 0.0).collect();
        for &i in &paid {
            assert!(i == o.mm_id || o.winner == Some(i));
        }
        if let Some(w) = o.winner {
            assert!(o.race_entrants.contains(&w) && o.race_entrants.contains(&o.mm_id));
        }
    }
}
