//! Shared fixtures for unit tests.

use alloc::vec;
use alloc::vec::Vec;

use crate::choice::ChoiceFunction;
use crate::env::{resolve_into, RewardSource, RoundOutcome};
use crate::event::Event;
use crate::market::{MarketSpec, RewardModel};
use crate::set::IndexSet;
use crate::sim::Policy;

pub fn set(items: &[usize]) -> IndexSet {
    items.iter().copied().collect()
}

pub fn responsive(mu: Vec<Vec<f64>>, arms: &[(&[usize], usize)], horizon: u64) -> MarketSpec {
    let arms = arms.iter().map(|(r, c)| ChoiceFunction::responsive(r.to_vec(), *c)).collect();
    MarketSpec::new(mu, arms, horizon, RewardModel::Bernoulli).unwrap()
}

/// 2x2, both arms rank `[p1, p2]` with capacity 1; unique stable matching.
pub fn two_by_two(horizon: u64) -> MarketSpec {
    responsive(vec![vec![0.9, 0.5], vec![0.8, 0.6]], &[(&[0, 1], 1), (&[0, 1], 1)], horizon)
}

/// Three players, two arms with the combinatorial subset rankings of the
/// classic substitutable example.
pub fn example_market(horizon: u64) -> MarketSpec {
    MarketSpec::new(
        vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.4, 0.7]],
        vec![
            ChoiceFunction::general(vec![set(&[0, 1]), set(&[0, 2]), set(&[1, 2]), set(&[2]), set(&[1]), set(&[0])]),
            ChoiceFunction::general(vec![set(&[2])]),
        ],
        horizon,
        RewardModel::Bernoulli,
    )
    .unwrap()
}

/// Drives a policy round by round so tests can inspect state in between.
pub struct Stepper {
    pub rewards: RewardSource,
    pub outcome: RoundOutcome,
    pub proposals: Vec<Option<usize>>,
    pub events: Vec<Event>,
}

impl Stepper {
    pub fn new(spec: &MarketSpec, seed: u64) -> Self {
        let (n, k) = (spec.n_players(), spec.n_arms());
        Stepper {
            rewards: RewardSource::new(seed, n, k),
            outcome: RoundOutcome::new(n, k),
            proposals: vec![None; n],
            events: Vec::new(),
        }
    }

    pub fn step(&mut self, spec: &MarketSpec, policy: &mut dyn Policy, t: u64) -> &RoundOutcome {
        self.events.clear();
        self.proposals.iter_mut().for_each(|p| *p = None);
        policy.propose(t, &mut self.proposals, &mut self.events);
        resolve_into(spec, &self.proposals, &mut self.outcome).unwrap();
        self.rewards.reward_round(spec, &mut self.outcome);
        policy.observe(t, &self.outcome, &mut self.events);
        &self.outcome
    }
}

/// A random responsive market with well separated preferences: each row is a
/// shuffled grid `0.1 + 0.8 * r / (K - 1)`.
pub fn random_responsive(rng: &mut rand_chacha::ChaCha8Rng, n: usize, k: usize, max_capacity: usize, horizon: u64) -> MarketSpec {
    use rand::seq::SliceRandom;
    use rand::Rng;
    let grid = |r: usize| if k == 1 { 0.5 } else { 0.1 + 0.8 * r as f64 / (k - 1) as f64 };
    let mu = (0..n)
        .map(|_| {
            let mut row: Vec<f64> = (0..k).map(grid).collect();
            row.shuffle(rng);
            row
        })
        .collect();
    let arms: Vec<ChoiceFunction> = (0..k)
        .map(|_| {
            let mut ranking: Vec<usize> = (0..n).collect();
            ranking.shuffle(rng);
            ChoiceFunction::responsive(ranking, rng.random_range(1..=max_capacity))
        })
        .collect();
    MarketSpec::new(mu, arms, horizon, RewardModel::Bernoulli).unwrap()
}
