//! The stochastic round engine: simultaneous proposals are resolved through
//! the arms' choice functions and accepted players draw rewards.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::market::{MarketSpec, RewardModel};
use crate::set::IndexSet;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EnvError {
    #[error("player {player} proposed to arm {arm}, but the market has {arms} arms")]
    InvalidArm { player: usize, arm: usize, arms: usize },
    #[error("expected {expected} proposals, got {got}")]
    ProposalCount { got: usize, expected: usize },
}

/// Public result of one round. Every player observes all of it.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundOutcome {
    /// Each player's proposal (`None` skips the round).
    pub proposals: Vec<Option<usize>>,
    /// Per arm, the chosen subset of its proposers.
    pub accepted: Vec<IndexSet>,
    /// Per player, the arm that accepted it.
    pub matched: Vec<Option<usize>>,
    /// Per player, the reward drawn; exactly 0 unless matched.
    pub rewards: Vec<f64>,
}

impl RoundOutcome {
    pub fn new(n_players: usize, n_arms: usize) -> Self {
        RoundOutcome {
            proposals: vec![None; n_players],
            accepted: vec![IndexSet::EMPTY; n_arms],
            matched: vec![None; n_players],
            rewards: vec![0.0; n_players],
        }
    }

    pub fn matched_count(&self) -> usize {
        self.matched.iter().filter(|m| m.is_some()).count()
    }

    /// Players whose proposal was turned down.
    pub fn rejected(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.proposals.len()).filter(|&i| self.proposals[i].is_some() && self.matched[i].is_none())
    }
}

/// Resolves proposals into accepted sets; rewards are left at 0.
pub fn resolve_round(spec: &MarketSpec, proposals: &[Option<usize>]) -> Result<RoundOutcome, EnvError> {
    let mut out = RoundOutcome::new(spec.n_players(), spec.n_arms());
    resolve_into(spec, proposals, &mut out)?;
    Ok(out)
}

/// In-place variant of [`resolve_round`] reusing `out`'s buffers.
pub fn resolve_into(
    spec: &MarketSpec,
    proposals: &[Option<usize>],
    out: &mut RoundOutcome,
) -> Result<(), EnvError> {
    let n = spec.n_players();
    let k = spec.n_arms();
    if proposals.len() != n {
        return Err(EnvError::ProposalCount { got: proposals.len(), expected: n });
    }
    let mut offered = [IndexSet::EMPTY; crate::set::MAX_AGENTS];
    for (player, p) in proposals.iter().enumerate() {
        if let Some(arm) = *p {
            if arm >= k {
                return Err(EnvError::InvalidArm { player, arm, arms: k });
            }
            offered[arm].insert(player);
        }
    }
    out.proposals.clear();
    out.proposals.extend_from_slice(proposals);
    out.matched.iter_mut().for_each(|m| *m = None);
    out.rewards.iter_mut().for_each(|r| *r = 0.0);
    for j in 0..k {
        let chosen = if offered[j].is_empty() { offered[j] } else { spec.arm(j).choose(offered[j]) };
        out.accepted[j] = chosen;
        for i in chosen {
            out.matched[i] = Some(j);
        }
    }
    Ok(())
}

/// Reward draws with one independent stream per `(player, arm)` pair, so a
/// pair's reward sequence does not depend on what other pairs did.
#[derive(Debug, Clone)]
pub struct RewardSource {
    n_arms: usize,
    streams: Vec<ChaCha8Rng>,
}

impl RewardSource {
    pub fn new(seed: u64, n_players: usize, n_arms: usize) -> Self {
        let streams = (0..n_players * n_arms)
            .map(|pair| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(pair as u64);
                rng
            })
            .collect();
        RewardSource { n_arms, streams }
    }

    /// Draws the next reward of player `i` at arm `j`.
    pub fn sample(&mut self, spec: &MarketSpec, i: usize, j: usize) -> f64 {
        let mu = spec.mu(i, j);
        let rng = &mut self.streams[i * self.n_arms + j];
        match spec.reward_model() {
            RewardModel::Bernoulli => {
                if rng.random_bool(mu) {
                    1.0
                } else {
                    0.0
                }
            }
            RewardModel::GaussianUnitVariance => {
                Normal::new(mu, 1.0).expect("finite mean, unit deviation").sample(rng)
            }
        }
    }

    /// Fills `out.rewards` for every matched player.
    pub fn reward_round(&mut self, spec: &MarketSpec, out: &mut RoundOutcome) {
        for i in 0..out.matched.len() {
            out.rewards[i] = match out.matched[i] {
                Some(j) => self.sample(spec, i, j),
                None => 0.0,
            };
        }
    }
}

/// Draws one reward from a fresh stream seeded with `seed`.
pub fn sample_reward(spec: &MarketSpec, seed: u64, i: usize, j: usize) -> f64 {
    RewardSource::new(seed, spec.n_players(), spec.n_arms()).sample(spec, i, j)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::choice::ChoiceFunction;

    fn market(mu: f64, model: RewardModel) -> MarketSpec {
        MarketSpec::new(vec![vec![mu]], vec![ChoiceFunction::responsive(vec![0], 1)], 10, model).unwrap()
    }

    #[test]
    fn capacity_one_keeps_top_ranked() {
        let spec = MarketSpec::new(
            vec![vec![0.5, 0.4], vec![0.6, 0.3]],
            vec![ChoiceFunction::responsive(vec![1, 0], 1), ChoiceFunction::responsive(vec![0, 1], 1)],
            10,
            RewardModel::Bernoulli,
        )
        .unwrap();
        let out = resolve_round(&spec, &[Some(0), Some(0)]).unwrap();
        assert_eq!(out.accepted[0], IndexSet::singleton(1));
        assert_eq!(out.matched, vec![None, Some(0)]);
        assert_eq!(out.rejected().collect::<Vec<_>>(), vec![0]);

        let out = resolve_round(&spec, &[None, None]).unwrap();
        assert!(out.accepted.iter().all(|a| a.is_empty()));
        assert_eq!(out.matched_count(), 0);
    }

    #[test]
    fn example_market_round() {
        let s = |v: &[usize]| v.iter().copied().collect::<IndexSet>();
        let spec = MarketSpec::new(
            vec![vec![0.9, 0.1], vec![0.8, 0.2], vec![0.4, 0.7]],
            vec![
                ChoiceFunction::general(vec![s(&[0, 1]), s(&[0, 2]), s(&[1, 2]), s(&[2]), s(&[1]), s(&[0])]),
                ChoiceFunction::general(vec![s(&[2]), IndexSet::EMPTY]),
            ],
            10,
            RewardModel::Bernoulli,
        )
        .unwrap();
        let out = resolve_round(&spec, &[Some(0), Some(0), Some(0)]).unwrap();
        assert_eq!(out.accepted[0], s(&[0, 1]));
        assert_eq!(out.matched[2], None);
    }

    #[test]
    fn invalid_arm() {
        let spec = market(0.5, RewardModel::Bernoulli);
        assert_eq!(
            resolve_round(&spec, &[Some(3)]),
            Err(EnvError::InvalidArm { player: 0, arm: 3, arms: 1 })
        );
        assert!(matches!(resolve_round(&spec, &[]), Err(EnvError::ProposalCount { .. })));
    }

    #[test]
    fn degenerate_bernoulli() {
        let spec = market(1.0, RewardModel::Bernoulli);
        let mut src = RewardSource::new(3, 1, 1);
        assert!((0..1000).all(|_| src.sample(&spec, 0, 0) == 1.0));
    }

    #[test]
    fn seeded_draws_repeat() {
        let spec = market(0.3, RewardModel::GaussianUnitVariance);
        assert_eq!(sample_reward(&spec, 17, 0, 0), sample_reward(&spec, 17, 0, 0));
        assert_ne!(sample_reward(&spec, 17, 0, 0), sample_reward(&spec, 18, 0, 0));
    }

    #[test]
    fn bernoulli_mean() {
        let spec = market(0.7, RewardModel::Bernoulli);
        let mut src = RewardSource::new(11, 1, 1);
        let n = 100_000;
        let mean = (0..n).map(|_| src.sample(&spec, 0, 0)).sum::<f64>() / n as f64;
        assert!((mean - 0.7).abs() < 0.01, "mean {mean}");
    }

    #[test]
    fn streams_are_independent_of_other_pairs() {
        let spec = MarketSpec::new(
            vec![vec![0.5, 0.4]],
            vec![ChoiceFunction::responsive(vec![0], 1), ChoiceFunction::responsive(vec![0], 1)],
            10,
            RewardModel::GaussianUnitVariance,
        )
        .unwrap();
        let mut a = RewardSource::new(5, 1, 2);
        let mut b = RewardSource::new(5, 1, 2);
        for _ in 0..10 {
            b.sample(&spec, 0, 1);
        }
        assert_eq!(a.sample(&spec, 0, 0), b.sample(&spec, 0, 0));
    }
}
