//! The round loop shared by all policies, with online regret, coverage and
//! convergence bookkeeping.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::{resolve_into, EnvError, RewardSource, RoundOutcome};
use crate::event::Event;
use crate::market::MarketSpec;
use crate::matching::{is_stable, Matching};
use crate::referee::RegretTargets;
use crate::stats::LearnerStats;

/// A learning protocol for all players of a market.
///
/// Each round the simulator asks for proposals, resolves them, draws rewards
/// and hands the full public outcome back through [`Policy::observe`].
pub trait Policy {
    fn name(&self) -> &'static str;
    fn propose(&mut self, t: u64, proposals: &mut [Option<usize>], events: &mut Vec<Event>);
    fn observe(&mut self, t: u64, outcome: &RoundOutcome, events: &mut Vec<Event>);
    fn stats(&self, player: usize) -> &LearnerStats;
}

/// Receives every round as it happens (trace writers, invariant checks).
pub trait RoundObserver {
    fn on_round(&mut self, t: u64, outcome: &RoundOutcome, events: &[Event], policy: &dyn Policy);
}

impl RoundObserver for () {
    fn on_round(&mut self, _: u64, _: &RoundOutcome, _: &[Event], _: &dyn Policy) {}
}

impl<F: FnMut(u64, &RoundOutcome, &[Event], &dyn Policy)> RoundObserver for F {
    fn on_round(&mut self, t: u64, outcome: &RoundOutcome, events: &[Event], policy: &dyn Policy) {
        self(t, outcome, events, policy)
    }
}

/// Cumulative regret of every player at a round.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Checkpoint {
    pub round: u64,
    pub optimal: Vec<f64>,
    pub pessimal: Vec<f64>,
    pub optimal_pseudo: Vec<f64>,
    pub pessimal_pseudo: Vec<f64>,
}

/// Running sums of `mu[i][target_i] - X_i(t)` against both targets, plus
/// the pseudo-regret `mu[i][target_i] - mu[i][matched_i]`, which has the
/// same expectation without the reward noise.
#[derive(Debug, Clone, PartialEq)]
pub struct RegretAccumulator {
    targets: RegretTargets,
    pub optimal: Vec<f64>,
    pub pessimal: Vec<f64>,
    pub optimal_pseudo: Vec<f64>,
    pub pessimal_pseudo: Vec<f64>,
    pub reward: Vec<f64>,
}

impl RegretAccumulator {
    pub fn new(targets: RegretTargets) -> Self {
        let n = targets.optimal_value.len();
        RegretAccumulator {
            targets,
            optimal: vec![0.0; n],
            pessimal: vec![0.0; n],
            optimal_pseudo: vec![0.0; n],
            pessimal_pseudo: vec![0.0; n],
            reward: vec![0.0; n],
        }
    }

    /// `means[i]` is the mean reward of player `i`'s match this round (0 if
    /// unmatched).
    pub fn add_round(&mut self, rewards: &[f64], means: &[f64]) {
        for (i, (&x, &m)) in rewards.iter().zip(means).enumerate() {
            self.optimal[i] += self.targets.optimal_value[i] - x;
            self.pessimal[i] += self.targets.pessimal_value[i] - x;
            self.optimal_pseudo[i] += self.targets.optimal_value[i] - m;
            self.pessimal_pseudo[i] += self.targets.pessimal_value[i] - m;
            self.reward[i] += x;
        }
    }

    pub fn checkpoint(&self, round: u64) -> Checkpoint {
        Checkpoint {
            round,
            optimal: self.optimal.clone(),
            pessimal: self.pessimal.clone(),
            optimal_pseudo: self.optimal_pseudo.clone(),
            pessimal_pseudo: self.pessimal_pseudo.clone(),
        }
    }
}

/// Regret of a recorded sequence of `(rewards, match means)` rounds.
pub fn compute_regret<'a>(
    targets: &RegretTargets,
    rounds: impl IntoIterator<Item = (&'a [f64], &'a [f64])>,
) -> RegretAccumulator {
    let mut acc = RegretAccumulator::new(targets.clone());
    for (rewards, means) in rounds {
        acc.add_round(rewards, means);
    }
    acc
}

/// Fraction of `(round, player, arm)` triples whose interval holds the truth,
/// tracked incrementally.
#[derive(Debug, Clone)]
pub struct CoverageTracker {
    n_arms: usize,
    violating: Vec<bool>,
    violating_now: usize,
    covered: u128,
    total: u128,
    /// Whether any triple was ever uncovered.
    pub any_violation: bool,
}

impl CoverageTracker {
    pub fn new(n_players: usize, n_arms: usize) -> Self {
        CoverageTracker {
            n_arms,
            violating: vec![false; n_players * n_arms],
            violating_now: 0,
            covered: 0,
            total: 0,
            any_violation: false,
        }
    }

    /// Re-evaluates one pair after its statistics changed.
    pub fn update(&mut self, i: usize, j: usize, stats: &LearnerStats, mu: f64) {
        let bad = !stats.covers(j, mu);
        let slot = &mut self.violating[i * self.n_arms + j];
        if bad != *slot {
            if bad {
                self.violating_now += 1;
            } else {
                self.violating_now -= 1;
            }
            *slot = bad;
        }
        self.any_violation |= bad;
    }

    /// Closes a round.
    pub fn tick(&mut self) {
        let pairs = self.violating.len() as u128;
        self.total += pairs;
        self.covered += pairs - self.violating_now as u128;
    }

    pub fn fraction(&self) -> f64 {
        if self.total == 0 {
            1.0
        } else {
            self.covered as f64 / self.total as f64
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunSummary {
    pub algorithm: alloc::string::String,
    pub seed: u64,
    pub horizon: u64,
    pub final_matching: Vec<Option<usize>>,
    pub final_stable: bool,
    /// First round of the final constant stretch, if that matching is stable.
    pub convergence_round: Option<u64>,
    pub cumulative_reward: Vec<f64>,
    pub optimal_regret: Vec<f64>,
    pub pessimal_regret: Vec<f64>,
    pub optimal_pseudo_regret: Vec<f64>,
    pub pessimal_pseudo_regret: Vec<f64>,
    pub coverage: f64,
    /// No confidence interval ever missed its true mean.
    pub coverage_clean: bool,
    /// Proposals that were turned down, per player.
    pub rejections: Vec<u64>,
    pub checkpoints: Vec<Checkpoint>,
}

impl RunSummary {
    pub fn total_optimal_regret(&self) -> f64 {
        self.optimal_regret.iter().sum()
    }

    pub fn total_pessimal_regret(&self) -> f64 {
        self.pessimal_regret.iter().sum()
    }

    pub fn total_optimal_pseudo_regret(&self) -> f64 {
        self.optimal_pseudo_regret.iter().sum()
    }

    pub fn total_pessimal_pseudo_regret(&self) -> f64 {
        self.pessimal_pseudo_regret.iter().sum()
    }

    pub fn total_rejections(&self) -> u64 {
        self.rejections.iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimOptions {
    pub seed: u64,
    /// Number of evenly spaced regret checkpoints (the last is the horizon).
    pub checkpoints: usize,
}

impl SimOptions {
    pub fn seed(seed: u64) -> Self {
        SimOptions { seed, checkpoints: 100 }
    }
}

/// Runs `policy` for the market's horizon.
pub fn simulate(
    spec: &MarketSpec,
    policy: &mut dyn Policy,
    targets: &RegretTargets,
    options: SimOptions,
    observer: &mut dyn RoundObserver,
) -> Result<RunSummary, EnvError> {
    let n = spec.n_players();
    let k = spec.n_arms();
    let horizon = spec.horizon();
    let mut rewards = RewardSource::new(options.seed, n, k);
    let mut outcome = RoundOutcome::new(n, k);
    let mut proposals = vec![None; n];
    let mut means = vec![0.0; n];
    let mut events = Vec::new();
    let mut regret = RegretAccumulator::new(targets.clone());
    let mut coverage = CoverageTracker::new(n, k);
    let mut rejections = vec![0u64; n];
    let mut previous: Vec<Option<usize>> = Vec::new();
    let mut last_change = 1u64;
    let points = options.checkpoints.min(horizon as usize) as u64;
    let mut checkpoints = Vec::with_capacity(points as usize);
    let mut next_point = 1u64;

    for t in 1..=horizon {
        events.clear();
        proposals.iter_mut().for_each(|p| *p = None);
        policy.propose(t, &mut proposals, &mut events);
        resolve_into(spec, &proposals, &mut outcome)?;
        rewards.reward_round(spec, &mut outcome);
        policy.observe(t, &outcome, &mut events);

        for i in 0..n {
            match (outcome.proposals[i], outcome.matched[i]) {
                (Some(j), Some(_)) => coverage.update(i, j, policy.stats(i), spec.mu(i, j)),
                (Some(_), None) => rejections[i] += 1,
                _ => {}
            }
        }
        coverage.tick();
        for (i, m) in means.iter_mut().enumerate() {
            *m = spec.value(i, outcome.matched[i]);
        }
        regret.add_round(&outcome.rewards, &means);
        if outcome.matched != previous {
            last_change = t;
            previous.clone_from(&outcome.matched);
        }
        if points > 0 && t == (horizon * next_point).div_ceil(points) {
            checkpoints.push(regret.checkpoint(t));
            next_point += 1;
        }
        observer.on_round(t, &outcome, &events, &*policy);
    }

    let final_stable = is_stable(&Matching::new(previous.clone(), k), spec);
    Ok(RunSummary {
        algorithm: policy.name().into(),
        seed: options.seed,
        horizon,
        final_matching: previous,
        final_stable,
        convergence_round: final_stable.then_some(last_change),
        cumulative_reward: regret.reward,
        optimal_regret: regret.optimal,
        pessimal_regret: regret.pessimal,
        optimal_pseudo_regret: regret.optimal_pseudo,
        pessimal_pseudo_regret: regret.pessimal_pseudo,
        coverage: coverage.fraction(),
        coverage_clean: !coverage.any_violation,
        rejections,
        checkpoints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::referee::Referee;
    use crate::testutil::two_by_two;

    #[test]
    fn regret_against_fixed_sequences() {
        let spec = two_by_two(10);
        let targets = Referee::new(&spec).targets;
        let means = [0.9, 0.6];
        let rewards = [1.0, 0.0];
        let acc = compute_regret(&targets, core::iter::repeat_n((&rewards[..], &means[..]), 10));
        assert_eq!(acc.optimal_pseudo, vec![0.0, 0.0]);
        assert!((acc.optimal[0] - 10.0 * (0.9 - 1.0)).abs() < 1e-12);
        assert!((acc.optimal[1] - 10.0 * 0.6).abs() < 1e-12);
        let zeros = [0.0, 0.0];
        let rejected = compute_regret(&targets, core::iter::repeat_n((&zeros[..], &zeros[..]), 10));
        assert!((rejected.optimal_pseudo[0] - 9.0).abs() < 1e-12);
        assert_eq!(rejected.optimal, rejected.optimal_pseudo);
    }

    #[test]
    fn untouched_coverage_is_full() {
        let mut c = CoverageTracker::new(2, 2);
        c.tick();
        assert_eq!(c.fraction(), 1.0);
        assert!(!c.any_violation);
    }

    /// Always proposes the player-optimal arm.
    struct Oracle(Vec<Option<usize>>, Vec<LearnerStats>);

    impl Policy for Oracle {
        fn name(&self) -> &'static str {
            "oracle"
        }
        fn propose(&mut self, _: u64, proposals: &mut [Option<usize>], _: &mut Vec<Event>) {
            proposals.copy_from_slice(&self.0);
        }
        fn observe(&mut self, _: u64, out: &RoundOutcome, _: &mut Vec<Event>) {
            for (i, m) in out.matched.iter().enumerate() {
                if let Some(j) = m {
                    self.1[i].record(*j, out.rewards[i]);
                }
            }
        }
        fn stats(&self, player: usize) -> &LearnerStats {
            &self.1[player]
        }
    }

    #[test]
    fn simulation_bookkeeping() {
        let spec = two_by_two(1000);
        let referee = Referee::new(&spec);
        let stats = vec![LearnerStats::new(2, 1000); 2];
        let mut policy = Oracle(vec![Some(0), Some(1)], stats);
        let s = simulate(&spec, &mut policy, &referee.targets, SimOptions { seed: 1, checkpoints: 10 }, &mut ()).unwrap();
        assert_eq!(s.final_matching, vec![Some(0), Some(1)]);
        assert!(s.final_stable);
        assert_eq!(s.convergence_round, Some(1));
        assert_eq!(s.total_optimal_pseudo_regret(), 0.0);
        assert_eq!(s.total_rejections(), 0);
        let rounds: Vec<u64> = s.checkpoints.iter().map(|c| c.round).collect();
        assert_eq!(rounds, (1..=10).map(|c| c * 100).collect::<Vec<_>>());
        let again = simulate(&spec, &mut Oracle(vec![Some(0), Some(1)], vec![LearnerStats::new(2, 1000); 2]), &referee.targets, SimOptions { seed: 1, checkpoints: 10 }, &mut ()).unwrap();
        assert_eq!(s, again);
    }
}
