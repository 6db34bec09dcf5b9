//! Online deferred acceptance for substitutable markets.
//!
//! Every player tracks, per arm, the players that have not yet turned the arm
//! down (`P_{i,j}`) and proposes round-robin over its plausible set
//! `S_i = {a_j : p_i in Ch_j(P_{i,j})}`. Arms whose UCB falls below the best
//! LCB in `S_i` are pruned. When two consecutive matchings coincide, players
//! that were matched to `a_j` before and have left it are struck from
//! `P_{i,j}` and `S_i` is rebuilt. All players see the same outcomes, so
//! their `P` tables stay identical without any messaging.

use alloc::vec;
use alloc::vec::Vec;

use crate::env::RoundOutcome;
use crate::error::GateError;
use crate::event::{Event, EventKind};
use crate::market::MarketSpec;
use crate::set::IndexSet;
use crate::sim::Policy;
use crate::stats::LearnerStats;

/// A deviant ODA player proposing outside its plausible set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BeyondSetProbe {
    pub arm: usize,
    /// Probe every `period`-th round (`period >= 1`).
    pub period: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProbeReport {
    pub attempts: u64,
    pub accepted: u64,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OdaPlayer {
    /// `P_{i,j}` for every arm.
    pub available: Vec<IndexSet>,
    /// `S_i`.
    pub plausible: IndexSet,
    /// Round-robin resumes at the first plausible arm `>= cursor`.
    pub cursor: usize,
    pub stats: LearnerStats,
}

impl OdaPlayer {
    /// Plausible set implied by the `P` table.
    pub fn plausible_from_table(spec: &MarketSpec, player: usize, table: &[IndexSet]) -> IndexSet {
        (0..spec.n_arms()).filter(|&j| spec.arm(j).accepts(player, table[j])).collect()
    }

    /// Next arm of the round-robin over `S_i`, in ascending arm order.
    pub fn act(&mut self) -> Option<usize> {
        let arm = self.plausible.next_cyclic(self.cursor)?;
        self.cursor = arm + 1;
        Some(arm)
    }

    /// Removes every plausible arm whose UCB is below the best plausible LCB.
    pub fn prune(&mut self) -> IndexSet {
        let best_lcb = self.plausible.iter().map(|j| self.stats.lcb(j)).fold(f64::NEG_INFINITY, f64::max);
        let dominated: IndexSet = self.plausible.iter().filter(|&j| self.stats.ucb(j) < best_lcb).collect();
        self.plausible = self.plausible.difference(dominated);
        dominated
    }
}

#[derive(Debug, Clone)]
pub struct Oda<'a> {
    spec: &'a MarketSpec,
    players: Vec<OdaPlayer>,
    previous: Option<Vec<Option<usize>>>,
    /// Per arm, players matched to it in some round up to `t - 2`.
    matched_earlier: Vec<IndexSet>,
    sync_updates: u64,
    deviant: Option<(usize, BeyondSetProbe)>,
    probing: bool,
    probe: ProbeReport,
}

impl<'a> Oda<'a> {
    /// Fails unless every arm passes the substitutability check.
    pub fn new(spec: &'a MarketSpec, deviant: Option<(usize, BeyondSetProbe)>) -> Result<Self, GateError> {
        let (n, k) = (spec.n_players(), spec.n_arms());
        for (arm, ch) in spec.arms().iter().enumerate() {
            if ch.is_responsive() && n > crate::choice::SUBSTITUTABILITY_MAX_PLAYERS {
                // responsive arms are substitutable; only the enumeration is out of reach
                continue;
            }
            if let Some(w) = ch.check_substitutable(n)? {
                return Err(GateError::NotSubstitutable { arm, offer: w.offer, kept: w.kept, removed: w.removed });
            }
        }
        if let Some((p, probe)) = deviant {
            if p >= n {
                return Err(GateError::BadDeviant { player: p });
            }
            if probe.arm >= k {
                return Err(GateError::BadDeviationArm { arm: probe.arm });
            }
        }
        let table = vec![spec.all_players(); k];
        let players = (0..n)
            .map(|i| OdaPlayer {
                plausible: OdaPlayer::plausible_from_table(spec, i, &table),
                available: table.clone(),
                cursor: 0,
                stats: LearnerStats::new(k, spec.horizon()),
            })
            .collect();
        Ok(Oda {
            spec,
            players,
            previous: None,
            matched_earlier: vec![IndexSet::EMPTY; k],
            sync_updates: 0,
            deviant: deviant.map(|(p, probe)| (p, BeyondSetProbe { period: probe.period.max(1), ..probe })),
            probing: false,
            probe: ProbeReport::default(),
        })
    }

    pub fn players(&self) -> &[OdaPlayer] {
        &self.players
    }

    /// Synchronized updates that changed some `P` table.
    pub fn sync_updates(&self) -> u64 {
        self.sync_updates
    }

    pub fn probe_report(&self) -> ProbeReport {
        self.probe
    }

    /// Applies the synchronized update for round `t` if the matchings of
    /// rounds `t - 1` and `t` coincide.
    fn sync(&mut self, matched: &[Option<usize>], events: &mut Vec<Event>) {
        if self.previous.as_deref() != Some(matched) {
            return;
        }
        let k = self.spec.n_arms();
        let mut struck = vec![IndexSet::EMPTY; k];
        for (j, s) in struck.iter_mut().enumerate() {
            *s = self.matched_earlier[j]
                .iter()
                .filter(|&p| matched[p] != Some(j))
                .collect();
        }
        let mut changed = false;
        for (i, pl) in self.players.iter_mut().enumerate() {
            for j in 0..k {
                let gone = pl.available[j].intersection(struck[j]);
                if !gone.is_empty() {
                    changed = true;
                    pl.available[j] = pl.available[j].difference(gone);
                }
            }
            pl.plausible = OdaPlayer::plausible_from_table(self.spec, i, &pl.available);
        }
        if changed {
            self.sync_updates += 1;
            for (j, s) in struck.iter().enumerate() {
                for p in *s {
                    events.push(Event::global(EventKind::SyncRemoved { player: p, arm: j }));
                }
            }
        }
    }
}

impl Policy for Oda<'_> {
    fn name(&self) -> &'static str {
        "oda"
    }

    fn propose(&mut self, t: u64, proposals: &mut [Option<usize>], events: &mut Vec<Event>) {
        self.probing = false;
        for (i, pl) in self.players.iter_mut().enumerate() {
            if let Some((p, probe)) = self.deviant {
                if p == i && t % probe.period == 0 && !pl.plausible.contains(probe.arm) {
                    proposals[i] = Some(probe.arm);
                    self.probing = true;
                    events.push(Event::player(i, EventKind::Probe(probe.arm)));
                    continue;
                }
            }
            proposals[i] = pl.act();
        }
    }

    fn observe(&mut self, _t: u64, outcome: &RoundOutcome, events: &mut Vec<Event>) {
        if self.probing {
            let (p, _) = self.deviant.expect("probing implies a deviant");
            self.probe.attempts += 1;
            if outcome.matched[p].is_some() {
                self.probe.accepted += 1;
                self.probe.reward += outcome.rewards[p];
            }
        }
        for (i, pl) in self.players.iter_mut().enumerate() {
            if let (Some(j), Some(m)) = (outcome.proposals[i], outcome.matched[i]) {
                if j == m {
                    pl.stats.record(j, outcome.rewards[i]);
                }
            }
            for j in pl.prune() {
                events.push(Event::player(i, EventKind::Pruned(j)));
            }
        }
        self.sync(&outcome.matched, events);
        if let Some(prev) = self.previous.as_mut() {
            for (p, a) in prev.iter().enumerate() {
                if let Some(j) = a {
                    self.matched_earlier[*j].insert(p);
                }
            }
            prev.clone_from(&outcome.matched);
        } else {
            self.previous = Some(outcome.matched.clone());
        }
    }

    fn stats(&self, player: usize) -> &LearnerStats {
        &self.players[player].stats
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::da::da_arm_proposing;
    use crate::referee::Referee;
    use crate::sim::{simulate, SimOptions};
    use crate::testutil::{example_market, random_responsive, responsive, set, Stepper};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn initial_plausible_sets_on_example_market() {
        let spec = example_market(100);
        let oda = Oda::new(&spec, None).unwrap();
        let s: Vec<IndexSet> = oda.players().iter().map(|p| p.plausible).collect();
        assert_eq!(s, vec![set(&[0]), set(&[0]), set(&[1])]);
    }

    #[test]
    fn round_robin_alternates_and_keeps_its_cursor() {
        let spec = responsive(vec![vec![0.9, 0.5, 0.2]], &[(&[0], 1), (&[0], 1), (&[0], 1)], 100);
        let mut oda = Oda::new(&spec, None).unwrap();
        let pl = &mut oda.players[0];
        assert_eq!([pl.act(), pl.act(), pl.act(), pl.act()], [Some(0), Some(1), Some(2), Some(0)]);
        pl.plausible = set(&[0, 2]);
        assert_eq!([pl.act(), pl.act(), pl.act()], [Some(2), Some(0), Some(2)]);
        pl.plausible = set(&[2]);
        assert_eq!([pl.act(), pl.act()], [Some(2), Some(2)]);
        pl.plausible = IndexSet::EMPTY;
        assert_eq!(pl.act(), None);
    }

    #[test]
    fn unsampled_and_lonely_arms_survive_pruning() {
        let spec = responsive(vec![vec![0.9, 0.5]], &[(&[0], 1), (&[0], 1)], 1000);
        let mut oda = Oda::new(&spec, None).unwrap();
        let pl = &mut oda.players[0];
        for _ in 0..300 {
            pl.stats.record(0, 1.0);
        }
        assert!(pl.prune().is_empty());
        pl.plausible = set(&[1]);
        for _ in 0..300 {
            pl.stats.record(1, 0.0);
        }
        assert!(pl.prune().is_empty());
        pl.plausible = set(&[0, 1]);
        assert_eq!(pl.prune(), set(&[1]));
        assert_eq!(pl.plausible, set(&[0]));
    }

    #[test]
    fn sync_requires_two_equal_rounds() {
        let spec = example_market(100);
        let mut oda = Oda::new(&spec, None).unwrap();
        oda.matched_earlier[0] = set(&[2]);
        let mut events = Vec::new();
        oda.previous = Some(vec![Some(0), Some(0), None]);
        oda.sync(&[Some(0), Some(0), Some(1)], &mut events);
        assert_eq!(oda.sync_updates(), 0);
        oda.previous = Some(vec![Some(0), Some(0), Some(1)]);
        oda.sync(&[Some(0), Some(0), Some(1)], &mut events);
        assert_eq!(oda.sync_updates(), 1);
        assert!(oda.players().iter().all(|p| p.available[0] == set(&[0, 1]) && p.available[1] == set(&[0, 1, 2])));
        assert_eq!(events, vec![Event::global(EventKind::SyncRemoved { player: 2, arm: 0 })]);
    }

    #[test]
    fn example_market_ends_at_arm_proposing_matching() {
        let spec = example_market(10_000);
        let referee = Referee::new(&spec);
        let mut oda = Oda::new(&spec, None).unwrap();
        let summary = simulate(&spec, &mut oda, &referee.targets, SimOptions::seed(1), &mut ()).unwrap();
        assert_eq!(summary.final_matching, da_arm_proposing(&spec).matching.assignment());
        assert_eq!(summary.total_rejections(), 0);
    }

    #[test]
    fn probe_outside_plausible_set_is_rejected() {
        let spec = example_market(10);
        let mut oda = Oda::new(&spec, Some((0, BeyondSetProbe { arm: 1, period: 1 }))).unwrap();
        let mut st = Stepper::new(&spec, 3);
        for t in 1..=10 {
            let out = st.step(&spec, &mut oda, t);
            assert_eq!(out.proposals[0], Some(1));
            assert_eq!(out.matched[0], None);
            assert_eq!(out.rewards[0], 0.0);
        }
        assert_eq!(oda.probe_report(), ProbeReport { attempts: 10, accepted: 0, reward: 0.0 });
    }

    #[test]
    fn probe_inside_plausible_set_is_honest() {
        let spec = example_market(200);
        let referee = Referee::new(&spec);
        let mut honest = Oda::new(&spec, None).unwrap();
        let mut probing = Oda::new(&spec, Some((0, BeyondSetProbe { arm: 0, period: 1 }))).unwrap();
        let a = simulate(&spec, &mut honest, &referee.targets, SimOptions::seed(8), &mut ()).unwrap();
        let b = simulate(&spec, &mut probing, &referee.targets, SimOptions::seed(8), &mut ()).unwrap();
        assert_eq!(a.cumulative_reward, b.cumulative_reward);
        assert_eq!(probing.probe_report().attempts, 0);
    }

    #[test]
    fn random_markets_never_collide_and_share_tables() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for case in 0..30u64 {
            let n = 1 + case as usize % 4;
            let k = 1 + (case as usize / 4) % 3;
            let spec = random_responsive(&mut rng, n, k, 2, 5000);
            let mut oda = Oda::new(&spec, None).unwrap();
            let mut st = Stepper::new(&spec, case);
            for t in 1..=spec.horizon() {
                let out = st.step(&spec, &mut oda, t);
                assert_eq!(out.matched, out.proposals, "case {case} round {t}");
                let first = &oda.players()[0].available;
                assert!(oda.players().iter().all(|p| &p.available == first));
            }
            assert!(oda.sync_updates() <= (n * k) as u64);
        }
    }

    #[test]
    fn clean_runs_end_at_arm_proposing_matching() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut clean = 0;
        for case in 0..12u64 {
            let spec = random_responsive(&mut rng, 3, 3, 1, 20_000);
            let referee = Referee::new(&spec);
            let mut oda = Oda::new(&spec, None).unwrap();
            let summary = simulate(&spec, &mut oda, &referee.targets, SimOptions::seed(case), &mut ()).unwrap();
            if summary.coverage_clean {
                clean += 1;
                assert_eq!(summary.final_matching, da_arm_proposing(&spec).matching.assignment());
            }
        }
        assert!(clean > 0);
    }

    #[test]
    fn gate_rejects_complementary_arm() {
        let spec = MarketSpec::new(
            vec![vec![0.9], vec![0.8]],
            vec![crate::ChoiceFunction::general(vec![set(&[0, 1])])],
            10,
            crate::RewardModel::Bernoulli,
        )
        .unwrap();
        assert!(matches!(Oda::new(&spec, None), Err(GateError::NotSubstitutable { arm: 0, .. })));
    }
}
