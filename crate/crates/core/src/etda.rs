//! Explore-then-DA for responsive markets with `N <= K * C_min`.
//!
//! Rounds `1..=N` assign indices: unindexed players all propose to the
//! minimum-capacity arm `j_min`, and those accepted in round `t` take index
//! `t`. Exploration then runs in epochs `l = 1, 2, ...` of `2^l` round-robin
//! rounds (`arm = (index + t - 1) mod K`) followed by one communication round
//! in which a player proposes to arm `index - 1` if its confidence intervals
//! are pairwise disjoint, and skips otherwise. If the communication round
//! shows every player matched, all players switch to player-proposing DA on
//! their learned rankings.

use alloc::vec::Vec;

use crate::env::RoundOutcome;
use crate::error::GateError;
use crate::event::{Event, EventKind};
use crate::market::MarketSpec;
use crate::sim::Policy;
use crate::stats::LearnerStats;

/// Strategic behaviour for one ETDA player.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtdaDeviation {
    /// Skip every communication round, as if the ranking were never learned.
    NeverResolve,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EtdaPhase {
    Indexing,
    Exploring { epoch: u32 },
    Da { pointer: usize },
}

/// What the market does in a given round.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RoundKind {
    Indexing,
    Explore { epoch: u32 },
    Communicate { epoch: u32 },
    Da,
}

#[derive(Debug, Clone)]
pub struct EtdaPlayer {
    pub index: Option<u32>,
    pub sigma: Option<Vec<usize>>,
    pub pointer: usize,
    pub stats: LearnerStats,
    candidate: Option<Vec<usize>>,
}

#[derive(Debug, Clone)]
pub struct Etda<'a> {
    spec: &'a MarketSpec,
    j_min: usize,
    other_arm: usize,
    players: Vec<EtdaPlayer>,
    epoch: u32,
    position: u64,
    in_da: bool,
    deviant: Option<(usize, EtdaDeviation)>,
}

impl<'a> Etda<'a> {
    pub fn new(spec: &'a MarketSpec, deviant: Option<(usize, EtdaDeviation)>) -> Result<Self, GateError> {
        if !spec.is_responsive() {
            return Err(GateError::NotResponsive { algorithm: "ETDA" });
        }
        let (j_min, c_min) = spec.min_capacity().expect("responsive market has capacities");
        let (n, k) = (spec.n_players(), spec.n_arms());
        if n > k * c_min {
            return Err(GateError::EtdaCapacity { players: n, arms: k, min_capacity: c_min });
        }
        // indices run up to ceil(N / C_min) <= K, so arm `index - 1` exists
        debug_assert!(n.div_ceil(c_min) <= k);
        if let Some((p, _)) = deviant {
            if p >= n {
                return Err(GateError::BadDeviant { player: p });
            }
        }
        let players = (0..n)
            .map(|_| EtdaPlayer {
                index: None,
                sigma: None,
                pointer: 0,
                stats: LearnerStats::new(k, spec.horizon()),
                candidate: None,
            })
            .collect();
        Ok(Etda {
            spec,
            j_min,
            other_arm: (j_min + 1) % k,
            players,
            epoch: 1,
            position: 0,
            in_da: false,
            deviant,
        })
    }

    pub fn players(&self) -> &[EtdaPlayer] {
        &self.players
    }

    pub fn in_da(&self) -> bool {
        self.in_da
    }

    pub fn phase(&self, t: u64) -> EtdaPhase {
        match self.round_kind(t) {
            RoundKind::Indexing => EtdaPhase::Indexing,
            RoundKind::Explore { epoch } | RoundKind::Communicate { epoch } => EtdaPhase::Exploring { epoch },
            RoundKind::Da => EtdaPhase::Da { pointer: 0 },
        }
    }

    /// Classifies round `t`, given that all earlier rounds have been played.
    pub fn round_kind(&self, t: u64) -> RoundKind {
        if t <= self.spec.n_players() as u64 {
            RoundKind::Indexing
        } else if self.in_da {
            RoundKind::Da
        } else if self.position < 1u64 << self.epoch {
            RoundKind::Explore { epoch: self.epoch }
        } else {
            RoundKind::Communicate { epoch: self.epoch }
        }
    }

    /// Round-robin arm of an indexed player in exploration round `t`.
    pub fn explore_arm(index: u32, t: u64, n_arms: usize) -> usize {
        ((index as u64 + t - 1) % n_arms as u64) as usize
    }

    fn is_deviant(&self, i: usize) -> bool {
        matches!(self.deviant, Some((p, EtdaDeviation::NeverResolve)) if p == i)
    }
}

impl Policy for Etda<'_> {
    fn name(&self) -> &'static str {
        "etda"
    }

    fn propose(&mut self, t: u64, proposals: &mut [Option<usize>], _events: &mut Vec<Event>) {
        let k = self.spec.n_arms();
        match self.round_kind(t) {
            RoundKind::Indexing => {
                for (p, pl) in proposals.iter_mut().zip(&self.players) {
                    *p = Some(if pl.index.is_none() { self.j_min } else { self.other_arm });
                }
            }
            RoundKind::Explore { .. } => {
                for (p, pl) in proposals.iter_mut().zip(&self.players) {
                    *p = pl.index.map(|idx| Self::explore_arm(idx, t, k));
                }
            }
            RoundKind::Communicate { .. } => {
                for i in 0..self.players.len() {
                    let candidate = if self.is_deviant(i) { None } else { self.players[i].stats.separated_ranking() };
                    let pl = &mut self.players[i];
                    proposals[i] = match (&candidate, pl.index) {
                        (Some(_), Some(idx)) => Some(idx as usize - 1),
                        _ => None,
                    };
                    pl.candidate = candidate;
                }
            }
            RoundKind::Da => {
                for (p, pl) in proposals.iter_mut().zip(&self.players) {
                    *p = pl.sigma.as_ref().and_then(|s| s.get(pl.pointer).copied());
                }
            }
        }
    }

    fn observe(&mut self, t: u64, outcome: &RoundOutcome, events: &mut Vec<Event>) {
        let kind = self.round_kind(t);
        match kind {
            RoundKind::Indexing => {
                for i in outcome.accepted[self.j_min] {
                    let pl = &mut self.players[i];
                    if pl.index.is_none() {
                        pl.index = Some(t as u32);
                        events.push(Event::player(i, EventKind::IndexAssigned(t as u32)));
                    }
                }
            }
            RoundKind::Explore { .. } => {
                for (i, pl) in self.players.iter_mut().enumerate() {
                    if let (Some(j), Some(m)) = (outcome.proposals[i], outcome.matched[i]) {
                        if j == m {
                            pl.stats.record(j, outcome.rewards[i]);
                        }
                    }
                }
            }
            RoundKind::Communicate { .. } => {
                for (i, pl) in self.players.iter().enumerate() {
                    if pl.candidate.is_some() {
                        events.push(Event::player(i, EventKind::Resolved));
                    }
                }
                if outcome.matched_count() == self.players.len() {
                    self.in_da = true;
                    for (i, pl) in self.players.iter_mut().enumerate() {
                        pl.sigma = pl.candidate.take();
                        pl.pointer = 0;
                        events.push(Event::player(i, EventKind::EnterDa));
                    }
                }
            }
            RoundKind::Da => {
                let k = self.spec.n_arms();
                for i in outcome.rejected() {
                    let pl = &mut self.players[i];
                    pl.pointer += 1;
                    if pl.pointer == k {
                        events.push(Event::player(i, EventKind::DaExhausted));
                    }
                }
            }
        }
        if matches!(kind, RoundKind::Explore { .. } | RoundKind::Communicate { .. }) {
            self.position += 1;
            if self.position > 1u64 << self.epoch {
                self.epoch += 1;
                self.position = 0;
            }
        }
    }

    fn stats(&self, player: usize) -> &LearnerStats {
        &self.players[player].stats
    }
}
