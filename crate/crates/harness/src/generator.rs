//! Random responsive markets with a guaranteed preference gap.
//!
//! Arm rankings are uniform permutations. Each preference row is drawn
//! uniformly from `(0, 1]` on the six-decimal grid and redrawn until all its
//! pairwise gaps reach `delta_floor`. Capacities follow the profile and are
//! redrawn until their total covers every player.

use anyhow::{bail, ensure, Result};
use matchbandit_core::{ChoiceFunction, MarketSpec, RewardModel};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::specfile::from_micro;

const MAX_ROW_DRAWS: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CapacityProfile {
    /// Every arm has this capacity.
    Uniform(usize),
    /// Each capacity uniform in `1..=max`.
    Random { max: usize },
    Fixed(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorParams {
    pub players: usize,
    pub arms: usize,
    pub capacity: CapacityProfile,
    pub delta_floor: f64,
    #[serde(default)]
    pub reward_model: RewardModel,
    pub horizon: u64,
    /// Seeds the market draw; independent of the run seeds.
    pub market_seed: u64,
}

impl GeneratorParams {
    pub fn generate(&self) -> Result<MarketSpec> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.market_seed);
        generate_with(self, &mut rng)
    }
}

/// Draws a market from `rng`; successive calls give independent markets.
pub fn generate_with(params: &GeneratorParams, rng: &mut ChaCha8Rng) -> Result<MarketSpec> {
    let (n, k) = (params.players, params.arms);
    ensure!(n >= 1 && k >= 1, "need at least one player and one arm");
    ensure!(params.delta_floor >= 0.0, "delta_floor must be non-negative");
    ensure!(
        k == 1 || (k - 1) as f64 * params.delta_floor < 1.0,
        "delta_floor {} cannot separate {k} values in (0, 1]",
        params.delta_floor
    );
    let mu = (0..n).map(|_| draw_row(rng, k, params.delta_floor)).collect::<Result<Vec<_>>>()?;
    let capacities = draw_capacities(rng, &params.capacity, n, k)?;
    let arms = capacities
        .into_iter()
        .map(|c| {
            let mut ranking: Vec<usize> = (0..n).collect();
            ranking.shuffle(rng);
            ChoiceFunction::responsive(ranking, c)
        })
        .collect();
    Ok(MarketSpec::new(mu, arms, params.horizon, params.reward_model)?)
}

fn draw_row(rng: &mut ChaCha8Rng, k: usize, floor: f64) -> Result<Vec<f64>> {
    for _ in 0..MAX_ROW_DRAWS {
        let row: Vec<f64> = (0..k).map(|_| from_micro(rng.random_range(1..=1_000_000))).collect();
        let mut sorted = row.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).all(|w| w[1] - w[0] >= floor && w[1] > w[0]) {
            return Ok(row);
        }
    }
    bail!("no preference row with gap {floor} after {MAX_ROW_DRAWS} draws")
}

fn draw_capacities(rng: &mut ChaCha8Rng, profile: &CapacityProfile, n: usize, k: usize) -> Result<Vec<usize>> {
    match profile {
        CapacityProfile::Uniform(c) => {
            ensure!(*c >= 1 && c * k >= n, "uniform capacity {c} over {k} arms cannot hold {n} players");
            Ok(vec![*c; k])
        }
        CapacityProfile::Fixed(caps) => {
            ensure!(caps.len() == k, "{} capacities for {k} arms", caps.len());
            ensure!(caps.iter().all(|&c| c >= 1), "capacities must be at least 1");
            ensure!(caps.iter().sum::<usize>() >= n, "capacities cannot hold {n} players");
            Ok(caps.clone())
        }
        CapacityProfile::Random { max } => {
            ensure!(*max >= 1 && max * k >= n, "capacities up to {max} over {k} arms cannot hold {n} players");
            loop {
                let caps: Vec<usize> = (0..k).map(|_| rng.random_range(1..=*max)).collect();
                if caps.iter().sum::<usize>() >= n {
                    return Ok(caps);
                }
            }
        }
    }
}

/// Markets sharing one preference structure at a chosen gap: every player
/// values its arms at `top, top - delta, top - 2 * delta, ...` in a random
/// order, so the minimum gap is exactly `delta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LadderParams {
    pub players: usize,
    pub arms: usize,
    pub capacity: CapacityProfile,
    pub delta: f64,
    #[serde(default = "default_top")]
    pub top: f64,
    #[serde(default)]
    pub reward_model: RewardModel,
    pub horizon: u64,
    pub market_seed: u64,
}

fn default_top() -> f64 {
    0.9
}

impl LadderParams {
    pub fn generate(&self) -> Result<MarketSpec> {
        let (n, k) = (self.players, self.arms);
        ensure!(n >= 1 && k >= 1, "need at least one player and one arm");
        let bottom = self.top - self.delta * (k - 1) as f64;
        ensure!(self.top <= 1.0 && bottom > 0.0, "ladder from {} by {} leaves (0, 1]", self.top, self.delta);
        let mut rng = ChaCha8Rng::seed_from_u64(self.market_seed);
        let mu = (0..n)
            .map(|_| {
                let mut ranks: Vec<usize> = (0..k).collect();
                ranks.shuffle(&mut rng);
                ranks.into_iter().map(|r| quantize(self.top - self.delta * r as f64)).collect()
            })
            .collect();
        let capacities = draw_capacities(&mut rng, &self.capacity, n, k)?;
        let arms = capacities
            .into_iter()
            .map(|c| {
                let mut ranking: Vec<usize> = (0..n).collect();
                ranking.shuffle(&mut rng);
                ChoiceFunction::responsive(ranking, c)
            })
            .collect();
        Ok(MarketSpec::new(mu, arms, self.horizon, self.reward_model)?)
    }
}

fn quantize(v: f64) -> f64 {
    from_micro((v * 1_000_000.0).round() as u32)
}
