//! Paired honest/deviant runs on shared seeds.

use anyhow::{ensure, Result};
use matchbandit_core::oda::ProbeReport;
use matchbandit_core::MarketSpec;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::Deviation;
use crate::experiment::{Prepared, RunRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedOutcome {
    pub seed: u64,
    pub honest_final_arm: Option<usize>,
    pub deviant_final_arm: Option<usize>,
    /// Positions gained in the deviant's own ranking (unmatched ranks last);
    /// positive means the deviation paid off.
    pub final_rank_delta: i64,
    pub final_mu_delta: f64,
    pub reward_delta: f64,
    /// Optimal-regret change of every other player (deviant run minus honest).
    pub others_regret_delta: Vec<f64>,
    /// Both runs kept every confidence interval around its mean.
    pub coverage_clean: bool,
    pub probe: Option<ProbeReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviationReport {
    pub deviation: Deviation,
    pub pairs: Vec<PairedOutcome>,
    /// Pairs where the deviant ended at a strictly better arm.
    pub improved: usize,
    pub improved_clean: usize,
    pub clean_pairs: usize,
    pub mean_reward_delta: f64,
}

fn rank_position(spec: &MarketSpec, player: usize, arm: Option<usize>) -> i64 {
    match arm {
        Some(j) => spec.preference_order(player).iter().position(|&a| a == j).expect("arm in order") as i64,
        None => spec.n_arms() as i64,
    }
}

pub fn pair(spec: &MarketSpec, deviant: usize, honest: &RunRecord, deviating: &RunRecord) -> PairedOutcome {
    let h = honest.summary.final_matching[deviant];
    let d = deviating.summary.final_matching[deviant];
    PairedOutcome {
        seed: honest.seed,
        honest_final_arm: h,
        deviant_final_arm: d,
        final_rank_delta: rank_position(spec, deviant, h) - rank_position(spec, deviant, d),
        final_mu_delta: spec.value(deviant, d) - spec.value(deviant, h),
        reward_delta: deviating.summary.cumulative_reward[deviant] - honest.summary.cumulative_reward[deviant],
        others_regret_delta: (0..spec.n_players())
            .filter(|&i| i != deviant)
            .map(|i| deviating.summary.optimal_regret[i] - honest.summary.optimal_regret[i])
            .collect(),
        coverage_clean: honest.summary.coverage_clean && deviating.summary.coverage_clean,
        probe: deviating.probe,
    }
}

/// Runs the market honestly and with `deviation` on every seed.
pub fn deviation_report(base: &Prepared, deviation: Deviation, seeds: &[u64]) -> Result<DeviationReport> {
    ensure!(deviation.player < base.spec.n_players(), "deviant {} is outside the market", deviation.player);
    let honest = base.with_deviation(None)?;
    let deviant = base.with_deviation(Some(deviation))?;
    let pairs: Vec<PairedOutcome> = seeds
        .par_iter()
        .map(|&s| Ok(pair(&base.spec, deviation.player, &honest.run(s, None)?, &deviant.run(s, None)?)))
        .collect::<Result<_>>()?;
    let improved = pairs.iter().filter(|p| p.final_mu_delta > 0.0).count();
    let improved_clean = pairs.iter().filter(|p| p.coverage_clean && p.final_mu_delta > 0.0).count();
    let clean_pairs = pairs.iter().filter(|p| p.coverage_clean).count();
    let mean_reward_delta = pairs.iter().map(|p| p.reward_delta).sum::<f64>() / pairs.len().max(1) as f64;
    Ok(DeviationReport { deviation, pairs, improved, improved_clean, clean_pairs, mean_reward_delta })
}
