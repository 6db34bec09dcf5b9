//! Sweeps of one market parameter with everything else held fixed.

use std::str::FromStr;

use anyhow::{bail, Result};
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, MarketSource};
use crate::experiment::{Prepared, RunRecord};
use crate::report::mean_std;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Horizon,
    Delta,
    Players,
    Arms,
}

impl FromStr for Axis {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "T" | "horizon" => Axis::Horizon,
            "delta" | "Delta" => Axis::Delta,
            "N" | "players" => Axis::Players,
            "K" | "arms" => Axis::Arms,
            _ => bail!("unknown sweep axis {s:?} (expected T, delta, N or K)"),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub value: f64,
    pub runs: usize,
    /// Total regret over players against the algorithm's target matching.
    pub mean_regret: f64,
    pub std_regret: f64,
    /// The same against matched arms' means instead of drawn rewards.
    pub mean_pseudo_regret: f64,
    pub std_pseudo_regret: f64,
    /// Fraction of runs ending at the target matching.
    pub convergence_rate: f64,
    pub coverage_clean_rate: f64,
}

/// Total regret of a run against the target its algorithm aims for.
pub fn target_regret(record: &RunRecord, pessimal: bool) -> f64 {
    if pessimal {
        record.summary.total_pessimal_regret()
    } else {
        record.summary.total_optimal_regret()
    }
}

pub fn target_pseudo_regret(record: &RunRecord, pessimal: bool) -> f64 {
    if pessimal {
        record.summary.total_pessimal_pseudo_regret()
    } else {
        record.summary.total_optimal_pseudo_regret()
    }
}

impl SweepRow {
    pub fn from_records(value: f64, records: &[RunRecord], pessimal: bool) -> Self {
        let regrets: Vec<f64> = records.iter().map(|r| target_regret(r, pessimal)).collect();
        let (mean_regret, std_regret) = mean_std(&regrets);
        let pseudo: Vec<f64> = records.iter().map(|r| target_pseudo_regret(r, pessimal)).collect();
        let (mean_pseudo_regret, std_pseudo_regret) = mean_std(&pseudo);
        let frac = |f: &dyn Fn(&RunRecord) -> bool| records.iter().filter(|r| f(r)).count() as f64 / records.len() as f64;
        SweepRow {
            value,
            runs: records.len(),
            mean_regret,
            std_regret,
            mean_pseudo_regret,
            std_pseudo_regret,
            convergence_rate: frac(&|r| r.reached_target),
            coverage_clean_rate: frac(&|r| r.summary.coverage_clean),
        }
    }
}

/// The base config with one axis set to `value`.
pub fn at_point(base: &ExperimentConfig, axis: Axis, value: f64) -> Result<ExperimentConfig> {
    let mut config = base.clone();
    let count = || -> Result<usize> {
        if value < 1.0 || value.fract() != 0.0 {
            bail!("axis value {value} is not a positive integer");
        }
        Ok(value as usize)
    };
    match (axis, &mut config.market) {
        (Axis::Horizon, _) => config.horizon = Some(count()? as u64),
        (Axis::Delta, MarketSource::Generate(g)) => g.delta_floor = value,
        (Axis::Delta, MarketSource::Ladder(l)) => l.delta = value,
        (Axis::Players, MarketSource::Generate(g)) => g.players = count()?,
        (Axis::Players, MarketSource::Ladder(l)) => l.players = count()?,
        (Axis::Arms, MarketSource::Generate(g)) => g.arms = count()?,
        (Axis::Arms, MarketSource::Ladder(l)) => l.arms = count()?,
        (_, MarketSource::File(_)) => bail!("only the horizon can be swept over a market file"),
    }
    Ok(config)
}

/// One row per axis value, in the order given.
pub fn sweep(base: &ExperimentConfig, axis: Axis, values: &[f64]) -> Result<Vec<SweepRow>> {
    values
        .iter()
        .map(|&v| {
            let config = at_point(base, axis, v)?;
            let records = Prepared::from_config(&config)?.run_seeds(&config.seeds)?;
            Ok(SweepRow::from_records(v, &records, config.algorithm.targets_pessimal()))
        })
        .collect()
}

/// Least-squares fit `y = a + b x`, returning `(a, b, r_squared)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (my - slope * mx, slope, r2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_has_unit_r_squared() {
        let (a, b, r2) = linear_fit(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0]);
        assert!((a - 1.0).abs() < 1e-12 && (b - 2.0).abs() < 1e-12 && (r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn axis_names() {
        assert_eq!("T".parse::<Axis>().unwrap(), Axis::Horizon);
        assert_eq!("delta".parse::<Axis>().unwrap(), Axis::Delta);
        assert!("Q".parse::<Axis>().is_err());
    }
}
