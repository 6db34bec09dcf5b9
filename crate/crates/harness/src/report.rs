//! Seed-averaged regret curves and summary statistics.

use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

use crate::experiment::RunRecord;

/// Sample mean and (n - 1) standard deviation; the deviation is 0 for a
/// single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Normal-approximation 95% half-width of the mean.
pub fn ci_half_width(values: &[f64]) -> f64 {
    let (_, std) = mean_std(values);
    1.96 * std / (values.len() as f64).sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRow {
    pub round: u64,
    /// Player index, or `total` for the sum over players.
    pub player: String,
    pub mean_optimal_regret: f64,
    pub ci_optimal_regret: f64,
    pub mean_pessimal_regret: f64,
    pub ci_pessimal_regret: f64,
    pub mean_optimal_pseudo_regret: f64,
    pub mean_pessimal_pseudo_regret: f64,
}

/// Mean regret with 95% half-widths at every checkpoint, per player and in
/// total. All records must share a horizon and checkpoint schedule.
pub fn regret_curves(records: &[RunRecord]) -> Vec<CurveRow> {
    let Some(first) = records.first() else { return Vec::new() };
    let n = first.summary.optimal_regret.len();
    let mut rows = Vec::new();
    for (c, cp) in first.summary.checkpoints.iter().enumerate() {
        let column = |pick: &dyn Fn(&RunRecord) -> f64| -> (f64, f64) {
            let v: Vec<f64> = records.iter().map(pick).collect();
            (mean_std(&v).0, ci_half_width(&v))
        };
        for player in 0..=n {
            let at = |v: &[f64]| if player < n { v[player] } else { v.iter().sum() };
            let opt = column(&|r| at(&r.summary.checkpoints[c].optimal));
            let pes = column(&|r| at(&r.summary.checkpoints[c].pessimal));
            let opt_pseudo = column(&|r| at(&r.summary.checkpoints[c].optimal_pseudo));
            let pes_pseudo = column(&|r| at(&r.summary.checkpoints[c].pessimal_pseudo));
            rows.push(CurveRow {
                round: cp.round,
                player: if player < n { player.to_string() } else { "total".into() },
                mean_optimal_regret: opt.0,
                ci_optimal_regret: opt.1,
                mean_pessimal_regret: pes.0,
                ci_pessimal_regret: pes.1,
                mean_optimal_pseudo_regret: opt_pseudo.0,
                mean_pessimal_pseudo_regret: pes_pseudo.0,
            });
        }
    }
    rows
}

pub fn write_curves(path: &Path, rows: &[CurveRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn statistics() {
        assert_eq!(mean_std(&[2.0]), (2.0, 0.0));
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(m, 2.5);
        assert!((s - 1.2909944487358056).abs() < 1e-12);
        assert!((ci_half_width(&[1.0, 2.0, 3.0, 4.0]) - 1.96 * s / 2.0).abs() < 1e-12);
    }
}
