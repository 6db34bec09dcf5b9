//! Offline audit of a market: oracle cross-checks and substitutability.

use matchbandit_core::choice::SUBSTITUTABILITY_MAX_PLAYERS;
use matchbandit_core::matching::is_stable;
use matchbandit_core::referee::{Disagreement, Referee, RefereeSource};
use matchbandit_core::MarketSpec;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArmAudit {
    pub arm: usize,
    pub responsive: bool,
    /// `None` when the market is too large to enumerate offers.
    pub substitutable: Option<bool>,
    /// `(offer, kept, removed)` when substitutability fails.
    pub witness: Option<(Vec<usize>, usize, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub players: usize,
    pub arms: usize,
    pub min_gap: f64,
    pub responsive: bool,
    pub etda_precondition: bool,
    pub aetda_precondition: bool,
    pub oda_precondition: bool,
    pub arm_audit: Vec<ArmAudit>,
    pub player_optimal: Vec<Option<usize>>,
    pub player_pessimal: Vec<Option<usize>>,
    pub da_steps: usize,
    pub da_rejections: usize,
    pub step_bound_ok: bool,
    pub rejection_bound_ok: bool,
    pub da_stable: bool,
    pub referee: RefereeSource,
    pub stable_matchings: Option<usize>,
    pub never_stably_matched: Vec<usize>,
    pub disagreements: Vec<Disagreement>,
    pub ok: bool,
}

pub fn verify(spec: &MarketSpec) -> VerifyReport {
    let (n, k) = (spec.n_players(), spec.n_arms());
    let arm_audit: Vec<ArmAudit> = spec
        .arms()
        .iter()
        .enumerate()
        .map(|(arm, ch)| {
            let (substitutable, witness) = match ch.check_substitutable(n) {
                Ok(None) => (Some(true), None),
                Ok(Some(w)) => (Some(false), Some((w.offer.iter().collect(), w.kept, w.removed))),
                Err(_) => (ch.is_responsive().then_some(true), None),
            };
            ArmAudit { arm, responsive: ch.is_responsive(), substitutable, witness }
        })
        .collect();
    let pre = spec.preconditions();
    let referee = Referee::new(spec);
    let po = &referee.player_proposing;
    let ap = &referee.arm_proposing;
    let step_bound_ok = !pre.responsive || po.step_count <= (n * n).min(n * k);
    let rejection_bound_ok = po.rejection_count <= n * k && ap.rejection_count <= n * k;
    let da_stable = is_stable(&po.matching, spec) && is_stable(&ap.matching, spec);
    let oda_precondition = n <= SUBSTITUTABILITY_MAX_PLAYERS && arm_audit.iter().all(|a| a.substitutable == Some(true));
    let never_stably_matched = referee.stable_set.as_ref().map(|s| s.never_matched().iter().collect()).unwrap_or_default();
    let ok = referee.agrees() && step_bound_ok && rejection_bound_ok && da_stable;
    VerifyReport {
        players: n,
        arms: k,
        min_gap: spec.gap_profile().min_gap,
        responsive: pre.responsive,
        etda_precondition: pre.etda,
        aetda_precondition: pre.aetda,
        oda_precondition,
        arm_audit,
        player_optimal: po.matching.assignment().to_vec(),
        player_pessimal: ap.matching.assignment().to_vec(),
        da_steps: po.step_count,
        da_rejections: po.rejection_count,
        step_bound_ok,
        rejection_bound_ok,
        da_stable,
        referee: referee.source,
        stable_matchings: referee.stable_set.as_ref().map(|s| s.matchings.len()),
        never_stably_matched,
        disagreements: referee.disagreements.clone(),
        ok,
    }
}
