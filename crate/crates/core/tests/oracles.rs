use matchbandit_core::da::{da_arm_proposing, da_player_proposing};
use matchbandit_core::matching::{enumerate_stable_matchings, is_stable};
use matchbandit_core::{ChoiceFunction, IndexSet, MarketSpec, RewardModel};
use proptest::prelude::*;

/// Random responsive market: distinct μ rows, permuted arm rankings.
fn responsive_market(max_n: usize, max_k: usize, max_cap: usize) -> impl Strategy<Value = MarketSpec> {
    (1..=max_n, 1..=max_k).prop_flat_map(move |(n, k)| {
        let row = Just((1..=k).map(|v| v as f64 / k as f64).collect::<Vec<_>>()).prop_shuffle();
        let ranking = Just((0..n).collect::<Vec<_>>()).prop_shuffle();
        (
            proptest::collection::vec(row, n),
            proptest::collection::vec((ranking, 1..=max_cap), k),
        )
            .prop_map(|(mu, arms)| {
                let arms = arms.into_iter().map(|(r, c)| ChoiceFunction::responsive(r, c)).collect();
                MarketSpec::new(mu, arms, 1, RewardModel::Bernoulli).unwrap()
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn deferred_acceptance_hits_both_ends_of_the_stable_set(spec in responsive_market(6, 4, 3)) {
        let stable = enumerate_stable_matchings(&spec).unwrap();
        let best = da_player_proposing(&spec);
        let worst = da_arm_proposing(&spec);
        prop_assert!(stable.contains(&best.matching));
        prop_assert!(stable.contains(&worst.matching));
        for i in 0..spec.n_players() {
            prop_assert_eq!(spec.value(i, best.matching.arm_of(i)), spec.value(i, stable.best[i]));
            prop_assert_eq!(spec.value(i, worst.matching.arm_of(i)), spec.value(i, stable.worst[i]));
        }
    }

    #[test]
    fn player_proposing_respects_step_and_rejection_bounds(spec in responsive_market(6, 4, 3)) {
        let (n, k) = (spec.n_players(), spec.n_arms());
        for trace in [da_player_proposing(&spec), da_arm_proposing(&spec)] {
            prop_assert!(trace.rejection_count <= n * k);
        }
        let trace = da_player_proposing(&spec);
        prop_assert!(trace.step_count <= (n * n).min(n * k));
        prop_assert!(is_stable(&trace.matching, &spec));
        for i in 0..n {
            if let Some(j) = trace.matching.arm_of(i) {
                let rank = spec.preference_order(i).iter().position(|&a| a == j).unwrap();
                prop_assert!(rank < n.min(k));
            }
        }
    }

    #[test]
    fn deferred_acceptance_is_deterministic(spec in responsive_market(5, 3, 2)) {
        prop_assert_eq!(da_player_proposing(&spec), da_player_proposing(&spec));
        prop_assert_eq!(da_arm_proposing(&spec), da_arm_proposing(&spec));
    }

    #[test]
    fn responsive_choice_is_substitutable_and_sized(spec in responsive_market(8, 2, 4), bits in 0u64..256) {
        let n = spec.n_players();
        let offered = IndexSet::from_bits(bits).intersection(IndexSet::full(n));
        for arm in spec.arms() {
            prop_assert!(arm.check_substitutable(n).unwrap().is_none());
            let chosen = arm.choose(offered);
            prop_assert!(chosen.is_subset_of(offered));
            prop_assert_eq!(chosen.len(), offered.len().min(arm.capacity().unwrap()));
        }
    }
}
