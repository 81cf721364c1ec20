mod common;

use common::{all_labelings, encode, push_null_cycle, random_augmentation, random_graph, random_model};
use memf_core::repar::{messages_from_sigma, sigma_from_messages};
use memf_core::{
    cut_cost, full_residual_from_store, phi_from_theta, reconstruct_edge, Adjacency, FlowDelta, IshikawaCapacities,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn setup(seed: u64, n: usize, extra: usize, l: usize, steps: usize) -> (IshikawaCapacities, IshikawaCapacities) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let edges = random_graph(&mut rng, n, extra);
    let model = random_model(&mut rng, n, edges, l, 6);
    let initial = phi_from_theta(&model).unwrap();
    let mut residual = initial.clone();
    for _ in 0..steps {
        if random_augmentation(&mut rng, &mut residual).is_none() {
            break;
        }
    }
    (initial, residual)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn column_flows_follow_from_the_encoding(seed in any::<u64>(), n in 2usize..5, l in 2usize..6, steps in 0usize..12) {
        let (initial, residual) = setup(seed, n, 2, l, steps);
        let store = encode(&initial, &residual);
        let adj = Adjacency::from_edges(n, initial.edges());
        let mut psi = vec![0; l];
        for i in 0..n {
            store.column_flows(&adj, i, &mut psi);
            for (k, &flow) in psi.iter().enumerate() {
                prop_assert_eq!(initial.column(i)[k] - residual.column(i)[k], flow);
            }
        }
    }

    #[test]
    fn reconstructions_share_cut_costs(seed in any::<u64>(), n in 2usize..4, l in 2usize..5, steps in 0usize..10) {
        let (initial, residual) = setup(seed, n, 1, l, steps);
        let store = encode(&initial, &residual);
        let rebuilt = full_residual_from_store(&initial, &store).unwrap();
        prop_assert!(rebuilt.is_nonnegative());
        for i in 0..n {
            prop_assert_eq!(rebuilt.column(i), residual.column(i));
        }
        for x in all_labelings(n, l) {
            prop_assert_eq!(cut_cost(&rebuilt, &x), cut_cost(&residual, &x));
        }
    }

    #[test]
    fn reconstruction_meets_exit_flows(seed in any::<u64>(), l in 2usize..7, steps in 0usize..10) {
        let (initial, residual) = setup(seed, 2, 0, l, steps);
        let delta = FlowDelta::between(initial.cross(0), residual.cross(0)).unwrap();
        let out = reconstruct_edge(initial.cross(0), &delta.exit_ij(), &delta.exit_ji()).unwrap();
        prop_assert!(out.is_nonnegative());
        let again = FlowDelta::between(initial.cross(0), &out).unwrap();
        prop_assert_eq!(again.exit_ij(), delta.exit_ij());
        prop_assert_eq!(again.exit_ji(), delta.exit_ji());
    }

    #[test]
    fn null_flow_changes_nothing(seed in any::<u64>(), l in 3usize..6, cycles in 1usize..8) {
        let (initial, residual) = setup(seed, 2, 0, l, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut shifted = residual.clone();
        for _ in 0..cycles {
            let before = shifted.clone();
            if !push_null_cycle(&mut rng, &mut shifted, 0) {
                shifted = before;
            }
        }
        prop_assert_eq!(encode(&initial, &shifted), encode(&initial, &residual));
        for x in all_labelings(2, l) {
            prop_assert_eq!(cut_cost(&shifted, &x), cut_cost(&residual, &x));
        }
    }

    #[test]
    fn sigma_message_round_trip(sigma in prop::collection::vec(-50i64..50, 1..8)) {
        prop_assert_eq!(sigma_from_messages(&messages_from_sigma(&sigma)), sigma);
    }

    #[test]
    fn message_sigma_round_trip_in_gauge(tail in prop::collection::vec(-50i64..50, 1..8)) {
        let mut m = vec![0];
        m.extend(tail);
        prop_assert_eq!(messages_from_sigma(&sigma_from_messages(&m)), m);
    }
}

#[test]
fn exit_flows_are_bounded_by_the_store_size() {
    let (initial, residual) = setup(7, 4, 2, 5, 8);
    let store = encode(&initial, &residual);
    let e = initial.edges().len();
    assert_eq!(store.stored_values(), 4 + 2 * 4 * e + 1);
    assert!(initial.stored_values() > store.stored_values());
}
