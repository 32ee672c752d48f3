//! Property tests against independent brute-force oracles.

use num_rational::Ratio;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlnc_core::chain::build_chain;
use rlnc_core::netmodel::{ErasureNetwork, Node};
use rlnc_core::occupancy::{full_mask, subset_capacity, OccupancyModel};
use rlnc_core::topologies::{random_dag, random_layered};

const ERASURES: [&str; 6] = ["0", "0.1", "0.25", "0.5", "0.75", "1"];

/// Minimum over all s–d cuts, enumerating which relays sit on the source side.
fn brute_force_min_cut(net: &ErasureNetwork) -> Ratio<i128> {
    let n = net.relay_count();
    let side = |node: Node, mask: u32| match node {
        Node::Source => true,
        Node::Dest => false,
        Node::Relay(i) => mask >> i & 1 == 1,
    };
    (0..=full_mask(n))
        .map(|mask| {
            net.edges()
                .iter()
                .filter(|e| side(e.tail, mask) && !side(e.head, mask))
                .map(|e| Ratio::from_integer(1) - e.erasure.as_ratio())
                .sum::<Ratio<i128>>()
        })
        .min()
        .unwrap()
}

fn network(seed: u64, n: usize, layered: bool) -> ErasureNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if layered {
        random_layered(&mut rng, n, 3, &ERASURES)
    } else {
        random_dag(&mut rng, n, 3, &ERASURES, 0.35)
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn max_flow_equals_min_cut(seed in any::<u64>(), n in 1usize..=7, layered in any::<bool>()) {
        let net = network(seed, n, layered);
        prop_assert_eq!(net.min_cut_capacity(), brute_force_min_cut(&net));
    }

    #[test]
    fn canonical_form_round_trips(seed in any::<u64>(), n in 1usize..=7) {
        let net = network(seed, n, false);
        prop_assert_eq!(&ErasureNetwork::validate(&net.to_spec()).unwrap(), &net);
        prop_assert_eq!(&ErasureNetwork::from_json(&net.to_json()).unwrap(), &net);
    }

    #[test]
    fn processing_order_is_reverse_topological(seed in any::<u64>(), n in 1usize..=7) {
        let net = network(seed, n, false);
        // A node never sends after it has received, so in-order application
        // never forwards content that arrived in the same epoch.
        let mut received = std::collections::HashSet::new();
        for e in net.edges() {
            prop_assert!(!received.contains(&e.tail));
            received.insert(e.head);
        }
    }

    /// Every single-link update keeps the state within capacity, monotone
    /// in the subset and changes each entry by at most one.
    #[test]
    fn single_link_updates_stay_valid(seed in any::<u64>(), n in 1usize..=5, steps in 1usize..200) {
        let net = network(seed, n, false);
        let model = OccupancyModel::new(&net).unwrap();
        let buffers = net.buffers();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut b = model.zero_state();
        for _ in 0..steps {
            use rand::Rng;
            let e = net.edges()[rng.gen_range(0..net.edges().len())];
            let next = match (e.tail, e.head) {
                (Node::Source, Node::Relay(i)) => model.apply_source_to_relay(&b, i).unwrap(),
                (Node::Relay(i), Node::Relay(j)) => model.apply_relay_to_relay(&b, i, j).unwrap(),
                (Node::Relay(j), Node::Dest) => model.apply_relay_to_dest(&b, j).unwrap().0,
                _ => b.clone(),
            };
            prop_assert!(next.check(&buffers).is_ok());
            for s in 0..=full_mask(n) {
                prop_assert!(next.get(s) <= subset_capacity(&buffers, s));
                prop_assert!((next.get(s) as i64 - b.get(s) as i64).abs() <= 1);
            }
            b = next;
        }
    }
}

#[test]
fn chain_rows_are_stochastic_on_random_networks() {
    for seed in 0..12 {
        let net = network(seed, 1 + seed as usize % 3, seed % 2 == 0).with_uniform_buffer(1);
        if net.edges().len() > 8 {
            continue;
        }
        let chain = build_chain(&net, 20_000).unwrap();
        assert!(chain.max_row_error() < 1e-12, "seed {seed}");
        assert!(chain.recurrent_count() <= chain.reachable_count());
    }
}
