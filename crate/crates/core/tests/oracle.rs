//! Cross-engine equivalence on shared channel realizations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rlnc_core::gfield::Gf65536;
use rlnc_core::netmodel::{ChannelRealization, ErasureNetwork};
use rlnc_core::occupancy::OccupancyEngine;
use rlnc_core::packetized::dense::DenseState;
use rlnc_core::packetized::{coefficient_rng, PacketEngine, PacketizedState, UNBOUNDED_BLOCK};
use rlnc_core::reduction::ReducedEngine;
use rlnc_core::topologies::{line, network1, network2_standin, random_dag};

const ERASURES: [&str; 3] = ["0.2", "0.5", "0.8"];

/// Number of (epoch, subset) pairs where `engine` disagrees with the
/// occupancy rules.
fn mismatches<E: PacketEngine>(mut engine: E, epochs: u64, seed: u64) -> (u64, u64) {
    let net = engine.network().clone();
    let mut occ = OccupancyEngine::new(&net).unwrap();
    let mut channel = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = coefficient_rng(seed);
    let mut r = ChannelRealization::all_failed(net.edges().len());
    let (mut pairs, mut bad) = (0, 0);
    for _ in 0..epochs {
        net.sample_realization_into(&mut channel, &mut r);
        occ.step(&r).unwrap();
        engine.step_epoch(&r, &mut coeffs);
        let m = engine.measure_all();
        pairs += m.len() as u64;
        bad += m.iter().zip(occ.entries()).filter(|(a, b)| a != b).count() as u64;
    }
    (pairs, bad)
}

#[test]
fn quotient_engine_follows_occupancy_rules() {
    let mut gen = ChaCha8Rng::seed_from_u64(21);
    let mut nets: Vec<ErasureNetwork> = (0..24).map(|i| random_dag(&mut gen, 1 + i % 4, 2, &ERASURES, 0.3)).collect();
    nets.extend([network1(1), network1(2), network1(3), network2_standin(1)]);
    let (mut pairs, mut bad) = (0, 0);
    for (i, net) in nets.iter().enumerate() {
        let (p, b) = mismatches(PacketizedState::<Gf65536>::new(net, UNBOUNDED_BLOCK), 2_000, i as u64);
        pairs += p;
        bad += b;
    }
    assert!((bad as f64) <= 10.0 / 65536.0 * pairs as f64, "{bad} of {pairs}");
}

#[test]
fn dense_engine_follows_occupancy_rules() {
    let mut gen = ChaCha8Rng::seed_from_u64(22);
    let (mut pairs, mut bad) = (0, 0);
    for i in 0..16 {
        let net = random_dag(&mut gen, 1 + i % 4, 2, &ERASURES, 0.3);
        // 100 epochs deliver far fewer than 256 packets, so the block
        // never runs dry and the rules (which assume it cannot) apply.
        let (p, b) = mismatches(DenseState::<Gf65536>::new(&net, 256).unwrap(), 100, i as u64);
        pairs += p;
        bad += b;
    }
    assert!((bad as f64) <= 10.0 / 65536.0 * pairs as f64, "{bad} of {pairs}");
}

#[test]
fn reduced_engine_matches_on_lines() {
    let mut gen = ChaCha8Rng::seed_from_u64(23);
    for n in 1..=6 {
        use rand::seq::SliceRandom;
        let eps: Vec<&str> = (0..=n).map(|_| *ERASURES.choose(&mut gen).unwrap()).collect();
        let net = line(&eps, 1 + n as u32 % 3);
        let mut full = OccupancyEngine::new(&net).unwrap();
        let mut reduced = ReducedEngine::new(&net).unwrap();
        assert_eq!(reduced.family().len(), n + 1);
        let mut r = ChannelRealization::all_failed(net.edges().len());
        for _ in 0..20_000 {
            net.sample_realization_into(&mut gen, &mut r);
            assert_eq!(full.step(&r).unwrap(), reduced.step(&r).unwrap());
            for (&s, &v) in reduced.family().subsets().iter().zip(reduced.values()) {
                assert_eq!(full.get(s), v);
            }
        }
    }
}
