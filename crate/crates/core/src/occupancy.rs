//! Occupancy-vector model of finite-buffer RLNC.
//!
//! The state is the vector `b_S` over all relay subsets `S`: how many
//! packets the relays in `S` hold that can be generated neither by the
//! relays outside `S` nor by what the destination already has. Every
//! pairwise innovativeness follows from it via
//! `I(S -> S') = b[S'^c] - b[(S ∪ S')^c]`, and one successful transmission
//! changes it by a rule that only reads the pre-transmission state.
//!
//! Subsets are bitmasks: relay `i` (1-based) is bit `i - 1`.

use std::collections::{HashMap, HashSet};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netmodel::{ChannelRealization, ErasureNetwork, Node};
use crate::stats::{BatchMeans, Estimate, DEFAULT_BATCHES};

/// Relay-subset bitmask.
pub type Subset = u32;

/// Full-subset engines store `2^n` entries.
pub const MAX_RELAYS: usize = 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OccupancyError {
    #[error("negative innovativeness I({from:#b} -> {to:#b}) = {value}")]
    NegativeInnovativeness { from: Subset, to: Subset, value: i64 },
    #[error("{0} relays exceed the full-state limit of {MAX_RELAYS}")]
    TooManyRelays(usize),
    #[error("occupancy vector must have 2^n entries with b_∅ = 0")]
    Malformed,
    #[error("invalid occupancy state: {0}")]
    InvalidState(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupancyVector {
    n: usize,
    entries: Vec<u32>,
}

impl OccupancyVector {
    pub fn zero(n: usize) -> Self {
        OccupancyVector { n, entries: vec![0; 1 << n] }
    }

    pub fn from_entries(n: usize, entries: Vec<u32>) -> Result<Self, OccupancyError> {
        if entries.len() != 1 << n || entries[0] != 0 {
            return Err(OccupancyError::Malformed);
        }
        Ok(OccupancyVector { n, entries })
    }

    pub fn relay_count(&self) -> usize {
        self.n
    }

    pub fn full(&self) -> Subset {
        full_mask(self.n)
    }

    pub fn get(&self, s: Subset) -> u32 {
        self.entries[s as usize]
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn complement(&self, s: Subset) -> Subset {
        !s & self.full()
    }

    /// `I(S -> S') = b[S'^c] - b[(S ∪ S')^c]`.
    pub fn innovativeness(&self, s: Subset, s_prime: Subset) -> Result<u32, OccupancyError> {
        innovativeness(&self.entries, self.full(), s, s_prime)
    }

    /// Checks `b_∅ = 0`, the capacity bound and non-negative innovativeness
    /// between every pair of subsets.
    pub fn check(&self, buffers: &[u32]) -> Result<(), String> {
        if self.entries[0] != 0 {
            return Err("b_∅ != 0".into());
        }
        for s in 0..self.entries.len() as Subset {
            let cap = subset_capacity(buffers, s);
            if self.get(s) > cap {
                return Err(format!("b[{s:#b}] = {} exceeds capacity {cap}", self.get(s)));
            }
            for t in 0..self.entries.len() as Subset {
                self.innovativeness(s, t).map_err(|e| e.to_string())?;
            }
        }
        Ok(())
    }
}

pub fn full_mask(n: usize) -> Subset {
    if n == 32 {
        u32::MAX
    } else {
        (1u32 << n) - 1
    }
}

pub fn subset_capacity(buffers: &[u32], s: Subset) -> u32 {
    buffers.iter().enumerate().filter(|(i, _)| s >> i & 1 == 1).map(|(_, &m)| m).sum()
}

#[inline]
fn innovativeness(b: &[u32], full: Subset, s: Subset, s_prime: Subset) -> Result<u32, OccupancyError> {
    let hi = b[(!s_prime & full) as usize] as i64;
    let lo = b[(!(s | s_prime) & full) as usize] as i64;
    if hi < lo {
        return Err(OccupancyError::NegativeInnovativeness { from: s, to: s_prime, value: hi - lo });
    }
    Ok((hi - lo) as u32)
}

/// Result of one epoch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EpochOutcome {
    pub new_state: OccupancyVector,
    /// Packets innovative for the destination delivered this epoch.
    pub delivered: u32,
}

/// Transmission update rules for one network's buffer sizes.
#[derive(Debug, Clone)]
pub struct OccupancyModel {
    buffers: Vec<u32>,
    full: Subset,
}

impl OccupancyModel {
    pub fn new(network: &ErasureNetwork) -> Result<Self, OccupancyError> {
        let n = network.relay_count();
        if n > MAX_RELAYS {
            return Err(OccupancyError::TooManyRelays(n));
        }
        Ok(OccupancyModel { buffers: network.buffers(), full: full_mask(n) })
    }

    pub fn from_buffers(buffers: Vec<u32>) -> Result<Self, OccupancyError> {
        if buffers.len() > MAX_RELAYS {
            return Err(OccupancyError::TooManyRelays(buffers.len()));
        }
        let full = full_mask(buffers.len());
        Ok(OccupancyModel { buffers, full })
    }

    pub fn relay_count(&self) -> usize {
        self.buffers.len()
    }

    pub fn buffers(&self) -> &[u32] {
        &self.buffers
    }

    pub fn zero_state(&self) -> OccupancyVector {
        OccupancyVector::zero(self.buffers.len())
    }

    /// Relay `i` (zero-based) receives a packet from the source.
    pub fn apply_source_to_relay(&self, b: &OccupancyVector, i: usize) -> Result<OccupancyVector, OccupancyError> {
        let mut out = b.clone();
        self.source_to_relay(&b.entries, i, &mut out.entries)?;
        Ok(out)
    }

    /// Relay `j` receives a packet from relay `i` (both zero-based).
    pub fn apply_relay_to_relay(
        &self,
        b: &OccupancyVector,
        i: usize,
        j: usize,
    ) -> Result<OccupancyVector, OccupancyError> {
        let mut out = b.clone();
        self.relay_to_relay(&b.entries, i, j, &mut out.entries)?;
        Ok(out)
    }

    /// The destination receives a packet from relay `j`. The flag reports
    /// whether the packet was innovative for the destination.
    pub fn apply_relay_to_dest(&self, b: &OccupancyVector, j: usize) -> Result<(OccupancyVector, bool), OccupancyError> {
        let mut out = b.clone();
        let innovative = self.relay_to_dest(&b.entries, j, &mut out.entries)?;
        Ok((out, innovative))
    }

    fn source_to_relay(&self, pre: &[u32], i: usize, post: &mut [u32]) -> Result<(), OccupancyError> {
        let bit = 1 << i;
        let m = self.buffers[i];
        if pre[bit as usize] >= m {
            post.copy_from_slice(pre);
            return Ok(());
        }
        for s in 0..pre.len() as Subset {
            let grow = if s & bit != 0 {
                true
            } else {
                // I({i} -> S^c \ {i}) == m_i
                innovativeness(pre, self.full, bit, !s & self.full & !bit)? == m
            };
            post[s as usize] = pre[s as usize] + grow as u32;
        }
        Ok(())
    }

    fn relay_to_relay(&self, pre: &[u32], i: usize, j: usize, post: &mut [u32]) -> Result<(), OccupancyError> {
        let (bi, bj) = (1 << i, 1 << j);
        let mj = self.buffers[j];
        post.copy_from_slice(pre);
        for s in 0..pre.len() as Subset {
            if s & bi == 0 || s & bj != 0 {
                continue;
            }
            let rest = !s & self.full;
            let receiver_open = innovativeness(pre, self.full, bj, rest & !bj)? < mj;
            let sender_useful = innovativeness(pre, self.full, bi, rest)? > 0;
            if receiver_open && sender_useful {
                post[s as usize] = pre[s as usize] - 1;
            }
        }
        Ok(())
    }

    fn relay_to_dest(&self, pre: &[u32], j: usize, post: &mut [u32]) -> Result<bool, OccupancyError> {
        let bj = 1 << j;
        post.copy_from_slice(pre);
        for s in 0..pre.len() as Subset {
            if s & bj == 0 {
                continue;
            }
            if innovativeness(pre, self.full, bj, !s & self.full)? > 0 {
                post[s as usize] = pre[s as usize] - 1;
            }
        }
        Ok(post[self.full as usize] < pre[self.full as usize])
    }

    /// Applies every successful edge of `realization` in processing order.
    pub fn step_epoch(
        &self,
        network: &ErasureNetwork,
        b: &OccupancyVector,
        realization: &ChannelRealization,
    ) -> Result<EpochOutcome, OccupancyError> {
        let mut state = b.clone();
        let mut scratch = b.entries.clone();
        let delivered = self.step_in_place(network, &mut state.entries, &mut scratch, realization)?;
        Ok(EpochOutcome { new_state: state, delivered })
    }

    pub(crate) fn step_in_place(
        &self,
        network: &ErasureNetwork,
        state: &mut Vec<u32>,
        scratch: &mut Vec<u32>,
        realization: &ChannelRealization,
    ) -> Result<u32, OccupancyError> {
        let mut delivered = 0;
        for (edge, &ok) in network.edges().iter().zip(&realization.success) {
            if !ok {
                continue;
            }
            match (edge.tail, edge.head) {
                (Node::Source, Node::Relay(i)) => self.source_to_relay(state, i, scratch)?,
                (Node::Relay(i), Node::Relay(j)) => self.relay_to_relay(state, i, j, scratch)?,
                (Node::Relay(j), Node::Dest) => {
                    delivered += self.relay_to_dest(state, j, scratch)? as u32;
                }
                (Node::Source, Node::Dest) => {
                    // A fresh source packet is always innovative for d and
                    // leaves every relay-side quantity unchanged.
                    delivered += 1;
                    continue;
                }
                _ => unreachable!("validated networks have no such edge"),
            }
            std::mem::swap(state, scratch);
        }
        Ok(delivered)
    }
}

/// A running occupancy-model simulation.
#[derive(Debug, Clone)]
pub struct OccupancyEngine {
    network: ErasureNetwork,
    model: OccupancyModel,
    state: Vec<u32>,
    scratch: Vec<u32>,
    epoch: u64,
}

impl OccupancyEngine {
    pub fn new(network: &ErasureNetwork) -> Result<Self, OccupancyError> {
        let model = OccupancyModel::new(network)?;
        let state = vec![0; 1 << network.relay_count()];
        Ok(OccupancyEngine { network: network.clone(), model, scratch: state.clone(), state, epoch: 0 })
    }

    /// Engine positioned at `state`, e.g. to resynchronise with a
    /// measurement from the packet-level simulation.
    pub fn from_state(network: &ErasureNetwork, state: OccupancyVector) -> Result<Self, OccupancyError> {
        let mut engine = Self::new(network)?;
        if state.n != network.relay_count() {
            return Err(OccupancyError::InvalidState(format!(
                "state has {} relays, network {}",
                state.n,
                network.relay_count()
            )));
        }
        state.check(&network.buffers()).map_err(OccupancyError::InvalidState)?;
        engine.state = state.entries;
        Ok(engine)
    }

    pub fn model(&self) -> &OccupancyModel {
        &self.model
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    pub fn get(&self, s: Subset) -> u32 {
        self.state[s as usize]
    }

    pub fn state(&self) -> OccupancyVector {
        OccupancyVector { n: self.network.relay_count(), entries: self.state.clone() }
    }

    pub fn entries(&self) -> &[u32] {
        &self.state
    }

    pub fn step(&mut self, realization: &ChannelRealization) -> Result<u32, OccupancyError> {
        let d = self.model.step_in_place(&self.network, &mut self.state, &mut self.scratch, realization)?;
        self.epoch += 1;
        Ok(d)
    }
}

/// Epochs discarded before time averages and censuses: `max(10^4, 50 Σ m_i)`.
pub fn warmup_epochs(network: &ErasureNetwork) -> u64 {
    let total: u64 = network.buffers().iter().map(|&m| m as u64).sum();
    (50 * total).max(10_000)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputEstimate {
    pub estimate: Estimate,
    pub warmup: u64,
    pub epochs: u64,
}

/// Time-average deliveries per epoch over `epochs` measured epochs that
/// follow the warmup, with a batch-means 95% interval.
pub fn monte_carlo_throughput(
    network: &ErasureNetwork,
    epochs: u64,
    seed: u64,
) -> Result<ThroughputEstimate, OccupancyError> {
    let mut engine = OccupancyEngine::new(network)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = warmup_epochs(network);
    let mut r = ChannelRealization::all_failed(network.edges().len());
    for _ in 0..warmup {
        network.sample_realization_into(&mut rng, &mut r);
        engine.step(&r)?;
    }
    let mut acc = BatchMeans::new(epochs, DEFAULT_BATCHES);
    for _ in 0..epochs {
        network.sample_realization_into(&mut rng, &mut r);
        acc.push(engine.step(&r)? as f64);
    }
    Ok(ThroughputEstimate { estimate: acc.finish(), warmup, epochs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockRun {
    pub throughput: f64,
    pub epochs_used: u64,
    /// Batch-means interval over the per-epoch deliveries after warmup.
    pub estimate: Estimate,
}

/// Runs until `k` innovative packets reached the destination and reports
/// `k / τ_k`, counting the warmup transient.
pub fn block_throughput(network: &ErasureNetwork, k: u64, seed: u64) -> Result<BlockRun, crate::RunError> {
    if network.min_cut_value() == 0.0 {
        return Err(crate::RunError::NonTerminating);
    }
    let mut engine = OccupancyEngine::new(network)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = warmup_epochs(network);
    let guard = epoch_guard(network, k);
    let expected = (k as f64 / network.min_cut_value()) as u64;
    let mut acc = BatchMeans::new(expected.saturating_sub(warmup).max(DEFAULT_BATCHES as u64), DEFAULT_BATCHES);
    let mut r = ChannelRealization::all_failed(network.edges().len());
    let mut delivered = 0u64;
    while delivered < k {
        if engine.epoch() >= guard {
            return Err(crate::RunError::NonTerminating);
        }
        network.sample_realization_into(&mut rng, &mut r);
        let d = engine.step(&r)?;
        delivered += d as u64;
        if engine.epoch() > warmup {
            acc.push(d as f64);
        }
    }
    Ok(BlockRun { throughput: k as f64 / engine.epoch() as f64, epochs_used: engine.epoch(), estimate: acc.finish() })
}

/// Hard cap on epochs for block runs: far beyond any plausible `τ_k`.
pub(crate) fn epoch_guard(network: &ErasureNetwork, k: u64) -> u64 {
    let rate = network.min_cut_value();
    ((k as f64 / rate) * 1000.0) as u64 + 10_000_000
}

#[derive(Debug, Clone)]
pub struct Census {
    /// Distinct states seen after warmup.
    pub visited: usize,
    /// Distinct states seen only during warmup.
    pub transient_only: usize,
    /// `(m + 1)^(2^n - 1)` with `m` the largest buffer.
    pub upper_bound: f64,
    pub frequencies: HashMap<OccupancyVector, u64>,
    pub epochs: u64,
}

/// Counts the distinct occupancy vectors visited over `epochs` post-warmup
/// epochs of one seeded run.
pub fn state_census(network: &ErasureNetwork, epochs: u64, seed: u64) -> Result<Census, OccupancyError> {
    let mut engine = OccupancyEngine::new(network)?;
    let n = network.relay_count();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = warmup_epochs(network);
    let mut r = ChannelRealization::all_failed(network.edges().len());
    let mut early: HashSet<Vec<u32>> = HashSet::new();
    early.insert(engine.entries().to_vec());
    for _ in 0..warmup {
        network.sample_realization_into(&mut rng, &mut r);
        engine.step(&r)?;
        if !early.contains(engine.entries()) {
            early.insert(engine.entries().to_vec());
        }
    }
    let mut freq: HashMap<Vec<u32>, u64> = HashMap::new();
    for _ in 0..epochs {
        network.sample_realization_into(&mut rng, &mut r);
        engine.step(&r)?;
        match freq.get_mut(engine.entries()) {
            Some(c) => *c += 1,
            None => {
                freq.insert(engine.entries().to_vec(), 1);
            }
        }
    }
    let transient_only = early.iter().filter(|s| !freq.contains_key(*s)).count();
    let m = network.buffers().into_iter().max().unwrap_or(0) as f64;
    Ok(Census {
        visited: freq.len(),
        transient_only,
        upper_bound: (m + 1.0).powi(((1u64 << n) - 1) as i32),
        frequencies: freq.into_iter().map(|(k, v)| (OccupancyVector { n, entries: k }, v)).collect(),
        epochs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topologies;

    fn vec3(b1: u32, b2: u32, b12: u32) -> OccupancyVector {
        OccupancyVector::from_entries(2, vec![0, b1, b2, b12]).unwrap()
    }

    fn line2() -> OccupancyModel {
        OccupancyModel::from_buffers(vec![1, 1]).unwrap()
    }

    const R1: usize = 0;
    const R2: usize = 1;
    const S1: Subset = 0b01;
    const S2: Subset = 0b10;

    #[test]
    fn innovativeness_examples() {
        let b = vec3(1, 0, 1);
        for s in 0..4 {
            assert_eq!(b.innovativeness(s, s).unwrap(), 0);
            assert_eq!(b.innovativeness(s, 0).unwrap(), b.get(3) - b.get(b.complement(s)));
        }
        assert_eq!(b.innovativeness(S1, S2).unwrap(), 1);
        let bad = vec3(2, 0, 1);
        assert!(matches!(bad.innovativeness(S2, 0), Err(OccupancyError::NegativeInnovativeness { .. })));
    }

    #[test]
    fn source_to_relay_examples() {
        let m = line2();
        assert_eq!(m.apply_source_to_relay(&m.zero_state(), R1).unwrap(), vec3(1, 0, 1));
        let full = vec3(1, 0, 1);
        assert_eq!(m.apply_source_to_relay(&full, R1).unwrap(), full);
        // b_{1} = 0 < 1 and I({1} -> ∅) = 1 = m_1, so S = {2} grows too.
        assert_eq!(m.apply_source_to_relay(&vec3(0, 0, 1), R1).unwrap(), vec3(1, 1, 2));
    }

    #[test]
    fn relay_to_relay_examples() {
        let m = line2();
        assert_eq!(m.apply_relay_to_relay(&m.zero_state(), R1, R2).unwrap(), m.zero_state());
        assert_eq!(m.apply_relay_to_relay(&vec3(1, 0, 1), R1, R2).unwrap(), vec3(0, 0, 1));
    }

    #[test]
    fn relay_to_dest_examples() {
        let m = line2();
        let (b, innov) = m.apply_relay_to_dest(&m.zero_state(), R2).unwrap();
        assert_eq!((b, innov), (m.zero_state(), false));
        let (b, innov) = m.apply_relay_to_dest(&vec3(0, 0, 1), R2).unwrap();
        assert_eq!((b, innov), (vec3(0, 0, 0), true));
        // Relay 2 holds nothing innovative w.r.t. relay 1.
        let (b, innov) = m.apply_relay_to_dest(&vec3(1, 0, 1), R2).unwrap();
        assert_eq!((b, innov), (vec3(1, 0, 1), false));
    }

    #[test]
    fn epoch_examples_on_line() {
        let net = topologies::line(&["0", "0", "0"], 1);
        let m = OccupancyModel::new(&net).unwrap();
        let e = net.edges().len();
        let idle = m.step_epoch(&net, &vec3(1, 0, 1), &ChannelRealization::all_failed(e)).unwrap();
        assert_eq!((idle.new_state, idle.delivered), (vec3(1, 0, 1), 0));

        let all = ChannelRealization::all_success(e);
        let first = m.step_epoch(&net, &m.zero_state(), &all).unwrap();
        assert_eq!((first.new_state.clone(), first.delivered), (vec3(1, 0, 1), 0));

        let mut b = first.new_state;
        let mut deliveries = vec![first.delivered];
        for _ in 0..10 {
            let o = m.step_epoch(&net, &b, &all).unwrap();
            deliveries.push(o.delivered);
            b = o.new_state;
        }
        assert_eq!(&deliveries[..2], &[0, 0]);
        assert!(deliveries[2..].iter().all(|&d| d == 1), "{deliveries:?}");
    }

    #[test]
    fn fully_lossy_source_cut_delivers_nothing() {
        let net = topologies::line(&["1", "0.2", "0.3"], 2);
        let est = monte_carlo_throughput(&net, 20_000, 1).unwrap();
        assert_eq!(est.estimate.mean, 0.0);
    }

    #[test]
    fn two_hop_monte_carlo_is_one_third() {
        let net = topologies::line(&["0.5", "0.5"], 1);
        let est = monte_carlo_throughput(&net, 400_000, 7).unwrap();
        assert!(est.estimate.contains(1.0 / 3.0), "{:?}", est.estimate);
    }

    #[test]
    fn single_relay_census_has_two_states() {
        let net = topologies::line(&["0.5", "0.5"], 1);
        let c = state_census(&net, 100_000, 3).unwrap();
        assert_eq!(c.visited, 2);
    }

    #[test]
    fn too_many_relays_rejected() {
        assert_eq!(
            OccupancyModel::from_buffers(vec![1; MAX_RELAYS + 1]).unwrap_err(),
            OccupancyError::TooManyRelays(MAX_RELAYS + 1)
        );
    }
}
