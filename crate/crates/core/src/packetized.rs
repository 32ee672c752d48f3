//! Packet-level RLNC simulation over GF(2^w).
//!
//! Every relay buffer slot holds a coefficient vector over the source
//! packets. In each epoch, every node first encodes one packet per outgoing
//! link from its start-of-epoch buffer; the successful packets are then
//! received in processing order. A relay folds a received packet `E` into
//! every slot (`P_l += r_l E` with `r` uniform), the destination adds it to
//! its decoding matrix.
//!
//! [`PacketizedState`] works in the quotient space `F^k / span(dest)`: a
//! packet that reaches the destination is divided out of every buffer, and
//! source packets introduce a new coordinate whenever they fall outside the
//! span of the current coordinates, with the exact probability for a
//! uniform vector over the remaining `k - rank(dest)` dimensions. Ranks of
//! relay contents modulo the destination are invariant under this change
//! of basis, so occupancies match a literal `k`-column simulation, while
//! memory and time scale with the total buffer size instead of `k`.
//! [`dense::DenseState`] is the literal simulation.

pub mod dense;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::gfield::{axpy, random_vector, CoeffMatrix, FieldElement};
use crate::netmodel::{ChannelRealization, ErasureNetwork, Node};
use crate::occupancy::{epoch_guard, full_mask, warmup_epochs, BlockRun, Subset, ThroughputEstimate};
use crate::stats::{BatchMeans, DEFAULT_BATCHES};
use crate::RunError;

/// Block size used when the source should never run dry.
pub const UNBOUNDED_BLOCK: u64 = u64::MAX;

/// Common surface of the packet-level engines.
pub trait PacketEngine {
    /// Runs one epoch; returns the rank gained by the destination.
    fn step_epoch<R: Rng + ?Sized>(&mut self, realization: &ChannelRealization, rng: &mut R) -> u32;
    /// `b_S = dim V(S) - dim(V(S) ∩ V(S^c ∪ {d}))`.
    fn measure_occupancy(&self, s: Subset) -> u32;
    fn dest_rank(&self) -> u64;
    fn epoch(&self) -> u64;
    fn network(&self) -> &ErasureNetwork;

    /// Occupancy vector for every subset, indexed by mask.
    fn measure_all(&self) -> Vec<u32> {
        (0..=full_mask(self.network().relay_count())).map(|s| self.measure_occupancy(s)).collect()
    }
}

#[derive(Debug, Clone)]
pub struct PacketizedState<F> {
    network: ErasureNetwork,
    block_size: u64,
    dest_rank: u64,
    epoch: u64,
    /// Current number of local coordinates.
    coords: usize,
    /// `buffers[relay][slot]`, each of length `coords`.
    buffers: Vec<Vec<Vec<F>>>,
    total_slots: usize,
}

impl<F: FieldElement> PacketizedState<F> {
    /// Fresh state for a block of `k` source packets: all buffers zero,
    /// nothing delivered.
    pub fn new(network: &ErasureNetwork, k: u64) -> Self {
        assert!(k >= 1, "block size must be positive");
        let buffers: Vec<Vec<Vec<F>>> =
            network.relays().iter().map(|r| vec![Vec::new(); r.buffer as usize]).collect();
        let total_slots = buffers.iter().map(Vec::len).sum();
        PacketizedState { network: network.clone(), block_size: k, dest_rank: 0, epoch: 0, coords: 0, buffers, total_slots }
    }

    pub fn block_size(&self) -> u64 {
        self.block_size
    }

    /// Number of local coordinates currently in use.
    pub fn coordinate_count(&self) -> usize {
        self.coords
    }

    /// Coefficient vectors of relay `i`'s slots in local coordinates.
    pub fn buffer(&self, relay: usize) -> &[Vec<F>] {
        &self.buffers[relay]
    }

    fn rows_of(&self, s: Subset) -> CoeffMatrix<F> {
        let rows = self
            .buffers
            .iter()
            .enumerate()
            .filter(|(i, _)| s >> i & 1 == 1)
            .flat_map(|(_, slots)| slots.iter());
        CoeffMatrix::from_rows(self.coords, rows)
    }

    /// Whether a uniform source vector has a component outside the span
    /// of the current coordinates.
    fn source_is_fresh<R: Rng + ?Sized>(&self, rng: &mut R) -> bool {
        let remaining = self.block_size - self.dest_rank;
        let outside = remaining.saturating_sub(self.coords as u64);
        (0..outside).any(|_| !F::random(rng).is_zero())
    }

    fn add_coordinate(&mut self, pending: &mut [(usize, Vec<F>)]) {
        self.coords += 1;
        for row in self.buffers.iter_mut().flatten() {
            row.push(F::ZERO);
        }
        for (_, v) in pending.iter_mut() {
            v.push(F::ZERO);
        }
    }

    fn encode<R: Rng + ?Sized>(&self, relay: usize, rng: &mut R) -> Vec<F> {
        let mut out = vec![F::ZERO; self.coords];
        for row in &self.buffers[relay] {
            axpy(&mut out, F::random(rng), row);
        }
        out
    }

    /// Removes the columns in `dead` (all zero by construction).
    fn drop_columns(&mut self, dead: &mut [usize]) {
        dead.sort_unstable();
        let keep: Vec<usize> = (0..self.coords).filter(|c| dead.binary_search(c).is_err()).collect();
        for row in self.buffers.iter_mut().flatten() {
            debug_assert!(dead.iter().all(|&c| row[c].is_zero()));
            *row = keep.iter().map(|&c| row[c]).collect();
        }
        self.coords = keep.len();
    }

    /// Re-expresses all rows in the coordinates of their own span. For a
    /// reduced echelon basis of that span, a vector's coordinates are its
    /// entries at the pivot columns, so restriction is the change of basis.
    fn compact(&mut self) {
        let mut all = CoeffMatrix::from_rows(self.coords, self.buffers.iter().flatten());
        let pivots = all.eliminate_in_place();
        for row in self.buffers.iter_mut().flatten() {
            *row = pivots.iter().map(|&c| row[c]).collect();
        }
        self.coords = pivots.len();
    }
}

impl<F: FieldElement> PacketEngine for PacketizedState<F> {
    fn step_epoch<R: Rng + ?Sized>(&mut self, realization: &ChannelRealization, rng: &mut R) -> u32 {
        // Phase 1: encode from start-of-epoch buffers.
        let mut pending: Vec<(usize, Vec<F>)> = Vec::new();
        for idx in 0..realization.success.len() {
            if !realization.success[idx] {
                continue;
            }
            let packet = match self.network.edges()[idx].tail {
                Node::Source => {
                    let mut v = random_vector(self.coords, rng);
                    if self.source_is_fresh(rng) {
                        self.add_coordinate(&mut pending);
                        v.push(F::ONE);
                    }
                    v
                }
                Node::Relay(i) => self.encode(i, rng),
                Node::Dest => unreachable!("no edge leaves the destination"),
            };
            pending.push((idx, packet));
        }

        // Phase 2: receive in processing order.
        let mut delivered = 0;
        let mut dead = Vec::new();
        for k in 0..pending.len() {
            let (idx, ref packet) = pending[k];
            match self.network.edges()[idx].head {
                Node::Relay(j) => {
                    let packet = packet.clone();
                    for slot in &mut self.buffers[j] {
                        let r = F::random(rng);
                        axpy(slot, r, &packet);
                    }
                }
                Node::Dest => {
                    let Some(p) = packet.iter().position(|x| !x.is_zero()) else {
                        continue;
                    };
                    let packet = packet.clone();
                    let inv = packet[p].inv().expect("nonzero pivot");
                    for row in self.buffers.iter_mut().flatten() {
                        let f = row[p] * inv;
                        axpy(row, f, &packet);
                    }
                    for (_, later) in pending[k + 1..].iter_mut() {
                        let f = later[p] * inv;
                        axpy(later, f, &packet);
                    }
                    dead.push(p);
                    self.dest_rank += 1;
                    delivered += 1;
                }
                Node::Source => unreachable!("no edge enters the source"),
            }
        }
        if !dead.is_empty() {
            self.drop_columns(&mut dead);
        }
        if self.coords > 2 * self.total_slots + 16 {
            self.compact();
        }
        self.epoch += 1;
        delivered
    }

    fn measure_occupancy(&self, s: Subset) -> u32 {
        if s == 0 {
            return 0;
        }
        let full = full_mask(self.network.relay_count());
        (self.rows_of(full).rank() - self.rows_of(!s & full).rank()) as u32
    }

    fn dest_rank(&self) -> u64 {
        self.dest_rank
    }

    fn epoch(&self) -> u64 {
        self.epoch
    }

    fn network(&self) -> &ErasureNetwork {
        &self.network
    }
}

/// Coefficient randomness is drawn from stream 1 of the seed, channel
/// realizations from stream 0 (the same stream the occupancy engine uses).
pub fn coefficient_rng(seed: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    rng
}

/// Sends a block of `k` packets and reports `k / τ_k`.
pub fn run_throughput<F: FieldElement>(network: &ErasureNetwork, k: u64, seed: u64) -> Result<BlockRun, RunError> {
    if network.min_cut_value() == 0.0 {
        return Err(RunError::NonTerminating);
    }
    run_block(PacketizedState::<F>::new(network, k), k, seed)
}

/// [`run_throughput`] on the literal `k`-column engine.
pub fn run_throughput_dense<F: FieldElement>(network: &ErasureNetwork, k: u64, seed: u64) -> Result<BlockRun, RunError> {
    if network.min_cut_value() == 0.0 {
        return Err(RunError::NonTerminating);
    }
    run_block(dense::DenseState::<F>::new(network, k)?, k, seed)
}

/// Steps `state` until its destination holds rank `k`.
pub fn run_block<E: PacketEngine>(mut state: E, k: u64, seed: u64) -> Result<BlockRun, RunError> {
    let network = state.network().clone();
    if network.min_cut_value() == 0.0 {
        return Err(RunError::NonTerminating);
    }
    let mut channel = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = coefficient_rng(seed);
    let warmup = warmup_epochs(&network);
    let guard = epoch_guard(&network, k);
    let expected = (k as f64 / network.min_cut_value()) as u64;
    let mut acc = BatchMeans::new(expected.saturating_sub(warmup).max(DEFAULT_BATCHES as u64), DEFAULT_BATCHES);
    let mut r = ChannelRealization::all_failed(network.edges().len());
    while state.dest_rank() < k {
        if state.epoch() >= guard {
            return Err(RunError::NonTerminating);
        }
        network.sample_realization_into(&mut channel, &mut r);
        let d = state.step_epoch(&r, &mut coeffs);
        if state.epoch() > warmup {
            acc.push(d as f64);
        }
    }
    Ok(BlockRun { throughput: k as f64 / state.epoch() as f64, epochs_used: state.epoch(), estimate: acc.finish() })
}

/// Time-average deliveries per epoch with an inexhaustible source, after
/// the same warmup the occupancy engine uses.
pub fn monte_carlo_throughput<F: FieldElement>(network: &ErasureNetwork, epochs: u64, seed: u64) -> ThroughputEstimate {
    let mut state = PacketizedState::<F>::new(network, UNBOUNDED_BLOCK);
    let mut channel = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = coefficient_rng(seed);
    let warmup = warmup_epochs(network);
    let mut r = ChannelRealization::all_failed(network.edges().len());
    for _ in 0..warmup {
        network.sample_realization_into(&mut channel, &mut r);
        state.step_epoch(&r, &mut coeffs);
    }
    let mut acc = BatchMeans::new(epochs, DEFAULT_BATCHES);
    for _ in 0..epochs {
        network.sample_realization_into(&mut channel, &mut r);
        acc.push(state.step_epoch(&r, &mut coeffs) as f64);
    }
    ThroughputEstimate { estimate: acc.finish(), warmup, epochs }
}
