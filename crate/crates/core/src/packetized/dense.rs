//! Literal packet-level simulation: every coefficient vector has `k` entries
//! and the destination keeps an explicit echelon basis. Costs `O(k^2)`
//! memory, so it is meant for small blocks and cross-checks.

use rand::Rng;

use super::PacketEngine;
use crate::gfield::{axpy, random_vector, CoeffMatrix, FieldElement};
use crate::netmodel::{ChannelRealization, ErasureNetwork, Node};
use crate::occupancy::{full_mask, Subset};
use crate::RunError;

/// Default cap on the bytes a dense state may need.
pub const DEFAULT_MEMORY_BUDGET: u64 = 1 << 30;

#[derive(Debug, Clone)]
pub struct DenseState<F> {
    network: ErasureNetwork,
    k: usize,
    epoch: u64,
    buffers: Vec<Vec<Vec<F>>>,
    /// Echelon rows with their pivot columns; pivots are normalized to one.
    dest: Vec<(usize, Vec<F>)>,
}

impl<F: FieldElement> DenseState<F> {
    pub fn new(network: &ErasureNetwork, k: u64) -> Result<Self, RunError> {
        Self::with_budget(network, k, DEFAULT_MEMORY_BUDGET)
    }

    /// Refuses blocks whose worst-case footprint (all buffer slots plus a
    /// full-rank destination matrix) exceeds `budget` bytes.
    pub fn with_budget(network: &ErasureNetwork, k: u64, budget: u64) -> Result<Self, RunError> {
        assert!(k >= 1, "block size must be positive");
        let slots: u64 = network.buffers().iter().map(|&m| m as u64).sum();
        let elem = (F::BITS as u64).div_ceil(8);
        let bytes = (slots.saturating_add(k)).saturating_mul(k).saturating_mul(elem);
        if bytes > budget {
            return Err(RunError::MemoryBudget { k, bytes, budget });
        }
        let k = k as usize;
        let buffers = network.relays().iter().map(|r| vec![vec![F::ZERO; k]; r.buffer as usize]).collect();
        Ok(DenseState { network: network.clone(), k, epoch: 0, buffers, dest: Vec::new() })
    }

    pub fn buffer(&self, relay: usize) -> &[Vec<F>] {
        &self.buffers[relay]
    }

    /// Reduces `v` against the destination basis; returns the first nonzero
    /// column left, if any.
    fn reduce(&self, v: &mut [F]) -> Option<usize> {
        for (p, row) in &self.dest {
            let f = v[*p];
            if !f.is_zero() {
                axpy(v, f, row);
            }
        }
        v.iter().position(|x| !x.is_zero())
    }

    fn receive_at_dest(&mut self, mut v: Vec<F>) -> bool {
        let Some(p) = self.reduce(&mut v) else {
            return false;
        };
        let inv = v[p].inv().expect("nonzero pivot");
        for x in v.iter_mut() {
            *x = *x * inv;
        }
        self.dest.push((p, v));
        true
    }

    fn rows_with_dest(&self, s: Subset) -> CoeffMatrix<F> {
        let relay_rows = self
            .buffers
            .iter()
            .enumerate()
            .filter(|(i, _)| s >> i & 1 == 1)
            .flat_map(|(_, slots)| slots.iter().map(Vec::as_slice));
        CoeffMatrix::from_rows(self.k, relay_rows.chain(self.dest.iter().map(|(_, r)| r.as_slice())))
    }
}

impl<F: FieldElement> PacketEngine for DenseState<F> {
    fn step_epoch<R: Rng + ?Sized>(&mut self, realization: &ChannelRealization, rng: &mut R) -> u32 {
        let mut pending = Vec::new();
        for (edge, &ok) in self.network.edges().iter().zip(&realization.success) {
            if !ok {
                continue;
            }
            let packet: Vec<F> = match edge.tail {
                Node::Source => random_vector(self.k, rng),
                Node::Relay(i) => {
                    let mut out = vec![F::ZERO; self.k];
                    for row in &self.buffers[i] {
                        axpy(&mut out, F::random(rng), row);
                    }
                    out
                }
                Node::Dest => unreachable!("no edge leaves the destination"),
            };
            pending.push((edge.head, packet));
        }
        let mut delivered = 0;
        for (head, packet) in pending {
            match head {
                Node::Relay(j) => {
                    for slot in &mut self.buffers[j] {
                        let r = F::random(rng);
                        axpy(slot, r, &packet);
                    }
                }
                Node::Dest => delivered += self.receive_at_dest(packet) as u32,
                Node::Source => unreachable!("no edge enters the source"),
            }
        }
        self.epoch += 1;
        delivered
    }

    fn measure_occupancy(&self, s: Subset) -> u32 {
        if s == 0 {
            return 0;
        }
        let full = full_mask(self.network.relay_count());
        (self.rows_with_dest(full).rank() - self.rows_with_dest(!s & full).rank()) as u32
    }

    fn dest_rank(&self) -> u64 {
        self.dest.len() as u64
    }

    fn epoch(&self) -> u64 {
        self.epoch
    }

    fn network(&self) -> &ErasureNetwork {
        &self.network
    }
}
