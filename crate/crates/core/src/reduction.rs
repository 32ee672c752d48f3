//! Layered networks and the reduced occupancy state.
//!
//! Relays are grouped by their shortest hop distance to `d`. When every
//! relay link drops exactly one layer, the state is claimed to be carried
//! by the entries `b_S` whose complement `S^c` can reach `d` without leaving
//! `S^c`. [`ReducedEngine`] tracks only those entries and applies the same
//! transmission rules as the full engine. Whenever a rule needs an entry
//! outside the family, it stops with [`ReductionError::ClosureViolation`]
//! instead of guessing.

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::netmodel::{ChannelRealization, ErasureNetwork, Node};
use crate::occupancy::{epoch_guard, full_mask, warmup_epochs, BlockRun, Subset, ThroughputEstimate};
use crate::stats::{BatchMeans, DEFAULT_BATCHES};
use crate::RunError;

/// Exhaustive family enumeration checks every subset.
pub const MAX_ENUMERATION_RELAYS: usize = 24;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    /// A transmission rule needed `b[missing]`, which the reduced state does
    /// not hold, while updating `b[subset]`.
    #[error("link {tail}->{head}: updating b[{subset:#b}] needs b[{missing:#b}], which is outside the tracked family")]
    ClosureViolation { tail: String, head: String, subset: Subset, missing: Subset },
    #[error("network is not layered: link {tail}->{head} does not drop exactly one layer")]
    NotInClassN { tail: String, head: String },
    #[error("{0} relays is too many for subset enumeration (max {MAX_ENUMERATION_RELAYS})")]
    TooManyRelays(usize),
}

/// Relays grouped by shortest hop distance to the destination.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LayerPartition {
    /// Hop distance of each relay (zero-based index); `d` itself is at 0.
    pub distance: Vec<usize>,
    /// `layers[k - 1]` holds the relays at distance `k`, sorted.
    pub layers: Vec<Vec<usize>>,
}

impl LayerPartition {
    /// Relays at distance `k` (empty for `k = 0` or past the last layer).
    pub fn layer(&self, k: usize) -> &[usize] {
        if k == 0 {
            return &[];
        }
        self.layers.get(k - 1).map_or(&[], Vec::as_slice)
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }
}

/// Reversed adjacency among relays plus the relays linked to `d`.
fn predecessors(network: &ErasureNetwork) -> (Vec<Vec<usize>>, Vec<usize>) {
    let mut preds = vec![Vec::new(); network.relay_count()];
    let mut into_d = Vec::new();
    for e in network.edges() {
        match (e.tail, e.head) {
            (Node::Relay(i), Node::Relay(j)) => preds[j].push(i),
            (Node::Relay(i), Node::Dest) => into_d.push(i),
            _ => {}
        }
    }
    (preds, into_d)
}

/// Breadth-first search from `d` along reversed edges.
pub fn layered_partition(network: &ErasureNetwork) -> LayerPartition {
    let n = network.relay_count();
    let (preds, into_d) = predecessors(network);
    let mut distance = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for &i in &into_d {
        if distance[i] == usize::MAX {
            distance[i] = 1;
            queue.push_back(i);
        }
    }
    while let Some(v) = queue.pop_front() {
        for &u in &preds[v] {
            if distance[u] == usize::MAX {
                distance[u] = distance[v] + 1;
                queue.push_back(u);
            }
        }
    }
    debug_assert!(distance.iter().all(|&d| d != usize::MAX), "validated relays reach d");
    let depth = distance.iter().copied().max().unwrap_or(0);
    let mut layers = vec![Vec::new(); depth];
    for (i, &d) in distance.iter().enumerate() {
        layers[d - 1].push(i);
    }
    LayerPartition { distance, layers }
}

/// First relay link that does not go from some layer to the next one down.
fn layer_violation(network: &ErasureNetwork, part: &LayerPartition) -> Option<(Node, Node)> {
    network.edges().iter().find_map(|e| {
        let ok = match (e.tail, e.head) {
            (Node::Relay(i), Node::Relay(j)) => part.distance[i] == part.distance[j] + 1,
            (Node::Relay(i), Node::Dest) => part.distance[i] == 1,
            // Source links are not constrained.
            _ => true,
        };
        (!ok).then_some((e.tail, e.head))
    })
}

/// Whether every relay link goes from `H_k` to `H_{k-1}`.
pub fn is_in_class_n(network: &ErasureNetwork) -> bool {
    layer_violation(network, &layered_partition(network)).is_none()
}

/// Subsets whose complement is connected to `d` internally, sorted by mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AFamily {
    relays: usize,
    subsets: Vec<Subset>,
}

impl AFamily {
    pub fn subsets(&self) -> &[Subset] {
        &self.subsets
    }

    pub fn len(&self) -> usize {
        self.subsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.subsets.is_empty()
    }

    pub fn relay_count(&self) -> usize {
        self.relays
    }

    pub fn index_of(&self, s: Subset) -> Option<usize> {
        self.subsets.binary_search(&s).ok()
    }

    pub fn contains(&self, s: Subset) -> bool {
        self.index_of(s).is_some()
    }
}

/// Every relay of `keep` reaches `d` through relays of `keep` only.
fn internally_connected(preds: &[Vec<usize>], into_d: &[usize], keep: Subset) -> bool {
    let mut seen: Subset = 0;
    let mut stack: Vec<usize> = into_d.iter().copied().filter(|&i| keep >> i & 1 == 1).collect();
    for &i in &stack {
        seen |= 1 << i;
    }
    while let Some(v) = stack.pop() {
        for &u in &preds[v] {
            if keep >> u & 1 == 1 && seen >> u & 1 == 0 {
                seen |= 1 << u;
                stack.push(u);
            }
        }
    }
    seen == keep
}

pub fn enumerate_a(network: &ErasureNetwork) -> Result<AFamily, ReductionError> {
    let n = network.relay_count();
    if n > MAX_ENUMERATION_RELAYS {
        return Err(ReductionError::TooManyRelays(n));
    }
    let (preds, into_d) = predecessors(network);
    let full = full_mask(n);
    let subsets = (0..=full).filter(|&s| internally_connected(&preds, &into_d, !s & full)).collect();
    Ok(AFamily { relays: n, subsets })
}

/// Occupancy simulation restricted to the family's entries.
#[derive(Debug, Clone)]
pub struct ReducedEngine {
    network: ErasureNetwork,
    buffers: Vec<u32>,
    family: AFamily,
    values: Vec<u32>,
    scratch: Vec<u32>,
    full: Subset,
    epoch: u64,
}

impl ReducedEngine {
    pub fn new(network: &ErasureNetwork) -> Result<Self, ReductionError> {
        let part = layered_partition(network);
        if let Some((tail, head)) = layer_violation(network, &part) {
            return Err(ReductionError::NotInClassN {
                tail: network.node_id(tail).to_string(),
                head: network.node_id(head).to_string(),
            });
        }
        let family = enumerate_a(network)?;
        let values = vec![0; family.len()];
        Ok(ReducedEngine {
            network: network.clone(),
            buffers: network.buffers(),
            scratch: values.clone(),
            values,
            full: full_mask(network.relay_count()),
            family,
            epoch: 0,
        })
    }

    pub fn family(&self) -> &AFamily {
        &self.family
    }

    /// Tracked values, aligned with `family().subsets()`.
    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, s: Subset) -> Option<u32> {
        self.family.index_of(s).map(|k| self.values[k])
    }

    pub fn epoch(&self) -> u64 {
        self.epoch
    }

    /// Applies every successful link in processing order and returns the
    /// number of innovative deliveries. On a closure violation the state is
    /// left as it was before the offending link.
    pub fn step(&mut self, realization: &ChannelRealization) -> Result<u32, ReductionError> {
        let mut delivered = 0;
        for (edge, &ok) in self.network.edges().iter().zip(&realization.success) {
            if !ok {
                continue;
            }
            let lookup = Lookup { family: &self.family, values: &self.values };
            self.scratch.copy_from_slice(&self.values);
            let result = match (edge.tail, edge.head) {
                (Node::Source, Node::Relay(i)) => source_to_relay(&lookup, self.buffers[i], i, &mut self.scratch),
                (Node::Relay(i), Node::Relay(j)) => relay_to_relay(&lookup, self.buffers[j], i, j, &mut self.scratch),
                (Node::Relay(j), Node::Dest) => relay_to_dest(&lookup, j, &mut self.scratch),
                (Node::Source, Node::Dest) => {
                    delivered += 1;
                    continue;
                }
                _ => unreachable!("validated networks have no such edge"),
            };
            result.map_err(|(subset, missing)| ReductionError::ClosureViolation {
                tail: self.network.node_id(edge.tail).to_string(),
                head: self.network.node_id(edge.head).to_string(),
                subset,
                missing,
            })?;
            let full_at = self.family.index_of(self.full).expect("the full set is always tracked");
            if matches!(edge.head, Node::Dest) && self.scratch[full_at] < self.values[full_at] {
                delivered += 1;
            }
            std::mem::swap(&mut self.values, &mut self.scratch);
        }
        self.epoch += 1;
        Ok(delivered)
    }
}

/// Time-average deliveries of the reduced engine over `epochs` epochs after
/// the usual warmup; channel draws match the full engine for equal seeds.
pub fn monte_carlo_throughput(
    network: &ErasureNetwork,
    epochs: u64,
    seed: u64,
) -> Result<ThroughputEstimate, ReductionError> {
    let mut engine = ReducedEngine::new(network)?;
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

/// Reduced-engine counterpart of [`crate::occupancy::block_throughput`].
pub fn block_throughput(network: &ErasureNetwork, k: u64, seed: u64) -> Result<BlockRun, RunError> {
    if network.min_cut_value() == 0.0 {
        return Err(RunError::NonTerminating);
    }
    let mut engine = ReducedEngine::new(network)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let warmup = warmup_epochs(network);
    let guard = epoch_guard(network, k);
    let expected = (k as f64 / network.min_cut_value()) as u64;
    let mut acc = BatchMeans::new(expected.saturating_sub(warmup).max(DEFAULT_BATCHES as u64), DEFAULT_BATCHES);
    let mut r = ChannelRealization::all_failed(network.edges().len());
    let mut delivered = 0u64;
    while delivered < k {
        if engine.epoch() >= guard {
            return Err(RunError::NonTerminating);
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

/// `(subset being updated, missing index)`
type Missing = (Subset, Subset);

struct Lookup<'a> {
    family: &'a AFamily,
    values: &'a [u32],
}

impl Lookup<'_> {
    fn get(&self, updating: Subset, s: Subset) -> Result<u32, Missing> {
        self.family.index_of(s).map(|k| self.values[k]).ok_or((updating, s))
    }
}

fn source_to_relay(b: &Lookup, m: u32, i: usize, post: &mut [u32]) -> Result<(), Missing> {
    let bit = 1 << i;
    let full = full_mask(b.family.relays);
    if b.get(full, bit)? >= m {
        return Ok(());
    }
    for (k, &s) in b.family.subsets.iter().enumerate() {
        let grow = s & bit != 0 || b.get(s, s | bit)? - b.values[k] == m;
        post[k] += grow as u32;
    }
    Ok(())
}

fn relay_to_relay(b: &Lookup, mj: u32, i: usize, j: usize, post: &mut [u32]) -> Result<(), Missing> {
    let (bi, bj) = (1 << i, 1 << j);
    for (k, &s) in b.family.subsets.iter().enumerate() {
        if s & bi == 0 || s & bj != 0 {
            continue;
        }
        let here = b.values[k];
        // Sender side first: `S \ {i}` is tracked whenever `S` is.
        if here - b.get(s, s & !bi)? == 0 {
            continue;
        }
        if b.get(s, s | bj)? - here < mj {
            post[k] -= 1;
        }
    }
    Ok(())
}

fn relay_to_dest(b: &Lookup, j: usize, post: &mut [u32]) -> Result<(), Missing> {
    let bj = 1 << j;
    for (k, &s) in b.family.subsets.iter().enumerate() {
        if s & bj != 0 && b.values[k] - b.get(s, s & !bj)? > 0 {
            post[k] -= 1;
        }
    }
    Ok(())
}
