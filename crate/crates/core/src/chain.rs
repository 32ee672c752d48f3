//! Exact Markov-chain analysis of the occupancy model for small networks.
//!
//! States are the occupancy vectors reachable from the all-zero state.
//! Each row of the transition matrix sums the probabilities of all
//! `2^|E|` channel realizations, and every (state, realization) pair also
//! records how many innovative packets reached the destination.

use std::collections::HashMap;

use rayon::prelude::*;
use thiserror::Error;

use crate::netmodel::{ChannelRealization, ErasureNetwork};
use crate::occupancy::{OccupancyError, OccupancyModel, OccupancyVector};

/// Realization enumeration is exponential in the edge count.
pub const MAX_CHAIN_EDGES: usize = 12;
pub const DEFAULT_MAX_STATES: usize = 100_000;

const ROW_SUM_TOLERANCE: f64 = 1e-12;
const RESIDUAL_TOLERANCE: f64 = 1e-12;
const MAX_ITERATIONS: usize = 5_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ChainError {
    #[error("more than {0} reachable states")]
    StateBudgetExceeded(usize),
    #[error("{0} edges exceed the enumeration limit of {MAX_CHAIN_EDGES}")]
    TooManyEdges(usize),
    #[error("power iteration did not converge (residual {residual:e} after {iterations} iterations)")]
    NonConvergence { residual: f64, iterations: usize },
    #[error("chain has {0} closed classes; the steady state is not unique")]
    MultipleRecurrentClasses(usize),
    #[error(transparent)]
    Occupancy(#[from] OccupancyError),
}

#[derive(Debug, Clone)]
pub struct TransitionChain {
    pub states: Vec<OccupancyVector>,
    /// Sparse rows: `(successor, probability)`, sorted by successor.
    pub rows: Vec<Vec<(usize, f64)>>,
    /// Nonzero delivery counts per state: `(realization mask, delivered)`.
    pub deliveries: Vec<Vec<(u32, u32)>>,
    /// `Σ_l Pr(l) · delivered(state, l)` per state.
    pub expected_delivery: Vec<f64>,
    /// Indices of the unique closed communicating class.
    pub recurrent: Vec<usize>,
    /// Number of closed classes found.
    pub closed_classes: usize,
}

impl TransitionChain {
    pub fn reachable_count(&self) -> usize {
        self.states.len()
    }

    pub fn recurrent_count(&self) -> usize {
        self.recurrent.len()
    }

    pub fn transient_count(&self) -> usize {
        self.states.len() - self.recurrent.len()
    }

    pub fn index_of(&self, state: &OccupancyVector) -> Option<usize> {
        self.states.iter().position(|s| s == state)
    }

    pub fn probability(&self, from: usize, to: usize) -> f64 {
        self.rows[from].iter().find(|(j, _)| *j == to).map_or(0.0, |(_, p)| *p)
    }

    pub fn max_row_error(&self) -> f64 {
        self.rows.iter().map(|r| (r.iter().map(|(_, p)| p).sum::<f64>() - 1.0).abs()).fold(0.0, f64::max)
    }
}

struct Expansion {
    successors: Vec<(OccupancyVector, f64)>,
    deliveries: Vec<(u32, u32)>,
    expected: f64,
}

fn expand(
    network: &ErasureNetwork,
    model: &OccupancyModel,
    realizations: &[(ChannelRealization, f64)],
    state: &OccupancyVector,
) -> Result<Expansion, OccupancyError> {
    let mut merged: HashMap<OccupancyVector, f64> = HashMap::new();
    let mut deliveries = Vec::new();
    let mut expected = 0.0;
    for (mask, (r, p)) in realizations.iter().enumerate() {
        if *p == 0.0 {
            continue;
        }
        let out = model.step_epoch(network, state, r)?;
        if out.delivered > 0 {
            deliveries.push((mask as u32, out.delivered));
            expected += p * out.delivered as f64;
        }
        *merged.entry(out.new_state).or_insert(0.0) += p;
    }
    let mut successors: Vec<_> = merged.into_iter().collect();
    successors.sort_by(|a, b| a.0.cmp(&b.0));
    Ok(Expansion { successors, deliveries, expected })
}

/// Enumerates the states reachable from zero and their transition rows.
pub fn build_chain(network: &ErasureNetwork, max_states: usize) -> Result<TransitionChain, ChainError> {
    let e = network.edges().len();
    if e > MAX_CHAIN_EDGES {
        return Err(ChainError::TooManyEdges(e));
    }
    let model = OccupancyModel::new(network)?;
    let realizations: Vec<(ChannelRealization, f64)> = (0..1u64 << e)
        .map(|mask| {
            let r = ChannelRealization::from_mask(mask, e);
            let p = network.realization_probability(&r);
            (r, p)
        })
        .collect();

    let mut index: HashMap<OccupancyVector, usize> = HashMap::new();
    let mut states = vec![model.zero_state()];
    index.insert(states[0].clone(), 0);
    let mut rows = Vec::new();
    let mut deliveries = Vec::new();
    let mut expected_delivery = Vec::new();
    let mut frontier = 0..1;

    // Level-synchronous BFS; each level is expanded in parallel and merged
    // in index order, so numbering is deterministic.
    while !frontier.is_empty() {
        let expansions: Vec<Expansion> = states[frontier.clone()]
            .par_iter()
            .map(|s| expand(network, &model, &realizations, s))
            .collect::<Result<_, _>>()?;
        let level_end = states.len();
        for ex in expansions {
            let mut row = Vec::with_capacity(ex.successors.len());
            for (succ, p) in ex.successors {
                let idx = match index.get(&succ) {
                    Some(&i) => i,
                    None => {
                        if states.len() >= max_states {
                            return Err(ChainError::StateBudgetExceeded(max_states));
                        }
                        index.insert(succ.clone(), states.len());
                        states.push(succ);
                        states.len() - 1
                    }
                };
                row.push((idx, p));
            }
            row.sort_by_key(|&(j, _)| j);
            rows.push(row);
            deliveries.push(ex.deliveries);
            expected_delivery.push(ex.expected);
        }
        frontier = level_end..states.len();
    }

    let (recurrent, closed_classes) = closed_class(&rows);
    let chain = TransitionChain { states, rows, deliveries, expected_delivery, recurrent, closed_classes };
    debug_assert!(chain.max_row_error() <= ROW_SUM_TOLERANCE * 10.0);
    Ok(chain)
}

/// Tarjan's SCC; returns the members of the first closed class (sorted)
/// and the number of closed classes.
fn closed_class(rows: &[Vec<(usize, f64)>]) -> (Vec<usize>, usize) {
    let n = rows.len();
    let mut index = vec![usize::MAX; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![usize::MAX; n];
    let mut comps: Vec<Vec<usize>> = Vec::new();
    let mut counter = 0;

    for root in 0..n {
        if index[root] != usize::MAX {
            continue;
        }
        // Iterative DFS: (node, next edge position).
        let mut call: Vec<(usize, usize)> = vec![(root, 0)];
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < rows[v].len() {
                let w = rows[v][*pos].0;
                *pos += 1;
                if index[w] == usize::MAX {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut members = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = comps.len();
                        members.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comps.push(members);
                }
            }
        }
    }

    let closed: Vec<usize> = (0..comps.len())
        .filter(|&c| comps[c].iter().all(|&v| rows[v].iter().all(|&(w, p)| p == 0.0 || comp[w] == c)))
        .collect();
    let mut members = comps[closed[0]].clone();
    members.sort_unstable();
    (members, closed.len())
}

/// Stationary distribution over all chain states (zero off the recurrent
/// class), by power iteration on the lazy chain `(I + T) / 2`.
pub fn steady_state(chain: &TransitionChain) -> Result<Vec<f64>, ChainError> {
    if chain.closed_classes != 1 {
        return Err(ChainError::MultipleRecurrentClasses(chain.closed_classes));
    }
    let n = chain.states.len();
    let mut pi = vec![0.0; n];
    let share = 1.0 / chain.recurrent.len() as f64;
    for &i in &chain.recurrent {
        pi[i] = share;
    }
    let mut next = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..MAX_ITERATIONS {
        next.iter_mut().for_each(|x| *x = 0.0);
        for &i in &chain.recurrent {
            for &(j, p) in &chain.rows[i] {
                next[j] += pi[i] * p;
            }
        }
        // ||πT - π||_1
        residual = next.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
        if residual < RESIDUAL_TOLERANCE {
            let total: f64 = next.iter().sum();
            return Ok(next.into_iter().map(|x| x / total).collect());
        }
        for (p, q) in pi.iter_mut().zip(&next) {
            *p = 0.5 * (*p + q);
        }
        if it % 1024 == 0 {
            let total: f64 = pi.iter().sum();
            pi.iter_mut().for_each(|x| *x /= total);
        }
    }
    Err(ChainError::NonConvergence { residual, iterations: MAX_ITERATIONS })
}

/// `Σ_state π(state) Σ_l Pr(l) · delivered(state, l)`.
pub fn exact_throughput(chain: &TransitionChain, pi: &[f64]) -> f64 {
    pi.iter().zip(&chain.expected_delivery).map(|(p, d)| p * d).sum()
}
