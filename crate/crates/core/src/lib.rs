//! Throughput analysis of random linear network coding over acyclic
//! erasure networks with finite relay buffers.
//!
//! Two engines simulate the same epoch semantics: [`packetized`] moves
//! actual coefficient vectors over a finite field, while [`occupancy`]
//! tracks only the occupancy vector `b_S` and updates it with closed-form
//! rules. [`chain`] solves the occupancy Markov chain exactly on small
//! instances and [`reduction`] tracks the reduced state for layered
//! networks.

pub mod chain;
pub mod cli;
pub mod gfield;
pub mod netmodel;
pub mod occupancy;
pub mod packetized;
pub mod reduction;
pub mod stats;
pub mod topologies;

use thiserror::Error;

/// Errors shared by the long-running simulation drivers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum RunError {
    #[error("the destination is unreachable (min-cut capacity is zero)")]
    NonTerminating,
    #[error("block of {k} packets needs about {bytes} bytes, over the {budget}-byte budget")]
    MemoryBudget { k: u64, bytes: u64, budget: u64 },
    #[error(transparent)]
    Occupancy(#[from] occupancy::OccupancyError),
    #[error(transparent)]
    Reduction(#[from] reduction::ReductionError),
    #[error(transparent)]
    Chain(#[from] chain::ChainError),
}
