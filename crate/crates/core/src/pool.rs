//! The compute pool seen by the queueing engines: capacity, per-class unit
//! demand and service time, and the thinned per-slot arrival probabilities.

use crate::channel;
use crate::config::{SystemConfig, TaskId};
use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolModel {
    pub capacity: u32,
    /// Units held per active task of each class.
    pub units: [u32; 2],
    pub service_slots: [u32; 2],
    /// Probability per slot that a task of each class reaches the pool:
    /// `a_i = g_i η_i p_{u,i}`.
    pub arrival: [f64; 2],
}

/// Per-class uplink success probabilities for a config.
pub fn uplink_probs(config: &SystemConfig) -> Result<[f64; 2]> {
    Ok([
        channel::uplink_success_prob(&config.channel, config.task1.tx_power)?,
        channel::uplink_success_prob(&config.channel, config.task2.tx_power)?,
    ])
}

impl PoolModel {
    pub fn from_config(config: &SystemConfig) -> Result<Self> {
        Ok(Self::with_uplink(config, uplink_probs(config)?))
    }

    /// Same pool, with the uplink probabilities supplied by the caller
    /// (`[1.0, 1.0]` models an error-free uplink).
    pub fn with_uplink(config: &SystemConfig, uplink: [f64; 2]) -> Self {
        let arrival = TaskId::ALL.map(|id| {
            let t = config.task(id);
            t.gen_prob * t.admit_prob * uplink[id.index()]
        });
        PoolModel {
            capacity: config.compute.capacity,
            units: TaskId::ALL.map(|id| config.task(id).units_required),
            service_slots: TaskId::ALL.map(|id| config.task(id).service_slots),
            arrival,
        }
    }

    pub fn occupancy(&self, active: [u32; 2]) -> u32 {
        self.units[0] * active[0] + self.units[1] * active[1]
    }

    /// Whether a task needing `units_needed` units fits next to `active`.
    pub fn fits(&self, active: [u32; 2], units_needed: u32) -> bool {
        self.occupancy(active) + units_needed <= self.capacity
    }

    /// Per-slot completion probability `1 / D_{C,i}` of the geometric surrogate.
    pub fn completion_prob(&self) -> [f64; 2] {
        self.service_slots.map(|d| 1.0 / f64::from(d))
    }
}

/// A chain state that knows how many tasks of each class are active.
pub trait PoolState {
    fn active(&self) -> [u32; 2];
}

/// Which algorithm produced a stationary vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    SparseLu,
    PowerIteration,
    DenseLu,
    MatrixGeometric,
    ProductForm,
    Trivial,
}

/// Stationary distribution over an enumerated state space.
#[derive(Debug, Clone)]
pub struct SteadyState<S> {
    pub states: Vec<S>,
    pub probs: Vec<f64>,
    pub method: SolveMethod,
}

impl<S: PoolState> SteadyState<S> {
    /// `P(Γ ≥ N_i)`: probability that `units_needed` free units exist.
    pub fn availability(&self, pool: &PoolModel, units_needed: u32) -> f64 {
        self.states
            .iter()
            .zip(&self.probs)
            .filter(|(s, _)| pool.fits(s.active(), units_needed))
            .map(|(_, p)| p)
            .sum()
    }

    /// Availability for both classes at their own unit demand.
    pub fn class_availability(&self, pool: &PoolModel) -> [f64; 2] {
        [
            self.availability(pool, pool.units[0]),
            self.availability(pool, pool.units[1]),
        ]
    }

    pub fn max_occupancy(&self, pool: &PoolModel) -> u32 {
        self.states
            .iter()
            .map(|s| pool.occupancy(s.active()))
            .max()
            .unwrap_or(0)
    }
}

impl<S> SteadyState<S> {
    pub fn total_mass(&self) -> f64 {
        self.probs.iter().sum()
    }
}
