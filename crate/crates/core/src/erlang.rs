//! Product-form (Erlang loss) approximation over the occupancy lattice.

use crate::pool::{PoolModel, SolveMethod, SteadyState};
use crate::queue_geo::{GeoState, LevelPartition};
use crate::special::ln_gamma;

/// Offered loads `ρ_i = a_i / μ_i = a_i D_{C,i}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErlangLoad {
    pub rho: [f64; 2],
}

impl ErlangLoad {
    pub fn from_pool(pool: &PoolModel) -> Self {
        ErlangLoad {
            rho: [
                pool.arrival[0] * f64::from(pool.service_slots[0]),
                pool.arrival[1] * f64::from(pool.service_slots[1]),
            ],
        }
    }
}

fn log_term(rho: f64, n: u32) -> f64 {
    if n == 0 {
        0.0
    } else if rho == 0.0 {
        f64::NEG_INFINITY
    } else {
        f64::from(n) * rho.ln() - ln_gamma(f64::from(n) + 1.0)
    }
}

/// `S(n1, n2) ∝ ρ1^n1/n1! · ρ2^n2/n2!` on the feasible lattice, normalized
/// in log space.
pub fn erlang_steady_state(load: ErlangLoad, pool: &PoolModel) -> SteadyState<GeoState> {
    let states = LevelPartition::new(pool).states();
    let logs: Vec<f64> = states
        .iter()
        .map(|s| log_term(load.rho[0], s.n1) + log_term(load.rho[1], s.n2))
        .collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = weights.iter().sum();
    SteadyState {
        states,
        probs: weights.into_iter().map(|w| w / total).collect(),
        method: SolveMethod::ProductForm,
    }
}

pub fn solve(pool: &PoolModel) -> SteadyState<GeoState> {
    erlang_steady_state(ErlangLoad::from_pool(pool), pool)
}
