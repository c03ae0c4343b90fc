use std::fmt;
use std::str::FromStr;

use crate::erlang;
use crate::error::Result;
use crate::pool::PoolModel;
use crate::queue_det;
use crate::queue_geo;

/// Queueing model used to obtain `P(Γ ≥ N_i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Engine {
    /// Exact deterministic-service pipeline chain.
    Det,
    /// Geometric-service occupancy chain, matrix-geometric recursion.
    GeoMg,
    /// Geometric-service occupancy chain, direct dense solve.
    GeoDirect,
    /// Product-form loss formula.
    Erlang,
}

impl Engine {
    pub const ALL: [Engine; 4] = [Engine::Det, Engine::GeoMg, Engine::GeoDirect, Engine::Erlang];

    pub fn name(self) -> &'static str {
        match self {
            Engine::Det => "det",
            Engine::GeoMg => "geo-mg",
            Engine::GeoDirect => "geo-direct",
            Engine::Erlang => "erlang",
        }
    }

    /// Per-class availability for this pool.
    pub fn availability(self, pool: &PoolModel, opts: &EngineOptions) -> Result<[f64; 2]> {
        Ok(match self {
            Engine::Det => {
                queue_det::solve_steady_state(pool, opts.state_cap)?.class_availability(pool)
            }
            Engine::GeoMg => queue_geo::solve_matrix_geometric(pool)?.class_availability(pool),
            Engine::GeoDirect => queue_geo::solve_direct(pool)?.class_availability(pool),
            Engine::Erlang => erlang::solve(pool).class_availability(pool),
        })
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Engine::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown engine `{s}` (expected det, geo-mg, geo-direct or erlang)"))
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EngineOptions {
    /// Reachable-state cap for [`Engine::Det`].
    pub state_cap: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions {
            state_cap: queue_det::DEFAULT_STATE_CAP,
        }
    }
}
