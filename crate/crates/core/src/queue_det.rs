//! Exact multi-rate loss queue with deterministic service.
//!
//! Each class keeps an execution pipeline: bit `k-1` of the pipeline word is
//! set when a task of that class has exactly `k` slots of service left. Per
//! slot, every pipeline shifts one position towards completion and the top
//! position receives the admission bit. Admission is decided on the occupancy
//! of the current state, before that slot's departures.

use std::collections::{HashMap, VecDeque};
use std::fmt;
use std::io::Write;

use crate::error::{Error, Result};
use crate::markov::{SparseChain, StationaryOptions};
use crate::pool::{PoolModel, PoolState, SteadyState};

/// Longest pipeline that packs into one word.
pub const MAX_PIPELINE: u32 = 63;

/// Default cap on the number of reachable states.
pub const DEFAULT_STATE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct DetState {
    pub pipelines: [u64; 2],
}

impl DetState {
    pub const EMPTY: DetState = DetState { pipelines: [0, 0] };

    /// Builds a state from `v_{i,1..D_i}` bit slices.
    pub fn from_bits(v1: &[u8], v2: &[u8]) -> DetState {
        let pack = |v: &[u8]| {
            v.iter()
                .enumerate()
                .fold(0u64, |acc, (k, &b)| acc | (u64::from(b != 0) << k))
        };
        DetState {
            pipelines: [pack(v1), pack(v2)],
        }
    }

    pub fn bits(&self, class: usize, len: u32) -> Vec<u8> {
        (0..len)
            .map(|k| ((self.pipelines[class] >> k) & 1) as u8)
            .collect()
    }
}

impl PoolState for DetState {
    fn active(&self) -> [u32; 2] {
        self.pipelines.map(u64::count_ones)
    }
}

impl fmt::Display for DetState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:b}|{:b}", self.pipelines[0], self.pipelines[1])
    }
}

/// Admission outcome of one slot: at most one task enters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Admission {
    None,
    Regular,
    Critical,
}

impl Admission {
    pub fn bits(self) -> [bool; 2] {
        match self {
            Admission::None => [false, false],
            Admission::Regular => [true, false],
            Admission::Critical => [false, true],
        }
    }
}

/// Distribution over `{(0,0), (1,0), (0,1)}` given the current state.
pub fn admission_kernel(state: &DetState, pool: &PoolModel) -> [(Admission, f64); 3] {
    admission_for(state.active(), pool)
}

pub(crate) fn admission_for(active: [u32; 2], pool: &PoolModel) -> [(Admission, f64); 3] {
    let p1 = if pool.fits(active, pool.units[0]) {
        pool.arrival[0]
    } else {
        0.0
    };
    let p2 = if pool.fits(active, pool.units[1]) {
        pool.arrival[1]
    } else {
        0.0
    };
    [
        (Admission::None, 1.0 - p1 - p2),
        (Admission::Regular, p1),
        (Admission::Critical, p2),
    ]
}

/// One-slot shift of both pipelines with the given admission bits.
///
/// Panics if `admission` does not fit in `state` (contract violation).
pub fn next_state(state: &DetState, admission: Admission, pool: &PoolModel) -> DetState {
    let bits = admission.bits();
    for class in 0..2 {
        assert!(
            !bits[class] || pool.fits(state.active(), pool.units[class]),
            "admission of class {} is infeasible in state {state}",
            class + 1
        );
    }
    shift(state, bits, pool.service_slots)
}

fn shift(state: &DetState, bits: [bool; 2], lens: [u32; 2]) -> DetState {
    let mut out = *state;
    for class in 0..2 {
        out.pipelines[class] =
            (state.pipelines[class] >> 1) | (u64::from(bits[class]) << (lens[class] - 1));
    }
    out
}

fn binomial(n: u32, k: u32) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * u128::from(n - i) / u128::from(i + 1))
}

/// Number of pipeline pairs satisfying the capacity constraint (`N_1 = 1`,
/// `N_2 = units2`).
pub fn count_states(d1: u32, d2: u32, capacity: u32, units2: u32) -> u128 {
    let mut total = 0u128;
    for n2 in 0..=d2.min(capacity / units2) {
        let room = capacity - units2 * n2;
        let with_n1: u128 = (0..=d1.min(room)).map(|n1| binomial(d1, n1)).sum();
        total += with_n1 * binomial(d2, n2);
    }
    total
}

/// Reachable states in BFS order from the empty state.
#[derive(Debug, Clone)]
pub struct StateSpace {
    pub states: Vec<DetState>,
    pub index: HashMap<DetState, usize>,
    pub chain: SparseChain,
}

impl StateSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// One `index v1 v2` line per state, bits listed `k = 1..D`.
    pub fn write_states<W: Write>(&self, mut w: W, pool: &PoolModel) -> std::io::Result<()> {
        writeln!(w, "# index v1 v2")?;
        for (i, s) in self.states.iter().enumerate() {
            let fmt_bits = |c: usize| -> String {
                s.bits(c, pool.service_slots[c])
                    .iter()
                    .map(|b| char::from(b'0' + b))
                    .collect()
            };
            writeln!(w, "{i} {} {}", fmt_bits(0), fmt_bits(1))?;
        }
        Ok(())
    }
}

fn check_pool(pool: &PoolModel) -> Result<()> {
    for (i, &d) in pool.service_slots.iter().enumerate() {
        if d == 0 || d > MAX_PIPELINE {
            return Err(Error::Domain(format!(
                "task{} service time {d} outside 1..={MAX_PIPELINE} slots",
                i + 1
            )));
        }
    }
    if pool.arrival.iter().any(|a| !(0.0..=1.0).contains(a))
        || pool.arrival[0] + pool.arrival[1] > 1.0 + 1e-12
    {
        return Err(Error::Domain(format!(
            "arrival probabilities {:?} are not a sub-distribution",
            pool.arrival
        )));
    }
    Ok(())
}

/// Breadth-first traversal of the transition kernel from the empty state.
pub fn enumerate_states(pool: &PoolModel, cap: usize) -> Result<StateSpace> {
    check_pool(pool)?;
    let mut states = vec![DetState::EMPTY];
    let mut index = HashMap::from([(DetState::EMPTY, 0usize)]);
    let mut chain = SparseChain::with_states(1);
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let s = states[i];
        for (adm, p) in admission_kernel(&s, pool) {
            if p <= 0.0 {
                continue;
            }
            let next = shift(&s, adm.bits(), pool.service_slots);
            let j = match index.get(&next) {
                Some(&j) => j,
                None => {
                    if states.len() >= cap {
                        return Err(Error::Resource {
                            what: format!(
                                "deterministic pipelines with C={}, D=({}, {})",
                                pool.capacity, pool.service_slots[0], pool.service_slots[1]
                            ),
                            cap,
                        });
                    }
                    let j = chain.push_state();
                    states.push(next);
                    index.insert(next, j);
                    queue.push_back(j);
                    j
                }
            };
            chain.add(i, j, p);
        }
    }
    Ok(StateSpace {
        states,
        index,
        chain,
    })
}

pub fn solve_steady_state(pool: &PoolModel, cap: usize) -> Result<SteadyState<DetState>> {
    let space = enumerate_states(pool, cap)?;
    solve_space(space, &StationaryOptions::default())
}

pub fn solve_space(space: StateSpace, opts: &StationaryOptions) -> Result<SteadyState<DetState>> {
    let (probs, method) = space.chain.stationary(opts)?;
    Ok(SteadyState {
        states: space.states,
        probs,
        method,
    })
}
