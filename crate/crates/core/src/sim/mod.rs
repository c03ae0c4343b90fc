//! Slot-level Monte Carlo of the whole chain: generation, admission control,
//! fading uplink, compute pool, downlink and actuation.
//!
//! Slot convention (`end-of-slot`): within slot `t` a packet is generated,
//! gated, transmitted and either admitted or dropped; pool releases happen
//! after the admission check (`pre`) or before it (`post`); ages are sampled
//! at the end of the slot as `t + 1 − A_i(t)`. A task admitted in slot `s`
//! with deterministic service executes in slot `s + D_C`. The fractional
//! downlink delay is added to the time-average AoA as a constant.

mod stats;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

pub use stats::Estimate;

use crate::channel;
use crate::config::{ConfigError, SystemConfig, TaskId};
use crate::error::{Error, Result};

pub const SLOT_CONVENTION: &str = "end-of-slot";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ServiceMode {
    Deterministic,
    /// Per-slot completion with probability `1 / D_C`.
    Geometric,
}

/// Whether the admission check sees the pool before or after the slot's
/// departures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepartureSemantics {
    Pre,
    Post,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UplinkMode {
    /// Bernoulli trial with the analytic success probability.
    Bernoulli,
    /// Draws `|h|² ~ Gamma(m, 1/m)` and compares it with `ψ_i`.
    FadingDraw,
    /// Every transmission succeeds.
    Ideal,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    pub service: ServiceMode,
    pub departure: DepartureSemantics,
    pub uplink: UplinkMode,
    /// Slots discarded before measuring (capped at half the horizon).
    pub warmup: u64,
    pub batches: usize,
}

impl Default for SimOptions {
    fn default() -> Self {
        SimOptions {
            service: ServiceMode::Deterministic,
            departure: DepartureSemantics::Pre,
            uplink: UplinkMode::Bernoulli,
            warmup: 10_000,
            batches: 20,
        }
    }
}

impl SimOptions {
    pub fn with_service(mut self, service: ServiceMode) -> Self {
        self.service = service;
        self
    }

    pub fn with_uplink(mut self, uplink: UplinkMode) -> Self {
        self.uplink = uplink;
        self
    }

    pub fn with_departure(mut self, departure: DepartureSemantics) -> Self {
        self.departure = departure;
        self
    }
}

/// Per-class event ledger over the whole horizon.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub generated: u64,
    pub admission_rejected: u64,
    pub uplink_lost: u64,
    pub compute_blocked: u64,
    pub executed: u64,
    /// Still in the pool at the horizon.
    pub in_flight: u64,
}

impl ClassCounts {
    pub fn balanced(&self) -> bool {
        self.generated
            == self.admission_rejected
                + self.uplink_lost
                + self.compute_blocked
                + self.executed
                + self.in_flight
    }
}

/// Moments of the gaps between consecutive age-resetting executions.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct IntervalMoments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl IntervalMoments {
    fn push(&mut self, x: u64) {
        let x = x as f64;
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    /// `(E[X²] + E[X]) / (2 E[X])`.
    pub fn age_ratio(&self) -> f64 {
        let n = self.count as f64;
        (self.sum_sq / n + self.sum / n) / (2.0 * self.sum / n)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub aoa: [Estimate; 2],
    pub coma: Estimate,
    /// Fraction of slots in which a class-i task would not fit.
    pub blocking: [Estimate; 2],
    pub aoi: Estimate,
    /// Empirical uplink success rate per class (binomial standard error).
    pub uplink_success: [Estimate; 2],
    pub counts: [ClassCounts; 2],
    pub intervals: [IntervalMoments; 2],
    pub seed: u64,
    pub slots: u64,
    pub measured_slots: u64,
    pub options: SimOptions,
    pub convention: &'static str,
}

impl SimResult {
    /// Fraction of pool arrivals turned away for lack of units.
    pub fn arrival_blocking(&self, class: TaskId) -> f64 {
        let c = &self.counts[class.index()];
        let reached = c.compute_blocked + c.executed + c.in_flight;
        if reached == 0 {
            0.0
        } else {
            c.compute_blocked as f64 / reached as f64
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct PoolEntry {
    class: usize,
    remaining: u32,
    generated_at: u64,
}

#[derive(Default)]
struct Batch {
    age: [f64; 2],
    aoi: f64,
    penalty: f64,
    blocked_slots: [u64; 2],
}

const STREAM_GENERATION: u64 = 0;
const STREAM_ADMISSION: u64 = 1;
const STREAM_UPLINK: u64 = 2;
const STREAM_SERVICE: u64 = 3;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

enum Uplink {
    Bernoulli([f64; 2]),
    Fading { psi: [f64; 2], gain: Gamma<f64> },
    Ideal,
}

impl Uplink {
    fn success(&self, class: usize, rng: &mut ChaCha8Rng) -> bool {
        match self {
            Uplink::Bernoulli(p) => rng.random::<f64>() < p[class],
            Uplink::Fading { psi, gain } => gain.sample(rng) >= psi[class],
            Uplink::Ideal => true,
        }
    }
}

/// Runs `config.sim_slots` slots seeded by `config.rng_seed`.
pub fn run(config: &SystemConfig, opts: &SimOptions) -> Result<SimResult> {
    let report = config.validate();
    if !report.is_valid() {
        return Err(ConfigError::Invalid(report).into());
    }
    if opts.batches < 2 {
        return Err(Error::Domain("batch means need at least two batches".into()));
    }
    let horizon = config.sim_slots;
    let warmup = opts.warmup.min(horizon / 2);
    let batch_len = (horizon - warmup) / opts.batches as u64;
    if batch_len == 0 {
        return Err(Error::Domain(format!(
            "horizon of {horizon} slots is too short for {} batches",
            opts.batches
        )));
    }
    let measure_start = horizon - batch_len * opts.batches as u64;

    let tasks = [&config.task1, &config.task2];
    let gen = tasks.map(|t| t.gen_prob);
    let admit = tasks.map(|t| t.admit_prob);
    let units = tasks.map(|t| t.units_required);
    let service = tasks.map(|t| t.service_slots);
    let completion = service.map(|d| 1.0 / f64::from(d));
    let penalty = tasks.map(|t| t.penalty);
    let capacity = config.compute.capacity;

    let uplink = match opts.uplink {
        UplinkMode::Bernoulli => Uplink::Bernoulli([
            channel::uplink_success_prob(&config.channel, tasks[0].tx_power)?,
            channel::uplink_success_prob(&config.channel, tasks[1].tx_power)?,
        ]),
        UplinkMode::FadingDraw => Uplink::Fading {
            psi: [
                channel::fading_threshold(&config.channel, tasks[0].tx_power)?,
                channel::fading_threshold(&config.channel, tasks[1].tx_power)?,
            ],
            gain: Gamma::new(config.channel.shape, 1.0 / config.channel.shape)
                .map_err(|e| Error::Domain(format!("fading distribution: {e}")))?,
        },
        UplinkMode::Ideal => Uplink::Ideal,
    };

    let mut rng_gen = stream(config.rng_seed, STREAM_GENERATION);
    let mut rng_admit = stream(config.rng_seed, STREAM_ADMISSION);
    let mut rng_uplink = stream(config.rng_seed, STREAM_UPLINK);
    let mut rng_service = stream(config.rng_seed, STREAM_SERVICE);

    let mut pool: Vec<PoolEntry> = Vec::with_capacity(capacity as usize);
    let mut occupancy = 0u32;
    let mut counts = [ClassCounts::default(); 2];
    let mut intervals = [IntervalMoments::default(); 2];
    let mut batches: Vec<Batch> = (0..opts.batches).map(|_| Batch::default()).collect();
    let mut uplink_attempts = [0u64; 2];
    // Generation time of the freshest executed packet, and when it executed.
    let mut last_exec: [Option<(u64, u64)>; 2] = [None, None];
    let mut last_received: Option<u64> = None;

    let mut release = |t: u64,
                       pool: &mut Vec<PoolEntry>,
                       occupancy: &mut u32,
                       counts: &mut [ClassCounts; 2],
                       intervals: &mut [IntervalMoments; 2],
                       last_exec: &mut [Option<(u64, u64)>; 2]| {
        pool.retain_mut(|e| {
            let done = match opts.service {
                ServiceMode::Deterministic => {
                    if e.remaining == 1 {
                        true
                    } else {
                        e.remaining -= 1;
                        false
                    }
                }
                ServiceMode::Geometric => rng_service.random::<f64>() < completion[e.class],
            };
            if done {
                let c = e.class;
                *occupancy -= units[c];
                counts[c].executed += 1;
                let fresh = last_exec[c].is_none_or(|(g, _)| e.generated_at > g);
                if fresh {
                    if let Some((_, prev)) = last_exec[c] {
                        if t >= measure_start {
                            intervals[c].push(t - prev);
                        }
                    }
                    last_exec[c] = Some((e.generated_at, t));
                }
            }
            !done
        });
    };

    for t in 0..horizon {
        let measuring = t >= measure_start;
        let b = if measuring {
            ((t - measure_start) / batch_len) as usize
        } else {
            0
        };

        let u: f64 = rng_gen.random();
        let class = if u < gen[0] {
            Some(0)
        } else if u < gen[0] + gen[1] {
            Some(1)
        } else {
            None
        };

        if opts.departure == DepartureSemantics::Post {
            release(t, &mut pool, &mut occupancy, &mut counts, &mut intervals, &mut last_exec);
        }
        if measuring {
            for c in 0..2 {
                if occupancy + units[c] > capacity {
                    batches[b].blocked_slots[c] += 1;
                }
            }
        }

        let mut admitted = None;
        if let Some(c) = class {
            counts[c].generated += 1;
            let missed = if rng_admit.random::<f64>() >= admit[c] {
                counts[c].admission_rejected += 1;
                true
            } else {
                uplink_attempts[c] += 1;
                if !uplink.success(c, &mut rng_uplink) {
                    counts[c].uplink_lost += 1;
                    true
                } else {
                    last_received = Some(t);
                    if occupancy + units[c] > capacity {
                        counts[c].compute_blocked += 1;
                        true
                    } else {
                        admitted = Some(c);
                        false
                    }
                }
            };
            if missed && measuring {
                batches[b].penalty += penalty[c];
            }
        }

        if opts.departure == DepartureSemantics::Pre {
            release(t, &mut pool, &mut occupancy, &mut counts, &mut intervals, &mut last_exec);
        }
        if let Some(c) = admitted {
            pool.push(PoolEntry {
                class: c,
                remaining: service[c],
                generated_at: t,
            });
            occupancy += units[c];
        }
        debug_assert!(occupancy <= capacity, "pool over capacity at slot {t}");

        if measuring {
            let batch = &mut batches[b];
            for c in 0..2 {
                let a = last_exec[c].map_or(0, |(g, _)| g);
                batch.age[c] += (t + 1 - a) as f64;
            }
            batch.aoi += (t + 1 - last_received.unwrap_or(0)) as f64;
        }
    }

    for e in &pool {
        counts[e.class].in_flight += 1;
    }

    let len = batch_len as f64;
    let per_batch = |f: &dyn Fn(&Batch) -> f64| -> Estimate {
        Estimate::from_batches(&batches.iter().map(f).collect::<Vec<_>>())
    };
    let aoa = [0, 1].map(|c| {
        if counts[c].executed == 0 {
            Estimate::unbounded()
        } else {
            let offset = tasks[c].downlink_delay;
            per_batch(&|bt: &Batch| bt.age[c] / len + offset)
        }
    });
    let aoi = if last_received.is_none() {
        Estimate::unbounded()
    } else {
        per_batch(&|bt: &Batch| bt.aoi / len)
    };
    let uplink_success = [0, 1].map(|c| {
        let n = uplink_attempts[c];
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                std_err: f64::NAN,
            };
        }
        let p = (n - counts[c].uplink_lost) as f64 / n as f64;
        Estimate {
            mean: p,
            std_err: (p * (1.0 - p) / n as f64).sqrt(),
        }
    });

    Ok(SimResult {
        aoa,
        coma: per_batch(&|bt: &Batch| bt.penalty / len),
        blocking: [0, 1].map(|c| per_batch(&|bt: &Batch| bt.blocked_slots[c] as f64 / len)),
        aoi,
        uplink_success,
        counts,
        intervals,
        seed: config.rng_seed,
        slots: horizon,
        measured_slots: batch_len * opts.batches as u64,
        options: *opts,
        convention: SLOT_CONVENTION,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(slots: u64) -> SystemConfig {
        let mut cfg = SystemConfig::default();
        cfg.sim_slots = slots;
        cfg
    }

    #[test]
    fn no_generation_no_events() {
        let mut cfg = small(50_000);
        cfg.task1.gen_prob = 0.0;
        cfg.task2.gen_prob = 0.0;
        let r = run(&cfg, &SimOptions::default()).unwrap();
        assert!(r.counts.iter().all(|c| *c == ClassCounts::default()));
        assert!(r.aoa.iter().all(|e| e.mean.is_infinite()));
        assert!(r.aoi.mean.is_infinite());
        assert_eq!(r.coma.mean, 0.0);
        assert_eq!(r.blocking[0].mean, 0.0);
    }

    #[test]
    fn ledger_balances_in_every_mode() {
        for service in [ServiceMode::Deterministic, ServiceMode::Geometric] {
            for departure in [DepartureSemantics::Pre, DepartureSemantics::Post] {
                for uplink in [UplinkMode::Bernoulli, UplinkMode::FadingDraw, UplinkMode::Ideal] {
                    let opts = SimOptions {
                        service,
                        departure,
                        uplink,
                        ..SimOptions::default()
                    };
                    let r = run(&small(40_000), &opts).unwrap();
                    for c in &r.counts {
                        assert!(c.balanced(), "{c:?}");
                        assert!(c.generated > 0);
                    }
                }
            }
        }
    }

    #[test]
    fn identical_seed_identical_result() {
        let opts = SimOptions::default().with_service(ServiceMode::Geometric);
        let a = run(&small(30_000), &opts).unwrap();
        let b = run(&small(30_000), &opts).unwrap();
        assert_eq!(a, b);
        let mut other = small(30_000);
        other.rng_seed += 1;
        assert_ne!(run(&other, &opts).unwrap().counts, a.counts);
    }

    #[test]
    fn fading_mode_leaves_other_streams_alone() {
        let a = run(&small(20_000), &SimOptions::default()).unwrap();
        let b = run(
            &small(20_000),
            &SimOptions::default().with_uplink(UplinkMode::FadingDraw),
        )
        .unwrap();
        for c in 0..2 {
            assert_eq!(a.counts[c].generated, b.counts[c].generated);
            assert_eq!(a.counts[c].admission_rejected, b.counts[c].admission_rejected);
        }
    }

    #[test]
    fn short_horizon_rejected() {
        assert!(matches!(
            run(&small(10), &SimOptions::default()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small(10_000);
        cfg.task1.gen_prob = 0.8;
        cfg.task2.gen_prob = 0.8;
        assert!(matches!(
            run(&cfg, &SimOptions::default()),
            Err(Error::Config(ConfigError::Invalid(_)))
        ));
    }

    #[test]
    fn unconstrained_pool_deterministic_ages() {
        // With ample capacity and one class, age resets are Bernoulli(q)
        // and the end-of-slot average is exactly 1/q + D_C + D_T.
        let mut cfg = small(400_000);
        cfg.compute.capacity = 64;
        cfg.task2.gen_prob = 0.0;
        let q = cfg.task1.gen_prob * cfg.task1.admit_prob;
        let r = run(&cfg, &SimOptions::default().with_uplink(UplinkMode::Ideal)).unwrap();
        let expected = 1.0 / q + 10.0 + 0.1;
        assert!(r.aoa[0].within(expected, 4.0, 0.0), "{:?} vs {expected}", r.aoa[0]);
        assert_eq!(r.counts[0].compute_blocked, 0);
        let ratio = r.intervals[0].age_ratio();
        assert!((ratio - 1.0 / q).abs() < 0.05, "{ratio}");
    }

    #[test]
    fn post_semantics_never_blocks_more() {
        let mut cfg = small(200_000);
        cfg.task1.gen_prob = 0.6;
        cfg.task2.gen_prob = 0.2;
        let pre = run(&cfg, &SimOptions::default()).unwrap();
        let post = run(
            &cfg,
            &SimOptions::default().with_departure(DepartureSemantics::Post),
        )
        .unwrap();
        assert!(post.blocking[0].mean < pre.blocking[0].mean);
        assert!(post.blocking[1].mean < pre.blocking[1].mean);
    }
}
