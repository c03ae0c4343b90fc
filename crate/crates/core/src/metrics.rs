//! Closed-form time-average metrics: per-task Age of Actuation, Cost of
//! Missing Actuation and the reception AoI baseline.
//!
//! Availability `P(Γ ≥ N_i)` is an input, so the same formulas serve every
//! queue engine and simulated estimates alike.

use std::fmt;

use crate::config::{SystemConfig, TaskId};
use crate::engine::{Engine, EngineOptions};
use crate::error::Result;
use crate::pool::{uplink_probs, PoolModel};

/// A time-average age in slots, or unbounded when the stream never
/// refreshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Age {
    Finite(f64),
    Unbounded,
}

impl Age {
    pub fn from_rate(rate: f64, offset: f64) -> Age {
        if rate > 0.0 {
            Age::Finite(1.0 / rate + offset)
        } else {
            Age::Unbounded
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Age::Finite(x) => Some(x),
            Age::Unbounded => None,
        }
    }

    pub fn is_unbounded(self) -> bool {
        matches!(self, Age::Unbounded)
    }

    /// `f64::INFINITY` for unbounded ages.
    pub fn value(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Age {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Age::Finite(x) => write!(f, "{x}"),
            Age::Unbounded => f.write_str("inf"),
        }
    }
}

/// `1 / (g η p_u P(Γ≥N)) + D_C + D_T`.
pub fn task_aoa(gen: f64, admit: f64, uplink: f64, avail: f64, service: f64, downlink: f64) -> Age {
    Age::from_rate(gen * admit * uplink * avail, service + downlink)
}

/// Per-class inputs to the CoMA sum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TaskTerms {
    pub penalty: f64,
    pub gen_prob: f64,
    pub admit_prob: f64,
    pub uplink: f64,
    pub availability: f64,
}

impl TaskTerms {
    pub fn contribution(&self) -> f64 {
        self.penalty * self.gen_prob * (1.0 - self.admit_prob * self.uplink * self.availability)
    }
}

/// `Σ ω_i g_i (1 − η_i p_{u,i} P(Γ≥N_i))`.
pub fn coma(task1: &TaskTerms, task2: &TaskTerms) -> f64 {
    task1.contribution() + task2.contribution()
}

/// `1 / (g1 η1 p_{u,1} + g2 η2 p_{u,2})`.
pub fn aoi_baseline(g1: f64, eta1: f64, pu1: f64, g2: f64, eta2: f64, pu2: f64) -> Age {
    Age::from_rate(g1 * eta1 * pu1 + g2 * eta2 * pu2, 0.0)
}

/// Where the availability figures came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Analytic(Engine),
    Simulated,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Analytic(e) => write!(f, "{e}"),
            Provenance::Simulated => f.write_str("simulated"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub aoa: [Age; 2],
    pub coma: f64,
    pub aoi: Age,
    pub availability: [f64; 2],
    pub uplink: [f64; 2],
    pub engine: Provenance,
}

impl MetricsReport {
    /// Composes the closed forms from given uplink and availability figures.
    pub fn compose(
        config: &SystemConfig,
        uplink: [f64; 2],
        availability: [f64; 2],
        engine: Provenance,
    ) -> Self {
        let terms = TaskId::ALL.map(|id| {
            let t = config.task(id);
            TaskTerms {
                penalty: t.penalty,
                gen_prob: t.gen_prob,
                admit_prob: t.admit_prob,
                uplink: uplink[id.index()],
                availability: availability[id.index()],
            }
        });
        let aoa = TaskId::ALL.map(|id| {
            let t = config.task(id);
            let i = id.index();
            task_aoa(
                t.gen_prob,
                t.admit_prob,
                uplink[i],
                availability[i],
                f64::from(t.service_slots),
                t.downlink_delay,
            )
        });
        MetricsReport {
            aoa,
            coma: coma(&terms[0], &terms[1]),
            aoi: aoi_baseline(
                config.task1.gen_prob,
                config.task1.admit_prob,
                uplink[0],
                config.task2.gen_prob,
                config.task2.admit_prob,
                uplink[1],
            ),
            availability,
            uplink,
            engine,
        }
    }

    /// Uplink from the channel model, availability from `engine`.
    pub fn evaluate(config: &SystemConfig, engine: Engine, opts: &EngineOptions) -> Result<Self> {
        let uplink = uplink_probs(config)?;
        let pool = PoolModel::with_uplink(config, uplink);
        let availability = engine.availability(&pool, opts)?;
        Ok(Self::compose(config, uplink, availability, Provenance::Analytic(engine)))
    }
}
