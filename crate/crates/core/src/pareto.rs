//! Exhaustive grid search over `(P_{T,1}, P_{T,2}, η1, η2)` for the
//! bi-objective problem min `{CoMA, Δ̄1}` under the average power budget,
//! plus the non-differentiated baseline (`η1 = η2`, `P_{T,1} = P_{T,2}`).

use std::cmp::Ordering;

use crate::channel;
use crate::config::SystemConfig;
use crate::engine::{Engine, EngineOptions};
use crate::error::{Error, Result};
use crate::exec::{try_par_map, Execution};
use crate::metrics::{Age, MetricsReport, Provenance};
use crate::pool::PoolModel;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Decision {
    pub tx_power: [f64; 2],
    pub admit_prob: [f64; 2],
}

impl Decision {
    /// `(P1, P2, η1, η2)`, the order used for tie-breaking.
    pub fn key(&self) -> [f64; 4] {
        [self.tx_power[0], self.tx_power[1], self.admit_prob[0], self.admit_prob[1]]
    }

    pub fn apply(&self, config: &SystemConfig) -> SystemConfig {
        let mut cfg = config.clone();
        cfg.task1.tx_power = self.tx_power[0];
        cfg.task2.tx_power = self.tx_power[1];
        cfg.task1.admit_prob = self.admit_prob[0];
        cfg.task2.admit_prob = self.admit_prob[1];
        cfg
    }

    fn check(&self) -> Result<()> {
        for i in 0..2 {
            if !(self.tx_power[i] > 0.0 && self.tx_power[i].is_finite()) {
                return Err(Error::Domain(format!("transmit power {} must be positive", self.tx_power[i])));
            }
            if !(self.admit_prob[i] > 0.0 && self.admit_prob[i] <= 1.0) {
                return Err(Error::Domain(format!(
                    "admission probability {} must lie in (0, 1]",
                    self.admit_prob[i]
                )));
            }
        }
        Ok(())
    }
}

fn cmp_key(a: &[f64; 4], b: &[f64; 4]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionPoint {
    pub decision: Decision,
    /// `g1 η1 P1 + g2 η2 P2`.
    pub power: f64,
    pub feasible: bool,
    pub coma: f64,
    pub aoa1: Age,
    pub engine: Engine,
}

/// Power and admission levels; both classes draw from the same lists.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub powers: Vec<f64>,
    pub admit: Vec<f64>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::new(20, 1e-3, 1.0, 20)
    }
}

impl GridSpec {
    /// `power_levels` log-spaced powers in `[p_min, p_max]` and
    /// `admit_levels` evenly spaced probabilities `k / admit_levels`.
    pub fn new(power_levels: usize, p_min: f64, p_max: f64, admit_levels: usize) -> Self {
        GridSpec {
            powers: log_spaced(p_min, p_max, power_levels),
            admit: (1..=admit_levels).map(|k| k as f64 / admit_levels as f64).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.powers.len().pow(2) * self.admit.len().pow(2)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All decisions in lexicographic `(P1, P2, η1, η2)` grid order.
    pub fn decisions(&self) -> Vec<Decision> {
        let mut out = Vec::with_capacity(self.len());
        for &p1 in &self.powers {
            for &p2 in &self.powers {
                for &e1 in &self.admit {
                    for &e2 in &self.admit {
                        out.push(Decision {
                            tx_power: [p1, p2],
                            admit_prob: [e1, e2],
                        });
                    }
                }
            }
        }
        out
    }

    /// The uniform family `η1 = η2`, `P1 = P2`.
    pub fn baseline_decisions(&self) -> Vec<Decision> {
        let mut out = Vec::with_capacity(self.powers.len() * self.admit.len());
        for &p in &self.powers {
            for &e in &self.admit {
                out.push(Decision {
                    tx_power: [p, p],
                    admit_prob: [e, e],
                });
            }
        }
        out
    }
}

pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => {
            let (a, b) = (lo.ln(), hi.ln());
            (0..n)
                .map(|k| {
                    if k == 0 {
                        lo
                    } else if k == n - 1 {
                        hi
                    } else {
                        (a + (b - a) * k as f64 / (n - 1) as f64).exp()
                    }
                })
                .collect()
        }
    }
}

fn point_from(
    decision: Decision,
    config: &SystemConfig,
    uplink: [f64; 2],
    engine: Engine,
    opts: &EngineOptions,
) -> Result<DecisionPoint> {
    decision.check()?;
    let cfg = decision.apply(config);
    let pool = PoolModel::with_uplink(&cfg, uplink);
    let availability = engine.availability(&pool, opts)?;
    let report = MetricsReport::compose(&cfg, uplink, availability, Provenance::Analytic(engine));
    Ok(DecisionPoint {
        decision,
        power: cfg.power_consumption(),
        feasible: cfg.energy_feasible().unwrap_or(true),
        coma: report.coma,
        aoa1: report.aoa[0],
        engine,
    })
}

/// Objectives of one decision; infeasible decisions are evaluated and flagged.
pub fn evaluate_point(
    decision: Decision,
    config: &SystemConfig,
    engine: Engine,
    opts: &EngineOptions,
) -> Result<DecisionPoint> {
    let uplink = [
        channel::uplink_success_prob(&config.channel, decision.tx_power[0])?,
        channel::uplink_success_prob(&config.channel, decision.tx_power[1])?,
    ];
    point_from(decision, config, uplink, engine, opts)
}

/// Indices of the non-dominated points, ordered by ascending `aoa1`
/// (descending `coma`). Among points with identical objectives only the
/// lexicographically smallest key survives.
pub fn front_indices(aoa1: &[f64], coma: &[f64], keys: &[[f64; 4]]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..aoa1.len()).collect();
    order.sort_by(|&a, &b| {
        aoa1[a]
            .total_cmp(&aoa1[b])
            .then(coma[a].total_cmp(&coma[b]))
            .then(cmp_key(&keys[a], &keys[b]))
    });
    let mut best = f64::INFINITY;
    let mut front = Vec::new();
    for i in order {
        if coma[i] < best {
            best = coma[i];
            front.push(i);
        }
    }
    front
}

/// Candidates for the front: feasible with finite `aoa1`.
fn front_of(points: &[DecisionPoint]) -> Vec<DecisionPoint> {
    let candidates: Vec<&DecisionPoint> = points
        .iter()
        .filter(|p| p.feasible && !p.aoa1.is_unbounded())
        .collect();
    let aoa1: Vec<f64> = candidates.iter().map(|p| p.aoa1.value()).collect();
    let coma: Vec<f64> = candidates.iter().map(|p| p.coma).collect();
    let keys: Vec<[f64; 4]> = candidates.iter().map(|p| p.decision.key()).collect();
    front_indices(&aoa1, &coma, &keys)
        .into_iter()
        .map(|i| *candidates[i])
        .collect()
}

/// Minimum-CoMA feasible point; ties go to lower power, then smaller key.
pub fn min_coma(points: &[DecisionPoint]) -> Option<DecisionPoint> {
    points
        .iter()
        .filter(|p| p.feasible)
        .min_by(|a, b| {
            a.coma
                .total_cmp(&b.coma)
                .then(a.power.total_cmp(&b.power))
                .then(cmp_key(&a.decision.key(), &b.decision.key()))
        })
        .copied()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParetoFront {
    /// Every grid point in grid order.
    pub points: Vec<DecisionPoint>,
    pub front: Vec<DecisionPoint>,
    pub baseline_points: Vec<DecisionPoint>,
    /// Minimum-CoMA feasible baseline point.
    pub baseline: Option<DecisionPoint>,
}

impl ParetoFront {
    pub fn feasible_count(&self) -> usize {
        self.points.iter().filter(|p| p.feasible).count()
    }

    /// Front points whose CoMA is strictly below the baseline minimum.
    pub fn below_baseline(&self) -> usize {
        match self.baseline {
            Some(b) => self.front.iter().filter(|p| p.coma < b.coma).count(),
            None => self.front.len(),
        }
    }

    /// Baseline minimum CoMA minus the front's minimum CoMA.
    pub fn coma_gap(&self) -> Option<f64> {
        let best = self.front.iter().map(|p| p.coma).min_by(f64::total_cmp)?;
        Some(self.baseline?.coma - best)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SearchOptions {
    pub engine_opts: EngineOptions,
    pub exec: Execution,
}

fn evaluate_all(
    decisions: &[Decision],
    config: &SystemConfig,
    engine: Engine,
    opts: &SearchOptions,
    uplink_of: &(dyn Fn(f64) -> f64 + Sync),
) -> Result<Vec<DecisionPoint>> {
    try_par_map(opts.exec, decisions, |d| {
        let uplink = [uplink_of(d.tx_power[0]), uplink_of(d.tx_power[1])];
        point_from(*d, config, uplink, engine, &opts.engine_opts)
    })
}

pub fn search(
    config: &SystemConfig,
    grid: &GridSpec,
    engine: Engine,
    opts: &SearchOptions,
) -> Result<ParetoFront> {
    if grid.is_empty() {
        return Err(Error::Domain("empty decision grid".into()));
    }
    let uplink: Vec<f64> = grid
        .powers
        .iter()
        .map(|&p| channel::uplink_success_prob(&config.channel, p))
        .collect::<Result<_>>()?;
    let uplink_of = |p: f64| {
        let k = grid.powers.iter().position(|&x| x == p).expect("grid power");
        uplink[k]
    };
    let points = evaluate_all(&grid.decisions(), config, engine, opts, &uplink_of)?;
    let baseline_points = evaluate_all(&grid.baseline_decisions(), config, engine, opts, &uplink_of)?;
    Ok(ParetoFront {
        front: front_of(&points),
        baseline: min_coma(&baseline_points),
        points,
        baseline_points,
    })
}
