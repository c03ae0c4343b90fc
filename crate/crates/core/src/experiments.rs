//! Experiment drivers behind the CLI: queue-model comparison over a load
//! sweep and the admission-probability sweep of task 1.

use crate::config::SystemConfig;
use crate::engine::{Engine, EngineOptions};
use crate::error::{Error, Result};
use crate::exec::{try_par_map, Execution};
use crate::metrics::{Age, MetricsReport, Provenance};
use crate::pool::{uplink_probs, PoolModel};
use crate::sim::{self, Estimate, ServiceMode, SimOptions, UplinkMode};

/// Evenly spaced values from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n)
            .map(|k| if k == n - 1 { hi } else { lo + (hi - lo) * k as f64 / (n - 1) as f64 })
            .collect(),
    }
}

/// Row label: an analytic engine or a simulated service mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Analytic(Engine),
    Simulated(ServiceMode),
}

impl Model {
    pub fn name(self) -> &'static str {
        match self {
            Model::Analytic(e) => e.name(),
            Model::Simulated(ServiceMode::Deterministic) => "sim-det",
            Model::Simulated(ServiceMode::Geometric) => "sim-geo",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareSpec {
    /// Task-2 generation probabilities; task 1 uses `ratio · g2`.
    pub g2: Vec<f64>,
    pub ratio: f64,
    pub engines: Vec<Engine>,
    pub simulate: bool,
    /// Error-free uplink for both classes.
    pub ideal_uplink: bool,
}

impl Default for CompareSpec {
    fn default() -> Self {
        CompareSpec {
            g2: linspace(0.005, 0.095, 10),
            ratio: 4.0,
            engines: vec![Engine::Det, Engine::GeoMg, Engine::GeoDirect, Engine::Erlang],
            simulate: true,
            ideal_uplink: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub g1: f64,
    pub g2: f64,
    pub model: Model,
    pub task: usize,
    pub blocking: Estimate,
    /// Analytic det blocking ≤ analytic geo-mg blocking for this load and task.
    pub det_le_geo: Option<bool>,
}

fn point_config(base: &SystemConfig, g1: f64, g2: f64) -> Result<SystemConfig> {
    let mut cfg = base.clone();
    cfg.task1.gen_prob = g1;
    cfg.task2.gen_prob = g2;
    let report = cfg.validate();
    if !report.is_valid() {
        return Err(crate::config::ConfigError::Invalid(report).into());
    }
    Ok(cfg)
}

fn exact(x: f64) -> Estimate {
    Estimate { mean: x, std_err: 0.0 }
}

/// Blocking `1 − P(Γ ≥ N_i)` per (load, model, task), ordered by load, then
/// model as listed, then task.
pub fn compare(
    base: &SystemConfig,
    spec: &CompareSpec,
    engine_opts: &EngineOptions,
    exec: Execution,
) -> Result<Vec<CompareRow>> {
    if spec.g2.is_empty() {
        return Err(Error::Domain("empty load sweep".into()));
    }
    let uplink_mode = if spec.ideal_uplink { UplinkMode::Ideal } else { UplinkMode::Bernoulli };
    let per_point = try_par_map(exec, &spec.g2, |&g2| {
        let g1 = spec.ratio * g2;
        let cfg = point_config(base, g1, g2)?;
        let uplink = if spec.ideal_uplink { [1.0, 1.0] } else { uplink_probs(&cfg)? };
        let pool = PoolModel::with_uplink(&cfg, uplink);
        let mut results: Vec<(Model, [Estimate; 2])> = Vec::new();
        for &e in &spec.engines {
            let a = e.availability(&pool, engine_opts)?;
            results.push((Model::Analytic(e), [exact(1.0 - a[0]), exact(1.0 - a[1])]));
        }
        if spec.simulate {
            for service in [ServiceMode::Deterministic, ServiceMode::Geometric] {
                let opts = SimOptions::default().with_service(service).with_uplink(uplink_mode);
                let r = sim::run(&cfg, &opts)?;
                results.push((Model::Simulated(service), r.blocking));
            }
        }
        let analytic = |e: Engine| {
            results
                .iter()
                .find(|(m, _)| *m == Model::Analytic(e))
                .map(|(_, b)| b.map(|x| x.mean))
        };
        let ordering = match (analytic(Engine::Det), analytic(Engine::GeoMg)) {
            (Some(d), Some(g)) => [Some(d[0] <= g[0]), Some(d[1] <= g[1])],
            _ => [None, None],
        };
        Ok(results
            .into_iter()
            .flat_map(|(model, b)| {
                (0..2).map(move |task| CompareRow {
                    g1,
                    g2,
                    model,
                    task,
                    blocking: b[task],
                    det_le_geo: ordering[task],
                })
            })
            .collect::<Vec<_>>())
    })?;
    Ok(per_point.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub eta1: Vec<f64>,
    pub engines: Vec<Engine>,
    pub simulate: bool,
}

impl Default for SweepSpec {
    fn default() -> Self {
        SweepSpec {
            eta1: linspace(0.1, 1.0, 10),
            engines: vec![Engine::Det, Engine::GeoMg, Engine::Erlang],
            simulate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub eta1: f64,
    pub model: Model,
    pub aoa: [Estimate; 2],
    pub coma: Estimate,
    pub aoi: Estimate,
}

fn age_estimate(a: Age) -> Estimate {
    exact(a.value())
}

/// Δ̄1, Δ̄2, CoMA and AoI per η1 value, analytic engines then simulations.
pub fn sweep_eta1(
    base: &SystemConfig,
    spec: &SweepSpec,
    engine_opts: &EngineOptions,
    exec: Execution,
) -> Result<Vec<SweepRow>> {
    if spec.eta1.is_empty() {
        return Err(Error::Domain("empty admission sweep".into()));
    }
    if let Some(&bad) = spec.eta1.iter().find(|&&e| !(e > 0.0 && e <= 1.0)) {
        return Err(Error::Domain(format!("admission probability {bad} must lie in (0, 1]")));
    }
    let per_point = try_par_map(exec, &spec.eta1, |&eta1| {
        let mut cfg = base.clone();
        cfg.task1.admit_prob = eta1;
        let mut rows = Vec::new();
        for &e in &spec.engines {
            let r = MetricsReport::evaluate(&cfg, e, engine_opts)?;
            rows.push(SweepRow {
                eta1,
                model: Model::Analytic(e),
                aoa: r.aoa.map(age_estimate),
                coma: exact(r.coma),
                aoi: age_estimate(r.aoi),
            });
        }
        if spec.simulate {
            for service in [ServiceMode::Deterministic, ServiceMode::Geometric] {
                let r = sim::run(&cfg, &SimOptions::default().with_service(service))?;
                rows.push(SweepRow {
                    eta1,
                    model: Model::Simulated(service),
                    aoa: r.aoa,
                    coma: r.coma,
                    aoi: r.aoi,
                });
            }
        }
        Ok(rows)
    })?;
    Ok(per_point.into_iter().flatten().collect())
}

/// Metrics for one engine, with the provenance tag.
pub fn solve(config: &SystemConfig, engine: Engine, opts: &EngineOptions) -> Result<MetricsReport> {
    let report = config.validate();
    if !report.is_valid() {
        return Err(crate::config::ConfigError::Invalid(report).into());
    }
    let r = MetricsReport::evaluate(config, engine, opts)?;
    debug_assert_eq!(r.engine, Provenance::Analytic(engine));
    Ok(r)
}
