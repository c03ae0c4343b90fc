//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};

use wncs::channel::{fading_threshold, uplink_success_prob};
use wncs::config::{ChannelParams, Preset, SystemConfig};
use wncs::engine::{Engine, EngineOptions};
use wncs::exec::Execution;
use wncs::experiments::{compare, linspace, sweep_eta1, CompareSpec, Model, SweepSpec};
use wncs::pareto::{search, GridSpec, SearchOptions};
use wncs::pool::PoolModel;
use wncs::queue_det::count_states;
use wncs::queue_geo::{count_states_geo, solve_direct, solve_matrix_geometric};
use wncs::sim::ServiceMode;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_budget(start: Instant, budget: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t < budget, || format!("took {t:.2?}, budget {budget:?}"))
}

fn geo_lattice_size(c: u32, n: u32) -> u64 {
    let mut k = 0;
    for n1 in 0..=c {
        for n2 in 0..=c {
            if n1 + n * n2 <= c {
                k += 1;
            }
        }
    }
    k
}

fn det_lattice_size(d1: u32, d2: u32, c: u32, n: u32) -> u128 {
    let mut k = 0;
    for v1 in 0u64..(1 << d1) {
        for v2 in 0u64..(1 << d2) {
            if v1.count_ones() + n * v2.count_ones() <= c {
                k += 1;
            }
        }
    }
    k
}

fn state_counts() -> Outcome {
    let start = Instant::now();
    let c84 = count_states_geo(8, 4);
    let c124 = count_states_geo(12, 4);
    ensure(c84 == 15, || format!("count_states_geo(8,4) = {c84}"))?;
    ensure(c84 == geo_lattice_size(8, 4), || "C=8,N=4 differs from enumeration".into())?;
    // n2 = 0..3 leaves 13 + 9 + 5 + 1 placements for task 1
    ensure(c124 == 13 + 9 + 5 + 1, || format!("count_states_geo(12,4) = {c124}"))?;
    ensure(c124 == geo_lattice_size(12, 4), || "C=12,N=4 differs from enumeration".into())?;
    let mut cases = 0;
    for d1 in 1..=6 {
        for d2 in 1..=6 {
            for c in 1..=10 {
                for n in 1..=4 {
                    let (f, b) = (count_states(d1, d2, c, n), det_lattice_size(d1, d2, c, n));
                    ensure(f == b, || format!("det count ({d1},{d2},{c},{n}): {f} vs {b}"))?;
                    cases += 1;
                }
            }
        }
    }
    within_budget(start, Duration::from_secs(1))?;
    Ok(format!(
        "geo(8,4)={c84}, geo(12,4)={c124}, {cases} det cases match enumeration in {:.2?}",
        start.elapsed()
    ))
}

fn solver_cross_validation() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(20_250_101);
    let mut pools = Vec::new();
    for _ in 0..20 {
        let capacity = rng.random_range(1..=24);
        let n = rng.random_range(1..=capacity.min(6));
        let a1 = rng.random_range(0.0..0.9);
        let a2 = rng.random_range(0.0..(1.0 - a1));
        pools.push(PoolModel {
            capacity,
            units: [1, n],
            service_slots: [rng.random_range(1..=20), rng.random_range(1..=20)],
            arrival: [a1, a2],
        });
    }
    pools.push(PoolModel::from_config(&SystemConfig::default()).map_err(|e| e.to_string())?);
    pools.push(PoolModel::with_uplink(&Preset::QueueComparison.config(), [1.0, 1.0]));
    let mut worst = 0.0f64;
    for pool in &pools {
        let mg = solve_matrix_geometric(pool).map_err(|e| format!("{pool:?}: {e}"))?;
        let direct = solve_direct(pool).map_err(|e| format!("{pool:?}: {e}"))?;
        ensure(mg.states == direct.states, || "state orderings differ".into())?;
        let err = mg
            .probs
            .iter()
            .zip(&direct.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
        ensure(err <= 1e-10, || format!("{pool:?}: ‖mg − direct‖∞ = {err:e}"))?;
    }
    within_budget(start, Duration::from_secs(10))?;
    Ok(format!("{} configs, max ∞-norm gap {worst:.1e}", pools.len()))
}

fn queue_comparison_config() -> SystemConfig {
    let mut cfg = Preset::QueueComparison.config();
    cfg.sim_slots = 1_000_000;
    cfg
}

fn analytic_vs_simulation() -> Outcome {
    let start = Instant::now();
    let spec = CompareSpec {
        engines: vec![Engine::Det, Engine::GeoMg],
        ..CompareSpec::default()
    };
    let rows = compare(&queue_comparison_config(), &spec, &EngineOptions::default(), Execution::Parallel)
        .map_err(|e| e.to_string())?;
    let mut checked = 0;
    let mut worst_z = 0.0f64;
    for sim_row in rows.iter().filter(|r| matches!(r.model, Model::Simulated(_))) {
        let engine = match sim_row.model {
            Model::Simulated(ServiceMode::Deterministic) => Engine::Det,
            _ => Engine::GeoMg,
        };
        let analytic = rows
            .iter()
            .find(|r| r.g2 == sim_row.g2 && r.task == sim_row.task && r.model == Model::Analytic(engine))
            .expect("analytic row");
        let (m, se) = (sim_row.blocking.mean, sim_row.blocking.std_err);
        let target = analytic.blocking.mean;
        ensure(sim_row.blocking.within(target, 3.0, 0.0), || {
            format!(
                "g2={} task{} {}: sim {m:.6} ± {se:.2e} vs {} {target:.6}",
                sim_row.g2,
                sim_row.task + 1,
                sim_row.model.name(),
                engine
            )
        })?;
        if se > 0.0 {
            worst_z = worst_z.max((m - target).abs() / se);
        }
        checked += 1;
    }
    ensure(checked == 40, || format!("expected 40 comparisons, got {checked}"))?;
    within_budget(start, Duration::from_secs(120))?;
    Ok(format!("{checked} comparisons, max |z| = {worst_z:.2}, {:.2?}", start.elapsed()))
}

fn model_ordering() -> Outcome {
    let spec = CompareSpec {
        engines: vec![Engine::Det, Engine::GeoMg],
        simulate: false,
        ..CompareSpec::default()
    };
    let cfg = queue_comparison_config();
    let rows = compare(&cfg, &spec, &EngineOptions::default(), Execution::Parallel).map_err(|e| e.to_string())?;
    for r in &rows {
        ensure(r.det_le_geo == Some(true), || {
            format!("det blocking exceeds geo-mg at g2={} task{}", r.g2, r.task + 1)
        })?;
    }
    // light loads along the same g1 = 4 g2 ray: ρ1 = 20 g2, ρ2 = 10 g2
    let mut worst = 0.0f64;
    let mut points = 0;
    for g2 in linspace(0.000_25, 0.002_5, 10) {
        let mut c = cfg.clone();
        c.task1.gen_prob = 4.0 * g2;
        c.task2.gen_prob = g2;
        let pool = PoolModel::with_uplink(&c, [1.0, 1.0]);
        let rho = [0, 1].map(|i| pool.arrival[i] * f64::from(pool.service_slots[i]));
        ensure(rho[0] <= 0.05 + 1e-12 && rho[1] <= 0.05 + 1e-12, || format!("ρ = {rho:?}"))?;
        let opts = EngineOptions::default();
        let geo = Engine::GeoMg.availability(&pool, &opts).map_err(|e| e.to_string())?;
        let erl = Engine::Erlang.availability(&pool, &opts).map_err(|e| e.to_string())?;
        for i in 0..2 {
            let gap = (geo[i] - erl[i]).abs();
            worst = worst.max(gap);
            ensure(gap <= 1e-3, || format!("ρ = {rho:?}: task{} gap {gap:e}", i + 1))?;
        }
        points += 1;
    }
    Ok(format!(
        "det ≤ geo on {} rows; erlang–geo gap ≤ {worst:.1e} over {points} loads with ρ ≤ 0.05",
        rows.len()
    ))
}

fn metric_reproduction() -> Outcome {
    let start = Instant::now();
    let mut cfg = SystemConfig::default();
    cfg.sim_slots = 1_000_000;
    let spec = SweepSpec {
        engines: vec![Engine::GeoMg],
        ..SweepSpec::default()
    };
    let rows = sweep_eta1(&cfg, &spec, &EngineOptions::default(), Execution::Parallel).map_err(|e| e.to_string())?;
    let analytic: Vec<_> = rows.iter().filter(|r| r.model == Model::Analytic(Engine::GeoMg)).collect();
    let simulated: Vec<_> = rows
        .iter()
        .filter(|r| r.model == Model::Simulated(ServiceMode::Geometric))
        .collect();
    ensure(analytic.len() == 10 && simulated.len() == 10, || "sweep size".into())?;

    let mut failures = Vec::new();
    for (a, s) in analytic.iter().zip(&simulated) {
        if !s.coma.within(a.coma.mean, 3.0, 0.0) {
            failures.push(format!(
                "η1={:.1} CoMA sim {:.4} ± {:.1e} vs {:.4}",
                a.eta1, s.coma.mean, s.coma.std_err, a.coma.mean
            ));
        }
    }
    for task in 0..2 {
        // admissible constant offsets: intersection of per-point 3 SE windows
        let (mut lo, mut hi) = (-1.0f64, 1.0f64);
        let mut span = (f64::INFINITY, f64::NEG_INFINITY);
        for (a, s) in analytic.iter().zip(&simulated) {
            let d = s.aoa[task].mean - a.aoa[task].mean;
            let w = 3.0 * s.aoa[task].std_err;
            lo = lo.max(d - w);
            hi = hi.min(d + w);
            span = (span.0.min(d), span.1.max(d));
        }
        if lo > hi {
            failures.push(format!(
                "AoA{}: sim − analytic ranges over [{:.2}, {:.2}] slots; no offset within ±1 fits every point",
                task + 1,
                span.0,
                span.1
            ));
        }
    }
    let aoa2: Vec<f64> = analytic.iter().map(|r| r.aoa[1].mean).collect();
    if !aoa2.windows(2).all(|w| w[1] >= w[0]) {
        failures.push(format!("analytic AoA2 not nondecreasing in η1: {aoa2:?}"));
    }
    within_budget(start, Duration::from_secs(120))?;
    if failures.is_empty() {
        Ok("AoA within ±1-slot offset, CoMA within 3 SE, AoA2 coupling holds".into())
    } else {
        Err(failures.join("; "))
    }
}

fn integer_shape_closed_form(m: u32, x: f64) -> f64 {
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..m {
        term *= x / f64::from(k);
        sum += term;
    }
    (-x).exp() * sum
}

fn channel_oracle() -> Outcome {
    let base = SystemConfig::default().channel;
    let mut worst = 0.0f64;
    let mut cases = 0;
    for m in 1..=6 {
        for power in [1e-3, 5e-3, 0.02, 0.05, 0.2, 1.0] {
            let ch = ChannelParams { shape: f64::from(m), ..base };
            let psi = fading_threshold(&ch, power).map_err(|e| e.to_string())?;
            let p = uplink_success_prob(&ch, power).map_err(|e| e.to_string())?;
            let q = integer_shape_closed_form(m, f64::from(m) * psi);
            worst = worst.max((p - q).abs());
            ensure((p - q).abs() <= 1e-10, || format!("m={m} P={power}: {p} vs {q}"))?;
            cases += 1;
        }
    }
    let samples = 1_000_000u32;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_z = 0.0f64;
    for (m, power) in [(1.0, 0.05), (2.0, 0.01), (3.0, 0.003), (1.5, 0.002)] {
        let ch = ChannelParams { shape: m, ..base };
        let psi = fading_threshold(&ch, power).map_err(|e| e.to_string())?;
        let p = uplink_success_prob(&ch, power).map_err(|e| e.to_string())?;
        let gain = Gamma::new(m, 1.0 / m).expect("gamma");
        let hits = (0..samples).filter(|_| gain.sample(&mut rng) >= psi).count();
        let est = f64::from(hits as u32) / f64::from(samples);
        let se = (p * (1.0 - p) / f64::from(samples)).sqrt();
        let z = (est - p).abs() / se;
        worst_z = worst_z.max(z);
        ensure(z <= 3.0, || format!("m={m} P={power}: MC {est} vs {p} (z={z:.2})"))?;
    }
    Ok(format!(
        "{cases} closed-form cases, max error {worst:.1e}; 4 Monte Carlo cases, max |z| = {worst_z:.2}"
    ))
}

fn pareto_gap() -> Outcome {
    let start = Instant::now();
    let mut cfg = SystemConfig::default();
    cfg.energy_rate = Some(0.18);
    let r = search(&cfg, &GridSpec::default(), Engine::GeoMg, &SearchOptions::default()).map_err(|e| e.to_string())?;
    let baseline = r.baseline.ok_or("no feasible baseline point")?;
    let below = r.front.iter().filter(|p| p.feasible && p.coma < baseline.coma).count();
    ensure(below > 0, || format!("no front point below baseline CoMA {}", baseline.coma))?;

    let candidates: Vec<_> = r.points.iter().filter(|p| p.feasible && !p.aoa1.is_unbounded()).collect();
    let dominates = |a: (f64, f64), b: (f64, f64)| a.0 <= b.0 && a.1 <= b.1 && (a.0 < b.0 || a.1 < b.1);
    let obj = |p: &wncs::pareto::DecisionPoint| (p.coma, p.aoa1.value());
    for f in &r.front {
        for c in &candidates {
            ensure(!dominates(obj(c), obj(f)), || format!("front point {f:?} dominated by {c:?}"))?;
        }
    }
    for c in &candidates {
        let covered = r.front.iter().any(|f| dominates(obj(f), obj(c)) || obj(f) == obj(c));
        ensure(covered, || format!("non-dominated point {c:?} missing from front"))?;
    }
    within_budget(start, Duration::from_secs(60))?;
    Ok(format!(
        "front {} points, {below} below baseline CoMA {:.4} (gap {:.4}), {:.2?}",
        r.front.len(),
        baseline.coma,
        r.coma_gap().unwrap_or(f64::NAN),
        start.elapsed()
    ))
}

fn run_cli(dir: &Path, tag: &str, args: &[&str]) -> Result<Vec<Vec<u8>>, String> {
    let out = dir.join(format!("{tag}.csv"));
    let extra = dir.join(format!("{tag}.points.csv"));
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_wncs"));
    cmd.args(args).arg("--out").arg(&out);
    if args[0] == "pareto" {
        cmd.arg("--points-out").arg(&extra);
    }
    let status = cmd.output().map_err(|e| e.to_string())?;
    ensure(status.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr))
    })?;
    let mut files = vec![std::fs::read(&out).map_err(|e| e.to_string())?];
    if args[0] == "pareto" {
        files.push(std::fs::read(&extra).map_err(|e| e.to_string())?);
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let commands: [&[&str]; 5] = [
        &["solve", "--engine", "det"],
        &["simulate", "--slots", "40000", "--runs", "3", "--service", "geo", "--uplink", "fading"],
        &["compare", "--slots", "30000", "--points", "3"],
        &["sweep", "--slots", "30000", "--points", "3"],
        &["pareto", "--grid-powers", "4", "--grid-admit", "4"],
    ];
    for args in commands {
        let a = run_cli(dir.path(), &format!("{}-a", args[0]), args)?;
        let b = run_cli(dir.path(), &format!("{}-b", args[0]), args)?;
        ensure(a == b, || format!("{} output differs between runs", args[0]))?;
        ensure(a.iter().all(|f| !f.is_empty()), || format!("{} wrote an empty file", args[0]))?;
    }
    Ok("solve, simulate, compare, sweep, pareto byte-identical across two runs".into())
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("state-count identities", state_counts),
        ("matrix-geometric vs direct solve", solver_cross_validation),
        ("analytic vs simulated blocking", analytic_vs_simulation),
        ("queue-model ordering and erlang gap", model_ordering),
        ("AoA/CoMA closed forms vs simulation", metric_reproduction),
        ("uplink success oracle", channel_oracle),
        ("differentiated front beats baseline", pareto_gap),
        ("CLI determinism", determinism),
    ];
    panic::set_hook(Box::new(|_| {}));
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let outcome = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("criterion {} PASS  {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {} FAIL  {name}: {detail}", k + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
