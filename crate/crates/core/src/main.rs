use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use wncs::config::{ConfigError, Preset, SystemConfig};
use wncs::engine::{Engine, EngineOptions};
use wncs::error::Error;
use wncs::exec::{with_workers, Execution};
use wncs::experiments::{self, linspace, CompareSpec, SweepSpec};
use wncs::pareto::{self, GridSpec, SearchOptions};
use wncs::pool::PoolModel;
use wncs::report::{self, Table};
use wncs::sim::{self, DepartureSemantics, ServiceMode, SimOptions, UplinkMode};
use wncs::{queue_det, queue_geo};

const EXIT_PARSE: u8 = 3;
const EXIT_VALIDATION: u8 = 4;
const EXIT_NUMERICAL: u8 = 5;
const EXIT_RESOURCE: u8 = 6;
const EXIT_EMPTY: u8 = 7;
const EXIT_IO: u8 = 8;

#[derive(Parser)]
#[command(name = "wncs", version, about = "Age of Actuation and Cost of Missing Actuation for a two-class networked control system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytic metrics for one engine.
    Solve(SolveArgs),
    /// Monte Carlo run(s) of the slot-level model.
    Simulate(SimulateArgs),
    /// Blocking of every queue model over a load sweep.
    Compare(CompareArgs),
    /// Metrics versus the admission probability of task 1.
    Sweep(SweepArgs),
    /// Grid search for the CoMA / AoA trade-off front.
    Pareto(ParetoArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Default,
    QueueComparison,
}

impl From<PresetArg> for Preset {
    fn from(p: PresetArg) -> Self {
        match p {
            PresetArg::Default => Preset::Default,
            PresetArg::QueueComparison => Preset::QueueComparison,
        }
    }
}

#[derive(Args)]
struct Common {
    /// Config file; omitted keys come from the preset.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    slots: Option<u64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Run all work items on the calling thread.
    #[arg(long)]
    sequential: bool,
    /// Reachable-state cap for the det engine.
    #[arg(long, default_value_t = queue_det::DEFAULT_STATE_CAP)]
    state_cap: usize,
}

impl Common {
    fn config(&self, default_preset: Preset) -> Result<SystemConfig, Error> {
        let base = self.preset.map_or(default_preset, Preset::from).config();
        let mut cfg = match &self.config {
            Some(path) => SystemConfig::load_with_base(path, base)?,
            None => base,
        };
        if let Some(seed) = self.seed {
            cfg.rng_seed = seed;
        }
        if let Some(slots) = self.slots {
            cfg.sim_slots = slots;
        }
        let report = cfg.validate();
        if !report.is_valid() {
            return Err(ConfigError::Invalid(report).into());
        }
        Ok(cfg)
    }

    fn exec(&self) -> Execution {
        if self.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        }
    }

    fn engine_opts(&self) -> EngineOptions {
        EngineOptions {
            state_cap: self.state_cap,
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "geo-mg")]
    engine: Engine,
    /// Write `<PREFIX>.states` and `<PREFIX>.triplets` for the engine's chain.
    #[arg(long, value_name = "PREFIX")]
    dump_matrix: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ServiceArg {
    Det,
    Geo,
}

#[derive(Clone, Copy, ValueEnum)]
enum DepartureArg {
    Pre,
    Post,
}

#[derive(Clone, Copy, ValueEnum)]
enum UplinkArg {
    Bernoulli,
    Fading,
    Ideal,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum, default_value = "det")]
    service: ServiceArg,
    #[arg(long, value_enum, default_value = "pre")]
    departure: DepartureArg,
    #[arg(long, value_enum, default_value = "bernoulli")]
    uplink: UplinkArg,
    #[arg(long, default_value_t = 10_000)]
    warmup: u64,
    #[arg(long, default_value_t = 20)]
    batches: usize,
    /// Independent replications with seeds `seed, seed+1, ...`.
    #[arg(long, default_value_t = 1)]
    runs: u64,
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.005)]
    g2_min: f64,
    #[arg(long, default_value_t = 0.095)]
    g2_max: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
    /// `g1 / g2`.
    #[arg(long, default_value_t = 4.0)]
    ratio: f64,
    /// Analytic engines only.
    #[arg(long)]
    no_sim: bool,
    /// Use the fading channel instead of an error-free uplink.
    #[arg(long)]
    channel_uplink: bool,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 0.1)]
    eta_min: f64,
    #[arg(long, default_value_t = 1.0)]
    eta_max: f64,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long)]
    no_sim: bool,
}

#[derive(Args)]
struct ParetoArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "geo-mg")]
    engine: Engine,
    /// CSV of every evaluated grid point.
    #[arg(long)]
    points_out: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    grid_powers: usize,
    #[arg(long, default_value_t = 1e-3)]
    grid_pmin: f64,
    #[arg(long, default_value_t = 1.0)]
    grid_pmax: f64,
    #[arg(long, default_value_t = 20)]
    grid_admit: usize,
}

enum Failure {
    Error(Error),
    Empty(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Error(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Error(e.into())
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(ConfigError::Invalid(_)) | Error::Domain(_) => EXIT_VALIDATION,
        Error::Config(_) => EXIT_PARSE,
        Error::Numerical(_) => EXIT_NUMERICAL,
        Error::Resource { .. } => EXIT_RESOURCE,
        Error::Io(_) | Error::Csv(_) => EXIT_IO,
    }
}

fn emit(table: &Table, config: &SystemConfig, out: Option<&Path>) -> Result<(), Error> {
    match out {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            table.write(config, &mut w)?;
            w.flush()?;
        }
        None => table.write(config, io::stdout().lock())?,
    }
    Ok(())
}

fn dump_matrix(prefix: &Path, config: &SystemConfig, engine: Engine, opts: &EngineOptions) -> Result<(), Error> {
    let pool = PoolModel::from_config(config)?;
    let with_ext = |ext: &str| {
        let mut p = prefix.as_os_str().to_owned();
        p.push(ext);
        PathBuf::from(p)
    };
    let mut states = BufWriter::new(File::create(with_ext(".states"))?);
    let mut triplets = BufWriter::new(File::create(with_ext(".triplets"))?);
    match engine {
        Engine::Det => {
            let space = queue_det::enumerate_states(&pool, opts.state_cap)?;
            space.write_states(&mut states, &pool)?;
            space.chain.write_triplets(&mut triplets)?;
        }
        Engine::GeoMg | Engine::GeoDirect => {
            let part = queue_geo::LevelPartition::new(&pool);
            part.write_states(&mut states)?;
            queue_geo::build_chain(&pool, &part).write_triplets(&mut triplets)?;
        }
        Engine::Erlang => {
            return Err(Error::Domain("the erlang engine has no transition matrix to dump".into()))
        }
    }
    states.flush()?;
    triplets.flush()?;
    Ok(())
}

fn run_solve(args: &SolveArgs) -> Result<(), Failure> {
    let c = &args.common;
    let cfg = c.config(Preset::Default)?;
    let opts = c.engine_opts();
    let report = experiments::solve(&cfg, args.engine, &opts)?;
    if let Some(prefix) = &args.dump_matrix {
        dump_matrix(prefix, &cfg, args.engine, &opts)?;
    }
    emit(&report::solve_table(&report), &cfg, c.out.as_deref())?;
    Ok(())
}

fn run_simulate(args: &SimulateArgs) -> Result<(), Failure> {
    let c = &args.common;
    let cfg = c.config(Preset::Default)?;
    let opts = SimOptions {
        service: match args.service {
            ServiceArg::Det => ServiceMode::Deterministic,
            ServiceArg::Geo => ServiceMode::Geometric,
        },
        departure: match args.departure {
            DepartureArg::Pre => DepartureSemantics::Pre,
            DepartureArg::Post => DepartureSemantics::Post,
        },
        uplink: match args.uplink {
            UplinkArg::Bernoulli => UplinkMode::Bernoulli,
            UplinkArg::Fading => UplinkMode::FadingDraw,
            UplinkArg::Ideal => UplinkMode::Ideal,
        },
        warmup: args.warmup,
        batches: args.batches,
    };
    if args.runs == 0 {
        return Err(Error::Domain("--runs must be positive".into()).into());
    }
    let seeds: Vec<u64> = (0..args.runs).map(|k| cfg.rng_seed.wrapping_add(k)).collect();
    let results = with_workers(c.workers, || {
        wncs::exec::try_par_map(c.exec(), &seeds, |&seed| {
            let mut run_cfg = cfg.clone();
            run_cfg.rng_seed = seed;
            sim::run(&run_cfg, &opts)
        })
    })??;
    emit(&report::simulate_table(&results), &cfg, c.out.as_deref())?;
    Ok(())
}

fn run_compare(args: &CompareArgs) -> Result<(), Failure> {
    let c = &args.common;
    let cfg = c.config(Preset::QueueComparison)?;
    let spec = CompareSpec {
        g2: linspace(args.g2_min, args.g2_max, args.points),
        ratio: args.ratio,
        simulate: !args.no_sim,
        ideal_uplink: !args.channel_uplink,
        ..CompareSpec::default()
    };
    let opts = c.engine_opts();
    let rows = with_workers(c.workers, || experiments::compare(&cfg, &spec, &opts, c.exec()))??;
    let violations = rows.iter().filter(|r| r.det_le_geo == Some(false)).count();
    if violations > 0 {
        eprintln!("warning: det blocking exceeds geo-mg blocking on {violations} rows");
    }
    emit(&report::compare_table(&rows), &cfg, c.out.as_deref())?;
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let c = &args.common;
    let cfg = c.config(Preset::Default)?;
    let spec = SweepSpec {
        eta1: linspace(args.eta_min, args.eta_max, args.points),
        simulate: !args.no_sim,
        ..SweepSpec::default()
    };
    let opts = c.engine_opts();
    let rows = with_workers(c.workers, || experiments::sweep_eta1(&cfg, &spec, &opts, c.exec()))??;
    emit(&report::sweep_table(&rows), &cfg, c.out.as_deref())?;
    Ok(())
}

fn run_pareto(args: &ParetoArgs) -> Result<(), Failure> {
    let c = &args.common;
    let cfg = c.config(Preset::Default)?;
    if !(args.grid_pmin > 0.0 && args.grid_pmin <= args.grid_pmax) {
        return Err(Error::Domain("power range must satisfy 0 < pmin <= pmax".into()).into());
    }
    let grid = GridSpec::new(args.grid_powers, args.grid_pmin, args.grid_pmax, args.grid_admit);
    let opts = SearchOptions {
        engine_opts: c.engine_opts(),
        exec: c.exec(),
    };
    let result = with_workers(c.workers, || pareto::search(&cfg, &grid, args.engine, &opts))??;
    if let Some(path) = &args.points_out {
        emit(&report::pareto_points_table(&result), &cfg, Some(path))?;
    }
    emit(&report::pareto_front_table(&result), &cfg, c.out.as_deref())?;

    eprintln!("grid points: {} ({} feasible)", result.points.len(), result.feasible_count());
    eprintln!("front size: {}", result.front.len());
    match result.baseline {
        Some(b) => {
            eprintln!("baseline minimum CoMA: {} at power {}", b.coma, b.power);
            eprintln!("front points below baseline: {}", result.below_baseline());
            if let Some(gap) = result.coma_gap() {
                eprintln!("CoMA gap (baseline - front minimum): {gap}");
            }
        }
        None => eprintln!("baseline: no feasible point"),
    }
    if result.front.is_empty() {
        return Err(Failure::Empty("no feasible decision with finite AoA".into()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Simulate(a) => run_simulate(a),
        Command::Compare(a) => run_compare(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Pareto(a) => run_pareto(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Empty(msg)) => {
            eprintln!("wncs: empty result: {msg}");
            ExitCode::from(EXIT_EMPTY)
        }
        Err(Failure::Error(e)) => {
            eprintln!("wncs: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
