//! System parameters, their defaults and validation.
//!
//! Every quantity is stored in linear units. Decibel inputs are converted
//! when a config file is read (see [`file`]).

mod file;

use std::fmt;
use std::path::Path;

use thiserror::Error;

pub use file::{parse, to_config_string};

/// One of the two semantic task classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TaskId {
    /// Regular task, one compute unit.
    Regular,
    /// Critical task, `N` compute units.
    Critical,
}

impl TaskId {
    pub const ALL: [TaskId; 2] = [TaskId::Regular, TaskId::Critical];

    pub fn index(self) -> usize {
        match self {
            TaskId::Regular => 0,
            TaskId::Critical => 1,
        }
    }

    /// 1-based class number as used in config keys and CSV columns.
    pub fn number(self) -> u8 {
        self.index() as u8 + 1
    }
}

impl fmt::Display for TaskId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "task{}", self.number())
    }
}

/// Per-class traffic, admission, power, compute and delay parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct TaskClassParams {
    /// Probability that a packet of this class is generated in a slot.
    pub gen_prob: f64,
    /// Admission-control probability applied before transmission.
    pub admit_prob: f64,
    /// Uplink transmit power in watts.
    pub tx_power: f64,
    /// Compute units held while the task executes.
    pub units_required: u32,
    /// Deterministic service time in slots.
    pub service_slots: u32,
    /// Constant downlink delay in (possibly fractional) slots.
    pub downlink_delay: f64,
    /// Penalty charged per missed actuation.
    pub penalty: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    /// Nakagami-m shape parameter.
    pub shape: f64,
    pub pathloss_exp: f64,
    /// Sensor to controller distance in meters.
    pub distance: f64,
    /// Noise power in watts.
    pub noise_power: f64,
    /// Decoding SNR threshold, linear.
    pub snr_threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComputeParams {
    pub capacity: u32,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemConfig {
    pub task1: TaskClassParams,
    pub task2: TaskClassParams,
    pub channel: ChannelParams,
    pub compute: ComputeParams,
    /// Long-run power budget `E/T` in watts; `None` disables the constraint.
    pub energy_rate: Option<f64>,
    pub sim_slots: u64,
    pub rng_seed: u64,
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            task1: TaskClassParams {
                gen_prob: 0.4,
                admit_prob: 1.0,
                tx_power: 0.05,
                units_required: 1,
                service_slots: 10,
                downlink_delay: 0.1,
                penalty: 1.0,
            },
            task2: TaskClassParams {
                gen_prob: 0.1,
                admit_prob: 0.8,
                tx_power: 0.2,
                units_required: 4,
                service_slots: 10,
                downlink_delay: 0.1,
                penalty: 10.0,
            },
            channel: ChannelParams {
                shape: 1.0,
                pathloss_exp: 3.0,
                distance: 50.0,
                noise_power: db_to_linear(-80.0),
                snr_threshold: db_to_linear(5.0),
            },
            compute: ComputeParams { capacity: 8 },
            energy_rate: Some(0.18),
            sim_slots: 1_000_000,
            rng_seed: 1,
        }
    }
}

/// Named starting points for experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    /// Baseline parameters used throughout the numerical study.
    Default,
    /// Queue-model comparison setup: C=12, N=4, D_C=(5,10), full admission.
    QueueComparison,
}

impl Preset {
    pub fn config(self) -> SystemConfig {
        match self {
            Preset::Default => SystemConfig::default(),
            Preset::QueueComparison => {
                let mut cfg = SystemConfig::default();
                cfg.compute.capacity = 12;
                cfg.task1.service_slots = 5;
                cfg.task2.service_slots = 10;
                cfg.task1.admit_prob = 1.0;
                cfg.task2.admit_prob = 1.0;
                cfg.task1.gen_prob = 0.2;
                cfg.task2.gen_prob = 0.05;
                cfg
            }
        }
    }
}

impl SystemConfig {
    pub fn task(&self, id: TaskId) -> &TaskClassParams {
        match id {
            TaskId::Regular => &self.task1,
            TaskId::Critical => &self.task2,
        }
    }

    pub fn task_mut(&mut self, id: TaskId) -> &mut TaskClassParams {
        match id {
            TaskId::Regular => &mut self.task1,
            TaskId::Critical => &mut self.task2,
        }
    }

    /// Average transmit power `g1 η1 P1 + g2 η2 P2`.
    pub fn power_consumption(&self) -> f64 {
        TaskId::ALL
            .iter()
            .map(|&id| {
                let t = self.task(id);
                t.gen_prob * t.admit_prob * t.tx_power
            })
            .sum()
    }

    /// `None` when no budget is configured.
    pub fn energy_feasible(&self) -> Option<bool> {
        self.energy_rate.map(|budget| self.power_consumption() <= budget)
    }

    /// Reads a config file, filling omitted keys from [`Preset::Default`].
    pub fn load(path: impl AsRef<Path>) -> Result<SystemConfig, ConfigError> {
        Self::load_with_base(path, SystemConfig::default())
    }

    pub fn load_with_base(
        path: impl AsRef<Path>,
        base: SystemConfig,
    ) -> Result<SystemConfig, ConfigError> {
        let text = std::fs::read_to_string(path.as_ref()).map_err(|e| ConfigError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        })?;
        let cfg = file::parse(&text, base)?;
        let report = cfg.validate();
        if !report.is_valid() {
            return Err(ConfigError::Invalid(report));
        }
        Ok(cfg)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_config_string())
    }

    /// Canonical config-file text; `parse` of it yields `self` again.
    pub fn to_config_string(&self) -> String {
        file::to_config_string(self)
    }

    /// Parses config-file text over `base` without validating.
    pub fn parse_str(text: &str, base: SystemConfig) -> Result<SystemConfig, ConfigError> {
        file::parse(text, base)
    }

    pub fn validate(&self) -> ValidationReport {
        let mut violations = Vec::new();
        for id in TaskId::ALL {
            let t = self.task(id);
            let mut check = |ok: bool, field: &'static str, rule: &'static str| {
                if !ok {
                    violations.push(Violation {
                        key: format!("{id}.{field}"),
                        rule,
                    });
                }
            };
            check((0.0..=1.0).contains(&t.gen_prob), "gen_prob", "must lie in [0, 1]");
            check(
                t.admit_prob > 0.0 && t.admit_prob <= 1.0,
                "admit_prob",
                "must lie in (0, 1]",
            );
            check(t.tx_power > 0.0 && t.tx_power.is_finite(), "tx_power", "must be positive");
            check(t.units_required >= 1, "units_required", "must be at least 1");
            check(t.service_slots >= 1, "service_slots", "must be at least 1");
            check(
                t.downlink_delay >= 0.0 && t.downlink_delay.is_finite(),
                "downlink_delay",
                "must be nonnegative",
            );
            check(t.penalty >= 0.0 && t.penalty.is_finite(), "penalty", "must be nonnegative");
        }
        if self.task1.gen_prob + self.task2.gen_prob > 1.0 + 1e-12 {
            violations.push(Violation {
                key: "task1.gen_prob + task2.gen_prob".into(),
                rule: "must not exceed 1 (one generation per slot)",
            });
        }
        let ch = &self.channel;
        let positive = |x: f64| x > 0.0 && x.is_finite();
        for (key, ok, rule) in [
            ("channel.shape", ch.shape >= 0.5 && ch.shape.is_finite(), "must be at least 0.5"),
            ("channel.pathloss_exp", positive(ch.pathloss_exp), "must be positive"),
            ("channel.distance", positive(ch.distance), "must be positive"),
            ("channel.noise_power", positive(ch.noise_power), "must be positive"),
            ("channel.snr_threshold", positive(ch.snr_threshold), "must be positive"),
            ("compute.capacity", self.compute.capacity >= 1, "must be at least 1"),
            ("system.sim_slots", self.sim_slots >= 1, "must be at least 1"),
        ] {
            if !ok {
                violations.push(Violation { key: key.into(), rule });
            }
        }
        if let Some(e) = self.energy_rate {
            if !(e >= 0.0 && e.is_finite()) {
                violations.push(Violation {
                    key: "system.energy_rate".into(),
                    rule: "must be nonnegative",
                });
            }
        }

        let starved = TaskId::ALL
            .into_iter()
            .filter(|&id| self.task(id).units_required > self.compute.capacity)
            .collect();

        ValidationReport {
            violations,
            energy_feasible: self.energy_feasible(),
            starved,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub key: String,
    pub rule: &'static str,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.key, self.rule)
    }
}

/// Outcome of [`SystemConfig::validate`].
///
/// Energy infeasibility and starvation are reported separately and do not
/// make a config invalid.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub energy_feasible: Option<bool>,
    /// Classes whose unit demand exceeds the pool capacity.
    pub starved: Vec<TaskId>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msgs: Vec<String> = self.violations.iter().map(ToString::to_string).collect();
        write!(f, "{}", msgs.join("; "))
    }
}

#[derive(Debug, Clone, Error)]
pub enum ConfigError {
    #[error("line {line}: key `{key}`: {message}")]
    Parse {
        line: usize,
        key: String,
        message: String,
    },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("invalid configuration: {0}")]
    Invalid(ValidationReport),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}
