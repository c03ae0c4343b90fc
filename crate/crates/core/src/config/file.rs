//! Flat `key = value` config format.
//!
//! ```text
//! # comments start with '#'
//! task1.gen_prob = 0.4
//! channel.snr_threshold_db = 5
//! [task2]
//! penalty = 10
//! ```
//!
//! Keys are `section.field`, with sections `task1`, `task2`, `channel`,
//! `compute` and `system`. A `[section]` line prefixes the undotted keys that
//! follow it. Outside a section, task fields may also be written `field_1` /
//! `field_2`, and the remaining fields may be written bare (`capacity = 12`).
//! `channel.noise_power_db` and `channel.snr_threshold_db` take decibels.
//! `system.energy_rate = none` removes the power budget.

use std::fmt::Write as _;

use super::{db_to_linear, ConfigError, SystemConfig, TaskId};

const TASK_FIELDS: &[&str] = &[
    "gen_prob",
    "admit_prob",
    "tx_power",
    "units_required",
    "service_slots",
    "downlink_delay",
    "penalty",
];
const CHANNEL_FIELDS: &[&str] = &[
    "shape",
    "pathloss_exp",
    "distance",
    "noise_power",
    "noise_power_db",
    "snr_threshold",
    "snr_threshold_db",
];
const SYSTEM_FIELDS: &[&str] = &["energy_rate", "sim_slots", "rng_seed"];

/// Applies the assignments in `text` on top of `base`. No validation.
pub fn parse(text: &str, base: SystemConfig) -> Result<SystemConfig, ConfigError> {
    let mut cfg = base;
    let mut section: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest.strip_suffix(']').ok_or_else(|| ConfigError::Parse {
                line: line_no,
                key: line.to_string(),
                message: "unterminated section header".into(),
            })?;
            let name = name.trim();
            if !matches!(name, "task1" | "task2" | "channel" | "compute" | "system") {
                return Err(ConfigError::UnknownKey {
                    line: line_no,
                    key: format!("[{name}]"),
                });
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| ConfigError::Parse {
            line: line_no,
            key: line.to_string(),
            message: "expected `key = value`".into(),
        })?;
        let key = key.trim();
        let value = value.trim();
        let full = match (&section, key.contains('.')) {
            (Some(s), false) => format!("{s}.{key}"),
            _ => key.to_string(),
        };
        let canonical = canonical_key(&full).ok_or_else(|| ConfigError::UnknownKey {
            line: line_no,
            key: key.to_string(),
        })?;
        assign(&mut cfg, &canonical, value).map_err(|message| ConfigError::Parse {
            line: line_no,
            key: key.to_string(),
            message,
        })?;
    }
    Ok(cfg)
}

fn canonical_key(key: &str) -> Option<String> {
    if let Some((section, field)) = key.split_once('.') {
        let known = match section {
            "task1" | "task2" => TASK_FIELDS.contains(&field),
            "channel" => CHANNEL_FIELDS.contains(&field),
            "compute" => field == "capacity",
            "system" => SYSTEM_FIELDS.contains(&field),
            _ => false,
        };
        return known.then(|| key.to_string());
    }
    for (suffix, section) in [("_1", "task1"), ("_2", "task2")] {
        if let Some(field) = key.strip_suffix(suffix) {
            if TASK_FIELDS.contains(&field) {
                return Some(format!("{section}.{field}"));
            }
        }
    }
    if CHANNEL_FIELDS.contains(&key) {
        Some(format!("channel.{key}"))
    } else if key == "capacity" {
        Some("compute.capacity".into())
    } else if SYSTEM_FIELDS.contains(&key) {
        Some(format!("system.{key}"))
    } else {
        None
    }
}

fn real(value: &str) -> Result<f64, String> {
    let x: f64 = value
        .parse()
        .map_err(|_| format!("`{value}` is not a number"))?;
    if x.is_nan() {
        return Err("NaN is not allowed".into());
    }
    Ok(x)
}

fn integer<T: std::str::FromStr>(value: &str) -> Result<T, String> {
    value
        .parse()
        .map_err(|_| format!("`{value}` is not a nonnegative integer"))
}

fn assign(cfg: &mut SystemConfig, key: &str, value: &str) -> Result<(), String> {
    let (section, field) = key.split_once('.').expect("canonical keys are dotted");
    match section {
        "task1" | "task2" => {
            let id = if section == "task1" {
                TaskId::Regular
            } else {
                TaskId::Critical
            };
            let t = cfg.task_mut(id);
            match field {
                "gen_prob" => t.gen_prob = real(value)?,
                "admit_prob" => t.admit_prob = real(value)?,
                "tx_power" => t.tx_power = real(value)?,
                "units_required" => t.units_required = integer(value)?,
                "service_slots" => t.service_slots = integer(value)?,
                "downlink_delay" => t.downlink_delay = real(value)?,
                "penalty" => t.penalty = real(value)?,
                _ => unreachable!(),
            }
        }
        "channel" => {
            let ch = &mut cfg.channel;
            match field {
                "shape" => ch.shape = real(value)?,
                "pathloss_exp" => ch.pathloss_exp = real(value)?,
                "distance" => ch.distance = real(value)?,
                "noise_power" => ch.noise_power = real(value)?,
                "noise_power_db" => ch.noise_power = db_to_linear(real(value)?),
                "snr_threshold" => ch.snr_threshold = real(value)?,
                "snr_threshold_db" => ch.snr_threshold = db_to_linear(real(value)?),
                _ => unreachable!(),
            }
        }
        "compute" => cfg.compute.capacity = integer(value)?,
        "system" => match field {
            "energy_rate" => {
                cfg.energy_rate = match value {
                    "none" | "off" => None,
                    v => Some(real(v)?),
                }
            }
            "sim_slots" => cfg.sim_slots = integer(value)?,
            "rng_seed" => cfg.rng_seed = integer(value)?,
            _ => unreachable!(),
        },
        _ => unreachable!(),
    }
    Ok(())
}

/// Canonical text form; `parse(&to_config_string(c), _) == c`.
pub fn to_config_string(cfg: &SystemConfig) -> String {
    let mut out = String::new();
    for id in TaskId::ALL {
        let t = cfg.task(id);
        let _ = writeln!(out, "{id}.gen_prob = {}", t.gen_prob);
        let _ = writeln!(out, "{id}.admit_prob = {}", t.admit_prob);
        let _ = writeln!(out, "{id}.tx_power = {}", t.tx_power);
        let _ = writeln!(out, "{id}.units_required = {}", t.units_required);
        let _ = writeln!(out, "{id}.service_slots = {}", t.service_slots);
        let _ = writeln!(out, "{id}.downlink_delay = {}", t.downlink_delay);
        let _ = writeln!(out, "{id}.penalty = {}", t.penalty);
    }
    let ch = &cfg.channel;
    let _ = writeln!(out, "channel.shape = {}", ch.shape);
    let _ = writeln!(out, "channel.pathloss_exp = {}", ch.pathloss_exp);
    let _ = writeln!(out, "channel.distance = {}", ch.distance);
    let _ = writeln!(out, "channel.noise_power = {}", ch.noise_power);
    let _ = writeln!(out, "channel.snr_threshold = {}", ch.snr_threshold);
    let _ = writeln!(out, "compute.capacity = {}", cfg.compute.capacity);
    match cfg.energy_rate {
        Some(e) => {
            let _ = writeln!(out, "system.energy_rate = {e}");
        }
        None => out.push_str("system.energy_rate = none\n"),
    }
    let _ = writeln!(out, "system.sim_slots = {}", cfg.sim_slots);
    let _ = writeln!(out, "system.rng_seed = {}", cfg.rng_seed);
    out
}
