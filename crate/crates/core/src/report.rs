//! CSV artifacts. Every file starts with one comment line carrying the
//! schema version, crate version, artifact name and a config hash.

use std::io::Write;

use sha2::{Digest, Sha256};

use crate::config::{SystemConfig, TaskId};
use crate::experiments::{CompareRow, SweepRow};
use crate::metrics::MetricsReport;
use crate::pareto::{DecisionPoint, ParetoFront};
use crate::sim::{Estimate, SimResult};
use crate::error::Result;

pub const SCHEMA_VERSION: u32 = 1;

/// First 16 hex digits of the SHA-256 of the canonical config text.
pub fn config_hash(config: &SystemConfig) -> String {
    Sha256::digest(config.to_config_string().as_bytes())
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Table {
    pub artifact: &'static str,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    fn new(artifact: &'static str, header: &[&str]) -> Self {
        Table {
            artifact,
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, config: &SystemConfig, mut out: W) -> Result<()> {
        writeln!(
            out,
            "# wncs {} schema={} artifact={} config={}",
            env!("CARGO_PKG_VERSION"),
            SCHEMA_VERSION,
            self.artifact,
            config_hash(config)
        )?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self, config: &SystemConfig) -> Result<String> {
        let mut buf = Vec::new();
        self.write(config, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv output is utf-8"))
    }
}

fn num(x: f64) -> String {
    x.to_string()
}

fn flag(x: Option<bool>) -> String {
    x.map_or_else(String::new, |b| b.to_string())
}

pub fn solve_table(r: &MetricsReport) -> Table {
    let mut t = Table::new(
        "solve",
        &[
            "engine", "uplink1", "uplink2", "availability1", "availability2", "aoa1", "aoa2", "coma", "aoi",
        ],
    );
    t.push(vec![
        r.engine.to_string(),
        num(r.uplink[0]),
        num(r.uplink[1]),
        num(r.availability[0]),
        num(r.availability[1]),
        r.aoa[0].to_string(),
        r.aoa[1].to_string(),
        num(r.coma),
        r.aoi.to_string(),
    ]);
    t
}

const SIM_CLASS_COLUMNS: [&str; 13] = [
    "aoa",
    "aoa_se",
    "blocking",
    "blocking_se",
    "arrival_blocking",
    "uplink_success",
    "uplink_success_se",
    "generated",
    "admission_rejected",
    "uplink_lost",
    "compute_blocked",
    "executed",
    "in_flight",
];

pub fn simulate_table(results: &[SimResult]) -> Table {
    let mut header: Vec<String> = ["seed", "slots", "measured_slots", "service", "departure", "uplink", "convention"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    for k in 1..=2 {
        header.extend(SIM_CLASS_COLUMNS.iter().map(|c| format!("{c}{k}")));
    }
    header.extend(["coma", "coma_se", "aoi", "aoi_se"].map(String::from));
    let mut t = Table {
        artifact: "simulate",
        header,
        rows: Vec::new(),
    };
    for r in results {
        let mut row = vec![
            r.seed.to_string(),
            r.slots.to_string(),
            r.measured_slots.to_string(),
            format!("{:?}", r.options.service).to_lowercase(),
            format!("{:?}", r.options.departure).to_lowercase(),
            format!("{:?}", r.options.uplink).to_lowercase(),
            r.convention.to_string(),
        ];
        for id in TaskId::ALL {
            let i = id.index();
            let c = &r.counts[i];
            row.extend([
                num(r.aoa[i].mean),
                num(r.aoa[i].std_err),
                num(r.blocking[i].mean),
                num(r.blocking[i].std_err),
                num(r.arrival_blocking(id)),
                num(r.uplink_success[i].mean),
                num(r.uplink_success[i].std_err),
                c.generated.to_string(),
                c.admission_rejected.to_string(),
                c.uplink_lost.to_string(),
                c.compute_blocked.to_string(),
                c.executed.to_string(),
                c.in_flight.to_string(),
            ]);
        }
        row.extend([num(r.coma.mean), num(r.coma.std_err), num(r.aoi.mean), num(r.aoi.std_err)]);
        t.push(row);
    }
    t
}

pub fn compare_table(rows: &[CompareRow]) -> Table {
    let mut t = Table::new(
        "compare",
        &["g1", "g2", "model", "task", "blocking", "blocking_se", "det_le_geo"],
    );
    for r in rows {
        t.push(vec![
            num(r.g1),
            num(r.g2),
            r.model.name().to_string(),
            (r.task + 1).to_string(),
            num(r.blocking.mean),
            num(r.blocking.std_err),
            flag(r.det_le_geo),
        ]);
    }
    t
}

fn est(e: &Estimate) -> [String; 2] {
    [num(e.mean), num(e.std_err)]
}

pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut t = Table::new(
        "sweep",
        &["eta1", "model", "aoa1", "aoa1_se", "aoa2", "aoa2_se", "coma", "coma_se", "aoi", "aoi_se"],
    );
    for r in rows {
        let mut row = vec![num(r.eta1), r.model.name().to_string()];
        row.extend(est(&r.aoa[0]));
        row.extend(est(&r.aoa[1]));
        row.extend(est(&r.coma));
        row.extend(est(&r.aoi));
        t.push(row);
    }
    t
}

const POINT_COLUMNS: [&str; 9] = [
    "p_t1", "p_t2", "eta1", "eta2", "power", "feasible", "coma", "aoa1", "engine",
];

fn point_row(p: &DecisionPoint) -> Vec<String> {
    vec![
        num(p.decision.tx_power[0]),
        num(p.decision.tx_power[1]),
        num(p.decision.admit_prob[0]),
        num(p.decision.admit_prob[1]),
        num(p.power),
        p.feasible.to_string(),
        num(p.coma),
        p.aoa1.to_string(),
        p.engine.to_string(),
    ]
}

/// Every evaluated grid point.
pub fn pareto_points_table(r: &ParetoFront) -> Table {
    let mut t = Table::new("pareto-points", &POINT_COLUMNS);
    for p in &r.points {
        t.push(point_row(p));
    }
    t
}

/// Front points (`kind = front`) followed by the baseline minimum
/// (`kind = baseline`).
pub fn pareto_front_table(r: &ParetoFront) -> Table {
    let mut header = vec!["kind"];
    header.extend(POINT_COLUMNS);
    let mut t = Table::new("pareto-front", &header);
    for p in &r.front {
        let mut row = vec!["front".to_string()];
        row.extend(point_row(p));
        t.push(row);
    }
    if let Some(b) = &r.baseline {
        let mut row = vec!["baseline".to_string()];
        row.extend(point_row(b));
        t.push(row);
    }
    t
}
