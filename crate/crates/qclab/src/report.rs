//! Run reports: JSON document plus a deterministic CSV table.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ExperimentConfig;

/// One checked or recorded quantity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Row {
    /// The claim this row exercises.
    pub anchor: String,
    pub quantity: String,
    /// Grid size, order, level or whatever the row is indexed by.
    pub x: Option<f64>,
    pub value: f64,
    pub bound: Option<f64>,
    /// `None` for rows that only record data.
    pub pass: Option<bool>,
}

impl Row {
    pub fn record(anchor: &str, quantity: impl Into<String>, x: Option<f64>, value: f64) -> Self {
        Self {
            anchor: anchor.to_string(),
            quantity: quantity.into(),
            x,
            value,
            bound: None,
            pass: None,
        }
    }

    /// value ≤ bound.
    pub fn at_most(anchor: &str, quantity: impl Into<String>, x: Option<f64>, value: f64, bound: f64) -> Self {
        Self {
            bound: Some(bound),
            pass: Some(value <= bound),
            ..Self::record(anchor, quantity, x, value)
        }
    }

    /// value ≥ bound.
    pub fn at_least(anchor: &str, quantity: impl Into<String>, x: Option<f64>, value: f64, bound: f64) -> Self {
        Self {
            bound: Some(bound),
            pass: Some(value >= bound),
            ..Self::record(anchor, quantity, x, value)
        }
    }

    /// lo ≤ value ≤ hi, reported against hi.
    pub fn within(anchor: &str, quantity: impl Into<String>, x: Option<f64>, value: f64, lo: f64, hi: f64) -> Self {
        Self {
            bound: Some(hi),
            pass: Some(value >= lo && value <= hi),
            ..Self::record(anchor, quantity, x, value)
        }
    }

    pub fn flag(anchor: &str, quantity: impl Into<String>, ok: bool) -> Self {
        Self {
            bound: Some(1.0),
            pass: Some(ok),
            ..Self::record(anchor, quantity, None, if ok { 1.0 } else { 0.0 })
        }
    }
}

/// A curve for the plot stage.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub log_x: bool,
    pub log_y: bool,
    pub points: Vec<(f64, f64)>,
}

/// Wall-clock time of one stage, optionally against a budget.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub stage: String,
    pub seconds: f64,
    pub budget: Option<f64>,
}

impl Timing {
    pub fn pass(&self) -> bool {
        self.budget.is_none_or(|b| self.seconds <= b)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub package: String,
    pub version: String,
    pub os: String,
    pub arch: String,
    pub workers: usize,
}

impl Environment {
    pub fn current() -> Self {
        Self {
            package: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            workers: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub experiment: String,
    pub seed: Option<u64>,
    pub environment: Environment,
    pub config: ExperimentConfig,
    pub rows: Vec<Row>,
    pub series: Vec<Series>,
    pub timings: Vec<Timing>,
    pub pass: bool,
}

impl Report {
    pub fn new(config: ExperimentConfig, rows: Vec<Row>, series: Vec<Series>, timings: Vec<Timing>) -> Self {
        let pass = rows.iter().all(|r| r.pass != Some(false)) && timings.iter().all(Timing::pass);
        Self {
            experiment: config.experiment.name().to_string(),
            seed: config.seed,
            environment: Environment::current(),
            config,
            rows,
            series,
            timings,
            pass,
        }
    }

    pub fn failures(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .rows
            .iter()
            .filter(|r| r.pass == Some(false))
            .map(|r| match r.bound {
                Some(b) => format!("{}: {} = {:.4e} (bound {:.4e})", r.anchor, r.quantity, r.value, b),
                None => format!("{}: {} = {:.4e}", r.anchor, r.quantity, r.value),
            })
            .collect();
        out.extend(
            self.timings
                .iter()
                .filter(|t| !t.pass())
                .map(|t| format!("runtime: {} took {:.2}s (budget {:.0}s)", t.stage, t.seconds, t.budget.unwrap_or(0.0))),
        );
        out
    }

    /// CSV "anchor,quantity,x,value,bound,pass"; no timings, so the bytes
    /// depend only on config and seed.
    pub fn write_table<W: Write>(&self, w: W) -> csv::Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["anchor", "quantity", "x", "value", "bound", "pass"])?;
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for r in &self.rows {
            wr.write_record([
                r.anchor.clone(),
                r.quantity.clone(),
                opt(r.x),
                format!("{:e}", r.value),
                opt(r.bound),
                r.pass.map(|p| p.to_string()).unwrap_or_default(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// report.json and tables/<experiment>.csv under `dir`.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir.join("tables"))?;
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join("report.json"), json + "\n")?;
        let f = std::fs::File::create(dir.join("tables").join(format!("{}.csv", self.experiment)))?;
        self.write_table(std::io::BufWriter::new(f)).map_err(std::io::Error::other)?;
        Ok(())
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(std::io::Error::other)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ExperimentKind;

    #[test]
    fn pass_needs_every_checked_row() {
        let cfg = ExperimentConfig::for_kind(ExperimentKind::BetaPipeline);
        let rows = vec![Row::record("a", "q", None, 3.0), Row::at_most("a", "q", Some(1.0), 0.5, 1.0)];
        assert!(Report::new(cfg.clone(), rows.clone(), vec![], vec![]).pass);
        let mut bad = rows;
        bad.push(Row::at_least("b", "r", None, 0.1, 1.0));
        let r = Report::new(cfg.clone(), bad, vec![], vec![]);
        assert!(!r.pass);
        assert_eq!(r.failures().len(), 1);
        let slow = Timing {
            stage: "all".into(),
            seconds: 2.0,
            budget: Some(1.0),
        };
        assert!(!Report::new(cfg, vec![], vec![], vec![slow]).pass);
    }

    #[test]
    fn json_round_trip_and_table() {
        let cfg = ExperimentConfig::for_kind(ExperimentKind::NeumannRate);
        let r = Report::new(cfg, vec![Row::within("x", "y", Some(256.0), 0.31, 0.25, 0.35)], vec![], vec![]);
        let back: Report = serde_json::from_str(&serde_json::to_string(&r).unwrap()).unwrap();
        assert_eq!(back, r);
        let mut buf = Vec::new();
        r.write_table(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "anchor,quantity,x,value,bound,pass");
        assert!(text.contains("x,y,2.56e2,3.1e-1,3.5e-1,true"));
    }
}
