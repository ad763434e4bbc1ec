//! `report.txt` (TOML) and `residuals.csv` emission.

use std::path::Path;

use anyhow::{Context, Result};
use toml::{Table, Value};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResidualRow {
    pub point_index: usize,
    pub radius: f64,
    pub residual: f64,
    pub bound: f64,
}

#[derive(Debug, Default)]
pub struct Report {
    meta: Table,
    bounds: Table,
    empirical: Table,
    checks: Table,
    rows: Vec<ResidualRow>,
    error: Option<String>,
}

impl Report {
    pub fn new(command: &str, seed: u64, config: &Path) -> Self {
        let mut meta = Table::new();
        meta.insert("command".into(), Value::String(command.into()));
        meta.insert("seed".into(), Value::Integer(seed as i64));
        meta.insert("config".into(), Value::String(config.display().to_string()));
        Report { meta, ..Default::default() }
    }

    pub fn info(&mut self, key: &str, value: impl Into<Value>) {
        self.meta.insert(key.into(), value.into());
    }

    /// A certified (a-priori) quantity.
    pub fn bound(&mut self, key: &str, value: f64) {
        self.bounds.insert(key.into(), Value::Float(value));
    }

    /// A sampled quantity.
    pub fn empirical(&mut self, key: &str, value: f64) {
        self.empirical.insert(key.into(), Value::Float(value));
    }

    pub fn check(&mut self, key: &str, pass: bool) {
        self.checks.insert(key.into(), Value::Boolean(pass));
    }

    pub fn row(&mut self, row: ResidualRow) {
        self.rows.push(row);
    }

    pub fn fail_with(&mut self, error: String) {
        self.error = Some(error);
    }

    pub fn pass(&self) -> bool {
        self.error.is_none() && self.checks.values().all(|v| v.as_bool() == Some(true))
    }

    pub fn to_toml(&self) -> Result<String> {
        let mut root = Table::new();
        root.insert("meta".into(), Value::Table(self.meta.clone()));
        root.insert("bounds".into(), Value::Table(self.bounds.clone()));
        root.insert("empirical".into(), Value::Table(self.empirical.clone()));
        root.insert("checks".into(), Value::Table(self.checks.clone()));
        let mut summary = Table::new();
        summary.insert("pass".into(), Value::Boolean(self.pass()));
        summary.insert("residual_rows".into(), Value::Integer(self.rows.len() as i64));
        if let Some(e) = &self.error {
            summary.insert("error".into(), Value::String(e.clone()));
        }
        root.insert("summary".into(), Value::Table(summary));
        Ok(toml::to_string(&root)?)
    }

    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let report = dir.join("report.txt");
        std::fs::write(&report, self.to_toml()?).with_context(|| format!("writing {}", report.display()))?;
        let csv_path = dir.join("residuals.csv");
        let mut w = csv::Writer::from_path(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
        w.write_record(["point_index", "radius", "residual", "bound"])?;
        for r in &self.rows {
            w.write_record([r.point_index.to_string(), fmt(r.radius), fmt(r.residual), fmt(r.bound)])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn fmt(x: f64) -> String {
    format!("{x:e}")
}
