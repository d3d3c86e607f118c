//! Tabular reports with provenance, rendered as CSV or JSON.
//!
//! Numbers go through `serde_json` in both formats, so a CSV cell and the
//! matching JSON field parse to the same `f64`. Reports carry no timestamps;
//! identical configs give identical bytes.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::config::{Format, RunConfig, Tolerances};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub tolerances: Tolerances,
}

impl Provenance {
    pub fn new(config: &RunConfig, tolerances: &Tolerances) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME"),
            version: env!("CARGO_PKG_VERSION"),
            config: config.clone(),
            tolerances: *tolerances,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub provenance: Provenance,
    /// CSV column order; JSON rows may carry further fields.
    #[serde(skip)]
    pub columns: Vec<&'static str>,
    pub rows: Vec<Map<String, Value>>,
}

impl Report {
    pub fn new<T: Serialize>(
        provenance: Provenance,
        columns: &[&'static str],
        rows: &[T],
    ) -> anyhow::Result<Self> {
        let rows = rows
            .iter()
            .map(|r| match serde_json::to_value(r)? {
                Value::Object(map) => Ok(map),
                other => anyhow::bail!("report row must serialize to an object, got {other}"),
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        for row in &rows {
            if let Some(missing) = columns.iter().find(|c| !row.contains_key(**c)) {
                anyhow::bail!("report row lacks column {missing}");
            }
        }
        Ok(Self { provenance, columns: columns.to_vec(), rows })
    }

    pub fn write(&self, format: Format, mut w: impl Write) -> anyhow::Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut w, self)?;
                writeln!(w)?;
            }
            Format::Csv => {
                writeln!(w, "# {} {}", self.provenance.tool, self.provenance.version)?;
                writeln!(w, "# config: {}", serde_json::to_string(&self.provenance.config)?)?;
                writeln!(w, "# tolerances: {}", serde_json::to_string(&self.provenance.tolerances)?)?;
                let mut csv = csv::Writer::from_writer(w);
                csv.write_record(&self.columns)?;
                for row in &self.rows {
                    csv.write_record(self.columns.iter().map(|c| cell(&row[*c])))?;
                }
                csv.flush()?;
            }
        }
        Ok(())
    }

    pub fn render(&self, format: Format) -> anyhow::Result<String> {
        let mut buf = Vec::new();
        self.write(format, &mut buf)?;
        Ok(String::from_utf8(buf)?)
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
