//! Spectrum CSV and geometry JSON.
//!
//! Spectrum files have the header `q,lambda,mult`, one line per row, and
//! `#` comment lines. Rows are validated, sorted and merged into a finite
//! [`SpectrumTable`].

use std::fs::File;
use std::io::Read;
use std::path::Path;

use anyhow::Context;
use crtorsion::density::LeviSpectrum;
use crtorsion::spectra::{GeometryModel, SpectrumLine, SpectrumTable, TailPolicy, CP1_VOLUME};
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    /// `row` is the 1-based line number in the file.
    #[error("row {row}: {reason}")]
    Parse { row: u64, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Spectrum(#[from] crtorsion::Error),
}

fn parse_err(row: u64, reason: impl Into<String>) -> IngestError {
    IngestError::Parse { row, reason: reason.into() }
}

pub fn ingest_spectrum(mut source: impl Read, n: u32, m: i64) -> Result<SpectrumTable, IngestError> {
    let mut text = String::new();
    source.read_to_string(&mut text).map_err(|e| parse_err(0, format!("not UTF-8 text: {e}")))?;
    // Comment and blank lines are dropped; `origin` maps a kept line back to its file line.
    let (kept, origin): (Vec<&str>, Vec<u64>) = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim_start().starts_with('#') && !l.trim().is_empty())
        .map(|(i, l)| (l, i as u64 + 1))
        .unzip();
    let kept = kept.join("\n");
    let mut reader =
        csv::ReaderBuilder::new().trim(csv::Trim::All).flexible(true).from_reader(kept.as_bytes());
    let header = reader.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != ["q", "lambda", "mult"] {
        return Err(parse_err(
            origin.first().copied().unwrap_or(1),
            format!("expected header q,lambda,mult, found {}", header.as_slice()),
        ));
    }
    let mut lines = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().and_then(|p| origin.get(p.line() as usize - 1)).copied().unwrap_or(0);
        if record.len() != 3 {
            return Err(parse_err(row, format!("expected 3 fields, found {}", record.len())));
        }
        let q: i64 = record[0].parse().map_err(|_| parse_err(row, format!("bad degree {:?}", &record[0])))?;
        let lambda: f64 =
            record[1].parse().map_err(|_| parse_err(row, format!("bad eigenvalue {:?}", &record[1])))?;
        let mult: i64 =
            record[2].parse().map_err(|_| parse_err(row, format!("bad multiplicity {:?}", &record[2])))?;
        if q < 0 || q > n as i64 {
            return Err(parse_err(row, format!("degree {q} outside [0, {n}]")));
        }
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(parse_err(row, format!("eigenvalue {lambda} must be finite and >= 0")));
        }
        if mult <= 0 {
            return Err(parse_err(row, format!("multiplicity {mult} must be positive")));
        }
        lines.push(SpectrumLine { q: q as u32, lambda, mult: mult as u64 });
    }
    Ok(SpectrumTable::new(n, m, lines, TailPolicy::Finite)?)
}

pub fn load_spectrum(path: &Path, n: u32, m: i64) -> anyhow::Result<SpectrumTable> {
    let file = File::open(path).with_context(|| format!("cannot open spectrum file {}", path.display()))?;
    ingest_spectrum(file, n, m).with_context(|| format!("invalid spectrum file {}", path.display()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeometryFile {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub volume: f64,
    pub rank_e: u32,
}

impl GeometryFile {
    pub fn into_model(self) -> anyhow::Result<GeometryModel> {
        anyhow::ensure!(
            self.n == self.eigenvalues.len(),
            "geometry declares n = {} but lists {} Levi eigenvalues",
            self.n,
            self.eigenvalues.len()
        );
        Ok(GeometryModel::new(LeviSpectrum::new(self.eigenvalues)?, self.volume, self.rank_e)?)
    }
}

/// The bundled circle-bundle geometry, identical to `data/cp1.json`.
pub const CP1_GEOMETRY_JSON: &str = include_str!("../data/cp1.json");

pub fn parse_geometry(json: &str) -> anyhow::Result<GeometryModel> {
    let file: GeometryFile = serde_json::from_str(json).context("malformed geometry JSON")?;
    file.into_model()
}

pub fn load_geometry(path: Option<&Path>) -> anyhow::Result<GeometryModel> {
    match path {
        None => parse_geometry(CP1_GEOMETRY_JSON),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .with_context(|| format!("cannot read geometry file {}", p.display()))?;
            parse_geometry(&text).with_context(|| format!("invalid geometry file {}", p.display()))
        }
    }
}

/// Whether `model` is the geometry the built-in spectrum family belongs to.
pub fn is_cp1(model: &GeometryModel) -> bool {
    model.levi.eigenvalues() == [1.0]
        && model.rank_e == 1
        && (model.volume - CP1_VOLUME).abs() <= 1e-12 * CP1_VOLUME
}
