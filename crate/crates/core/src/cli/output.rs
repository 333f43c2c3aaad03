//! Result rows and their CSV and JSON encodings.
//!
//! Probabilities are written with 17 significant digits, which is enough for
//! every `f64` to survive a text round trip. JSON carries the same numbers
//! plus a metadata header.

use std::cmp::Ordering;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::CliError;
use super::config::OutputFormat;

/// Column names of the sweep CSV, in order.
pub const SWEEP_COLUMNS: [&str; 15] = [
    "source",
    "detector",
    "engine",
    "M",
    "N",
    "K",
    "omega",
    "phase_noise",
    "snr_db",
    "ser",
    "ci_low",
    "ci_high",
    "errors",
    "trials",
    "seed",
];

/// Column names of the density CSV, in order.
pub const PDF_COLUMNS: [&str; 4] = ["m", "zeta", "pdf_analytic", "pdf_mc_histogram"];

/// Where a row came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Source {
    Analytic,
    Mc,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Mc => "mc",
        }
    }
}

/// One sweep result. Analytic rows leave the interval, count and seed
/// fields empty.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub source: Source,
    pub detector: String,
    pub engine: String,
    #[serde(rename = "M")]
    pub order: usize,
    #[serde(rename = "N")]
    pub branches: usize,
    #[serde(rename = "K")]
    pub k_factor: f64,
    pub omega: f64,
    pub phase_noise: f64,
    pub snr_db: f64,
    pub ser: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub errors: Option<u64>,
    pub trials: Option<u64>,
    pub seed: Option<u64>,
}

impl SweepRow {
    /// Sort key: the sweep tuple, then the SNR.
    fn cmp_key(&self, other: &Self) -> Ordering {
        self.source
            .cmp(&other.source)
            .then_with(|| self.detector.cmp(&other.detector))
            .then_with(|| self.engine.cmp(&other.engine))
            .then_with(|| self.order.cmp(&other.order))
            .then_with(|| self.branches.cmp(&other.branches))
            .then_with(|| self.k_factor.total_cmp(&other.k_factor))
            .then_with(|| self.omega.total_cmp(&other.omega))
            .then_with(|| self.phase_noise.total_cmp(&other.phase_noise))
            .then_with(|| self.snr_db.total_cmp(&other.snr_db))
    }

    fn fields(&self) -> [String; 15] {
        [
            self.source.name().to_string(),
            self.detector.clone(),
            self.engine.clone(),
            self.order.to_string(),
            self.branches.to_string(),
            real(self.k_factor),
            real(self.omega),
            real(self.phase_noise),
            real(self.snr_db),
            probability(self.ser),
            self.ci_low.map(probability).unwrap_or_default(),
            self.ci_high.map(probability).unwrap_or_default(),
            self.errors.map(|v| v.to_string()).unwrap_or_default(),
            self.trials.map(|v| v.to_string()).unwrap_or_default(),
            self.seed.map(|v| v.to_string()).unwrap_or_default(),
        ]
    }
}

/// Orders rows lexicographically over the sweep tuple, then by SNR.
pub fn sort_rows(rows: &mut [SweepRow]) {
    rows.sort_by(SweepRow::cmp_key);
}

/// One density sample.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PdfRow {
    pub m: usize,
    pub zeta: f64,
    pub pdf_analytic: f64,
    pub pdf_mc_histogram: f64,
}

impl PdfRow {
    fn fields(&self) -> [String; 4] {
        [
            self.m.to_string(),
            real(self.zeta),
            probability(self.pdf_analytic),
            probability(self.pdf_mc_histogram),
        ]
    }
}

/// 17 significant digits in scientific notation.
pub fn probability(x: f64) -> String {
    format!("{x:.16e}")
}

/// Shortest text that reads back as the same `f64`.
pub fn real(x: f64) -> String {
    format!("{x}")
}

/// Metadata header of the JSON output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metadata {
    pub artifact: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_hash: String,
    pub started_unix_s: f64,
    pub wall_clock_s: f64,
}

#[derive(Serialize)]
struct Document<'a, R: Serialize> {
    metadata: &'a Metadata,
    rows: &'a [R],
}

/// `base` with its extension replaced by `ext`.
pub fn output_path(base: &Path, ext: &str) -> PathBuf {
    base.with_extension(ext)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::Io(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn csv_bytes<const W: usize>(header: [&str; W], rows: impl Iterator<Item = [String; W]>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let io = |e: csv::Error| CliError::Io(format!("CSV encoding failed: {e}"));
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    w.into_inner().map_err(|e| CliError::Io(format!("CSV encoding failed: {e}")))
}

/// Sweep rows as CSV text.
pub fn sweep_csv(rows: &[SweepRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(SWEEP_COLUMNS, rows.iter().map(SweepRow::fields))
}

/// Density rows as CSV text.
pub fn pdf_csv(rows: &[PdfRow]) -> Result<Vec<u8>, CliError> {
    csv_bytes(PDF_COLUMNS, rows.iter().map(PdfRow::fields))
}

fn json_bytes<R: Serialize>(meta: &Metadata, rows: &[R]) -> Result<Vec<u8>, CliError> {
    let mut out = serde_json::to_vec_pretty(&Document { metadata: meta, rows })
        .map_err(|e| CliError::Io(format!("JSON encoding failed: {e}")))?;
    out.push(b'\n');
    Ok(out)
}

/// Writes `csv` and JSON files next to `base` as `format` asks and returns
/// the paths written.
pub fn emit<R: Serialize>(
    base: &Path,
    format: OutputFormat,
    csv: Vec<u8>,
    meta: &Metadata,
    rows: &[R],
) -> Result<Vec<PathBuf>, CliError> {
    let mut written = Vec::new();
    if format.csv() {
        let p = output_path(base, "csv");
        write_file(&p, &csv)?;
        written.push(p);
    }
    if format.json() {
        let p = output_path(base, "json");
        write_file(&p, &json_bytes(meta, rows)?)?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(source: Source, snr: f64) -> SweepRow {
        SweepRow {
            source,
            detector: "ac-heuristic".into(),
            engine: if source == Source::Mc { String::new() } else { "numeric".into() },
            order: 2,
            branches: 1,
            k_factor: 4.0,
            omega: 1.0,
            phase_noise: 0.0,
            snr_db: snr,
            ser: 0.1,
            ci_low: None,
            ci_high: None,
            errors: None,
            trials: None,
            seed: None,
        }
    }

    #[test]
    fn probabilities_round_trip() {
        for x in [0.1, 1.0 / 3.0, 1.2345678901234567e-300, 5e-324, 0.0] {
            let s = probability(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let digits: String = s.split('e').next().unwrap().chars().filter(char::is_ascii_digit).collect();
            assert_eq!(digits.len(), 17, "{s}");
        }
    }

    #[test]
    fn analytic_rows_leave_counts_empty() {
        let bytes = sweep_csv(&[row(Source::Analytic, 10.0)]).unwrap();
        let text = String::from_utf8(bytes).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_COLUMNS.join(","));
        assert_eq!(
            lines.next().unwrap(),
            "analytic,ac-heuristic,numeric,2,1,4,1,0,10,1.0000000000000001e-1,,,,,"
        );
    }

    #[test]
    fn rows_sort_by_tuple_then_snr() {
        let mut rows = vec![row(Source::Mc, 5.0), row(Source::Analytic, 10.0), row(Source::Analytic, 5.0)];
        sort_rows(&mut rows);
        assert_eq!(rows[0].snr_db, 5.0);
        assert_eq!(rows[1].snr_db, 10.0);
        assert_eq!(rows[2].source, Source::Mc);
    }
}
