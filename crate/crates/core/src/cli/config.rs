//! TOML run recipes for `sweep` and `pdf`.
//!
//! Every table rejects unknown keys, so a misspelt key fails loudly instead of
//! silently falling back to a default.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::CliError;
use crate::analytic_ser::Engine;
use crate::detectors::DetectorKind;
use crate::mc_engine::McConfig;
use crate::specfun::SeriesConfig;

/// Output formats of `sweep` and `pdf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    Csv,
    Json,
    Both,
}

impl OutputFormat {
    pub fn csv(self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

/// An evenly spaced grid `start, start + step, ..` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        // multiply rather than accumulate, then snap away the last-bit noise
        (0..count)
            .map(|i| ((self.start + i as f64 * self.step) * 1e9).round() / 1e9)
            .collect()
    }

    fn check(&self, key: &str) -> Result<(), CliError> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(CliError::Schema(format!("`{key}.step` must be positive")));
        }
        if !(self.stop >= self.start) || !self.start.is_finite() || !self.stop.is_finite() {
            return Err(CliError::Schema(format!(
                "`{key}.stop` must be finite and not below `{key}.start`"
            )));
        }
        Ok(())
    }
}

/// Output location and format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default = "default_out")]
    pub path: String,
    #[serde(default = "default_format")]
    pub format: OutputFormat,
}

fn default_out() -> String {
    "ac-mask-out".into()
}

fn default_format() -> OutputFormat {
    OutputFormat::Both
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            path: default_out(),
            format: default_format(),
        }
    }
}

/// Monte Carlo budget as written in a recipe; absent fields take the
/// [`McConfig`] defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct McSection {
    pub trials: Option<u64>,
    pub seed: Option<u64>,
    pub workers: Option<usize>,
    pub confidence_level: Option<f64>,
}

impl McSection {
    pub fn resolve(&self) -> McConfig {
        let d = McConfig::default();
        McConfig {
            trials: self.trials.unwrap_or(d.trials),
            seed: self.seed.unwrap_or(d.seed),
            workers: self.workers.unwrap_or(d.workers),
            confidence_level: self.confidence_level.unwrap_or(d.confidence_level),
            phase_noise_level: 0.0,
        }
    }
}

/// Series truncation as written in a recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SeriesSection {
    pub max_terms: Option<usize>,
    pub term_rel_tol: Option<f64>,
    pub asymp_order: Option<usize>,
    pub quad_order: Option<usize>,
}

impl SeriesSection {
    pub fn resolve(&self) -> Result<SeriesConfig, CliError> {
        let d = SeriesConfig::default();
        let cfg = SeriesConfig {
            max_terms: self.max_terms.unwrap_or(d.max_terms),
            term_rel_tol: self.term_rel_tol.unwrap_or(d.term_rel_tol),
            asymp_order: self.asymp_order.unwrap_or(d.asymp_order),
            quad_order: self.quad_order.unwrap_or(d.quad_order),
        };
        cfg.validate()
            .map_err(|e| CliError::Schema(format!("[series]: {e}")))?;
        Ok(cfg)
    }
}

/// The Cartesian grid swept by `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub orders: Vec<usize>,
    pub antennas: Vec<usize>,
    pub k_factors: Vec<f64>,
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub snr_db: Grid,
    #[serde(default)]
    pub detectors: Vec<DetectorKind>,
    #[serde(default)]
    pub engines: Vec<Engine>,
    #[serde(default = "default_phase_noise")]
    pub phase_noise: Vec<f64>,
    #[serde(default = "default_true")]
    pub allow_fallback: bool,
}

fn default_omega() -> f64 {
    1.0
}

fn default_phase_noise() -> Vec<f64> {
    vec![0.0]
}

fn default_true() -> bool {
    true
}

/// A `sweep` recipe.
///
/// Analytic rows are produced for every engine listed; Monte Carlo rows for
/// every detector listed, and only when an `[mc]` table is present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub sweep: SweepSection,
    pub mc: Option<McSection>,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl SweepConfig {
    pub fn check(&self) -> Result<(), CliError> {
        let s = &self.sweep;
        for (key, empty) in [
            ("sweep.orders", s.orders.is_empty()),
            ("sweep.antennas", s.antennas.is_empty()),
            ("sweep.k_factors", s.k_factors.is_empty()),
            ("sweep.phase_noise", s.phase_noise.is_empty()),
        ] {
            if empty {
                return Err(CliError::Schema(format!("`{key}` must not be empty")));
            }
        }
        if s.engines.is_empty() && (s.detectors.is_empty() || self.mc.is_none()) {
            return Err(CliError::Schema(
                "`sweep.engines` is empty and no Monte Carlo run is configured \
                 (`sweep.detectors` plus an `[mc]` table)"
                    .into(),
            ));
        }
        if !s.engines.is_empty() && !s.detectors.is_empty() && !s.detectors.contains(&DetectorKind::AcHeuristic) {
            return Err(CliError::Schema(
                "`sweep.engines` model the ac-heuristic detector, which `sweep.detectors` omits".into(),
            ));
        }
        s.snr_db.check("sweep.snr_db")?;
        if let Some(&m) = s.orders.iter().find(|&&m| m < 2) {
            return Err(CliError::Schema(format!("`sweep.orders` entry {m} is below 2")));
        }
        if s.antennas.contains(&0) {
            return Err(CliError::Schema("`sweep.antennas` entries must be at least 1".into()));
        }
        if let Some(k) = s.k_factors.iter().find(|k| !(**k >= 0.0) || !k.is_finite()) {
            return Err(CliError::Schema(format!("`sweep.k_factors` entry {k} is not a finite K >= 0")));
        }
        if !(s.omega > 0.0) || !s.omega.is_finite() {
            return Err(CliError::Schema("`sweep.omega` must be positive".into()));
        }
        let full = crate::mc_engine::PHASE_NOISE_FULL_SCALE;
        if let Some(v) = s.phase_noise.iter().find(|v| !(0.0..=full).contains(*v)) {
            return Err(CliError::Schema(format!(
                "`sweep.phase_noise` entry {v} is outside [0, {full}]"
            )));
        }
        self.series.resolve()?;
        Ok(())
    }
}

/// The operating point and grid of a `pdf` recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfSection {
    pub order: usize,
    /// Symbols to trace; all of them when absent.
    pub symbols: Option<Vec<usize>>,
    pub antennas: usize,
    pub k_factor: f64,
    #[serde(default = "default_omega")]
    pub omega: f64,
    pub snr_db: f64,
    pub zeta: Grid,
    #[serde(default = "default_pdf_engine")]
    pub engine: Engine,
    #[serde(default = "default_samples")]
    pub samples: u64,
    #[serde(default = "default_true")]
    pub allow_fallback: bool,
}

fn default_pdf_engine() -> Engine {
    Engine::ApproachI
}

fn default_samples() -> u64 {
    1_000_000
}

/// A `pdf` recipe.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PdfConfig {
    pub pdf: PdfSection,
    #[serde(default)]
    pub mc: McSection,
    #[serde(default)]
    pub series: SeriesSection,
    #[serde(default)]
    pub output: OutputSection,
}

impl PdfConfig {
    pub fn check(&self) -> Result<(), CliError> {
        let p = &self.pdf;
        if p.order < 2 {
            return Err(CliError::Schema(format!("`pdf.order` = {} is below 2", p.order)));
        }
        if p.antennas == 0 {
            return Err(CliError::Schema("`pdf.antennas` must be at least 1".into()));
        }
        if let Some(s) = &p.symbols {
            if s.is_empty() {
                return Err(CliError::Schema("`pdf.symbols` must not be empty".into()));
            }
            if let Some(m) = s.iter().find(|&&m| m >= p.order) {
                return Err(CliError::Schema(format!(
                    "`pdf.symbols` entry {m} is out of range for order {}",
                    p.order
                )));
            }
        }
        if !matches!(p.engine, Engine::ApproachI | Engine::Numeric) {
            return Err(CliError::Schema(format!(
                "`pdf.engine` = {} has no density; use approach-i or numeric",
                p.engine
            )));
        }
        if !(p.zeta.start >= 0.0) {
            return Err(CliError::Schema("`pdf.zeta.start` must be >= 0".into()));
        }
        p.zeta.check("pdf.zeta")?;
        if p.samples == 0 {
            return Err(CliError::Schema("`pdf.samples` must be at least 1".into()));
        }
        self.series.resolve()?;
        Ok(())
    }

    pub fn symbols(&self) -> Vec<usize> {
        self.pdf
            .symbols
            .clone()
            .unwrap_or_else(|| (0..self.pdf.order).collect())
    }
}

/// Reads and parses a recipe; schema violations name the offending key.
pub fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Io(format!("cannot read {}: {e}", path.display())))?;
    parse(&text)
}

pub fn parse<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| CliError::Schema(e.to_string()))
}

/// Hex SHA-256 of the effective configuration after command-line overrides.
pub fn config_hash<T: Serialize>(cfg: &T) -> String {
    let canonical = serde_json::to_vec(cfg).expect("configuration serializes");
    let digest = Sha256::digest(&canonical);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[sweep]
orders = [2]
antennas = [1]
k_factors = [4.0]
snr_db = { start = 20.0, stop = 20.0, step = 1.0 }
detectors = ["ac-heuristic"]
engines = ["approach-ii"]
"#;

    #[test]
    fn minimal_recipe_parses() {
        let c: SweepConfig = parse(MINIMAL).unwrap();
        c.check().unwrap();
        assert_eq!(c.sweep.snr_db.points(), vec![20.0]);
        assert!(c.mc.is_none());
    }

    #[test]
    fn misspelt_key_is_named() {
        let text = MINIMAL.replace("detectors =", "detctors =");
        let err = parse::<SweepConfig>(&text).unwrap_err();
        assert!(matches!(&err, CliError::Schema(m) if m.contains("detctors")), "{err:?}");
    }

    #[test]
    fn grid_has_no_drift() {
        let g = Grid {
            start: 0.0,
            stop: 40.0,
            step: 0.1,
        };
        let p = g.points();
        assert_eq!(p.len(), 401);
        assert_eq!(p[400], 40.0);
        assert_eq!(p[30], 3.0);
        assert_eq!(p[7], 0.7);
    }

    #[test]
    fn hash_changes_with_content() {
        let a: SweepConfig = parse(MINIMAL).unwrap();
        let mut b = a.clone();
        b.sweep.k_factors = vec![5.0];
        assert_ne!(config_hash(&a), config_hash(&b));
        assert_eq!(config_hash(&a).len(), 64);
    }
}
