//! Flat key-value run configuration (TOML). Command-line flags are layered on
//! top of the file with [`ConfigFile::overlay`].

use std::fs;
use std::path::{Path, PathBuf};

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::correlation::DEFAULT_MIN_OVERLAP;
use crate::error::{Error, Result};
use crate::ingest::{CalendarPolicy, ColumnSchema};
use crate::network::{ExportFormat, DEFAULT_CLIQUE_CAP, DEFAULT_THRESHOLD};
use crate::returns::ReturnMode;
use crate::transfer::{TransferConfig, DEFAULT_SPLIT, DEFAULT_WINDOW};

pub const DEFAULT_MIN_CLIQUE_SIZE: usize = 3;

/// TOML accepts dates either quoted or as native date literals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum DateValue {
    Text(String),
    Native(toml::value::Datetime),
}

impl DateValue {
    fn resolve(&self, key: &str) -> Result<NaiveDate> {
        let text = match self {
            DateValue::Text(s) => s.clone(),
            DateValue::Native(d) => d.to_string(),
        };
        NaiveDate::parse_from_str(text.trim(), "%Y-%m-%d").map_err(|e| {
            Error::InvalidArgument(format!("{key}: expected YYYY-MM-DD, got '{text}' ({e})"))
        })
    }
}

/// Every key is optional; missing keys take defaults at resolution.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ConfigFile {
    pub inputs: Option<Vec<PathBuf>>,
    pub ticker_column: Option<String>,
    pub date_column: Option<String>,
    pub open_column: Option<String>,
    pub high_column: Option<String>,
    pub low_column: Option<String>,
    pub close_column: Option<String>,
    pub volume_column: Option<String>,
    pub date_format: Option<String>,
    pub window_start: Option<DateValue>,
    pub window_end: Option<DateValue>,
    pub exclude_symbols: Option<Vec<String>>,
    pub calendar_policy: Option<CalendarPolicy>,
    pub returns_mode: Option<ReturnMode>,
    pub min_overlap: Option<usize>,
    pub threshold: Option<f64>,
    pub format: Option<ExportFormat>,
    pub min_clique_size: Option<usize>,
    pub clique_cap: Option<usize>,
    pub attributes: Option<PathBuf>,
    pub out_dir: Option<PathBuf>,
    pub matrix_out: Option<PathBuf>,
    pub pairs_out: Option<PathBuf>,
    pub returns_out: Option<PathBuf>,
    pub graph_out: Option<PathBuf>,
    pub transfer_out: Option<PathBuf>,
    pub source: Option<String>,
    pub targets: Option<Vec<String>>,
    pub window: Option<usize>,
    pub split: Option<f64>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl ConfigFile {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidArgument(format!("config: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        ConfigFile::from_toml(&text)
            .map_err(|e| Error::InvalidArgument(format!("{}: {e}", path.display())))
    }

    /// Keys set in `top` replace those in `self`.
    pub fn overlay(mut self, top: ConfigFile) -> Self {
        overlay_fields!(
            self, top, inputs, ticker_column, date_column, open_column, high_column, low_column,
            close_column, volume_column, date_format, window_start, window_end, exclude_symbols,
            calendar_policy, returns_mode, min_overlap, threshold, format, min_clique_size,
            clique_cap, attributes, out_dir, matrix_out, pairs_out, returns_out, graph_out,
            transfer_out, source, targets, window, split,
        );
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub inputs: Vec<PathBuf>,
    pub schema: ColumnSchema,
    pub window: Option<(NaiveDate, NaiveDate)>,
    pub exclude_symbols: Vec<String>,
    pub calendar_policy: CalendarPolicy,
    pub returns_mode: ReturnMode,
    pub min_overlap: usize,
    pub threshold: f64,
    pub format: ExportFormat,
    pub min_clique_size: usize,
    pub clique_cap: usize,
    pub attributes: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub matrix_out: Option<PathBuf>,
    pub pairs_out: Option<PathBuf>,
    pub returns_out: Option<PathBuf>,
    pub graph_out: Option<PathBuf>,
    pub transfer_out: Option<PathBuf>,
    pub source: Option<String>,
    pub targets: Vec<String>,
    pub transfer: TransferConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig::resolve(ConfigFile::default()).expect("defaults are valid")
    }
}

impl PipelineConfig {
    pub fn resolve(file: ConfigFile) -> Result<Self> {
        let defaults = ColumnSchema::default();
        let schema = ColumnSchema {
            ticker: file.ticker_column.unwrap_or(defaults.ticker),
            date: file.date_column.unwrap_or(defaults.date),
            open: file.open_column.unwrap_or(defaults.open),
            high: file.high_column.unwrap_or(defaults.high),
            low: file.low_column.unwrap_or(defaults.low),
            close: file.close_column.unwrap_or(defaults.close),
            volume: file.volume_column.unwrap_or(defaults.volume),
            date_format: file.date_format.unwrap_or(defaults.date_format),
        };
        let window = match (&file.window_start, &file.window_end) {
            (Some(s), Some(e)) => {
                let (s, e) = (s.resolve("window_start")?, e.resolve("window_end")?);
                if s >= e {
                    return Err(Error::InvalidArgument(format!(
                        "window_start {s} must precede window_end {e}"
                    )));
                }
                Some((s, e))
            }
            (None, None) => None,
            _ => {
                return Err(Error::InvalidArgument(
                    "window_start and window_end must be given together".into(),
                ))
            }
        };
        let threshold = file.threshold.unwrap_or(DEFAULT_THRESHOLD);
        if !(0.0..1.0).contains(&threshold) {
            return Err(Error::InvalidArgument(format!(
                "threshold must be in [0, 1), got {threshold}"
            )));
        }
        let min_clique_size = file.min_clique_size.unwrap_or(DEFAULT_MIN_CLIQUE_SIZE);
        if min_clique_size < 3 {
            return Err(Error::InvalidArgument(format!(
                "min_clique_size must be at least 3, got {min_clique_size}"
            )));
        }
        let transfer = TransferConfig {
            window: file.window.unwrap_or(DEFAULT_WINDOW),
            split: file.split.unwrap_or(DEFAULT_SPLIT),
        };
        if transfer.window == 0 {
            return Err(Error::InvalidArgument("window must be at least 1".into()));
        }
        if !(transfer.split > 0.0 && transfer.split < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "split must be in (0, 1), got {}",
                transfer.split
            )));
        }
        Ok(PipelineConfig {
            inputs: file.inputs.unwrap_or_default(),
            schema,
            window,
            exclude_symbols: file.exclude_symbols.unwrap_or_default(),
            calendar_policy: file.calendar_policy.unwrap_or_default(),
            returns_mode: file.returns_mode.unwrap_or_default(),
            min_overlap: file.min_overlap.unwrap_or(DEFAULT_MIN_OVERLAP),
            threshold,
            format: file.format.unwrap_or_default(),
            min_clique_size,
            clique_cap: file.clique_cap.unwrap_or(DEFAULT_CLIQUE_CAP),
            attributes: file.attributes,
            out_dir: file.out_dir.unwrap_or_else(|| PathBuf::from("stocknet-out")),
            matrix_out: file.matrix_out,
            pairs_out: file.pairs_out,
            returns_out: file.returns_out,
            graph_out: file.graph_out,
            transfer_out: file.transfer_out,
            source: file.source,
            targets: file.targets.unwrap_or_default(),
            transfer,
        })
    }

    /// Checks that every referenced input path exists.
    pub fn validate_paths(&self) -> Result<()> {
        if self.inputs.is_empty() {
            return Err(Error::InvalidArgument("no input paths configured".into()));
        }
        for p in self.inputs.iter().chain(self.attributes.as_ref()) {
            if !p.exists() {
                return Err(Error::io(
                    p,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "path does not exist"),
                ));
            }
        }
        Ok(())
    }

    pub fn panel_path(&self) -> PathBuf {
        self.out_dir.join("panel.csv")
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.out_dir.join("manifest.json")
    }

    pub fn matrix_path(&self) -> PathBuf {
        self.matrix_out.clone().unwrap_or_else(|| self.out_dir.join("matrix.csv"))
    }

    pub fn pairs_path(&self) -> PathBuf {
        self.pairs_out.clone().unwrap_or_else(|| self.out_dir.join("pairs.csv"))
    }

    pub fn graph_path(&self) -> PathBuf {
        self.graph_out
            .clone()
            .unwrap_or_else(|| self.out_dir.join(format!("graph.{}", self.format.extension())))
    }

    pub fn summary_path(&self) -> PathBuf {
        self.out_dir.join("summary.txt")
    }

    pub fn transfer_path(&self) -> PathBuf {
        self.transfer_out.clone().unwrap_or_else(|| self.out_dir.join("transfer.csv"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_flat_document() {
        let text = r#"
            inputs = ["data/"]
            close_column = "CLOSEP"
            window_start = 2013-01-01
            window_end = "2022-07-13"
            exclude_symbols = ["00DS30", "00DSES", "00DSEX"]
            calendar_policy = "intersection"
            returns_mode = "log"
            threshold = 0.6
            format = "edge-csv"
        "#;
        let cfg = PipelineConfig::resolve(ConfigFile::from_toml(text).unwrap()).unwrap();
        assert_eq!(cfg.schema.close, "CLOSEP");
        assert_eq!(
            cfg.window,
            Some((
                NaiveDate::from_ymd_opt(2013, 1, 1).unwrap(),
                NaiveDate::from_ymd_opt(2022, 7, 13).unwrap()
            ))
        );
        assert_eq!(cfg.calendar_policy, CalendarPolicy::Intersection);
        assert_eq!(cfg.returns_mode, ReturnMode::Log);
        assert_eq!(cfg.format, ExportFormat::EdgeCsv);
        assert_eq!(cfg.min_overlap, DEFAULT_MIN_OVERLAP);
        assert!(cfg.graph_path().ends_with("graph.csv"));
    }

    #[test]
    fn overlay_prefers_top() {
        let base = ConfigFile {
            threshold: Some(0.7),
            min_overlap: Some(50),
            ..Default::default()
        };
        let top = ConfigFile {
            threshold: Some(0.4),
            ..Default::default()
        };
        let merged = base.overlay(top);
        assert_eq!(merged.threshold, Some(0.4));
        assert_eq!(merged.min_overlap, Some(50));
    }

    #[test]
    fn rejects_bad_values() {
        for text in [
            "threshold = 1.0",
            "unknown_key = 3",
            "window_start = \"2020-01-01\"",
            "window_start = \"2021-01-01\"\nwindow_end = \"2020-01-01\"",
            "split = 1.5",
            "min_clique_size = 2",
            "returns_mode = \"pct\"",
        ] {
            let parsed = ConfigFile::from_toml(text).and_then(PipelineConfig::resolve);
            assert!(parsed.is_err(), "{text}");
        }
    }
}
