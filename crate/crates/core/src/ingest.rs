//! End-of-day price ingestion: CSV parsing, universe pruning and calendar
//! alignment.
//!
//! Input files carry one row per (ticker, trading day). Only the ticker, date
//! and close columns are required; open/high/low/volume are kept when present
//! but never used downstream. A file without a ticker column is treated as a
//! single-ticker file whose symbol is the file stem.

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::csvio::{self, fmt_f64, ISO_DATE};
use crate::error::{Error, Location, Result};

/// Maps logical EoD fields onto the column names of an input file.
/// Header matching is case-insensitive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnSchema {
    pub ticker: String,
    pub date: String,
    pub open: String,
    pub high: String,
    pub low: String,
    pub close: String,
    pub volume: String,
    /// chrono format string for the date column.
    pub date_format: String,
}

impl Default for ColumnSchema {
    fn default() -> Self {
        ColumnSchema {
            ticker: "ticker".into(),
            date: "date".into(),
            open: "open".into(),
            high: "high".into(),
            low: "low".into(),
            close: "close".into(),
            volume: "volume".into(),
            date_format: ISO_DATE.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EodRow {
    pub date: NaiveDate,
    pub open: Option<f64>,
    pub high: Option<f64>,
    pub low: Option<f64>,
    pub close: f64,
    pub volume: Option<u64>,
}

/// All rows of one ticker, ascending by date.
///
/// `listed` is the first and last trading date seen in the raw input. It is
/// kept when rows are clipped to an analysis window so that pruning stays
/// idempotent when the window boundaries fall on non-trading days.
#[derive(Debug, Clone, PartialEq)]
pub struct TickerHistory {
    rows: Vec<EodRow>,
    listed: (NaiveDate, NaiveDate),
}

impl TickerHistory {
    pub fn rows(&self) -> &[EodRow] {
        &self.rows
    }

    pub fn first_listed(&self) -> NaiveDate {
        self.listed.0
    }

    pub fn last_listed(&self) -> NaiveDate {
        self.listed.1
    }
}

/// Raw per-ticker EoD history, grouped and sorted. Tickers iterate in
/// lexicographic order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PriceHistoryTable {
    histories: BTreeMap<String, TickerHistory>,
}

impl PriceHistoryTable {
    pub fn len(&self) -> usize {
        self.histories.len()
    }

    pub fn is_empty(&self) -> bool {
        self.histories.is_empty()
    }

    pub fn tickers(&self) -> impl Iterator<Item = &str> {
        self.histories.keys().map(String::as_str)
    }

    pub fn get(&self, ticker: &str) -> Option<&TickerHistory> {
        self.histories.get(ticker)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &TickerHistory)> {
        self.histories.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn row_count(&self) -> usize {
        self.histories.values().map(|h| h.rows.len()).sum()
    }

    /// Builds a table from in-memory rows, applying the same duplicate and
    /// positivity rules as the CSV parser.
    pub fn from_rows<I, S>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, EodRow)>,
        S: Into<String>,
    {
        let mut builder = TableBuilder::default();
        for (i, (ticker, row)) in rows.into_iter().enumerate() {
            let location = Location::new(None, i as u64 + 1);
            let ticker = ticker.into();
            validate_row(&ticker, &row, &location)?;
            builder.insert(ticker, row, location)?;
        }
        builder.finish()
    }

    /// Writes the table in the default column layout; `parse_eod` with the
    /// default schema reads it back unchanged.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ticker", "date", "open", "high", "low", "close", "volume"])
            .map_err(|e| Error::csv(e, None))?;
        for (ticker, history) in &self.histories {
            for row in &history.rows {
                w.write_record([
                    ticker.clone(),
                    row.date.format(ISO_DATE).to_string(),
                    csvio::fmt_opt(row.open),
                    csvio::fmt_opt(row.high),
                    csvio::fmt_opt(row.low),
                    fmt_f64(row.close),
                    row.volume.map(|v| v.to_string()).unwrap_or_default(),
                ])
                .map_err(|e| Error::csv(e, None))?;
            }
        }
        w.flush().map_err(|e| Error::io("<table>", e))?;
        Ok(())
    }
}

/// Accumulates rows from one or more sources, detecting duplicates.
#[derive(Debug, Default)]
pub struct TableBuilder {
    rows: BTreeMap<String, BTreeMap<NaiveDate, EodRow>>,
}

impl TableBuilder {
    fn insert(&mut self, ticker: String, row: EodRow, location: Location) -> Result<()> {
        let by_date = self.rows.entry(ticker.clone()).or_default();
        match by_date.get(&row.date) {
            None => {
                by_date.insert(row.date, row);
                Ok(())
            }
            Some(existing) if existing.close == row.close => Ok(()),
            Some(existing) => Err(Error::ConflictingDuplicate {
                location,
                ticker,
                date: row.date,
                first: existing.close,
                second: row.close,
            }),
        }
    }

    /// Parses one CSV source into the builder. `source` labels error
    /// locations; `fallback_ticker` is used when the header has no ticker
    /// column.
    pub fn add_csv<R: Read>(
        &mut self,
        input: R,
        schema: &ColumnSchema,
        source: Option<&str>,
        fallback_ticker: Option<&str>,
    ) -> Result<()> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(input);
        let header = reader.headers().map_err(|e| Error::csv(e, source))?.clone();
        let find = |name: &str| {
            header
                .iter()
                .position(|h| h.eq_ignore_ascii_case(name.trim()))
        };
        let required = |name: &str| {
            find(name).ok_or_else(|| Error::MissingColumn {
                column: name.to_owned(),
                file: source.map(str::to_owned),
            })
        };
        let ticker_col = match (find(&schema.ticker), fallback_ticker) {
            (Some(i), _) => Some(i),
            (None, Some(_)) => None,
            (None, None) => return Err(required(&schema.ticker).unwrap_err()),
        };
        let date_col = required(&schema.date)?;
        let close_col = required(&schema.close)?;
        let open_col = find(&schema.open);
        let high_col = find(&schema.high);
        let low_col = find(&schema.low);
        let volume_col = find(&schema.volume);

        for record in reader.records() {
            let record = record.map_err(|e| Error::csv(e, source))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let location = Location::new(source, line);
            let ticker = match ticker_col {
                Some(i) => record[i].to_owned(),
                None => fallback_ticker.unwrap_or_default().to_owned(),
            };
            let invalid = |message: String| Error::InvalidRow {
                location: location.clone(),
                ticker: ticker.clone(),
                message,
            };
            if ticker.is_empty() {
                return Err(invalid("empty ticker symbol".into()));
            }
            let date_text = &record[date_col];
            let date = NaiveDate::parse_from_str(date_text, &schema.date_format).map_err(|e| {
                invalid(format!(
                    "cannot parse date '{date_text}' with format '{}': {e}",
                    schema.date_format
                ))
            })?;
            let number = |col: Option<usize>, field: &str| -> Result<Option<f64>> {
                let Some(cell) = col.map(|i| &record[i]).filter(|c| !c.is_empty()) else {
                    return Ok(None);
                };
                cell.replace(',', "")
                    .parse::<f64>()
                    .map(Some)
                    .map_err(|_| invalid(format!("cannot parse {field} '{cell}'")))
            };
            let close = number(Some(close_col), "close")?
                .ok_or_else(|| invalid("missing close".into()))?;
            let volume = match number(volume_col, "volume")? {
                Some(v) if v >= 0.0 && v.fract() == 0.0 && v.is_finite() => Some(v as u64),
                Some(v) => return Err(invalid(format!("volume must be a non-negative count, got {v}"))),
                None => None,
            };
            let row = EodRow {
                date,
                open: number(open_col, "open")?,
                high: number(high_col, "high")?,
                low: number(low_col, "low")?,
                close,
                volume,
            };
            validate_row(&ticker, &row, &location)?;
            self.insert(ticker, row, location)?;
        }
        Ok(())
    }

    pub fn finish(self) -> Result<PriceHistoryTable> {
        let histories = self
            .rows
            .into_iter()
            .map(|(ticker, by_date)| {
                let rows: Vec<EodRow> = by_date.into_values().collect();
                let listed = (rows[0].date, rows[rows.len() - 1].date);
                (ticker, TickerHistory { rows, listed })
            })
            .collect();
        Ok(PriceHistoryTable { histories })
    }
}

fn validate_row(ticker: &str, row: &EodRow, location: &Location) -> Result<()> {
    let invalid = |message: String| Error::InvalidRow {
        location: location.clone(),
        ticker: ticker.to_owned(),
        message,
    };
    if !(row.close.is_finite() && row.close > 0.0) {
        return Err(invalid(format!("close must be positive, got {}", row.close)));
    }
    for (name, value) in [("open", row.open), ("high", row.high), ("low", row.low)] {
        if let Some(v) = value {
            if !(v.is_finite() && v > 0.0) {
                return Err(invalid(format!("{name} must be positive, got {v}")));
            }
        }
    }
    Ok(())
}

/// Parses a multi-ticker CSV stream.
pub fn parse_eod<R: Read>(input: R, schema: &ColumnSchema) -> Result<PriceHistoryTable> {
    let mut builder = TableBuilder::default();
    builder.add_csv(input, schema, None, None)?;
    builder.finish()
}

/// Parses a single-ticker CSV stream that has no ticker column.
pub fn parse_eod_for_ticker<R: Read>(
    input: R,
    schema: &ColumnSchema,
    ticker: &str,
) -> Result<PriceHistoryTable> {
    let mut builder = TableBuilder::default();
    builder.add_csv(input, schema, None, Some(ticker))?;
    builder.finish()
}

/// Expands directories to the `.csv` files they contain, sorted by path.
pub fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for path in paths {
        let meta = fs::metadata(path).map_err(|e| Error::io(path, e))?;
        if meta.is_dir() {
            let mut found: Vec<PathBuf> = fs::read_dir(path)
                .map_err(|e| Error::io(path, e))?
                .filter_map(|entry| entry.ok().map(|e| e.path()))
                .filter(|p| {
                    p.is_file()
                        && p.extension()
                            .is_some_and(|ext| ext.eq_ignore_ascii_case("csv"))
                })
                .collect();
            found.sort();
            files.extend(found);
        } else {
            files.push(path.clone());
        }
    }
    if files.is_empty() {
        return Err(Error::EmptyResult("no input csv files found".into()));
    }
    Ok(files)
}

/// Loads every file into one table. Single-ticker files take their symbol
/// from the file stem.
pub fn load_files(files: &[PathBuf], schema: &ColumnSchema) -> Result<PriceHistoryTable> {
    let mut builder = TableBuilder::default();
    for file in files {
        let bytes = fs::read(file).map_err(|e| Error::io(file, e))?;
        add_file_bytes(&mut builder, file, &bytes, schema)?;
    }
    builder.finish()
}

pub(crate) fn add_file_bytes(
    builder: &mut TableBuilder,
    file: &Path,
    bytes: &[u8],
    schema: &ColumnSchema,
) -> Result<()> {
    let label = file.display().to_string();
    let stem = file
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    builder.add_csv(bytes, schema, Some(&label), Some(&stem))
}

/// Keeps tickers listed for the whole window and not excluded, clipping their
/// rows to the window.
pub fn prune_universe(
    table: &PriceHistoryTable,
    window_start: NaiveDate,
    window_end: NaiveDate,
    exclude: &[String],
) -> Result<PriceHistoryTable> {
    if window_start >= window_end {
        return Err(Error::InvalidArgument(format!(
            "window start {window_start} must precede window end {window_end}"
        )));
    }
    let excluded: BTreeSet<&str> = exclude.iter().map(String::as_str).collect();
    let mut histories = BTreeMap::new();
    for (ticker, history) in &table.histories {
        if excluded.contains(ticker.as_str())
            || history.first_listed() > window_start
            || history.last_listed() < window_end
        {
            continue;
        }
        let rows: Vec<EodRow> = history
            .rows
            .iter()
            .filter(|r| r.date >= window_start && r.date <= window_end)
            .copied()
            .collect();
        if rows.is_empty() {
            continue;
        }
        histories.insert(
            ticker.clone(),
            TickerHistory {
                rows,
                listed: history.listed,
            },
        );
    }
    if histories.is_empty() {
        return Err(Error::EmptyResult(format!(
            "zero tickers survive pruning to {window_start}..{window_end}"
        )));
    }
    Ok(PriceHistoryTable { histories })
}

/// Drops excluded symbols without any window filtering.
pub fn exclude_symbols(table: &PriceHistoryTable, exclude: &[String]) -> Result<PriceHistoryTable> {
    let histories: BTreeMap<_, _> = table
        .histories
        .iter()
        .filter(|(t, _)| !exclude.contains(t))
        .map(|(t, h)| (t.clone(), h.clone()))
        .collect();
    if histories.is_empty() {
        return Err(Error::EmptyResult("zero tickers left after exclusion".into()));
    }
    Ok(PriceHistoryTable { histories })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CalendarPolicy {
    /// Every date any ticker traded; gaps become missing values.
    #[default]
    Union,
    /// Only dates on which every ticker traded.
    Intersection,
}

impl FromStr for CalendarPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "union" => Ok(CalendarPolicy::Union),
            "intersection" => Ok(CalendarPolicy::Intersection),
            other => Err(Error::InvalidArgument(format!(
                "calendar policy must be 'union' or 'intersection', got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for CalendarPolicy {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            CalendarPolicy::Union => "union",
            CalendarPolicy::Intersection => "intersection",
        })
    }
}

/// Date-by-ticker matrix of closing prices, stored column-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PricePanel {
    calendar: Vec<NaiveDate>,
    tickers: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
}

impl PricePanel {
    pub fn new(
        calendar: Vec<NaiveDate>,
        tickers: Vec<String>,
        columns: Vec<Vec<Option<f64>>>,
    ) -> Result<Self> {
        if calendar.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "panel calendar must be strictly increasing".into(),
            ));
        }
        if columns.len() != tickers.len() {
            return Err(Error::InvalidArgument(format!(
                "{} columns for {} tickers",
                columns.len(),
                tickers.len()
            )));
        }
        for (ticker, col) in tickers.iter().zip(&columns) {
            if col.len() != calendar.len() {
                return Err(Error::InvalidArgument(format!(
                    "column {ticker} has {} values for {} dates",
                    col.len(),
                    calendar.len()
                )));
            }
            if col.iter().all(Option::is_none) {
                return Err(Error::InvalidArgument(format!(
                    "column {ticker} has no prices"
                )));
            }
        }
        Ok(PricePanel {
            calendar,
            tickers,
            columns,
        })
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn column(&self, j: usize) -> &[Option<f64>] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<Option<f64>>] {
        &self.columns
    }

    pub fn get(&self, date_index: usize, ticker_index: usize) -> Option<f64> {
        self.columns[ticker_index][date_index]
    }

    pub fn missing_count(&self) -> usize {
        self.columns
            .iter()
            .map(|c| c.iter().filter(|v| v.is_none()).count())
            .sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        csvio::write_panel(out, &self.calendar, &self.tickers, &self.columns)
    }

    pub fn read_csv<R: Read>(input: R, source: Option<&str>) -> Result<Self> {
        let (calendar, tickers, columns) = csvio::read_panel(input, source)?;
        PricePanel::new(calendar, tickers, columns)
    }
}

/// Aligns every ticker onto a shared trading calendar.
pub fn build_panel(table: &PriceHistoryTable, policy: CalendarPolicy) -> Result<PricePanel> {
    if table.is_empty() {
        return Err(Error::EmptyResult("cannot build a panel from an empty table".into()));
    }
    let calendar: Vec<NaiveDate> = match policy {
        CalendarPolicy::Union => {
            let all: BTreeSet<NaiveDate> = table
                .histories
                .values()
                .flat_map(|h| h.rows.iter().map(|r| r.date))
                .collect();
            all.into_iter().collect()
        }
        CalendarPolicy::Intersection => {
            let mut histories = table.histories.values();
            let first = histories.next().expect("non-empty table");
            let mut common: BTreeSet<NaiveDate> = first.rows.iter().map(|r| r.date).collect();
            for h in histories {
                let dates: BTreeSet<NaiveDate> = h.rows.iter().map(|r| r.date).collect();
                common.retain(|d| dates.contains(d));
            }
            if common.is_empty() {
                return Err(Error::EmptyResult(
                    "no date is shared by every ticker (intersection calendar is empty)".into(),
                ));
            }
            common.into_iter().collect()
        }
    };

    let mut tickers = Vec::with_capacity(table.len());
    let mut columns = Vec::with_capacity(table.len());
    for (ticker, history) in &table.histories {
        let mut col = vec![None; calendar.len()];
        // Both sequences are sorted, so a merge walk places each row.
        let mut t = 0;
        for row in &history.rows {
            while t < calendar.len() && calendar[t] < row.date {
                t += 1;
            }
            if t < calendar.len() && calendar[t] == row.date {
                col[t] = Some(row.close);
            }
        }
        tickers.push(ticker.clone());
        columns.push(col);
    }
    PricePanel::new(calendar, tickers, columns)
}
