use std::io::Write;
use std::str::FromStr;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::csvio;
use crate::error::{Error, Result};
use crate::ingest::PricePanel;

/// How a closing-price change is expressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReturnMode {
    /// `(p[t] - p[t-1]) / p[t-1]`
    #[default]
    Simple,
    /// `p[t] - p[t-1]`
    Diff,
    /// `ln(p[t] / p[t-1])`
    Log,
}

impl ReturnMode {
    fn apply(self, prev: f64, cur: f64) -> f64 {
        match self {
            ReturnMode::Simple => (cur - prev) / prev,
            ReturnMode::Diff => cur - prev,
            ReturnMode::Log => (cur / prev).ln(),
        }
    }
}

impl FromStr for ReturnMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "simple" => Ok(ReturnMode::Simple),
            "diff" => Ok(ReturnMode::Diff),
            "log" => Ok(ReturnMode::Log),
            other => Err(Error::InvalidArgument(format!(
                "returns mode must be simple, diff or log, got '{other}'"
            ))),
        }
    }
}

impl std::fmt::Display for ReturnMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            ReturnMode::Simple => "simple",
            ReturnMode::Diff => "diff",
            ReturnMode::Log => "log",
        })
    }
}

/// Date-by-ticker returns. Row `t` holds the change from price date `t` to
/// price date `t + 1`, so the calendar is the price calendar minus its first
/// date.
#[derive(Debug, Clone, PartialEq)]
pub struct ReturnsPanel {
    calendar: Vec<NaiveDate>,
    tickers: Vec<String>,
    columns: Vec<Vec<Option<f64>>>,
    mode: ReturnMode,
}

impl ReturnsPanel {
    pub fn new(
        calendar: Vec<NaiveDate>,
        tickers: Vec<String>,
        columns: Vec<Vec<Option<f64>>>,
        mode: ReturnMode,
    ) -> Result<Self> {
        if calendar.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(
                "returns calendar must be strictly increasing".into(),
            ));
        }
        if columns.len() != tickers.len()
            || columns.iter().any(|c| c.len() != calendar.len())
        {
            return Err(Error::InvalidArgument(
                "returns columns do not match calendar and tickers".into(),
            ));
        }
        Ok(ReturnsPanel {
            calendar,
            tickers,
            columns,
            mode,
        })
    }

    pub fn calendar(&self) -> &[NaiveDate] {
        &self.calendar
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn mode(&self) -> ReturnMode {
        self.mode
    }

    pub fn column(&self, j: usize) -> &[Option<f64>] {
        &self.columns[j]
    }

    pub fn columns(&self) -> &[Vec<Option<f64>>] {
        &self.columns
    }

    pub fn ticker_index(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        csvio::write_panel(out, &self.calendar, &self.tickers, &self.columns)
    }
}

/// Converts prices to returns. A missing price makes both adjacent returns
/// missing; no return ever spans a gap.
pub fn compute_returns(panel: &PricePanel, mode: ReturnMode) -> Result<ReturnsPanel> {
    let calendar = panel.calendar();
    if calendar.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "returns need at least 2 dates, panel has {}",
            calendar.len()
        )));
    }
    if mode != ReturnMode::Diff {
        for (ticker, col) in panel.tickers().iter().zip(panel.columns()) {
            if let Some((t, p)) = col
                .iter()
                .enumerate()
                .find_map(|(t, p)| p.filter(|v| *v <= 0.0).map(|v| (t, v)))
            {
                return Err(Error::InvalidArgument(format!(
                    "{mode} returns need positive prices; {ticker} has {p} on {}",
                    calendar[t]
                )));
            }
        }
    }
    let columns: Vec<Vec<Option<f64>>> = panel
        .columns()
        .par_iter()
        .map(|col| {
            col.windows(2)
                .map(|w| match (w[0], w[1]) {
                    (Some(prev), Some(cur)) => Some(mode.apply(prev, cur)),
                    _ => None,
                })
                .collect()
        })
        .collect();
    ReturnsPanel::new(
        calendar[1..].to_vec(),
        panel.tickers().to_vec(),
        columns,
        mode,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn panel(cols: Vec<Vec<Option<f64>>>) -> PricePanel {
        let n = cols[0].len();
        let start = NaiveDate::from_ymd_opt(2020, 1, 1).unwrap();
        let calendar = (0..n)
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        let tickers = (0..cols.len()).map(|j| format!("T{j}")).collect();
        PricePanel::new(calendar, tickers, cols).unwrap()
    }

    #[test]
    fn simple_returns_by_hand() {
        let p = panel(vec![vec![Some(100.0), Some(110.0), Some(99.0)]]);
        let r = compute_returns(&p, ReturnMode::Simple).unwrap();
        let got: Vec<f64> = r.column(0).iter().map(|v| v.unwrap()).collect();
        assert!((got[0] - 0.10).abs() < 1e-15);
        assert!((got[1] + 0.10).abs() < 1e-15);
        assert_eq!(r.calendar(), &p.calendar()[1..]);
    }

    #[test]
    fn constant_prices_give_zero_returns() {
        let p = panel(vec![vec![Some(5.0); 4]]);
        for mode in [ReturnMode::Simple, ReturnMode::Diff, ReturnMode::Log] {
            let r = compute_returns(&p, mode).unwrap();
            assert!(r.column(0).iter().all(|v| *v == Some(0.0)), "{mode}");
        }
    }

    #[test]
    fn gaps_never_bridged() {
        let p = panel(vec![vec![Some(100.0), None, Some(120.0)]]);
        let r = compute_returns(&p, ReturnMode::Simple).unwrap();
        assert_eq!(r.column(0), &[None, None]);
    }

    #[test]
    fn diff_and_log_modes() {
        let p = panel(vec![vec![Some(2.0), Some(5.0)]]);
        let diff = compute_returns(&p, ReturnMode::Diff).unwrap();
        assert_eq!(diff.column(0), &[Some(3.0)]);
        let log = compute_returns(&p, ReturnMode::Log).unwrap();
        assert!((log.column(0)[0].unwrap() - 2.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn short_calendar_and_bad_prices_rejected() {
        let p = panel(vec![vec![Some(1.0)]]);
        assert!(matches!(
            compute_returns(&p, ReturnMode::Simple),
            Err(Error::InsufficientData(_))
        ));
        let p = panel(vec![vec![Some(1.0), Some(0.0)]]);
        assert!(compute_returns(&p, ReturnMode::Log).is_err());
        assert!(compute_returns(&p, ReturnMode::Simple).is_err());
        assert!(compute_returns(&p, ReturnMode::Diff).is_ok());
    }

    #[test]
    fn mode_parsing() {
        assert_eq!("LOG".parse::<ReturnMode>().unwrap(), ReturnMode::Log);
        assert!("pct".parse::<ReturnMode>().is_err());
    }
}
