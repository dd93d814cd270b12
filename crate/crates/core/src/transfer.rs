//! Forecast-transfer validation of network proximity.
//!
//! A forecaster is fitted on one ticker's returns and then asked to predict
//! other tickers one step ahead. Tickers that move with the source should be
//! predicted about as well as the source itself; unrelated tickers should show
//! a clearly larger error. Every series is standardized by its own mean and
//! scale, so errors are comparable across tickers with different volatility.
//!
//! [`ArForecaster`] is a windowed autoregressive least-squares baseline; any
//! other model can be used through the [`Forecaster`] trait and
//! [`transfer_experiment_with`].

use std::io::Write;

use rayon::prelude::*;

use crate::csvio::fmt_f64;
use crate::error::{nearest_symbols, Error, Result};
use crate::network::{hop_distance, CompanyGraph};
use crate::returns::ReturnsPanel;

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_SPLIT: f64 = 0.8;

/// A one-step-ahead model on the standardized scale.
pub trait Forecaster: Sync {
    /// Ticker the model was fitted on.
    fn source(&self) -> &str;

    /// Number of lagged values consumed per prediction.
    fn window(&self) -> usize;

    /// Predicts the next standardized value from the `window()` most recent
    /// standardized values, oldest first.
    fn predict(&self, recent: &[f64]) -> f64;
}

/// Mean and population standard deviation used to standardize a series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Standardization {
    pub mean: f64,
    pub scale: f64,
}

impl Standardization {
    pub fn fit(series: &[f64]) -> Result<Self> {
        if series.is_empty() {
            return Err(Error::InsufficientData("cannot standardize an empty series".into()));
        }
        let n = series.len() as f64;
        let mean = series.iter().sum::<f64>() / n;
        let var = series.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let scale = var.sqrt();
        if scale == 0.0 || !scale.is_finite() || series.iter().all(|&v| v == series[0]) {
            return Err(Error::ZeroVariance(
                "series is constant and cannot be standardized".into(),
            ));
        }
        Ok(Standardization { mean, scale })
    }

    pub fn apply(&self, series: &[f64]) -> Vec<f64> {
        series.iter().map(|v| (v - self.mean) / self.scale).collect()
    }
}

/// Autoregressive least-squares model: `z[t] = c + Σ a[k] · z[t-k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArForecaster {
    source: String,
    intercept: f64,
    /// `lags[k - 1]` multiplies `z[t - k]`.
    lags: Vec<f64>,
    standardization: Standardization,
    in_sample_rmse: f64,
}

impl ArForecaster {
    pub fn intercept(&self) -> f64 {
        self.intercept
    }

    pub fn lag_coefficients(&self) -> &[f64] {
        &self.lags
    }

    /// Intercept followed by lag coefficients.
    pub fn coefficients(&self) -> Vec<f64> {
        std::iter::once(self.intercept).chain(self.lags.iter().copied()).collect()
    }

    pub fn standardization(&self) -> Standardization {
        self.standardization
    }

    /// Root-mean-square residual over the training rows.
    pub fn in_sample_rmse(&self) -> f64 {
        self.in_sample_rmse
    }
}

impl Forecaster for ArForecaster {
    fn source(&self) -> &str {
        &self.source
    }

    fn window(&self) -> usize {
        self.lags.len()
    }

    fn predict(&self, recent: &[f64]) -> f64 {
        let w = self.lags.len();
        debug_assert_eq!(recent.len(), w);
        let mut acc = self.intercept;
        for (k, a) in self.lags.iter().enumerate() {
            acc += a * recent[w - 1 - k];
        }
        acc
    }
}

/// Solves the symmetric positive definite system `g · x = b` by Cholesky
/// factorization. Returns `None` when a pivot collapses relative to its
/// diagonal entry.
fn solve_spd(g: &[Vec<f64>], b: &[f64]) -> Option<Vec<f64>> {
    const PIVOT_TOLERANCE: f64 = 1e-10;
    let p = b.len();
    let mut l = vec![vec![0.0; p]; p];
    for i in 0..p {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = g[i][i] - s;
                if !d.is_finite() || d <= PIVOT_TOLERANCE * g[i][i].abs() {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (g[i][j] - s) / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; p];
    for i in 0..p {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; p];
    for i in (0..p).rev() {
        let s: f64 = (i + 1..p).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Some(x)
}

/// Fits an order-`window` autoregression on the standardized `train` series
/// through the normal equations.
pub fn fit_forecaster(source: &str, train: &[f64], window: usize) -> Result<ArForecaster> {
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    if train.len() < window + 2 {
        return Err(Error::InsufficientData(format!(
            "{source}: training series has {} values, window {window} needs at least {}",
            train.len(),
            window + 2
        )));
    }
    let standardization = Standardization::fit(train)
        .map_err(|_| Error::ZeroVariance(format!("{source}: training series is constant")))?;
    let z = standardization.apply(train);

    let p = window + 1;
    let mut gram = vec![vec![0.0; p]; p];
    let mut rhs = vec![0.0; p];
    let mut row = vec![0.0; p];
    for t in window..z.len() {
        row[0] = 1.0;
        for k in 1..=window {
            row[k] = z[t - k];
        }
        for i in 0..p {
            rhs[i] += row[i] * z[t];
            for j in 0..=i {
                gram[i][j] += row[i] * row[j];
            }
        }
    }
    for i in 0..p {
        for j in i + 1..p {
            gram[i][j] = gram[j][i];
        }
    }
    let beta = solve_spd(&gram, &rhs).ok_or(Error::Singular { window })?;
    let mut model = ArForecaster {
        source: source.to_owned(),
        intercept: beta[0],
        lags: beta[1..].to_vec(),
        standardization,
        in_sample_rmse: 0.0,
    };
    let residuals: Vec<f64> = (window..z.len())
        .map(|t| z[t] - model.predict(&z[t - window..t]))
        .collect();
    model.in_sample_rmse = (residuals.iter().map(|e| e * e).sum::<f64>() / residuals.len() as f64).sqrt();
    Ok(model)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub target: String,
    pub rmse: f64,
    pub mae: f64,
    pub n_predictions: usize,
}

/// RMSE and MAE of a non-empty error vector.
pub fn error_report(target: &str, errors: &[f64]) -> Result<ErrorReport> {
    if errors.is_empty() {
        return Err(Error::InsufficientData(format!("{target}: no predictions")));
    }
    let m = errors.len() as f64;
    let first = errors[0].abs();
    let (rmse, mae) = if errors.iter().all(|e| e.abs() == first) {
        (first, first)
    } else {
        let rmse = (errors.iter().map(|e| e * e).sum::<f64>() / m).sqrt();
        let mae = errors.iter().map(|e| e.abs()).sum::<f64>() / m;
        // rounding can invert the pair when the magnitudes nearly agree
        (rmse.max(mae), mae)
    };
    Ok(ErrorReport {
        target: target.to_owned(),
        rmse,
        mae,
        n_predictions: errors.len(),
    })
}

/// One-step-ahead errors of `model` over `series`, which is standardized by
/// its own mean and scale first.
pub fn evaluate<F: Forecaster + ?Sized>(model: &F, target: &str, series: &[f64]) -> Result<ErrorReport> {
    let w = model.window();
    if series.len() < w + 1 {
        return Err(Error::InsufficientData(format!(
            "{target}: evaluation series has {} values, window {w} needs at least {}",
            series.len(),
            w + 1
        )));
    }
    let standardization = Standardization::fit(series)
        .map_err(|_| Error::ZeroVariance(format!("{target}: evaluation series is constant")))?;
    let z = standardization.apply(series);
    let errors: Vec<f64> = (w..z.len())
        .map(|t| z[t] - model.predict(&z[t - w..t]))
        .collect();
    error_report(target, &errors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferConfig {
    pub window: usize,
    /// Fraction of the calendar used for training; the rest is the test span.
    pub split: f64,
}

impl Default for TransferConfig {
    fn default() -> Self {
        TransferConfig {
            window: DEFAULT_WINDOW,
            split: DEFAULT_SPLIT,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransferRow {
    pub report: ErrorReport,
    /// Shortest-path hops from the source in the graph; `None` if unreachable.
    pub hop_distance: Option<usize>,
}

fn dense_span(panel: &ReturnsPanel, column: usize, range: std::ops::Range<usize>) -> Result<Vec<f64>> {
    let col = panel.column(column);
    range
        .map(|t| {
            col[t].ok_or_else(|| Error::Gap {
                ticker: panel.tickers()[column].clone(),
                date: panel.calendar()[t],
            })
        })
        .collect()
}

fn locate(panel: &ReturnsPanel, ticker: &str) -> Result<usize> {
    panel.ticker_index(ticker).ok_or_else(|| Error::UnknownTicker {
        ticker: ticker.to_owned(),
        suggestions: nearest_symbols(panel.tickers().iter().map(String::as_str), ticker),
    })
}

/// Trains the AR baseline on the source's training span and evaluates it on
/// each target's test span. Rows are ordered by rmse ascending.
pub fn transfer_experiment(
    panel: &ReturnsPanel,
    graph: &CompanyGraph,
    source: &str,
    targets: &[String],
    config: &TransferConfig,
) -> Result<Vec<TransferRow>> {
    transfer_experiment_with(panel, graph, source, targets, config, fit_forecaster)
}

/// [`transfer_experiment`] with a caller-supplied model constructor.
pub fn transfer_experiment_with<M, F>(
    panel: &ReturnsPanel,
    graph: &CompanyGraph,
    source: &str,
    targets: &[String],
    config: &TransferConfig,
    fit: F,
) -> Result<Vec<TransferRow>>
where
    M: Forecaster,
    F: FnOnce(&str, &[f64], usize) -> Result<M>,
{
    if !(config.split > 0.0 && config.split < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "split must be in (0, 1), got {}",
            config.split
        )));
    }
    if targets.is_empty() {
        return Err(Error::InvalidArgument("no target tickers given".into()));
    }
    let source_col = locate(panel, source)?;
    let mut target_cols = Vec::with_capacity(targets.len());
    for t in targets {
        let j = locate(panel, t)?;
        if !target_cols.contains(&j) {
            target_cols.push(j);
        }
    }

    let rows = panel.calendar().len();
    let cut = (config.split * rows as f64).floor() as usize;
    let train = dense_span(panel, source_col, 0..cut)?;
    let test_spans = target_cols
        .iter()
        .map(|&j| dense_span(panel, j, cut..rows))
        .collect::<Result<Vec<_>>>()?;

    let model = fit(source, &train, config.window)?;
    let mut results = target_cols
        .par_iter()
        .zip(test_spans.par_iter())
        .map(|(&j, span)| {
            let ticker = &panel.tickers()[j];
            Ok(TransferRow {
                report: evaluate(&model, ticker, span)?,
                hop_distance: hop_distance(graph, source, ticker),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    results.sort_by(|a, b| {
        a.report
            .rmse
            .total_cmp(&b.report.rmse)
            .then_with(|| a.report.target.cmp(&b.report.target))
    });
    Ok(results)
}

/// Report CSV: `ticker,rmse,mae,n_predictions,hop_distance` (`inf` when
/// unreachable).
pub fn write_transfer_csv<W: Write>(rows: &[TransferRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["ticker", "rmse", "mae", "n_predictions", "hop_distance"])
        .map_err(|e| Error::csv(e, None))?;
    for row in rows {
        w.write_record([
            row.report.target.clone(),
            fmt_f64(row.report.rmse),
            fmt_f64(row.report.mae),
            row.report.n_predictions.to_string(),
            row.hop_distance
                .map(|d| d.to_string())
                .unwrap_or_else(|| "inf".into()),
        ])
        .map_err(|e| Error::csv(e, None))?;
    }
    w.flush().map_err(|e| Error::io("<transfer>", e))?;
    Ok(())
}
