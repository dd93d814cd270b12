//! Pairwise-complete Pearson correlation and the ticker-by-ticker matrix.
//!
//! Each pair is computed independently with a fixed summation order, so the
//! matrix is bitwise identical no matter how the pairs are scheduled across
//! threads.

use std::collections::HashMap;
use std::io::{Read, Write};

use rayon::prelude::*;

use crate::csvio::{fmt_f64, fmt_opt};
use crate::error::{Error, Location, Result};
use crate::returns::ReturnsPanel;

/// Overlap threshold used when none is configured.
pub const DEFAULT_MIN_OVERLAP: usize = 100;

/// Slack allowed on |rho| <= 1 before a value is treated as a kernel fault.
const RANGE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pearson {
    pub rho: Option<f64>,
    pub overlap: usize,
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.carry += (self.sum - t) + v;
        } else {
            self.carry += (v - t) + self.sum;
        }
        self.sum = t;
    }

    fn total(self) -> f64 {
        self.sum + self.carry
    }
}

/// Pearson coefficient over the positions where both series are present.
///
/// Returns an absent coefficient when fewer than `min_overlap` positions
/// overlap or when either series is constant on the overlap.
pub fn pearson(x: &[Option<f64>], y: &[Option<f64>], min_overlap: usize) -> Result<Pearson> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "series lengths differ ({} vs {})",
            x.len(),
            y.len()
        )));
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    pearson_with_buffers(x, y, min_overlap, &mut xs, &mut ys)
}

fn pearson_with_buffers(
    x: &[Option<f64>],
    y: &[Option<f64>],
    min_overlap: usize,
    xs: &mut Vec<f64>,
    ys: &mut Vec<f64>,
) -> Result<Pearson> {
    xs.clear();
    ys.clear();
    for (a, b) in x.iter().zip(y) {
        if let (Some(a), Some(b)) = (a, b) {
            xs.push(*a);
            ys.push(*b);
        }
    }
    let overlap = xs.len();
    let absent = Pearson { rho: None, overlap };
    if overlap < min_overlap || is_constant(xs) || is_constant(ys) {
        return Ok(absent);
    }
    Ok(Pearson {
        rho: pearson_dense(xs, ys)?,
        overlap,
    })
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

fn mean(v: &[f64]) -> f64 {
    let mut s = CompensatedSum::default();
    for &a in v {
        s.add(a);
    }
    s.total() / v.len() as f64
}

/// Corrected two-pass kernel on dense, equal-length, non-constant inputs.
/// The 1/n factors of covariance and both deviations cancel and are never
/// applied.
fn pearson_dense(xs: &[f64], ys: &[f64]) -> Result<Option<f64>> {
    let n = xs.len() as f64;
    let mx = mean(xs);
    let my = mean(ys);
    let mut sx = CompensatedSum::default();
    let mut sy = CompensatedSum::default();
    let mut sxx = CompensatedSum::default();
    let mut syy = CompensatedSum::default();
    let mut sxy = CompensatedSum::default();
    for (&a, &b) in xs.iter().zip(ys) {
        let dx = a - mx;
        let dy = b - my;
        sx.add(dx);
        sy.add(dy);
        sxx.add(dx * dx);
        syy.add(dy * dy);
        sxy.add(dx * dy);
    }
    // The rounded means leave the deviations with a nonzero sum; when the
    // spread is only a few ulps of the level this residue matters.
    let (sx, sy) = (sx.total(), sy.total());
    let sxx = sxx.total() - sx * sx / n;
    let syy = syy.total() - sy * sy / n;
    let sxy = sxy.total() - sx * sy / n;
    if sxx <= 0.0 || syy <= 0.0 {
        // Deviations underflowed; numerically indistinguishable from flat.
        return Ok(None);
    }
    let mut denom = (sxx * syy).sqrt();
    if !denom.is_finite() || denom == 0.0 {
        denom = sxx.sqrt() * syy.sqrt();
    }
    let rho = sxy / denom;
    if !rho.is_finite() {
        return Ok(None);
    }
    if rho.abs() > 1.0 + RANGE_TOLERANCE {
        return Err(Error::Internal(format!(
            "correlation kernel produced out-of-range value {rho}"
        )));
    }
    Ok(Some(rho.clamp(-1.0, 1.0)))
}

/// Symmetric ticker-by-ticker correlation matrix with overlap counts.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    tickers: Vec<String>,
    rho: Vec<Option<f64>>,
    overlap: Vec<usize>,
    min_overlap: usize,
}

impl CorrelationMatrix {
    /// Builds a matrix from explicit values, as for hand-built inputs.
    /// Only the upper triangle (including the diagonal) of `rho` and
    /// `overlap` is read; the lower triangle is mirrored from it.
    pub fn from_parts(
        tickers: Vec<String>,
        rho: Vec<Vec<Option<f64>>>,
        overlap: Option<Vec<Vec<usize>>>,
        min_overlap: usize,
    ) -> Result<Self> {
        let n = tickers.len();
        if rho.len() != n || rho.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidArgument(format!(
                "correlation values must be {n}x{n}"
            )));
        }
        if let Some(o) = &overlap {
            if o.len() != n || o.iter().any(|r| r.len() != n) {
                return Err(Error::InvalidArgument(format!("overlap must be {n}x{n}")));
            }
        }
        let mut m = CorrelationMatrix {
            tickers,
            rho: vec![None; n * n],
            overlap: vec![0; n * n],
            min_overlap,
        };
        for i in 0..n {
            for j in i..n {
                let v = rho[i][j];
                if let Some(v) = v {
                    if !(-1.0..=1.0).contains(&v) {
                        return Err(Error::InvalidArgument(format!(
                            "correlation {v} outside [-1, 1]"
                        )));
                    }
                }
                let o = overlap.as_ref().map(|o| o[i][j]).unwrap_or(0);
                m.set(i, j, v, o);
            }
        }
        Ok(m)
    }

    fn set(&mut self, i: usize, j: usize, rho: Option<f64>, overlap: usize) {
        let n = self.tickers.len();
        self.rho[i * n + j] = rho;
        self.rho[j * n + i] = rho;
        self.overlap[i * n + j] = overlap;
        self.overlap[j * n + i] = overlap;
    }

    pub fn len(&self) -> usize {
        self.tickers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tickers.is_empty()
    }

    pub fn tickers(&self) -> &[String] {
        &self.tickers
    }

    pub fn min_overlap(&self) -> usize {
        self.min_overlap
    }

    pub fn rho(&self, i: usize, j: usize) -> Option<f64> {
        self.rho[i * self.tickers.len() + j]
    }

    pub fn overlap(&self, i: usize, j: usize) -> usize {
        self.overlap[i * self.tickers.len() + j]
    }

    pub fn index_of(&self, ticker: &str) -> Option<usize> {
        self.tickers.iter().position(|t| t == ticker)
    }

    pub fn rho_between(&self, a: &str, b: &str) -> Option<f64> {
        self.rho(self.index_of(a)?, self.index_of(b)?)
    }

    /// Number of defined off-diagonal pairs.
    pub fn defined_pairs(&self) -> usize {
        let n = self.len();
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .filter(|&(i, j)| self.rho(i, j).is_some())
            .count()
    }

    /// Square matrix CSV: header `ticker,T1,...`, empty cell for absent values.
    pub fn write_matrix_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["ticker".to_owned()];
        header.extend(self.tickers.iter().cloned());
        w.write_record(&header).map_err(|e| Error::csv(e, None))?;
        let n = self.len();
        for i in 0..n {
            let mut record = vec![self.tickers[i].clone()];
            record.extend((0..n).map(|j| fmt_opt(self.rho(i, j))));
            w.write_record(&record).map_err(|e| Error::csv(e, None))?;
        }
        w.flush().map_err(|e| Error::io("<matrix>", e))?;
        Ok(())
    }

    /// Long-form CSV `ticker_a,ticker_b,rho,overlap`, one row per unordered
    /// pair in upper-triangle order. Self-pairs are included so the file
    /// carries each ticker's observation count.
    pub fn write_pairs_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["ticker_a", "ticker_b", "rho", "overlap"])
            .map_err(|e| Error::csv(e, None))?;
        let n = self.len();
        for i in 0..n {
            for j in i..n {
                w.write_record([
                    self.tickers[i].as_str(),
                    self.tickers[j].as_str(),
                    &fmt_opt(self.rho(i, j)),
                    &self.overlap(i, j).to_string(),
                ])
                .map_err(|e| Error::csv(e, None))?;
            }
        }
        w.flush().map_err(|e| Error::io("<pairs>", e))?;
        Ok(())
    }

    /// Reassembles a matrix from the files written by [`write_matrix_csv`]
    /// and [`write_pairs_csv`].
    ///
    /// [`write_matrix_csv`]: CorrelationMatrix::write_matrix_csv
    /// [`write_pairs_csv`]: CorrelationMatrix::write_pairs_csv
    pub fn read_csv<R1: Read, R2: Read>(
        matrix: R1,
        pairs: R2,
        min_overlap: usize,
        source: Option<&str>,
    ) -> Result<Self> {
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(matrix);
        let header = r.headers().map_err(|e| Error::csv(e, source))?.clone();
        let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
        let n = tickers.len();
        let mut rho = Vec::with_capacity(n);
        for (i, record) in r.records().enumerate() {
            let record = record.map_err(|e| Error::csv(e, source))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            if i >= n || record[0] != tickers[i] {
                return Err(Error::MalformedCsv {
                    location: Location::new(source, line),
                    message: "matrix rows must follow the header ticker order".into(),
                });
            }
            let row = record
                .iter()
                .skip(1)
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|_| Error::MalformedCsv {
                            location: Location::new(source, line),
                            message: format!("bad coefficient '{c}'"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            rho.push(row);
        }
        if rho.len() != n {
            return Err(Error::MalformedCsv {
                location: Location::new(source, 0),
                message: format!("expected {n} matrix rows, found {}", rho.len()),
            });
        }

        let index: HashMap<&str, usize> = tickers
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), i))
            .collect();
        let mut overlap = vec![vec![0usize; n]; n];
        let mut r = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(pairs);
        for record in r.records() {
            let record = record.map_err(|e| Error::csv(e, None))?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let bad = |message: String| Error::MalformedCsv {
                location: Location::new(None, line),
                message,
            };
            let (Some(&i), Some(&j)) = (index.get(&record[0]), index.get(&record[1])) else {
                return Err(bad(format!(
                    "pair {}/{} not in matrix",
                    &record[0], &record[1]
                )));
            };
            let o: usize = record[3]
                .parse()
                .map_err(|_| bad(format!("bad overlap '{}'", &record[3])))?;
            overlap[i][j] = o;
            overlap[j][i] = o;
        }
        CorrelationMatrix::from_parts(tickers, rho, Some(overlap), min_overlap)
    }
}

/// Correlates every pair of return columns.
///
/// The diagonal is 1 for any ticker with a non-constant series of at least two
/// observations; `min_overlap` applies to distinct pairs only.
pub fn correlation_matrix(returns: &ReturnsPanel, min_overlap: usize) -> Result<CorrelationMatrix> {
    let n = returns.tickers().len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "a correlation matrix needs at least 2 tickers, got {n}"
        )));
    }
    let columns = returns.columns();
    let rows: Vec<Vec<Pearson>> = (0..n)
        .into_par_iter()
        .map_init(
            || (Vec::new(), Vec::new()),
            |(xs, ys), i| {
                (i..n)
                    .map(|j| {
                        let floor = if i == j { 2 } else { min_overlap };
                        pearson_with_buffers(&columns[i], &columns[j], floor, xs, ys)
                    })
                    .collect::<Result<Vec<_>>>()
            },
        )
        .collect::<Result<_>>()?;

    let mut m = CorrelationMatrix {
        tickers: returns.tickers().to_vec(),
        rho: vec![None; n * n],
        overlap: vec![0; n * n],
        min_overlap,
    };
    for (i, row) in rows.into_iter().enumerate() {
        for (offset, p) in row.into_iter().enumerate() {
            let j = i + offset;
            // Self-correlation is exactly 1 whenever it is defined.
            let rho = if i == j { p.rho.map(|_| 1.0) } else { p.rho };
            m.set(i, j, rho, p.overlap);
        }
    }
    Ok(m)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedPair {
    pub a: String,
    pub b: String,
    pub rho: f64,
}

/// The `k` most positively correlated distinct pairs, descending by rho, ties
/// broken by the lexicographically ordered ticker pair.
pub fn top_pairs(matrix: &CorrelationMatrix, k: usize) -> Vec<RankedPair> {
    let n = matrix.len();
    let mut pairs: Vec<RankedPair> = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if let Some(rho) = matrix.rho(i, j) {
                let (a, b) = ordered(&matrix.tickers[i], &matrix.tickers[j]);
                pairs.push(RankedPair {
                    a: a.to_owned(),
                    b: b.to_owned(),
                    rho,
                });
            }
        }
    }
    pairs.sort_by(|x, y| {
        y.rho
            .total_cmp(&x.rho)
            .then_with(|| (&x.a, &x.b).cmp(&(&y.a, &y.b)))
    });
    pairs.truncate(k);
    pairs
}

fn ordered<'a>(a: &'a str, b: &'a str) -> (&'a str, &'a str) {
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

/// Text for a rho in long-form outputs.
pub fn format_rho(rho: f64) -> String {
    fmt_f64(rho)
}
