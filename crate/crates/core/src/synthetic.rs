//! Seeded synthetic markets with planted correlation structure.

use std::collections::BTreeMap;

use chrono::{Datelike, Days, NaiveDate, Weekday};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Result;
use crate::ingest::{EodRow, PriceHistoryTable};

/// `n` consecutive weekdays starting at `start` (or the next weekday).
pub fn business_days(start: NaiveDate, n: usize) -> Vec<NaiveDate> {
    let mut out = Vec::with_capacity(n);
    let mut d = start;
    while out.len() < n {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            out.push(d);
        }
        d = d + Days::new(1);
    }
    out
}

fn start_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2020, 1, 1).expect("valid date")
}

/// Compounds simple returns onto a starting price.
pub fn prices_from_returns(start: f64, returns: &[f64]) -> Vec<f64> {
    let mut prices = Vec::with_capacity(returns.len() + 1);
    prices.push(start);
    let mut p = start;
    for r in returns {
        p *= 1.0 + r;
        prices.push(p);
    }
    prices
}

fn table_from_returns(series: &[(String, Vec<f64>)], dates: &[NaiveDate]) -> Result<PriceHistoryTable> {
    let rows = series.iter().flat_map(|(ticker, returns)| {
        prices_from_returns(100.0, returns)
            .into_iter()
            .zip(dates)
            .map(move |(close, &date)| {
                (
                    ticker.clone(),
                    EodRow {
                        date,
                        open: None,
                        high: None,
                        low: None,
                        close,
                        volume: None,
                    },
                )
            })
    });
    PriceHistoryTable::from_rows(rows)
}

/// Market/sector/idiosyncratic one-factor-per-sector model. With unit total
/// variance, within-sector rho is `market² + sector²` and cross-sector rho is
/// `market²`.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorSpec {
    pub sectors: usize,
    pub per_sector: usize,
    /// Number of price dates; the returns panel has one row fewer.
    pub days: usize,
    pub market_loading: f64,
    pub sector_loading: f64,
    pub noise_loading: f64,
    /// Daily return standard deviation.
    pub volatility: f64,
    pub seed: u64,
}

impl Default for SectorSpec {
    fn default() -> Self {
        // rho within = 0.1 + 0.6 = 0.7, across = 0.1
        SectorSpec {
            sectors: 3,
            per_sector: 10,
            days: 500,
            market_loading: 0.1f64.sqrt(),
            sector_loading: 0.6f64.sqrt(),
            noise_loading: 0.3f64.sqrt(),
            volatility: 0.015,
            seed: 20_220_713,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticMarket {
    pub table: PriceHistoryTable,
    /// ticker -> planted sector label
    pub sectors: BTreeMap<String, String>,
}

impl SyntheticMarket {
    /// `ticker,key,value` rows for the graph attribute side file.
    pub fn attributes_csv(&self) -> String {
        let mut s = String::from("ticker,key,value\n");
        for (ticker, sector) in &self.sectors {
            s.push_str(&format!("{ticker},sector,{sector}\n"));
        }
        s
    }
}

pub fn sector_ticker(sector: usize, member: usize) -> String {
    format!("S{}T{:02}", sector + 1, member + 1)
}

pub fn planted_sectors(spec: &SectorSpec) -> Result<SyntheticMarket> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let periods = spec.days.saturating_sub(1);
    let mut draw = |n: usize| -> Vec<f64> { (0..n).map(|_| StandardNormal.sample(&mut rng)).collect() };
    let market = draw(periods);
    let sector_factors: Vec<Vec<f64>> = (0..spec.sectors).map(|_| draw(periods)).collect();
    let mut series = Vec::new();
    let mut sectors = BTreeMap::new();
    for (s, factor) in sector_factors.iter().enumerate() {
        for m in 0..spec.per_sector {
            let noise = draw(periods);
            let returns = (0..periods)
                .map(|t| {
                    spec.volatility
                        * (spec.market_loading * market[t]
                            + spec.sector_loading * factor[t]
                            + spec.noise_loading * noise[t])
                })
                .collect();
            let ticker = sector_ticker(s, m);
            sectors.insert(ticker.clone(), format!("sector{}", s + 1));
            series.push((ticker, returns));
        }
    }
    let table = table_from_returns(&series, &business_days(start_date(), spec.days))?;
    Ok(SyntheticMarket { table, sectors })
}

/// Three tickers: `A` and `B` load on one autoregressive factor with pairwise
/// rho `partner_rho`; `C` is independent white noise of the same variance.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorSpec {
    pub days: usize,
    pub factor_persistence: f64,
    pub partner_rho: f64,
    pub volatility: f64,
    pub seed: u64,
}

impl Default for FactorSpec {
    fn default() -> Self {
        FactorSpec {
            days: 500,
            factor_persistence: 0.6,
            partner_rho: 0.9,
            volatility: 0.015,
            seed: 1,
        }
    }
}

pub fn planted_factor(spec: &FactorSpec) -> Result<PriceHistoryTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut normal = || -> f64 { StandardNormal.sample(&mut rng) };
    let periods = spec.days.saturating_sub(1);
    let phi = spec.factor_persistence;
    let factor_var = 1.0 / (1.0 - phi * phi);
    let noise_var = factor_var * (1.0 / spec.partner_rho - 1.0);
    let total_sd = (factor_var + noise_var).sqrt();

    let mut f = normal() * factor_var.sqrt();
    let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
    for _ in 0..periods {
        f = phi * f + normal();
        let ea = normal() * noise_var.sqrt();
        let eb = normal() * noise_var.sqrt();
        let ec = normal() * total_sd;
        let k = spec.volatility / total_sd;
        a.push(k * (f + ea));
        b.push(k * (f + eb));
        c.push(k * ec);
    }
    let series = vec![("A".to_owned(), a), ("B".to_owned(), b), ("C".to_owned(), c)];
    table_from_returns(&series, &business_days(start_date(), spec.days))
}
