//! Shared CSV layout for date-by-ticker panels: header `date,T1,T2,...`,
//! one row per calendar date, empty cells for missing values.

use std::io::{Read, Write};

use chrono::NaiveDate;

use crate::error::{Error, Location, Result};

pub(crate) const ISO_DATE: &str = "%Y-%m-%d";

/// Shortest decimal text that parses back to the same `f64`.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub(crate) fn write_panel<W: Write>(
    out: W,
    calendar: &[NaiveDate],
    tickers: &[String],
    columns: &[Vec<Option<f64>>],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = Vec::with_capacity(tickers.len() + 1);
    header.push("date".to_owned());
    header.extend(tickers.iter().cloned());
    w.write_record(&header).map_err(|e| Error::csv(e, None))?;
    let mut record = Vec::with_capacity(tickers.len() + 1);
    for (t, date) in calendar.iter().enumerate() {
        record.clear();
        record.push(date.format(ISO_DATE).to_string());
        record.extend(columns.iter().map(|col| fmt_opt(col[t])));
        w.write_record(&record).map_err(|e| Error::csv(e, None))?;
    }
    w.flush().map_err(|e| Error::io("<panel>", e))?;
    Ok(())
}

pub(crate) type RawPanel = (Vec<NaiveDate>, Vec<String>, Vec<Vec<Option<f64>>>);

pub(crate) fn read_panel<R: Read>(input: R, file: Option<&str>) -> Result<RawPanel> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(input);
    let header = r.headers().map_err(|e| Error::csv(e, file))?.clone();
    if header.get(0).map(|h| h.eq_ignore_ascii_case("date")) != Some(true) {
        return Err(Error::MissingColumn {
            column: "date".into(),
            file: file.map(str::to_owned),
        });
    }
    let tickers: Vec<String> = header.iter().skip(1).map(str::to_owned).collect();
    let mut calendar = Vec::new();
    let mut columns = vec![Vec::new(); tickers.len()];
    for record in r.records() {
        let record = record.map_err(|e| Error::csv(e, file))?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let location = || Location::new(file, line);
        let date = NaiveDate::parse_from_str(&record[0], ISO_DATE).map_err(|e| {
            Error::MalformedCsv {
                location: location(),
                message: format!("bad date '{}': {e}", &record[0]),
            }
        })?;
        calendar.push(date);
        for (j, cell) in record.iter().skip(1).enumerate() {
            let value = if cell.is_empty() {
                None
            } else {
                Some(cell.parse::<f64>().map_err(|_| Error::InvalidRow {
                    location: location(),
                    ticker: tickers[j].clone(),
                    message: format!("bad number '{cell}'"),
                })?)
            };
            columns[j].push(value);
        }
    }
    Ok((calendar, tickers, columns))
}
