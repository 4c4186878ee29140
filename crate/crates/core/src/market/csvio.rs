use std::io::{Read, Write};

use chrono::NaiveDate;

use super::{OhlcBar, OhlcSeries};
use crate::error::{Error, Result};

const COLUMNS: [&str; 5] = ["date", "open", "high", "low", "close"];

/// Read a `date,open,high,low,close` CSV. Extra columns (volume, ...) are
/// ignored; column order is taken from the header.
pub fn parse_csv<R: Read>(reader: R, symbol: &str) -> Result<OhlcSeries> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr.headers().map_err(|e| parse_err(1, e))?.clone();
    if headers.is_empty() || (headers.len() == 1 && headers[0].is_empty()) {
        return OhlcSeries::new(symbol, Vec::new());
    }
    let mut idx = [0usize; 5];
    for (slot, name) in idx.iter_mut().zip(COLUMNS) {
        *slot = headers
            .iter()
            .position(|h| h.eq_ignore_ascii_case(name))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: format!("missing column `{name}` in header"),
            })?;
    }

    let mut bars = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(line, e)
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let field = |k: usize| {
            rec.get(idx[k]).ok_or_else(|| Error::Parse {
                line,
                message: format!("missing `{}` field", COLUMNS[k]),
            })
        };
        let date = NaiveDate::parse_from_str(field(0)?, "%Y-%m-%d").map_err(|e| Error::Parse {
            line,
            message: format!("bad date `{}`: {e}", field(0).unwrap_or_default()),
        })?;
        let mut prices = [0.0; 4];
        for (k, p) in prices.iter_mut().enumerate() {
            let raw = field(k + 1)?;
            *p = raw.parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("bad {} price `{raw}`", COLUMNS[k + 1]),
            })?;
        }
        bars.push(OhlcBar::new(date, prices[0], prices[1], prices[2], prices[3]));
    }
    OhlcSeries::new(symbol, bars)
}

/// Parse from an in-memory string.
pub fn parse_csv_str(text: &str, symbol: &str) -> Result<OhlcSeries> {
    parse_csv(text.as_bytes(), symbol)
}

/// Write the canonical CSV form (LF endings, shortest round-trip floats).
pub fn write_csv<W: Write>(series: &OhlcSeries, mut out: W) -> Result<()> {
    writeln!(out, "{}", COLUMNS.join(","))?;
    for b in series.bars() {
        writeln!(
            out,
            "{},{},{},{},{}",
            b.date.format("%Y-%m-%d"),
            b.open,
            b.high,
            b.low,
            b.close
        )?;
    }
    Ok(())
}

pub fn to_csv_string(series: &OhlcSeries) -> String {
    let mut buf = Vec::new();
    write_csv(series, &mut buf).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("CSV output is ASCII")
}

fn parse_err(line: usize, e: csv::Error) -> Error {
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
