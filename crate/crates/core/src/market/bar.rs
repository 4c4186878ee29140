use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One trading day's open/high/low/close prices.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OhlcBar {
    pub date: NaiveDate,
    pub open: f64,
    pub high: f64,
    pub low: f64,
    pub close: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Candle {
    Bullish,
    Bearish,
    Doji,
}

/// The three constraint families every bar must satisfy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Constraint {
    /// All four prices strictly positive.
    Positivity,
    /// High not below low.
    HighAboveLow,
    /// Open and close inside `[low, high]`.
    Containment,
}

impl std::fmt::Display for Constraint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Constraint::Positivity => "positivity",
            Constraint::HighAboveLow => "high_above_low",
            Constraint::Containment => "containment",
        })
    }
}

impl OhlcBar {
    pub fn new(date: NaiveDate, open: f64, high: f64, low: f64, close: f64) -> Self {
        Self {
            date,
            open,
            high,
            low,
            close,
        }
    }

    pub fn prices(&self) -> [f64; 4] {
        [self.open, self.high, self.low, self.close]
    }

    /// Constraint families this bar breaks. A bar with `high == low` is
    /// *not* reported here; see [`OhlcBar::is_degenerate`].
    pub fn violations(&self) -> Vec<Constraint> {
        let mut out = Vec::new();
        // written as negations so NaN fails every check
        if !self.prices().iter().all(|&p| p > 0.0) {
            out.push(Constraint::Positivity);
        }
        if !(self.high >= self.low) {
            out.push(Constraint::HighAboveLow);
        }
        let inside = |p: f64| p >= self.low && p <= self.high;
        if !(inside(self.open) && inside(self.close)) {
            out.push(Constraint::Containment);
        }
        out
    }

    /// `high == low`: accepted as input but flagged, never produced.
    pub fn is_degenerate(&self) -> bool {
        self.high == self.low
    }

    /// Strict check used for generated and predicted bars: all three families
    /// hold and `high > low`.
    pub fn satisfies_constraints(&self) -> bool {
        self.violations().is_empty() && self.high > self.low
    }

    pub fn label(&self) -> Candle {
        label_bull_bear(self)
    }
}

pub fn label_bull_bear(bar: &OhlcBar) -> Candle {
    if bar.close > bar.open {
        Candle::Bullish
    } else if bar.close < bar.open {
        Candle::Bearish
    } else {
        Candle::Doji
    }
}

/// A symbol's bars in strictly increasing date order. Dates need not be
/// consecutive; everything downstream works on row order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OhlcSeries {
    symbol: String,
    bars: Vec<OhlcBar>,
}

impl OhlcSeries {
    pub fn new(symbol: impl Into<String>, bars: Vec<OhlcBar>) -> Result<Self> {
        for pair in bars.windows(2) {
            if pair[1].date <= pair[0].date {
                let kind = if pair[1].date == pair[0].date {
                    "duplicate"
                } else {
                    "out-of-order"
                };
                return Err(Error::Data(format!("{kind} date {}", pair[1].date)));
            }
        }
        Ok(Self {
            symbol: symbol.into(),
            bars,
        })
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn bars(&self) -> &[OhlcBar] {
        &self.bars
    }

    pub fn len(&self) -> usize {
        self.bars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bars.is_empty()
    }

    pub fn dates(&self) -> impl Iterator<Item = NaiveDate> + '_ {
        self.bars.iter().map(|b| b.date)
    }

    pub(crate) fn slice(&self, range: std::ops::Range<usize>) -> Self {
        Self {
            symbol: self.symbol.clone(),
            bars: self.bars[range].to_vec(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BarViolation {
    pub index: usize,
    pub date: NaiveDate,
    pub constraints: Vec<Constraint>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConstraintCounts {
    pub positivity: usize,
    pub high_above_low: usize,
    pub containment: usize,
}

/// Every constraint violation in a series, plus the degenerate bars.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<BarViolation>,
    pub counts: ConstraintCounts,
    /// Dates of `high == low` bars; flagged, not counted as violations.
    pub degenerate: Vec<NaiveDate>,
}

impl ValidationReport {
    /// No violations (degenerate bars do not count).
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    /// Number of failing days; a day breaking several families counts once.
    pub fn failing_days(&self) -> usize {
        self.violations.len()
    }
}

pub fn check_bars(bars: &[OhlcBar]) -> ValidationReport {
    let mut report = ValidationReport::default();
    for (index, bar) in bars.iter().enumerate() {
        let constraints = bar.violations();
        for c in &constraints {
            match c {
                Constraint::Positivity => report.counts.positivity += 1,
                Constraint::HighAboveLow => report.counts.high_above_low += 1,
                Constraint::Containment => report.counts.containment += 1,
            }
        }
        if !constraints.is_empty() {
            report.violations.push(BarViolation {
                index,
                date: bar.date,
                constraints,
            });
        }
        if bar.is_degenerate() {
            report.degenerate.push(bar.date);
        }
    }
    report
}

pub fn check_constraints(series: &OhlcSeries) -> ValidationReport {
    check_bars(series.bars())
}

/// Chronological split into `(train, test)` with the last `test_len` bars
/// in the test half.
pub fn split_series(series: &OhlcSeries, test_len: usize) -> Result<(OhlcSeries, OhlcSeries)> {
    let n = series.len();
    if test_len == 0 || test_len >= n {
        return Err(Error::Argument(format!(
            "test length {test_len} must lie in 1..{n} for a series of {n} bars"
        )));
    }
    Ok((series.slice(0..n - test_len), series.slice(n - test_len..n)))
}
