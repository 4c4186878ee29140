//! OHLC data model, constraint validation, CSV I/O and synthetic data.

mod bar;
mod csvio;
mod synth;

pub use bar::{
    check_bars, check_constraints, label_bull_bear, split_series, BarViolation, Candle, Constraint, ConstraintCounts,
    OhlcBar, OhlcSeries, ValidationReport,
};
pub use csvio::{parse_csv, parse_csv_str, to_csv_string, write_csv};
pub use synth::{generate_synthetic, generate_universe, RegimeJump, SyntheticConfig};
